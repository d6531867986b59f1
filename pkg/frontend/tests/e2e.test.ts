// End-to-end flow against the real review service: spawn it, rate two samples
// through the controller (the UI minus pixels), and check both the service
// aggregates and the strings the stats page would display.

import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ReviewController, View } from "../src/controller.js";
import { formatStat } from "../src/format.js";
import type { Sample, StatsResponse } from "../src/types.js";
import type { Selections } from "../src/state.js";

const PORT = 23000 + Math.floor(Math.random() * 2000);
const BASE = `http://127.0.0.1:${PORT}`;

const BUILD_CORPUS = `
import json, sys
from pathlib import Path
from rscurate.testing import make_png

data = Path(sys.argv[1])
(data / "images").mkdir(parents=True, exist_ok=True)
lines = []
for i in range(2):
    rid = f"sample-{i}"
    (data / "images" / f"{rid}.png").write_bytes(make_png(seed=i))
    lines.append(json.dumps({
        "record_id": rid, "subset": "fmow",
        "caption": f"generated caption {i}", "image": f"images/{rid}.png",
    }))
(data / "corpus.jsonl").write_text("\\n".join(lines) + "\\n")
`;

class CapturingView implements View {
  samples: Sample[] = [];
  exhausted = 0;
  stats: StatsResponse | null = null;

  renderSample(sample: Sample) {
    this.samples.push(sample);
  }
  renderExhausted() {
    this.exhausted += 1;
  }
  renderSelections(_selections: Selections, _enabled: boolean) {}
  renderRetryBanner(_message: string | null) {}
  renderSubmitError(message: string) {
    throw new Error(`unexpected submit error: ${message}`);
  }
  renderStats(stats: StatsResponse) {
    this.stats = stats;
  }
  renderStatsError(message: string) {
    throw new Error(`unexpected stats error: ${message}`);
  }
}

let service: ChildProcess;

async function waitForService(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const resp = await fetch(`${BASE}/api/v1/stats`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("review service did not come up");
}

beforeAll(async () => {
  const data = mkdtempSync(join(tmpdir(), "review-e2e-"));
  const built = spawnSync("python3", ["-c", BUILD_CORPUS, data], { encoding: "utf-8" });
  if (built.status !== 0) throw new Error(`corpus build failed: ${built.stderr}`);
  service = spawn(
    "python3",
    ["-m", "rscurate.cli", "serve-review", "--data", data, "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForService();
}, 30_000);

afterAll(() => {
  service?.kill();
});

describe("review flow end to end", () => {
  it("two rated samples produce count 2 and means 4.0 / 3.5 / 4.0", async () => {
    const view = new CapturingView();
    const controller = new ReviewController(new ReviewApi(BASE), view, "e2e-annotator");

    await controller.loadNext();
    expect(view.samples).toHaveLength(1);
    expect(view.samples[0]!.caption).toMatch(/^generated caption /);

    controller.select("relevance_detail", 5);
    controller.select("hallucination", 4);
    controller.select("fluency", 5);
    expect(await controller.submit()).toBe(true); // auto-advanced
    expect(view.samples).toHaveLength(2);
    expect(view.samples[1]!.record_id).not.toBe(view.samples[0]!.record_id);

    controller.select("relevance_detail", 3);
    controller.select("hallucination", 3);
    controller.select("fluency", 3);
    expect(await controller.submit()).toBe(true);
    expect(view.exhausted).toBe(1); // corpus of two is now done

    const stats = await controller.refreshStats();
    expect(stats).not.toBeNull();
    expect(stats!.count).toBe(2);
    expect(stats!.overall.relevance_detail.mean).toBeCloseTo(4.0, 10);
    expect(stats!.overall.hallucination.mean).toBeCloseTo(3.5, 10);
    expect(stats!.overall.fluency.mean).toBeCloseTo(4.0, 10);

    // What the stats page renders for these aggregates:
    expect(formatStat(stats!.overall.relevance_detail)).toBe("4.00 ± 1.41");
    expect(formatStat(stats!.overall.hallucination)).toBe("3.50 ± 0.71");
    expect(formatStat(stats!.overall.fluency)).toBe("4.00 ± 1.41");
    expect(stats!.subsets.fmow).toBeDefined();
  }, 30_000);

  it("image bytes are served for rendered samples", async () => {
    const resp = await fetch(`${BASE}/api/v1/samples/sample-0/image`);
    expect(resp.status).toBe(200);
    expect(resp.headers.get("content-type")).toBe("image/png");
    const bytes = new Uint8Array(await resp.arrayBuffer());
    expect(Array.from(bytes.slice(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });
});
