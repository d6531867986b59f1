import { describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ReviewController, View } from "../src/controller.js";
import type { Sample, StatsResponse } from "../src/types.js";
import type { Selections } from "../src/state.js";

class FakeView implements View {
  samples: Sample[] = [];
  exhausted = 0;
  banner: string | null = null;
  submitEnabled = false;
  selections: Selections = {};
  stats: StatsResponse | null = null;
  submitErrors: string[] = [];
  statsErrors: string[] = [];

  renderSample(sample: Sample) {
    this.samples.push(sample);
  }
  renderExhausted() {
    this.exhausted += 1;
  }
  renderSelections(selections: Selections, submitEnabled: boolean) {
    this.selections = selections;
    this.submitEnabled = submitEnabled;
  }
  renderRetryBanner(message: string | null) {
    this.banner = message;
  }
  renderSubmitError(message: string) {
    this.submitErrors.push(message);
  }
  renderStats(stats: StatsResponse) {
    this.stats = stats;
  }
  renderStatsError(message: string) {
    this.statsErrors.push(message);
  }
}

type Route = (init?: RequestInit) => { status: number; body: unknown };

function fakeFetch(routes: Record<string, Route>) {
  const calls: { url: string; body: unknown }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.split("?")[0]!;
    const route = routes[path];
    if (!route) throw new TypeError(`network unreachable: ${url}`);
    const { status, body } = route(init);
    calls.push({ url, body: init?.body ? JSON.parse(String(init.body)) : undefined });
    return new Response(JSON.stringify(body), { status, headers: { "Content-Type": "application/json" } });
  };
  return { fetchFn, calls };
}

const sampleBody = {
  record_id: "r1",
  subset: "fmow",
  caption: "caption text shown verbatim",
  image_url: "/api/v1/samples/r1/image",
};

describe("ReviewController", () => {
  it("loadNext renders the sample with axes reset", async () => {
    const { fetchFn } = fakeFetch({ "/api/v1/next": () => ({ status: 200, body: sampleBody }) });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    expect(view.samples[0]?.caption).toBe("caption text shown verbatim");
    expect(view.selections).toEqual({});
    expect(view.submitEnabled).toBe(false);
  });

  it("exhausted response shows the completion screen", async () => {
    const { fetchFn } = fakeFetch({ "/api/v1/next": () => ({ status: 200, body: { exhausted: true } }) });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    expect(view.exhausted).toBe(1);
  });

  it("network failure shows the retry banner and preserves selections", async () => {
    let down = false;
    const { fetchFn } = fakeFetch({
      "/api/v1/next": () => {
        if (down) throw new TypeError("offline");
        return { status: 200, body: sampleBody };
      },
    });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    controller.select("relevance_detail", 5);
    down = true;
    // a submit would fail on POST; simulate a reload failure path instead
    await controller.loadNext();
    expect(view.banner).toContain("retry");
    expect(controller.state.selections).toEqual({ relevance_detail: 5 });
    down = false;
    await controller.retry();
    expect(controller.state.status).toBe("rating");
  });

  it("submit posts the exact payload and auto-advances", async () => {
    const bodies = [sampleBody, { ...sampleBody, record_id: "r2" }];
    let served = 0;
    const { fetchFn, calls } = fakeFetch({
      "/api/v1/next": () => ({ status: 200, body: bodies[served++] }),
      "/api/v1/ratings": () => ({ status: 201, body: { accepted: true } }),
    });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    controller.select("relevance_detail", 5);
    controller.select("hallucination", 4);
    controller.select("fluency", 5);
    expect(view.submitEnabled).toBe(true);
    const ok = await controller.submit();
    expect(ok).toBe(true);
    const post = calls.find((c) => c.url.endsWith("/api/v1/ratings"));
    expect(post?.body).toEqual({
      annotator_id: "ann",
      record_id: "r1",
      relevance_detail: 5,
      hallucination: 4,
      fluency: 5,
    });
    expect(view.samples[1]?.record_id).toBe("r2");
  });

  it("submit is refused until the form is complete", async () => {
    const { fetchFn, calls } = fakeFetch({
      "/api/v1/next": () => ({ status: 200, body: sampleBody }),
      "/api/v1/ratings": () => ({ status: 201, body: {} }),
    });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    controller.select("relevance_detail", 5);
    expect(await controller.submit()).toBe(false);
    expect(calls.some((c) => c.url.endsWith("/api/v1/ratings"))).toBe(false);
  });

  it("a 422 shows field errors and keeps the form editable", async () => {
    const { fetchFn } = fakeFetch({
      "/api/v1/next": () => ({ status: 200, body: sampleBody }),
      "/api/v1/ratings": () => ({ status: 422, body: { detail: [{ loc: ["fluency"] }] } }),
    });
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.loadNext();
    controller.select("relevance_detail", 5);
    controller.select("hallucination", 4);
    controller.select("fluency", 5);
    expect(await controller.submit()).toBe(false);
    expect(view.submitErrors[0]).toContain("fluency");
    expect(controller.state.status).toBe("rating");
  });

  it("stats errors surface as a stale-data message", async () => {
    const { fetchFn } = fakeFetch({});
    const view = new FakeView();
    const controller = new ReviewController(new ReviewApi("", fetchFn), view, "ann");
    await controller.refreshStats();
    expect(view.statsErrors.length).toBe(1);
  });
});
