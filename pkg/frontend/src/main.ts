// Browser wiring: renders the rating form and the stats table, and forwards
// DOM events to the controller. This is the only file that touches the DOM.

import { ReviewApi } from "./api.js";
import { ReviewController, View } from "./controller.js";
import { formatCount, formatStat } from "./format.js";
import { interpretKey } from "./keyboard.js";
import { AXES } from "./levels.js";
import type { Selections } from "./state.js";
import type { AxisKey, Sample, StatsResponse } from "./types.js";
import { AXIS_KEYS } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element: ${id}`);
  return node as T;
}

function annotatorId(): string {
  const stored = localStorage.getItem("annotator_id");
  if (stored) return stored;
  const entered = (prompt("Annotator id:") || "anonymous").trim() || "anonymous";
  localStorage.setItem("annotator_id", entered);
  return entered;
}

class DomView implements View {
  constructor(private onSelect: (axis: AxisKey, level: number) => void) {}

  renderSample(sample: Sample): void {
    el("rating-page").hidden = false;
    el("done-page").hidden = true;
    el<HTMLImageElement>("sample-image").src = sample.image_url;
    el("sample-caption").textContent = sample.caption;
    el("sample-meta").textContent = `${sample.record_id} (${sample.subset})`;
  }

  renderExhausted(): void {
    el("rating-page").hidden = true;
    el("done-page").hidden = false;
  }

  renderSelections(selections: Selections, submitEnabled: boolean): void {
    for (const axis of AXIS_KEYS) {
      const selected = selections[axis];
      document.querySelectorAll<HTMLButtonElement>(`button[data-axis="${axis}"]`).forEach((button) => {
        button.classList.toggle("selected", Number(button.dataset.level) === selected);
      });
    }
    el<HTMLButtonElement>("submit-button").disabled = !submitEnabled;
  }

  renderRetryBanner(message: string | null): void {
    const banner = el("retry-banner");
    banner.hidden = message === null;
    el("retry-message").textContent = message ?? "";
  }

  renderSubmitError(message: string): void {
    const banner = el("retry-banner");
    banner.hidden = false;
    el("retry-message").textContent = message;
  }

  renderStats(stats: StatsResponse): void {
    el("stats-count").textContent = `${formatCount(stats.count)} ratings`;
    const body = el("stats-body");
    body.innerHTML = "";
    const addRow = (label: string, cells: string[]) => {
      const row = document.createElement("tr");
      const th = document.createElement("th");
      th.textContent = label;
      row.appendChild(th);
      for (const cell of cells) {
        const td = document.createElement("td");
        td.textContent = cell;
        row.appendChild(td);
      }
      body.appendChild(row);
    };
    addRow("overall", AXIS_KEYS.map((axis) => formatStat(stats.overall[axis])));
    for (const [subset, axes] of Object.entries(stats.subsets)) {
      addRow(subset, AXIS_KEYS.map((axis) => formatStat(axes[axis])));
    }
    el("stats-error").hidden = true;
  }

  renderStatsError(message: string): void {
    const node = el("stats-error");
    node.hidden = false;
    node.textContent = message;
  }
}

function buildAxisBlocks(onSelect: (axis: AxisKey, level: number) => void): void {
  const host = el("axes");
  for (const axis of AXES) {
    const block = document.createElement("section");
    block.className = "axis";
    block.dataset.axis = axis.key;
    const heading = document.createElement("h3");
    heading.textContent = axis.title;
    const summary = document.createElement("p");
    summary.className = "axis-summary";
    summary.textContent = axis.summary;
    block.append(heading, summary);
    const buttons = document.createElement("div");
    buttons.className = "levels";
    for (const level of axis.levels) {
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.axis = axis.key;
      button.dataset.level = String(level.value);
      button.title = level.text;
      button.textContent = `${level.value} – ${level.name}`;
      button.addEventListener("click", () => onSelect(axis.key, level.value));
      buttons.appendChild(button);
    }
    block.appendChild(buttons);
    host.appendChild(block);
  }
}

function markFocusedAxis(axis: AxisKey): void {
  document.querySelectorAll<HTMLElement>(".axis").forEach((block) => {
    block.classList.toggle("focused", block.dataset.axis === axis);
  });
}

function main(): void {
  const api = new ReviewApi("");
  let controller: ReviewController;
  const view = new DomView((axis, level) => controller.select(axis, level as 1 | 2 | 3 | 4 | 5));
  controller = new ReviewController(api, view, annotatorId());

  buildAxisBlocks((axis, level) => {
    controller.select(axis, level as 1 | 2 | 3 | 4 | 5);
    markFocusedAxis(axis);
  });
  markFocusedAxis(controller.focusedAxis);

  el("submit-button").addEventListener("click", () => void controller.submit());
  el("retry-button").addEventListener("click", () => void controller.retry());
  el("stats-refresh").addEventListener("click", () => void controller.refreshStats());
  el("show-stats").addEventListener("click", () => {
    el("stats-page").hidden = !el("stats-page").hidden;
    if (!el("stats-page").hidden) void controller.refreshStats();
  });

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const action = interpretKey(event.key, controller.focusedAxis, event.shiftKey);
    if (action.type === "none") return;
    event.preventDefault();
    if (action.type === "select") {
      controller.select(action.axis, action.level);
      markFocusedAxis(action.axis);
    } else if (action.type === "focus") {
      controller.focusedAxis = action.axis;
      markFocusedAxis(action.axis);
    } else if (action.type === "submit") {
      void controller.submit();
    }
  });

  void controller.loadNext();
}

main();
