// Application flow, independent of the DOM. The browser layer implements
// View; tests drive the controller with a fake view and either a mocked or a
// real service behind ReviewApi.

import { ApiError, ReviewApi } from "./api.js";
import {
  RatingFormState,
  Selections,
  canSubmit,
  exhausted,
  initialState,
  resumeRating,
  withError,
  withSample,
  withSelection,
} from "./state.js";
import type { AxisKey, Level, Sample, StatsResponse } from "./types.js";
import { AXIS_KEYS } from "./types.js";

export interface View {
  renderSample(sample: Sample): void;
  renderExhausted(): void;
  renderSelections(selections: Selections, submitEnabled: boolean): void;
  renderRetryBanner(message: string | null): void;
  renderSubmitError(message: string): void;
  renderStats(stats: StatsResponse): void;
  renderStatsError(message: string): void;
}

export class ReviewController {
  state: RatingFormState = initialState();
  focusedAxis: AxisKey = AXIS_KEYS[0]!;

  constructor(
    private api: ReviewApi,
    private view: View,
    private annotator: string,
    private subset?: string,
  ) {}

  private sync(): void {
    this.view.renderSelections(this.state.selections, canSubmit(this.state));
  }

  async loadNext(): Promise<void> {
    try {
      const next = await this.api.next(this.annotator, this.subset);
      if (next.exhausted) {
        this.state = exhausted();
        this.view.renderExhausted();
        return;
      }
      const sample: Sample = {
        record_id: next.record_id!,
        subset: next.subset ?? "",
        caption: next.caption ?? "",
        image_url: next.image_url ?? "",
      };
      this.state = withSample(this.state, sample);
      this.view.renderRetryBanner(null);
      this.view.renderSample(sample);
      this.sync();
    } catch (err) {
      // Network failure: keep state, offer retry.
      this.state = withError(this.state, String(err));
      this.view.renderRetryBanner("Could not reach the review service; retry when it is back.");
    }
  }

  select(axis: AxisKey, level: Level): void {
    this.state = withSelection(this.state, axis, level);
    this.focusedAxis = axis;
    this.sync();
  }

  async submit(): Promise<boolean> {
    if (!canSubmit(this.state) || !this.state.sample) return false;
    const selections = this.state.selections;
    const payload = {
      annotator_id: this.annotator,
      record_id: this.state.sample.record_id,
      relevance_detail: selections.relevance_detail!,
      hallucination: selections.hallucination!,
      fluency: selections.fluency!,
    };
    this.state = { ...this.state, status: "submitting" };
    try {
      await this.api.submitRating(payload);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        this.state = resumeRating(this.state);
        this.view.renderSubmitError(`Rejected by the service: ${JSON.stringify(err.detail)}`);
        return false;
      }
      this.state = withError(this.state, String(err));
      this.view.renderRetryBanner("Submission failed; your selections are preserved.");
      return false;
    }
    await this.loadNext(); // auto-advance on 201
    return true;
  }

  retry(): Promise<void> | void {
    if (this.state.status !== "error") return;
    if (this.state.sample) {
      // A sample is on screen; the failure was the submit.
      this.state = resumeRating(this.state);
      this.view.renderRetryBanner(null);
      this.sync();
      return;
    }
    this.state = resumeRating(this.state);
    return this.loadNext();
  }

  async refreshStats(): Promise<StatsResponse | null> {
    try {
      const stats = await this.api.stats();
      this.view.renderStats(stats);
      return stats;
    } catch {
      this.view.renderStatsError("Stats may be stale; the service did not respond.");
      return null;
    }
  }
}
