// Rating form state: one sample, three axis selections, and a status. Submit
// is possible only when all three axes are selected.

import type { AxisKey, Level, Sample } from "./types.js";
import { AXIS_KEYS } from "./types.js";

export type FormStatus = "loading" | "rating" | "submitting" | "exhausted" | "error";

export type Selections = Partial<Record<AxisKey, Level>>;

export interface RatingFormState {
  sample: Sample | null;
  selections: Selections;
  status: FormStatus;
  error: string | null;
}

export function initialState(): RatingFormState {
  return { sample: null, selections: {}, status: "loading", error: null };
}

export function withSample(state: RatingFormState, sample: Sample): RatingFormState {
  // New sample: axes reset to unselected.
  return { sample, selections: {}, status: "rating", error: null };
}

export function withSelection(state: RatingFormState, axis: AxisKey, level: Level): RatingFormState {
  if (state.status !== "rating") return state;
  return { ...state, selections: { ...state.selections, [axis]: level } };
}

export function canSubmit(state: RatingFormState): boolean {
  return state.status === "rating" && AXIS_KEYS.every((axis) => state.selections[axis] !== undefined);
}

export function exhausted(): RatingFormState {
  return { sample: null, selections: {}, status: "exhausted", error: null };
}

export function withError(state: RatingFormState, message: string): RatingFormState {
  // Selections survive transient failures so a retry does not lose work.
  return { ...state, status: "error", error: message };
}

export function resumeRating(state: RatingFormState): RatingFormState {
  return { ...state, status: "rating", error: null };
}
