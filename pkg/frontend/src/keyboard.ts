// Keyboard handling: digits 1..5 rate the focused axis, Tab / arrows move the
// focus between axes, Enter submits.

import type { AxisKey, Level } from "./types.js";
import { AXIS_KEYS } from "./types.js";

export type KeyAction =
  | { type: "select"; axis: AxisKey; level: Level }
  | { type: "focus"; axis: AxisKey }
  | { type: "submit" }
  | { type: "none" };

export function nextAxis(current: AxisKey, step: 1 | -1 = 1): AxisKey {
  const index = AXIS_KEYS.indexOf(current);
  const next = (index + step + AXIS_KEYS.length) % AXIS_KEYS.length;
  return AXIS_KEYS[next]!;
}

export function interpretKey(key: string, focused: AxisKey, shift = false): KeyAction {
  if (key >= "1" && key <= "5") {
    return { type: "select", axis: focused, level: Number(key) as Level };
  }
  if (key === "Tab") {
    return { type: "focus", axis: nextAxis(focused, shift ? -1 : 1) };
  }
  if (key === "ArrowDown" || key === "j") {
    return { type: "focus", axis: nextAxis(focused, 1) };
  }
  if (key === "ArrowUp" || key === "k") {
    return { type: "focus", axis: nextAxis(focused, -1) };
  }
  if (key === "Enter") {
    return { type: "submit" };
  }
  return { type: "none" };
}
