// Display formatting for aggregate statistics. Every number shown comes
// straight from a service response; the only transformation is rounding to
// two decimals.

import type { AxisStats } from "./types.js";

const DASH = "—";

export function formatStat(stats: AxisStats): string {
  if (stats.count === 0 || stats.mean === null) return DASH;
  const mean = stats.mean.toFixed(2);
  if (stats.std === null) return mean;
  return `${mean} ± ${stats.std.toFixed(2)}`;
}

export function formatCount(count: number): string {
  return String(count);
}
