import { describe, expect, it } from "vitest";

import { formatStat } from "../src/format.js";

describe("formatStat", () => {
  it("rounds mean and std to two decimals", () => {
    expect(formatStat({ count: 3, mean: 4.666666, std: 0.57735 })).toBe("4.67 ± 0.58");
  });

  it("renders a dash when there are no ratings", () => {
    expect(formatStat({ count: 0, mean: null, std: null })).toBe("—");
  });

  it("renders the mean alone when std is null (single rating)", () => {
    expect(formatStat({ count: 1, mean: 5, std: null })).toBe("5.00");
  });
});
