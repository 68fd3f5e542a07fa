import { describe, expect, it } from "vitest";

import { colorRamp, contourSegments } from "../src/heatmap.js";

describe("contourSegments", () => {
  it("finds no segments on a uniform field", () => {
    const grid = [
      [0.1, 0.1],
      [0.1, 0.1],
    ];
    expect(contourSegments(grid, 0.5)).toHaveLength(0);
  });

  it("crosses between low and high cells", () => {
    const grid = [
      [0.0, 0.0, 0.0],
      [0.0, 1.0, 0.0],
      [0.0, 0.0, 0.0],
    ];
    const segments = contourSegments(grid, 0.5);
    expect(segments.length).toBeGreaterThanOrEqual(4);
    for (const s of segments) {
      // all crossings stay near the center cell
      expect(Math.abs(s.x1 - 1)).toBeLessThanOrEqual(1);
      expect(Math.abs(s.y1 - 1)).toBeLessThanOrEqual(1);
    }
  });

  it("interpolates the crossing position linearly", () => {
    const grid = [
      [0.0, 1.0],
      [0.0, 1.0],
    ];
    const segments = contourSegments(grid, 0.25);
    expect(segments).toHaveLength(1);
    expect(segments[0].x1).toBeCloseTo(0.25);
    expect(segments[0].x2).toBeCloseTo(0.25);
  });
});

describe("colorRamp", () => {
  it("returns RGB bytes and is monotone in red", () => {
    const lo = colorRamp(0);
    const hi = colorRamp(1);
    for (const c of [...lo, ...hi]) {
      expect(c).toBeGreaterThanOrEqual(0);
      expect(c).toBeLessThanOrEqual(255);
    }
    expect(hi[0]).toBeGreaterThan(lo[0]);
  });

  it("clamps out-of-range inputs", () => {
    expect(colorRamp(-1)).toEqual(colorRamp(0));
    expect(colorRamp(2)).toEqual(colorRamp(1));
  });
});
