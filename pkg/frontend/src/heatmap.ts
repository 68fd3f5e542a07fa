/** Canvas heatmap of the posterior-mean slice with the indifference contour. */

export interface ContourSegment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

/** Marching-squares segments of the level set {grid == level}, in cell
 * coordinates (column = x, row = y). */
export function contourSegments(grid: number[][], level: number): ContourSegment[] {
  const rows = grid.length;
  const cols = grid[0]?.length ?? 0;
  const segments: ContourSegment[] = [];
  const interp = (a: number, b: number) => (level - a) / (b - a);
  for (let r = 0; r < rows - 1; r++) {
    for (let c = 0; c < cols - 1; c++) {
      const v00 = grid[r][c];
      const v01 = grid[r][c + 1];
      const v10 = grid[r + 1][c];
      const v11 = grid[r + 1][c + 1];
      const idx =
        (v00 > level ? 8 : 0) | (v01 > level ? 4 : 0) | (v11 > level ? 2 : 0) | (v10 > level ? 1 : 0);
      if (idx === 0 || idx === 15) continue;
      const top = { x: c + interp(v00, v01), y: r };
      const bottom = { x: c + interp(v10, v11), y: r + 1 };
      const left = { x: c, y: r + interp(v00, v10) };
      const right = { x: c + 1, y: r + interp(v01, v11) };
      const pairs: Record<number, [{ x: number; y: number }, { x: number; y: number }][]> = {
        1: [[left, bottom]], 2: [[bottom, right]], 3: [[left, right]], 4: [[top, right]],
        5: [[top, left], [bottom, right]], 6: [[top, bottom]], 7: [[top, left]],
        8: [[top, left]], 9: [[top, bottom]], 10: [[top, right], [left, bottom]],
        11: [[top, right]], 12: [[left, right]], 13: [[bottom, right]], 14: [[left, bottom]],
      };
      for (const [p, q] of pairs[idx] ?? []) {
        segments.push({ x1: p.x, y1: p.y, x2: q.x, y2: q.y });
      }
    }
  }
  return segments;
}

/** Perceptually reasonable blue-to-yellow ramp for t in [0, 1]. */
export function colorRamp(t: number): [number, number, number] {
  const x = Math.min(1, Math.max(0, t));
  return [
    Math.round(255 * Math.min(1, 0.267 + 1.25 * x * x)),
    Math.round(255 * (0.1 + 0.8 * x)),
    Math.round(255 * Math.max(0, 0.6 - 0.55 * x)),
  ];
}

export interface HeatmapOptions {
  mean: number[][];
  pZero: number[][];
  contourLevel: number | null;
  maximizer: [number, number] | null; // cell coordinates, or null if off-slice
}

export function drawHeatmap(canvas: HTMLCanvasElement, opts: HeatmapOptions): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rows = opts.mean.length;
  const cols = opts.mean[0].length;
  const { width, height } = canvas;
  const cw = width / cols;
  const ch = height / rows;
  let lo = Infinity;
  let hi = -Infinity;
  for (const row of opts.mean) {
    for (const v of row) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  const span = hi - lo || 1;
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const [cr, cg, cb] = colorRamp((opts.mean[r][c] - lo) / span);
      ctx.fillStyle = `rgb(${cr},${cg},${cb})`;
      // row index maps to the y axis, drawn bottom-up
      ctx.fillRect(c * cw, height - (r + 1) * ch, cw + 1, ch + 1);
    }
  }
  if (opts.contourLevel !== null) {
    ctx.strokeStyle = "#e03131";
    ctx.lineWidth = 2;
    ctx.beginPath();
    for (const s of contourSegments(opts.pZero, opts.contourLevel)) {
      ctx.moveTo(s.x1 * cw, height - s.y1 * ch);
      ctx.lineTo(s.x2 * cw, height - s.y2 * ch);
    }
    ctx.stroke();
  }
  if (opts.maximizer) {
    const [mc, mr] = opts.maximizer;
    ctx.strokeStyle = "#e03131";
    ctx.lineWidth = 2;
    const x = mc * cw;
    const y = height - mr * ch;
    ctx.beginPath();
    ctx.moveTo(x - 6, y - 6);
    ctx.lineTo(x + 6, y + 6);
    ctx.moveTo(x - 6, y + 6);
    ctx.lineTo(x + 6, y - 6);
    ctx.stroke();
  }
}
