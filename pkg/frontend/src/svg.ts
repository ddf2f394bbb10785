/**
 * Deterministic SVG line-figure builder: fixed palette, fixed tick
 * placement, fixed number formatting. Identical input yields identical
 * bytes, which the golden tests rely on.
 */

export interface Series {
  label: string;
  points: Array<[number, number]>;
  /** extra legend annotation, e.g. unbounded tail mass */
  note?: string;
  /** draw step-after segments (empirical CDFs) instead of straight lines */
  step?: boolean;
  dashed?: boolean;
}

export interface FigureSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  xRange?: [number, number];
  yRange?: [number, number];
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"];

const MARGIN = { top: 34, right: 16, bottom: 42, left: 56 };

export function fmt(x: number): string {
  if (x === 0) return "0";
  const s = x.toPrecision(6);
  return s.includes(".") ? s.replace(/\.?0+$/, "") : s;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

/** Round-ish tick positions covering [lo, hi] with ~count steps. */
export function ticks(lo: number, hi: number, count = 6): number[] {
  const span = hi - lo;
  const rawStep = span / Math.max(count - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const first = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let t = first; t <= hi + step * 1e-9; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return out;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderFigure(spec: FigureSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;

  const xs = spec.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = spec.series.flatMap((s) => s.points.map((p) => p[1]));
  const [x0, x1] = spec.xRange ?? extent(xs);
  const [y0, y1] = spec.yRange ?? extent(ys);
  const sx = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const sy = (y: number) => MARGIN.top + plotH - ((y - y0) / (y1 - y0)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="18" text-anchor="middle" font-size="14">${esc(spec.title)}</text>`,
  );

  // axes and grid
  for (const t of ticks(x0, x1)) {
    const px = sx(t).toFixed(2);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + plotH}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + plotH + 16}" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(y0, y1)) {
    const py = sy(t).toFixed(2);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + plotW}" y2="${py}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${py}" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${height - 8}" text-anchor="middle">${esc(spec.xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${MARGIN.top + plotH / 2})">${esc(spec.yLabel)}</text>`,
  );

  // series
  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords: string[] = [];
    s.points.forEach(([x, y], j) => {
      const px = sx(x).toFixed(2);
      const py = sy(y).toFixed(2);
      if (j === 0) {
        coords.push(`M ${px} ${py}`);
      } else if (s.step) {
        const prevY = sy(s.points[j - 1][1]).toFixed(2);
        coords.push(`L ${px} ${prevY}`, `L ${px} ${py}`);
      } else {
        coords.push(`L ${px} ${py}`);
      }
    });
    const dash = s.dashed ? ` stroke-dasharray="6 3"` : "";
    parts.push(
      `<path d="${coords.join(" ")}" fill="none" stroke="${color}" stroke-width="1.6"${dash}/>`,
    );
  });

  // legend
  spec.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const ly = MARGIN.top + 10 + i * 16;
    const lx = MARGIN.left + 10;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 18}" y2="${ly}" stroke="${color}" stroke-width="1.6"/>`);
    const label = s.note ? `${s.label} ${s.note}` : s.label;
    parts.push(
      `<text x="${lx + 24}" y="${ly}" dominant-baseline="middle">${esc(label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
