/**
 * Minimal self-contained SVG builders: a multi-series line chart and an
 * event raster. No DOM, no dependencies; output is a standalone SVG string.
 */

const WIDTH = 960;
const HEIGHT = 540;
const MARGIN = { top: 40, right: 170, bottom: 46, left: 64 };

const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export interface Series {
  name: string;
  values: ArrayLike<number>;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function ticks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const rawStep = (hi - lo) / count;
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * power).find((s) => s >= rawStep) ?? rawStep;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

function frame(title: string, xLabel: string, yLabel: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="24" text-anchor="middle" font-size="16">${esc(title)}</text>`,
    `<text x="${(MARGIN.left + WIDTH - MARGIN.right) / 2}" y="${HEIGHT - 10}" text-anchor="middle" font-size="12">${esc(xLabel)}</text>`,
    `<text x="16" y="${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 16 ${(MARGIN.top + HEIGHT - MARGIN.bottom) / 2})">${esc(yLabel)}</text>`,
    body,
    "</svg>",
  ].join("\n");
}

export function lineChart(
  title: string,
  slots: number[],
  series: Series[],
  yLabel: string,
): string {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const xLo = slots[0];
  const xHi = slots[slots.length - 1];
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const s of series) {
    for (let t = 0; t < s.values.length; t++) {
      const v = s.values[t];
      if (v < yLo) yLo = v;
      if (v > yHi) yHi = v;
    }
  }
  if (yLo === yHi) {
    yLo -= 1;
    yHi += 1;
  }
  const pad = 0.05 * (yHi - yLo);
  yLo -= pad;
  yHi += pad;
  const x = (slot: number) => MARGIN.left + ((slot - xLo) / Math.max(xHi - xLo, 1)) * innerW;
  const y = (v: number) => MARGIN.top + (1 - (v - yLo) / (yHi - yLo)) * innerH;

  const parts: string[] = [];
  for (const tick of ticks(yLo, yHi, 6)) {
    const py = y(tick);
    parts.push(`<line x1="${MARGIN.left}" y1="${py}" x2="${WIDTH - MARGIN.right}" y2="${py}" stroke="#dddddd"/>`);
    parts.push(`<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end" font-size="11">${tick}</text>`);
  }
  for (const tick of ticks(xLo, xHi, 8)) {
    const px = x(tick);
    parts.push(`<line x1="${px}" y1="${HEIGHT - MARGIN.bottom}" x2="${px}" y2="${HEIGHT - MARGIN.bottom + 4}" stroke="#333333"/>`);
    parts.push(`<text x="${px}" y="${HEIGHT - MARGIN.bottom + 18}" text-anchor="middle" font-size="11">${tick}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#333333"/>`);

  series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    const points: string[] = [];
    for (let t = 0; t < s.values.length; t++) {
      points.push(`${x(slots[t]).toFixed(2)},${y(s.values[t]).toFixed(2)}`);
    }
    parts.push(
      `<polyline data-series="${esc(s.name)}" fill="none" stroke="${color}" stroke-width="1.5" points="${points.join(" ")}"/>`,
    );
    const ly = MARGIN.top + 16 * k;
    parts.push(`<line x1="${WIDTH - MARGIN.right + 8}" y1="${ly}" x2="${WIDTH - MARGIN.right + 28}" y2="${ly}" stroke="${color}" stroke-width="2"/>`);
    parts.push(`<text x="${WIDTH - MARGIN.right + 34}" y="${ly + 4}" font-size="11">${esc(s.name)}</text>`);
  });

  return frame(title, "slot", yLabel, parts.join("\n"));
}

export interface RasterMark {
  slot: number;
  channel: string;
}

export function eventRaster(
  title: string,
  slotRange: [number, number],
  channels: string[],
  marks: RasterMark[],
): string {
  const innerW = WIDTH - MARGIN.left - MARGIN.right;
  const innerH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const [xLo, xHi] = slotRange;
  const x = (slot: number) => MARGIN.left + ((slot - xLo) / Math.max(xHi - xLo, 1)) * innerW;
  const row = (k: number) => MARGIN.top + ((k + 0.5) / Math.max(channels.length, 1)) * innerH;

  const parts: string[] = [];
  channels.forEach((name, k) => {
    const py = row(k);
    parts.push(`<line x1="${MARGIN.left}" y1="${py}" x2="${WIDTH - MARGIN.right}" y2="${py}" stroke="#eeeeee"/>`);
    parts.push(`<text x="${MARGIN.left - 6}" y="${py + 4}" text-anchor="end" font-size="11">${esc(name)}</text>`);
  });
  for (const tick of ticks(xLo, xHi, 8)) {
    const px = x(tick);
    parts.push(`<text x="${px}" y="${HEIGHT - MARGIN.bottom + 18}" text-anchor="middle" font-size="11">${tick}</text>`);
  }
  parts.push(`<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" fill="none" stroke="#333333"/>`);
  const index = new Map(channels.map((name, k) => [name, k]));
  for (const mark of marks) {
    const k = index.get(mark.channel);
    if (k === undefined) continue;
    parts.push(
      `<circle data-slot="${mark.slot}" data-channel="${esc(mark.channel)}" cx="${x(mark.slot).toFixed(2)}" cy="${row(k).toFixed(2)}" r="3.5" fill="#d62728"/>`,
    );
  }
  return frame(title, "slot", "channel", parts.join("\n"));
}
