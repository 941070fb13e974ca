/**
 * Trailing moving average over the last `window` slots.
 *
 * Entry t averages slots t-window+1..t; near the start, where fewer slots
 * exist, it averages whatever is available (so entry 0 is the raw value).
 * A window of 1 is the identity. Each window is summed directly so the
 * result carries no running-sum drift.
 */
export function trailingAverage(series: ArrayLike<number>, window: number): Float64Array {
  if (!Number.isInteger(window) || window < 1) {
    throw new RangeError(`smoothing window must be an integer >= 1, got ${window}`);
  }
  const n = series.length;
  const out = new Float64Array(n);
  for (let t = 0; t < n; t++) {
    const start = Math.max(0, t - window + 1);
    let sum = 0;
    for (let s = start; s <= t; s++) {
      sum += series[s];
    }
    out[t] = sum / (t - start + 1);
  }
  return out;
}
