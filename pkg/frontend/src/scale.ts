export type Scale = (value: number) => number;

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (span === 0) {
    // Degenerate domain: pin every value to the middle of the range.
    const mid = (r0 + r1) / 2;
    return () => mid;
  }
  return (value: number) => r0 + ((value - d0) / span) * (r1 - r0);
}

// Round tick steps from the 1-2-5 ladder covering [lo, hi].
export function ticks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(count, 1);
  const power = Math.floor(Math.log10(rawStep));
  const base = Math.pow(10, power);
  let step = base * 10;
  for (const mult of [1, 2, 5]) {
    if (base * mult >= rawStep) {
      step = base * mult;
      break;
    }
  }
  const out: number[] = [];
  const first = Math.ceil(lo / step - 1e-9) * step;
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    // Snap to the step grid so accumulated float error never leaks into labels.
    out.push(Math.round(v / step) * step);
  }
  return out;
}

export function tickLabel(value: number): string {
  if (Number.isInteger(value)) return String(value);
  const s = value.toPrecision(10).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

// Widen a degenerate or empty extent so a flat series still gets a visible axis.
export function padDomain(lo: number, hi: number): [number, number] {
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return [0, 1];
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.5;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}
