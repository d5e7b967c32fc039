/** Display formatting. The rendered text shows one decimal place; the exact
 * value always rides along untouched in data-value attributes — the UI never
 * transforms metric values beyond this display rounding. */

export function fmt1(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  const text = v.toFixed(1);
  // toFixed can produce "-0.0" for tiny negatives; display as "0.0".
  return text === "-0.0" ? "0.0" : text;
}

/** Signed difference `mine − other`, one decimal, with an explicit sign. */
export function fmtDelta(mine: number, other: number): string {
  const d = mine - other;
  const text = fmt1(Math.abs(d));
  if (text === "0.0") return "±0.0";
  return (d > 0 ? "+" : "−") + text;
}

/** Whether `mine` beats `other` on an axis, given its direction. */
export function betterThan(
  mine: number,
  other: number,
  higherBetter: boolean,
): -1 | 0 | 1 {
  if (mine === other) return 0;
  const higher = mine > other;
  return higher === higherBetter ? 1 : -1;
}
