// Display formatting. Every statistic the console shows is the service's
// value passed through String(): no rounding, no recomputation. The tests
// compare rendered text against the payload byte for byte.

import type { Dc } from "./types.js";

export function show(x: number | string | null | undefined): string {
  return x === null || x === undefined ? "n/a" : String(x);
}

export function dcLabel(dc: readonly [number, number] | null | undefined): string {
  return dc ? `(${dc[0]}, ${dc[1]})` : "n/a";
}

export function sameDc(a: Dc | null, b: Dc | null): boolean {
  return a !== null && b !== null && a[0] === b[0] && a[1] === b[1];
}

// Axis labels derived from design constants (xi+eps, xi-u, xi+u) are the one
// place the console adds numbers. Trim the float noise so 0.30 + 0.05 reads
// "0.35", not "0.35000000000000003".
export function designSum(a: number, b: number): string {
  return String(Number((a + b).toPrecision(12)));
}
