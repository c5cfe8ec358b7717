/** Band statistics for seed-averaged curves. */

import type { CurveSeries } from './csv.js';

export function mean(xs: number[]): number {
  return xs.reduce((a, b) => a + b, 0) / xs.length;
}

/** Sample standard deviation (n - 1 denominator); 0 for a single value. */
export function sampleStd(xs: number[]): number {
  if (xs.length < 2) return 0;
  const m = mean(xs);
  const ss = xs.reduce((a, b) => a + (b - m) * (b - m), 0);
  return Math.sqrt(ss / (xs.length - 1));
}

export interface Band {
  steps: number[];
  mean: number[];
  std: number[];
  resampled: boolean;
}

function valueAt(series: CurveSeries, step: number): number {
  // step function: the last recorded value at or before the query step
  let v = series.success[0];
  for (let i = 0; i < series.steps.length; i++) {
    if (series.steps[i] <= step) v = series.success[i];
    else break;
  }
  return v;
}

/**
 * Align several seeds onto one grid and compute mean +/- one sample std.
 * Identical grids are used as-is; mismatched grids resample every series onto
 * the coarsest grid (the one with the fewest points), with a warning flag.
 */
export function bandAcrossSeeds(seeds: CurveSeries[]): Band {
  if (seeds.length === 0) throw new Error('no curve series given');
  const grids = seeds.map((s) => s.steps.join(','));
  const identical = grids.every((g) => g === grids[0]);
  let grid: number[];
  let resampled = false;
  if (identical) {
    grid = seeds[0].steps;
  } else {
    resampled = true;
    grid = seeds.reduce((a, b) => (a.steps.length <= b.steps.length ? a : b)).steps;
  }
  const m: number[] = [];
  const s: number[] = [];
  for (const step of grid) {
    const vals = seeds.map((series) => valueAt(series, step));
    m.push(mean(vals));
    s.push(sampleStd(vals));
  }
  return { steps: grid, mean: m, std: s, resampled };
}
