/**
 * Simulated-observer toggle for demos: answers the proposed stimulus with a
 * coin flip against the service's own predicted median response probability
 * at the nearest grid point of the latest estimate's curve.
 *
 * This generates inputs, not displayed numbers. It deliberately avoids any
 * client-side model evaluation: the probability is read straight from the
 * report, and the only arithmetic is the seeded coin flip.
 */

import type { PredictedCurve } from './types.js';

/** Deterministic uniform stream (Park-Miller); good enough for demo coins. */
export function makeRng(seed: number): () => number {
  let state = seed % 2147483647;
  if (state <= 0) state += 2147483646;
  return () => {
    state = (state * 16807) % 2147483647;
    return (state - 1) / 2147483646;
  };
}

export function nearestIndex(grid: number[], x: number): number {
  if (grid.length === 0) {
    throw new Error('empty grid');
  }
  let best = 0;
  let bestDist = Math.abs(grid[0]! - x);
  for (let i = 1; i < grid.length; i++) {
    const d = Math.abs(grid[i]! - x);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

export function autopilotResponse(curve: PredictedCurve, x: number, draw: number): 0 | 1 {
  const median = curve.quantiles['q500'];
  if (!median || median.length !== curve.x.length) {
    throw new Error('predicted curve lacks an aligned q500 row');
  }
  const p = median[nearestIndex(curve.x, x)]!;
  return draw < p ? 1 : 0;
}
