/**
 * The simulated-observer input source: deterministic per seed, and its
 * response probability comes from the service's own predicted curve at the
 * nearest grid point, never from client-side model evaluation.
 */

import { describe, expect, it } from 'vitest';

import { autopilotResponse, makeRng, nearestIndex } from '../src/autopilot';
import { consoleFixture } from './fixtures';

describe('seeded stream', () => {
  it('is deterministic per seed and distinct across seeds', () => {
    const a = makeRng(42);
    const b = makeRng(42);
    const c = makeRng(43);
    const sa = [a(), a(), a()];
    const sb = [b(), b(), b()];
    const sc = [c(), c(), c()];
    expect(sa).toEqual(sb);
    expect(sa).not.toEqual(sc);
    for (const v of sa) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThan(1);
    }
  });
});

describe('nearest grid point', () => {
  it('snaps to the closest stimulus level', () => {
    const grid = [-6, -2, 0, 4, 10];
    expect(nearestIndex(grid, -6)).toBe(0);
    expect(nearestIndex(grid, 0.9)).toBe(2);
    expect(nearestIndex(grid, 9)).toBe(4);
  });

  it('rejects an empty grid', () => {
    expect(() => nearestIndex([], 1)).toThrow(/empty/);
  });
});

describe('response generation', () => {
  it('answers from the predicted median at the proposed level', () => {
    const fx = consoleFixture();
    const curve = fx.estimate.predicted_curve;
    const x = fx.transcript[0]!.proposal.x;
    const p = curve.quantiles['q500']![nearestIndex(curve.x, x)]!;
    // draws straddling p flip the response
    expect(autopilotResponse(curve, x, p - 1e-9)).toBe(1);
    expect(autopilotResponse(curve, x, p + 1e-9)).toBe(0);
  });

  it('refuses a curve without an aligned median row', () => {
    expect(() => autopilotResponse({ x: [1, 2], quantiles: {} }, 1, 0.5)).toThrow(/q500/);
  });
});
