/**
 * Pure rendering: API payloads in, plot geometry out.
 *
 * Nothing in this module fetches, mutates, or infers. Every function maps a
 * recorded service response to screen coordinates plus the untouched source
 * values, and the contract tests hold two properties over that mapping:
 *
 *   1. data fidelity: the `data*` fields on every rendered element are the
 *      exact arrays and numbers the service sent (same object references
 *      where arrays are involved, no re-derivation);
 *   2. geometric faithfulness: screen positions invert back to the data
 *      values through the scale, so orderings visible in pixels are the
 *      orderings present in the payload.
 */

import type {
  CostCurve,
  DesignSpec,
  EstimateReport,
  FunctionDraws,
  PpcPanel,
  SliceGrid,
  TrialTriplet,
} from './types.js';
import {
  LinearScale,
  Viewport,
  linearScale,
  pathFrom,
  probabilityScale,
  round2,
  xScale,
  yScale,
} from './scales.js';

export type AxisMode = 'linear' | 'probit';

export const DEFAULT_VIEWPORT: Viewport = {
  width: 640,
  height: 360,
  margin: { top: 12, right: 16, bottom: 28, left: 44 },
};

// ------------------------------------------------------------ function draws

export interface RenderedCurve {
  path: string;
  /** Source arrays, by reference; render must not copy or transform them. */
  dataX: number[];
  dataY: number[];
}

export interface ThresholdMarker {
  px: number;
  dataX: number;
  drawIndex: number;
}

export interface DrawsPlot {
  curves: RenderedCurve[];
  thresholdMarkers: ThresholdMarker[];
  quantilePaths: Record<string, RenderedCurve>;
  xAxis: LinearScale;
  yMode: AxisMode;
}

/**
 * Lay out prior or posterior function draws plus their response-probability
 * quantile contours. One polyline per draw; one marker per finite threshold.
 */
export function renderFunctionDraws(
  draws: FunctionDraws,
  design: DesignSpec,
  vp: Viewport = DEFAULT_VIEWPORT,
  mode: AxisMode = 'linear',
): DrawsPlot {
  const xs = xScale([design.x_lo, design.x_hi], vp);
  const ps = probabilityScale(0, 1, vp, mode);
  const px = draws.x.map((v) => xs.toPx(v));

  const curves: RenderedCurve[] = draws.curves.map((row) => ({
    path: pathFrom(px, row.map((p) => ps.toPx(p))),
    dataX: draws.x,
    dataY: row,
  }));

  const thresholdMarkers: ThresholdMarker[] = [];
  draws.thresholds.forEach((t, i) => {
    if (t !== null && isFinite(t)) {
      thresholdMarkers.push({ px: xs.toPx(t), dataX: t, drawIndex: i });
    }
  });

  const quantilePaths: Record<string, RenderedCurve> = {};
  for (const [name, row] of Object.entries(draws.quantile_grid)) {
    quantilePaths[name] = {
      path: pathFrom(px, row.map((p) => ps.toPx(p))),
      dataX: draws.x,
      dataY: row,
    };
  }

  return { curves, thresholdMarkers, quantilePaths, xAxis: xs, yMode: mode };
}

/**
 * Horizontal spread of the rendered threshold markers, in pixels: the
 * interquartile range of their x positions. This is the quantity a viewer
 * reads off the draws panel when judging whether a prior is tight or loose.
 */
export function thresholdSpreadPx(plot: DrawsPlot): number {
  const px = plot.thresholdMarkers.map((m) => m.px).sort((a, b) => a - b);
  if (px.length < 4) {
    throw new Error(`need at least 4 threshold markers, have ${px.length}`);
  }
  return quantileSorted(px, 0.75) - quantileSorted(px, 0.25);
}

function quantileSorted(sorted: number[], q: number): number {
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const frac = pos - lo;
  return sorted[lo]! * (1 - frac) + sorted[hi]! * frac;
}

/**
 * Detection-task sanity probe: the median prior response probability at the
 * strongest stimulus. A value far from ceiling means the prior thinks the
 * observer may stay near chance at the top of the range, which for a
 * detection design signals a misconfigured prior. The displayed number is
 * the service's own q500 value, untouched.
 */
export function ceilingProbe(
  draws: FunctionDraws,
): { x: number; median: number; nearCeiling: boolean } {
  const med = draws.quantile_grid['q500'];
  if (!med || med.length !== draws.x.length || med.length === 0) {
    throw new Error('quantile_grid.q500 missing or misaligned');
  }
  const last = med.length - 1;
  const median = med[last]!;
  return { x: draws.x[last]!, median, nearCeiling: median >= 0.9 };
}

// ------------------------------------------------------------ cost curve

export interface CostPlot {
  path: string;
  chosenMarker: { px: number; py: number; dataX: number; dataValue: number };
  dataPoints: [number, number][];
}

export function renderCostCurve(
  curve: CostCurve,
  design: DesignSpec,
  vp: Viewport = DEFAULT_VIEWPORT,
): CostPlot {
  if (curve.points.length === 0) {
    throw new Error('cost curve has no points');
  }
  const xs = xScale([design.x_lo, design.x_hi], vp);
  const values = curve.points.map((p) => p[1]);
  const lo = Math.min(...values, 0);
  const hi = Math.max(...values);
  const ys = yScale([lo, hi === lo ? lo + 1 : hi], vp);
  const chosen = curve.points[curve.chosen];
  if (!chosen) {
    throw new Error(`chosen index ${curve.chosen} outside curve`);
  }
  return {
    path: pathFrom(
      curve.points.map((p) => xs.toPx(p[0])),
      curve.points.map((p) => ys.toPx(p[1])),
    ),
    chosenMarker: {
      px: xs.toPx(chosen[0]),
      py: ys.toPx(chosen[1]),
      dataX: chosen[0],
      dataValue: chosen[1],
    },
    dataPoints: curve.points,
  };
}

// ------------------------------------------------------------ response dashes

export interface Dash {
  px: number;
  row: number;
  dataX: number;
  dataR: number;
}

/**
 * Responses as dashes along the stimulus axis: successes on the upper row,
 * failures on the lower row, in trial order.
 */
export function renderDashStrip(
  triplets: TrialTriplet[],
  design: DesignSpec,
  vp: Viewport = DEFAULT_VIEWPORT,
): Dash[] {
  const xs = xScale([design.x_lo, design.x_hi], vp);
  return triplets.map((t) => ({
    px: xs.toPx(t[1]),
    row: t[2] === 1 ? 0 : 1,
    dataX: t[1],
    dataR: t[2],
  }));
}

export interface PpcPlot {
  real: Dash[];
  replicates: Dash[][];
}

export function renderPpcPanel(
  ppc: PpcPanel,
  design: DesignSpec,
  vp: Viewport = DEFAULT_VIEWPORT,
): PpcPlot {
  return {
    real: renderDashStrip(ppc.real, design, vp),
    replicates: ppc.replicates.map((rep) => renderDashStrip(rep, design, vp)),
  };
}

// ------------------------------------------------------------ slice heatmaps

export interface HeatCell {
  col: number;
  rowIdx: number;
  intensity: number;
  dataDensity: number;
}

export interface SlicePlot {
  cells: HeatCell[];
  cols: number;
  rows: number;
  axisNames: [string, string];
  axisRanges: { [name: string]: [number, number] };
}

/**
 * A 2-D marginal density grid as heatmap cells. Intensity is density over
 * max density, a display normalization only; the raw density rides along.
 */
export function renderSliceHeatmap(name: string, slice: SliceGrid): SlicePlot {
  const axisNames = name.split('_') as [string, string];
  if (axisNames.length !== 2) {
    throw new Error(`slice name ${name!} is not a pair`);
  }
  const [ai, aj] = axisNames;
  const axI = slice[ai] as number[];
  const axJ = slice[aj] as number[];
  const dens = slice.density;
  if (!Array.isArray(axI) || !Array.isArray(axJ)) {
    throw new Error(`slice ${name} lacks axis arrays ${ai}/${aj}`);
  }
  let peak = 0;
  for (const row of dens) for (const v of row) peak = Math.max(peak, v);
  if (!(peak > 0)) {
    throw new Error(`slice ${name} has no positive density`);
  }
  const cells: HeatCell[] = [];
  for (let i = 0; i < dens.length; i++) {
    const row = dens[i]!;
    for (let j = 0; j < row.length; j++) {
      cells.push({ col: i, rowIdx: j, intensity: row[j]! / peak, dataDensity: row[j]! });
    }
  }
  return {
    cells,
    cols: dens.length,
    rows: dens[0] ? dens[0].length : 0,
    axisNames,
    axisRanges: {
      [ai]: [axI[0]!, axI[axI.length - 1]!],
      [aj]: [axJ[0]!, axJ[axJ.length - 1]!],
    },
  };
}

// ------------------------------------------------------------ estimate table

export interface TableRow {
  label: string;
  cells: string[];
}

function fmtNum(v: number, digits = 4): string {
  return v.toFixed(digits);
}

function fmtInterval(pair: [number, number], digits = 4): string {
  return `[${fmtNum(pair[0], digits)}, ${fmtNum(pair[1], digits)}]`;
}

/**
 * The estimate report as table rows. Cells are fixed-precision renderings
 * of the report's own numbers; the divergence test re-parses every cell and
 * checks it against the source value at that precision.
 */
export function renderEstimateTable(report: EstimateReport): TableRow[] {
  const rows: TableRow[] = [];
  for (const name of ['mu', 'nu', 'eta'] as const) {
    const e = report.reparameterized[name];
    rows.push({
      label: name,
      cells: [
        fmtNum(e.mode),
        fmtNum(e.mean),
        fmtNum(e.sd),
        fmtInterval(e.quantile_95),
        fmtInterval(e.hessian_95),
      ],
    });
  }
  for (const name of ['mu', 'sigma', 'lambda'] as const) {
    const e = report.natural[name];
    rows.push({
      label: `${name} (natural)`,
      cells: [fmtNum(e.mode), fmtNum(e.mean), '', fmtInterval(e.quantile_95), ''],
    });
  }
  for (const name of ['threshold', 'width', 'slope'] as const) {
    const e = report.functionals[name];
    if (e === null) {
      rows.push({ label: name, cells: ['n/a', '', '', '', ''] });
      continue;
    }
    rows.push({
      label: name,
      cells: [
        '',
        fmtNum(e.mean),
        fmtNum(e.sd),
        fmtInterval(e.quantile_95),
        '',
      ],
    });
  }
  rows.push({
    label: 'entropy (nats)',
    cells: [fmtNum(report.entropy_nats), '', '', '', ''],
  });
  return rows;
}

// ------------------------------------------------------------ demo timeline

export interface TimelineMarker {
  px: number;
  dataThreshold: number;
  label: string;
}

/**
 * Threshold posterior means across a sequence of estimate reports, placed
 * on the stimulus axis. Pixel distances between consecutive markers are the
 * on-screen record of how strongly each trial moved the posterior.
 */
export function renderThresholdTimeline(
  reports: { label: string; report: EstimateReport }[],
  design: DesignSpec,
  vp: Viewport = DEFAULT_VIEWPORT,
): TimelineMarker[] {
  const xs = xScale([design.x_lo, design.x_hi], vp);
  return reports.map(({ label, report }) => {
    const thr = report.functionals.threshold;
    if (thr === null) {
      throw new Error(`report ${label} carries no threshold functional`);
    }
    return { px: xs.toPx(thr.mean), dataThreshold: thr.mean, label };
  });
}

/** Pixel shift between consecutive timeline markers (signed, screen x). */
export function timelineShiftsPx(markers: TimelineMarker[]): number[] {
  const shifts: number[] = [];
  for (let i = 1; i < markers.length; i++) {
    shifts.push(round2(markers[i]!.px - markers[i - 1]!.px));
  }
  return shifts;
}

// ------------------------------------------------------------ SVG assembly

/** Minimal escape for attribute interpolation. */
export function escapeAttr(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/"/g, '&quot;').replace(/</g, '&lt;');
}

export { linearScale };
