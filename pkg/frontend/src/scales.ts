/**
 * Coordinate mapping between data space and screen space.
 *
 * Scales are plain affine maps. The one deliberate exception is the probit
 * axis: plotting response probability as z = PhiInverse(p) is a pure axis
 * transform applied at render time, so the numbers fed into a probit scale
 * are still the untouched probabilities from the service.
 */

export interface Viewport {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export interface LinearScale {
  toPx(v: number): number;
  fromPx(px: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0;
  if (!(span !== 0) || !isFinite(span)) {
    throw new Error(`degenerate scale domain [${d0}, ${d1}]`);
  }
  const k = (r1 - r0) / span;
  return {
    toPx: (v) => r0 + (v - d0) * k,
    fromPx: (px) => d0 + (px - r0) / k,
    domain: [d0, d1],
    range: [r0, r1],
  };
}

export function plotArea(vp: Viewport): { x0: number; x1: number; y0: number; y1: number } {
  return {
    x0: vp.margin.left,
    x1: vp.width - vp.margin.right,
    y0: vp.height - vp.margin.bottom,
    y1: vp.margin.top,
  };
}

/** x scale across the plot area, left to right. */
export function xScale(domain: [number, number], vp: Viewport): LinearScale {
  const a = plotArea(vp);
  return linearScale(domain, [a.x0, a.x1]);
}

/** y scale across the plot area, bottom to top (screen y grows downward). */
export function yScale(domain: [number, number], vp: Viewport): LinearScale {
  const a = plotArea(vp);
  return linearScale(domain, [a.y0, a.y1]);
}

// ------------------------------------------------------------ probit axis

/**
 * Inverse standard normal CDF (Acklam's rational approximation, relative
 * error below 1.2e-9). Used only to position probability values on a
 * probit-scaled axis; never to compute displayed quantities.
 */
export function probit(p: number): number {
  if (!(p > 0 && p < 1)) {
    throw new Error(`probit domain is (0, 1), got ${p}`);
  }
  const a = [-39.69683028665376, 220.9460984245205, -275.9285104469687,
             138.357751867269, -30.66479806614716, 2.506628277459239];
  const b = [-54.47609879822406, 161.5858368580409, -155.6989798598866,
             66.80131188771972, -13.28068155288572];
  const c = [-0.007784894002430293, -0.3223964580411365, -2.400758277161838,
             -2.549732539343734, 4.374664141464968, 2.938163982698783];
  const d = [0.007784695709041462, 0.3224671290700398, 2.445134137142996,
             3.754408661907416];
  const pl = 0.02425;
  let q: number, r: number;
  if (p < pl) {
    q = Math.sqrt(-2 * Math.log(p));
    return (((((c[0]! * q + c[1]!) * q + c[2]!) * q + c[3]!) * q + c[4]!) * q + c[5]!)
      / ((((d[0]! * q + d[1]!) * q + d[2]!) * q + d[3]!) * q + 1);
  }
  if (p <= 1 - pl) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0]! * r + a[1]!) * r + a[2]!) * r + a[3]!) * r + a[4]!) * r + a[5]!) * q
      / (((((b[0]! * r + b[1]!) * r + b[2]!) * r + b[3]!) * r + b[4]!) * r + 1);
  }
  q = Math.sqrt(-2 * Math.log(1 - p));
  return -(((((c[0]! * q + c[1]!) * q + c[2]!) * q + c[3]!) * q + c[4]!) * q + c[5]!)
    / ((((d[0]! * q + d[1]!) * q + d[2]!) * q + d[3]!) * q + 1);
}

/**
 * Probability axis for response-curve panels. Linear mode maps p directly;
 * probit mode maps z(p), clamping p into (eps, 1 - eps) so exact 0/1 grid
 * values stay plottable.
 */
export function probabilityScale(
  lo: number,
  hi: number,
  vp: Viewport,
  mode: 'linear' | 'probit',
): { toPx(p: number): number; mode: 'linear' | 'probit' } {
  if (mode === 'linear') {
    const s = yScale([lo, hi], vp);
    return { toPx: (p) => s.toPx(p), mode };
  }
  const eps = 1e-6;
  const clamp = (p: number) => Math.min(1 - eps, Math.max(eps, p));
  const s = yScale([probit(clamp(lo)), probit(clamp(hi))], vp);
  return { toPx: (p) => s.toPx(probit(clamp(p))), mode };
}

// ------------------------------------------------------------ path building

/** SVG path string through the given screen points. */
export function pathFrom(px: number[], py: number[]): string {
  if (px.length !== py.length) {
    throw new Error(`path arrays differ in length: ${px.length} vs ${py.length}`);
  }
  if (px.length === 0) return '';
  const parts: string[] = [];
  for (let i = 0; i < px.length; i++) {
    parts.push(`${i === 0 ? 'M' : 'L'}${round2(px[i]!)},${round2(py[i]!)}`);
  }
  return parts.join(' ');
}

export function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
