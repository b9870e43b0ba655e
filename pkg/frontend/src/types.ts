/**
 * Shapes of the session-service JSON payloads, mirrored field for field.
 *
 * Every interface here corresponds to a response (or request body) of the
 * HTTP API. The client never invents fields and never renames them; the
 * contract tests compare parsed payloads against recorded fixtures with
 * deep equality, so any drift between these types and the service shows
 * up as a test failure rather than a silently wrong plot.
 */

// ------------------------------------------------------------ configuration

export interface TaskSpec {
  kind: 'forced_choice' | 'yes_no';
  gamma?: number;
}

export interface DesignSpec {
  task: TaskSpec;
  x_lo: number;
  x_hi: number;
}

/** Gaussian prior over theta = (mu, nu, eta); arrays are [mu, nu, eta]. */
export interface PriorSpec {
  mean: [number, number, number];
  sd: [number, number, number];
}

export interface GridSpec {
  levels: number[];
  refine_rounds: number;
  refine_shrink: number;
}

export interface FunctionalSpec {
  kind: 'threshold' | 'width' | 'slope';
  level?: number;
  margin?: number;
}

export interface PolicySpec {
  kind: 'psi' | 't';
  grid: GridSpec;
  sample_count: number;
  approximate?: boolean;
  functional?: FunctionalSpec;
  estimator?: string;
}

export interface StoppingRuleSpec {
  kind: 'fixed_trials' | 'entropy_below' | 'probability_within';
  count?: number;
  threshold?: number;
  functional?: FunctionalSpec;
  lo?: number;
  hi?: number;
  confidence?: number;
}

export interface CreateSessionBody {
  design: DesignSpec;
  prior: PriorSpec;
  policy: PolicySpec;
  stopping_rule: StoppingRuleSpec;
  seed: number;
}

// ------------------------------------------------------------ session state

export interface PosteriorSummary {
  mode: [number, number, number];
  sd: [number, number, number];
}

export interface SessionSummary {
  id: string;
  trials: number;
  pending_stimulus: number | null;
  stopped: string | null;
  draw_counter: number;
  digest: string;
  design: DesignSpec;
  prior: PriorSpec;
  policy: PolicySpec;
  stopping_rule: StoppingRuleSpec;
  posterior: PosteriorSummary;
  created_at: string;
  updated_at: string;
}

export interface CostCurve {
  /** [stimulus level, expected information] pairs in grid order. */
  points: [number, number][];
  chosen: number;
}

export interface NextResponse {
  x: number;
  cost_curve: CostCurve;
  state: SessionSummary;
}

// ------------------------------------------------------------ estimate report

export interface IntervalPair {
  quantile_95: [number, number];
  hessian_95: [number, number];
}

export interface ReparamEntry extends IntervalPair {
  mode: number;
  mean: number;
  sd: number;
}

export interface NaturalEntry {
  mode: number;
  mean: number;
  quantile_95: [number, number];
}

export interface FunctionalEntry {
  mean: number;
  sd: number;
  quantile_95: [number, number];
  dropped: number;
  level?: number;
  margin?: number;
}

export interface PredictedCurve {
  x: number[];
  quantiles: Record<string, number[]>;
}

export interface EstimateReport {
  trials: number;
  stopped: string | null;
  entropy_nats: number;
  reparameterized: { mu: ReparamEntry; nu: ReparamEntry; eta: ReparamEntry };
  natural: { mu: NaturalEntry; sigma: NaturalEntry; lambda: NaturalEntry };
  functionals: {
    threshold: FunctionalEntry | null;
    width: FunctionalEntry | null;
    slope: FunctionalEntry | null;
  };
  predicted_curve: PredictedCurve;
  report_seed: number;
  sample_count: number;
}

// ------------------------------------------------------------ diagnostics

/** Draws of the response function on a shared x grid, one row per draw. */
export interface FunctionDraws {
  x: number[];
  curves: number[][];
  thresholds: (number | null)[];
  quantile_grid: Record<string, number[]>;
}

export interface SliceGrid {
  density: number[][];
  [axis: string]: number[] | number[][];
}

/** Trial triplets are [trial index (1-based), stimulus level, response]. */
export type TrialTriplet = [number, number, number];

export interface PpcPanel {
  real: TrialTriplet[];
  replicates: TrialTriplet[][];
}

export interface DiagnosticsResponse {
  proposed_x: number;
  cost_curve: CostCurve;
  posterior_slices: Record<string, SliceGrid>;
  prior_function_draws: FunctionDraws;
  posterior_function_draws: FunctionDraws;
  prior_response_contours: Record<string, number[]>;
  ppc: PpcPanel | null;
}

export interface PreviewBody {
  prior: PriorSpec;
  design: DesignSpec;
  draws: number;
  seed: number;
}

export interface ApiError {
  error?: string;
  detail?: string;
}
