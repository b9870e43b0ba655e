"""Adaptive Bayesian estimation of psychometric functions.

The pieces compose in layers: psychometric defines the curve family and its
functionals; bayes fits posteriors (Laplace plus importance resampling and a
brute-force grid oracle); density holds the entropy estimators; placement
scores candidate stimuli by expected information; simlab simulates observers
and runs Monte-Carlo studies; session/server/cli wrap the loop for real use.
"""

from .bayes import (
    Dataset,
    FunctionalSamples,
    GaussianPrior,
    GridPosterior,
    GridSpec,
    LaplacePosterior,
    SampleSet,
    TrialRecord,
    as_generator,
    functional_samples,
    grid_posterior_oracle,
    importance_resample,
    laplace_fit,
    log_likelihood,
    log_likelihood_and_grad,
    log_posterior_and_grad,
    log_posterior_unnorm,
    marginalize_lapse,
    posterior_entropy_gaussian,
    posterior_predictive_simulate,
    posterior_response_quantiles,
    predicted_response_prob,
    prior_to_laplace,
    psi_sample_matrix,
    sample_laplace,
    weighted_quantile,
)
from .density import (
    Histogram,
    Kde,
    gaussian_entropy,
    histogram_fit,
    histogram_mi,
    kde_density,
    kde_entropy,
    kde_fit,
    sturges_bins,
)
from .errors import (
    AllIdentical,
    AllZeroInformation,
    AlreadyPending,
    CorruptFile,
    DegenerateFunctional,
    DegenerateVariance,
    DegenerateWeights,
    DomainError,
    GridTooCoarse,
    LogFloorApplied,
    NoPendingStimulus,
    NonConvergence,
    NonPositiveDefiniteHessian,
    OutOfRange,
    PsyadaptError,
    QuadratureFailure,
    SchemaVersionMismatch,
    SessionStopped,
)
from .optimize import MaximizeResult, maximize
from .placement import (
    ESTIMATOR_GAUSSIAN,
    ESTIMATOR_KDE,
    CostCurve,
    EntropyBelow,
    FixedTrials,
    PlacementPolicy,
    ProbabilityWithin,
    PsiPolicy,
    StimulusGrid,
    StoppingRule,
    TPolicy,
    bernoulli_entropy,
    multi_threshold_policy,
    psi_information,
    select_next,
    should_stop,
    t_information,
)
from .psychometric import (
    Custom,
    Design,
    ForcedChoice,
    Functional,
    Params,
    Slope,
    Task,
    Threshold,
    WeibullParams,
    Width,
    YesNo,
    evaluate_functional,
    params_from_natural,
    params_to_natural,
    psi,
    psi_inverse,
    psi_pair,
    psi_range,
    psi_weibull,
)
from .session import (
    SCHEMA_VERSION,
    SessionState,
    cost_curve_digest,
    session_create,
    session_digest,
    session_estimate,
    session_load,
    session_next,
    session_record_estimate,
    session_replay,
    session_respond,
    session_save,
)
from .simlab import (
    SPREADS,
    AdaptiveScheme,
    ConstantStimuli,
    DriftingGaussianObserver,
    GaussianObserver,
    MseReport,
    MseRow,
    PpcResult,
    PpcRun,
    SamplingScheme,
    SimulatedObserver,
    StudyConfig,
    UniformInterval,
    WeibullObserver,
    load_study_config,
    match_weibull,
    observer_prob,
    observer_respond,
    ppc_dataset,
    ppc_late_block_check,
    propagate_weibull_shapes,
    robustness_study,
    run_study,
    run_study_detailed,
    run_study_multi,
    scheme_levels,
    weibull_shape_prior,
)

__version__ = "0.1.0"
