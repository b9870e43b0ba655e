"""Stimulus selection by expected information gain, plus stopping rules.

Two placement criteria share one mechanism: score every candidate level by
the mutual information between the next response and either the full
parameter vector (psi_information) or a scalar functional of it
(t_information), then pick the maximizer over a grid that is iteratively
shrunk around the incumbent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import xlogy

from .bayes import (
    FunctionalSamples,
    LaplacePosterior,
    SampleSet,
    functional_samples,
    posterior_entropy_gaussian,
    psi_sample_matrix,
    sample_laplace,
)
from .density import kde_entropy, kde_fit
from .errors import AllZeroInformation, DegenerateVariance, DomainError
from .psychometric import Design, Functional, Width

__all__ = [
    "ESTIMATOR_GAUSSIAN",
    "ESTIMATOR_KDE",
    "StimulusGrid",
    "PsiPolicy",
    "TPolicy",
    "PlacementPolicy",
    "CostCurve",
    "FixedTrials",
    "EntropyBelow",
    "ProbabilityWithin",
    "StoppingRule",
    "bernoulli_entropy",
    "psi_information",
    "t_information",
    "select_next",
    "should_stop",
    "multi_threshold_policy",
]

ESTIMATOR_GAUSSIAN = "gaussian_moments"
ESTIMATOR_KDE = "kde_nonparametric"

_VAR_FLOOR = 1e-12
_ZERO_INFO = 1e-12
_HALF_LOG_2PIE = 0.5 * (math.log(2.0 * math.pi) + 1.0)


@dataclass(frozen=True)
class StimulusGrid:
    """Candidate levels plus the refinement schedule applied around the incumbent."""

    levels: tuple[float, ...]
    refine_rounds: int = 2
    refine_shrink: float = 0.2

    def __post_init__(self) -> None:
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise DomainError("stimulus grid needs at least 2 levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError("stimulus grid levels must be strictly increasing")
        if self.refine_rounds < 0:
            raise DomainError("refine_rounds must be >= 0")
        if not (0.0 < self.refine_shrink < 1.0):
            raise DomainError("refine_shrink must lie in (0, 1)")

    @classmethod
    def over(cls, d: Design, points: int = 45, refine_rounds: int = 2, refine_shrink: float = 0.2) -> "StimulusGrid":
        return cls(
            levels=tuple(np.linspace(d.x_lo, d.x_hi, points)),
            refine_rounds=refine_rounds,
            refine_shrink=refine_shrink,
        )

    @property
    def spacing(self) -> float:
        return (self.levels[-1] - self.levels[0]) / (len(self.levels) - 1)


@dataclass(frozen=True)
class PsiPolicy:
    """Place to learn the whole parameter vector."""

    grid: StimulusGrid
    sample_count: int = 5000
    approximate: bool = False

    def __post_init__(self) -> None:
        if self.sample_count < 100:
            raise DomainError("sample_count must be >= 100")


@dataclass(frozen=True)
class TPolicy:
    """Place to learn one scalar functional of the parameters."""

    functional: Functional
    grid: StimulusGrid
    estimator: str = ESTIMATOR_GAUSSIAN
    sample_count: int = 5000

    def __post_init__(self) -> None:
        if self.sample_count < 100:
            raise DomainError("sample_count must be >= 100")
        if self.estimator not in (ESTIMATOR_GAUSSIAN, ESTIMATOR_KDE):
            raise DomainError(f"unknown estimator {self.estimator!r}")


PlacementPolicy = Union[PsiPolicy, TPolicy]


@dataclass(frozen=True, eq=False)
class CostCurve:
    """Information value per candidate level; chosen indexes the maximizer."""

    levels: np.ndarray
    values: np.ndarray
    chosen: int

    def __post_init__(self) -> None:
        levels = np.asarray(self.levels, dtype=float)
        values = np.asarray(self.values, dtype=float)
        levels.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "values", values)


def bernoulli_entropy(p):
    """h(p) = -p ln p - (1-p) ln(1-p), elementwise, with h(0) = h(1) = 0."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("probability outside [0, 1]")
    h = -xlogy(p, p) - xlogy(1.0 - p, 1.0 - p)
    return float(h) if h.ndim == 0 else h


def _psi_mi_curve(p_mat: np.ndarray, w: np.ndarray) -> np.ndarray:
    """h(mean response prob) - mean(h(response prob)) at each column of p_mat."""
    p_bar = w @ p_mat
    return bernoulli_entropy(p_bar) - w @ bernoulli_entropy(p_mat)


def psi_information(x, s: SampleSet, d: Design):
    """Expected information (nats) the next response carries about theta."""
    p_mat = psi_sample_matrix(x, s, d)
    out = _psi_mi_curve(p_mat, s.weights)
    return float(out[0]) if np.ndim(x) == 0 else out


def _functional_values(s: SampleSet, f: Functional, d: Design) -> tuple[np.ndarray, SampleSet]:
    """Functional draws (width log-transformed) and the sample set they align with."""
    fs: FunctionalSamples = functional_samples(s, f, d)
    if fs.kept is not None:
        sub = SampleSet(samples=s.samples[fs.kept], weights=s.weights[fs.kept])
    else:
        sub = s
    vals = fs.values
    if isinstance(f, Width):
        vals = np.log(vals)
    return vals, sub


def _gaussian_entropy_vec(v: np.ndarray) -> np.ndarray:
    return _HALF_LOG_2PIE + 0.5 * np.log(v)


def _t_mi_curve_gaussian(p_mat: np.ndarray, w: np.ndarray, f: np.ndarray) -> np.ndarray:
    """H_gauss(Var f) - sum_r p(r) H_gauss(Var f | r), exact probability weighting."""
    mean_u = float(w @ f)
    fc = f - mean_u
    var_u = float(w @ (fc * fc))
    m = p_mat.shape[1]
    if var_u < _VAR_FLOOR:
        return np.zeros(m)

    p1 = w @ p_mat
    p0 = 1.0 - p1
    s1 = (w * fc) @ p_mat
    s2 = (w * fc * fc) @ p_mat
    m1 = s1 / p1
    v1 = s2 / p1 - m1 * m1
    m0 = -s1 / p0
    v0 = (var_u - s2) / p0 - m0 * m0
    if np.any(v1 < _VAR_FLOOR) or np.any(v0 < _VAR_FLOOR):
        raise DegenerateVariance(
            "a conditional variance of the functional collapsed below 1e-12"
        )
    return (
        _gaussian_entropy_vec(np.full(m, var_u))
        - p1 * _gaussian_entropy_vec(v1)
        - p0 * _gaussian_entropy_vec(v0)
    )


def _t_mi_curve_kde(p_mat: np.ndarray, w: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Same decomposition with KDE entropies in place of Gaussian ones."""
    mean_u = float(w @ f)
    fc = f - mean_u
    var_u = float(w @ (fc * fc))
    m = p_mat.shape[1]
    if var_u < _VAR_FLOOR:
        return np.zeros(m)

    h_u = kde_entropy(kde_fit(f, weights=w))
    out = np.empty(m)
    for j in range(m):
        p = p_mat[:, j]
        p1 = float(w @ p)
        p0 = 1.0 - p1
        w1 = w * p
        w0 = w * (1.0 - p)
        for wc in (w1, w0):
            tot = wc.sum()
            mc = float(wc @ f) / tot
            vc = float(wc @ ((f - mc) ** 2)) / tot
            if vc < _VAR_FLOOR:
                raise DegenerateVariance(
                    "a conditional variance of the functional collapsed below 1e-12"
                )
        h1 = kde_entropy(kde_fit(f, weights=w1))
        h0 = kde_entropy(kde_fit(f, weights=w0))
        out[j] = h_u - p1 * h1 - p0 * h0
    return out


def t_information(
    x, s: SampleSet, f: Functional, d: Design, estimator: str = ESTIMATOR_GAUSSIAN
):
    """Expected information (nats) the next response carries about f(theta)."""
    vals, sub = _functional_values(s, f, d)
    p_mat = psi_sample_matrix(x, sub, d)
    if estimator == ESTIMATOR_GAUSSIAN:
        out = _t_mi_curve_gaussian(p_mat, sub.weights, vals)
    elif estimator == ESTIMATOR_KDE:
        out = _t_mi_curve_kde(p_mat, sub.weights, vals)
    else:
        raise DomainError(f"unknown estimator {estimator!r}")
    return float(out[0]) if np.ndim(x) == 0 else out


def select_next(
    policy: PlacementPolicy, lp: LaplacePosterior, d: Design, seed
) -> tuple[float, CostCurve]:
    """Choose the next stimulus level by maximizing the policy's information.

    One batch of posterior samples is drawn up front and shared by every
    grid evaluation and refinement round (common random numbers), so the
    cost curve is smooth in x and the selection is deterministic given the
    seed. Each refinement round re-centers a grid of the same size on the
    incumbent with spacing shrunk by refine_shrink.
    """
    grid = policy.grid
    levels = np.asarray(grid.levels, dtype=float)
    if levels[0] < d.x_lo - 1e-9 or levels[-1] > d.x_hi + 1e-9:
        raise DomainError("placement grid extends outside the design's stimulus domain")

    s = sample_laplace(lp, policy.sample_count, seed)
    if isinstance(policy, TPolicy):
        f_vals, sub = _functional_values(s, policy.functional, d)
        weights = sub.weights
        if policy.estimator == ESTIMATOR_GAUSSIAN:
            def curve(lv: np.ndarray) -> np.ndarray:
                return _t_mi_curve_gaussian(psi_sample_matrix(lv, sub, d), weights, f_vals)
        else:
            def curve(lv: np.ndarray) -> np.ndarray:
                return _t_mi_curve_kde(psi_sample_matrix(lv, sub, d), weights, f_vals)
    else:
        sub = s

        def curve(lv: np.ndarray) -> np.ndarray:
            return _psi_mi_curve(psi_sample_matrix(lv, sub, d), sub.weights)

    values = curve(levels)
    if float(values.max()) < _ZERO_INFO:
        warnings.warn(
            "information is numerically zero at every candidate level",
            AllZeroInformation,
            stacklevel=2,
        )
        mid = d.midpoint
        chosen = int(np.argmin(np.abs(levels - mid)))
        return mid, CostCurve(levels=levels, values=values, chosen=chosen)

    chosen = int(np.argmax(values))
    center = float(levels[chosen])
    npts = levels.size
    spacing = grid.spacing
    offsets = np.arange(npts) - (npts - 1) / 2.0
    for _ in range(grid.refine_rounds):
        spacing *= grid.refine_shrink
        half = spacing * (npts - 1) / 2.0
        if d.x_lo + half >= d.x_hi - half:
            levels = np.linspace(d.x_lo, d.x_hi, npts)
            spacing = (d.x_hi - d.x_lo) / (npts - 1)
        else:
            center = min(max(center, d.x_lo + half), d.x_hi - half)
            levels = center + spacing * offsets
        values = curve(levels)
        chosen = int(np.argmax(values))
        center = float(levels[chosen])

    return center, CostCurve(levels=levels, values=values, chosen=chosen)


@dataclass(frozen=True)
class FixedTrials:
    """Stop after a fixed number of responded trials."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 1:
            raise DomainError("trial count must be >= 1")


@dataclass(frozen=True)
class EntropyBelow:
    """Stop once the Gaussian posterior entropy (nats) drops below threshold."""

    threshold: float


@dataclass(frozen=True)
class ProbabilityWithin:
    """Stop once P(lo <= f(theta) <= hi) reaches the confidence level."""

    functional: Functional
    lo: float
    hi: float
    confidence: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise DomainError("require lo < hi")
        if not (0.0 < self.confidence < 1.0):
            raise DomainError("confidence must lie in (0, 1)")


StoppingRule = Union[FixedTrials, EntropyBelow, ProbabilityWithin]


def should_stop(
    rule: StoppingRule,
    lp: LaplacePosterior,
    s: SampleSet,
    trial_count: int,
    d: Design,
) -> bool:
    """Evaluate a stopping rule against the current posterior."""
    if isinstance(rule, FixedTrials):
        return trial_count >= rule.count
    if isinstance(rule, EntropyBelow):
        return posterior_entropy_gaussian(lp) < rule.threshold
    if isinstance(rule, ProbabilityWithin):
        fs = functional_samples(s, rule.functional, d)
        inside = (fs.values >= rule.lo) & (fs.values <= rule.hi)
        return float(fs.weights[inside].sum()) >= rule.confidence
    raise DomainError(f"unknown stopping rule {rule!r}")


def multi_threshold_policy(
    levels, grid: StimulusGrid, sample_count: int = 5000
) -> PsiPolicy:
    """Policy for learning several thresholds at once.

    Three or more thresholds pin down the whole function, so placing for the
    full parameter vector is exact; with exactly two the same policy is
    returned flagged as an approximation. A single threshold is rejected:
    use a TPolicy for that.
    """
    levels = tuple(float(v) for v in levels)
    if len(levels) < 2:
        raise DomainError("need at least 2 target levels; use TPolicy for one threshold")
    if len(set(levels)) != len(levels):
        raise DomainError("target levels must be distinct")
    if any(not (0.0 < v < 1.0) for v in levels):
        raise DomainError("target levels must lie in (0, 1)")
    return PsiPolicy(grid=grid, sample_count=sample_count, approximate=(len(levels) == 2))
