"""Prior, likelihood, Laplace posterior, sampling, and posterior summaries.

The posterior over (mu, nu, eta) is approximated by a Gaussian centered at
the mode of the unnormalized log posterior with covariance equal to the
inverse negative Hessian there. Everything downstream (stimulus placement,
functionals, predictive checks) consumes weighted parameter samples, so the
approximation is also the sampling proposal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp, ndtr, ndtri

from .errors import (
    DegenerateFunctional,
    DegenerateWeights,
    DomainError,
    GridTooCoarse,
    LogFloorApplied,
    NonConvergence,
    NonPositiveDefiniteHessian,
    OutOfRange,
)
from .optimize import maximize
from .psychometric import (
    Design,
    ForcedChoice,
    Functional,
    Params,
    Slope,
    Threshold,
    Width,
    evaluate_functional,
    psi_arrays,
)

__all__ = [
    "GaussianPrior",
    "TrialRecord",
    "Dataset",
    "LaplacePosterior",
    "SampleSet",
    "FunctionalSamples",
    "GridSpec",
    "GridPosterior",
    "as_generator",
    "log_likelihood",
    "log_likelihood_and_grad",
    "log_posterior_unnorm",
    "log_posterior_and_grad",
    "laplace_fit",
    "prior_to_laplace",
    "sample_laplace",
    "importance_resample",
    "marginalize_lapse",
    "posterior_entropy_gaussian",
    "predicted_response_prob",
    "functional_samples",
    "weighted_quantile",
    "posterior_response_quantiles",
    "posterior_predictive_simulate",
    "grid_posterior_oracle",
]

_LOG_FLOOR = 1e-300
_LOG_2PI = math.log(2.0 * math.pi)


def as_generator(seed) -> np.random.Generator:
    """Coerce an int, tuple of ints, SeedSequence, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class GaussianPrior:
    """Independent Gaussian prior on (mu, nu, eta)."""

    mean: tuple[float, float, float]
    sd: tuple[float, float, float]

    def __post_init__(self) -> None:
        if len(self.mean) != 3 or len(self.sd) != 3:
            raise DomainError("prior mean and sd must each have 3 components")
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        object.__setattr__(self, "sd", tuple(float(v) for v in self.sd))
        if not all(math.isfinite(v) for v in self.mean):
            raise DomainError(f"prior mean must be finite, got {self.mean}")
        if not all(math.isfinite(v) and v > 0 for v in self.sd):
            raise DomainError(f"prior sd components must be positive, got {self.sd}")

    @property
    def mean_array(self) -> np.ndarray:
        return np.array(self.mean, dtype=float)

    @property
    def sd_array(self) -> np.ndarray:
        return np.array(self.sd, dtype=float)

    def mean_params(self) -> Params:
        return Params(*self.mean)

    def log_density(self, par: Params) -> float:
        u = (np.array([par.mu, par.nu, par.eta]) - self.mean_array) / self.sd_array
        return float(
            -0.5 * float(u @ u) - float(np.log(self.sd_array).sum()) - 1.5 * _LOG_2PI
        )


@dataclass(frozen=True)
class TrialRecord:
    """One presented stimulus and its binary outcome (1 = success)."""

    x: float
    r: int
    index: int

    def __post_init__(self) -> None:
        if self.r not in (0, 1):
            raise DomainError(f"response must be 0 or 1, got {self.r!r}")
        if self.index < 1:
            raise DomainError(f"trial index must be >= 1, got {self.index!r}")
        if not math.isfinite(self.x):
            raise DomainError(f"stimulus level must be finite, got {self.x!r}")


@dataclass(frozen=True)
class Dataset:
    """Ordered trial log bound to the design it was collected under."""

    trials: tuple[TrialRecord, ...]
    design: Design

    def __post_init__(self) -> None:
        object.__setattr__(self, "trials", tuple(self.trials))
        for i, t in enumerate(self.trials, start=1):
            if t.index != i:
                raise DomainError(f"trial indices must run 1..n, found {t.index} at position {i}")
            if not (self.design.x_lo <= t.x <= self.design.x_hi):
                raise DomainError(
                    f"trial {i} stimulus {t.x} outside domain [{self.design.x_lo}, {self.design.x_hi}]"
                )

    @classmethod
    def from_arrays(cls, xs: Sequence[float], rs: Sequence[int], design: Design) -> "Dataset":
        trials = tuple(
            TrialRecord(x=float(x), r=int(r), index=i + 1) for i, (x, r) in enumerate(zip(xs, rs))
        )
        return cls(trials=trials, design=design)

    def append(self, x: float, r: int) -> "Dataset":
        rec = TrialRecord(x=float(x), r=int(r), index=len(self.trials) + 1)
        return Dataset(trials=self.trials + (rec,), design=self.design)

    @cached_property
    def xs(self) -> np.ndarray:
        a = np.array([t.x for t in self.trials], dtype=float)
        a.setflags(write=False)
        return a

    @cached_property
    def rs(self) -> np.ndarray:
        a = np.array([t.r for t in self.trials], dtype=float)
        a.setflags(write=False)
        return a

    def __len__(self) -> int:
        return len(self.trials)


@dataclass(frozen=True, eq=False)
class LaplacePosterior:
    """Gaussian posterior approximation: mode, covariance, and the log height."""

    mode: Params
    covariance: np.ndarray
    log_posterior_at_mode: float

    def __post_init__(self) -> None:
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (3, 3):
            raise DomainError(f"covariance must be 3x3, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise DomainError("covariance must be symmetric within 1e-10")
        cov = 0.5 * (cov + cov.T)
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise NonPositiveDefiniteHessian(
                "posterior covariance is not positive definite"
            ) from exc
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    @property
    def mode_array(self) -> np.ndarray:
        return np.array([self.mode.mu, self.mode.nu, self.mode.eta], dtype=float)

    @property
    def standard_deviations(self) -> np.ndarray:
        return np.sqrt(np.diag(self.covariance))


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Weighted parameter samples: the common currency of every cost function."""

    samples: np.ndarray
    weights: np.ndarray | None = None
    components: tuple[str, ...] = ("mu", "nu", "eta")

    def __post_init__(self) -> None:
        samples = np.atleast_2d(np.array(self.samples, dtype=float))
        n, k = samples.shape
        if n < 1:
            raise DomainError("sample set must contain at least one sample")
        if k != len(self.components):
            raise DomainError(
                f"sample columns ({k}) must match components {self.components}"
            )
        if self.weights is None:
            weights = np.full(n, 1.0 / n)
        else:
            weights = np.array(self.weights, dtype=float)
            if weights.shape != (n,):
                raise DomainError("weights must be one per sample")
            if np.any(weights < 0) or not np.isfinite(weights).all():
                raise DomainError("weights must be finite and nonnegative")
            total = weights.sum()
            if total <= 0:
                raise DomainError("weights must not all be zero")
            weights = weights / total
        samples.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.components.index(name)
        except ValueError as exc:
            raise DomainError(f"no component {name!r} in {self.components}") from exc
        return self.samples[:, idx]

    def params_at(self, i: int) -> Params:
        if self.components != ("mu", "nu", "eta"):
            raise DomainError("params_at requires full (mu, nu, eta) samples")
        mu, nu, eta = self.samples[i]
        return Params(mu=float(mu), nu=float(nu), eta=float(eta))


def _require_full(s: SampleSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if s.components != ("mu", "nu", "eta"):
        raise DomainError("operation requires full (mu, nu, eta) samples")
    mu = s.samples[:, 0]
    sigma = np.exp(s.samples[:, 1])
    lam = 1.0 / (1.0 + np.exp(-s.samples[:, 2]))
    return mu, sigma, lam


def psi_sample_matrix(x, s: SampleSet, d: Design) -> np.ndarray:
    """Success probabilities, one row per sample, one column per level in x."""
    mu, sigma, lam = _require_full(s)
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    p, _ = psi_arrays(xv[None, :], mu[:, None], sigma[:, None], lam[:, None], d.task)
    return p


def log_likelihood(data: Dataset, par: Params) -> float:
    """Bernoulli log likelihood of the trial log under one parameter triple."""
    ll, _ = _loglik_core(data, par, want_grad=False)
    return ll


def log_likelihood_and_grad(data: Dataset, par: Params) -> tuple[float, np.ndarray]:
    """Log likelihood and its analytic gradient with respect to (mu, nu, eta)."""
    return _loglik_core(data, par, want_grad=True)


def _loglik_core(data: Dataset, par: Params, want_grad: bool) -> tuple[float, np.ndarray]:
    grad = np.zeros(3)
    if len(data) == 0:
        return 0.0, grad
    x, r = data.xs, data.rs
    # par may be a line-search trial point with extreme nu; math.exp would
    # overflow above ~709 and underflow to an exact 0 below ~-745
    sigma = math.exp(min(max(par.nu, -700.0), 700.0))
    lam = par.lam
    with np.errstate(over="ignore"):
        z = np.clip((x - par.mu) / sigma, -1e8, 1e8)
    p, q = psi_arrays(x, par.mu, sigma, lam, data.design.task)
    if np.any(p < _LOG_FLOOR) or np.any(q < _LOG_FLOOR):
        warnings.warn(
            "likelihood term hit probability 0/1; log clamped at 1e-300",
            LogFloorApplied,
            stacklevel=3,
        )
        p = np.maximum(p, _LOG_FLOOR)
        q = np.maximum(q, _LOG_FLOOR)
    ll = float(np.sum(np.where(r == 1.0, np.log(p), np.log(q))))
    if not want_grad:
        return ll, grad

    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    task = data.design.task
    if isinstance(task, ForcedChoice):
        g = task.gamma
        c = (1.0 - lam) * (1.0 - g)
        dp_mu = -c * pdf / sigma
        dp_nu = -c * pdf * z
        dp_eta = -(1.0 - g) * ndtr(z) * lam * (1.0 - lam)
    else:
        dp_mu = -(1.0 - lam) * pdf / sigma
        dp_nu = -(1.0 - lam) * pdf * z
        dp_eta = (0.5 - ndtr(z)) * lam * (1.0 - lam)
    coef = np.where(r == 1.0, 1.0 / p, -1.0 / q)
    grad = np.array(
        [float(coef @ dp_mu), float(coef @ dp_nu), float(coef @ dp_eta)]
    )
    return ll, grad


def log_posterior_unnorm(data: Dataset, prior: GaussianPrior, par: Params) -> float:
    """Log likelihood plus Gaussian log prior density (normalizing constant of p(y) excluded)."""
    return log_likelihood(data, par) + prior.log_density(par)


def log_posterior_and_grad(
    data: Dataset, prior: GaussianPrior, par: Params
) -> tuple[float, np.ndarray]:
    ll, grad = log_likelihood_and_grad(data, par)
    theta = np.array([par.mu, par.nu, par.eta])
    u = (theta - prior.mean_array) / prior.sd_array
    lp = ll - 0.5 * float(u @ u) - float(np.log(prior.sd_array).sum()) - 1.5 * _LOG_2PI
    return lp, grad - u / prior.sd_array


_FD_STEP = 1e-4
_GRAD_TOL = 1e-6


def laplace_fit(
    data: Dataset,
    prior: GaussianPrior,
    warm_start: Params | None = None,
    full_multistart: bool = True,
) -> LaplacePosterior:
    """Locate the posterior mode and fit a Gaussian there.

    The search runs in prior-standardized coordinates u = (theta - m) / s from
    the prior mean plus four deterministic perturbations (+-1 prior sd in mu
    and nu); a warm start, when given, joins the start list. Sequential
    refits that only feed stimulus placement may pass full_multistart=False
    to keep just the warm start and the prior mean.

    Raises NonConvergence when no start reaches gradient norm 1e-6 within the
    retry budget, and NonPositiveDefiniteHessian when the curvature at the
    located mode is not negative definite.
    """
    m = prior.mean_array
    s = prior.sd_array

    def value_and_grad(u: np.ndarray) -> tuple[float, np.ndarray]:
        par = Params(*(m + s * u))
        ll, gll = log_likelihood_and_grad(data, par)
        val = ll - 0.5 * float(u @ u)
        return val, s * gll - u

    starts: list[np.ndarray] = []
    if warm_start is not None:
        theta_w = np.array([warm_start.mu, warm_start.nu, warm_start.eta])
        starts.append((theta_w - m) / s)
    starts.append(np.zeros(3))
    if full_multistart:
        for j in (0, 1):
            for delta in (1.0, -1.0):
                e = np.zeros(3)
                e[j] = delta
                starts.append(e)

    best = None
    for u0 in starts:
        res = maximize(value_and_grad, u0, grad_tol=_GRAD_TOL, max_iter=200)
        if res.converged and (best is None or res.value > best.value):
            best = res
    if best is None:
        # retry budget: one longer run from the most promising start
        candidates = [maximize(value_and_grad, u0, grad_tol=_GRAD_TOL, max_iter=200) for u0 in starts]
        seed_pt = max(candidates, key=lambda r: r.value)
        res = maximize(value_and_grad, seed_pt.x, grad_tol=_GRAD_TOL, max_iter=2000)
        if not res.converged:
            raise NonConvergence(
                f"posterior mode search stalled (|grad| = {res.grad_norm:.3g})"
            )
        best = res

    u_star = best.x
    hess_u = _hessian_fd(value_and_grad, u_star)
    neg_h = -0.5 * (hess_u + hess_u.T)
    try:
        chol = np.linalg.cholesky(neg_h)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefiniteHessian(
            "negative Hessian at the mode is not positive definite"
        ) from exc
    inv_chol = np.linalg.inv(chol)
    cov_u = inv_chol.T @ inv_chol
    cov = cov_u * np.outer(s, s)
    cov = 0.5 * (cov + cov.T)

    theta_star = m + s * u_star
    log_height = best.value - float(np.log(s).sum()) - 1.5 * _LOG_2PI
    return LaplacePosterior(
        mode=Params(*theta_star), covariance=cov, log_posterior_at_mode=log_height
    )


def _hessian_fd(
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    u: np.ndarray,
    step: float = _FD_STEP,
) -> np.ndarray:
    h = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = step
        _, g_plus = value_and_grad(u + e)
        _, g_minus = value_and_grad(u - e)
        h[:, j] = (g_plus - g_minus) / (2.0 * step)
    return h


def prior_to_laplace(prior: GaussianPrior) -> LaplacePosterior:
    """The prior expressed as its own (exact) Gaussian approximation."""
    log_height = -float(np.log(prior.sd_array).sum()) - 1.5 * _LOG_2PI
    return LaplacePosterior(
        mode=prior.mean_params(),
        covariance=np.diag(prior.sd_array**2),
        log_posterior_at_mode=log_height,
    )


def sample_laplace(lp: LaplacePosterior, n: int, seed) -> SampleSet:
    """n independent draws from the Gaussian approximation; reproducible by seed."""
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n!r}")
    rng = as_generator(seed)
    chol = np.linalg.cholesky(lp.covariance)
    z = rng.standard_normal((n, 3))
    draws = lp.mode_array[None, :] + z @ chol.T
    return SampleSet(samples=draws)


def importance_resample(
    src: SampleSet,
    target_log_density: Callable[[Params], float],
    proposal_log_density: Callable[[Params], float],
    k: int,
    seed,
) -> SampleSet:
    """Weight src by target/proposal density ratios, then draw k without replacement."""
    n = src.n
    if not (1 <= k < n):
        raise DomainError(f"resample size must satisfy 1 <= k < n, got k={k}, n={n}")
    log_w = np.empty(n)
    for i in range(n):
        par = src.params_at(i)
        t = target_log_density(par)
        q = proposal_log_density(par)
        if not (math.isfinite(t) and math.isfinite(q)):
            raise DomainError(f"density returned non-finite log value at sample {i}")
        log_w[i] = t - q
    log_w = log_w + np.log(src.weights)
    log_w -= logsumexp(log_w)
    w = np.exp(log_w)
    if w.max() > 0.999:
        raise DegenerateWeights(
            f"one importance weight holds {w.max():.4%} of the mass; proposal does not cover target"
        )
    rng = as_generator(seed)
    idx = rng.choice(n, size=k, replace=False, p=w)
    return SampleSet(samples=src.samples[np.sort(idx)])


def marginalize_lapse(s: SampleSet) -> SampleSet:
    """Drop the eta component; the (mu, nu) rows keep their weights."""
    if "eta" not in s.components:
        raise DomainError("sample set has no eta component to marginalize")
    keep = [i for i, name in enumerate(s.components) if name != "eta"]
    return SampleSet(
        samples=s.samples[:, keep],
        weights=s.weights,
        components=tuple(name for name in s.components if name != "eta"),
    )


def posterior_entropy_gaussian(lp: LaplacePosterior) -> float:
    """Entropy (nats) of the Gaussian approximation: 0.5 ln((2 pi e)^3 det C)."""
    sign, logdet = np.linalg.slogdet(lp.covariance)
    if sign <= 0:
        raise NonPositiveDefiniteHessian("covariance determinant not positive")
    return 1.5 * (_LOG_2PI + 1.0) + 0.5 * float(logdet)


def predicted_response_prob(s: SampleSet, x, d: Design):
    """Posterior-averaged success probability at stimulus level(s) x."""
    p = psi_sample_matrix(x, s, d)
    out = s.weights @ p
    return float(out[0]) if np.ndim(x) == 0 else out


@dataclass(frozen=True, eq=False)
class FunctionalSamples:
    """Weighted draws from the posterior of a scalar functional.

    kept holds the source-sample indices that survived (None when all did),
    so callers can align these values with the parameter samples.
    """

    values: np.ndarray
    weights: np.ndarray
    dropped: int = 0
    kept: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)


_DROP_LIMIT = 0.01


def functional_samples(s: SampleSet, f: Functional, d: Design) -> FunctionalSamples:
    """Push every sample through the functional; these are draws from p(f | data).

    Samples where the functional is undefined (an unattainable threshold
    level under a high lapse draw) are dropped and counted; more than 1%
    dropped raises DegenerateFunctional.
    """
    mu, sigma, lam = _require_full(s)
    n = s.n
    if isinstance(f, Slope):
        return FunctionalSamples(values=-s.column("nu"), weights=s.weights)

    if isinstance(f, (Threshold, Width)):
        if isinstance(d.task, ForcedChoice):
            g = d.task.gamma
            floor, ceil = np.full(n, g), 1.0 - lam * (1.0 - g)
        else:
            floor, ceil = 0.5 * lam, 1.0 - 0.5 * lam

        def inverse(level) -> tuple[np.ndarray, np.ndarray]:
            ok = (level > floor) & (level < ceil)
            if isinstance(d.task, ForcedChoice):
                inner = (level - g) / ((1.0 - lam) * (1.0 - g))
            else:
                inner = (level - 0.5 * lam) / (1.0 - lam)
            vals = np.full(n, np.nan)
            vals[ok] = mu[ok] + sigma[ok] * ndtri(inner[ok])
            return vals, ok

        if isinstance(f, Threshold):
            vals, ok = inverse(f.level)
        else:
            hi_vals, hi_ok = inverse(1.0 - f.margin)
            lo_level = (d.task.gamma if isinstance(d.task, ForcedChoice) else 0.0) + f.margin
            lo_vals, lo_ok = inverse(lo_level)
            ok = hi_ok & lo_ok
            vals = hi_vals - lo_vals
    else:
        vals = np.full(n, np.nan)
        ok = np.zeros(n, dtype=bool)
        for i in range(n):
            try:
                vals[i] = evaluate_functional(f, s.params_at(i), d)
                ok[i] = True
            except (OutOfRange, DomainError):
                ok[i] = False

    dropped = int(n - ok.sum())
    if dropped > _DROP_LIMIT * n or dropped == n:
        raise DegenerateFunctional(
            f"functional undefined on {dropped}/{n} samples (limit {_DROP_LIMIT:.0%})"
        )
    if dropped == 0:
        return FunctionalSamples(values=vals, weights=s.weights)
    kept_w = s.weights[ok]
    return FunctionalSamples(
        values=vals[ok],
        weights=kept_w / kept_w.sum(),
        dropped=dropped,
        kept=np.flatnonzero(ok),
    )


def weighted_quantile(values: np.ndarray, weights: np.ndarray, probs) -> np.ndarray:
    """Weighted quantiles by linear interpolation of order statistics.

    Sorted values sit at cumulative positions (cumw - w/2) / sum(w), which
    reduces to the midpoint convention at even ties for uniform weights.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    probs = np.atleast_1d(np.asarray(probs, dtype=float))
    if np.any((probs <= 0) | (probs >= 1)):
        raise DomainError("quantile levels must lie strictly inside (0, 1)")
    order = np.argsort(values, kind="stable")
    v = values[order]
    w = weights[order]
    cum = np.cumsum(w)
    positions = (cum - 0.5 * w) / cum[-1]
    return np.interp(probs, positions, v)


def posterior_response_quantiles(
    s: SampleSet, x_grid, probs, d: Design
) -> np.ndarray:
    """Empirical quantiles of psi(x; theta) per x; one row per level, one column per prob."""
    p = psi_sample_matrix(x_grid, s, d)
    probs = np.atleast_1d(np.asarray(probs, dtype=float))
    out = np.empty((p.shape[1], probs.size))
    for j in range(p.shape[1]):
        out[j] = weighted_quantile(p[:, j], s.weights, probs)
    return out


def posterior_predictive_simulate(
    s: SampleSet, x_seq, m: int, seed, design: Design
) -> list[Dataset]:
    """m replicate datasets: one posterior draw each, Bernoulli responses at x_seq."""
    if m < 1:
        raise DomainError(f"replicate count must be >= 1, got {m!r}")
    rng = as_generator(seed)
    x_seq = np.asarray(x_seq, dtype=float)
    picks = rng.choice(s.n, size=m, p=s.weights)
    p_rows = psi_sample_matrix(x_seq, s, design)
    out = []
    for i in range(m):
        p = p_rows[picks[i]]
        r = (rng.random(x_seq.size) < p).astype(int)
        out.append(Dataset.from_arrays(x_seq, r, design))
    return out


@dataclass(frozen=True)
class GridSpec:
    """Cubic integration grid: points per axis, span in prior sd units."""

    points_per_axis: int = 61
    span_sd: float = 4.0
    refine_check: bool = False
    refine_tol_sd: float = 0.01

    def __post_init__(self) -> None:
        if self.points_per_axis < 5:
            raise DomainError("grid needs at least 5 points per axis")
        if 2.0 * self.span_sd < 6.0:
            raise DomainError(
                f"grid must cover >= 6 prior sd per dimension, got span {2 * self.span_sd}"
            )


@dataclass(frozen=True, eq=False)
class GridPosterior:
    """Trapezoid-rule posterior over a cubic (mu, nu, eta) grid."""

    axes: tuple[np.ndarray, np.ndarray, np.ndarray]
    density: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray


def grid_posterior_oracle(
    data: Dataset, prior: GaussianPrior, grid: GridSpec | None = None
) -> GridPosterior:
    """Slow, direct numerical integration of the posterior; the reference answer.

    Used to validate the Laplace approximation: means and covariances come
    from trapezoid-rule quadrature over a prior-centered cube.
    """
    grid = grid or GridSpec()
    mean, cov, axes, density = _grid_moments(data, prior, grid.points_per_axis, grid.span_sd)
    if grid.refine_check:
        fine_n = 2 * grid.points_per_axis - 1
        mean_f, _, _, _ = _grid_moments(data, prior, fine_n, grid.span_sd)
        shift = np.abs(mean_f - mean) / prior.sd_array
        if np.any(shift > grid.refine_tol_sd):
            raise GridTooCoarse(
                f"grid refinement moved the mean by {shift.max():.3g} prior sd"
            )
        mean = mean_f
    return GridPosterior(axes=axes, density=density, mean=mean, covariance=cov)


def _grid_moments(
    data: Dataset, prior: GaussianPrior, n_axis: int, span_sd: float
) -> tuple[np.ndarray, np.ndarray, tuple[np.ndarray, ...], np.ndarray]:
    m, s = prior.mean_array, prior.sd_array
    axes = tuple(np.linspace(m[j] - span_sd * s[j], m[j] + span_sd * s[j], n_axis) for j in range(3))
    mu_ax, nu_ax, eta_ax = axes
    sigma_ax = np.exp(nu_ax)
    lam_ax = 1.0 / (1.0 + np.exp(-eta_ax))

    log_post = np.zeros((n_axis, n_axis, n_axis))
    for j, (axis, mj, sj) in enumerate(zip(axes, m, s)):
        u = (axis - mj) / sj
        shape = [1, 1, 1]
        shape[j] = n_axis
        log_post += (-0.5 * u * u - math.log(sj) - 0.5 * _LOG_2PI).reshape(shape)

    task = data.design.task
    for t in data.trials:
        z = (t.x - mu_ax[:, None]) / sigma_ax[None, :]
        phi = ndtr(z)
        phic = ndtr(-z)
        if isinstance(task, ForcedChoice):
            g = task.gamma
            p = g + (1.0 - lam_ax)[None, None, :] * (1.0 - g) * phi[:, :, None]
            q = (1.0 - g) * (phic[:, :, None] + lam_ax[None, None, :] * phi[:, :, None])
        else:
            p = (1.0 - lam_ax)[None, None, :] * phi[:, :, None] + 0.5 * lam_ax[None, None, :]
            q = (1.0 - lam_ax)[None, None, :] * phic[:, :, None] + 0.5 * lam_ax[None, None, :]
        term = np.log(np.maximum(p if t.r == 1 else q, _LOG_FLOOR))
        log_post += term

    log_post -= log_post.max()
    dens = np.exp(log_post)

    trap = []
    for axis in axes:
        w = np.full(axis.size, axis[1] - axis[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        trap.append(w)
    w3 = trap[0][:, None, None] * trap[1][None, :, None] * trap[2][None, None, :]
    mass = dens * w3
    z_total = mass.sum()
    if z_total <= 0:
        raise GridTooCoarse("posterior mass vanished on the grid")
    mass /= z_total

    grids = np.meshgrid(*axes, indexing="ij")
    mean = np.array([(mass * gi).sum() for gi in grids])
    cov = np.empty((3, 3))
    centered = [gi - mean[i] for i, gi in enumerate(grids)]
    for i in range(3):
        for j in range(i, 3):
            cov[i, j] = cov[j, i] = (mass * centered[i] * centered[j]).sum()
    return mean, cov, axes, dens / z_total
