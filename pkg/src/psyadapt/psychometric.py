"""Psychometric function families, parameterizations, and functionals.

The model is a cumulative-Gaussian psychometric function with a guess rate
fixed by the task design and a lapse rate shared across stimulus levels.
Parameters live in the unconstrained triple (mu, nu, eta) with sigma = exp(nu)
and lapse = logistic(eta), which keeps every point of R^3 a valid model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError, OutOfRange

__all__ = [
    "Params",
    "ForcedChoice",
    "YesNo",
    "Design",
    "WeibullParams",
    "Threshold",
    "Width",
    "Slope",
    "Custom",
    "Functional",
    "psi",
    "psi_pair",
    "psi_inverse",
    "psi_range",
    "psi_weibull",
    "evaluate_functional",
    "params_from_natural",
    "params_to_natural",
]


def _logistic(x: float) -> float:
    # exp overflow-safe on both tails
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class Params:
    """Location mu, log-spread nu = log(sigma), log-odds lapse eta = logit(lambda)."""

    mu: float
    nu: float
    eta: float

    def __post_init__(self) -> None:
        for name in ("mu", "nu", "eta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")

    @property
    def sigma(self) -> float:
        # capped: math.exp raises OverflowError above ~709 and optimizer
        # line searches may probe such points
        return math.exp(min(self.nu, 700.0))

    @property
    def lam(self) -> float:
        return _logistic(self.eta)


def params_from_natural(mu: float, sigma: float, lam: float) -> Params:
    """Build Params from the natural triple (mu, sigma, lambda)."""
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"sigma must be positive and finite, got {sigma!r}")
    if not (0.0 < lam < 1.0):
        raise DomainError(f"lambda must lie in (0, 1), got {lam!r}")
    return Params(mu=float(mu), nu=math.log(sigma), eta=_logit(lam))


def params_to_natural(p: Params) -> tuple[float, float, float]:
    """Return (mu, sigma, lambda) for a Params value."""
    return p.mu, p.sigma, p.lam


@dataclass(frozen=True)
class ForcedChoice:
    """n-alternative forced choice; gamma is the chance rate (0.5 for 2AFC)."""

    gamma: float

    def __post_init__(self) -> None:
        if not (0.0 < self.gamma < 1.0):
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma!r}")


@dataclass(frozen=True)
class YesNo:
    """Yes/No task: lapses are split evenly between the two responses."""


Task = Union[ForcedChoice, YesNo]


@dataclass(frozen=True)
class Design:
    """Task type plus the admissible stimulus interval [x_lo, x_hi]."""

    task: Task
    x_lo: float
    x_hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x_lo) and math.isfinite(self.x_hi)):
            raise DomainError("stimulus domain bounds must be finite")
        if not self.x_lo < self.x_hi:
            raise DomainError(
                f"stimulus domain requires x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.x_lo + self.x_hi)


@dataclass(frozen=True)
class WeibullParams:
    """Weibull scale alpha, shape beta, and shared lapse rate."""

    alpha: float
    beta: float
    lam: float

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        if not (0.0 <= self.lam < 1.0):
            raise DomainError(f"lambda must lie in [0, 1), got {self.lam!r}")


def psi_arrays(x, mu, sigma, lam, task: Task):
    """Vectorized success probability; inputs broadcast like numpy arrays.

    Returns (psi, 1 - psi) with the complement computed in a form that stays
    accurate when psi approaches its ceiling.
    """
    x = np.asarray(x, dtype=float)
    # optimizer line searches probe extreme nu; keep z finite instead of
    # letting exp-underflowed sigma turn into divide warnings
    sigma = np.clip(sigma, 1e-300, 1e300)
    with np.errstate(over="ignore"):
        z = np.clip((x - mu) / sigma, -1e8, 1e8)
    phi = ndtr(z)
    phic = ndtr(-z)
    if isinstance(task, ForcedChoice):
        g = task.gamma
        p = g + (1.0 - lam) * (1.0 - g) * phi
        q = (1.0 - g) * (phic + lam * phi)
    else:
        p = (1.0 - lam) * phi + 0.5 * lam
        q = (1.0 - lam) * phic + 0.5 * lam
    return p, q


def psi(x: float, p: Params, d: Design) -> float:
    """Probability of a success response at stimulus level x."""
    if not math.isfinite(x):
        raise DomainError(f"stimulus level must be finite, got {x!r}")
    val, _ = psi_arrays(x, p.mu, p.sigma, p.lam, d.task)
    return float(val)


def psi_pair(x, p: Params, d: Design):
    """(psi, 1 - psi) at stimulus level(s) x, both numerically stable."""
    return psi_arrays(x, p.mu, p.sigma, p.lam, d.task)


def psi_range(p: Params, d: Design) -> tuple[float, float]:
    """Open interval of attainable response probabilities (floor, ceiling)."""
    lam = p.lam
    if isinstance(d.task, ForcedChoice):
        g = d.task.gamma
        return g, 1.0 - lam * (1.0 - g)
    return 0.5 * lam, 1.0 - 0.5 * lam


def psi_inverse(prob: float, par: Params, d: Design) -> float:
    """Stimulus level at which psi equals prob; closed form via the normal quantile."""
    lo, hi = psi_range(par, d)
    if not (lo < prob < hi):
        raise OutOfRange(
            f"requested level {prob!r} outside attainable range ({lo:.6g}, {hi:.6g})"
        )
    lam = par.lam
    if isinstance(d.task, ForcedChoice):
        g = d.task.gamma
        inner = (prob - g) / ((1.0 - lam) * (1.0 - g))
    else:
        inner = (prob - 0.5 * lam) / (1.0 - lam)
    return par.mu + par.sigma * float(ndtri(inner))


def psi_weibull(x: float, w: WeibullParams, gamma: float) -> float:
    """Weibull-family success probability, guess rate gamma, shared lapse."""
    if np.any(np.asarray(x) < 0):
        raise DomainError(f"Weibull stimulus level must be >= 0, got {x!r}")
    if not (0.0 <= gamma < 1.0):
        raise DomainError(f"gamma must lie in [0, 1), got {gamma!r}")
    shape = 1.0 - np.exp(-np.power(np.asarray(x, dtype=float) / w.alpha, w.beta))
    val = (1.0 - w.lam) * (gamma + (1.0 - gamma) * shape) + w.lam * gamma
    return float(val) if np.ndim(x) == 0 else val


@dataclass(frozen=True)
class Threshold:
    """Stimulus level where psi reaches level (e.g. 0.75 in 2AFC)."""

    level: float

    def __post_init__(self) -> None:
        if not (0.0 < self.level < 1.0):
            raise DomainError(f"threshold level must lie in (0, 1), got {self.level!r}")


@dataclass(frozen=True)
class Width:
    """Distance between the (1 - margin) and lower-edge thresholds.

    For forced choice the lower edge is gamma + margin; for Yes/No it is
    margin itself.
    """

    margin: float

    def __post_init__(self) -> None:
        if not (0.0 < self.margin < 0.5):
            raise DomainError(f"width margin must lie in (0, 0.5), got {self.margin!r}")


@dataclass(frozen=True)
class Slope:
    """Slope summary -nu: larger means steeper."""


@dataclass(frozen=True)
class Custom:
    """Arbitrary real-valued map of the parameters."""

    fn: Callable[[Params], float]
    label: str = "custom"


Functional = Union[Threshold, Width, Slope, Custom]


def evaluate_functional(f: Functional, par: Params, d: Design) -> float:
    """Evaluate a scalar functional of the parameters under a design."""
    if isinstance(f, Threshold):
        return psi_inverse(f.level, par, d)
    if isinstance(f, Width):
        if isinstance(d.task, ForcedChoice):
            lo_level = d.task.gamma + f.margin
        else:
            lo_level = f.margin
        return psi_inverse(1.0 - f.margin, par, d) - psi_inverse(lo_level, par, d)
    if isinstance(f, Slope):
        return -par.nu
    if isinstance(f, Custom):
        out = f.fn(par)
        if not isinstance(out, (int, float)) or not math.isfinite(out):
            raise DomainError(f"custom functional returned non-finite value {out!r}")
        return float(out)
    raise DomainError(f"unknown functional {f!r}")
