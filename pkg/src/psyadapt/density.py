"""Entropy and mutual-information estimators.

Three routes with different bias/variance trade-offs: the closed-form
Gaussian entropy, a histogram plug-in for mutual information with a binary
variable, and a Gaussian-kernel KDE whose entropy is integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import AllIdentical, DomainError, QuadratureFailure

__all__ = [
    "Kde",
    "Histogram",
    "gaussian_entropy",
    "kde_fit",
    "kde_density",
    "kde_entropy",
    "histogram_fit",
    "histogram_mi",
    "sturges_bins",
]

_HALF_LOG_2PIE = 0.5 * (math.log(2.0 * math.pi) + 1.0)


def gaussian_entropy(variance: float) -> float:
    """Entropy in nats of a Gaussian with the given variance: 0.5 ln(2 pi e v)."""
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance!r}")
    return _HALF_LOG_2PIE + 0.5 * math.log(variance)


@dataclass(frozen=True, eq=False)
class Kde:
    """Weighted Gaussian-kernel density estimate on the real line."""

    points: np.ndarray
    weights: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if self.bandwidth <= 0 or not math.isfinite(self.bandwidth):
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth!r}")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def mean(self) -> float:
        return float(self.weights @ self.points)

    @property
    def effective_sd(self) -> float:
        centered = self.points - self.mean
        return math.sqrt(float(self.weights @ (centered * centered)) + self.bandwidth**2)


_WEIGHT_FLOOR = 1e-12


def kde_fit(samples, weights=None, bandwidth_rule="silverman") -> Kde:
    """Fit a Gaussian-kernel KDE; bandwidth by Silverman's rule or a fixed number.

    Silverman uses the weighted sd and the effective sample size
    (sum w)^2 / sum w^2, so heavily down-weighted points do not inflate n.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("KDE needs at least 2 sample points")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        if w.shape != x.shape or np.any(w < 0) or not np.isfinite(w).all():
            raise DomainError("weights must be nonnegative, finite, one per sample")
        total = w.sum()
        if total <= 0:
            raise DomainError("weights must not all be zero")
        w = w / total

    live = w > _WEIGHT_FLOOR
    spread = np.ptp(x[live]) if live.any() else 0.0
    mean = float(w @ x)
    var = float(w @ ((x - mean) ** 2))
    if spread == 0.0 or var < _WEIGHT_FLOOR**2:
        raise AllIdentical("all effectively weighted sample points coincide")

    if bandwidth_rule == "silverman":
        n_eff = float(w.sum() ** 2 / (w @ w))
        bandwidth = 1.06 * math.sqrt(var) * n_eff ** (-0.2)
    elif isinstance(bandwidth_rule, (int, float)) and bandwidth_rule > 0:
        bandwidth = float(bandwidth_rule)
    else:
        raise DomainError(f"unknown bandwidth rule {bandwidth_rule!r}")
    return Kde(points=x, weights=w, bandwidth=bandwidth)


_CHUNK = 4096


def kde_density(k: Kde, x) -> np.ndarray:
    """Evaluate the KDE at x; plain O(m n) sum, chunked to bound memory."""
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xv.size)
    inv_t = 1.0 / k.bandwidth
    norm = inv_t / math.sqrt(2.0 * math.pi)
    for start in range(0, xv.size, _CHUNK):
        sl = slice(start, min(start + _CHUNK, xv.size))
        z = (xv[sl, None] - k.points[None, :]) * inv_t
        out[sl] = (np.exp(-0.5 * z * z) @ k.weights) * norm
    return out if np.ndim(x) else float(out[0])


_ENTROPY_TOL = 1e-4
_MAX_PANELS = 1 << 15


def kde_entropy(k: Kde) -> float:
    """-integral of f ln f by composite Simpson with interval doubling.

    Integrates over mean +- 8 effective sd, doubling the panel count until
    two successive estimates agree within 1e-4 nats.
    """
    lo = k.mean - 8.0 * k.effective_sd
    hi = k.mean + 8.0 * k.effective_sd

    def estimate(panels: int) -> float:
        grid = np.linspace(lo, hi, panels + 1)
        f = kde_density(k, grid)
        integrand = -xlogy(f, f)
        h = (hi - lo) / panels
        odd = integrand[1:-1:2].sum()
        even = integrand[2:-1:2].sum()
        return h / 3.0 * (integrand[0] + integrand[-1] + 4.0 * odd + 2.0 * even)

    panels = 256
    prev = estimate(panels)
    while panels < _MAX_PANELS:
        panels *= 2
        cur = estimate(panels)
        if abs(cur - prev) < _ENTROPY_TOL:
            return float(cur)
        prev = cur
    raise QuadratureFailure(
        f"entropy quadrature did not converge to {_ENTROPY_TOL} nats by {_MAX_PANELS} panels"
    )


@dataclass(frozen=True, eq=False)
class Histogram:
    """Equal-width histogram with normalized bin masses."""

    edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if abs(masses.sum() - 1.0) > 1e-12:
            raise DomainError("histogram masses must sum to 1 within 1e-12")
        edges.setflags(write=False)
        masses.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)


def sturges_bins(n: int) -> int:
    """Sturges' rule: ceil(log2 n) + 1 bins."""
    if n < 1:
        raise DomainError("sample count must be >= 1")
    return int(math.ceil(math.log2(n))) + 1 if n > 1 else 1


def histogram_fit(samples, bin_count: int | None = None, weights=None) -> Histogram:
    """Equal-width histogram over the sample range; Sturges bins by default."""
    x = np.asarray(samples, dtype=float).ravel()
    if bin_count is None:
        bin_count = sturges_bins(x.size)
    if bin_count < 2:
        raise DomainError(f"bin count must be >= 2, got {bin_count!r}")
    masses, edges = np.histogram(x, bins=bin_count, weights=weights)
    masses = masses.astype(float)
    return Histogram(edges=edges, masses=masses / masses.sum())


def histogram_mi(
    cont_samples, bin_count: int | None, binary_prob_given, weights=None, edges=None
) -> float:
    """Plug-in mutual information between a binned real variable and a binary one.

    binary_prob_given[i] is p(r=1) for sample i; the joint table is the
    weighted average of those probabilities per bin. Bin edges default to
    equal width over the sample range but may be supplied directly (e.g.
    transformed alongside a monotone transform of the samples). Nonnegative
    by construction (it is a KL divergence of the plug-in joint).
    """
    x = np.asarray(cont_samples, dtype=float).ravel()
    p1 = np.asarray(binary_prob_given, dtype=float).ravel()
    if x.shape != p1.shape:
        raise DomainError("need one binary probability per sample")
    if np.any((p1 < 0) | (p1 > 1)):
        raise DomainError("binary probabilities must lie in [0, 1]")
    if weights is None:
        w = np.full(x.size, 1.0 / x.size)
    else:
        w = np.asarray(weights, dtype=float).ravel()
        w = w / w.sum()

    if edges is None:
        if bin_count is None:
            bin_count = sturges_bins(x.size)
        if bin_count < 2:
            raise DomainError(f"bin count must be >= 2, got {bin_count!r}")
        edges = np.linspace(x.min(), x.max(), bin_count + 1)
    else:
        edges = np.asarray(edges, dtype=float).ravel()
        bin_count = edges.size - 1
        if bin_count < 2:
            raise DomainError("need at least 2 bins worth of edges")
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bin_count - 1)
    joint = np.zeros((bin_count, 2))
    np.add.at(joint[:, 1], idx, w * p1)
    np.add.at(joint[:, 0], idx, w * (1.0 - p1))
    joint /= joint.sum()

    px = joint.sum(axis=1)
    pr = joint.sum(axis=0)
    outer = px[:, None] * pr[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, joint / np.where(outer > 0, outer, 1.0), 1.0)
        mi = float(np.sum(xlogy(joint, ratio)))
    return max(mi, 0.0)
