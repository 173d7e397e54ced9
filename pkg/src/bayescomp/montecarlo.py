"""Crude Monte Carlo, importance sampling and resampling.

The weighted sample (points plus unnormalised log-weights) is the common
currency here and in the population and likelihood-free samplers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DegenerateWeightsError,
    MvnParams,
    RngStream,
    log_sum_exp,
    sample_categorical_many,
    sample_mvn,
    sample_mvn_many,
)

__all__ = [
    "WeightedSample",
    "EstimateReport",
    "GaussianProposal",
    "mc_estimate",
    "importance_sample",
    "snis_estimate",
    "ess",
    "sir_resample",
]

_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class WeightedSample:
    """Particles with unnormalised log-weights."""

    points: np.ndarray  # (N, p)
    log_weights: np.ndarray  # (N,)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        lw = np.asarray(self.log_weights, dtype=float)
        if pts.shape[0] != lw.shape[0]:
            raise ValueError("points and log_weights lengths differ")
        if not np.any(lw > -np.inf):
            raise DegenerateWeightsError("no finite log-weight in sample")
        if np.any(np.isnan(lw)):
            raise ValueError("NaN log-weight")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "log_weights", lw)

    def __len__(self):
        return self.points.shape[0]

    def normalized_weights(self) -> np.ndarray:
        return np.exp(self.log_weights - log_sum_exp(self.log_weights))


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with its Monte Carlo error and sample-quality numbers."""

    value: float
    std_error: float
    ess: float
    n_draws: int
    degenerate: bool = False


@dataclass(frozen=True)
class GaussianProposal:
    """Normalised multivariate normal proposal usable wherever the samplers
    expect a (logpdf, draw) pair."""

    params: MvnParams
    _logdet: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        d = np.diag(self.params.scale)
        if np.any(d <= 0):
            raise ValueError("proposal covariance must be positive definite")
        object.__setattr__(self, "_logdet", 2.0 * float(np.sum(np.log(d))))

    @classmethod
    def from_moments(cls, mean, cov, scale: float = 1.0) -> "GaussianProposal":
        return cls(MvnParams(np.asarray(mean, float), scale * np.asarray(cov, float)))

    def logpdf(self, theta) -> float:
        return float(self.logpdf_many(np.atleast_2d(np.asarray(theta, float)))[0])

    def logpdf_many(self, thetas: np.ndarray) -> np.ndarray:
        resid = np.atleast_2d(thetas) - self.params.mean
        u = np.linalg.solve(self.params.scale, resid.T)
        p = self.params.dimension
        return -0.5 * (p * _LOG2PI + self._logdet + np.sum(u * u, axis=0))

    def draw(self, rng: RngStream) -> np.ndarray:
        return sample_mvn(self.params, rng)

    def draw_many(self, n: int, rng: RngStream) -> np.ndarray:
        return sample_mvn_many(self.params, n, rng)


def mc_estimate(h, draws) -> EstimateReport:
    """Plain Monte Carlo average of h over (assumed posterior) draws, with
    the CLT standard error sd/sqrt(N)."""
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    n = draws.shape[0]
    if n == 0:
        raise ValueError("draws must be nonempty")
    values = np.asarray([float(h(d)) for d in draws])
    value = float(np.mean(values))
    se = float(np.std(values, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return EstimateReport(value=value, std_error=se, ess=float(n), n_draws=n)


def importance_sample(target_logpdf, proposal_logpdf, proposal_draw, n_draws: int,
                      rng: RngStream, vectorized: bool = False) -> WeightedSample:
    """Draw from the proposal and attach log-weights target - proposal.

    The target may be unnormalised.  With `vectorized=True` the callables
    must accept/produce (N, p) arrays: target_logpdf(points) -> (N,) and
    proposal_draw(n, rng) -> (N, p); proposal_logpdf likewise.
    """
    if vectorized:
        pts = np.atleast_2d(proposal_draw(n_draws, rng))
        lq = np.asarray(proposal_logpdf(pts), dtype=float)
        lt = np.asarray(target_logpdf(pts), dtype=float)
    else:
        pts, lq, lt = [], [], []
        for _ in range(n_draws):
            theta = np.atleast_1d(np.asarray(proposal_draw(rng), dtype=float))
            pts.append(theta)
            lq.append(float(proposal_logpdf(theta)))
            lt.append(float(target_logpdf(theta)))
        pts = np.asarray(pts)
        lq = np.asarray(lq)
        lt = np.asarray(lt)
    if np.any(lq == -np.inf):
        raise RuntimeError("proposal density is zero at one of its own draws")
    return WeightedSample(points=pts, log_weights=lt - lq)


def ess(ws: WeightedSample) -> float:
    """Effective sample size 1 / sum of squared normalised weights: N for
    uniform weights, 1 for a completely degenerate sample."""
    w = ws.normalized_weights()
    return float(1.0 / np.sum(w * w))


def snis_estimate(h, ws: WeightedSample) -> EstimateReport:
    """Self-normalised importance-sampling estimate of E[h] under the target.

    The standard error is the delta-method weighted variance
    sqrt(sum w_i^2 (h_i - est)^2); the sample's effective size is attached.
    """
    w = ws.normalized_weights()
    values = np.asarray([float(h(x)) for x in ws.points])
    value = float(np.sum(w * values))
    se = float(np.sqrt(np.sum(w * w * (values - value) ** 2)))
    sample_ess = float(1.0 / np.sum(w * w))
    degenerate = int(np.sum(ws.log_weights > -np.inf)) == 1
    return EstimateReport(value=value, std_error=se, ess=sample_ess,
                          n_draws=len(ws), degenerate=degenerate)


def sir_resample(ws: WeightedSample, m: int, rng: RngStream) -> np.ndarray:
    """Multinomial resampling: m equally-weighted points drawn with
    probabilities given by the normalised weights.  Degenerate weights give
    m copies of the single surviving point, with a warning."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if int(np.sum(ws.log_weights > -np.inf)) == 1:
        warnings.warn("degenerate weights: resample is copies of one point",
                      RuntimeWarning)
    idx = sample_categorical_many(ws.log_weights, m, rng)
    return ws.points[idx]
