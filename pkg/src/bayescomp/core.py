"""Seedable random streams and shared numerical primitives.

Everything downstream (samplers, estimators, ABC) draws randomness through
:class:`RngStream` and normalises weights through :func:`log_sum_exp`, so the
determinism and numerical-stability guarantees live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "RngStream",
    "MvnParams",
    "DegenerateWeightsError",
    "normal_cdf",
    "normal_logcdf",
    "sample_truncated_normal",
    "truncated_normal_vector",
    "sample_mvn",
    "sample_categorical",
    "log_sum_exp",
]

_U64 = 0xFFFFFFFFFFFFFFFF


class DegenerateWeightsError(ValueError):
    """All weights are zero (log-weights all -inf)."""


@dataclass
class RngStream:
    """Deterministic random stream keyed by (seed, stream_id).

    Streams are backed by the counter-based Philox generator: the 128-bit
    Philox key is (seed, stream_id), so distinct stream ids give statistically
    independent streams without any seed arithmetic.  A stream is single-owner:
    drawing advances the internal counter.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.seed <= _U64) or not (0 <= self.stream_id <= _U64):
            raise ValueError("seed and stream_id must fit in 64 bits")
        key = (self.seed << 64) | self.stream_id
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    @property
    def counter(self) -> tuple:
        """Current Philox counter (position in the stream)."""
        return tuple(self._gen.bit_generator.state["state"]["counter"])

    def uniform(self, size=None):
        return self._gen.random(size)

    def standard_normal(self, size=None):
        return self._gen.standard_normal(size)

    def child(self, index: int) -> "RngStream":
        """Independent stream for worker/particle `index` of this stream.

        Derived by hashing (stream_id, index) through SplitMix64 so nested
        splits never collide with plain consecutive stream ids.
        """
        x = (self.stream_id ^ (0x9E3779B97F4A7C15 * (index + 1))) & _U64
        x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _U64
        return RngStream(self.seed, x ^ (x >> 31))


@dataclass(frozen=True)
class MvnParams:
    """Mean and PSD covariance of a multivariate normal, validated upfront.

    Factorization happens at construction; a covariance that is not symmetric
    (to 1e-12 relative) or not PSD (eigenvalue below -1e-12 * max diagonal)
    is rejected here, never at draw time.
    """

    mean: np.ndarray
    covariance: np.ndarray
    scale: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        p = mean.shape[0]
        if cov.shape != (p, p):
            raise ValueError(f"covariance shape {cov.shape} does not match mean length {p}")
        scale_ref = np.max(np.abs(cov)) if cov.size else 0.0
        if scale_ref > 0 and np.max(np.abs(cov - cov.T)) > 1e-12 * scale_ref:
            raise ValueError("covariance is not symmetric to 1e-12 relative tolerance")
        object.__setattr__(self, "scale", _psd_factor(cov))

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular-ish factor L with L @ L.T = cov, tolerating PSD rank
    deficiency (tolerance 1e-12 * max diagonal)."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    eigval, eigvec = np.linalg.eigh(cov)
    tol = 1e-12 * max(np.max(np.diag(cov)), 1.0)
    if np.min(eigval) < -tol:
        raise np.linalg.LinAlgError(
            f"covariance is not PSD: min eigenvalue {np.min(eigval):.3e}"
        )
    return eigvec * np.sqrt(np.clip(eigval, 0.0, None))


def normal_cdf(x):
    """Standard normal CDF (erf-based, absolute error below 1e-12)."""
    return special.ndtr(x)


def normal_logcdf(x):
    """log of the standard normal CDF; stays accurate deep in the left tail.

    Products of hundreds of CDF terms (probit likelihoods) must accumulate in
    log domain, so this is the path likelihood code should use.
    """
    return special.log_ndtr(x)


def log_sum_exp(v) -> float:
    """log(sum(exp(v))) with max subtraction; -inf on all-(-inf) input."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return -np.inf
    m = np.max(v)
    if m == -np.inf:
        return -np.inf
    if not np.isfinite(m):
        return m
    return float(m + np.log(np.sum(np.exp(v - m))))


def _truncated_std_lower(a: np.ndarray, rng: RngStream) -> np.ndarray:
    """Standard normal conditioned on being > a, elementwise.

    Inverse CDF through the survival function for a <= 5; Robert's
    exponential-proposal rejection beyond that (acceptance > 0.95, so the
    retry loop terminates with overwhelming probability; a hard cap guards
    the pathological case).
    """
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    moderate = a <= 5.0
    if np.any(moderate):
        am = a[moderate]
        u = 1.0 - rng.uniform(am.shape)  # in (0, 1]
        out[moderate] = -special.ndtri(u * special.ndtr(-am))
    tail = ~moderate
    if np.any(tail):
        at = a[tail]
        lam = 0.5 * (at + np.sqrt(at * at + 4.0))
        x = np.empty_like(at)
        todo = np.ones(at.shape, dtype=bool)
        for _ in range(1000):
            n = int(np.count_nonzero(todo))
            if n == 0:
                break
            e = rng.generator.standard_exponential(n)
            cand = at[todo] + e / lam[todo]
            accept = np.log(1.0 - rng.uniform(n)) <= -0.5 * (cand - lam[todo]) ** 2
            idx = np.flatnonzero(todo)[accept]
            x[idx] = cand[accept]
            todo[idx] = False
        else:
            raise RuntimeError("tail rejection failed to terminate")
        out[tail] = x
    return out


def sample_truncated_normal(mu: float, sigma: float, side: str, rng: RngStream) -> float:
    """Exact draw from N(mu, sigma^2) restricted to one side of zero.

    side "positive" constrains the draw to (0, inf), "negative" to (-inf, 0).
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if side == "positive":
        a = -mu / sigma
        return float(mu + sigma * _truncated_std_lower(np.asarray([a]), rng)[0])
    if side == "negative":
        a = mu / sigma
        return float(mu - sigma * _truncated_std_lower(np.asarray([a]), rng)[0])
    raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")


def truncated_normal_vector(mu: np.ndarray, positive: np.ndarray, rng: RngStream) -> np.ndarray:
    """Vector of unit-variance truncated normal draws, one per mean.

    Entry i is N(mu_i, 1) conditioned positive where `positive[i]`, negative
    otherwise.  This is the bulk path used by latent-variable Gibbs sweeps.
    """
    mu = np.asarray(mu, dtype=float)
    positive = np.asarray(positive, dtype=bool)
    sign = np.where(positive, 1.0, -1.0)
    # sign * draw is a standard normal shifted by sign*mu, truncated above -sign*mu
    return sign * (sign * mu + _truncated_std_lower(-sign * mu, rng))


def sample_mvn(params: MvnParams, rng: RngStream) -> np.ndarray:
    """One draw from the validated multivariate normal."""
    z = rng.standard_normal(params.dimension)
    return params.mean + params.scale @ z


def sample_mvn_many(params: MvnParams, n: int, rng: RngStream) -> np.ndarray:
    """n draws, rows are samples."""
    z = rng.standard_normal((n, params.dimension))
    return params.mean + z @ params.scale.T


def sample_categorical(log_weights, rng: RngStream) -> int:
    """Index i with probability proportional to exp(log_weights[i])."""
    return int(sample_categorical_many(log_weights, 1, rng)[0])


def sample_categorical_many(log_weights, n: int, rng: RngStream) -> np.ndarray:
    """n independent categorical draws (normalisation done in log domain)."""
    lw = np.asarray(log_weights, dtype=float)
    total = log_sum_exp(lw)
    if total == -np.inf:
        raise DegenerateWeightsError("all categorical weights are zero")
    w = np.exp(lw - total)
    cum = np.cumsum(w)
    cum[-1] = 1.0
    u = rng.uniform(n)
    return np.searchsorted(cum, u, side="right")
