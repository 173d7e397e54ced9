"""Two-component normal mixture target with known weight and variance.

The unknowns are the two component means; the posterior is multimodal, with
a spurious secondary mode at the label-swapped means, which makes it the
standard illustration of random-walk chains getting trapped by a too-small
proposal scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, log_sum_exp
from .model import BayesModel

__all__ = ["MixtureTarget", "mixture_logpost", "simulate_mixture_data", "mixture_bayes_model"]

_LOG2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class MixtureTarget:
    """Data and fixed mixture weight/variance; prior on each mean is
    N(0, 10 * sigma2)."""

    data: np.ndarray
    weight: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))
        if not 0.0 < self.weight < 1.0:
            raise ValueError("weight must lie in (0, 1)")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")

    @property
    def prior_var(self) -> float:
        return 10.0 * self.sigma2


def _norm_logpdf(x, mean, var):
    return -0.5 * (_LOG2PI + np.log(var) + (x - mean) ** 2 / var)


def mixture_logpost(target: MixtureTarget, mu) -> float:
    """Unnormalised log-posterior of the pair of component means."""
    mu1, mu2 = float(mu[0]), float(mu[1])
    y = target.data
    a = np.log(target.weight) + _norm_logpdf(y, mu1, target.sigma2)
    b = np.log1p(-target.weight) + _norm_logpdf(y, mu2, target.sigma2)
    loglik = float(np.sum(np.logaddexp(a, b)))
    logprior = _norm_logpdf(mu1, 0.0, target.prior_var) + _norm_logpdf(mu2, 0.0, target.prior_var)
    return loglik + float(logprior)


def simulate_mixture_data(mu1: float, mu2: float, weight: float, sigma2: float,
                          n: int, rng: RngStream) -> np.ndarray:
    """n draws from weight*N(mu1, sigma2) + (1-weight)*N(mu2, sigma2)."""
    pick = rng.uniform(n) < weight
    means = np.where(pick, mu1, mu2)
    return means + np.sqrt(sigma2) * rng.standard_normal(n)


def mixture_bayes_model(target: MixtureTarget) -> BayesModel:
    def log_prior(mu):
        return float(_norm_logpdf(mu[0], 0.0, target.prior_var)
                     + _norm_logpdf(mu[1], 0.0, target.prior_var))

    def log_likelihood(mu):
        return mixture_logpost(target, mu) - log_prior(mu)

    def sample_prior(rng):
        return np.sqrt(target.prior_var) * rng.standard_normal(2)

    return BayesModel(2, log_prior, log_likelihood, sample_prior)
