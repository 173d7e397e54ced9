"""Contracts decoupling samplers from concrete models.

A sampler only ever sees a log-prior, a log-likelihood and a dimension;
latent-variable and simulation-based algorithms get their own small
contracts.  Densities are handled in log domain end to end and every
out-of-support evaluation maps to -inf, never to an exception or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import RngStream

__all__ = ["BayesModel", "LatentCompletion", "SimulableModel", "log_posterior"]


@dataclass(frozen=True)
class BayesModel:
    """Unnormalised posterior target: log-prior + log-likelihood + dimension.

    Data is captured at construction so samplers see a closed unary target.
    `sample_prior` is optional; estimators that need prior draws (prior Monte
    Carlo Bayes factors, ABC) require it.
    """

    dimension: int
    log_prior: Callable[[np.ndarray], float]
    log_likelihood: Callable[[np.ndarray], float]
    sample_prior: Optional[Callable[[RngStream], np.ndarray]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")


@dataclass(frozen=True)
class LatentCompletion:
    """Two-block data augmentation of a model.

    `log_full_conditional_param` must be the *normalised* log-density of the
    parameter given the latents (constant included): marginal-likelihood
    estimation via the posterior-ordinate identity depends on it.
    """

    sample_latents: Callable[[np.ndarray, RngStream], np.ndarray]
    sample_params: Callable[[np.ndarray, RngStream], np.ndarray]
    log_full_conditional_param: Callable[[np.ndarray, np.ndarray], float]


@dataclass(frozen=True)
class SimulableModel:
    """Model usable without likelihood evaluations: prior draws, forward
    simulation and a summary statistic.  `log_prior` backs the weight and
    acceptance-ratio computations of the likelihood-free samplers."""

    sample_prior: Callable[[RngStream], np.ndarray]
    simulate: Callable[[np.ndarray, RngStream], np.ndarray]
    summary: Callable[[np.ndarray], np.ndarray]
    log_prior: Optional[Callable[[np.ndarray], float]] = None


def log_posterior(model: BayesModel, theta) -> float:
    """log prior + log likelihood; -inf propagates without evaluating the
    likelihood outside the prior support."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (model.dimension,):
        raise ValueError(
            f"theta has shape {theta.shape}, model dimension is {model.dimension}"
        )
    lp = float(model.log_prior(theta))
    if lp == -np.inf:
        return -np.inf
    ll = float(model.log_likelihood(theta))
    if np.isnan(lp) or np.isnan(ll):
        raise FloatingPointError("model returned NaN; out-of-support must map to -inf")
    return lp + ll
