"""Probit regression under the unit-information g-prior.

Covers the likelihood, the prior, maximum likelihood by Fisher scoring, the
truncated-normal latent-variable completion driving the data-augmentation
Gibbs sampler, and the predictive-probability summary used by the
likelihood-free run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .core import MvnParams, RngStream, sample_mvn, truncated_normal_vector
from .model import BayesModel, LatentCompletion

__all__ = [
    "ProbitModel",
    "NonConvergenceError",
    "probit_loglik",
    "probit_loglik_many",
    "gprior_logpdf",
    "gprior_logpdf_many",
    "probit_mle",
    "sample_gprior",
    "probit_latent_completion",
    "probit_abc_summary",
    "probit_bayes_model",
]

_LOG2PI = np.log(2.0 * np.pi)


class NonConvergenceError(RuntimeError):
    """Fisher scoring failed to converge (typically complete separation)."""


@dataclass(frozen=True)
class ProbitModel:
    """Design matrix, binary response and the g-prior scale (g = n).

    The prior is beta ~ N(0, g * (X'X)^{-1}); with g = n its information is
    that of a single observation.  X'X must be invertible, checked here.
    """

    design: np.ndarray
    response: np.ndarray
    prior_scale: float = None  # defaults to n
    xtx: np.ndarray = field(init=False, repr=False, compare=False)
    _prior_chol: np.ndarray = field(init=False, repr=False, compare=False)
    _prior_logdet: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.design, dtype=float))
        y = np.asarray(self.response)
        object.__setattr__(self, "design", X)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("design and response lengths differ")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("response entries must be 0 or 1")
        object.__setattr__(self, "response", y.astype(float))
        if self.prior_scale is None:
            object.__setattr__(self, "prior_scale", float(X.shape[0]))
        xtx = X.T @ X
        object.__setattr__(self, "xtx", xtx)
        try:
            chol = np.linalg.cholesky(xtx)
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError("X'X is singular; g-prior undefined")
        object.__setattr__(self, "_prior_chol", chol)
        # log|g (X'X)^{-1}| = p log g - log|X'X|
        logdet_xtx = 2.0 * np.sum(np.log(np.diag(chol)))
        p = X.shape[1]
        object.__setattr__(self, "_prior_logdet", p * np.log(self.prior_scale) - logdet_xtx)

    @property
    def n_obs(self) -> int:
        return self.design.shape[0]

    @property
    def dimension(self) -> int:
        return self.design.shape[1]

    def prior_covariance(self) -> np.ndarray:
        return self.prior_scale * np.linalg.inv(self.xtx)


def probit_loglik(model: ProbitModel, beta) -> float:
    """Bernoulli log-likelihood with success probability Phi(x'beta).

    Accumulated through the log-CDF so that deep-tail observations do not
    underflow.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (model.dimension,):
        raise ValueError(f"beta has length {beta.shape}, expected {model.dimension}")
    eta = model.design @ beta
    y = model.response
    return float(np.sum(y * special.log_ndtr(eta) + (1.0 - y) * special.log_ndtr(-eta)))


def probit_loglik_many(model: ProbitModel, betas: np.ndarray) -> np.ndarray:
    """Log-likelihood for each row of `betas` (vectorised bulk path)."""
    eta = model.design @ np.asarray(betas, dtype=float).T  # (n, m)
    y = model.response[:, None]
    return np.sum(y * special.log_ndtr(eta) + (1.0 - y) * special.log_ndtr(-eta), axis=0)


def gprior_logpdf(model: ProbitModel, beta) -> float:
    """Exact N(0, g (X'X)^{-1}) log-density at beta."""
    beta = np.asarray(beta, dtype=float)
    quad = np.sum((model._prior_chol.T @ beta) ** 2) / model.prior_scale
    return float(-0.5 * (model.dimension * _LOG2PI + model._prior_logdet + quad))


def gprior_logpdf_many(model: ProbitModel, betas: np.ndarray) -> np.ndarray:
    z = np.asarray(betas, dtype=float) @ model._prior_chol  # (m, p)
    quad = np.sum(z * z, axis=1) / model.prior_scale
    return -0.5 * (model.dimension * _LOG2PI + model._prior_logdet + quad)


def sample_gprior(model: ProbitModel, n: int, rng: RngStream) -> np.ndarray:
    """n draws from the g-prior, rows are coefficient vectors."""
    params = MvnParams(np.zeros(model.dimension), model.prior_covariance())
    z = rng.standard_normal((n, model.dimension))
    return z @ params.scale.T


def probit_mle(model: ProbitModel, tol: float = 1e-10, max_iter: int = 50):
    """Maximum likelihood by Fisher scoring with step-halving.

    Returns (beta_hat, cov_hat) where cov_hat is the inverse Fisher
    information at beta_hat (the covariance standard software reports).
    Raises NonConvergenceError when the iteration diverges, which is the
    symptom of complete separation in the data.
    """
    X, y = model.design, model.response
    beta = np.zeros(model.dimension)
    ll = probit_loglik(model, beta)
    for iteration in range(1, max_iter + 1):
        eta = X @ beta
        phi = np.exp(-0.5 * eta * eta) / np.sqrt(2.0 * np.pi)
        big = special.ndtr(eta)
        small = special.ndtr(-eta)
        denom = np.clip(big * small, 1e-300, None)
        score_terms = phi * (y - big) / denom
        grad = X.T @ score_terms
        # the gradient is a length-n sum, so its attainable accuracy scales
        # with the magnitude of the objective; an absolute test stalls at
        # the rounding noise floor on larger datasets
        if np.max(np.abs(grad)) < tol * (1.0 + abs(ll)):
            if ll > -1e-8:
                # a perfect fit is complete separation: the true supremum
                # sits at infinity and the gradient only vanished by underflow
                raise NonConvergenceError(
                    "perfect fit reached: data are completely separated")
            w = phi * phi / denom
            info = X.T @ (w[:, None] * X)
            return beta, np.linalg.inv(info)
        w = phi * phi / denom
        info = X.T @ (w[:, None] * X)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise NonConvergenceError(f"singular information matrix at iteration {iteration}")
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            cand_ll = probit_loglik(model, cand)
            if cand_ll >= ll or not np.isfinite(ll):
                break
            scale *= 0.5
        beta = beta + scale * step
        ll = cand_ll
        if np.linalg.norm(beta) > 1e8:
            raise NonConvergenceError(
                f"coefficients diverging at iteration {iteration}: likely complete separation"
            )
    raise NonConvergenceError(f"no convergence after {max_iter} Fisher scoring iterations")


def probit_latent_completion(model: ProbitModel) -> LatentCompletion:
    """Truncated-normal completion of the probit posterior.

    Latents z_i ~ N(x_i'beta, 1) constrained to the side given by y_i; the
    parameter conditional given z is the exact multivariate normal
    N(s (X'X)^{-1} X'z, s (X'X)^{-1}) with s = g / (g + 1), whose normalised
    log-density is exposed for posterior-ordinate evidence estimation.
    """
    X = model.design
    g = model.prior_scale
    shrink = g / (g + 1.0)
    xtx_inv = np.linalg.inv(model.xtx)
    cond_cov = shrink * xtx_inv
    proj = shrink * (xtx_inv @ X.T)  # mean map z -> beta
    cond = MvnParams(np.zeros(model.dimension), cond_cov)
    cond_logdet = 2.0 * np.sum(np.log(np.diag(cond.scale)))
    positive = model.response == 1

    def sample_latents(beta, rng):
        return truncated_normal_vector(X @ np.asarray(beta, float), positive, rng)

    def sample_params(z, rng):
        mean = proj @ np.asarray(z, float)
        return sample_mvn(MvnParams(mean, cond_cov), rng)

    def log_full_conditional_param(beta, z):
        resid = np.asarray(beta, float) - proj @ np.asarray(z, float)
        u = np.linalg.solve(cond.scale, resid)
        return float(-0.5 * (model.dimension * _LOG2PI + cond_logdet + u @ u))

    return LatentCompletion(sample_latents, sample_params, log_full_conditional_param)


def probit_abc_summary(model: ProbitModel, beta) -> np.ndarray:
    """Predictive success probabilities (Phi(x_i'beta))_i, the summary the
    likelihood-free run compares against the same map at the MLE."""
    return special.ndtr(model.design @ np.asarray(beta, dtype=float))


def probit_bayes_model(model: ProbitModel) -> BayesModel:
    """Close the probit posterior over its data as a sampler-facing target."""
    params = MvnParams(np.zeros(model.dimension), model.prior_covariance())

    def sample_prior(rng):
        return sample_mvn(params, rng)

    return BayesModel(
        dimension=model.dimension,
        log_prior=lambda b: gprior_logpdf(model, b),
        log_likelihood=lambda b: probit_loglik(model, b),
        sample_prior=sample_prior,
    )
