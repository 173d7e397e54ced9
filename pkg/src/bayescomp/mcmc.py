"""Metropolis-Hastings, Gibbs and hybrid samplers with chain diagnostics.

A uniform is consumed on every acceptance test, including certain-accept
steps, so RNG stream positions stay aligned across proposal variants.  No
burn-in is discarded here; trimming is a post-processing concern.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import MvnParams, RngStream
from .model import BayesModel, log_posterior
from .probit import ProbitModel, probit_latent_completion, probit_mle

__all__ = [
    "Chain",
    "RwProposal",
    "mh_run",
    "rw_mh_run",
    "gibbs_run",
    "probit_gibbs_run",
    "mwg_probit_overparam_run",
    "chain_diagnostics",
]


@dataclass(frozen=True)
class Chain:
    """Ordered MCMC states with log-posterior values and acceptance counts."""

    states: np.ndarray  # (n_iter, p)
    log_posts: np.ndarray
    accept_count: int
    n_proposals: int
    proposal_meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.states.shape[0]

    @property
    def acceptance_rate(self) -> float:
        if self.n_proposals == 0:
            return float("nan")
        return self.accept_count / self.n_proposals


@dataclass(frozen=True)
class RwProposal:
    """Centered Gaussian random-walk increment; symmetric by construction."""

    covariance: np.ndarray
    scale: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "scale", MvnParams(np.zeros(cov.shape[0]), cov).scale)

    def draw(self, theta, rng: RngStream):
        return theta + self.scale @ rng.standard_normal(len(theta))

    def log_density(self, to, frm):  # symmetric: contributes nothing to the ratio
        return 0.0


def mh_run(target: BayesModel, proposal, theta0, n_iter: int, rng: RngStream) -> Chain:
    """Generic Metropolis-Hastings.

    `proposal` provides draw(theta, rng) and log_density(to, frm); the
    acceptance ratio is computed entirely in log domain, and a rejection
    repeats the exact previous state.
    """
    theta = np.atleast_1d(np.asarray(theta0, dtype=float))
    lp = log_posterior(target, theta)
    if lp == -np.inf:
        raise ValueError("theta0 outside the target support")
    states = np.empty((n_iter, theta.shape[0]))
    log_posts = np.empty(n_iter)
    accept = 0
    for t in range(n_iter):
        cand = np.atleast_1d(np.asarray(proposal.draw(theta, rng), dtype=float))
        if np.any(np.isnan(cand)):
            raise FloatingPointError("proposal returned NaN")
        lp_cand = log_posterior(target, cand)
        delta = lp_cand - lp
        if lp_cand > -np.inf:
            delta += proposal.log_density(theta, cand) - proposal.log_density(cand, theta)
        u = 1.0 - rng.uniform()  # in (0, 1]; drawn even on certain accepts
        if np.log(u) <= delta:
            theta, lp = cand, lp_cand
            accept += 1
        states[t] = theta
        log_posts[t] = lp
    return Chain(states, log_posts, accept, n_iter,
                 {"family": type(proposal).__name__})


def rw_mh_run(target: BayesModel, cov, theta0, n_iter: int, rng: RngStream) -> Chain:
    """Random-walk Metropolis with Gaussian increments (simplified ratio)."""
    proposal = cov if isinstance(cov, RwProposal) else RwProposal(cov)
    chain = mh_run(target, proposal, theta0, n_iter, rng)
    chain.proposal_meta["covariance"] = proposal.covariance
    return chain


def gibbs_run(conditionals, theta0, n_iter: int, rng: RngStream,
              log_post=None) -> Chain:
    """Systematic-scan Gibbs sampler.

    `conditionals` is an ordered list of (index_block, sampler) pairs where
    sampler(state, rng) returns new values for that block; one sweep updates
    every block in the listed order against the freshest state.  The blocks
    must partition the coordinates.
    """
    theta = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    p = theta.shape[0]
    seen = []
    for block, _ in conditionals:
        seen.extend(np.atleast_1d(block).tolist())
    if sorted(seen) != list(range(p)):
        raise ValueError(f"blocks {sorted(seen)} do not partition 0..{p - 1}")
    states = np.empty((n_iter, p))
    log_posts = np.full(n_iter, np.nan)
    for t in range(n_iter):
        for block, sampler in conditionals:
            theta[np.atleast_1d(block)] = sampler(theta, rng)
        states[t] = theta
        if log_post is not None:
            log_posts[t] = float(log_post(theta))
    return Chain(states, log_posts, 0, 0, {"family": "gibbs"})


def probit_gibbs_run(model: ProbitModel, n_iter: int, rng: RngStream,
                     keep_latents: bool = False):
    """Data-augmentation Gibbs for the probit posterior, started at the MLE.

    Each sweep draws the truncated-normal latents given beta, then beta from
    its exact normal conditional given the latents.  Returns (chain, latents)
    where latents is the (n_iter, n) array of auxiliary draws when
    `keep_latents`, else None; the latents feed the posterior-ordinate
    evidence estimator.
    """
    from .probit import gprior_logpdf, probit_loglik

    completion = probit_latent_completion(model)
    beta, _ = probit_mle(model)
    states = np.empty((n_iter, model.dimension))
    log_posts = np.empty(n_iter)
    latents = np.empty((n_iter, model.n_obs)) if keep_latents else None
    for t in range(n_iter):
        z = completion.sample_latents(beta, rng)
        beta = completion.sample_params(z, rng)
        states[t] = beta
        log_posts[t] = probit_loglik(model, beta) + gprior_logpdf(model, beta)
        if keep_latents:
            latents[t] = z
    chain = Chain(states, log_posts, 0, 0, {"family": "gibbs-data-augmentation"})
    return chain, latents


def mwg_probit_overparam_run(x, y, n_iter: int, rng: RngStream,
                             beta_step_var: float = 1.0,
                             logsigma_step_var: float = 0.04) -> Chain:
    """Metropolis-within-Gibbs for the overparameterised single-covariate
    probit (success probability Phi(x * beta / sigma)).

    The prior is sigma^{-4} exp(-1/sigma^2) exp(-beta^2/50); beta moves by a
    normal random walk and sigma^2 through a log-normal proposal on sigma
    (one inner step per block, which suffices for stationarity).
    `logsigma_step_var` is the variance of the log-sigma increment.
    """
    from scipy.special import log_ndtr

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def logpost(beta, sigma2):
        if sigma2 <= 0:
            return -np.inf
        eta = x * beta / np.sqrt(sigma2)
        ll = np.sum(y * log_ndtr(eta) + (1.0 - y) * log_ndtr(-eta))
        lp = -2.0 * np.log(sigma2) - 1.0 / sigma2 - beta**2 / 50.0
        return float(ll + lp)

    beta, sigma2 = 0.0, 1.0
    lp = logpost(beta, sigma2)
    states = np.empty((n_iter, 2))
    log_posts = np.empty(n_iter)
    acc_beta = acc_sigma = 0
    sd_beta = np.sqrt(beta_step_var)
    sd_logsigma = np.sqrt(logsigma_step_var)
    for t in range(n_iter):
        cand = beta + sd_beta * rng.standard_normal()
        lp_cand = logpost(cand, sigma2)
        if np.log(1.0 - rng.uniform()) <= lp_cand - lp:
            beta, lp = cand, lp_cand
            acc_beta += 1
        # log-normal proposal on sigma; in sigma^2 coordinates the proposal
        # ratio contributes log(sigma2_cand / sigma2)
        sigma2_cand = sigma2 * np.exp(2.0 * sd_logsigma * rng.standard_normal())
        lp_cand = logpost(beta, sigma2_cand)
        delta = lp_cand - lp + np.log(sigma2_cand / sigma2)
        if np.log(1.0 - rng.uniform()) <= delta:
            sigma2, lp = sigma2_cand, lp_cand
            acc_sigma += 1
        states[t] = (beta, sigma2)
        log_posts[t] = lp
    return Chain(states, log_posts, acc_beta + acc_sigma, 2 * n_iter,
                 {"family": "metropolis-within-gibbs",
                  "accept_rate_beta": acc_beta / n_iter,
                  "accept_rate_sigma2": acc_sigma / n_iter})


def _autocorrelations(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = x - np.mean(x)
    var = np.mean(x * x)
    if var == 0:
        return np.full(max_lag + 1, np.nan)
    n = len(x)
    acf = np.empty(max_lag + 1)
    for k in range(max_lag + 1):
        acf[k] = np.mean(x[: n - k] * x[k:]) / var
    return acf


def _iact(x: np.ndarray) -> float:
    """Integrated autocorrelation time by Geyer's initial-positive-sequence
    truncation."""
    n = len(x)
    acf = _autocorrelations(x, min(n - 2, 2 * int(np.sqrt(n)) + 50))
    if np.any(np.isnan(acf)):
        return np.inf
    total = 0.0
    k = 1
    while k + 1 < len(acf):
        pair = acf[k] + acf[k + 1]
        if pair <= 0:
            break
        total += pair
        k += 2
    return 1.0 + 2.0 * total


def chain_diagnostics(chain: Chain) -> dict:
    """Acceptance rate, autocorrelations to lag 50, integrated
    autocorrelation time and the resulting chain ESS, per coordinate."""
    states = np.atleast_2d(chain.states)
    n = states.shape[0]
    if n < 100:
        raise ValueError("need at least 100 states for diagnostics")
    acf = np.stack([_autocorrelations(states[:, j], 50) for j in range(states.shape[1])])
    iact = np.asarray([_iact(states[:, j]) for j in range(states.shape[1])])
    return {
        "acceptance_rate": chain.acceptance_rate,
        "autocorrelations": acf,
        "iact": iact,
        "chain_ess": n / iact,
    }
