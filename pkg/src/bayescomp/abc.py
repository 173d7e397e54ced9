"""Likelihood-free inference: rejection, MCMC and sequential (population)
ABC with quantile-driven tolerance schedules.

Every algorithm compares summary statistics under a distance; raw-data
distances are not supported.  The sequential sampler perturbs resampled
particles with a Gaussian kernel whose covariance is an inflated weighted
empirical covariance, and corrects with importance weights
prior / (mixture of kernels), computed in chunks to keep the O(N^2)
denominator affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .core import (
    DegenerateWeightsError,
    MvnParams,
    RngStream,
    log_sum_exp,
    sample_categorical,
)
from .mcmc import Chain
from .model import SimulableModel
from .montecarlo import GaussianProposal, WeightedSample, ess
from .probit import ProbitModel, gprior_logpdf, probit_abc_summary, probit_mle, sample_gprior

__all__ = [
    "AbcConfig",
    "AbcPopulation",
    "euclidean_distance",
    "abc_reject",
    "abc_mcmc",
    "abc_pmc",
    "probit_abc",
]

_MAX_PROPOSALS = 10 ** 7
_MIN_ACCEPT_PROB = 1e-6
_CHUNK = 256


def euclidean_distance(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a, float) - np.asarray(b, float)))


@dataclass(frozen=True)
class AbcConfig:
    """Tuning knobs shared by the ABC algorithms.  Exactly one of
    `tolerance` (a fixed epsilon) and `quantile` (a per-generation
    acceptance fraction) must be given."""

    n_output: int
    tolerance: Optional[float] = None
    quantile: Optional[float] = None
    distance: Callable = euclidean_distance
    kernel_scale_rule: float = 2.0

    def __post_init__(self):
        if (self.tolerance is None) == (self.quantile is None):
            raise ValueError("set exactly one of tolerance and quantile")
        if self.tolerance is not None and not self.tolerance >= 0:
            raise ValueError("tolerance must be nonnegative")
        if self.quantile is not None and not 0.0 < self.quantile <= 1.0:
            raise ValueError("quantile must lie in (0, 1]")
        if self.n_output < 1:
            raise ValueError("n_output must be positive")
        if self.kernel_scale_rule <= 0:
            raise ValueError("kernel_scale_rule must be positive")


@dataclass(frozen=True)
class AbcPopulation:
    """Accepted particles of one ABC generation, with the distances they
    achieved and the tolerance in force when they were accepted."""

    particles: np.ndarray  # (N, p)
    log_weights: np.ndarray  # (N,)
    epsilon: float
    t: int
    distances: np.ndarray = field(default=None)
    n_proposals: int = 0

    def __len__(self):
        return self.particles.shape[0]

    def weighted_sample(self) -> WeightedSample:
        return WeightedSample(points=self.particles, log_weights=self.log_weights)


def _simulate_distance(model: SimulableModel, theta, eta_obs, config: AbcConfig,
                       rng: RngStream) -> float:
    z = model.simulate(theta, rng)
    return config.distance(model.summary(z), eta_obs)


def abc_reject(model: SimulableModel, y_obs, config: AbcConfig,
               rng: RngStream) -> AbcPopulation:
    """Likelihood-free rejection sampling from the prior.

    With a fixed `tolerance`, proposals are drawn until `n_output` pass the
    distance test.  With a `quantile`, a single batch of n_output/quantile
    proposals is ranked and the best n_output kept, which realises the
    tolerance as an empirical quantile of simulated distances.
    """
    eta_obs = np.asarray(model.summary(y_obs), dtype=float)
    if config.quantile is not None:
        n_pilot = int(np.ceil(config.n_output / config.quantile))
        thetas, dists = [], []
        for i in range(n_pilot):
            r = rng.child(i)
            theta = np.atleast_1d(np.asarray(model.sample_prior(r), dtype=float))
            thetas.append(theta)
            dists.append(_simulate_distance(model, theta, eta_obs, config, r.child(1)))
        order = np.argsort(dists, kind="stable")[:config.n_output]
        particles = np.asarray(thetas)[order]
        distances = np.asarray(dists)[order]
        eps = float(distances.max())
        n_prop = n_pilot
    else:
        eps = float(config.tolerance)
        particles, distances = [], []
        n_prop = 0
        while len(particles) < config.n_output:
            r = rng.child(n_prop)
            theta = np.atleast_1d(np.asarray(model.sample_prior(r), dtype=float))
            d = _simulate_distance(model, theta, eta_obs, config, r.child(1))
            n_prop += 1
            if d <= eps:
                particles.append(theta)
                distances.append(d)
            if n_prop >= _MAX_PROPOSALS and \
                    len(particles) < _MIN_ACCEPT_PROB * n_prop:
                raise RuntimeError(
                    f"acceptance probability below {_MIN_ACCEPT_PROB} after "
                    f"{n_prop} proposals; tolerance {eps} is too small")
        particles = np.asarray(particles)
        distances = np.asarray(distances)
    return AbcPopulation(particles=particles,
                         log_weights=np.zeros(config.n_output),
                         epsilon=eps, t=0, distances=distances,
                         n_proposals=n_prop)


def abc_mcmc(model: SimulableModel, y_obs, config: AbcConfig, proposal,
             n_iter: int, rng: RngStream) -> Chain:
    """Likelihood-free MCMC at a fixed tolerance.

    The chain starts from one rejection-sampler hit, then proposes in
    parameter space, simulates a fresh summary, and accepts on the prior
    plus proposal ratio gated by the distance indicator.  Rejection
    repeats the previous state.
    """
    if config.tolerance is None:
        raise ValueError("abc_mcmc needs a fixed tolerance")
    if model.log_prior is None:
        raise ValueError("abc_mcmc needs the prior log-density")
    eta_obs = np.asarray(model.summary(y_obs), dtype=float)
    init = abc_reject(model, y_obs,
                      AbcConfig(n_output=1, tolerance=config.tolerance,
                                distance=config.distance), rng.child(0))
    theta = init.particles[0]
    lp = float(model.log_prior(theta))
    states = np.empty((n_iter, theta.shape[0]))
    log_priors = np.empty(n_iter)
    accept = 0
    walk = rng.child(1)
    for t in range(n_iter):
        r = walk.child(t)
        prop = np.atleast_1d(np.asarray(proposal.draw(theta, r.child(0)), float))
        lp_prop = float(model.log_prior(prop))
        log_ratio = (lp_prop - lp
                     + float(proposal.log_density(theta, prop))
                     - float(proposal.log_density(prop, theta)))
        u = 1.0 - r.child(1).uniform()
        ok = lp_prop > -np.inf and np.log(u) <= log_ratio
        if ok:
            d = _simulate_distance(model, prop, eta_obs, config, r.child(2))
            ok = d <= config.tolerance
        if ok:
            theta, lp = prop, lp_prop
            accept += 1
        states[t] = theta
        log_priors[t] = lp
    return Chain(states=states, log_posts=log_priors, accept_count=accept,
                 n_proposals=n_iter,
                 proposal_meta={"family": "abc-mcmc",
                                "tolerance": config.tolerance})


def _kernel_log_denominator(new_particles: np.ndarray, old: AbcPopulation,
                            kernel: GaussianProposal) -> np.ndarray:
    """log sum_j wbar_j K(theta_i | theta_j), chunked over i."""
    log_wbar = old.log_weights - log_sum_exp(old.log_weights)
    out = np.empty(new_particles.shape[0])
    for lo in range(0, new_particles.shape[0], _CHUNK):
        chunk = new_particles[lo:lo + _CHUNK]
        diffs = chunk[:, None, :] - old.particles[None, :, :]
        lk = kernel.logpdf_many(diffs.reshape(-1, chunk.shape[1]))
        lk = lk.reshape(chunk.shape[0], len(old))
        out[lo:lo + _CHUNK] = logsumexp(lk + log_wbar[None, :], axis=1)
    return out


def abc_pmc(model: SimulableModel, y_obs, config: AbcConfig, n_particles: int,
            n_generations: int, rng: RngStream) -> list:
    """Sequential ABC through a decreasing tolerance schedule.

    Generation 0 is quantile-based rejection from the prior; each later
    generation resamples by weight, perturbs with an inflated-covariance
    Gaussian kernel, accepts at the configured quantile of the previous
    generation's distances, and reweights by prior over kernel mixture.
    With a fixed `tolerance` instead of a quantile, the schedule is frozen
    (a degenerate mode useful for validation).  In quantile mode the
    schedule must strictly decrease; the run stops early the moment it
    cannot.
    """
    if n_particles < 100:
        raise ValueError("n_particles must be at least 100")
    if n_generations < 2:
        raise ValueError("n_generations must be at least 2")
    if model.log_prior is None:
        raise ValueError("abc_pmc needs the prior log-density")
    eta_obs = np.asarray(model.summary(y_obs), dtype=float)
    gen0_config = AbcConfig(n_output=n_particles, tolerance=config.tolerance,
                            quantile=config.quantile, distance=config.distance,
                            kernel_scale_rule=config.kernel_scale_rule)
    populations = [abc_reject(model, y_obs, gen0_config, rng.child(0))]
    for t in range(1, n_generations):
        prev = populations[-1]
        if config.quantile is not None:
            eps = float(np.quantile(prev.distances, config.quantile))
            if not eps < prev.epsilon:
                break
        else:
            eps = float(config.tolerance)
        w = prev.weighted_sample().normalized_weights()
        mean = w @ prev.particles
        resid = prev.particles - mean
        cov = config.kernel_scale_rule * (resid * w[:, None]).T @ resid
        kernel = GaussianProposal(MvnParams(np.zeros(cov.shape[0]), cov))
        gen_rng = rng.child(t)
        particles = np.empty_like(prev.particles)
        distances = np.empty(n_particles)
        n_prop = 0
        accepted = 0
        while accepted < n_particles:
            r = gen_rng.child(n_prop)
            j = sample_categorical(prev.log_weights, r.child(0))
            prop = prev.particles[j] + kernel.draw(r.child(1))
            n_prop += 1
            if float(model.log_prior(prop)) == -np.inf:
                continue
            d = _simulate_distance(model, prop, eta_obs, config, r.child(2))
            if d <= eps:
                particles[accepted] = prop
                distances[accepted] = d
                accepted += 1
            if n_prop >= _MAX_PROPOSALS and accepted < _MIN_ACCEPT_PROB * n_prop:
                raise RuntimeError(
                    f"generation {t}: acceptance probability below "
                    f"{_MIN_ACCEPT_PROB} after {n_prop} proposals")
        log_prior = np.array([float(model.log_prior(x)) for x in particles])
        log_weights = log_prior - _kernel_log_denominator(particles, prev, kernel)
        pop = AbcPopulation(particles=particles, log_weights=log_weights,
                            epsilon=eps, t=t, distances=distances,
                            n_proposals=n_prop)
        if ess(pop.weighted_sample()) < 10:
            raise DegenerateWeightsError(
                f"particle degeneracy at generation {t}: ESS below 10")
        populations.append(pop)
    return populations


def probit_abc(model: ProbitModel, config: AbcConfig, rng: RngStream,
               n_generations: int = 10) -> AbcPopulation:
    """Sequential ABC for the probit posterior, without pseudo-data.

    The summary of a coefficient vector is its vector of fitted success
    probabilities, compared with the fit at the maximum likelihood
    estimate; forward simulation is the identity on parameters.  Returns
    the final generation.
    """
    beta_hat, _ = probit_mle(model)

    sim = SimulableModel(
        sample_prior=lambda r: sample_gprior(model, 1, r)[0],
        simulate=lambda beta, r: beta,
        summary=lambda beta: probit_abc_summary(model, beta),
        log_prior=lambda beta: gprior_logpdf(model, beta),
    )
    pops = abc_pmc(sim, beta_hat, config, config.n_output, n_generations, rng)
    return pops[-1]
