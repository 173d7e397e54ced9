"""Population Monte Carlo: iterated importance sampling with resampling
and a small bank of Gaussian kernels whose mixture weights adapt by
survival of the fittest.

Each iteration is a valid importance sample on its own; adaptation only
changes the variance of later iterations, never the validity of earlier
ones.  The per-particle proposal density is, by default, the kernel
density at the particle's own resampled centre (the conditional form);
the Rao-Blackwellised mixture over all centres is available at O(N^2)
cost via ``density_form="mixture"``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DegenerateWeightsError,
    MvnParams,
    RngStream,
    log_sum_exp,
    sample_categorical_many,
)
from .model import BayesModel, log_posterior
from .montecarlo import GaussianProposal, WeightedSample, sir_resample

__all__ = [
    "Population",
    "KernelBank",
    "default_kernel_bank",
    "pmc_run",
    "dkernel_update",
]

_WEIGHT_FLOOR = 1e-3


@dataclass(frozen=True)
class Population:
    """One PMC iteration: weighted particles plus the resampled set that
    seeds the next iteration.  `centers` and `kernel_indices` record which
    resampled point and which bank kernel produced each particle (absent
    for iteration 0, which draws from the initial proposal)."""

    particles: np.ndarray  # (N, p)
    log_weights: np.ndarray  # (N,)
    resampled: np.ndarray  # (N, p)
    iteration: int
    centers: Optional[np.ndarray] = None
    kernel_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.particles.shape[0]
        if self.log_weights.shape[0] != n or self.resampled.shape[0] != n:
            raise ValueError("particles, log_weights and resampled lengths differ")

    def __len__(self):
        return self.particles.shape[0]

    def weighted_sample(self) -> WeightedSample:
        return WeightedSample(points=self.particles, log_weights=self.log_weights)


@dataclass(frozen=True)
class KernelBank:
    """Gaussian kernel family: covariances scale_j * base_covariance with
    mixture weights kept above a small floor so no kernel ever dies."""

    scales: np.ndarray  # (K,)
    mixture_log_weights: np.ndarray  # (K,)
    base_covariance: np.ndarray  # (p, p)

    def __post_init__(self):
        scales = np.asarray(self.scales, dtype=float)
        lw = np.asarray(self.mixture_log_weights, dtype=float)
        if np.any(scales <= 0):
            raise ValueError("kernel scales must be positive")
        if scales.shape != lw.shape:
            raise ValueError("scales and mixture weights lengths differ")
        if abs(log_sum_exp(lw)) > 1e-8:
            raise ValueError("mixture weights must sum to 1")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "mixture_log_weights", lw)
        object.__setattr__(self, "base_covariance",
                           np.asarray(self.base_covariance, dtype=float))

    @property
    def n_kernels(self) -> int:
        return self.scales.shape[0]


def default_kernel_bank(base_covariance) -> KernelBank:
    """Three kernels spanning under- to over-dispersion, uniform weights."""
    scales = np.array([0.3, 1.0, 3.0])
    return KernelBank(
        scales=scales,
        mixture_log_weights=np.full(3, -np.log(3.0)),
        base_covariance=np.asarray(base_covariance, dtype=float),
    )


def _weighted_moments(points: np.ndarray, norm_weights: np.ndarray):
    mean = norm_weights @ points
    resid = points - mean
    cov = (resid * norm_weights[:, None]).T @ resid
    return mean, cov


def dkernel_update(bank: KernelBank, pop: Population,
                   kernel_assignments: np.ndarray) -> KernelBank:
    """Survival update of the mixture weights: each kernel collects the
    normalised weight of the particles it produced, floored so every
    kernel keeps a small probability.  The base covariance becomes the
    weighted empirical covariance of the population."""
    assignments = np.asarray(kernel_assignments)
    if assignments.shape[0] != len(pop):
        raise ValueError("one kernel assignment per particle required")
    w = pop.weighted_sample().normalized_weights()
    survival = np.bincount(assignments, weights=w, minlength=bank.n_kernels)
    k = bank.n_kernels
    mixed = _WEIGHT_FLOOR + (1.0 - k * _WEIGHT_FLOOR) * survival / survival.sum()
    _, cov = _weighted_moments(pop.particles, w)
    return KernelBank(
        scales=bank.scales,
        mixture_log_weights=np.log(mixed),
        base_covariance=cov,
    )


def _kernel_proposals(bank: KernelBank) -> list:
    return [
        GaussianProposal(MvnParams(np.zeros(bank.base_covariance.shape[0]),
                                   s * bank.base_covariance))
        for s in bank.scales
    ]


def _mixture_logpdf(points: np.ndarray, centers: np.ndarray,
                    kernels: list, bank: KernelBank) -> np.ndarray:
    """Rao-Blackwellised proposal density: uniform mixture over all the
    resampled centres crossed with the kernel bank.  O(N^2 K)."""
    n = points.shape[0]
    m = centers.shape[0]
    parts = np.empty((bank.n_kernels, n, m))
    for j, kern in enumerate(kernels):
        for c in range(m):
            shifted = points - centers[c]
            parts[j, :, c] = kern.logpdf_many(shifted)
    lw = bank.mixture_log_weights[:, None, None] - np.log(m)
    stacked = (parts + lw).transpose(1, 0, 2).reshape(n, -1)
    return np.array([log_sum_exp(row) for row in stacked])


def pmc_run(target: BayesModel, q0, bank: KernelBank, n_particles: int,
            n_iterations: int, rng: RngStream,
            density_form: str = "conditional") -> list:
    """Iterated importance sampling toward `target`.

    Iteration 0 draws from `q0` (a logpdf/draw pair); every later
    iteration moves each resampled point with a kernel drawn from the
    bank and reweights by target over proposal.  Multinomial resampling
    closes each iteration, and the bank adapts between iterations.
    Returns every `Population` so intermediate behaviour stays
    inspectable.
    """
    if n_particles < 2:
        raise DegenerateWeightsError("need at least 2 particles to resample")
    if n_iterations < 1:
        raise ValueError("n_iterations must be at least 1")
    if density_form not in ("conditional", "mixture"):
        raise ValueError("density_form must be 'conditional' or 'mixture'")

    logpost = lambda th: log_posterior(target, th)

    if hasattr(q0, "draw_many"):
        points = np.atleast_2d(q0.draw_many(n_particles, rng.child(0)))
    else:
        r0 = rng.child(0)
        points = np.atleast_2d([np.atleast_1d(q0.draw(r0))
                                for _ in range(n_particles)])
    if hasattr(q0, "logpdf_many"):
        lq = np.asarray(q0.logpdf_many(points), dtype=float)
    else:
        lq = np.asarray([q0.logpdf(x) for x in points], dtype=float)
    lt = np.asarray([logpost(x) for x in points])
    populations = []
    for t in range(n_iterations):
        try:
            ws = WeightedSample(points=points, log_weights=lt - lq)
        except DegenerateWeightsError as exc:
            raise DegenerateWeightsError(
                f"all weights degenerate at iteration {t}") from exc
        resampled = sir_resample(ws, n_particles, rng.child(3 * t + 1))
        if t == 0:
            pop = Population(particles=points, log_weights=ws.log_weights,
                             resampled=resampled, iteration=t)
            w = ws.normalized_weights()
            _, cov = _weighted_moments(points, w)
            bank = KernelBank(scales=bank.scales,
                              mixture_log_weights=bank.mixture_log_weights,
                              base_covariance=cov)
        else:
            pop = Population(particles=points, log_weights=ws.log_weights,
                             resampled=resampled, iteration=t,
                             centers=centers, kernel_indices=assignments)
            bank = dkernel_update(bank, pop, assignments)
        populations.append(pop)
        if t == n_iterations - 1:
            break

        kernels = _kernel_proposals(bank)
        assignments = sample_categorical_many(bank.mixture_log_weights,
                                              n_particles, rng.child(3 * t + 2))
        centers = resampled
        move_rng = rng.child(3 * t + 3)
        steps = np.empty_like(points)
        for j, kern in enumerate(kernels):
            mask = assignments == j
            m = int(mask.sum())
            if m:
                steps[mask] = kern.draw_many(m, move_rng.child(j))
        points = centers + steps
        if density_form == "conditional":
            lq = np.empty(n_particles)
            for j, kern in enumerate(kernels):
                mask = assignments == j
                if mask.any():
                    lq[mask] = kern.logpdf_many(points[mask] - centers[mask])
        else:
            lq = _mixture_logpdf(points, centers, kernels, bank)
        lt = np.asarray([logpost(x) for x in points])
    return populations
