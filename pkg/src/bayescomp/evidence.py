"""Marginal likelihoods and Bayes factors.

Six routes to the same quantity: prior-sample Monte Carlo, importance
sampling, bridge sampling (plain and embedded for nested models of
unequal dimension), the lighter-tailed harmonic-mean estimator with a
truncated Gaussian instrumental density, the plain harmonic mean (kept
only as a cautionary baseline, always flagged unreliable), and the
posterior-ordinate identity evaluated with Rao-Blackwellised full
conditionals.  Everything runs in log domain and every estimate carries
a batch-means standard error on the log scale so the methods can be
compared on equal footing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .core import MvnParams, RngStream, log_sum_exp, sample_mvn
from .model import BayesModel, log_posterior
from .montecarlo import GaussianProposal

__all__ = [
    "EvidenceEstimate",
    "PhiSpec",
    "LinearGaussianOmega",
    "BridgeError",
    "prior_proposal",
    "bf_prior_mc",
    "bf_importance",
    "bridge_sampling",
    "bridge_embedded",
    "harmonic_mean_gd",
    "newton_raftery_hm",
    "chib_marginal",
]

_METHODS = ("prior-mc", "importance", "bridge", "bridge-embedded",
            "harmonic-gd", "harmonic-nr", "chib")
_N_BATCHES = 50


class BridgeError(RuntimeError):
    """Bridge iteration failed: no overlap or no convergence."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class EvidenceEstimate:
    """Log evidence or log Bayes factor with its log-scale standard error."""

    log_value: float
    std_error: float
    method: str
    n_draws: int
    unreliable: bool = False

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")


@dataclass(frozen=True)
class PhiSpec:
    """Instrumental density for the harmonic-mean estimator: a Gaussian
    matched to the posterior sample, truncated to its own mass-`coverage`
    ellipsoid so the truncation constant is known in closed form."""

    center: np.ndarray
    scatter: np.ndarray
    coverage: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.coverage <= 1.0:
            raise ValueError("coverage must lie in (0, 1]")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "scatter", np.asarray(self.scatter, dtype=float))

    @classmethod
    def from_sample(cls, sample, coverage: float = 0.25) -> "PhiSpec":
        sample = np.atleast_2d(np.asarray(sample, dtype=float))
        return cls(center=sample.mean(axis=0),
                   scatter=np.cov(sample, rowvar=False).reshape(
                       sample.shape[1], sample.shape[1]),
                   coverage=coverage)

    def log_density_many(self, thetas: np.ndarray) -> np.ndarray:
        """Log of the truncated Gaussian; -inf outside the ellipsoid."""
        gauss = GaussianProposal(MvnParams(self.center, self.scatter))
        thetas = np.atleast_2d(thetas)
        resid = thetas - self.center
        u = np.linalg.solve(self.scatter, resid.T)
        mahal = np.sum(resid.T * u, axis=0)
        radius2 = stats.chi2.ppf(self.coverage, self.center.shape[0])
        inside = mahal <= radius2
        out = np.full(thetas.shape[0], -np.inf)
        out[inside] = gauss.logpdf_many(thetas[inside]) - np.log(self.coverage)
        return out


def _log_mean_exp(v: np.ndarray) -> float:
    return log_sum_exp(v) - np.log(len(v))


def _batch_log_means(v: np.ndarray, n_batches: int = _N_BATCHES) -> np.ndarray:
    """Log of batch means of exp(v), for batch-means errors on the log scale."""
    n = len(v)
    b = min(n_batches, n)
    edges = np.linspace(0, n, b + 1).astype(int)
    return np.array([_log_mean_exp(v[lo:hi]) for lo, hi in zip(edges[:-1], edges[1:])])


def _batch_se(v: np.ndarray) -> float:
    """Standard error of log-mean-exp(v) by batch means; 0 when a single
    term makes batching meaningless (callers flag that case)."""
    batches = _batch_log_means(v)
    if len(batches) < 2 or not np.all(np.isfinite(batches)):
        return 0.0
    return float(np.std(batches, ddof=1) / np.sqrt(len(batches)))


def _prior_loglik_draws(model: BayesModel, n: int, rng: RngStream,
                        label: str) -> np.ndarray:
    if model.sample_prior is None:
        raise ValueError(f"{label} has no prior sampler")
    ll = np.array([float(model.log_likelihood(
        np.atleast_1d(np.asarray(model.sample_prior(rng), dtype=float))))
        for _ in range(n)])
    if not np.any(ll > -np.inf):
        raise ValueError(f"all likelihood values are zero under the {label} prior")
    return ll


def bf_prior_mc(model0: BayesModel, model1: BayesModel, n0: int, n1: int,
                rng: RngStream) -> EvidenceEstimate:
    """Bayes factor B01 from prior-sample averages of the two likelihoods."""
    ll0 = _prior_loglik_draws(model0, n0, rng.child(0), "model0")
    if model1 is model0 and n1 == n0:
        ll1 = ll0  # shared draws: the ratio is exactly 1
    else:
        ll1 = _prior_loglik_draws(model1, n1, rng.child(1), "model1")
    log_b = _log_mean_exp(ll0) - _log_mean_exp(ll1)
    se = float(np.sqrt(_batch_se(ll0) ** 2 + _batch_se(ll1) ** 2))
    return EvidenceEstimate(log_value=log_b, std_error=se, method="prior-mc",
                            n_draws=n0 + n1, unreliable=min(n0, n1) < 2)


def prior_proposal(model: BayesModel):
    """The prior as an importance proposal (logpdf/draw pair), under which
    bf_importance reduces exactly to bf_prior_mc on the same stream."""

    class _PriorProposal:
        def logpdf(self, theta):
            return float(model.log_prior(np.asarray(theta, dtype=float)))

        def draw(self, rng):
            return np.atleast_1d(np.asarray(model.sample_prior(rng), dtype=float))

    return _PriorProposal()


def _is_log_terms(model: BayesModel, proposal, n: int, rng: RngStream,
                  label: str) -> np.ndarray:
    """Per-draw log integrands likelihood + prior - proposal of the
    normalised-proposal importance estimate of the evidence."""
    if hasattr(proposal, "draw_many"):
        pts = np.atleast_2d(proposal.draw_many(n, rng))
    else:
        pts = np.atleast_2d([np.atleast_1d(proposal.draw(rng)) for _ in range(n)])
    if hasattr(proposal, "logpdf_many"):
        lq = np.asarray(proposal.logpdf_many(pts), dtype=float)
    else:
        lq = np.asarray([proposal.logpdf(x) for x in pts], dtype=float)
    lt = np.asarray([log_posterior(model, x) for x in pts])
    terms = lt - lq
    if not np.any(terms > -np.inf):
        raise ValueError(f"all importance terms are zero for {label}")
    return terms


def bf_importance(model0: BayesModel, model1: BayesModel, g0, g1,
                  n0: int, n1: int, rng: RngStream) -> EvidenceEstimate:
    """Bayes factor B01 from two normalised-proposal importance estimates
    of the evidences."""
    t0 = _is_log_terms(model0, g0, n0, rng.child(0), "model0")
    t1 = _is_log_terms(model1, g1, n1, rng.child(1), "model1")
    log_b = _log_mean_exp(t0) - _log_mean_exp(t1)
    se = float(np.sqrt(_batch_se(t0) ** 2 + _batch_se(t1) ** 2))
    return EvidenceEstimate(log_value=log_b, std_error=se, method="importance",
                            n_draws=n0 + n1, unreliable=min(n0, n1) < 2)


def bridge_sampling(logpost0_unnorm: Callable, logpost1_unnorm: Callable,
                    sample0, sample1, tol: float = 1e-8,
                    max_iter: int = 100, log_r0: float = 0.0,
                    method: str = "bridge") -> EvidenceEstimate:
    """Bayes factor B01 by the iterated quasi-optimal bridge.

    Both unnormalised log-posteriors must live on the same space; the two
    samples come from the respective posteriors.  The fixed point in the
    ratio r = B01 is iterated in log domain from r = 1 until the change in
    log r drops below `tol`.
    """
    sample0 = np.atleast_2d(np.asarray(sample0, dtype=float))
    sample1 = np.atleast_2d(np.asarray(sample1, dtype=float))
    n0, n1 = sample0.shape[0], sample1.shape[0]
    # log l = logpost0 - logpost1 at each point of each sample
    log_l1 = np.array([float(logpost0_unnorm(x)) - float(logpost1_unnorm(x))
                       for x in sample1])
    log_l0 = np.array([float(logpost0_unnorm(x)) - float(logpost1_unnorm(x))
                       for x in sample0])
    if not np.any(np.isfinite(log_l1)) or not np.any(np.isfinite(log_l0)):
        raise BridgeError("no overlap: density ratio degenerate on the samples")
    log_s1 = np.log(n1 / (n0 + n1))
    log_s0 = np.log(n0 / (n0 + n1))
    log_r = float(log_r0)
    trace = [log_r]
    for _ in range(max_iter):
        num = _log_mean_exp(
            log_l1 - np.logaddexp(log_s1 + log_l1, log_s0 + log_r))
        den = _log_mean_exp(
            -np.logaddexp(log_s1 + log_l0, log_s0 + log_r))
        new = num - den
        trace.append(new)
        if abs(new - log_r) < tol:
            log_r = new
            break
        log_r = new
    else:
        raise BridgeError(f"bridge iteration did not converge in {max_iter} steps",
                          trace=trace)
    num_terms = log_l1 - np.logaddexp(log_s1 + log_l1, log_s0 + log_r)
    den_terms = -np.logaddexp(log_s1 + log_l0, log_s0 + log_r)
    se = float(np.sqrt(_batch_se(num_terms) ** 2 + _batch_se(den_terms) ** 2))
    return EvidenceEstimate(log_value=float(log_r), std_error=se,
                            method=method, n_draws=n0 + n1)


@dataclass(frozen=True)
class LinearGaussianOmega:
    """Normalised pseudo-posterior for the extra parameter of the bigger
    model: psi | theta ~ N(intercept + coef theta, cov).  The usual fit is
    a least-squares regression on a pilot sample of the bigger model."""

    intercept: np.ndarray  # (q,)
    coef: np.ndarray  # (q, p)
    cov: np.ndarray  # (q, q)
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "intercept",
                           np.atleast_1d(np.asarray(self.intercept, dtype=float)))
        object.__setattr__(self, "coef",
                           np.atleast_2d(np.asarray(self.coef, dtype=float)))
        object.__setattr__(self, "cov",
                           np.atleast_2d(np.asarray(self.cov, dtype=float)))

    @classmethod
    def fit(cls, thetas, psis) -> "LinearGaussianOmega":
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        psis = np.asarray(psis, dtype=float)
        if psis.ndim == 1:
            psis = psis[:, None]
        design = np.column_stack([np.ones(thetas.shape[0]), thetas])
        coefs, *_ = np.linalg.lstsq(design, psis, rcond=None)
        resid = psis - design @ coefs
        dof = max(thetas.shape[0] - design.shape[1], 1)
        cov = resid.T @ resid / dof
        return cls(intercept=coefs[0], coef=coefs[1:].T, cov=cov)

    def _mean(self, theta):
        return self.intercept + self.coef @ np.atleast_1d(theta)

    def logpdf(self, psi, theta) -> float:
        prop = GaussianProposal(MvnParams(self._mean(theta), self.cov))
        return prop.logpdf(np.atleast_1d(psi))

    def draw(self, theta, rng: RngStream) -> np.ndarray:
        return sample_mvn(MvnParams(self._mean(theta), self.cov), rng)


def bridge_embedded(model0: BayesModel, model1: BayesModel, psi0,
                    omega, sample0, sample1, rng: RngStream,
                    tol: float = 1e-8, max_iter: int = 100) -> EvidenceEstimate:
    """Bridge sampling between models of unequal dimension.

    model0 must be the psi = psi0 slice of model1.  The theta-sample of
    model0 is completed with psi drawn from the normalised pseudo-posterior
    `omega`, after which the plain bridge runs on the matched-dimension
    pair.  The estimate does not depend on the choice of omega, only its
    variance does.
    """
    if not getattr(omega, "normalized", False):
        raise ValueError("omega must declare itself normalised")
    psi0 = np.atleast_1d(np.asarray(psi0, dtype=float))
    sample0 = np.atleast_2d(np.asarray(sample0, dtype=float))
    sample1 = np.atleast_2d(np.asarray(sample1, dtype=float))
    d0 = model0.dimension
    if model1.dimension != d0 + psi0.shape[0]:
        raise ValueError("psi0 length must bridge the model dimensions")
    theta_probe = sample0[0]
    slice_gap = abs(float(model0.log_likelihood(theta_probe))
                    - float(model1.log_likelihood(np.concatenate([theta_probe, psi0]))))
    if not slice_gap < 1e-8:
        raise ValueError("model0 is not the psi = psi0 slice of model1")
    psis = np.atleast_2d([np.atleast_1d(omega.draw(th, rng.child(i)))
                          for i, th in enumerate(sample0)])
    augmented0 = np.column_stack([sample0, psis])

    def logpost0_aug(v):
        theta, psi = v[:d0], v[d0:]
        lp = log_posterior(model0, theta)
        if lp == -np.inf:
            return -np.inf
        return lp + float(omega.logpdf(psi, theta))

    est = bridge_sampling(logpost0_aug,
                          lambda v: log_posterior(model1, v),
                          augmented0, sample1, tol=tol, max_iter=max_iter,
                          method="bridge-embedded")
    return est


def harmonic_mean_gd(logprior_plus_loglik: Callable, posterior_sample,
                     phi: PhiSpec) -> EvidenceEstimate:
    """Evidence by the instrumental-density harmonic identity: the
    posterior average of phi / (prior x likelihood) equals 1/m(y) for any
    normalised phi inside the posterior support.  phi is the truncated
    moment-matched Gaussian of `phi`, whose light tails keep the variance
    finite."""
    sample = np.atleast_2d(np.asarray(posterior_sample, dtype=float))
    log_phi = phi.log_density_many(sample)
    n_inside = int(np.sum(log_phi > -np.inf))
    if n_inside < 10:
        raise RuntimeError(
            f"only {n_inside} sample points fall in the phi ellipsoid; "
            "estimate would be unstable (raise coverage)")
    log_target = np.array([float(logprior_plus_loglik(x)) for x in sample])
    terms = log_phi - log_target
    return EvidenceEstimate(log_value=-_log_mean_exp(terms),
                            std_error=_batch_se(terms),
                            method="harmonic-gd", n_draws=sample.shape[0])


def newton_raftery_hm(loglik: Callable, posterior_sample) -> EvidenceEstimate:
    """Plain harmonic mean of the likelihood over posterior draws.

    Unbiased for 1/m(y) but with typically infinite variance; every
    estimate is flagged unreliable and the batch-means error should not
    be trusted."""
    sample = np.atleast_2d(np.asarray(posterior_sample, dtype=float))
    if sample.shape[0] == 0:
        raise ValueError("posterior sample is empty")
    terms = -np.array([float(loglik(x)) for x in sample])
    return EvidenceEstimate(log_value=-_log_mean_exp(terms),
                            std_error=_batch_se(terms),
                            method="harmonic-nr", n_draws=sample.shape[0],
                            unreliable=True)


def chib_marginal(model: BayesModel, completion, gibbs_latents,
                  theta_star=None, param_draws=None) -> EvidenceEstimate:
    """Evidence from the posterior-ordinate identity at a single point:
    log m(y) = log f(y|theta*) + log pi(theta*) - log pihat(theta*|y), the
    ordinate estimated by averaging the normalised full conditional of the
    parameter over retained latent draws.  theta* defaults to the mean of
    `param_draws` (the Gibbs parameter chain)."""
    if theta_star is None:
        if param_draws is None:
            raise ValueError("either theta_star or param_draws is required")
        theta_star = np.mean(np.atleast_2d(np.asarray(param_draws, float)), axis=0)
    theta_star = np.atleast_1d(np.asarray(theta_star, dtype=float))
    ords = np.array([float(completion.log_full_conditional_param(theta_star, z))
                     for z in gibbs_latents])
    if not np.any(ords > -np.inf):
        raise RuntimeError(
            "full conditional underflows at theta*; pick a higher-density point")
    log_ord = _log_mean_exp(ords)
    log_m = (float(model.log_likelihood(theta_star))
             + float(model.log_prior(theta_star)) - log_ord)
    return EvidenceEstimate(log_value=log_m, std_error=_batch_se(ords),
                            method="chib", n_draws=len(ords))
