"""Model contracts: -inf propagation, NaN policy, shape checks."""

import numpy as np
import pytest

from bayescomp.core import RngStream
from bayescomp.model import BayesModel, SimulableModel, log_posterior


def gaussian_model(dim=1):
    return BayesModel(
        dimension=dim,
        log_prior=lambda t: -0.5 * float(t @ t),
        log_likelihood=lambda t: -0.25 * float(t @ t),
        sample_prior=lambda rng: rng.standard_normal(dim),
    )


def test_log_posterior_sum():
    m = gaussian_model()
    theta = np.array([2.0])
    assert log_posterior(m, theta) == pytest.approx(-0.75 * 4.0)


def test_prior_minus_inf_short_circuits():
    calls = []

    def loglik(t):
        calls.append(t)
        return 0.0

    m = BayesModel(1, lambda t: -np.inf, loglik)
    assert log_posterior(m, np.array([0.0])) == -np.inf
    assert not calls  # likelihood never evaluated outside the support


def test_nan_raises():
    m = BayesModel(1, lambda t: 0.0, lambda t: np.nan)
    with pytest.raises(FloatingPointError):
        log_posterior(m, np.array([0.0]))


def test_shape_mismatch():
    m = gaussian_model(dim=2)
    with pytest.raises(ValueError):
        log_posterior(m, np.array([1.0]))


def test_dimension_validated():
    with pytest.raises(ValueError):
        BayesModel(0, lambda t: 0.0, lambda t: 0.0)


def test_simulable_model_runs():
    sim = SimulableModel(
        sample_prior=lambda rng: np.array([rng.uniform()]),
        simulate=lambda th, rng: (rng.uniform(4) < th[0]).astype(float),
        summary=lambda z: np.array([z.sum()]),
    )
    rng = RngStream(1, 0)
    theta = sim.sample_prior(rng)
    z = sim.simulate(theta, rng)
    assert sim.summary(z).shape == (1,)
