"""Metropolis-Hastings, Gibbs, hybrid samplers and diagnostics."""

import numpy as np
import pytest
from scipy import stats

from bayescomp.core import RngStream
from bayescomp.datasets import bundled_pima_path, load_pima
from bayescomp.mcmc import (
    Chain,
    RwProposal,
    chain_diagnostics,
    gibbs_run,
    mh_run,
    mwg_probit_overparam_run,
    probit_gibbs_run,
    rw_mh_run,
)
from bayescomp.model import BayesModel
from bayescomp.probit import ProbitModel, probit_bayes_model, probit_mle


@pytest.fixture(scope="module")
def pima():
    return load_pima(bundled_pima_path())


def flat_model(dim=1):
    return BayesModel(dim, lambda t: 0.0, lambda t: 0.0)


class FlipProposal:
    """Deterministic 0 <-> 1 flip on a single coordinate; symmetric."""

    def draw(self, theta, rng):
        return np.array([1.0 - theta[0]])

    def log_density(self, to, frm):
        return 0.0


class TestMhRun:
    def test_flat_target_accepts_everything(self):
        chain = rw_mh_run(flat_model(2), np.eye(2), np.zeros(2), 500,
                          RngStream(1, 0))
        assert chain.acceptance_rate == 1.0

    def test_two_state_frequencies(self):
        probs = {0.0: 0.3, 1.0: 0.7}
        target = BayesModel(1, lambda t: 0.0,
                            lambda t: float(np.log(probs[float(t[0])])))
        chain = mh_run(target, FlipProposal(), np.zeros(1), 300_000,
                       RngStream(2, 0))
        freq1 = float(np.mean(chain.states[:, 0]))
        assert freq1 == pytest.approx(0.7, abs=0.01)

    def test_bad_start_rejected(self):
        target = BayesModel(1, lambda t: -np.inf, lambda t: 0.0)
        with pytest.raises(ValueError):
            mh_run(target, FlipProposal(), np.zeros(1), 10, RngStream(3, 0))

    def test_rejection_repeats_state_bitwise(self):
        # a huge step on a tight target rejects almost always
        target = BayesModel(1, lambda t: 0.0, lambda t: -5e4 * float(t @ t))
        chain = rw_mh_run(target, 100.0 * np.eye(1), np.zeros(1), 200,
                          RngStream(4, 0))
        repeats = chain.states[1:][np.diff(chain.states[:, 0]) == 0.0]
        assert len(repeats) > 100  # plenty of rejections happened
        rejected = np.flatnonzero(np.diff(chain.states[:, 0]) == 0.0)
        for t in rejected[:20]:
            assert chain.states[t + 1].tobytes() == chain.states[t].tobytes()

    def test_zero_covariance_constant_chain(self):
        target = BayesModel(1, lambda t: 0.0, lambda t: -0.5 * float(t @ t))
        chain = rw_mh_run(target, np.zeros((1, 1)), np.array([0.7]), 100,
                          RngStream(5, 0))
        assert chain.acceptance_rate == 1.0
        assert np.all(chain.states == 0.7)

    def test_pima_sigma_hat_acceptance(self, pima):
        model2 = ProbitModel(design=pima.design[:, :2],
                             response=pima.response)
        beta, cov = probit_mle(model2)
        chain = rw_mh_run(probit_bayes_model(model2), cov, beta, 3000,
                          RngStream(6, 0))
        assert 0.35 < chain.acceptance_rate < 0.65


class TestGibbsRun:
    @staticmethod
    def _bivariate_conditionals(rho):
        def first(state, rng):
            return np.array([rho * state[1]
                             + np.sqrt(1 - rho**2) * rng.standard_normal()])

        def second(state, rng):
            return np.array([rho * state[0]
                             + np.sqrt(1 - rho**2) * rng.standard_normal()])

        return [((0,), first), ((1,), second)]

    def test_bivariate_normal_moments(self):
        rho = 0.5
        chain = gibbs_run(self._bivariate_conditionals(rho),
                          np.zeros(2), 100_000, RngStream(7, 0))
        iact = 2.0  # conservative allowance for sweep correlation
        se_mean = np.sqrt(iact / len(chain))
        for i in range(2):
            assert chain.states[:, i].mean() == pytest.approx(
                0.0, abs=3 * se_mean)
            assert chain.states[:, i].var() == pytest.approx(1.0, rel=0.05)
        emp_rho = np.corrcoef(chain.states.T)[0, 1]
        assert emp_rho == pytest.approx(rho, abs=0.02)

    def test_independent_blocks_equal_direct_sampling(self):
        conds = [((0,), lambda s, r: np.array([r.standard_normal()])),
                 ((1,), lambda s, r: np.array([r.uniform()]))]
        chain = gibbs_run(conds, np.zeros(2), 5000, RngStream(8, 0))
        assert stats.kstest(chain.states[:, 0], "norm").pvalue > 1e-3
        assert stats.kstest(chain.states[:, 1], "uniform").pvalue > 1e-3

    def test_bad_partition_rejected(self):
        conds = [((0,), lambda s, r: s[:1]), ((0,), lambda s, r: s[:1])]
        with pytest.raises(ValueError):
            gibbs_run(conds, np.zeros(2), 10, RngStream(9, 0))


class TestProbitGibbs:
    def test_latent_signs(self, pima):
        _, latents = probit_gibbs_run(pima, 50, RngStream(10, 0),
                                      keep_latents=True)
        signs = np.sign(latents)
        expected = np.where(pima.response == 1.0, 1.0, -1.0)
        assert np.all(signs == expected)

    def test_cross_sampler_agreement(self, pima):
        gibbs, _ = probit_gibbs_run(pima, 8000, RngStream(11, 0))
        beta, cov = probit_mle(pima)
        rw = rw_mh_run(probit_bayes_model(pima), 2.0 * cov, beta, 20_000,
                       RngStream(12, 0))
        for i in range(3):
            g = gibbs.states[:, i]
            m = rw.states[:, i]
            se = np.sqrt(g.var() * 3 / len(g) + m.var() * 20 / len(m))
            assert g.mean() == pytest.approx(m.mean(), abs=3 * se)

    def test_synthetic_truth_recovery(self):
        rng = np.random.default_rng(1)
        design = rng.normal(size=(1000, 2))
        beta_true = np.array([0.8, -0.4])
        response = (rng.random(1000)
                    < stats.norm.cdf(design @ beta_true)).astype(float)
        model = ProbitModel(design=design, response=response)
        chain, _ = probit_gibbs_run(model, 4000, RngStream(13, 0))
        post_mean = chain.states.mean(axis=0)
        post_sd = chain.states.std(axis=0)
        assert np.all(np.abs(post_mean - beta_true) < 3 * post_sd)


class TestMwg:
    def test_prior_recovery_with_flat_likelihood(self):
        # zero covariate makes the likelihood constant in (beta, sigma2)
        x = np.zeros(50)
        y = np.ones(50)
        chain = mwg_probit_overparam_run(x, y, 60_000, RngStream(14, 0),
                                         beta_step_var=25.0)
        beta = chain.states[5000:, 0]
        se = np.sqrt(25.0 * 10 / len(beta))  # allow correlation inflation
        assert beta.mean() == pytest.approx(0.0, abs=3 * se)
        assert beta.var() == pytest.approx(25.0, rel=0.15)

    def test_block_rates_nondegenerate(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=1000)
        y = (rng.random(1000) < stats.norm.cdf(0.8 * x)).astype(float)
        chain = mwg_probit_overparam_run(x, y, 4000, RngStream(15, 0))
        meta = chain.proposal_meta
        assert 0.0 < meta["accept_rate_beta"] < 1.0
        assert 0.0 < meta["accept_rate_sigma2"] < 1.0

    def test_identified_ratio_seed_stable(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=500)
        y = (rng.random(500) < stats.norm.cdf(0.6 * x)).astype(float)
        ratios = []
        for seed in (16, 17):
            chain = mwg_probit_overparam_run(x, y, 30_000, RngStream(seed, 0))
            r = chain.states[5000:, 0] / np.sqrt(chain.states[5000:, 1])
            ratios.append((r.mean(), r.std() / np.sqrt(len(r) / 50.0)))
        gap = abs(ratios[0][0] - ratios[1][0])
        assert gap < 3 * np.hypot(ratios[0][1], ratios[1][1])


class TestDiagnostics:
    def test_iid_iact_near_one(self):
        states = RngStream(18, 0).standard_normal(20_000)[:, None]
        chain = Chain(states, np.zeros(20_000), 0, 0, {})
        diag = chain_diagnostics(chain)
        assert diag["iact"][0] == pytest.approx(1.0, abs=0.1)

    def test_ar1_iact(self):
        rho = 0.9
        rng = RngStream(19, 0)
        x = np.empty(200_000)
        x[0] = 0.0
        noise = rng.standard_normal(len(x))
        for t in range(1, len(x)):
            x[t] = rho * x[t - 1] + noise[t]
        chain = Chain(x[:, None], np.zeros(len(x)), 0, 0, {})
        diag = chain_diagnostics(chain)
        assert diag["iact"][0] == pytest.approx((1 + rho) / (1 - rho), abs=2.0)

    def test_constant_chain_flagged_infinite(self):
        chain = Chain(np.ones((500, 1)), np.zeros(500), 0, 500, {})
        diag = chain_diagnostics(chain)
        assert np.isinf(diag["iact"][0])

    def test_all_rejected_rate_zero(self):
        chain = Chain(np.ones((500, 1)), np.zeros(500), 0, 500, {})
        assert chain.acceptance_rate == 0.0

    def test_short_chain_rejected(self):
        chain = Chain(np.ones((50, 1)), np.zeros(50), 0, 50, {})
        with pytest.raises(ValueError):
            chain_diagnostics(chain)
