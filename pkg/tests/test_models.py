"""Model-layer tests: exact log-likelihood values against independent
oracles, batch-versus-loop consistency, and simulator goodness of fit."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats
from scipy.special import expit

from relbayes.models import (LOG_2PI, Observation, SharedParam, SourceData,
                             TaskParam, binomial_logit_model, check_support,
                             discrete_toy_model, gp_model, linear_model,
                             loglik_tensor, param_values)

RNG_SEED = 20260817


def _toy_table(rng, n_out=3, n_theta=2, n_psi=2):
    return rng.dirichlet(np.ones(n_out), size=(n_theta, n_psi))


class TestDomainTypes:
    def test_shared_param_coerces_to_vector(self):
        p = SharedParam(1.5)
        assert p.value.shape == (1,)
        assert p.value[0] == 1.5

    def test_param_rejects_non_finite(self):
        with pytest.raises(ValueError):
            TaskParam(float("nan"))
        with pytest.raises(ValueError):
            SharedParam([1.0, float("inf")])

    def test_param_values_accepts_raw_arrays(self):
        assert_allclose(param_values(np.array([2.0, 3.0])), [2.0, 3.0])
        assert_allclose(param_values(SharedParam([2.0])), [2.0])

    def test_observation_trial_count_must_be_positive(self):
        with pytest.raises(ValueError):
            Observation(np.zeros(2), 1.0, trial_count=0)

    def test_source_data_requires_homogeneous_covariates(self):
        obs = (Observation(np.zeros(2), 0.0), Observation(np.zeros(3), 0.0))
        with pytest.raises(ValueError):
            SourceData(obs)

    def test_source_data_forbids_empty(self):
        with pytest.raises(ValueError):
            SourceData(())

    def test_check_support(self):
        box = np.array([[-1.0, 1.0]])
        check_support(np.array([0.5]), box, "x")
        with pytest.raises(ValueError):
            check_support(np.array([1.5]), box, "x")


class TestLinearModel:
    """Outcome y ~ N(theta x1 + psi x2, 1): values are closed form."""

    def setup_method(self):
        self.model = linear_model()

    def test_loglik_at_mean_is_normal_mode(self):
        obs = Observation([2.0, -1.0], 2.0 * 0.7 - 1.0 * 0.3)
        ll = self.model.log_likelihood(obs, SharedParam(0.7), TaskParam(0.3))
        assert_allclose(ll, -0.9189385332046727, rtol=0, atol=1e-15)

    def test_unit_residual_costs_half(self):
        obs = Observation([1.0, 0.0], 1.0)
        ll0 = self.model.log_likelihood(obs, SharedParam(1.0), TaskParam(5.0))
        ll1 = self.model.log_likelihood(obs, SharedParam(2.0), TaskParam(5.0))
        assert_allclose(ll0 - ll1, 0.5, rtol=0, atol=1e-12)

    def test_batch_matches_scalar_loop(self):
        rng = np.random.default_rng(RNG_SEED)
        data = SourceData(tuple(
            Observation(rng.normal(size=2), rng.normal()) for _ in range(6)))
        thetas = rng.normal(size=(4, 1))
        psis = rng.normal(size=(3, 1))
        tensor = loglik_tensor(self.model, data, thetas, psis)
        for i, obs in enumerate(data):
            for a in range(4):
                for b in range(3):
                    assert_allclose(
                        tensor[i, a, b],
                        self.model.log_likelihood(obs, thetas[a], psis[b]),
                        rtol=0, atol=1e-12)

    def test_mode_density_is_standard_normal_mode(self):
        lm = self.model.log_mode_density(np.zeros((2, 1)), np.zeros((3, 1)))
        assert lm.shape == (2, 3)
        assert_allclose(lm, -0.5 * LOG_2PI, rtol=0, atol=1e-15)

    def test_simulate_moments(self):
        rng = np.random.default_rng(RNG_SEED)
        x = np.array([1.5, -2.0])
        draws = np.array([
            self.model.simulate(x, SharedParam(-1.0), TaskParam(0.5), rng).outcome
            for _ in range(20000)])
        assert_allclose(draws.mean(), -1.0 * 1.5 + 0.5 * -2.0, atol=0.03)
        assert_allclose(draws.var(), 1.0, atol=0.04)


class TestBinomialLogitModel:
    def setup_method(self):
        self.model = binomial_logit_model()

    def test_single_trial_even_odds(self):
        obs = Observation(np.zeros(4), 1, trial_count=1)
        ll = self.model.log_likelihood(obs, SharedParam(np.zeros(4)), TaskParam(0.0))
        assert_allclose(ll, np.log(0.5), rtol=0, atol=1e-15)

    def test_matches_high_precision_oracle(self):
        """Log pmf agrees with a 50-digit mpmath evaluation, including
        logits far into both tails where naive sigmoids underflow."""
        import mpmath as mp
        mp.mp.dps = 50
        rng = np.random.default_rng(RNG_SEED)
        cases = [(y, n, t)
                 for n in (1, 5, 40)
                 for y in (0, 1, n // 2, n)
                 for t in (-40.0, -3.2, 0.0, 1.7, 40.0)
                 if y <= n]
        for y, n, t in cases:
            x = rng.normal(size=4)
            theta = np.zeros(4)
            psi = t - float(theta @ x)
            obs = Observation(x, y, trial_count=n)
            got = self.model.log_likelihood(obs, SharedParam(theta), TaskParam(psi))
            p = 1 / (1 + mp.e ** (-mp.mpf(t)))
            want = float(mp.log(mp.binomial(n, y)) + y * mp.log(p)
                         + (n - y) * mp.log(1 - p))
            assert_allclose(got, want, rtol=1e-10, atol=1e-10)

    def test_requires_trial_count(self):
        obs = Observation(np.zeros(4), 1)
        with pytest.raises(ValueError, match="trial_count"):
            self.model.log_likelihood(obs, SharedParam(np.zeros(4)), TaskParam(0.0))

    def test_rejects_outcome_above_trials(self):
        obs = Observation(np.zeros(4), 9, trial_count=5)
        with pytest.raises(ValueError):
            self.model.log_likelihood(obs, SharedParam(np.zeros(4)), TaskParam(0.0))

    def test_batch_matches_scalar_loop(self):
        rng = np.random.default_rng(RNG_SEED)
        data = SourceData(tuple(
            Observation(rng.normal(size=4), int(rng.integers(0, 11)), trial_count=10)
            for _ in range(5)))
        thetas = rng.normal(size=(3, 4))
        psis = rng.normal(size=(4, 1))
        tensor = loglik_tensor(self.model, data, thetas, psis)
        assert tensor.shape == (5, 3, 4)
        for i, obs in enumerate(data):
            for a in range(3):
                for b in range(4):
                    assert_allclose(
                        tensor[i, a, b],
                        self.model.log_likelihood(obs, thetas[a], psis[b]),
                        rtol=0, atol=1e-11)

    def test_simulate_mean(self):
        rng = np.random.default_rng(RNG_SEED)
        x = np.array([1.0, 0.0, 0.0, 0.0])
        theta, psi = SharedParam([0.8, 0, 0, 0]), TaskParam(-0.3)
        draws = np.array([
            self.model.simulate(x, theta, psi, rng, trial_count=20).outcome
            for _ in range(4000)])
        assert_allclose(draws.mean(), 20 * expit(0.5), atol=0.15)

    def test_simulate_needs_trial_count(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="trial_count"):
            self.model.simulate(np.zeros(4), SharedParam(np.zeros(4)),
                                TaskParam(0.0), rng)


class TestGpModel:
    """Composite-kernel GP: validated against dense linear algebra done
    with an independent factorization."""

    def setup_method(self):
        self.x = np.linspace(0.0, 1.0, 7)
        self.model = gp_model(self.x)

    def _kernel(self, theta, psi, jitter=1e-8):
        sq = (self.x[:, None] - self.x[None, :]) ** 2
        k = 0.5 * (np.exp(-0.5 * sq / theta ** 2) + np.exp(-0.5 * sq / psi ** 2))
        return k + jitter * np.eye(self.x.size)

    def test_zero_trajectory_is_half_logdet(self):
        """With y = 0 the log-likelihood reduces to -0.5 log det(2 pi K);
        the oracle uses slogdet (LU), the implementation Cholesky."""
        obs = Observation(self.x, np.zeros(7))
        for theta, psi in [(0.3, 1.2), (2.0, 0.1), (5.0, 5.0)]:
            k = self._kernel(theta, psi)
            _, logdet = np.linalg.slogdet(k)
            want = -0.5 * (logdet + 7 * LOG_2PI)
            got = self.model.log_likelihood(obs, SharedParam(theta), TaskParam(psi))
            # long lengthscales leave K barely above the jitter floor, so
            # LU and Cholesky determinants drift apart in the last digits
            assert_allclose(got, want, rtol=1e-8)

    def test_general_trajectory_against_solve_oracle(self):
        rng = np.random.default_rng(RNG_SEED)
        k = self._kernel(0.7, 2.5)
        y = np.linalg.cholesky(k) @ rng.normal(size=7)
        obs = Observation(self.x, y)
        _, logdet = np.linalg.slogdet(k)
        want = -0.5 * (y @ np.linalg.solve(k, y) + logdet + 7 * LOG_2PI)
        got = self.model.log_likelihood(obs, SharedParam(0.7), TaskParam(2.5))
        assert_allclose(got, want, rtol=1e-9)

    def test_equal_lengthscales_collapse_to_single_rbf(self):
        obs = Observation(self.x, np.sin(3 * self.x))
        sq = (self.x[:, None] - self.x[None, :]) ** 2
        k = np.exp(-0.5 * sq / 0.8 ** 2) + 1e-8 * np.eye(7)
        _, logdet = np.linalg.slogdet(k)
        y = obs.outcome
        want = -0.5 * (y @ np.linalg.solve(k, y) + logdet + 7 * LOG_2PI)
        got = self.model.log_likelihood(obs, SharedParam(0.8), TaskParam(0.8))
        assert_allclose(got, want, rtol=1e-9)

    def test_kernel_diagonal_is_one_plus_jitter(self):
        assert_allclose(np.diag(self._kernel(1.0, 2.0)), 1.0 + 1e-8, rtol=0,
                        atol=1e-15)

    def test_positive_definite_across_support(self):
        rng = np.random.default_rng(RNG_SEED)
        obs = Observation(self.x, np.zeros(7))
        for _ in range(100):
            theta = rng.uniform(0.05, 12.0)
            psi = rng.uniform(0.05, 12.0)
            ll = self.model.log_likelihood(obs, SharedParam(theta), TaskParam(psi))
            assert np.isfinite(ll)

    def test_batch_matches_scalar_loop(self):
        rng = np.random.default_rng(RNG_SEED)
        data = SourceData(tuple(
            Observation(self.x, rng.normal(size=7)) for _ in range(3)))
        thetas = rng.uniform(0.2, 6.0, size=(4, 1))
        psis = rng.uniform(0.2, 6.0, size=(2, 1))
        tensor = loglik_tensor(self.model, data, thetas, psis)
        for i, obs in enumerate(data):
            for a in range(4):
                for b in range(2):
                    assert_allclose(
                        tensor[i, a, b],
                        self.model.log_likelihood(obs, thetas[a], psis[b]),
                        rtol=1e-9)

    def test_simulate_pointwise_variance(self):
        rng = np.random.default_rng(RNG_SEED)
        theta, psi = SharedParam(1.0), TaskParam(3.0)
        draws = np.stack([
            self.model.simulate(self.x, theta, psi, rng).outcome
            for _ in range(3000)])
        assert_allclose(draws.var(axis=0), 1.0, atol=0.12)
        assert_allclose(draws.mean(axis=0), 0.0, atol=0.08)

    def test_rejects_nonpositive_lengthscale(self):
        obs = Observation(self.x, np.zeros(7))
        with pytest.raises(ValueError):
            self.model.log_likelihood(obs, SharedParam(-1.0), TaskParam(1.0))

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            gp_model([0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            gp_model([0.5])


class TestDiscreteToyModel:
    def test_loglik_reads_the_table(self):
        rng = np.random.default_rng(RNG_SEED)
        table = _toy_table(rng)
        model = discrete_toy_model(3, 2, 2, table)
        for a in range(2):
            for b in range(2):
                for o in range(3):
                    obs = Observation(np.empty(0), o)
                    got = model.log_likelihood(obs, SharedParam(float(a)),
                                               TaskParam(float(b)))
                    assert_allclose(got, np.log(table[a, b, o]), rtol=0, atol=1e-14)

    def test_uniform_table(self):
        table = np.full((2, 2, 4), 0.25)
        model = discrete_toy_model(4, 2, 2, table)
        obs = Observation(np.empty(0), 2)
        ll = model.log_likelihood(obs, SharedParam(0.0), TaskParam(1.0))
        assert_allclose(ll, np.log(0.25), rtol=0, atol=1e-15)

    def test_rows_must_sum_to_one(self):
        bad = np.full((2, 2, 3), 0.5)
        with pytest.raises(ValueError):
            discrete_toy_model(3, 2, 2, bad)

    def test_zero_probability_outcome_gives_neg_inf(self):
        table = np.array([[[1.0, 0.0], [0.5, 0.5]],
                          [[0.3, 0.7], [0.9, 0.1]]])
        model = discrete_toy_model(2, 2, 2, table)
        obs = Observation(np.empty(0), 1)
        ll = model.log_likelihood(obs, SharedParam(0.0), TaskParam(0.0))
        assert ll == -np.inf

    def test_batch_lookup_matches_loop(self):
        rng = np.random.default_rng(RNG_SEED)
        table = _toy_table(rng, n_out=4, n_theta=3, n_psi=2)
        model = discrete_toy_model(4, 3, 2, table)
        data = SourceData(tuple(Observation(np.empty(0), int(o))
                                for o in rng.integers(0, 4, size=5)))
        thetas = np.arange(3, dtype=float)[:, None]
        psis = np.arange(2, dtype=float)[:, None]
        tensor = loglik_tensor(model, data, thetas, psis)
        for i, obs in enumerate(data):
            for a in range(3):
                for b in range(2):
                    assert_allclose(tensor[i, a, b],
                                    np.log(table[a, b, int(obs.outcome)]),
                                    rtol=0, atol=1e-14)

    def test_simulate_goodness_of_fit(self):
        rng = np.random.default_rng(RNG_SEED)
        table = np.array([[[0.5, 0.3, 0.2]]])
        model = discrete_toy_model(3, 1, 1, table)
        draws = np.array([model.simulate(np.empty(0), SharedParam(0.0),
                                         TaskParam(0.0), rng).outcome
                          for _ in range(2000)])
        counts = np.bincount(draws.astype(int), minlength=3)
        result = stats.chisquare(counts, 2000 * table[0, 0])
        assert result.pvalue > 0.01

    def test_outcome_space_enumerates_alphabet(self):
        table = np.full((1, 1, 5), 0.2)
        model = discrete_toy_model(5, 1, 1, table)
        assert_allclose(model.outcome_space, np.arange(5))


class TestLoglikTensor:
    def test_nan_is_reported_with_observation_index(self):
        model = linear_model()
        bad = dict(vars(model))

        def nan_batch(data, thetas, psis):
            out = np.zeros((data.n, thetas.shape[0], psis.shape[0]))
            out[1, 0, 0] = np.nan
            return out

        import dataclasses
        model_bad = dataclasses.replace(model, log_likelihood_batch=nan_batch)
        data = SourceData((Observation([0, 0], 0.0), Observation([0, 0], 0.0)))
        with pytest.raises(FloatingPointError, match="1"):
            loglik_tensor(model_bad, data, np.zeros((1, 1)), np.zeros((1, 1)))
