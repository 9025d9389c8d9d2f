"""Synthetic data protocols: determinism, layout, and distributional checks.

Moment checks run on fixed seeds, with bands wide enough to cover the
sampling noise measured across many seeds (the x2 column is heavy-tailed
because of the inverse-latent construction, so its band is generous and
the dependence check uses rank correlation).
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from relbayes.models import LOG_2PI, Observation, gp_model, linear_model
from relbayes.synthetic import (GpScenario, LinearScenario, gen_expert_proxy,
                                gen_gp_trajectories, gen_imprecise_estimate_proxy,
                                gen_linear_covariates, gen_linear_instance,
                                prompt_agreement, task_rng)

RNG_SEED = 20260817


class TestTaskRng:
    def test_same_key_reproduces_stream(self):
        a = task_rng(123, 4).standard_normal(16)
        b = task_rng(123, 4).standard_normal(16)
        assert_allclose(a, b, rtol=0, atol=0)

    def test_different_indices_are_distinct_streams(self):
        a = task_rng(123, 0).standard_normal(16)
        b = task_rng(123, 1).standard_normal(16)
        assert np.max(np.abs(a - b)) > 0.1

    def test_different_master_seeds_are_distinct(self):
        a = task_rng(1, 0).standard_normal(16)
        b = task_rng(2, 0).standard_normal(16)
        assert np.max(np.abs(a - b)) > 0.1

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            task_rng(-1, 0)
        with pytest.raises(ValueError):
            task_rng(0, -2)


class TestLinearCovariates:
    def test_shape_and_determinism(self):
        x = gen_linear_covariates(1.0, 50, 7)
        assert x.shape == (50, 2)
        again = gen_linear_covariates(1.0, 50, 7)
        assert_allclose(x, again, rtol=0, atol=0)

    def test_independent_columns_at_zero_collinearity(self):
        x = gen_linear_covariates(0.0, 100_000, task_rng(3, 0))
        assert_allclose(x[:, 0].mean(), 0.0, atol=0.02)
        assert_allclose(x[:, 1].mean(), 0.0, atol=0.02)
        # x2 is pure N(0, 0.25) noise here
        assert_allclose(x[:, 1].var(), 0.25, atol=0.01)
        assert abs(np.corrcoef(x.T)[0, 1]) < 0.02

    def test_collinear_regime_first_column_moments(self):
        x = gen_linear_covariates(2.0, 100_000, task_rng(7, 0))
        assert_allclose(x[:, 0].mean(), 2.0, atol=0.05)
        # latent variance plus observation noise
        assert_allclose(x[:, 0].var(), 0.5, atol=0.02)

    def test_collinear_regime_second_column_mean(self):
        """E[x2] = E[-4 / x'] with x' ~ N(2, 0.25), about -2.157; the
        inverse latent is heavy-tailed so the band stays wide."""
        x = gen_linear_covariates(2.0, 100_000, task_rng(7, 0))
        assert -2.4 < x[:, 1].mean() < -2.0

    def test_collinear_regime_couples_the_columns(self):
        """Both columns increase with the latent, so the dependence is
        strongly positive; rank correlation is used because occasional
        near-zero latents make the Pearson statistic unstable."""
        x = gen_linear_covariates(2.0, 10_000, task_rng(5, 0))
        rho = stats.spearmanr(x[:, 0], x[:, 1]).statistic
        assert rho > 0.4

    def test_values_always_finite(self):
        for rho_c in (0.0, 0.5, 2.0):
            x = gen_linear_covariates(rho_c, 5000, task_rng(11, 0))
            assert np.all(np.isfinite(x))

    def test_count_must_be_positive(self):
        with pytest.raises(ValueError):
            gen_linear_covariates(1.0, 0, 0)


class TestPromptAgreement:
    def test_linear_closed_form(self):
        """Marginalizing theta ~ N(0,1) gives y ~ N(psi x2, 1 + x1^2); the
        agreement is that density over its own mode, a pure exponential."""
        model = linear_model()
        prompt = Observation([1.5, -2.0], 0.7)
        psi = 0.4
        got = prompt_agreement(model, prompt, psi)
        var = 1.0 + 1.5 ** 2
        resid = 0.7 - psi * -2.0
        want = np.exp(-0.5 * resid ** 2 / var)
        assert_allclose(got, want, rtol=0, atol=1e-15)

    def test_perfect_prompt_scores_one(self):
        # x1 = 0 removes the theta variance, and a zero residual hits the mode
        model = linear_model()
        prompt = Observation([0.0, 2.0], 1.0)
        assert prompt_agreement(model, prompt, 0.5) == 1.0

    def test_agreement_decreases_with_residual(self):
        model = linear_model()
        vals = [prompt_agreement(model, Observation([1.0, 1.0], y), 0.0)
                for y in (0.0, 1.0, 2.0, 4.0)]
        assert np.all(np.diff(vals) < 0)

    def test_grid_marginalization_path(self):
        x = np.linspace(0, 1, 5)
        model = gp_model(x)
        rng = np.random.default_rng(RNG_SEED)
        prompt = Observation(x, rng.normal(size=5) * 0.5)
        nodes = np.array([[0.5], [1.0], [2.0]])
        prior = np.array([0.2, 0.5, 0.3])
        got = prompt_agreement(model, prompt, 1.5, theta_nodes=nodes,
                               theta_prior=prior)
        lls = np.array([model.log_likelihood(prompt, th, np.array([1.5]))
                        for th in nodes])
        mode = model.log_mode_density(nodes, np.array([[1.5]]))[:, 0]
        # prior-mixed density over the prior-mixed mode heights
        want = float(prior @ np.exp(lls)) / float(prior @ np.exp(mode))
        assert_allclose(got, want, rtol=1e-12)
        assert 0.0 <= got <= 1.0

    def test_non_linear_model_requires_grid(self):
        x = np.linspace(0, 1, 4)
        model = gp_model(x)
        with pytest.raises(ValueError, match="theta_nodes"):
            prompt_agreement(model, Observation(x, np.zeros(4)), 1.0)


class TestExpertProxy:
    def _perfect_prompt(self, psi):
        # agreement probability exactly 1 at this psi
        return Observation([0.0, 1.0], float(psi))

    def test_clean_ratings_of_perfect_prompts_max_out(self):
        model = linear_model()
        prompts = [self._perfect_prompt(0.5) for _ in range(40)]
        proxies = gen_expert_proxy(model, prompts, 0.5, 0.0, task_rng(1, 0))
        assert [p.payload for p in proxies] == [7] * 40

    def test_full_contamination_flips_perfect_prompts_to_zero(self):
        model = linear_model()
        prompts = [self._perfect_prompt(0.5) for _ in range(40)]
        proxies = gen_expert_proxy(model, prompts, 0.5, 100.0, task_rng(1, 0))
        assert [p.payload for p in proxies] == [0] * 40

    def test_contaminated_count_is_exact(self):
        model = linear_model()
        prompts = [self._perfect_prompt(0.0) for _ in range(10)]
        for pct, expect in ((40.0, 4), (25.0, 2), (75.0, 8), (0.0, 0)):
            proxies = gen_expert_proxy(model, prompts, 0.0, pct, task_rng(2, 0))
            zeros = sum(1 for p in proxies if p.payload == 0)
            # round(pct * 10 / 100), and flipped perfect prompts give z = 0
            assert zeros == expect

    def test_half_agreement_rating_mean(self):
        """Residual sqrt(2 ln 2) at x1 = 0 puts the agreement probability at
        exactly one half, so ratings average 3.5."""
        model = linear_model()
        r = np.sqrt(2 * np.log(2))
        prompts = [Observation([0.0, 1.0], r) for _ in range(10_000)]
        proxies = gen_expert_proxy(model, prompts, 0.0, 0.0, task_rng(3, 0))
        z = np.array([p.payload for p in proxies], dtype=float)
        assert_allclose(z.mean(), 3.5, atol=0.06)

    def test_learner_likelihood_matches_binomial_pmf(self):
        model = linear_model()
        prompt = Observation([1.0, -0.5], 0.3)
        proxies = gen_expert_proxy(model, [prompt], 0.2, 0.0, task_rng(4, 0))
        pll = proxies[0].proxy_log_likelihood
        psi = np.array([0.8])
        p = prompt_agreement(model, prompt, psi)
        p = min(max(p, 1e-9), 1 - 1e-9)
        for z in range(8):
            assert_allclose(pll(z, psi), stats.binom.logpmf(z, 7, p),
                            rtol=1e-12)

    def test_likelihood_finite_at_extreme_agreement(self):
        model = linear_model()
        perfect = self._perfect_prompt(0.0)
        hopeless = Observation([0.0, 1.0], 500.0)
        proxies = gen_expert_proxy(model, [perfect, hopeless], 0.0, 0.0,
                                   task_rng(5, 0))
        for proxy in proxies:
            for z in (0, 7):
                assert np.isfinite(proxy.proxy_log_likelihood(z, np.array([0.0])))

    def test_deterministic_given_seed(self):
        model = linear_model()
        prompts = [Observation([1.0, 0.5], 0.2), Observation([0.5, 1.0], -0.4)]
        a = gen_expert_proxy(model, prompts, 0.1, 50.0, task_rng(6, 0))
        b = gen_expert_proxy(model, prompts, 0.1, 50.0, task_rng(6, 0))
        assert [p.payload for p in a] == [p.payload for p in b]

    def test_empty_prompt_list_rejected(self):
        with pytest.raises(ValueError):
            gen_expert_proxy(linear_model(), [], 0.0, 0.0, 0)


class TestLinearInstance:
    def test_default_scenario_layout(self):
        inst = gen_linear_instance(LinearScenario(), 42)
        assert inst.source.n == 75
        assert len(inst.prompts) == 25
        assert len(inst.proxies) == 25
        assert len(inst.psi_star) == 75
        assert inst.theta_star.value[0] == -1.0

    def test_full_resemblance_copies_target_everywhere(self):
        inst = gen_linear_instance(LinearScenario(target_resemblance_pct=100.0), 7)
        target = inst.psi_target_star.value[0]
        assert all(p.value[0] == target for p in inst.psi_star)

    def test_zero_resemblance_keeps_sources_at_prior_mean(self):
        inst = gen_linear_instance(LinearScenario(target_resemblance_pct=0.0), 7)
        assert all(p.value[0] == 0.0 for p in inst.psi_star)

    def test_partial_resemblance_count_is_exact(self):
        inst = gen_linear_instance(LinearScenario(target_resemblance_pct=40.0), 9)
        target = inst.psi_target_star.value[0]
        n_like = sum(1 for p in inst.psi_star if p.value[0] == target)
        assert n_like == 30                       # round(0.4 * 75)

    def test_instances_are_deterministic(self):
        a = gen_linear_instance(LinearScenario(multicollinearity=2.0), 11)
        b = gen_linear_instance(LinearScenario(multicollinearity=2.0), 11)
        ya = [o.outcome for o in a.source]
        yb = [o.outcome for o in b.source]
        assert_allclose(ya, yb, rtol=0, atol=0)
        assert [p.payload for p in a.proxies] == [p.payload for p in b.proxies]

    def test_different_seeds_differ(self):
        a = gen_linear_instance(LinearScenario(), 1)
        b = gen_linear_instance(LinearScenario(), 2)
        assert a.psi_target_star.value[0] != b.psi_target_star.value[0]

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            LinearScenario(target_resemblance_pct=120.0)
        with pytest.raises(ValueError):
            LinearScenario(contamination_pct=-5.0)
        with pytest.raises(ValueError):
            LinearScenario(n_outcome=0)


class TestGpTrajectories:
    def test_default_layout(self):
        inst = gen_gp_trajectories(GpScenario(), 3)
        assert len(inst.prompts) == 8
        assert inst.source.n == 8
        assert len(inst.psi_star) == 8
        assert inst.x_grid.shape == (10,)
        assert_allclose(inst.x_grid, np.linspace(0, 1, 10), rtol=0, atol=0)
        assert inst.theta_star.value[0] == 1.0

    def test_prompts_come_from_target_task(self):
        """m_target = 12 covers the first 8 trajectories, which become the
        prompts, while the last 8 (indices 16..23) are source tasks with
        their own task draws."""
        inst = gen_gp_trajectories(GpScenario(), 3)
        target = inst.psi_target_star.value[0]
        assert all(p.value[0] != target for p in inst.psi_star)

    def test_all_target_scenario_floods_the_source(self):
        inst = gen_gp_trajectories(GpScenario(n_trajectories=10, m_target=10,
                                              m_source=4, resolution=5), 3)
        target = inst.psi_target_star.value[0]
        assert all(p.value[0] == target for p in inst.psi_star)
        assert inst.source.n == 4

    def test_zero_source_keeps_everything(self):
        inst = gen_gp_trajectories(GpScenario(n_trajectories=6, m_target=3,
                                              m_source=0, resolution=5), 3)
        assert len(inst.prompts) == 0
        assert inst.source.n == 6

    def test_trajectory_marginal_variance_is_unit(self):
        scenario = GpScenario(n_trajectories=1, m_target=1, m_source=0,
                              resolution=5)
        draws = np.stack([
            gen_gp_trajectories(scenario, s).source[0].outcome
            for s in range(400)])
        assert_allclose(draws.var(axis=0), 1.0, atol=0.15)

    def test_deterministic(self):
        a = gen_gp_trajectories(GpScenario(), 17)
        b = gen_gp_trajectories(GpScenario(), 17)
        assert_allclose(a.source[0].outcome, b.source[0].outcome, rtol=0, atol=0)
        assert a.psi_target_star.value[0] == b.psi_target_star.value[0]

    def test_scenario_validation(self):
        with pytest.raises(ValueError):
            GpScenario(m_source=30)
        with pytest.raises(ValueError):
            GpScenario(theta_star=0.0)
        with pytest.raises(ValueError):
            GpScenario(resolution=1)
        with pytest.raises(ValueError):
            GpScenario(n_trajectories=0)


class TestImpreciseEstimateProxy:
    def test_unbiased_estimates_track_the_target(self):
        draws = np.array([
            gen_imprecise_estimate_proxy(1.3, 0.1, False, s).payload
            for s in range(10_000)])
        assert_allclose(draws.mean(), 1.3, atol=0.005)
        assert_allclose(draws.std(), 0.1, atol=0.01)

    def test_bias_inflates_variance(self):
        draws = np.array([
            gen_imprecise_estimate_proxy(0.0, 0.5, True, s).payload
            for s in range(4000)])
        # variance sigma^2 + 3^2 once the bias draw is included
        assert_allclose(draws.var(), 9.25, atol=1.0)

    def test_likelihood_is_exact_normal_density(self):
        proxy = gen_imprecise_estimate_proxy(0.7, 3.0, False, 0)
        z = proxy.payload
        at_center = proxy.proxy_log_likelihood(z, np.array([z]))
        assert_allclose(at_center, -0.5 * LOG_2PI - np.log(3.0), rtol=0,
                        atol=1e-15)
        off = proxy.proxy_log_likelihood(z, np.array([z + 1.5]))
        assert_allclose(at_center - off, 0.5 * (1.5 / 3.0) ** 2, rtol=1e-12)

    def test_learner_model_ignores_the_bias(self):
        """The bias corrupts the draw, never the learner's likelihood."""
        clean = gen_imprecise_estimate_proxy(0.0, 1.0, False, 5)
        biased = gen_imprecise_estimate_proxy(0.0, 1.0, True, 5)
        psi = np.array([0.4])
        want = -0.5 * LOG_2PI - 0.5 * (clean.payload - 0.4) ** 2
        assert_allclose(clean.proxy_log_likelihood(clean.payload, psi), want,
                        rtol=1e-12)
        want_b = -0.5 * LOG_2PI - 0.5 * (biased.payload - 0.4) ** 2
        assert_allclose(biased.proxy_log_likelihood(biased.payload, psi),
                        want_b, rtol=1e-12)

    def test_sigma_must_be_positive(self):
        with pytest.raises(ValueError):
            gen_imprecise_estimate_proxy(0.0, 0.0, False, 0)
        with pytest.raises(ValueError):
            gen_imprecise_estimate_proxy(0.0, -1.0, False, 0)

    def test_deterministic(self):
        a = gen_imprecise_estimate_proxy(0.2, 0.5, True, 9)
        b = gen_imprecise_estimate_proxy(0.2, 0.5, True, 9)
        assert a.payload == b.payload
