"""Seeded generators for the simulation studies.

Three experimental setups live here: a linear-regression setup whose
multicollinearity knob makes the shared and task effects hard to tell
apart, an expert-prompt proxy on a 0-7 agreement scale with optional
contamination, and a GP trajectory setup where tasks differ through kernel
lengthscales.  A small imprecise-estimate proxy covers the observational
case study.

Every generator is a pure function of its arguments and a seed, using the
counter-based Philox generator so parallel sweeps stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import math

import numpy as np
from scipy.special import logsumexp

from .inference import ProxyObservation
from .models import LOG_2PI, ModelSpec, Observation, SharedParam, SourceData, \
    TaskParam, param_values

PROXY_TRIALS = 7
PROB_FLOOR = 1e-9

LINEAR_THETA_STAR = -1.0
GP_PSI_SHAPE = 3.0
GP_PSI_SCALE = 0.8


def task_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible stream number `index` of a master seed."""
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be nonnegative")
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


# ---------------------------------------------------------------------------
# scenario types
# ---------------------------------------------------------------------------

def _check_pct(value: float, name: str):
    if not 0.0 <= value <= 100.0:
        raise ValueError(f"{name} must be a percentage in [0, 100], got {value}")


@dataclass(frozen=True)
class LinearScenario:
    multicollinearity: float = 0.0
    n_outcome: int = 75
    n_proxy_prompts: int = 25
    target_resemblance_pct: float = 100.0
    contamination_pct: float = 0.0

    def __post_init__(self):
        if self.n_outcome < 1 or self.n_proxy_prompts < 1:
            raise ValueError("counts must be positive")
        _check_pct(self.target_resemblance_pct, "target_resemblance_pct")
        _check_pct(self.contamination_pct, "contamination_pct")


@dataclass(frozen=True)
class GpScenario:
    n_trajectories: int = 24
    m_target: int = 12
    m_source: int = 8
    resolution: int = 10
    theta_star: float = 1.0
    contamination_pct: float = 0.0
    refinement_T: int = 3

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be positive")
        if not 0 <= self.m_source <= self.n_trajectories:
            raise ValueError("m_source must lie in [0, n_trajectories]")
        if not 0 <= self.m_target <= self.n_trajectories:
            raise ValueError("m_target must lie in [0, n_trajectories]")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")
        if self.theta_star <= 0:
            raise ValueError("theta_star is a lengthscale and must be positive")
        _check_pct(self.contamination_pct, "contamination_pct")


# ---------------------------------------------------------------------------
# linear-regression covariates
# ---------------------------------------------------------------------------

def gen_linear_covariates(rho_c: float, count: int, seed) -> np.ndarray:
    """Covariate rows (x1, x2) with tunable collinearity, shape (count, 2).

    A latent x' ~ N(rho_c, 0.25) drives both columns: x1 ~ N(x', 0.25) and
    x2 ~ N(-rho_c^2 / x', 0.25).  Larger rho_c therefore pushes x1 and x2
    toward a deterministic inverse relationship.  Latents within 1e-6 of
    zero are redrawn to keep the division safe; at rho_c = 0 the numerator
    vanishes and x2 is plain N(0, 0.25) noise.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else task_rng(int(seed), 0)
    sd = np.sqrt(0.25)
    latent = rng.normal(rho_c, sd, size=count)
    for _ in range(100):
        bad = np.abs(latent) < 1e-6
        if not np.any(bad):
            break
        latent[bad] = rng.normal(rho_c, sd, size=bad.sum())
    x1 = rng.normal(latent, sd)
    x2 = rng.normal(-(rho_c ** 2) / latent, sd)
    return np.column_stack([x1, x2])


# ---------------------------------------------------------------------------
# expert-prompt proxy (0-7 agreement scale)
# ---------------------------------------------------------------------------

def prompt_agreement(model: ModelSpec, prompt: Observation, psi_value,
                     theta_nodes=None, theta_prior=None) -> float:
    """Probability that an expert endorses the prompt as target-like.

    The prompt's likelihood is marginalized over the theta prior and divided
    by the modal density of that marginal predictive, so the result lives in
    [0, 1].  The linear model admits a closed form: theta integrates out to
    a Gaussian in the outcome with variance 1 + x1^2, whose own mode is the
    normalizer, leaving exp(-resid^2 / (2 var)).  Other models marginalize
    over the supplied theta grid and normalize by the prior-mixed component
    modes, exact for the trajectory model where every component peaks at
    the zero trajectory.
    """
    psi = np.atleast_1d(np.asarray(psi_value, dtype=float))
    if model.name == "linear":
        x1, x2 = prompt.covariates
        var = 1.0 + x1 ** 2
        resid = float(prompt.outcome) - psi[0] * x2
        return float(np.exp(-0.5 * resid ** 2 / var))
    if theta_nodes is None or theta_prior is None:
        raise ValueError(f"model {model.name!r} needs theta_nodes and theta_prior "
                         "to marginalize the prompt likelihood")
    if model.log_mode_density is None:
        raise ValueError(f"model {model.name!r} has no mode density to normalize with")
    thetas = np.atleast_2d(np.asarray(theta_nodes, dtype=float))
    if thetas.shape[0] == model.k_theta and thetas.shape[1] != model.k_theta:
        thetas = thetas.T
    lls = np.array([model.log_likelihood(prompt, th, psi) for th in thetas])
    log_mode = np.asarray(model.log_mode_density(thetas, psi[None, :]), dtype=float)[:, 0]
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.asarray(theta_prior, dtype=float))
    log_p = logsumexp(lls + log_prior) - logsumexp(log_mode + log_prior)
    return float(min(1.0, np.exp(log_p)))


_LOG_BINOM_COEF = tuple(math.log(math.comb(PROXY_TRIALS, z))
                        for z in range(PROXY_TRIALS + 1))


def _prompt_loglik(model: ModelSpec, prompt: Observation, theta_nodes, theta_prior):
    def pll(payload, psi) -> float:
        p = prompt_agreement(model, prompt, psi, theta_nodes, theta_prior)
        p = min(max(p, PROB_FLOOR), 1.0 - PROB_FLOOR)
        z = int(payload)
        return _LOG_BINOM_COEF[z] + z * math.log(p) \
            + (PROXY_TRIALS - z) * math.log1p(-p)

    return pll


def gen_expert_proxy(model: ModelSpec, prompts, psi_target_star,
                     contamination_pct: float, seed, theta_nodes=None,
                     theta_prior=None) -> list[ProxyObservation]:
    """Simulated expert ratings z_j ~ Binomial(7, p~_j) for each prompt.

    p~_j is the prompt's agreement probability at the true target task
    parameter.  A contaminated_pct share of prompts (exact count, rounded,
    positions drawn without replacement) is answered adversarially from
    Binomial(7, 1 - p~_j).  The returned observations carry the learner's
    likelihood, which always models the clean process.
    """
    prompts = list(prompts)
    if len(prompts) == 0:
        raise ValueError("prompts must be nonempty")
    _check_pct(contamination_pct, "contamination_pct")
    rng = seed if isinstance(seed, np.random.Generator) else task_rng(int(seed), 0)
    psi_star = param_values(psi_target_star)

    n = len(prompts)
    n_bad = int(round(contamination_pct * n / 100.0))
    bad = np.zeros(n, dtype=bool)
    if n_bad > 0:
        bad[rng.choice(n, size=n_bad, replace=False)] = True

    out = []
    for j, prompt in enumerate(prompts):
        p = prompt_agreement(model, prompt, psi_star, theta_nodes, theta_prior)
        z = int(rng.binomial(PROXY_TRIALS, 1.0 - p if bad[j] else p))
        out.append(ProxyObservation(
            payload=z,
            proxy_log_likelihood=_prompt_loglik(model, prompt, theta_nodes, theta_prior),
        ))
    return out


# ---------------------------------------------------------------------------
# linear experiment assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearInstance:
    source: SourceData
    prompts: tuple
    proxies: tuple
    theta_star: SharedParam
    psi_star: tuple
    psi_target_star: TaskParam


def gen_linear_instance(scenario: LinearScenario, seed) -> LinearInstance:
    """One full draw of the linear experiment.

    The true shared effect is fixed at -1.  The target task parameter is
    drawn fresh from its N(0, 1) prior each time; a target_resemblance_pct
    share of source observations (exact count, rounded) gets the target's
    task parameter and the remainder sit at the prior mean 0.  Expert
    prompts are drawn from the same covariate generator and answered under
    the target task.
    """
    from .models import linear_model

    rng = seed if isinstance(seed, np.random.Generator) else task_rng(int(seed), 0)
    model = linear_model()
    theta_star = SharedParam(LINEAR_THETA_STAR)
    psi_target = TaskParam(rng.normal(0.0, 1.0))

    n = scenario.n_outcome
    n_like = int(round(scenario.target_resemblance_pct * n / 100.0))
    psi_vals = np.zeros(n)
    if n_like > 0:
        psi_vals[rng.choice(n, size=n_like, replace=False)] = psi_target.value[0]

    x_source = gen_linear_covariates(scenario.multicollinearity, n, rng)
    obs = []
    for i in range(n):
        obs.append(model.simulate(x_source[i], theta_star, TaskParam(psi_vals[i]), rng))
    source = SourceData(tuple(obs))

    x_prompt = gen_linear_covariates(scenario.multicollinearity,
                                     scenario.n_proxy_prompts, rng)
    prompts = tuple(model.simulate(x_prompt[j], theta_star, psi_target, rng)
                    for j in range(scenario.n_proxy_prompts))
    proxies = tuple(gen_expert_proxy(model, prompts, psi_target,
                                     scenario.contamination_pct, rng))
    return LinearInstance(source=source, prompts=prompts, proxies=proxies,
                          theta_star=theta_star,
                          psi_star=tuple(TaskParam(v) for v in psi_vals),
                          psi_target_star=psi_target)


# ---------------------------------------------------------------------------
# GP trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GpInstance:
    source: SourceData
    prompts: tuple
    theta_star: SharedParam
    psi_star: tuple
    psi_target_star: TaskParam
    x_grid: np.ndarray = field(repr=False)


def gen_gp_trajectories(scenario: GpScenario, seed) -> GpInstance:
    """Trajectory draws for the GP experiment.

    Trajectories 1..m_target come from the target task (all sharing the
    freshly drawn psi*), the rest from per-trajectory Gamma(3, scale 0.8)
    task draws.  The first m_source trajectories are set aside as expert
    prompts and the last m_source form the source data, so raising m_target
    slides target-task trajectories into the source set.
    """
    from .models import gp_model

    rng = seed if isinstance(seed, np.random.Generator) else task_rng(int(seed), 0)
    x = np.linspace(0.0, 1.0, scenario.resolution)
    model = gp_model(x)
    theta_star = SharedParam(scenario.theta_star)
    psi_target = TaskParam(rng.gamma(GP_PSI_SHAPE, GP_PSI_SCALE))

    n = scenario.n_trajectories
    psis = []
    trajectories = []
    for i in range(n):
        if i < scenario.m_target:
            psi = psi_target
        else:
            psi = TaskParam(rng.gamma(GP_PSI_SHAPE, GP_PSI_SCALE))
        psis.append(psi)
        trajectories.append(model.simulate(x, theta_star, psi, rng))

    m_s = scenario.m_source
    prompts = tuple(trajectories[:m_s])
    source_obs = tuple(trajectories[n - m_s:]) if m_s > 0 else tuple(trajectories)
    source_psis = tuple(psis[n - m_s:]) if m_s > 0 else tuple(psis)
    return GpInstance(source=SourceData(source_obs), prompts=prompts,
                      theta_star=theta_star, psi_star=source_psis,
                      psi_target_star=psi_target, x_grid=x)


# ---------------------------------------------------------------------------
# imprecise-estimate proxy (observational case study)
# ---------------------------------------------------------------------------

def gen_imprecise_estimate_proxy(psi_target_star, sigma: float, bias_flag: bool,
                                 seed) -> ProxyObservation:
    """A noisy scalar estimate of the target task parameter.

    z is drawn from N(psi*, sigma) with, when bias_flag is set, an extra
    N(0, 3) offset drawn once.  The learner's likelihood stays the clean
    N(psi, sigma) model either way.  sigma and the bias scale are standard
    deviations.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = seed if isinstance(seed, np.random.Generator) else task_rng(int(seed), 0)
    psi_star = param_values(psi_target_star)
    z = float(rng.normal(psi_star[0], sigma))
    if bias_flag:
        z += float(rng.normal(0.0, 3.0))

    def pll(payload, psi) -> float:
        p = np.atleast_1d(np.asarray(psi, dtype=float))
        return float(-0.5 * LOG_2PI - np.log(sigma)
                     - 0.5 * ((payload - p[0]) / sigma) ** 2)

    return ProxyObservation(payload=z, proxy_log_likelihood=pll)
