"""Posterior computation engines.

Two engines cover every model here: exact grid quadrature when the joint
parameter dimension is small, and random-walk Metropolis when it is not
(the smoking fixed-effects model).  All mass accumulation happens in log
space through log-sum-exp.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .grids import ParameterGrid, _check_mass
from .models import ModelSpec, SourceData, loglik_tensor, param_values

JOINT_TOL = 1e-10


class DegenerateProxyError(ValueError):
    """Proxy likelihood puts zero mass on every grid node."""


class McmcInitError(ValueError):
    """Metropolis log-target is not finite at the initial state."""


@dataclass(frozen=True)
class ProxyObservation:
    """Proxy information z with its learner-side likelihood model.

    proxy_log_likelihood(payload, psi) -> float, where psi is a task
    parameter vector.  The payload never depends on theta; there is no way
    to even pass one.
    """

    payload: object
    proxy_log_likelihood: Callable


def combine_proxies(proxies) -> ProxyObservation:
    """Merge independent proxy observations into one (log-likelihoods add)."""
    proxies = list(proxies)
    if not proxies:
        raise ValueError("no proxies to combine")
    payloads = [p.payload for p in proxies]

    def joint_ll(payload, psi):
        return sum(p.proxy_log_likelihood(z, psi) for p, z in zip(proxies, payload))

    return ProxyObservation(payload=payloads, proxy_log_likelihood=joint_ll)


def uninformative_proxy() -> ProxyObservation:
    return ProxyObservation(payload=None, proxy_log_likelihood=lambda z, psi: 0.0)


@dataclass(frozen=True)
class PosteriorTable:
    """Normalized joint posterior mass over a grid, plus its log-evidence."""

    grid: ParameterGrid
    joint_mass: np.ndarray
    log_evidence: float

    def __post_init__(self):
        jm = np.asarray(self.joint_mass, dtype=float)
        expect = (self.grid.n_theta, self.grid.n_psi)
        if jm.shape != expect:
            raise ValueError(f"joint_mass shape {jm.shape}, grid wants {expect}")
        if np.any(jm < 0):
            raise ValueError("joint_mass has negative entries")
        if abs(jm.sum() - 1.0) > JOINT_TOL:
            raise ValueError(f"joint_mass sums to {jm.sum()!r}, expected 1 within {JOINT_TOL}")
        object.__setattr__(self, "joint_mass", jm)

    def theta_marginal(self) -> np.ndarray:
        return self.joint_mass.sum(axis=1)

    def psi_marginal(self) -> np.ndarray:
        return self.joint_mass.sum(axis=0)


@dataclass(frozen=True)
class ProxyPosterior:
    mass: np.ndarray
    log_normalizer: float


def proxy_loglik_vector(proxy: ProxyObservation, psi_nodes: np.ndarray) -> np.ndarray:
    return np.array(
        [proxy.proxy_log_likelihood(proxy.payload, psi) for psi in np.atleast_2d(psi_nodes)],
        dtype=float,
    )


def proxy_posterior(grid: ParameterGrid, proxy: ProxyObservation) -> ProxyPosterior:
    """Posterior over the target task parameter given proxy information only.

    mass[j] is proportional to exp(proxy log-likelihood at node j) times the
    node's prior mass; the log normalizer is returned alongside.
    """
    log_unnorm = proxy_loglik_vector(proxy, grid.psi_nodes) + grid.log_psi_prior()
    log_norm = float(logsumexp(log_unnorm))
    if not np.isfinite(log_norm):
        raise DegenerateProxyError("proxy likelihood is zero at every psi node")
    return ProxyPosterior(mass=np.exp(log_unnorm - log_norm), log_normalizer=log_norm)


def classic_posterior(model: ModelSpec, data: SourceData, grid: ParameterGrid,
                      source_psi_prior, groups=None) -> PosteriorTable:
    """Posterior for the learner who cannot tell which observations share a task.

    Each observation's task parameter is marginalized independently against
    source_psi_prior, so the theta likelihood is a product of per-observation
    mixtures.  The target task parameter stays at its prior (the joint
    factorizes), absent any proxy.

    groups, when given, is a partition of observation indices whose members
    share one task parameter; the mixture is then taken per group instead of
    per observation (the known-groups variant).
    """
    source_psi_prior = _check_mass(source_psi_prior, "source_psi_prior")
    if source_psi_prior.size != grid.n_psi:
        raise ValueError("source_psi_prior length does not match the psi grid")
    tensor = loglik_tensor(model, data, grid.theta_nodes, grid.psi_nodes)  # (n, A, B)
    with np.errstate(divide="ignore"):
        log_psi = np.log(source_psi_prior)

    if groups is None:
        per_obs = logsumexp(tensor + log_psi[None, None, :], axis=2)       # (n, A)
        loglik_theta = per_obs.sum(axis=0)
    else:
        seen = sorted(i for g in groups for i in g)
        if seen != list(range(data.n)):
            raise ValueError("groups must partition the observation indices")
        loglik_theta = np.zeros(grid.n_theta)
        for g in groups:
            block = tensor[list(g)].sum(axis=0)                            # (A, B)
            loglik_theta += logsumexp(block + log_psi[None, :], axis=1)

    log_joint_theta = loglik_theta + grid.log_theta_prior()
    log_evidence = float(logsumexp(log_joint_theta))
    theta_marg = np.exp(log_joint_theta - log_evidence)
    joint = theta_marg[:, None] * grid.psi_prior_mass[None, :]
    return PosteriorTable(grid=grid, joint_mass=joint / joint.sum(), log_evidence=log_evidence)


def _weights_matrix(weights_per_psi, n_psi: int, n_obs: int) -> np.ndarray:
    """Coerce per-psi-node relevance weights into a validated (B, n) matrix."""
    if hasattr(weights_per_psi, "shape"):
        mat = np.asarray(weights_per_psi, dtype=float)
    else:
        rows = sorted(weights_per_psi, key=lambda w: w.psi_node_index)
        if [w.psi_node_index for w in rows] != list(range(n_psi)):
            raise ValueError("need exactly one weight vector per psi node")
        mat = np.stack([w.weights for w in rows])
    if mat.shape != (n_psi, n_obs):
        raise ValueError(f"weights matrix shape {mat.shape}, expected {(n_psi, n_obs)}")
    if np.any(~np.isfinite(mat)) or np.any(mat < 0.0) or np.any(mat > 1.0):
        raise ValueError("relevance weights must lie in [0, 1]")
    return mat


def r_weighted_likelihood(model: ModelSpec, data: SourceData, theta, psi_target,
                          weights) -> float:
    """Log of the relevance-weighted likelihood at one (theta, psi_target).

    Every source observation is evaluated as if its task parameter equaled
    psi_target, and its log-likelihood is scaled by its weight.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (data.n,):
        raise ValueError(f"weights shape {w.shape}, expected ({data.n},)")
    if np.any(~np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError("relevance weights must lie in [0, 1]")
    th = param_values(theta)[None, :]
    ps = param_values(psi_target)[None, :]
    lls = loglik_tensor(model, data, th, ps)[:, 0, 0]
    # 0 * (-inf) would be nan; a zero weight must kill the term outright
    with np.errstate(invalid="ignore"):
        terms = np.where(w == 0.0, 0.0, w * lls)
    return float(terms.sum())


def r_weighted_posterior(model: ModelSpec, data: SourceData, grid: ParameterGrid,
                         weights_per_psi, proxy: ProxyObservation) -> PosteriorTable:
    """Joint posterior over (theta, psi_target) from the weighted likelihood.

    joint[a, b] is proportional to
    exp(sum_i w[b, i] loglik(d_i | theta_a, psi_b) + proxy loglik at psi_b)
    times the prior masses, normalized over the whole grid.
    """
    mat = _weights_matrix(weights_per_psi, grid.n_psi, data.n)
    tensor = loglik_tensor(model, data, grid.theta_nodes, grid.psi_nodes)   # (n, A, B)
    safe = np.where(np.isneginf(tensor) & (mat.T[:, None, :] == 0.0), 0.0, tensor)
    weighted = np.einsum("bi,iab->ab", mat, safe)
    proxy_vec = proxy_loglik_vector(proxy, grid.psi_nodes)
    log_joint = (weighted + proxy_vec[None, :]
                 + grid.log_theta_prior()[:, None] + grid.log_psi_prior()[None, :])
    log_evidence = float(logsumexp(log_joint))
    if not np.isfinite(log_evidence):
        raise DegenerateProxyError("posterior mass is identically zero on the grid")
    joint = np.exp(log_joint - log_evidence)
    return PosteriorTable(grid=grid, joint_mass=joint / joint.sum(), log_evidence=log_evidence)


@dataclass(frozen=True)
class PosteriorPredictive:
    """Mixture predictive for the next observation under a posterior table."""

    model: ModelSpec
    table: PosteriorTable
    covariates: np.ndarray
    trial_count: Optional[int] = None

    def log_density(self, outcome) -> float:
        from .models import Observation

        obs = Observation(self.covariates, outcome, trial_count=self.trial_count)
        grid = self.table.grid
        lls = loglik_tensor(model=self.model, data=SourceData((obs,)),
                            thetas=grid.theta_nodes, psis=grid.psi_nodes)[0]
        with np.errstate(divide="ignore"):
            log_mass = np.log(self.table.joint_mass)
        return float(logsumexp(log_mass + lls))

    def sample(self, rng):
        grid = self.table.grid
        flat = self.table.joint_mass.ravel()
        idx = rng.choice(flat.size, p=flat / flat.sum())
        a, b = divmod(idx, grid.n_psi)
        kwargs = {} if self.trial_count is None else {"trial_count": self.trial_count}
        return self.model.simulate(self.covariates, grid.theta_nodes[a],
                                   grid.psi_nodes[b], rng, **kwargs)


def posterior_predictive(model: ModelSpec, table: PosteriorTable, covariates,
                         trial_count: Optional[int] = None) -> PosteriorPredictive:
    return PosteriorPredictive(model=model, table=table,
                               covariates=np.asarray(covariates, dtype=float),
                               trial_count=trial_count)


# ---------------------------------------------------------------------------
# random-walk Metropolis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McmcChain:
    """Post-burn-in samples of (theta, psi) with the realized acceptance rate."""

    theta_samples: np.ndarray
    psi_samples: np.ndarray
    acceptance_rate: float
    seed: int
    warning: Optional[str] = None

    @property
    def samples(self):
        return list(zip(self.theta_samples, self.psi_samples))


ACCEPT_TARGET = 0.3
ACCEPT_BAND = (0.1, 0.6)


def metropolis_posterior(model: ModelSpec, data: SourceData, proxy, weights_fn,
                         prior_log_density, n_samples: int, seed: int, *,
                         groups=None, init_theta=None, init_psi=None,
                         proposal_scale=0.5) -> McmcChain:
    """Gaussian random-walk Metropolis over the stacked (theta, psi) state.

    The target is the relevance-weighted joint density when weights_fn is a
    callable (data, psi) -> weights, with the proxy log-likelihood added.
    With weights_fn=None and a groups partition, the target is instead the
    known-groups likelihood where psi holds one intercept per group, stacked
    in group order (the classic fixed-effects baseline).

    n_samples counts total iterations; the first quarter is burn-in, during
    which per-coordinate proposal scales adapt toward 0.3 acceptance, and is
    discarded.  acceptance_rate is measured after adaptation; outside
    [0.1, 0.6] a warning is attached to the chain and emitted.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be >= 1000")
    k_theta = model.k_theta
    if weights_fn is None:
        if groups is None:
            raise ValueError("weights_fn=None needs a groups partition")
        groups = [list(g) for g in groups]
        seen = sorted(i for g in groups for i in g)
        if seen != list(range(data.n)):
            raise ValueError("groups must partition the observation indices")
        psi_dim = model.k_psi * len(groups)
        obs_group = np.empty(data.n, dtype=int)
        for gi, g in enumerate(groups):
            obs_group[g] = gi
    else:
        psi_dim = model.k_psi

    theta0 = (model.theta_support.mean(axis=1) if init_theta is None
              else np.asarray(init_theta, dtype=float))
    if init_psi is None:
        psi0 = np.tile(model.psi_support.mean(axis=1), psi_dim // model.k_psi)
    else:
        psi0 = np.asarray(init_psi, dtype=float)
    state = np.concatenate([theta0, psi0])

    def log_target(vec: np.ndarray) -> float:
        theta, psi = vec[:k_theta], vec[k_theta:]
        lp = prior_log_density(theta, psi)
        if not np.isfinite(lp):
            return -np.inf
        if weights_fn is None:
            psi_nodes = psi.reshape(len(groups), model.k_psi)
            tensor = loglik_tensor(model, data, theta[None, :], psi_nodes)  # (n, 1, G)
            ll = float(tensor[np.arange(data.n), 0, obs_group].sum())
        else:
            w = np.asarray(weights_fn(data, psi), dtype=float)
            lls = loglik_tensor(model, data, theta[None, :], psi[None, :])[:, 0, 0]
            with np.errstate(invalid="ignore"):
                terms = np.where(w == 0.0, 0.0, w * lls)
            ll = float(terms.sum())
            if proxy is not None:
                ll += float(proxy.proxy_log_likelihood(proxy.payload, psi))
        return lp + ll

    current = log_target(state)
    if not np.isfinite(current):
        raise McmcInitError(f"log-target is {current} at the initial state")

    rng = np.random.default_rng(seed)
    dim = state.size
    scales = np.full(dim, float(proposal_scale)) if np.isscalar(proposal_scale) \
        else np.asarray(proposal_scale, dtype=float).copy()
    burn = n_samples // 4
    keep = n_samples - burn
    kept_theta = np.empty((keep, k_theta))
    kept_psi = np.empty((keep, psi_dim))
    accepted_post = 0

    window = 100
    window_accepts = 0
    for it in range(n_samples):
        prop = state + scales * rng.standard_normal(dim)
        cand = log_target(prop)
        if np.log(rng.random()) < cand - current:
            state, current = prop, cand
            window_accepts += 1
            if it >= burn:
                accepted_post += 1
        if it < burn and (it + 1) % window == 0:
            rate = window_accepts / window
            scales *= np.exp(rate - ACCEPT_TARGET)
            window_accepts = 0
        elif (it + 1) % window == 0:
            window_accepts = 0
        if it >= burn:
            j = it - burn
            kept_theta[j] = state[:k_theta]
            kept_psi[j] = state[k_theta:]

    rate = accepted_post / keep
    warning = None
    if not (ACCEPT_BAND[0] <= rate <= ACCEPT_BAND[1]):
        warning = f"acceptance rate {rate:.3f} outside {ACCEPT_BAND} after adaptation"
        warnings.warn(warning, RuntimeWarning)
    return McmcChain(theta_samples=kept_theta, psi_samples=kept_psi,
                     acceptance_rate=rate, seed=seed, warning=warning)


# ---------------------------------------------------------------------------
# chain-versus-grid comparison
# ---------------------------------------------------------------------------

def _cell_edges(nodes_1d: np.ndarray) -> np.ndarray:
    h = nodes_1d[1] - nodes_1d[0] if nodes_1d.size > 1 else 1.0
    return np.concatenate([nodes_1d - 0.5 * h, [nodes_1d[-1] + 0.5 * h]])


def _coarsen(mass: np.ndarray, factor: int, axis: int) -> np.ndarray:
    n = mass.shape[axis]
    pad = (-n) % factor
    if pad:
        width = [(0, 0)] * mass.ndim
        width[axis] = (0, pad)
        mass = np.pad(mass, width)
    shape = list(mass.shape)
    shape[axis] = shape[axis] // factor
    shape.insert(axis + 1, factor)
    return mass.reshape(shape).sum(axis=axis + 1)


def chain_grid_tv(chain: McmcChain, table: PosteriorTable, coarsen: int = 2,
                  marginal: Optional[str] = None) -> float:
    """Total-variation distance between a chain histogram and a grid posterior.

    Samples are binned into the grid's own cells, then both histograms are
    aggregated into superbins of `coarsen` consecutive cells per axis so the
    comparison is not dominated by per-cell Monte-Carlo noise.  marginal can
    be "theta" or "psi" to compare one marginal; default is the joint.
    Scalar theta and psi only.
    """
    grid = table.grid
    t_edges = _cell_edges(grid.theta_nodes[:, 0])
    p_edges = _cell_edges(grid.psi_nodes[:, 0])

    if marginal == "theta":
        hist, _ = np.histogram(chain.theta_samples[:, 0], bins=t_edges)
        ref = _coarsen(table.theta_marginal(), coarsen, 0)
        emp = _coarsen(hist.astype(float), coarsen, 0)
    elif marginal == "psi":
        hist, _ = np.histogram(chain.psi_samples[:, 0], bins=p_edges)
        ref = _coarsen(table.psi_marginal(), coarsen, 0)
        emp = _coarsen(hist.astype(float), coarsen, 0)
    else:
        hist, _, _ = np.histogram2d(chain.theta_samples[:, 0], chain.psi_samples[:, 0],
                                    bins=(t_edges, p_edges))
        ref = _coarsen(_coarsen(table.joint_mass, coarsen, 0), coarsen, 1)
        emp = _coarsen(_coarsen(hist, coarsen, 0), coarsen, 1)
    emp = emp / emp.sum()
    return float(0.5 * np.abs(emp - ref).sum())
