"""Domain types and the four concrete probabilistic models.

A model couples a per-observation log-likelihood log p(d_i | theta, psi_i)
with a simulator for the same distribution.  theta is shared across tasks,
psi_i is task-specific.  Everything downstream (grid posteriors, relevance
weighting, diagnostics) talks to models only through ModelSpec, so adding a
model means writing one factory function here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, gammaln, logsumexp

LOG_2PI = math.log(2.0 * math.pi)


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class SharedParam:
    """Shared parameter theta, a finite real vector of dimension k_theta >= 1."""

    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", _as_vector(self.value, "SharedParam"))


@dataclass(frozen=True)
class TaskParam:
    """Task parameter psi, a finite real vector of dimension k_psi >= 1."""

    value: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", _as_vector(self.value, "TaskParam"))


@dataclass(frozen=True)
class Observation:
    """One observation d_i.

    covariates has the layout the owning model declares.  outcome is a real
    scalar, a count, or a whole trajectory vector (GP model).  trial_count is
    present exactly for binomial models.
    """

    covariates: np.ndarray
    outcome: object
    trial_count: Optional[int] = None

    def __post_init__(self):
        cov = np.atleast_1d(np.asarray(self.covariates, dtype=float))
        object.__setattr__(self, "covariates", cov)
        if self.trial_count is not None:
            tc = int(self.trial_count)
            if tc <= 0:
                raise ValueError(f"trial_count must be positive, got {tc}")
            object.__setattr__(self, "trial_count", tc)


@dataclass(frozen=True)
class SourceData:
    """Ordered source observations d = (d_1, ..., d_n), n >= 1."""

    observations: tuple

    def __post_init__(self):
        obs = tuple(self.observations)
        if len(obs) == 0:
            raise ValueError("SourceData needs at least one observation")
        dims = {o.covariates.shape for o in obs}
        if len(dims) > 1:
            raise ValueError(f"observations have mixed covariate shapes: {sorted(dims)}")
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def __getitem__(self, index):
        return self.observations[index]


@dataclass(frozen=True)
class ModelSpec:
    """A pluggable probabilistic model.

    Fields
    ------
    name : str
    covariate_dim : int
        Expected length of Observation.covariates.
    theta_support, psi_support : (k, 2) arrays
        Interval box per parameter coordinate.
    log_likelihood : callable (Observation, SharedParam, TaskParam) -> float
    simulate : callable (covariates, SharedParam, TaskParam, rng, ...) -> Observation
    log_likelihood_batch : optional vectorized evaluator
        (SourceData, thetas (A, k_theta), psis (B, k_psi)) -> (n, A, B) array.
        Falls back to a python loop when absent.
    log_mode_density : optional callable (theta_values, psi_values) -> array
        Log of the outcome density at its mode, broadcast over parameter
        rows.  Defined only for models with a density mode that does not
        depend on the data (Gaussian families).
    log_predictive_mode_density : optional callable
        (SourceData, thetas (A, k_theta), psis (B, k_psi), belief (A,))
        -> (n, B) array.  Log modal density of the belief-averaged outcome
        predictive, the normalizer that puts relevance scores on [0, 1].
        For the linear model this is the normal of matching variance
        1 + x1^2 Var(theta); for the trajectory model every component
        peaks at the zero trajectory, so the mixture maximum is exact.
        None means the mode-density relevance normalizer is unavailable
        for this model.
    outcome_space : optional integer array
        Full outcome alphabet when the model's outcomes are enumerable with
        a fixed alphabet (the discrete toy model).  Enables exact
        enumeration in the diagnostics.
    """

    name: str
    covariate_dim: int
    theta_support: np.ndarray
    psi_support: np.ndarray
    log_likelihood: Callable
    simulate: Callable
    log_likelihood_batch: Optional[Callable] = None
    log_mode_density: Optional[Callable] = None
    log_predictive_mode_density: Optional[Callable] = None
    outcome_space: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def k_theta(self) -> int:
        return self.theta_support.shape[0]

    @property
    def k_psi(self) -> int:
        return self.psi_support.shape[0]


def _support_box(low: float, high: float, dim: int) -> np.ndarray:
    return np.tile(np.array([[low, high]], dtype=float), (dim, 1))


def check_support(value: np.ndarray, box: np.ndarray, name: str) -> None:
    value = np.atleast_1d(value)
    if value.shape[0] != box.shape[0]:
        raise ValueError(f"{name} has dimension {value.shape[0]}, expected {box.shape[0]}")
    if np.any(value < box[:, 0]) or np.any(value > box[:, 1]):
        raise ValueError(f"{name}={value} outside support box {box.tolist()}")


def param_values(p) -> np.ndarray:
    return p.value if isinstance(p, (SharedParam, TaskParam)) else np.atleast_1d(np.asarray(p, dtype=float))


# ---------------------------------------------------------------------------
# linear regression model
# ---------------------------------------------------------------------------

def linear_model() -> ModelSpec:
    """Gaussian outcome y ~ Normal(theta * x1 + psi * x2, 1).

    covariate_dim = 2, k_theta = k_psi = 1, unit outcome variance.
    """

    support = _support_box(-10.0, 10.0, 1)

    def log_likelihood(obs: Observation, theta, psi) -> float:
        th, ps = param_values(theta), param_values(psi)
        mean = th[0] * obs.covariates[0] + ps[0] * obs.covariates[1]
        return -0.5 * LOG_2PI - 0.5 * (float(obs.outcome) - mean) ** 2

    def simulate(covariates, theta, psi, rng) -> Observation:
        covariates = np.asarray(covariates, dtype=float)
        th, ps = param_values(theta), param_values(psi)
        mean = th[0] * covariates[0] + ps[0] * covariates[1]
        return Observation(covariates, mean + rng.standard_normal())

    def log_likelihood_batch(data: SourceData, thetas, psis) -> np.ndarray:
        x = np.stack([o.covariates for o in data])          # (n, 2)
        y = np.array([float(o.outcome) for o in data])      # (n,)
        th = np.asarray(thetas, dtype=float)[:, 0]          # (A,)
        ps = np.asarray(psis, dtype=float)[:, 0]            # (B,)
        mean = (x[:, 0, None, None] * th[None, :, None]
                + x[:, 1, None, None] * ps[None, None, :])  # (n, A, B)
        return -0.5 * LOG_2PI - 0.5 * (y[:, None, None] - mean) ** 2

    def log_mode_density(thetas, psis) -> np.ndarray:
        a = np.asarray(thetas).shape[0]
        b = np.asarray(psis).shape[0]
        return np.full((a, b), -0.5 * LOG_2PI)

    def log_predictive_mode_density(data, thetas, psis, belief) -> np.ndarray:
        th = np.asarray(thetas, dtype=float)[:, 0]
        b = np.asarray(belief, dtype=float)
        var_theta = max(float(b @ th ** 2 - (b @ th) ** 2), 0.0)
        x1 = np.array([o.covariates[0] for o in data])
        v = 1.0 + x1 ** 2 * var_theta                       # (n,)
        n_psi = np.asarray(psis).shape[0]
        return np.tile(-0.5 * np.log(2.0 * np.pi * v)[:, None], (1, n_psi))

    return ModelSpec(
        name="linear",
        covariate_dim=2,
        theta_support=support,
        psi_support=support.copy(),
        log_likelihood=log_likelihood,
        simulate=simulate,
        log_likelihood_batch=log_likelihood_batch,
        log_mode_density=log_mode_density,
        log_predictive_mode_density=log_predictive_mode_density,
    )


# ---------------------------------------------------------------------------
# binomial-logit model
# ---------------------------------------------------------------------------

def _binom_logpmf(y, n, t):
    """log Binomial(y; n, sigmoid(t)) computed from the logit t, stably."""
    y = np.asarray(y, dtype=float)
    n = np.asarray(n, dtype=float)
    const = gammaln(n + 1) - gammaln(y + 1) - gammaln(n - y + 1)
    # log sigmoid(t) = -log(1 + exp(-t)); log(1 - sigmoid(t)) = -log(1 + exp(t))
    return const - y * np.logaddexp(0.0, -t) - (n - y) * np.logaddexp(0.0, t)


def binomial_logit_model() -> ModelSpec:
    """Count outcome y ~ Binomial(sigmoid(theta . x + psi), trial_count).

    Four treatment indicators in theta, a scalar intercept psi.
    """

    def _validate(obs: Observation):
        if obs.trial_count is None:
            raise ValueError("binomial model requires trial_count on every observation")
        y = int(obs.outcome)
        if y < 0 or y > obs.trial_count:
            raise ValueError(
                f"invalid observation: outcome {y} exceeds trial_count {obs.trial_count}"
            )
        return y

    def log_likelihood(obs: Observation, theta, psi) -> float:
        y = _validate(obs)
        th, ps = param_values(theta), param_values(psi)
        t = float(th @ obs.covariates) + ps[0]
        return float(_binom_logpmf(y, obs.trial_count, t))

    def simulate(covariates, theta, psi, rng, trial_count=None) -> Observation:
        if trial_count is None:
            raise ValueError("binomial simulate needs trial_count")
        covariates = np.asarray(covariates, dtype=float)
        th, ps = param_values(theta), param_values(psi)
        p = expit(float(th @ covariates) + ps[0])
        y = int(rng.binomial(int(trial_count), p))
        return Observation(covariates, y, trial_count=int(trial_count))

    def log_likelihood_batch(data: SourceData, thetas, psis) -> np.ndarray:
        for o in data:
            _validate(o)
        x = np.stack([o.covariates for o in data])                    # (n, 4)
        y = np.array([int(o.outcome) for o in data], dtype=float)     # (n,)
        trials = np.array([o.trial_count for o in data], dtype=float)
        th = np.asarray(thetas, dtype=float)                          # (A, 4)
        ps = np.asarray(psis, dtype=float)[:, 0]                      # (B,)
        t = (x @ th.T)[:, :, None] + ps[None, None, :]                # (n, A, B)
        return _binom_logpmf(y[:, None, None], trials[:, None, None], t)

    return ModelSpec(
        name="binomial-logit",
        covariate_dim=4,
        theta_support=_support_box(-10.0, 10.0, 4),
        psi_support=_support_box(-10.0, 10.0, 1),
        log_likelihood=log_likelihood,
        simulate=simulate,
        log_likelihood_batch=log_likelihood_batch,
    )


# ---------------------------------------------------------------------------
# GP composite-kernel model
# ---------------------------------------------------------------------------

BASE_JITTER = 1e-8
MAX_JITTER = 1e-4


class GpNumericalError(RuntimeError):
    """Cholesky failed even at the maximum jitter level."""


def _composite_kernel(sq_dists: np.ndarray, theta: float, psi: float, jitter: float) -> np.ndarray:
    k = 0.5 * (np.exp(-sq_dists / (2.0 * theta ** 2)) + np.exp(-sq_dists / (2.0 * psi ** 2)))
    return k + jitter * np.eye(sq_dists.shape[0])


def _chol_with_escalation(build):
    """Try Cholesky at escalating jitter, 1e-8 up to 1e-4 in powers of ten."""
    jitter = BASE_JITTER
    while True:
        try:
            return np.linalg.cholesky(build(jitter)), jitter
        except np.linalg.LinAlgError:
            if jitter >= MAX_JITTER:
                raise GpNumericalError(
                    f"Cholesky failed at maximum jitter {MAX_JITTER}"
                ) from None
            jitter *= 10.0


def gp_model(x_grid) -> ModelSpec:
    """Zero-mean GP over trajectories on a fixed covariate grid.

    One Observation is a whole trajectory y in R^m.  The covariance is an
    equal-weight sum of two unit-amplitude RBF kernels, one with the shared
    lengthscale theta and one with the task lengthscale psi, scaled by 1/2
    so the diagonal is 1 (plus jitter).
    """

    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x_grid must be a 1-d vector of length >= 2")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x_grid must be strictly increasing")
    m = x.size
    sq = (x[:, None] - x[None, :]) ** 2
    support = np.array([[0.05, 12.0]])

    def _scales(theta, psi):
        th, ps = param_values(theta), param_values(psi)
        if th[0] <= 0 or ps[0] <= 0:
            raise ValueError(f"lengthscales must be positive, got theta={th[0]}, psi={ps[0]}")
        return th[0], ps[0]

    def log_likelihood(obs: Observation, theta, psi) -> float:
        t, p = _scales(theta, psi)
        y = np.asarray(obs.outcome, dtype=float)
        chol, _ = _chol_with_escalation(lambda j: _composite_kernel(sq, t, p, j))
        z = np.linalg.solve(chol, y)
        return float(-0.5 * (z @ z) - np.log(np.diag(chol)).sum() - 0.5 * m * LOG_2PI)

    def simulate(covariates, theta, psi, rng) -> Observation:
        t, p = _scales(theta, psi)
        chol, _ = _chol_with_escalation(lambda j: _composite_kernel(sq, t, p, j))
        return Observation(x, chol @ rng.standard_normal(m))

    def _batch_chol(thetas, psis):
        """Batched Cholesky over the (A, B) parameter product, (A*B, m, m)."""
        th = np.asarray(thetas, dtype=float)[:, 0]
        ps = np.asarray(psis, dtype=float)[:, 0]
        r_th = np.exp(-sq[None, :, :] / (2.0 * th[:, None, None] ** 2))   # (A, m, m)
        r_ps = np.exp(-sq[None, :, :] / (2.0 * ps[:, None, None] ** 2))   # (B, m, m)
        kmats = 0.5 * (r_th[:, None] + r_ps[None, :])                     # (A, B, m, m)
        a, b = th.size, ps.size
        kmats = kmats.reshape(a * b, m, m)
        eye = np.eye(m)
        jitter = BASE_JITTER
        while True:
            try:
                chol = np.linalg.cholesky(kmats + jitter * eye)
                return chol, a, b
            except np.linalg.LinAlgError:
                if jitter >= MAX_JITTER:
                    raise GpNumericalError(
                        f"batched Cholesky failed at maximum jitter {MAX_JITTER}"
                    ) from None
                jitter *= 10.0

    def log_likelihood_batch(data: SourceData, thetas, psis) -> np.ndarray:
        chol, a, b = _batch_chol(thetas, psis)
        y = np.stack([np.asarray(o.outcome, dtype=float) for o in data])  # (n, m)
        z = np.linalg.solve(chol, np.broadcast_to(y.T, (a * b, m, data.n)))
        quad = np.einsum("kmi,kmi->ki", z, z)                             # (A*B, n)
        logdet = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)  # (A*B,)
        ll = -0.5 * quad - logdet[:, None] - 0.5 * m * LOG_2PI
        return np.moveaxis(ll.reshape(a, b, data.n), 2, 0)                # (n, A, B)

    def log_mode_density(thetas, psis) -> np.ndarray:
        chol, a, b = _batch_chol(thetas, psis)
        logdet = np.log(np.diagonal(chol, axis1=1, axis2=2)).sum(axis=1)
        return (-logdet - 0.5 * m * LOG_2PI).reshape(a, b)

    def log_predictive_mode_density(data, thetas, psis, belief) -> np.ndarray:
        # every component is a zero-mean Gaussian, so the belief mixture
        # attains its maximum at the zero trajectory
        lm = log_mode_density(thetas, psis)                 # (A, B)
        with np.errstate(divide="ignore"):
            lb = np.log(np.asarray(belief, dtype=float))
        mixed = logsumexp(lm + lb[:, None], axis=0)         # (B,)
        return np.tile(mixed[None, :], (data.n, 1))

    return ModelSpec(
        name="gp",
        covariate_dim=m,
        theta_support=support,
        psi_support=support.copy(),
        log_likelihood=log_likelihood,
        simulate=simulate,
        log_likelihood_batch=log_likelihood_batch,
        log_mode_density=log_mode_density,
        log_predictive_mode_density=log_predictive_mode_density,
    )


# ---------------------------------------------------------------------------
# discrete toy model
# ---------------------------------------------------------------------------

def discrete_toy_model(outcome_count: int, theta_count: int, psi_count: int, table) -> ModelSpec:
    """Categorical model indexed by (theta index, psi index).

    table[a][b] is the outcome distribution at theta node a, psi node b.
    Parameters are the node indices themselves.  Deliberately tiny so every
    expectation downstream can be enumerated exactly.
    """

    table = np.asarray(table, dtype=float)
    if table.shape != (theta_count, psi_count, outcome_count):
        raise ValueError(
            f"table shape {table.shape} does not match "
            f"({theta_count}, {psi_count}, {outcome_count})"
        )
    if np.any(table < 0):
        raise ValueError("table has negative entries")
    sums = table.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)[0]
        raise ValueError(f"table row {tuple(bad)} sums to {sums[tuple(bad)]}, expected 1")

    with np.errstate(divide="ignore"):
        log_table = np.log(table)

    def _indices(theta, psi):
        a = int(round(param_values(theta)[0]))
        b = int(round(param_values(psi)[0]))
        if not (0 <= a < theta_count and 0 <= b < psi_count):
            raise ValueError(f"toy indices ({a}, {b}) out of range")
        return a, b

    def log_likelihood(obs: Observation, theta, psi) -> float:
        a, b = _indices(theta, psi)
        return float(log_table[a, b, int(obs.outcome)])

    def simulate(covariates, theta, psi, rng) -> Observation:
        a, b = _indices(theta, psi)
        y = int(rng.choice(outcome_count, p=table[a, b]))
        return Observation(np.empty(0), y)

    def log_likelihood_batch(data: SourceData, thetas, psis) -> np.ndarray:
        a_idx = np.rint(np.asarray(thetas, dtype=float)[:, 0]).astype(int)
        b_idx = np.rint(np.asarray(psis, dtype=float)[:, 0]).astype(int)
        y = np.array([int(o.outcome) for o in data])
        return log_table[a_idx[None, :, None], b_idx[None, None, :], y[:, None, None]]

    return ModelSpec(
        name="discrete-toy",
        covariate_dim=0,
        theta_support=np.array([[0.0, float(theta_count - 1)]]),
        psi_support=np.array([[0.0, float(psi_count - 1)]]),
        log_likelihood=log_likelihood,
        simulate=simulate,
        log_likelihood_batch=log_likelihood_batch,
        outcome_space=np.arange(outcome_count),
    )


def loglik_tensor(model: ModelSpec, data: SourceData, thetas, psis) -> np.ndarray:
    """Per-observation log-likelihoods over a parameter product, shape (n, A, B).

    Uses the model's vectorized evaluator when it has one, otherwise loops.
    NaNs are rejected with the offending observation named, since a NaN in a
    log-sum-exp would silently poison the whole posterior.
    """
    thetas = np.asarray(thetas, dtype=float)
    psis = np.asarray(psis, dtype=float)
    if model.log_likelihood_batch is not None:
        out = model.log_likelihood_batch(data, thetas, psis)
    else:
        out = np.empty((data.n, thetas.shape[0], psis.shape[0]))
        for i, obs in enumerate(data):
            for a, th in enumerate(thetas):
                for b, ps in enumerate(psis):
                    out[i, a, b] = model.log_likelihood(obs, th, ps)
    if np.any(np.isnan(out)):
        i = int(np.argwhere(np.isnan(out))[0][0])
        raise FloatingPointError(f"NaN log-likelihood at observation index {i}")
    return out
