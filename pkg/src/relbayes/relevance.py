"""Relevance weighting of source observations.

Three weight families are provided.  prior_expected_relevance scores each
observation by how well the current belief over the shared parameter
predicts it when the observation is pretended to come from the target task;
the modal density of that belief-averaged predictive normalizes the score
into [0, 1].  sigmoid_ratio_relevance is the cheap heuristic used for the
observational case study.  constant_one_weights recovers unweighted pooling.

refine_relevance alternates weight evaluation with the grid posterior a
fixed number of times, feeding the exact theta marginal back in as the next
belief.  The normalizer is belief-dependent, so it is re-evaluated along
with the weights at every round.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .grids import ParameterGrid
from .inference import r_weighted_posterior
from .models import ModelSpec, SourceData, loglik_tensor, param_values

CLIP_WARN_TOL = 0.5
MAX_REFINEMENTS = 10

KINDS = ("prior-expected", "sigmoid-ratio", "constant-one")
NORMALIZERS = ("mode-density", "none")


class RelevanceConfigError(ValueError):
    """The requested relevance computation is not defined for this model."""


class DegenerateRelevanceError(ValueError):
    """The weight formula hit an undefined 0/0 or -inf/-inf ratio."""


@dataclass(frozen=True)
class RelevanceWeights:
    """Weights for every source observation under one candidate target task."""

    psi_node_index: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "psi_node_index", int(self.psi_node_index))


@dataclass(frozen=True)
class RelevanceConfig:
    kind: str = "prior-expected"
    refinement_iterations: int = 3
    normalizer: str = "mode-density"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown relevance kind {self.kind!r}; choose from {KINDS}")
        if self.normalizer not in NORMALIZERS:
            raise ValueError(
                f"unknown normalizer {self.normalizer!r}; choose from {NORMALIZERS}")
        t = self.refinement_iterations
        if not isinstance(t, (int, np.integer)) or t < 0 or t > MAX_REFINEMENTS:
            raise ValueError(
                f"refinement_iterations must be an integer in [0, {MAX_REFINEMENTS}]")


def constant_one_weights(n_psi: int, n_obs: int) -> np.ndarray:
    """Unit weight for every observation under every candidate target task."""
    return np.ones((int(n_psi), int(n_obs)))


def _clip_unit(weights: np.ndarray, context: str) -> np.ndarray:
    """Clip into [0, 1], quietly for the expected normalizer overshoot.

    A multimodal or discretized belief mixture can peak above the normal of
    matching variance, so small excess over 1 is ordinary; a gross excess
    means the model reported a nonsense normalizer and deserves a warning.
    """
    excess = weights.max(initial=0.0) - 1.0
    if excess > CLIP_WARN_TOL:
        warnings.warn(
            f"{context}: weight exceeded 1 by {excess:.3g}; clipping. The "
            "predictive mode density is far below the actual density maximum.",
            RuntimeWarning)
    return np.clip(weights, 0.0, 1.0)


def _predictive_mode_matrix(model: ModelSpec, data: SourceData,
                            thetas: np.ndarray, psis: np.ndarray,
                            belief: np.ndarray, normalizer: str) -> np.ndarray:
    """Log normalizer for every (observation, psi node) pair, shape (n, B)."""
    if normalizer == "none":
        return np.zeros((data.n, psis.shape[0]))
    if model.log_predictive_mode_density is None:
        raise RelevanceConfigError(
            f"model {model.name!r} does not define a predictive mode density; "
            "prior-expected relevance needs normalizer='none' for it")
    out = np.asarray(
        model.log_predictive_mode_density(data, thetas, psis, belief), dtype=float)
    if out.shape != (data.n, psis.shape[0]):
        raise RelevanceConfigError(
            f"model {model.name!r} returned predictive mode densities of shape "
            f"{out.shape}, expected {(data.n, psis.shape[0])}")
    return out


def _prior_expected_matrix(tensor: np.ndarray, log_pred_mode: np.ndarray,
                           theta_belief: np.ndarray) -> np.ndarray:
    """Weights for all (psi node, observation) pairs at once, shape (B, n).

    tensor is the (n, A, B) log-likelihood block and log_pred_mode the
    (n, B) normalizer block; the belief is a mass vector over theta nodes.
    """
    with np.errstate(divide="ignore"):
        log_belief = np.log(theta_belief)
    log_w = logsumexp(tensor + log_belief[None, :, None], axis=1) - log_pred_mode
    return np.exp(log_w).T


def prior_expected_relevance(model: ModelSpec, data: SourceData, theta_nodes,
                             theta_belief, psi_target,
                             normalizer: str = "mode-density") -> np.ndarray:
    """Belief-averaged density of each observation under the target task.

    The average is divided by the modal density of the same belief-averaged
    predictive, so a dead-center observation scores 1 and the weights react
    to how concentrated the current belief is.  Values pushed past 1, which
    happens when the mixture peaks above the matching-variance normal, are
    clipped.
    """
    thetas = np.asarray(theta_nodes, dtype=float)
    if thetas.ndim == 1:
        thetas = thetas[:, None]
    belief = np.asarray(theta_belief, dtype=float)
    if belief.shape != (thetas.shape[0],):
        raise ValueError("theta_belief must have one mass per theta node")
    if np.any(belief < 0) or abs(belief.sum() - 1.0) > 1e-9:
        raise ValueError("theta_belief must be a normalized mass vector")
    psi = param_values(psi_target)[None, :]
    tensor = loglik_tensor(model, data, thetas, psi)
    log_mode = _predictive_mode_matrix(model, data, thetas, psi, belief, normalizer)
    weights = _prior_expected_matrix(tensor, log_mode, belief)[0]
    return _clip_unit(weights, "prior_expected_relevance")


def sigmoid_ratio_relevance(model: ModelSpec, data: SourceData, psi_target) -> np.ndarray:
    """Sigmoid of each observation's share of the pooled null likelihood.

    With the shared parameter pinned to zero and every task parameter set to
    the target's, observation i gets sigmoid(n * p_i / prod_j p_j).  The
    ratio is formed in log space; overflow saturates cleanly to weight 1.
    """
    theta = np.zeros((1, model.k_theta))
    psi = param_values(psi_target)[None, :]
    lls = loglik_tensor(model, data, theta, psi)[:, 0, 0]
    denom = lls.sum()
    if np.isneginf(denom):
        raise DegenerateRelevanceError(
            "pooled likelihood at the null shared parameter is zero; the "
            "sigmoid ratio is undefined for this dataset")
    log_ratio = np.log(data.n) + lls - denom
    with np.errstate(over="ignore"):
        return expit(np.exp(log_ratio))


@dataclass(frozen=True)
class RefinementResult:
    """Final weights for every candidate target task, plus the final belief."""

    weights_per_psi: np.ndarray
    theta_belief: np.ndarray
    iterations: int

    def as_weights(self) -> list[RelevanceWeights]:
        return [RelevanceWeights(psi_node_index=b, weights=row)
                for b, row in enumerate(self.weights_per_psi)]


def refine_relevance(model: ModelSpec, data: SourceData, grid: ParameterGrid,
                     proxy, config: RelevanceConfig) -> RefinementResult:
    """Alternate weight evaluation and posterior updating on the grid.

    Starting from the prior belief over theta, each round evaluates the
    configured weights, forms the r-weighted posterior, and adopts its exact
    theta marginal as the next belief.  The returned weights are evaluated
    once more under the final belief, so refinement_iterations=0 gives the
    plain prior-expected weights.
    """
    tensor = loglik_tensor(model, data, grid.theta_nodes, grid.psi_nodes)

    if config.kind == "constant-one":
        def evaluate(belief):
            return constant_one_weights(grid.n_psi, data.n)
    elif config.kind == "sigmoid-ratio":
        theta0 = np.zeros((1, model.k_theta))
        lls = loglik_tensor(model, data, theta0, grid.psi_nodes)[:, 0, :]   # (n, B)
        denom = lls.sum(axis=0)
        if np.any(np.isneginf(denom)):
            raise DegenerateRelevanceError(
                "pooled likelihood at the null shared parameter is zero for "
                "some candidate target task")
        with np.errstate(over="ignore"):
            fixed = expit(np.exp(np.log(data.n) + lls - denom[None, :])).T  # (B, n)

        def evaluate(belief):
            return fixed
    else:
        def evaluate(belief):
            log_mode = _predictive_mode_matrix(model, data, grid.theta_nodes,
                                               grid.psi_nodes, belief,
                                               config.normalizer)
            raw = _prior_expected_matrix(tensor, log_mode, belief)
            return _clip_unit(raw, "refine_relevance")

    belief = grid.theta_prior_mass
    for _ in range(config.refinement_iterations):
        weights = evaluate(belief)
        posterior = r_weighted_posterior(model, data, grid, weights, proxy)
        belief = posterior.theta_marginal()
    weights = evaluate(belief)
    return RefinementResult(weights_per_psi=weights, theta_belief=belief,
                            iterations=config.refinement_iterations)
