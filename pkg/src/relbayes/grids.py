"""Parameter grids: discretized joint prior over (theta, psi).

Nodes are midpoints of a uniform partition of the support box, mass is
midpoint quadrature of the prior density, renormalized to sum to one.
Cell volume is constant on a uniform partition so it cancels in the
normalization.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MASS_TOL = 1e-12


def _check_mass(mass: np.ndarray, name: str) -> np.ndarray:
    mass = np.asarray(mass, dtype=float)
    if mass.ndim != 1 or mass.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-d vector")
    if np.any(mass < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(mass.sum() - 1.0) > MASS_TOL:
        raise ValueError(f"{name} sums to {mass.sum()!r}, expected 1 within {MASS_TOL}")
    return mass


@dataclass(frozen=True)
class ParameterGrid:
    """Grid nodes and prior mass for theta and psi.

    theta_nodes has shape (A, k_theta), psi_nodes (B, k_psi); each row is one
    node vector.  Both mass vectors sum to one.
    """

    theta_nodes: np.ndarray
    psi_nodes: np.ndarray
    theta_prior_mass: np.ndarray
    psi_prior_mass: np.ndarray

    def __post_init__(self):
        tn = np.atleast_2d(np.asarray(self.theta_nodes, dtype=float))
        pn = np.atleast_2d(np.asarray(self.psi_nodes, dtype=float))
        tm = _check_mass(self.theta_prior_mass, "theta_prior_mass")
        pm = _check_mass(self.psi_prior_mass, "psi_prior_mass")
        if tn.shape[0] != tm.size:
            raise ValueError(f"{tn.shape[0]} theta nodes but {tm.size} masses")
        if pn.shape[0] != pm.size:
            raise ValueError(f"{pn.shape[0]} psi nodes but {pm.size} masses")
        object.__setattr__(self, "theta_nodes", tn)
        object.__setattr__(self, "psi_nodes", pn)
        object.__setattr__(self, "theta_prior_mass", tm)
        object.__setattr__(self, "psi_prior_mass", pm)

    @property
    def n_theta(self) -> int:
        return self.theta_nodes.shape[0]

    @property
    def n_psi(self) -> int:
        return self.psi_nodes.shape[0]

    def log_theta_prior(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.theta_prior_mass)

    def log_psi_prior(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.psi_prior_mass)

    def nearest_theta(self, value) -> tuple[int, float]:
        """Index of the theta node closest to value, plus the snap distance."""
        value = np.atleast_1d(np.asarray(value, dtype=float))
        d = np.linalg.norm(self.theta_nodes - value[None, :], axis=1)
        idx = int(np.argmin(d))
        return idx, float(d[idx])


def midpoint_nodes(low: float, high: float, count: int) -> np.ndarray:
    """Centers of `count` equal cells tiling [low, high]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    h = (high - low) / count
    return low + h * (np.arange(count) + 0.5)


def box_nodes(box: np.ndarray, resolution: int) -> np.ndarray:
    """Product grid of midpoint nodes over a (k, 2) interval box, (res^k, k)."""
    box = np.atleast_2d(np.asarray(box, dtype=float))
    axes = [midpoint_nodes(lo, hi, resolution) for lo, hi in box]
    if len(axes) == 1:
        return axes[0][:, None]
    return np.array(list(itertools.product(*axes)))


def _quadrature_mass(nodes: np.ndarray, log_pdf) -> np.ndarray:
    logs = np.array([log_pdf(node) for node in nodes], dtype=float)
    peak = logs.max()
    if not np.isfinite(peak):
        raise ValueError("prior density vanished on every grid node")
    mass = np.exp(logs - peak)
    return mass / mass.sum()


def build_grid(model, theta_log_pdf, psi_log_pdf, theta_resolution: int = 201,
               psi_resolution: int = 201) -> ParameterGrid:
    """Midpoint-quadrature grid over the model's support boxes.

    theta_log_pdf / psi_log_pdf take one node vector and return the prior
    log-density there (normalization constants are irrelevant).
    """
    theta_nodes = box_nodes(model.theta_support, theta_resolution)
    psi_nodes = box_nodes(model.psi_support, psi_resolution)
    return ParameterGrid(
        theta_nodes=theta_nodes,
        psi_nodes=psi_nodes,
        theta_prior_mass=_quadrature_mass(theta_nodes, theta_log_pdf),
        psi_prior_mass=_quadrature_mass(psi_nodes, psi_log_pdf),
    )


def toy_grid(theta_count: int, psi_count: int, theta_prior=None, psi_prior=None) -> ParameterGrid:
    """Grid whose nodes are the toy model's own indices.

    Priors default to uniform; explicit mass vectors are normalized as given
    (they must already sum to one).
    """
    tm = np.full(theta_count, 1.0 / theta_count) if theta_prior is None \
        else np.asarray(theta_prior, dtype=float)
    pm = np.full(psi_count, 1.0 / psi_count) if psi_prior is None \
        else np.asarray(psi_prior, dtype=float)
    return ParameterGrid(
        theta_nodes=np.arange(theta_count, dtype=float)[:, None],
        psi_nodes=np.arange(psi_count, dtype=float)[:, None],
        theta_prior_mass=tm,
        psi_prior_mass=pm,
    )
