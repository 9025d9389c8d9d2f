"""Parallel seeded simulation sweeps.

Each simulation draws everything it needs from its own counter-based RNG
stream keyed by (master_seed, index), so results are identical whatever the
parallelism degree.  Per-simulation exceptions are caught and recorded; a
run with more than 20 percent failures raises.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from pathlib import Path
from typing import Optional

import numpy as np

from .. import __version__
from ..diagnostics import DiagnosticsReport, ProxyModel, TrueProcess, \
    toy_diagnostics_report
from ..grids import ParameterGrid, build_grid, midpoint_nodes
from ..inference import classic_posterior, combine_proxies, r_weighted_posterior
from ..models import SharedParam, TaskParam, discrete_toy_model, gp_model, linear_model
from ..relevance import RelevanceConfig, refine_relevance
from ..synthetic import GP_PSI_SCALE, GP_PSI_SHAPE, LINEAR_THETA_STAR, \
    gen_expert_proxy, gen_gp_trajectories, gen_linear_instance, task_rng
from .config import ConfigError, ExperimentConfig, config_echo
from .csvio import emit_csv, emit_metadata
from .svgplot import emit_boxplot_svg

FAILURE_THRESHOLD = 0.2


class RunFailureError(RuntimeError):
    """More than the tolerated share of simulations failed."""


@dataclass(frozen=True)
class SimulationResult:
    seed: int
    ig_classic: float
    ig_rweighted: float
    advantage: float
    diagnostics: Optional[DiagnosticsReport]
    wall_time_ms: int
    error: Optional[str] = None

    def __post_init__(self):
        if np.isfinite(self.ig_classic) and np.isfinite(self.ig_rweighted):
            if self.advantage != self.ig_rweighted - self.ig_classic:
                raise ValueError("advantage must equal ig_rweighted - ig_classic")


# ---------------------------------------------------------------------------
# per-experiment simulation bodies
# ---------------------------------------------------------------------------

def _normal_prior_grid(resolution: int) -> ParameterGrid:
    """Midpoint grid over [-4, 4] with standard normal quadrature mass."""
    nodes = midpoint_nodes(-4.0, 4.0, resolution)[:, None]
    logs = -0.5 * nodes[:, 0] ** 2
    mass = np.exp(logs - logs.max())
    mass /= mass.sum()
    return ParameterGrid(theta_nodes=nodes, psi_nodes=nodes,
                         theta_prior_mass=mass, psi_prior_mass=mass)


def _log_ratio_at(grid: ParameterGrid, theta_marginal: np.ndarray, a_star: int) -> float:
    with np.errstate(divide="ignore"):
        return float(np.log(theta_marginal[a_star]) - np.log(grid.theta_prior_mass[a_star]))


def _linear_sim(config: ExperimentConfig, index: int):
    rng = task_rng(config.master_seed, index)
    inst = gen_linear_instance(config.linear_scenario(), rng)
    model = linear_model()
    grid = _normal_prior_grid(config.grid_resolution)
    a_star, _ = grid.nearest_theta(np.array([LINEAR_THETA_STAR]))

    classic = classic_posterior(model, inst.source, grid, grid.psi_prior_mass)
    ig_c = _log_ratio_at(grid, classic.theta_marginal(), a_star)

    proxy = combine_proxies(inst.proxies)
    refined = refine_relevance(model, inst.source, grid, proxy, RelevanceConfig())
    weighted = r_weighted_posterior(model, inst.source, grid,
                                    refined.weights_per_psi, proxy)
    ig_r = _log_ratio_at(grid, weighted.theta_marginal(), a_star)
    return ig_c, ig_r, None


def _gp_sim(config: ExperimentConfig, index: int):
    rng = task_rng(config.master_seed, index)
    scenario = config.gp_scenario()
    inst = gen_gp_trajectories(scenario, rng)
    model = gp_model(inst.x_grid)

    def log_theta_prior(t):
        return -np.log(t[0]) - 0.5 * (np.log(t[0]) - 1.0) ** 2

    def log_psi_prior(p):
        return (GP_PSI_SHAPE - 1.0) * np.log(p[0]) - p[0] / GP_PSI_SCALE

    grid = build_grid(model, log_theta_prior, log_psi_prior,
                      theta_resolution=config.grid_resolution,
                      psi_resolution=config.grid_resolution)
    a_star, _ = grid.nearest_theta(np.array([scenario.theta_star]))

    classic = classic_posterior(model, inst.source, grid, grid.psi_prior_mass)
    ig_c = _log_ratio_at(grid, classic.theta_marginal(), a_star)

    proxies = gen_expert_proxy(model, inst.prompts, inst.psi_target_star,
                               scenario.contamination_pct, rng,
                               theta_nodes=grid.theta_nodes,
                               theta_prior=grid.theta_prior_mass)
    proxy = combine_proxies(proxies)
    rel_config = RelevanceConfig(refinement_iterations=scenario.refinement_T)
    refined = refine_relevance(model, inst.source, grid, proxy, rel_config)
    weighted = r_weighted_posterior(model, inst.source, grid,
                                    refined.weights_per_psi, proxy)
    ig_r = _log_ratio_at(grid, weighted.theta_marginal(), a_star)
    return ig_c, ig_r, None


def toy_verify_instance(rng: np.random.Generator):
    """A random small discrete instance with everything the report needs."""
    n_theta = int(rng.integers(2, 4))
    n_psi = int(rng.integers(2, 4))
    n_out = int(rng.integers(2, 5))
    n_obs = int(rng.integers(2, 5))
    table = rng.dirichlet(np.ones(n_out), size=(n_theta, n_psi))
    model = discrete_toy_model(n_out, n_theta, n_psi, table)

    from ..grids import toy_grid
    grid = toy_grid(n_theta, n_psi,
                    theta_prior=rng.dirichlet(np.full(n_theta, 5.0)),
                    psi_prior=rng.dirichlet(np.full(n_psi, 5.0)))
    truth = TrueProcess(
        theta_star=SharedParam(float(rng.integers(n_theta))),
        psi_star=tuple(TaskParam(float(rng.integers(n_psi))) for _ in range(n_obs)),
        psi_target_star=TaskParam(float(rng.integers(n_psi))),
    )
    weight_table = rng.uniform(0.0, 1.0, size=(n_psi, n_obs, n_out))

    def weights_provider(data, b, psi_value):
        return np.array([weight_table[b, i, int(o.outcome)]
                         for i, o in enumerate(data)])

    endorse = rng.uniform(0.2, 0.8, size=n_psi)

    def proxy_ll(payload, psi):
        p = endorse[int(round(float(np.atleast_1d(psi)[0])))]
        return float(np.log(p if payload == 1 else 1.0 - p))

    def proxy_sim(psi, sim_rng):
        p = endorse[int(round(float(np.atleast_1d(psi)[0])))]
        return int(sim_rng.random() < p)

    proxy_model = ProxyModel(log_likelihood=proxy_ll, simulate=proxy_sim,
                             payloads=(0, 1))
    return model, truth, grid, weight_table, weights_provider, proxy_model


def _toy_verify_sim(config: ExperimentConfig, index: int):
    rng = task_rng(config.master_seed, index)
    model, truth, grid, _, provider, proxy_model = toy_verify_instance(rng)
    report = toy_diagnostics_report(model, truth, grid, grid.psi_prior_mass,
                                    proxy_model, provider)
    return report.ig_classic, report.ig_rweighted, report


_SIM_BODIES = {
    "linear": _linear_sim,
    "gp": _gp_sim,
    "toy-verify": _toy_verify_sim,
}


def _run_single(config: ExperimentConfig, index: int) -> SimulationResult:
    start = time.perf_counter()
    try:
        body = _SIM_BODIES[config.experiment]
    except KeyError:
        raise ConfigError(
            f"experiment {config.experiment!r} does not run through "
            "run_experiment; use run_smoking_comparison") from None
    try:
        ig_c, ig_r, diagnostics = body(config, index)
        return SimulationResult(
            seed=index, ig_classic=ig_c, ig_rweighted=ig_r,
            advantage=ig_r - ig_c, diagnostics=diagnostics,
            wall_time_ms=int(1000 * (time.perf_counter() - start)))
    except Exception as exc:
        return SimulationResult(
            seed=index, ig_classic=float("nan"), ig_rweighted=float("nan"),
            advantage=float("nan"), diagnostics=None,
            wall_time_ms=int(1000 * (time.perf_counter() - start)),
            error=f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig) -> list[SimulationResult]:
    """All simulations of one scenario, order-stable and seed-deterministic."""
    indices = range(config.n_simulations)
    if config.parallelism == 1:
        results = [_run_single(config, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(_run_single, repeat(config), indices))
    failures = [r for r in results if r.error is not None]
    if len(failures) > FAILURE_THRESHOLD * len(results):
        first = failures[0]
        raise RunFailureError(
            f"{len(failures)} of {len(results)} simulations failed "
            f"(first: seed {first.seed}: {first.error})")
    return results


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

_CORE_COLUMNS = ["seed", "ig_classic", "ig_rweighted", "advantage", "label", "error"]
_DIAG_COLUMNS = ["decomposition_residual", "bound_satisfied", "delta_classic",
                 "delta_rweighted", "rho_fidelity", "ess_dis_expectation",
                 "entropy_true"]


def results_rows(results: list[SimulationResult], label: str) -> list[dict]:
    """CSV rows for a sweep.  wall_time_ms is deliberately not persisted,
    keeping output bytes identical across reruns."""
    rows = []
    with_diag = any(r.diagnostics is not None for r in results)
    for r in results:
        row = {"seed": r.seed, "ig_classic": r.ig_classic,
               "ig_rweighted": r.ig_rweighted, "advantage": r.advantage,
               "label": label, "error": r.error}
        if with_diag:
            d = r.diagnostics
            row.update({
                "decomposition_residual": None if d is None else d.decomposition_residual,
                "bound_satisfied": None if d is None else d.bound_classic.satisfied,
                "delta_classic": None if d is None else d.delta_classic,
                "delta_rweighted": None if d is None else d.delta_rweighted,
                "rho_fidelity": None if d is None else d.rho_fidelity,
                "ess_dis_expectation": None if d is None else d.ess_dis_expectation,
                "entropy_true": None if d is None else d.entropy_true,
            })
        rows.append(row)
    return rows


def summary_rows(rows: list[dict], value_column: str = "advantage",
                 group_column: str = "label") -> list[dict]:
    from .svgplot import box_stats
    groups: dict = {}
    for row in rows:
        v = row.get(value_column)
        if isinstance(v, (int, float)) and np.isfinite(v):
            groups.setdefault(row[group_column], []).append(float(v))
    out = []
    for label, vals in groups.items():
        s = box_stats(vals)
        out.append({group_column: label, "count": s.count, "q1": s.q1,
                    "median": s.median, "q3": s.q3, "whisker_lo": s.whisker_lo,
                    "whisker_hi": s.whisker_hi, "n_outliers": len(s.outliers)})
    return out


def write_run_outputs(config: ExperimentConfig, results: list[SimulationResult],
                      extra_notes: Optional[list[str]] = None) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    label = config.group_label()
    rows = results_rows(results, label)
    columns = _CORE_COLUMNS + (_DIAG_COLUMNS if config.experiment == "toy-verify" else [])
    emit_csv(rows, out / "results.csv", columns=columns)
    emit_csv(summary_rows(rows), out / "summary.csv",
             columns=["label", "count", "q1", "median", "q3", "whisker_lo",
                      "whisker_hi", "n_outliers"])
    plot_groups = {label: [r.advantage for r in results
                           if r.error is None and np.isfinite(r.advantage)]}
    if plot_groups[label]:
        emit_boxplot_svg(plot_groups, out / "boxplot.svg",
                         title=f"{config.experiment} sweep",
                         y_label="IG advantage (weighted - classic)")

    notes = [
        f"relbayes {__version__}",
        f"numpy {np.__version__}",
        "",
        "configuration:",
        *(f"  {line}" for line in config_echo(config)),
        "",
        "seed derivation: simulation i draws from a Philox stream keyed "
        "(master_seed, i); results are independent of parallelism.",
        "wall_time_ms is not persisted so outputs are byte-stable.",
        f"failed simulations: {sum(1 for r in results if r.error is not None)} "
        f"of {len(results)}",
    ]
    if extra_notes:
        notes.extend(["", *extra_notes])
    emit_metadata(out / "run_metadata.txt", notes)
    return out
