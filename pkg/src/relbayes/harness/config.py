"""Experiment configuration: flat key = value files, fail-loud parsing.

The format is one `key = value` pair per line, with `#` comments and blank
lines ignored.  Values are typed by the schema below; unknown keys and keys
that do not apply to the chosen experiment are errors rather than silently
ignored.

Schema (defaults in parentheses):

  common       experiment {linear|gp|smoking|toy-verify}; n_simulations (50);
               master_seed (0); grid_resolution (101); output_dir (results);
               parallelism (1); label (auto)
  linear       multicollinearity (0); n_outcome (75); n_proxy_prompts (25);
               target_resemblance_pct (100); contamination_pct (0)
  gp           n_trajectories (24); m_target (12); m_source (8);
               resolution (10); theta_star (1.0); contamination_pct (0);
               refinement_T (3); grid_resolution defaults to 10 here
  smoking      smoking_csv (packaged dataset); proxy_mode {weak|strong|
               misleading|all} (all); mcmc_samples (20000)
  toy-verify   no extra keys
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from ..synthetic import GpScenario, LinearScenario

EXPERIMENTS = ("linear", "gp", "smoking", "toy-verify")
PROXY_MODES = ("weak", "strong", "misleading", "all")


class ConfigError(ValueError):
    """Invalid configuration file or option combination."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n_simulations: int = 50
    master_seed: int = 0
    grid_resolution: int = 101
    output_dir: str = "results"
    parallelism: int = 1
    label: str = ""

    multicollinearity: float = 0.0
    n_outcome: int = 75
    n_proxy_prompts: int = 25
    target_resemblance_pct: float = 100.0
    contamination_pct: float = 0.0

    n_trajectories: int = 24
    m_target: int = 12
    m_source: int = 8
    resolution: int = 10
    theta_star: float = 1.0
    refinement_T: int = 3

    smoking_csv: str = ""
    proxy_mode: str = "all"
    mcmc_samples: int = 20000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, "
                              f"got {self.experiment!r}")
        if self.n_simulations < 1:
            raise ConfigError("n_simulations must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be nonnegative")
        if self.grid_resolution < 2:
            raise ConfigError("grid_resolution must be >= 2")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.proxy_mode not in PROXY_MODES:
            raise ConfigError(f"proxy_mode must be one of {PROXY_MODES}")
        if self.mcmc_samples < 1000:
            raise ConfigError("mcmc_samples must be >= 1000")

    def linear_scenario(self) -> LinearScenario:
        return LinearScenario(
            multicollinearity=self.multicollinearity,
            n_outcome=self.n_outcome,
            n_proxy_prompts=self.n_proxy_prompts,
            target_resemblance_pct=self.target_resemblance_pct,
            contamination_pct=self.contamination_pct,
        )

    def gp_scenario(self) -> GpScenario:
        return GpScenario(
            n_trajectories=self.n_trajectories,
            m_target=self.m_target,
            m_source=self.m_source,
            resolution=self.resolution,
            theta_star=self.theta_star,
            contamination_pct=self.contamination_pct,
            refinement_T=self.refinement_T,
        )

    def group_label(self) -> str:
        if self.label:
            return self.label
        if self.experiment == "linear":
            return (f"mc={self.multicollinearity:g} "
                    f"res={self.target_resemblance_pct:g}% "
                    f"cont={self.contamination_pct:g}%")
        if self.experiment == "gp":
            return f"theta*={self.theta_star:g} m_t={self.m_target}"
        return self.experiment


_COMMON_KEYS = {"experiment", "n_simulations", "master_seed", "grid_resolution",
                "output_dir", "parallelism", "label"}
_EXPERIMENT_KEYS = {
    "linear": {"multicollinearity", "n_outcome", "n_proxy_prompts",
               "target_resemblance_pct", "contamination_pct"},
    "gp": {"n_trajectories", "m_target", "m_source", "resolution", "theta_star",
           "contamination_pct", "refinement_T"},
    "smoking": {"smoking_csv", "proxy_mode", "mcmc_samples"},
    "toy-verify": set(),
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = (lineno, raw)

    if "experiment" not in pairs:
        raise ConfigError(f"{source}: missing required key 'experiment'")
    experiment = pairs["experiment"][1]
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"{source}: experiment must be one of {EXPERIMENTS}, "
                          f"got {experiment!r}")
    allowed = _COMMON_KEYS | _EXPERIMENT_KEYS[experiment]
    values = {"experiment": experiment}
    for key, (lineno, raw) in pairs.items():
        if key == "experiment":
            continue
        if key not in allowed:
            hint = ("unknown key" if key not in _FIELD_TYPES
                    else f"not applicable to experiment {experiment!r}")
            raise ConfigError(f"{source}:{lineno}: {hint}: {key!r}")
        values[key] = _coerce(key, raw)
    if experiment == "gp" and "grid_resolution" not in values:
        values["grid_resolution"] = 10
    try:
        return ExperimentConfig(**values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def parse_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def apply_overrides(config: ExperimentConfig, seed=None, out=None, jobs=None,
                    grid=None) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["master_seed"] = int(seed)
    if out is not None:
        updates["output_dir"] = str(out)
    if jobs is not None:
        updates["parallelism"] = int(jobs)
    if grid is not None:
        updates["grid_resolution"] = int(grid)
    return replace(config, **updates) if updates else config


def config_echo(config: ExperimentConfig) -> list[str]:
    keys = sorted(_COMMON_KEYS | _EXPERIMENT_KEYS[config.experiment])
    return [f"{k} = {getattr(config, k)}" for k in keys]
