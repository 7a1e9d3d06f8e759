"""Run configuration documents (JSON) and trajectory CSV files.

A config has three sections, ``model``, ``scenario`` and ``integrator``;
unknown keys anywhere are rejected. Trajectory CSVs start with a comment
block of ``# section.key=<json value>`` lines that parses back to the
same :class:`RunConfig`.
"""
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .experiments import InitialQubit, Run, Scenario, SolverOptions, variant_key
from .integrator import Method
from .model import Dissipator, ModelConfig, ModelConfigError
from .observables import CSV_COLUMNS, ObservableTable, tabulate


class ConfigError(ValueError):
    """Validation failure, message names the offending field."""


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "run"
    initial_qubit: str = InitialQubit.EXCITED.value
    t_max: float = 300.0
    n_samples: int = 301
    comparison: Tuple[Tuple[str, Optional[float]], ...] = ()
    initial_nbar: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    integrator: SolverOptions = field(default_factory=SolverOptions)

    def to_scenario(self) -> Scenario:
        return Scenario(
            name=self.scenario.name,
            cfg=self.model,
            initial_qubit=self.scenario.initial_qubit,
            t_max=self.scenario.t_max,
            n_samples=self.scenario.n_samples,
            comparison_set=self.scenario.comparison,
            env_nbar=self.scenario.initial_nbar,
        )

    def to_dict(self) -> dict:
        model = asdict(self.model)
        model["coupling"] = self.model.coupling.value
        model["dissipator"] = self.model.dissipator.value
        scenario = asdict(self.scenario)
        scenario["comparison"] = [list(pair) for pair in self.scenario.comparison]
        integrator = asdict(self.integrator)
        integrator["method"] = Method(self.integrator.method).value
        return {"model": model, "scenario": scenario, "integrator": integrator}


_NUMBER = (int, float)


def _expect(section, key, value, kind):
    if kind is bool:
        ok = isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif kind is float:
        ok = isinstance(value, _NUMBER) and not isinstance(value, bool) and math.isfinite(value)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {value!r}")
    return float(value) if kind is float else value


_MODEL_TYPES = {
    "coupling": str, "dissipator": str, "delta": float, "g": float, "kappa": float, "nbar": float,
    "n_max": int, "dh_half_rate": bool, "cl_energy_rate": bool,
}
_INTEGRATOR_TYPES = {"method": str, "rtol": float, "atol": float, "dt": float}


def _section(doc, name):
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected an object, got {value!r}")
    return value


def _check_keys(section, given, allowed):
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")


def _parse_comparison(raw):
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(f"scenario.comparison: expected a list of [dissipator, rate_scale], got {raw!r}")
    pairs = []
    for i, item in enumerate(raw):
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ConfigError(f"scenario.comparison[{i}]: expected [dissipator, rate_scale], got {item!r}")
        d, scale = item
        try:
            d = Dissipator(d).value
        except ValueError:
            raise ConfigError(f"scenario.comparison[{i}]: unknown dissipator {d!r}") from None
        if scale is not None:
            scale = _expect("scenario", f"comparison[{i}]", scale, float)
            if scale <= 0:
                raise ConfigError(f"scenario.comparison[{i}]: rate_scale must be > 0, got {scale!r}")
        if (d, scale) in pairs:
            raise ConfigError(f"scenario.comparison[{i}]: duplicate entry {item!r}")
        pairs.append((d, scale))
    return tuple(pairs)


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config: expected an object, got {type(doc).__name__}")
    _check_keys("config", doc, ("model", "scenario", "integrator"))

    raw = _section(doc, "model")
    _check_keys("model", raw, _MODEL_TYPES)
    kwargs = {k: _expect("model", k, v, _MODEL_TYPES[k]) for k, v in raw.items()}
    try:
        model = ModelConfig(**kwargs)
    except ModelConfigError as exc:
        raise ConfigError(f"model.{exc}") from None

    raw = _section(doc, "scenario")
    allowed = {f.name for f in fields(ScenarioSpec)}
    _check_keys("scenario", raw, allowed)
    kw = {}
    if "name" in raw:
        kw["name"] = _expect("scenario", "name", raw["name"], str)
        if not kw["name"] or any(c in kw["name"] for c in "/\\"):
            raise ConfigError(f"scenario.name: must be a non-empty file stem, got {kw['name']!r}")
    if "initial_qubit" in raw:
        try:
            kw["initial_qubit"] = InitialQubit(raw["initial_qubit"]).value
        except ValueError:
            raise ConfigError(f"scenario.initial_qubit: unknown value {raw['initial_qubit']!r}") from None
    if "t_max" in raw:
        kw["t_max"] = _expect("scenario", "t_max", raw["t_max"], float)
        if kw["t_max"] <= 0:
            raise ConfigError(f"scenario.t_max: must be > 0, got {kw['t_max']!r}")
    if "n_samples" in raw:
        kw["n_samples"] = _expect("scenario", "n_samples", raw["n_samples"], int)
        if kw["n_samples"] < 2:
            raise ConfigError(f"scenario.n_samples: must be >= 2, got {kw['n_samples']!r}")
    if "comparison" in raw:
        kw["comparison"] = _parse_comparison(raw["comparison"])
    if raw.get("initial_nbar") is not None:
        kw["initial_nbar"] = _expect("scenario", "initial_nbar", raw["initial_nbar"], float)
        if kw["initial_nbar"] < 0:
            raise ConfigError(f"scenario.initial_nbar: must be >= 0, got {kw['initial_nbar']!r}")
    scenario = ScenarioSpec(**kw)

    raw = _section(doc, "integrator")
    _check_keys("integrator", raw, _INTEGRATOR_TYPES)
    kw = {k: _expect("integrator", k, v, _INTEGRATOR_TYPES[k]) for k, v in raw.items()}
    if "method" in kw:
        try:
            kw["method"] = Method(kw["method"])
        except ValueError:
            raise ConfigError(f"integrator.method: unknown value {kw['method']!r}") from None
    for key in ("rtol", "atol", "dt"):
        if key in kw and kw[key] <= 0:
            raise ConfigError(f"integrator.{key}: must be > 0, got {kw[key]!r}")
    return RunConfig(model, scenario, SolverOptions(**kw))


def load_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


# -- CSV ------------------------------------------------------------------------


def _header_lines(config: RunConfig, meta: Optional[dict]):
    lines = []
    for section, values in config.to_dict().items():
        for key, value in values.items():
            lines.append(f"# {section}.{key}={json.dumps(value)}")
    for key, value in (meta or {}).items():
        lines.append(f"# meta.{key}={json.dumps(value)}")
    return lines


def config_for_run(run: Run, name: str = "run", initial_qubit=InitialQubit.EXCITED,
                   solver: SolverOptions = SolverOptions(), initial_nbar: Optional[float] = None) -> RunConfig:
    t = run.table.t
    scenario = ScenarioSpec(name=name, initial_qubit=InitialQubit(initial_qubit).value, t_max=float(t[-1]),
                            n_samples=len(t), initial_nbar=initial_nbar)
    return RunConfig(run.cfg, scenario, solver)


def write_trajectory_csv(trajectory, path, config: Optional[RunConfig] = None,
                         extra_columns: Optional[Dict[str, np.ndarray]] = None, meta: Optional[dict] = None) -> Path:
    """Write one row per sample with 17 significant digits.

    ``trajectory`` is a :class:`~heatbath.experiments.Run` or an integrator
    :class:`~heatbath.integrator.Trajectory`.
    """
    if hasattr(trajectory, "table"):
        table: ObservableTable = trajectory.table
    else:
        table = tabulate(trajectory.times, trajectory.states, trajectory.cfg)
    if len(table) == 0:
        raise ValueError("empty trajectory")
    if config is None:
        t = table.t
        config = RunConfig(trajectory.cfg, ScenarioSpec(t_max=float(t[-1]), n_samples=len(t)))
    extra = dict(extra_columns or {})
    for name, col in extra.items():
        if len(col) != len(table):
            raise ValueError(f"extra column {name!r} has {len(col)} rows, expected {len(table)}")
    columns = [table.column(c) for c in CSV_COLUMNS] + [np.asarray(v, dtype=float) for v in extra.values()]
    lines = _header_lines(config, meta)
    lines.append(",".join(CSV_COLUMNS + tuple(extra)))
    data = np.column_stack(columns)
    lines.extend(",".join(f"{v:.17g}" for v in row) for row in data)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trajectory_csv(path):
    """Return ``(RunConfig, meta, columns)`` from a file written by :func:`write_trajectory_csv`."""
    sections: Dict[str, dict] = {"model": {}, "scenario": {}, "integrator": {}}
    meta = {}
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            section, _, name = key.partition(".")
            parsed = json.loads(value)
            if section == "meta":
                meta[name] = parsed
            elif section in sections:
                sections[section][name] = parsed
            else:
                raise ConfigError(f"{path}: unknown header section {section!r}")
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows).reshape(len(rows), len(header))
    columns = {name: data[:, i] for i, name in enumerate(header)}
    return config_from_dict(sections), meta, columns


def output_name(config: RunConfig, dissipator, rate_scale=None) -> str:
    return f"{config.scenario.name}_{variant_key(dissipator, rate_scale).replace('@', '_at_')}.csv"
