import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heatbath.experiments import InitialQubit, SolverOptions, _simulate, simulate
from heatbath.integrator import IntegratorSpec, Method, integrate
from heatbath.model import ModelConfig
from heatbath.observables import CSV_COLUMNS
from heatbath.runconfig import (
    ConfigError,
    RunConfig,
    ScenarioSpec,
    config_from_dict,
    load_config,
    read_trajectory_csv,
    write_trajectory_csv,
)

DOC = {
    "model": {"coupling": "dephasing", "dissipator": "cl", "delta": 1.02, "g": 0.2, "kappa": 0.4, "nbar": 1.0,
              "n_max": 6, "dh_half_rate": False},
    "scenario": {"name": "demo", "initial_qubit": "sigma_x", "t_max": 5, "n_samples": 11,
                 "comparison": [["qo", None], ["dh", 0.5]], "initial_nbar": 2.0},
    "integrator": {"method": "rk4", "dt": 0.05},
}


def test_parse_full_document():
    cfg = config_from_dict(DOC)
    assert cfg.model.g == 0.2 and cfg.model.n_max == 6 and not cfg.model.dh_half_rate
    assert cfg.scenario.comparison == (("qo", None), ("dh", 0.5))
    assert cfg.scenario.t_max == 5.0
    assert cfg.integrator.method is Method.RK4 and cfg.integrator.rtol == 1e-8
    sc = cfg.to_scenario()
    assert list(sc.variants()) == ["qo", "dh@0.5"] and sc.env_nbar == 2.0


def test_defaults():
    assert config_from_dict({}) == RunConfig()


@pytest.mark.parametrize("doc,field", [
    ({"model": {"nbar": -1.0}}, "model.nbar"),
    ({"model": {"kappa": "big"}}, "model.kappa"),
    ({"model": {"n_max": 3.0}}, "model.n_max"),
    ({"model": {"dh_half_rate": 1}}, "model.dh_half_rate"),
    ({"model": {"coupling": "xx"}}, "model.coupling"),
    ({"model": {"nbarr": 1.0}}, "model"),
    ({"extra": {}}, "config"),
    ({"scenario": {"t_max": -1}}, "scenario.t_max"),
    ({"scenario": {"initial_qubit": "up"}}, "scenario.initial_qubit"),
    ({"scenario": {"comparison": [["qo"]]}}, "scenario.comparison[0]"),
    ({"scenario": {"comparison": [["dh", 0.5], ["dh", 0.5]]}}, "scenario.comparison[1]"),
    ({"scenario": {"name": "a/b"}}, "scenario.name"),
    ({"integrator": {"method": "euler"}}, "integrator.method"),
    ({"integrator": {"rtol": 0}}, "integrator.rtol"),
    ({"integrator": {"tol": 1e-3}}, "integrator"),
])
def test_field_level_errors(doc, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(doc)
    assert str(info.value).startswith(field)


def test_load_config_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(p)


def test_csv_layout_and_round_trip(tmp_path):
    config = config_from_dict(DOC)
    run = simulate(config.model, InitialQubit.SIGMA_X, 5.0, 11, config.integrator, env_nbar=2.0)
    extra = {"n_theo": np.linspace(0, 1, 11)}
    path = write_trajectory_csv(run, tmp_path / "a.csv", config, extra, meta={"variant": "cl"})
    lines = path.read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == ",".join(CSV_COLUMNS) + ",n_theo"
    assert len(body) - 1 == 11 and body[1].startswith("0,0,")
    assert all("=" in c for c in comments)
    parsed, meta, cols = read_trajectory_csv(path)
    assert parsed == config
    assert meta == {"variant": "cl"}
    np.testing.assert_array_equal(cols["pop_excited"], run.table.pop_excited)
    np.testing.assert_array_equal(cols["n_theo"], extra["n_theo"])


@settings(max_examples=30, deadline=None)
@given(
    st.floats(0.5, 2.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 10.0), st.integers(1, 80),
    st.booleans(), st.floats(1e-3, 1e3), st.integers(2, 1000), st.floats(1e-12, 1e-3),
)
def test_header_round_trip_property(delta, g, kappa, nbar, n_max, half, t_max, n, rtol):
    model = ModelConfig(delta=delta, g=g, kappa=kappa, nbar=nbar, n_max=n_max, dh_half_rate=half)
    config = RunConfig(model, ScenarioSpec(t_max=t_max, n_samples=n), SolverOptions(rtol=rtol))
    run = simulate(ModelConfig(n_max=1), InitialQubit.GROUND, 1.0, 2)
    with tempfile.TemporaryDirectory() as d:
        path = write_trajectory_csv(run, Path(d) / "x.csv", config)
        assert read_trajectory_csv(path)[0] == config


def test_writes_integrator_trajectory(tmp_path):
    cfg = ModelConfig(n_max=2)
    traj = integrate(np.diag([1.0, 0, 0, 0, 0, 0]).astype(complex), cfg, IntegratorSpec.uniform(1.0, 5))
    config, _, cols = read_trajectory_csv(write_trajectory_csv(traj, tmp_path / "t.csv"))
    assert config.model == cfg and config.scenario.n_samples == 5
    assert len(cols["t"]) == 5


def test_fixed_step_runs_are_byte_identical(tmp_path):
    config = config_from_dict({"model": {"n_max": 5, "nbar": 1.0, "kappa": 0.3},
                               "integrator": {"method": "rk4", "dt": 0.05}})
    paths = []
    for name in ("a", "b"):
        # bypass the memo so both files come from independent integrations
        run = _simulate(config.model, InitialQubit.EXCITED, 20.0, 41, config.integrator, None, False)
        paths.append(write_trajectory_csv(run, tmp_path / f"{name}.csv", config))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_extra_column_length_checked(tmp_path):
    run = simulate(ModelConfig(n_max=1), InitialQubit.GROUND, 1.0, 2)
    with pytest.raises(ValueError):
        write_trajectory_csv(run, tmp_path / "x.csv", extra_columns={"bad": np.zeros(3)})
