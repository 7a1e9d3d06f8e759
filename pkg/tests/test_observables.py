import logging
import math

import numpy as np
import pytest

from heatbath.experiments import InitialQubit, initial_state, simulate
from heatbath.model import Coupling, Dissipator, ModelConfig
from heatbath.observables import CSV_COLUMNS, equilibrium_population, record, tabulate
from heatbath.operators import kron
from heatbath.thermal import thermal_state

# 1 / (1 + 2**1.01), evaluated in 30-digit arithmetic
EQ_POP_1P01_NBAR1 = 0.331794789820563


def test_record_excited_product():
    cfg = ModelConfig(nbar=1.0, n_max=10)
    r = record(initial_state(InitialQubit.EXCITED, 1.0, 10), 2.0, cfg)
    assert r.pop_excited == 1.0 and r.coherence == 0.0
    assert r.t == 2.0 and r.gt == pytest.approx(0.2)
    assert r.trace_error <= 1e-15 and r.herm_defect == 0.0


def test_record_sigma_x_state():
    r = record(initial_state(InitialQubit.SIGMA_X, 0.0, 5), 0.0, ModelConfig(nbar=0.0, n_max=5))
    assert r.pop_excited == pytest.approx(0.5, abs=1e-15)
    assert r.coherence == pytest.approx(0.5, abs=1e-15)
    assert r.purity == pytest.approx(1.0, abs=1e-15)
    assert r.nbar_t == 0.0


def test_purity_of_mixed_thermal_product():
    rho = kron(np.eye(2) / 2, thermal_state(1.0, 40))
    r = record(rho, 0.0, ModelConfig(nbar=1.0, n_max=40))
    assert r.purity == pytest.approx(1 / 6, abs=1e-10)
    assert r.nbar_t == pytest.approx(1.0, abs=1e-9)
    assert r.min_eigenvalue >= 0


def test_equilibrium_population():
    assert equilibrium_population(1.01, 1.0) == pytest.approx(EQ_POP_1P01_NBAR1, abs=1e-14)
    assert equilibrium_population(1.0, 1e9) == pytest.approx(0.5, abs=1e-8)
    assert equilibrium_population(1.3, 1e-7) == pytest.approx(0.0, abs=1e-8)
    with pytest.raises(ValueError):
        equilibrium_population(1.0, 0.0)


def test_columns():
    assert ",".join(CSV_COLUMNS) == "t,gt,pop_excited,coherence,nbar_t,purity,trace_error,min_eigenvalue,top_fock_population"


@pytest.mark.parametrize("dissipator", [Dissipator.QO, Dissipator.DH])
@pytest.mark.parametrize("initial", [InitialQubit.EXCITED, InitialQubit.SIGMA_X])
def test_reduced_state_positivity(dissipator, initial):
    cfg = ModelConfig(coupling=Coupling.JC, dissipator=dissipator, delta=1.08, g=0.1, kappa=0.2, nbar=1.0,
                      n_max=14)
    t = simulate(cfg, initial, 100.0, 101).table
    assert np.all(t.pop_excited >= -1e-12) and np.all(t.pop_excited <= 1 + 1e-12)
    assert np.all(t.coherence <= np.sqrt(np.clip(t.pop_excited * (1 - t.pop_excited), 0, None)) + 1e-8)
    assert np.max(t.trace_error) <= 1e-6


def test_truncation_monitor_warns(caplog):
    cfg = ModelConfig(nbar=1.0, n_max=5)
    with caplog.at_level(logging.WARNING):
        table = tabulate([0.0], initial_state(InitialQubit.EXCITED, 1.0, 5), cfg)
    assert table.truncation_flag
    assert "raise n_max" in caplog.text
    assert not tabulate([0.0], initial_state(InitialQubit.EXCITED, 0.0, 5), ModelConfig(n_max=5)).truncation_flag


def test_cl_positivity_loss_is_reported_not_clamped(caplog):
    cfg = ModelConfig(dissipator=Dissipator.CL, nbar=0.0, n_max=2)
    rho = np.diag([1.1, -0.1, 0, 0, 0, 0]).astype(complex)
    with caplog.at_level(logging.INFO):
        table = tabulate([0.0], rho, cfg)
    assert table.min_eigenvalue[0] == pytest.approx(-0.1)
    assert "positivity" in caplog.text
