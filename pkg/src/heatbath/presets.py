"""Hard-coded reproduction presets for figures 1-6.

Each preset returns a list of :class:`Output`, one CSV worth of data per
(panel, model, dissipation rate).
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .experiments import (
    DEFAULT_G,
    InitialQubit,
    SolverOptions,
    TraceSet,
    run_coherence_trace,
    run_equilibration,
    run_population_trace,
    sign_changes,
    Run,
)
from .model import Coupling
from .runconfig import RunConfig, ScenarioSpec

FIGURES = (1, 2, 3, 4, 5, 6)
DETUNINGS = (0.8, 0.1)
SHORT_RATES = (1.0, 2.0, 10.0)
LONG_RATES = (1.0, 10.0, 20.0, 40.0)
DEPHASING_PANELS = ((1.0, 0.1), (1.0, 0.2), (3.0, 0.2))  # (nbar, g)


@dataclass(eq=False)
class Output:
    name: str
    run: Run
    config: RunConfig
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


def _slug(x: float) -> str:
    return f"{x:g}".replace(".", "p")


def _from_traces(prefix: str, traces: TraceSet, initial: InitialQubit, solver: SolverOptions,
                 meta: Optional[dict] = None) -> List[Output]:
    out = []
    for (key, kg), run in traces.runs.items():
        name = f"{prefix}_{key.replace('@', '_at_')}_kg{_slug(kg)}"
        t = run.table.t
        scenario = ScenarioSpec(name=name, initial_qubit=initial.value, t_max=float(t[-1]), n_samples=len(t))
        info = {"variant": key, "kappa_over_g": kg, "delta_over_g": traces.delta_over_g}
        info.update(meta or {})
        out.append(Output(name, run, RunConfig(run.cfg, scenario, solver), meta=info))
    return out


def figure_1(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    kw = {} if n_max is None else {"n_max": n_max}
    res = run_equilibration(solver=solver, **kw)
    out = []
    for key, run in res.runs.items():
        name = f"fig1_{key}"
        t = run.table.t
        scenario = ScenarioSpec(name=name, initial_qubit=InitialQubit.GROUND.value, t_max=float(t[-1]),
                                n_samples=len(t), initial_nbar=3.0)
        meta = {
            "fitted_rate": res.fitted_rate[key],
            "max_residual": res.max_residual(key),
            "residual_sign_changes": sign_changes(res.residual(key)),
        }
        out.append(Output(name, run, RunConfig(run.cfg, scenario, solver),
                          {"n_theo": res.theory, "residual": res.residual(key)}, meta))
    return out


def _dh_rate(dh_full_rate):
    return 1.0 if dh_full_rate else 0.5


def figure_2(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    out = []
    for dg in DETUNINGS:
        tr = run_population_trace(dg, SHORT_RATES, nbar=0.0, g=DEFAULT_G, dh_rate=_dh_rate(dh_full_rate),
                                  n_max=n_max, solver=solver, workers=workers)
        out += _from_traces(f"fig2_dg{_slug(dg)}", tr, InitialQubit.EXCITED, solver)
    return out


def figure_3(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    out = []
    for dg in DETUNINGS:
        tr = run_coherence_trace(Coupling.JC, dg, SHORT_RATES, nbar=0.0, dh_rate=_dh_rate(dh_full_rate),
                                 n_max=n_max, solver=solver, workers=workers)
        out += _from_traces(f"fig3_dg{_slug(dg)}", tr, InitialQubit.SIGMA_X, solver)
    return out


def figure_4(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    tr = run_population_trace(0.1, SHORT_RATES, nbar=1.0, include_cl=True, dh_rate=_dh_rate(dh_full_rate),
                              n_max=n_max, solver=solver, workers=workers)
    return _from_traces("fig4", tr, InitialQubit.EXCITED, solver, {"equilibrium_population": tr.equilibrium})


def figure_5(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    out = []
    for dg in DETUNINGS:
        tr = run_coherence_trace(Coupling.JC, dg, LONG_RATES, nbar=1.0, dh_rate=_dh_rate(dh_full_rate),
                                 n_max=n_max, solver=solver, workers=workers)
        out += _from_traces(f"fig5_dg{_slug(dg)}", tr, InitialQubit.SIGMA_X, solver)
    return out


def figure_6(n_max=None, dh_full_rate=False, solver=SolverOptions(), workers=1) -> List[Output]:
    out = []
    for nbar, g in DEPHASING_PANELS:
        tr = run_coherence_trace(Coupling.DEPHASING, 0.1, LONG_RATES, nbar=nbar, g=g,
                                 dh_rate=_dh_rate(dh_full_rate), n_max=n_max, solver=solver, workers=workers)
        out += _from_traces(f"fig6_nbar{_slug(nbar)}_g{_slug(g)}", tr, InitialQubit.SIGMA_X, solver)
    return out


PRESETS = {1: figure_1, 2: figure_2, 3: figure_3, 4: figure_4, 5: figure_5, 6: figure_6}


def figure(number: int, **kw) -> List[Output]:
    if number not in PRESETS:
        raise ValueError(f"figure must be one of {FIGURES}, got {number!r}")
    return PRESETS[number](**kw)
