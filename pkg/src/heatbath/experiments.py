"""Scenario runners for the dissipative qubit-oscillator studies.

Every run starts from ``rho_a (x) w_T`` and compares a reference dissipator
(QO or CL) against the depolarizing heat bath, by default at half the
reference rate. Divergence between two models is the sup-norm over the
shared sample grid.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar

from .integrator import IntegratorSpec, Method, integrate
from .model import Coupling, Dissipator, ModelConfig
from .observables import TOP_FOCK_THRESHOLD, ObservableTable, equilibrium_population, tabulate
from .operators import kron
from .thermal import thermal_state, thermal_weights

log = logging.getLogger(__name__)

DEFAULT_G = 0.1
DEFAULT_N_MAX = 40
FALLBACK_N_MAX = 60
DEFAULT_GT_MAX = 30.0
DEFAULT_SAMPLES = 301
POPULATION_THRESHOLD = 0.2
COHERENCE_PROBE_GT = 10.0


class InitialQubit(str, Enum):
    EXCITED = "excited"
    GROUND = "ground"
    SIGMA_X = "sigma_x"


def initial_qubit_state(kind) -> np.ndarray:
    kind = InitialQubit(kind)
    if kind is InitialQubit.EXCITED:
        return np.array([[1, 0], [0, 0]], dtype=complex)
    if kind is InitialQubit.GROUND:
        return np.array([[0, 0], [0, 1]], dtype=complex)
    return np.full((2, 2), 0.5, dtype=complex)


def initial_state(kind, nbar: float, n_max: int) -> np.ndarray:
    return kron(initial_qubit_state(kind), thermal_state(nbar, n_max))


def choose_n_max(nbar: float, default: int = DEFAULT_N_MAX, fallback: int = FALLBACK_N_MAX) -> int:
    """Use ``default`` unless the thermal state already trips the top-Fock monitor."""
    if thermal_weights(nbar, default)[-3:].sum() > TOP_FOCK_THRESHOLD:
        return fallback
    return default


def variant_config(base: ModelConfig, dissipator, rate_scale: Optional[float] = None) -> ModelConfig:
    """Config for ``dissipator`` at ``rate_scale * base.kappa``.

    With ``rate_scale`` omitted, DH follows ``base.dh_half_rate`` and the
    others run at ``base.kappa``.
    """
    dissipator = Dissipator(dissipator)
    if rate_scale is None:
        return base.with_(dissipator=dissipator)
    return base.with_(dissipator=dissipator, kappa=base.kappa * rate_scale, dh_half_rate=False)


def variant_key(dissipator, rate_scale: Optional[float] = None) -> str:
    dissipator = Dissipator(dissipator)
    return dissipator.value if rate_scale is None else f"{dissipator.value}@{rate_scale:g}"


@dataclass(frozen=True)
class Scenario:
    name: str
    cfg: ModelConfig
    initial_qubit: InitialQubit = InitialQubit.EXCITED
    t_max: float = DEFAULT_GT_MAX / DEFAULT_G
    n_samples: int = DEFAULT_SAMPLES
    comparison_set: Tuple[Tuple[Dissipator, Optional[float]], ...] = ()
    env_nbar: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "initial_qubit", InitialQubit(self.initial_qubit))
        object.__setattr__(
            self,
            "comparison_set",
            tuple((Dissipator(d), None if s is None else float(s)) for d, s in self.comparison_set),
        )
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max!r}")
        if self.n_samples < 2:
            raise ValueError(f"n_samples must be >= 2, got {self.n_samples!r}")

    def variants(self) -> Dict[str, ModelConfig]:
        pairs = self.comparison_set or ((self.cfg.dissipator, None),)
        return {variant_key(d, s): variant_config(self.cfg, d, s) for d, s in pairs}


@dataclass(eq=False)
class Run:
    """Observable table and integrator statistics of one integration."""

    cfg: ModelConfig
    table: ObservableTable
    n_steps: int
    n_rejected: int
    max_herm_defect: float
    trace_drift: float
    initial_min_eigenvalue: float
    states: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class SolverOptions:
    method: Method = Method.RK45
    rtol: float = 1e-8
    atol: float = 1e-10
    dt: float = 0.01


def simulate(cfg: ModelConfig, initial_qubit=InitialQubit.EXCITED, t_max: float = 300.0,
             n_samples: int = DEFAULT_SAMPLES, solver: SolverOptions = SolverOptions(),
             env_nbar: Optional[float] = None, keep_states: bool = False) -> Run:
    """Integrate from ``initial_qubit (x) w_T(env_nbar)``; ``env_nbar`` defaults to the bath nbar.

    Runs without stored states are memoized, trajectories are deterministic.
    """
    if keep_states:
        return _simulate(cfg, InitialQubit(initial_qubit), float(t_max), int(n_samples), solver, env_nbar, True)
    return _simulate_cached(cfg, InitialQubit(initial_qubit), float(t_max), int(n_samples), solver, env_nbar)


def _simulate(cfg, initial_qubit, t_max, n_samples, solver, env_nbar, keep_states):
    nbar0 = cfg.nbar if env_nbar is None else env_nbar
    rho0 = initial_state(initial_qubit, nbar0, cfg.n_max)
    spec = IntegratorSpec.uniform(t_max, n_samples, method=solver.method, rtol=solver.rtol,
                                  atol=solver.atol, dt=solver.dt)
    traj = integrate(rho0, cfg, spec)
    table = tabulate(traj.times, traj.states, cfg)
    return Run(
        cfg=cfg,
        table=table,
        n_steps=traj.n_steps,
        n_rejected=traj.n_rejected,
        max_herm_defect=traj.max_herm_defect,
        trace_drift=traj.trace_drift,
        initial_min_eigenvalue=float(np.linalg.eigvalsh(rho0)[0]),
        states=traj.states if keep_states else None,
    )


@lru_cache(maxsize=512)
def _simulate_cached(cfg, initial_qubit, t_max, n_samples, solver, env_nbar):
    return _simulate(cfg, initial_qubit, t_max, n_samples, solver, env_nbar, False)


def run_scenario(scenario: Scenario, solver: SolverOptions = SolverOptions(), workers: int = 1) -> Dict[str, Run]:
    jobs = {
        key: (cfg, scenario.initial_qubit, scenario.t_max, scenario.n_samples, solver, scenario.env_nbar)
        for key, cfg in scenario.variants().items()
    }
    return run_many(jobs, workers=workers)


def _job(args):
    return simulate(*args)


def run_many(jobs: Dict, workers: int = 1) -> Dict:
    """Run ``simulate(*args)`` for every job; results keyed like ``jobs``."""
    keys = list(jobs)
    if workers <= 1 or len(keys) <= 1:
        return {k: simulate(*jobs[k]) for k in keys}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_job, [jobs[k] for k in keys]))
    return dict(zip(keys, results))


def sup_norm(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("sup-norm needs observables on identical grids")
    return float(np.max(np.abs(a - b)))


# -- equilibration of the bare mode ---------------------------------------


def equilibration_theory(t: np.ndarray, kappa: float, nbar0: float, nbar_eq: float) -> np.ndarray:
    return nbar_eq + (nbar0 - nbar_eq) * np.exp(-kappa * np.asarray(t))


def sign_changes(values: np.ndarray, floor: float = 1e-6) -> int:
    """Number of sign flips, ignoring samples with ``|value| < floor``."""
    v = np.asarray(values)
    signs = np.sign(v[np.abs(v) >= floor])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass(eq=False)
class EquilibrationResult:
    t: np.ndarray
    theory: np.ndarray
    nbar: Dict[str, np.ndarray]
    runs: Dict[str, Run]
    fitted_rate: Dict[str, float]
    kappa: float

    def residual(self, key: str) -> np.ndarray:
        return self.nbar[key] - self.theory

    def max_residual(self, key: str) -> float:
        return float(np.max(np.abs(self.residual(key))))


def fit_decay_rate(t, nbar_t, nbar_eq: float, guess: float) -> float:
    def law(tt, amp, rate):
        return nbar_eq + amp * np.exp(-rate * tt)

    (amp, rate), _ = curve_fit(law, t, nbar_t, p0=(nbar_t[0] - nbar_eq, guess))
    return float(rate)


def run_equilibration(kappa: float = 0.1, nbar0: float = 3.0, nbar_eq: float = 1.0, n_max: int = DEFAULT_N_MAX,
                      kt_max: float = 6.0, n_samples: int = 241, dh_half_rate: bool = False,
                      solver: SolverOptions = SolverOptions()) -> EquilibrationResult:
    """Relaxation of the uncoupled mode from ``w_T(nbar0)`` in a bath at ``nbar_eq``.

    DH runs at the full rate here: this compares energy relaxation rates.
    """
    base = ModelConfig(coupling=Coupling.JC, delta=1.0, g=0.0, kappa=kappa, nbar=nbar_eq, n_max=n_max,
                       dh_half_rate=dh_half_rate)
    t_max = kt_max / kappa
    runs, nbar, rates = {}, {}, {}
    for dissipator in Dissipator:
        cfg = base.with_(dissipator=dissipator)
        run = simulate(cfg, InitialQubit.GROUND, t_max, n_samples, solver, env_nbar=nbar0)
        key = dissipator.value
        runs[key] = run
        nbar[key] = run.table.nbar_t
        rates[key] = fit_decay_rate(run.table.t, run.table.nbar_t, nbar_eq, kappa)
    t = runs[Dissipator.QO.value].table.t
    return EquilibrationResult(t, equilibration_theory(t, kappa, nbar0, nbar_eq), nbar, runs, rates, kappa)


# -- population and coherence traces ----------------------------------------


@dataclass(eq=False)
class TraceSet:
    """Runs keyed by ``(variant_key, kappa_over_g)``."""

    coupling: Coupling
    observable: str
    g: float
    delta_over_g: float
    nbar: float
    runs: Dict[Tuple[str, float], Run]
    equilibrium: Optional[float] = None

    def curve(self, key: str, kappa_over_g: float) -> np.ndarray:
        return self.runs[(key, kappa_over_g)].table.column(self.observable)

    def gt(self) -> np.ndarray:
        return next(iter(self.runs.values())).table.gt

    def value_at(self, key: str, kappa_over_g: float, gt: float) -> float:
        return float(np.interp(gt, self.gt(), self.curve(key, kappa_over_g)))


def _trace_jobs(coupling, initial, delta_over_g, kappa_over_g_list, nbar, g, variants, gt_max, n_samples,
                n_max, solver):
    n_max = choose_n_max(nbar) if n_max is None else n_max
    jobs = {}
    for kg in kappa_over_g_list:
        base = ModelConfig(coupling=coupling, dissipator=Dissipator.QO, delta=1.0 + delta_over_g * g, g=g,
                           kappa=kg * g, nbar=nbar, n_max=n_max)
        for d, scale in variants:
            cfg = variant_config(base, d, scale)
            jobs[(variant_key(d, scale), float(kg))] = (cfg, initial, gt_max / g, n_samples, solver)
    return jobs


def _default_variants(include_cl=False, dh_rate=0.5):
    out = [(Dissipator.QO, None)]
    if include_cl:
        out.append((Dissipator.CL, None))
    out.append((Dissipator.DH, dh_rate))
    return tuple(out)


def run_population_trace(delta_over_g: float = 0.1, kappa_over_g_list: Sequence[float] = (1.0, 2.0, 10.0),
                         nbar: float = 0.0, g: float = DEFAULT_G, include_cl: bool = False, dh_rate: float = 0.5,
                         gt_max: float = DEFAULT_GT_MAX, n_samples: int = DEFAULT_SAMPLES,
                         n_max: Optional[int] = None, solver: SolverOptions = SolverOptions(),
                         workers: int = 1) -> TraceSet:
    """Excited-state population under JC coupling from ``|e><e| (x) w_T``."""
    variants = _default_variants(include_cl, dh_rate)
    jobs = _trace_jobs(Coupling.JC, InitialQubit.EXCITED, delta_over_g, kappa_over_g_list, nbar, g, variants,
                       gt_max, n_samples, n_max, solver)
    eq = equilibrium_population(1.0 + delta_over_g * g, nbar) if nbar > 0 else None
    return TraceSet(Coupling.JC, "pop_excited", g, delta_over_g, nbar, run_many(jobs, workers), eq)


def run_coherence_trace(coupling=Coupling.JC, delta_over_g: float = 0.1,
                        kappa_over_g_list: Sequence[float] = (1.0, 10.0, 20.0, 40.0), nbar: float = 1.0,
                        g: float = DEFAULT_G, include_cl: bool = False, dh_rate: float = 0.5,
                        gt_max: float = DEFAULT_GT_MAX, n_samples: int = DEFAULT_SAMPLES,
                        n_max: Optional[int] = None, solver: SolverOptions = SolverOptions(),
                        workers: int = 1) -> TraceSet:
    """Qubit coherence from the sigma_x eigenstate ``(1/2)[[1, 1], [1, 1]] (x) w_T``."""
    coupling = Coupling(coupling)
    variants = _default_variants(include_cl, dh_rate)
    jobs = _trace_jobs(coupling, InitialQubit.SIGMA_X, delta_over_g, kappa_over_g_list, nbar, g, variants,
                       gt_max, n_samples, n_max, solver)
    return TraceSet(coupling, "coherence", g, delta_over_g, nbar, run_many(jobs, workers))


def first_crossing_below(x: np.ndarray, y: np.ndarray, threshold: float) -> float:
    """First ``x`` where ``y`` drops below ``threshold``, linearly interpolated; inf if never."""
    below = np.nonzero(np.asarray(y) < threshold)[0]
    if below.size == 0:
        return math.inf
    i = below[0]
    if i == 0:
        return float(x[0])
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    return float(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0))


def coherence_turnover(traces: TraceSet, key: str = "qo", probe_gt: float = COHERENCE_PROBE_GT):
    """First consecutive ``(kappa_over_g, next)`` pair where coherence at ``probe_gt`` increases."""
    kgs = sorted({kg for k, kg in traces.runs if k == key})
    values = [traces.value_at(key, kg, probe_gt) for kg in kgs]
    for (k0, v0), (k1, v1) in zip(zip(kgs, values), zip(kgs[1:], values[1:])):
        if v1 > v0:
            return k0, k1
    return None


# -- model convergence --------------------------------------------------------


@dataclass(frozen=True)
class DivergenceReport:
    sup_norm: float
    observable: str
    kappa_over_g: float


@dataclass(eq=False)
class ConvergenceStudy:
    reports: List[DivergenceReport]
    traces: TraceSet
    r_star: Optional[float] = None

    @property
    def monotone_decreasing(self) -> bool:
        norms = [r.sup_norm for r in self.reports]
        return all(b < a for a, b in zip(norms, norms[1:]))

    def table(self):
        return [(r.kappa_over_g, r.sup_norm) for r in self.reports]


def best_fit_rate_ratio(coupling, observable: str, kappa_over_g: float, g: float = DEFAULT_G,
                        delta_over_g: float = 0.1, nbar: float = 1.0, reference=Dissipator.QO,
                        bounds=(0.3, 1.0), gt_max: float = DEFAULT_GT_MAX, n_samples: int = DEFAULT_SAMPLES,
                        n_max: Optional[int] = None, solver: SolverOptions = SolverOptions(),
                        xatol: float = 1e-3) -> Tuple[float, float]:
    """DH rate ratio ``r`` minimizing the sup-norm divergence to ``reference``; returns ``(r, sup_norm)``."""
    coupling = Coupling(coupling)
    initial = InitialQubit.SIGMA_X if observable == "coherence" else InitialQubit.EXCITED
    n_max = choose_n_max(nbar) if n_max is None else n_max
    base = ModelConfig(coupling=coupling, dissipator=Dissipator(reference), delta=1.0 + delta_over_g * g, g=g,
                       kappa=kappa_over_g * g, nbar=nbar, n_max=n_max)
    t_max = gt_max / g
    target = simulate(base, initial, t_max, n_samples, solver).table.column(observable)

    def loss(r):
        cfg = variant_config(base, Dissipator.DH, float(r))
        return sup_norm(simulate(cfg, initial, t_max, n_samples, solver).table.column(observable), target)

    res = minimize_scalar(loss, bounds=bounds, method="bounded", options={"xatol": xatol})
    return float(res.x), float(res.fun)


def convergence_study(coupling=Coupling.JC, observable: str = "pop_excited",
                      kappa_over_g_list: Sequence[float] = (1.0, 2.0, 10.0, 40.0), g: float = DEFAULT_G,
                      delta_over_g: float = 0.1, nbar: float = 1.0, reference=Dissipator.QO, dh_rate: float = 0.5,
                      gt_max: float = DEFAULT_GT_MAX, n_samples: int = DEFAULT_SAMPLES,
                      n_max: Optional[int] = None, fit_rate: bool = False,
                      solver: SolverOptions = SolverOptions(), workers: int = 1) -> ConvergenceStudy:
    """Sup-norm divergence between ``reference`` and DH at ``dh_rate`` along ``kappa_over_g_list``."""
    if observable not in ("pop_excited", "coherence"):
        raise ValueError(f"observable must be 'pop_excited' or 'coherence', got {observable!r}")
    coupling = Coupling(coupling)
    reference = Dissipator(reference)
    initial = InitialQubit.SIGMA_X if observable == "coherence" else InitialQubit.EXCITED
    variants = ((reference, None), (Dissipator.DH, dh_rate))
    jobs = _trace_jobs(coupling, initial, delta_over_g, kappa_over_g_list, nbar, g, variants, gt_max, n_samples,
                       n_max, solver)
    traces = TraceSet(coupling, observable, g, delta_over_g, nbar, run_many(jobs, workers))
    ref_key, dh_key = variant_key(reference), variant_key(Dissipator.DH, dh_rate)
    reports = [
        DivergenceReport(sup_norm(traces.curve(ref_key, float(kg)), traces.curve(dh_key, float(kg))),
                         observable, float(kg))
        for kg in kappa_over_g_list
    ]
    r_star = None
    if fit_rate:
        r_star, _ = best_fit_rate_ratio(coupling, observable, float(max(kappa_over_g_list)), g, delta_over_g, nbar,
                                        reference, gt_max=gt_max, n_samples=n_samples, n_max=n_max, solver=solver)
    return ConvergenceStudy(reports, traces, r_star)


# -- g-scaling ------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingVerdict:
    dissipator: Dissipator
    max_deviation: float
    tolerance: float
    expected_invariant: bool

    @property
    def agree(self) -> bool:
        return self.max_deviation <= self.tolerance


def scaling_check(dissipator=Dissipator.QO, first=(0.1, 1.01, 0.1), second=(0.05, 1.005, 0.05), nbar: float = 1.0,
                  gt_max: float = 20.0, n_samples: int = 201, n_max: int = DEFAULT_N_MAX, tolerance: float = 1e-6,
                  solver: SolverOptions = SolverOptions()) -> ScalingVerdict:
    """Compare qubit observables against ``g t`` for two ``(g, delta, kappa)`` with equal ratios.

    CL is included for reporting only; its oscillator frequency is an extra scale.
    """
    dissipator = Dissipator(dissipator)
    deviation = 0.0
    for initial, observable in ((InitialQubit.EXCITED, "pop_excited"), (InitialQubit.SIGMA_X, "coherence")):
        curves = []
        for g, delta, kappa in (first, second):
            cfg = ModelConfig(coupling=Coupling.JC, dissipator=dissipator, delta=delta, g=g, kappa=kappa, nbar=nbar,
                              n_max=n_max)
            curves.append(simulate(cfg, initial, gt_max / g, n_samples, solver).table.column(observable))
        deviation = max(deviation, sup_norm(*curves))
    return ScalingVerdict(dissipator, deviation, tolerance, dissipator is not Dissipator.CL)


# -- oracle equivalence ---------------------------------------------------------


@dataclass(frozen=True)
class OracleCase:
    coupling: Coupling
    dissipator: Dissipator
    initial: str
    max_deviation: float


def random_density_matrix(dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def oracle_check(n_max: int = 3, delta: float = 1.05, g: float = 0.1, kappa: float = 0.2, nbar: float = 1.0,
                 t_max: float = 10.0, n_samples: int = 101, seed: Optional[int] = 0,
                 solver: SolverOptions = SolverOptions()) -> List[OracleCase]:
    """Max entrywise deviation between the chosen solver and exact propagation, per model.

    Every combination starts from ``sigma_x-eigenstate (x) w_T``; with a
    ``seed`` a random full-rank state is checked too.
    """
    cases = []
    spec = IntegratorSpec.uniform(t_max, n_samples, method=solver.method, rtol=solver.rtol, atol=solver.atol,
                                  dt=solver.dt)
    exact = IntegratorSpec.uniform(t_max, n_samples, method=Method.EXPM)
    for coupling in Coupling:
        for dissipator in Dissipator:
            cfg = ModelConfig(coupling=coupling, dissipator=dissipator, delta=delta, g=g, kappa=kappa, nbar=nbar,
                              n_max=n_max)
            starts = {"sigma_x": initial_state(InitialQubit.SIGMA_X, nbar, n_max)}
            if seed is not None:
                starts[f"random:{seed}"] = random_density_matrix(cfg.dims.total, seed)
            for label, rho0 in starts.items():
                a = integrate(rho0, cfg, spec).states
                b = integrate(rho0, cfg, exact).states
                cases.append(OracleCase(coupling, dissipator, label, float(np.max(np.abs(a - b)))))
    return cases
