"""Qubit observables and numerical-health diagnostics of sampled states."""
import logging
import math
from dataclasses import dataclass, fields

import numpy as np

from .model import Dissipator, ModelConfig
from .thermal import inverse_temperature_from_nbar

log = logging.getLogger(__name__)

TOP_FOCK_THRESHOLD = 1e-6
CSV_COLUMNS = (
    "t",
    "gt",
    "pop_excited",
    "coherence",
    "nbar_t",
    "purity",
    "trace_error",
    "min_eigenvalue",
    "top_fock_population",
)


@dataclass(frozen=True)
class ObservableRecord:
    t: float
    gt: float
    pop_excited: float
    coherence: float
    nbar_t: float
    purity: float
    trace_error: float
    herm_defect: float
    min_eigenvalue: float
    top_fock_population: float


@dataclass(eq=False)
class ObservableTable:
    """Column arrays of :class:`ObservableRecord` over a time grid."""

    t: np.ndarray
    gt: np.ndarray
    pop_excited: np.ndarray
    coherence: np.ndarray
    nbar_t: np.ndarray
    purity: np.ndarray
    trace_error: np.ndarray
    herm_defect: np.ndarray
    min_eigenvalue: np.ndarray
    top_fock_population: np.ndarray

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def record(self, i: int) -> ObservableRecord:
        return ObservableRecord(*(float(getattr(self, f.name)[i]) for f in fields(ObservableRecord)))

    @property
    def truncation_flag(self) -> bool:
        return bool(np.max(self.top_fock_population) > TOP_FOCK_THRESHOLD)


def _reduced_qubit(states, n_osc):
    r = states.reshape(-1, 2, n_osc, 2, n_osc)
    return np.einsum("tanbn->tab", r)


def tabulate(times, states, cfg: ModelConfig) -> ObservableTable:
    states = np.asarray(states)
    if states.ndim == 2:
        states = states[None]
    times = np.atleast_1d(np.asarray(times, dtype=float))
    n_osc = cfg.n_max + 1
    rho_a = _reduced_qubit(states, n_osc)
    pop = rho_a[:, 0, 0]
    if np.max(np.abs(pop.imag)) > 1e-12:
        raise ValueError("excited population has a non-negligible imaginary part")
    diag = np.real(np.diagonal(states, axis1=1, axis2=2)).reshape(-1, 2, n_osc)
    osc_pop = diag.sum(axis=1)
    levels = np.arange(n_osc)
    herm = np.max(np.abs(states - np.conj(np.swapaxes(states, 1, 2))), axis=(1, 2))
    min_eig = np.linalg.eigvalsh(0.5 * (states + np.conj(np.swapaxes(states, 1, 2))))[:, 0]
    table = ObservableTable(
        t=times,
        gt=cfg.g * times,
        pop_excited=pop.real.copy(),
        coherence=np.abs(rho_a[:, 0, 1]),
        nbar_t=osc_pop @ levels,
        purity=np.real(np.einsum("tij,tij->t", states, np.conj(states))),
        trace_error=np.abs(np.trace(states, axis1=1, axis2=2) - 1.0),
        herm_defect=herm,
        min_eigenvalue=min_eig,
        top_fock_population=osc_pop[:, max(0, n_osc - 3):].sum(axis=1),
    )
    if cfg.dissipator is Dissipator.CL and np.min(min_eig) < -1e-8:
        log.info("CL trajectory lost positivity: min eigenvalue %.3e", np.min(min_eig))
    if table.truncation_flag:
        log.warning(
            "population %.2e on the top Fock levels exceeds %.0e; raise n_max",
            np.max(table.top_fock_population), TOP_FOCK_THRESHOLD,
        )
    return table


def record(rho: np.ndarray, t: float, cfg: ModelConfig) -> ObservableRecord:
    return tabulate([t], rho, cfg).record(0)


def table_of(trajectory) -> ObservableTable:
    return tabulate(trajectory.times, trajectory.states, trajectory.cfg)


def equilibrium_population(delta: float, nbar: float) -> float:
    """Excited population of a qubit thermalized at the bath temperature."""
    b = inverse_temperature_from_nbar(nbar)
    return (1.0 - math.tanh(delta * b / 2)) / 2
