"""Hamiltonians, dissipators and the master-equation right-hand side.

The evolution equation is ``drho/dt = -i [H, rho] - (kappa_eff / 2) D[rho]``
with ``H`` the Jaynes-Cummings or dephasing Hamiltonian and ``D`` one of
the quantum-optical (QO), Caldeira-Leggett (CL) or depolarizing heat bath
(DH) dissipators acting on the oscillator only.

Two evaluation routes exist. The module-level ``dissipator_*`` functions
and ``liouvillian_matrix`` use plain dense products and serve as the
reference; :class:`Model` evaluates the same expressions with ladder-shift
kernels on the ``(2, N, 2, N)`` view of the state, which is what the
integrator calls.
"""
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from .operators import (
    HilbertDims,
    IDENTITY_2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    adjoint,
    annihilation,
    anticommutator,
    commutator,
    kron,
    lift_osc,
    momentum,
    number,
    partial_trace_env,
    position,
)
from . import _kernels
from .thermal import thermal_state, thermal_weights

DEFAULT_MAX_SUPEROP_DIM = 1024


class Coupling(str, Enum):
    JC = "jc"
    DEPHASING = "dephasing"


class Dissipator(str, Enum):
    QO = "qo"
    CL = "cl"
    DH = "dh"


class ModelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Physical parameters in units of the oscillator frequency.

    ``delta`` is the qubit splitting, ``g`` the qubit-oscillator coupling,
    ``kappa`` the dissipation rate and ``nbar`` the bath occupation.

    ``dh_half_rate`` runs the DH dissipator at ``kappa / 2``.
    ``cl_energy_rate`` halves the CL coefficients so that the oscillator
    energy relaxes at rate ``kappa`` as it does for QO; with it off the CL
    term is used with its bare coefficients, which relax energy at
    ``2 kappa``.
    """

    coupling: Coupling = Coupling.JC
    dissipator: Dissipator = Dissipator.QO
    delta: float = 1.0
    g: float = 0.1
    kappa: float = 0.1
    nbar: float = 0.0
    n_max: int = 40
    dh_half_rate: bool = True
    cl_energy_rate: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "coupling", Coupling(self.coupling))
        except ValueError:
            raise ModelConfigError(f"coupling: unknown value {self.coupling!r}") from None
        try:
            object.__setattr__(self, "dissipator", Dissipator(self.dissipator))
        except ValueError:
            raise ModelConfigError(f"dissipator: unknown value {self.dissipator!r}") from None
        for name in ("delta", "g", "kappa", "nbar"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
                raise ModelConfigError(f"{name}: expected a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("g", "kappa", "nbar"):
            if getattr(self, name) < 0:
                raise ModelConfigError(f"{name}: must be >= 0, got {getattr(self, name)!r}")
        if isinstance(self.n_max, bool) or int(self.n_max) != self.n_max or self.n_max < 1:
            raise ModelConfigError(f"n_max: must be an integer >= 1, got {self.n_max!r}")
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.dissipator is Dissipator.CL and self.kappa > 1:
            warnings.warn(
                f"CL dissipator used at kappa={self.kappa} > 1, outside the underdamped regime",
                stacklevel=3,
            )

    @property
    def dims(self) -> HilbertDims:
        return HilbertDims(self.n_max)

    @property
    def effective_kappa(self) -> float:
        if self.dissipator is Dissipator.DH and self.dh_half_rate:
            return self.kappa / 2
        if self.dissipator is Dissipator.CL and self.cl_energy_rate:
            return self.kappa / 2
        return self.kappa

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


def _n_max_of(rho) -> int:
    d = np.asarray(rho).shape[0]
    if d % 2 or d < 4:
        raise ValueError(f"matrix dimension {d} is not 2*(n_max+1) with n_max >= 1")
    return d // 2 - 1


def _free_hamiltonian(delta, n_max):
    return (delta / 2) * kron(SIGMA_Z, np.eye(n_max + 1)) + lift_osc(number(n_max))


def build_h_jc(delta: float, g: float, n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    coupling = kron(SIGMA_PLUS, a) + kron(SIGMA_MINUS, adjoint(a))
    return _free_hamiltonian(delta, n_max) + g * coupling


def build_h_dephasing(delta: float, g: float, n_max: int) -> np.ndarray:
    a = annihilation(n_max)
    return _free_hamiltonian(delta, n_max) + (g / np.sqrt(2)) * kron(SIGMA_Z, a + adjoint(a))


def build_hamiltonian(cfg: ModelConfig) -> np.ndarray:
    if cfg.coupling is Coupling.JC:
        return build_h_jc(cfg.delta, cfg.g, cfg.n_max)
    return build_h_dephasing(cfg.delta, cfg.g, cfg.n_max)


def excitation_number(n_max: int) -> np.ndarray:
    """``sigma_z / 2 (x) I + I (x) a^dag a``, conserved by the JC Hamiltonian."""
    return kron(SIGMA_Z / 2, np.eye(n_max + 1)) + lift_osc(number(n_max))


def dissipator_qo(rho: np.ndarray, nbar: float) -> np.ndarray:
    n_max = _n_max_of(rho)
    a = lift_osc(annihilation(n_max))
    ad = adjoint(a)
    emit = ad @ a @ rho - 2 * a @ rho @ ad + rho @ ad @ a
    absorb = a @ ad @ rho - 2 * ad @ rho @ a + rho @ a @ ad
    return (nbar + 1) * emit + nbar * absorb


def dissipator_cl(rho: np.ndarray, nbar: float) -> np.ndarray:
    n_max = _n_max_of(rho)
    x = lift_osc(position(n_max))
    p = lift_osc(momentum(n_max))
    return 2j * commutator(x, anticommutator(p, rho)) + 2 * (2 * nbar + 1) * commutator(x, commutator(x, rho))


def dissipator_dh(rho: np.ndarray, nbar: float, dims: HilbertDims = None) -> np.ndarray:
    dims = dims or HilbertDims(_n_max_of(rho))
    w = thermal_state(nbar, dims.n_max)
    return 2 * (rho - kron(partial_trace_env(rho, dims), w))


_DENSE_DISSIPATORS = {
    Dissipator.QO: dissipator_qo,
    Dissipator.CL: dissipator_cl,
    Dissipator.DH: dissipator_dh,
}


def dissipator(rho: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    return _DENSE_DISSIPATORS[cfg.dissipator](rho, cfg.nbar)


def rhs_dense(rho: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    """Reference right-hand side built from dense matrix products."""
    h = build_hamiltonian(cfg)
    return -1j * commutator(h, rho) - (cfg.effective_kappa / 2) * dissipator(rho, cfg)


@dataclass(frozen=True, eq=False)
class Model:
    """Prebuilt, immutable evaluation bundle for one :class:`ModelConfig`.

    All coefficients, including ``-i`` and ``-kappa_eff / 2``, are folded
    into arrays once so that :meth:`rhs` is a handful of compiled passes.
    """

    cfg: ModelConfig
    hamiltonian: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        cfg = self.cfg
        n = cfg.n_max + 1
        k_half = cfg.effective_kappa / 2
        levels = np.arange(n, dtype=float)
        energy = np.concatenate([cfg.delta / 2 + levels, -cfg.delta / 2 + levels])
        lam = (-1j * (energy[:, None] - energy[None, :])).reshape(2, n, 2, n)
        nb = cfg.nbar
        sq = np.sqrt(levels)
        jd = ju = reset = None
        if cfg.dissipator is Dissipator.QO:
            # diag(a a^dag) in the truncated space vanishes on the top level
            raise_diag = np.append(levels[1:], 0.0)
            qo_diag = (nb + 1) * (levels[:, None] + levels[None, :]) + nb * (raise_diag[:, None] + raise_diag[None, :])
            lam = lam - k_half * qo_diag[None, :, None, :]
            jd = k_half * 2 * (nb + 1) * np.outer(sq[1:], sq[1:]) + 0j
            ju = k_half * 2 * nb * np.outer(sq[1:], sq[1:]) + 0j
        elif cfg.dissipator is Dissipator.DH:
            lam = lam - 2 * k_half
            reset = 2 * k_half * thermal_weights(nb, cfg.n_max) + 0j
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("hamiltonian", build_hamiltonian(cfg))
        set_("weights", thermal_weights(nb, cfg.n_max))
        set_("_lam", np.ascontiguousarray(lam, dtype=complex))
        set_("_sqrt", sq)
        set_("_jumps", (jd, ju))
        set_("_reset", reset)
        if cfg.g == 0:
            code = _kernels.COUPLING_NONE
        elif cfg.coupling is Coupling.JC:
            code = _kernels.COUPLING_JC
        else:
            code = _kernels.COUPLING_DEPHASING
        set_("_coupling", code)
        set_("_cg", -1j * cfg.g)
        set_("_cl", (-k_half * 2j, -k_half * 2 * (2 * nb + 1)))

    @property
    def dims(self) -> HilbertDims:
        return self.cfg.dims

    def rhs(self, rho: np.ndarray, out: np.ndarray = None) -> np.ndarray:
        n = self.cfg.n_max + 1
        rho = np.ascontiguousarray(rho, dtype=complex)
        if rho.shape != (2 * n, 2 * n):
            raise ValueError(f"state has shape {rho.shape}, expected {(2 * n, 2 * n)}")
        if out is None:
            out = np.empty_like(rho)
        r, o = rho.reshape(2, n, 2, n), out.reshape(2, n, 2, n)
        _kernels.diagonal_and_coupling(r, o, self._lam, self._coupling, self._cg, self._sqrt)
        if self.cfg.effective_kappa:
            kind = self.cfg.dissipator
            if kind is Dissipator.QO:
                _kernels.add_jumps(r, o, *self._jumps)
            elif kind is Dissipator.DH:
                _kernels.add_reset(r, o, self._reset)
            else:
                _kernels.add_caldeira_leggett(r, o, *self._cl, self._sqrt, np.empty_like(r))
        return out

    __call__ = rhs


@lru_cache(maxsize=32)
def model_for(cfg: ModelConfig) -> Model:
    return Model(cfg)


def rhs(rho: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    """Master-equation right-hand side ``-i[H, rho] - (kappa_eff/2) D[rho]``."""
    return model_for(cfg).rhs(rho)


# -- superoperator oracle ---------------------------------------------------


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    matrix: np.ndarray
    dims: HilbertDims

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dims.total)


def _left(a):
    return np.kron(np.eye(a.shape[0]), a)


def _right(b):
    return np.kron(b.T, np.eye(b.shape[0]))


def _sandwich(a, b):
    # rho -> a rho b
    return np.kron(b.T, a)


def _dh_reset_superop(dims: HilbertDims, nbar: float) -> np.ndarray:
    d, n = dims.total, dims.osc_dim
    w = thermal_weights(nbar, dims.n_max)
    out = np.zeros((d * d, d * d), dtype=complex)
    for q in range(2):
        for p in range(2):
            for m in range(n):
                row = dims.index(q, m) + dims.index(p, m) * d
                for k in range(n):
                    out[row, dims.index(q, k) + dims.index(p, k) * d] = w[m]
    return out


def liouvillian_matrix(cfg: ModelConfig, max_dim: int = DEFAULT_MAX_SUPEROP_DIM) -> Liouvillian:
    """Dense superoperator ``L`` with ``L @ vec(rho) == vec(rhs(rho))``."""
    dims = cfg.dims
    d = dims.total
    if d * d > max_dim:
        raise ValueError(
            f"superoperator dimension {d * d} for n_max={cfg.n_max} exceeds the cap {max_dim}"
        )
    h = build_hamiltonian(cfg)
    eye = np.eye(d, dtype=complex)
    generator = -1j * (_left(h) - _right(h))
    if cfg.dissipator is Dissipator.QO:
        a = lift_osc(annihilation(cfg.n_max))
        ad = adjoint(a)
        emit = _left(ad @ a) + _right(ad @ a) - 2 * _sandwich(a, ad)
        absorb = _left(a @ ad) + _right(a @ ad) - 2 * _sandwich(ad, a)
        diss = (cfg.nbar + 1) * emit + cfg.nbar * absorb
    elif cfg.dissipator is Dissipator.CL:
        x = lift_osc(position(cfg.n_max))
        p = lift_osc(momentum(cfg.n_max))
        friction = _left(x @ p) + _sandwich(x, p) - _sandwich(p, x) - _right(p @ x)
        diffusion = _left(x @ x) - 2 * _sandwich(x, x) + _right(x @ x)
        diss = 2j * friction + 2 * (2 * cfg.nbar + 1) * diffusion
    else:
        diss = 2 * (np.kron(eye, eye) - _dh_reset_superop(dims, cfg.nbar))
    return Liouvillian(generator - (cfg.effective_kappa / 2) * diss, dims)


__all__ = [
    "Coupling",
    "Dissipator",
    "IDENTITY_2",
    "Liouvillian",
    "Model",
    "ModelConfig",
    "ModelConfigError",
    "build_h_dephasing",
    "build_h_jc",
    "build_hamiltonian",
    "dissipator",
    "dissipator_cl",
    "dissipator_dh",
    "dissipator_qo",
    "excitation_number",
    "liouvillian_matrix",
    "model_for",
    "rhs",
    "rhs_dense",
    "unvec",
    "vec",
]
