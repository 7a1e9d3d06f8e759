"""Time evolution of the bipartite density matrix.

The production route is an embedded Dormand-Prince 5(4) pair acting on
the full matrix, with step clipping so every requested sample time is hit
exactly. A fixed-step classical RK4 is kept for convergence-order checks.
The matrix-exponential route propagates the column-stacked state with the
dense Liouvillian and is the independent oracle.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from . import _kernels
from .model import DEFAULT_MAX_SUPEROP_DIM, Liouvillian, ModelConfig, liouvillian_matrix, model_for, unvec, vec
from .operators import adjoint

log = logging.getLogger(__name__)


class Method(str, Enum):
    RK45 = "rk45"
    RK4 = "rk4"
    EXPM = "expm"


class IntegrationError(RuntimeError):
    """Numerical failure: non-finite state or step-size underflow."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t={t:.17g})")
        self.t = t


@dataclass(frozen=True, eq=False)
class IntegratorSpec:
    t_grid: np.ndarray
    method: Method = Method.RK45
    rtol: float = 1e-8
    atol: float = 1e-10
    dt: float = 0.01
    max_steps: int = 10_000_000

    def __post_init__(self):
        grid = np.asarray(self.t_grid, dtype=float).ravel()
        if grid.size == 0 or grid[0] != 0.0:
            raise ValueError("t_grid must start at 0")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        object.__setattr__(self, "t_grid", grid)
        object.__setattr__(self, "method", Method(self.method))
        if not (self.rtol > 0 and self.atol > 0 and self.dt > 0):
            raise ValueError("rtol, atol and dt must be positive")

    @classmethod
    def uniform(cls, t_max: float, n_samples: int, **kwargs) -> "IntegratorSpec":
        if n_samples < 2:
            raise ValueError("need at least two samples")
        return cls(np.linspace(0.0, t_max, n_samples), **kwargs)


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    cfg: ModelConfig
    method: Method
    n_steps: int = 0
    n_rejected: int = 0
    max_herm_defect: float = 0.0
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def trace_drift(self) -> float:
        traces = np.trace(self.states, axis1=1, axis2=2)
        return float(np.max(np.abs(traces - traces[0])))


# Dormand-Prince 5(4) tableau, row i holds the stage-i coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
# fifth-order weights minus embedded fourth-order weights
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 5.0


def _symmetrize(y):
    yh = adjoint(y)
    defect = float(np.max(np.abs(y - yh)))
    return 0.5 * (y + yh), defect


def _check_finite(y, t):
    if not np.all(np.isfinite(y)):
        raise IntegrationError("non-finite entries in the state", t)


def _initial_step(f, y, k1, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = np.max(np.abs(y) / scale)
    d1 = np.max(np.abs(k1) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    d2 = np.max(np.abs(f(y + h0 * k1) - k1) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _rk45(f, y0, grid, spec: IntegratorSpec):
    rtol, atol = spec.rtol, spec.atol
    shape, size = y0.shape, y0.size
    out = np.empty((len(grid),) + shape, dtype=complex)
    y = y0.copy()
    out[0] = y
    ks = np.empty((7, size), dtype=complex)
    k_views = [k.reshape(shape) for k in ks]
    buf = np.empty(size, dtype=complex)
    y_new = np.empty(size, dtype=complex)
    f(y, out=k_views[0])
    h_prop = _initial_step(lambda v: f(v), y, k_views[0], rtol, atol)
    t = 0.0
    n_steps = n_rejected = 0
    worst_defect = 0.0
    for i, t_target in enumerate(grid[1:], start=1):
        while t < t_target:
            if n_steps + n_rejected >= spec.max_steps:
                raise IntegrationError("step budget exhausted", t)
            remaining = t_target - t
            h = min(h_prop, remaining)
            clipped = h < h_prop
            if h <= 1e-14 * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", t)
            yf = y.reshape(size)
            for j in range(1, 6):
                _kernels.stage(yf, h, _A[j], ks, j, buf)
                f(buf.reshape(shape), out=k_views[j])
            _kernels.stage(yf, h, _A[6], ks, 6, y_new)
            f(y_new.reshape(shape), out=k_views[6])
            err_norm = _kernels.error_norm(yf, y_new, ks, _E, h, atol, rtol)
            if not math.isfinite(err_norm):
                raise IntegrationError("non-finite error estimate", t)
            if err_norm <= 1.0:
                t = t_target if h == remaining else t + h
                y, defect = _symmetrize(y_new.reshape(shape))
                worst_defect = max(worst_defect, defect)
                if defect == 0.0:
                    ks[0] = ks[6]
                else:
                    f(y, out=k_views[0])
                n_steps += 1
                factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
                # a step shortened to land on the grid must not shrink the next one
                h_prop = max(h * factor, h_prop) if clipped else h * factor
            else:
                n_rejected += 1
                h_prop = h * max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
        _check_finite(y, t)
        out[i] = y
    return out, n_steps, n_rejected, worst_defect


def _rk4(f, y0, grid, spec: IntegratorSpec):
    out = np.empty((len(grid),) + y0.shape, dtype=complex)
    y = y0.copy()
    out[0] = y
    n_steps = 0
    worst_defect = 0.0
    for i in range(1, len(grid)):
        span = grid[i] - grid[i - 1]
        n_sub = max(1, math.ceil(span / spec.dt - 1e-9))
        h = span / n_sub
        for _ in range(n_sub):
            k1 = f(y)
            k2 = f(y + (h / 2) * k1)
            k3 = f(y + (h / 2) * k2)
            k4 = f(y + h * k3)
            y, defect = _symmetrize(y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
            worst_defect = max(worst_defect, defect)
            n_steps += 1
        _check_finite(y, grid[i])
        out[i] = y
    return out, n_steps, 0, worst_defect


def evolve_expm(L: Liouvillian, rho0: np.ndarray, t: float) -> np.ndarray:
    """``unvec(expm(t L) vec(rho0))``."""
    if t == 0:
        return np.array(rho0, dtype=complex)
    return unvec(scipy.linalg.expm(t * L.matrix) @ vec(rho0), L.dims.total)


def _expm_path(L: Liouvillian, y0, grid):
    out = np.empty((len(grid),) + y0.shape, dtype=complex)
    out[0] = y0
    v = vec(y0)
    steps = np.diff(grid)
    cache = {}
    for i, dt in enumerate(steps, start=1):
        key = round(float(dt), 15)
        if key not in cache:
            cache[key] = scipy.linalg.expm(dt * L.matrix)
        v = cache[key] @ v
        out[i] = unvec(v, L.dims.total)
    return out


def integrate(rho0: np.ndarray, cfg: ModelConfig, spec: IntegratorSpec,
              max_superop_dim: int = DEFAULT_MAX_SUPEROP_DIM) -> Trajectory:
    rho0 = np.array(rho0, dtype=complex)
    d = cfg.dims.total
    if rho0.shape != (d, d):
        raise ValueError(f"initial state has shape {rho0.shape}, expected {(d, d)}")
    if not np.all(np.isfinite(rho0)):
        raise ValueError("initial state has non-finite entries")
    if abs(np.trace(rho0) - 1) > 1e-10:
        raise ValueError(f"initial state has trace {np.trace(rho0)}, expected 1")
    if np.max(np.abs(rho0 - adjoint(rho0))) > 1e-12:
        raise ValueError("initial state is not Hermitian")
    grid = spec.t_grid
    if spec.method is Method.EXPM:
        L = liouvillian_matrix(cfg, max_dim=max_superop_dim)
        states = _expm_path(L, rho0, grid)
        return Trajectory(grid, states, cfg, spec.method)
    f = model_for(cfg).rhs
    runner = _rk45 if spec.method is Method.RK45 else _rk4
    states, n_steps, n_rejected, defect = runner(f, rho0, grid, spec)
    traj = Trajectory(grid, states, cfg, spec.method, n_steps, n_rejected, defect)
    log.debug("%s: %d steps, %d rejected, trace drift %.2e", cfg, n_steps, n_rejected, traj.trace_drift)
    return traj
