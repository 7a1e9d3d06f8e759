"""Thermal equilibrium states of the truncated oscillator mode.

Temperature is carried by the mean occupation ``nbar``; the adimensional
inverse temperature ``b = hbar w_e / k_B T`` is derived from it through
``coth(b / 2) = 2 nbar + 1``.
"""
import math

import numpy as np

from .operators import number


def inverse_temperature_from_nbar(nbar: float) -> float:
    """Return ``b = 2 atanh(1 / (2 nbar + 1))``.

    ``nbar = 0`` (zero temperature) has no finite ``b`` and is rejected.
    """
    if not nbar > 0:
        raise ValueError(f"nbar must be > 0 to define a finite inverse temperature, got {nbar!r}")
    return 2.0 * math.atanh(1.0 / (2.0 * nbar + 1.0))


def nbar_from_inverse_temperature(b: float) -> float:
    if not b > 0:
        raise ValueError(f"inverse temperature must be > 0, got {b!r}")
    # (coth(b/2) - 1) / 2 == 1 / expm1(b), the second form is stable for small b
    return 1.0 / math.expm1(b)


def thermal_weights(nbar: float, n_max: int) -> np.ndarray:
    """Geometric occupation probabilities renormalized on ``0..n_max``."""
    if nbar < 0:
        raise ValueError(f"nbar must be >= 0, got {nbar!r}")
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    w = np.zeros(n_max + 1)
    if nbar == 0:
        w[0] = 1.0
        return w
    # e^{-b} == nbar / (nbar + 1)
    ratio = nbar / (nbar + 1.0)
    w = ratio ** np.arange(n_max + 1)
    return w / w.sum()


def thermal_state(nbar: float, n_max: int) -> np.ndarray:
    return np.diag(thermal_weights(nbar, n_max)).astype(complex)


def mean_occupation_of(state: np.ndarray) -> float:
    """``tr(a^dag a state)`` for an oscillator-space matrix."""
    state = np.asarray(state)
    n_max = state.shape[0] - 1
    value = np.trace(number(n_max) @ state)
    if abs(value.imag) > 1e-12:
        raise ValueError(f"occupation has imaginary part {value.imag:.3e}; state is not Hermitian")
    return float(value.real)


def truncation_tail_bound(nbar: float, n_max: int) -> float:
    """Upper bound on ``nbar - <n>`` caused by renormalizing on ``0..n_max``."""
    if nbar == 0:
        return 0.0
    q = nbar / (nbar + 1.0)
    return (n_max + 2) * q ** (n_max + 1) / (1.0 - q) ** 2
