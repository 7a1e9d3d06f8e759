"""Compiled loops for the master-equation right-hand side and RK stages.

States are passed as ``(2, N, 2, N)`` views, ``r[q, n, p, m]`` being the
element ``<q, n| rho |p, m>``. Oscillator ladder operators act on the
``n`` (left) or ``m`` (right) axis through their nonzero band only.
"""
import numba
import numpy as np

COUPLING_NONE, COUPLING_JC, COUPLING_DEPHASING = 0, 1, 2

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@numba.njit(cache=True)
def diagonal_and_coupling(r, out, lam, coupling, cg, s):
    """out = lam * r + (-i g)[V, r] with V the JC or dephasing coupling."""
    nq, n_osc = r.shape[0], r.shape[1]
    for q in range(nq):
        zq = 1.0 if q == 0 else -1.0
        for n in range(n_osc):
            for p in range(nq):
                zp = 1.0 if p == 0 else -1.0
                for m in range(n_osc):
                    v = lam[q, n, p, m] * r[q, n, p, m]
                    if coupling == 1:
                        # sigma_+ a and sigma_- a^dag, qubit index 0 is excited
                        if q == 0 and n < n_osc - 1:
                            v += cg * s[n + 1] * r[1, n + 1, p, m]
                        if q == 1 and n > 0:
                            v += cg * s[n] * r[0, n - 1, p, m]
                        if p == 1 and m > 0:
                            v -= cg * s[m] * r[q, n, 0, m - 1]
                        if p == 0 and m < n_osc - 1:
                            v -= cg * s[m + 1] * r[q, n, 1, m + 1]
                    elif coupling == 2:
                        xl = 0.0j
                        if n < n_osc - 1:
                            xl += s[n + 1] * r[q, n + 1, p, m]
                        if n > 0:
                            xl += s[n] * r[q, n - 1, p, m]
                        xr = 0.0j
                        if m > 0:
                            xr += r[q, n, p, m - 1] * s[m]
                        if m < n_osc - 1:
                            xr += r[q, n, p, m + 1] * s[m + 1]
                        v += cg * _INV_SQRT2 * (zq * xl - zp * xr)
                    out[q, n, p, m] = v


@numba.njit(cache=True)
def add_jumps(r, out, jd, ju):
    """Add jd[n, m] r[n+1, m+1] and ju[n, m] r[n, m] onto out[n+1, m+1]."""
    nq, n_osc = r.shape[0], r.shape[1]
    for q in range(nq):
        for n in range(n_osc - 1):
            for p in range(nq):
                for m in range(n_osc - 1):
                    out[q, n, p, m] += jd[n, m] * r[q, n + 1, p, m + 1]
                    out[q, n + 1, p, m + 1] += ju[n, m] * r[q, n, p, m]


@numba.njit(cache=True)
def add_reset(r, out, coef):
    """out[q, n, p, n] += coef[n] * sum_k r[q, k, p, k]."""
    nq, n_osc = r.shape[0], r.shape[1]
    for q in range(nq):
        for p in range(nq):
            tr = 0.0j
            for k in range(n_osc):
                tr += r[q, k, p, k]
            for n in range(n_osc):
                out[q, n, p, n] += coef[n] * tr


@numba.njit(cache=True)
def _fill_comm_x(m_, dst, s):
    nq, n_osc = m_.shape[0], m_.shape[1]
    for q in range(nq):
        for n in range(n_osc):
            for p in range(nq):
                for m in range(n_osc):
                    v = 0.0j
                    if n < n_osc - 1:
                        v += s[n + 1] * m_[q, n + 1, p, m]
                    if n > 0:
                        v += s[n] * m_[q, n - 1, p, m]
                    if m > 0:
                        v -= m_[q, n, p, m - 1] * s[m]
                    if m < n_osc - 1:
                        v -= m_[q, n, p, m + 1] * s[m + 1]
                    dst[q, n, p, m] = v * _INV_SQRT2


@numba.njit(cache=True)
def _fill_acomm_p(m_, dst, s):
    # p = (a - a^dag) / (i sqrt 2)
    nq, n_osc = m_.shape[0], m_.shape[1]
    for q in range(nq):
        for n in range(n_osc):
            for p in range(nq):
                for m in range(n_osc):
                    v = 0.0j
                    if n < n_osc - 1:
                        v += s[n + 1] * m_[q, n + 1, p, m]
                    if n > 0:
                        v -= s[n] * m_[q, n - 1, p, m]
                    if m > 0:
                        v += m_[q, n, p, m - 1] * s[m]
                    if m < n_osc - 1:
                        v -= m_[q, n, p, m + 1] * s[m + 1]
                    dst[q, n, p, m] = v * (-1j * _INV_SQRT2)


@numba.njit(cache=True)
def _add_comm_x(m_, out, coef, s):
    nq, n_osc = m_.shape[0], m_.shape[1]
    for q in range(nq):
        for n in range(n_osc):
            for p in range(nq):
                for m in range(n_osc):
                    v = 0.0j
                    if n < n_osc - 1:
                        v += s[n + 1] * m_[q, n + 1, p, m]
                    if n > 0:
                        v += s[n] * m_[q, n - 1, p, m]
                    if m > 0:
                        v -= m_[q, n, p, m - 1] * s[m]
                    if m < n_osc - 1:
                        v -= m_[q, n, p, m + 1] * s[m + 1]
                    out[q, n, p, m] += coef * _INV_SQRT2 * v


@numba.njit(cache=True)
def add_caldeira_leggett(r, out, friction, diffusion, s, tmp):
    """out += friction [x, {p, r}] + diffusion [x, [x, r]]."""
    _fill_acomm_p(r, tmp, s)
    _add_comm_x(tmp, out, friction, s)
    _fill_comm_x(r, tmp, s)
    _add_comm_x(tmp, out, diffusion, s)


@numba.njit(cache=True)
def stage(y, h, coefs, ks, n_used, out):
    """out = y + h * sum_j coefs[j] * ks[j] for j < n_used (flattened arrays)."""
    size = y.shape[0]
    for i in range(size):
        acc = 0.0j
        for j in range(n_used):
            c = coefs[j]
            if c != 0.0:
                acc += c * ks[j, i]
        out[i] = y[i] + h * acc


@numba.njit(cache=True)
def error_norm(y, y_new, ks, e, h, atol, rtol):
    size = y.shape[0]
    worst = 0.0
    for i in range(size):
        acc = 0.0j
        for j in range(e.shape[0]):
            c = e[j]
            if c != 0.0:
                acc += c * ks[j, i]
        sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        v = abs(h * acc) / sc
        if v != v:
            return np.nan
        if v > worst:
            worst = v
    return worst
