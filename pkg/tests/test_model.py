import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import curve_fit

from heatbath.experiments import SolverOptions
from heatbath.integrator import IntegratorSpec, integrate
from heatbath.model import (
    Coupling,
    Dissipator,
    ModelConfig,
    ModelConfigError,
    build_h_dephasing,
    build_h_jc,
    dissipator_cl,
    dissipator_dh,
    dissipator_qo,
    excitation_number,
    liouvillian_matrix,
    rhs,
    rhs_dense,
    unvec,
    vec,
)
from heatbath.operators import SIGMA_Z, HilbertDims, annihilation, commutator, kron, partial_trace_env
from heatbath.thermal import thermal_state

from conftest import random_hermitian, random_state

RHO_A = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
ALL = [(c, d) for c in Coupling for d in Dissipator]


def _cfg(coupling=Coupling.JC, dissipator=Dissipator.QO, **kw):
    base = dict(delta=1.05, g=0.1, kappa=0.2, nbar=1.0, n_max=4)
    base.update(kw)
    return ModelConfig(coupling=coupling, dissipator=dissipator, **base)


# -- config ---------------------------------------------------------------------


@pytest.mark.parametrize("field,value", [("nbar", -1.0), ("kappa", -0.1), ("g", -1.0), ("n_max", 0),
                                         ("delta", float("nan")), ("n_max", 2.5)])
def test_config_rejects(field, value):
    with pytest.raises(ModelConfigError, match=field):
        ModelConfig(**{field: value})


def test_config_rejects_unknown_enum():
    with pytest.raises(ModelConfigError, match="dissipator"):
        ModelConfig(dissipator="lindblad")


def test_cl_strong_damping_warns():
    with pytest.warns(UserWarning, match="CL"):
        ModelConfig(dissipator=Dissipator.CL, kappa=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ModelConfig(dissipator=Dissipator.QO, kappa=2.0)


def test_effective_kappa():
    assert ModelConfig(dissipator="dh", kappa=0.4).effective_kappa == 0.2
    assert ModelConfig(dissipator="dh", kappa=0.4, dh_half_rate=False).effective_kappa == 0.4
    # the flag only touches DH
    assert ModelConfig(dissipator="qo", kappa=0.4).effective_kappa == 0.4
    assert ModelConfig(dissipator="cl", kappa=0.4, cl_energy_rate=False).effective_kappa == 0.4


# -- Hamiltonians -----------------------------------------------------------------


def test_jc_uncoupled_is_diagonal():
    h = build_h_jc(1.3, 0.0, 4)
    expected = np.concatenate([0.65 + np.arange(5), -0.65 + np.arange(5)])
    np.testing.assert_allclose(h, np.diag(expected), atol=0)


def test_jc_matrix_element():
    dims = HilbertDims(4)
    h = build_h_jc(1.0, 0.17, 4)
    assert h[dims.index(0, 0), dims.index(1, 1)] == pytest.approx(0.17)
    np.testing.assert_array_equal(h, h.conj().T)


def test_jc_resonant_single_excitation_block():
    dims = HilbertDims(3)
    g = 0.1
    h = build_h_jc(1.0, g, 3)
    idx = [dims.index(0, 0), dims.index(1, 1)]
    block = h[np.ix_(idx, idx)]
    np.testing.assert_allclose(np.linalg.eigvalsh(block), [0.5 - g, 0.5 + g], atol=1e-15)


def test_jc_conserves_excitations():
    np.testing.assert_allclose(commutator(build_h_jc(1.07, 0.3, 6), excitation_number(6)), 0, atol=1e-14)


def test_dephasing_hamiltonian():
    dims = HilbertDims(4)
    np.testing.assert_array_equal(build_h_dephasing(1.2, 0.0, 4), build_h_jc(1.2, 0.0, 4))
    h = build_h_dephasing(1.2, 0.3, 4)
    np.testing.assert_allclose(commutator(h, kron(SIGMA_Z, np.eye(5))), 0, atol=1e-15)
    assert h[dims.index(0, 0), dims.index(0, 1)] == pytest.approx(0.3 / math.sqrt(2))
    assert h[dims.index(1, 0), dims.index(1, 1)] == pytest.approx(-0.3 / math.sqrt(2))


# -- dissipators ----------------------------------------------------------------


def test_qo_vacuum_is_dark():
    vac = thermal_state(0.0, 5)
    np.testing.assert_array_equal(dissipator_qo(kron(RHO_A, vac), 0.0), 0)


def test_qo_detailed_balance():
    rho = kron(RHO_A, thermal_state(1.0, 40))
    assert np.max(np.abs(dissipator_qo(rho, 1.0))) <= 1e-10


@pytest.mark.parametrize("fn", [dissipator_qo, dissipator_cl])
def test_trace_annihilation_away_from_edge(fn, rng):
    n_max = 6
    dims = HilbertDims(n_max)
    support = [dims.index(q, n) for q in (0, 1) for n in range(n_max - 1)]
    rho = random_state(dims.total, rng, support)
    assert abs(np.trace(fn(rho, 1.3))) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([dissipator_qo, dissipator_cl]), st.integers(1, 6), st.floats(0.0, 3.0),
       st.integers(0, 2**32 - 1))
def test_trace_annihilation_with_full_support(fn, n_max, nbar, seed):
    # both forms stay traceless on the truncated space, the top level included
    rho = random_state(2 * (n_max + 1), np.random.default_rng(seed))
    assert abs(np.trace(fn(rho, nbar))) <= 1e-12


def test_cl_hermitian(rng):
    rho = random_hermitian(12, rng)
    out = dissipator_cl(rho, 0.7)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)


@pytest.mark.parametrize("nbar", [0.0, 1.0, 3.0])
def test_cl_fixes_bath_thermal_state(nbar):
    rho = kron(RHO_A, thermal_state(nbar, 40))
    assert np.max(np.abs(dissipator_cl(rho, nbar))) <= 1e-12


def test_cl_moves_other_thermal_states():
    rho = kron(RHO_A, thermal_state(3.0, 40))
    assert np.max(np.abs(dissipator_cl(rho, 1.0))) > 1e-2


@pytest.mark.parametrize("nbar", [0.0, 0.4, 1.0, 3.0])
def test_dh_fixed_point(nbar):
    rho = kron(RHO_A, thermal_state(nbar, 20))
    assert np.max(np.abs(dissipator_dh(rho, nbar))) <= 1e-14


def test_dh_traceless_and_impartial(rng):
    dims = HilbertDims(5)
    sigma = random_state(6, rng)
    for rho in (random_state(12, rng), kron(RHO_A, sigma)):
        out = dissipator_dh(rho, 0.8, dims)
        assert abs(np.trace(out)) <= 1e-14
    np.testing.assert_allclose(partial_trace_env(dissipator_dh(kron(RHO_A, sigma), 0.8, dims), dims), 0, atol=1e-14)


def test_dh_uncoupled_rate():
    # coherence of a displaced state decays toward the diagonal thermal state at rate kappa
    kappa, n_max = 0.1, 20
    cfg = ModelConfig(g=0.0, delta=1.0, kappa=kappa, nbar=0.5, n_max=n_max, dissipator=Dissipator.DH,
                      dh_half_rate=False)
    alpha = 0.8
    n = np.arange(n_max + 1)
    amp = np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / np.sqrt([math.factorial(k) for k in n])
    osc = np.outer(amp, amp) / np.sum(amp ** 2)
    ground = np.diag([0.0, 1.0])
    spec = IntegratorSpec.uniform(40.0, 81)
    traj = integrate(kron(ground, osc), cfg, spec)
    dims = cfg.dims
    moduli = np.array([abs(s[dims.index(1, 0), dims.index(1, 1)]) for s in traj.states])
    (a, rate), _ = curve_fit(lambda t, a, r: a * np.exp(-r * t), spec.t_grid, moduli, p0=(moduli[0], kappa))
    assert rate == pytest.approx(kappa, rel=0.01)


# -- right-hand side ----------------------------------------------------------


@pytest.mark.parametrize("coupling,dissipator", ALL)
def test_fast_rhs_matches_dense(coupling, dissipator, rng):
    cfg = _cfg(coupling, dissipator)
    rho = random_hermitian(cfg.dims.total, rng)
    np.testing.assert_allclose(rhs(rho, cfg), rhs_dense(rho, cfg), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    st.sampled_from(ALL),
    st.floats(0.5, 1.5), st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.floats(0.0, 3.0), st.integers(1, 6),
    st.integers(0, 2**32 - 1),
)
def test_rhs_properties(pair, delta, g, kappa, nbar, n_max, seed):
    cfg = ModelConfig(coupling=pair[0], dissipator=pair[1], delta=delta, g=g, kappa=kappa, nbar=nbar,
                      n_max=n_max)
    rng = np.random.default_rng(seed)
    dims = cfg.dims
    rho = random_hermitian(dims.total, rng)
    out = rhs(rho, cfg)
    np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
    np.testing.assert_allclose(out, rhs_dense(rho, cfg), atol=1e-11)
    if cfg.dissipator is Dissipator.DH or n_max >= 3:
        support = None if cfg.dissipator is Dissipator.DH else \
            [dims.index(q, n) for q in (0, 1) for n in range(n_max - 1)]
        state = random_state(dims.total, rng, support)
        assert abs(np.trace(rhs(state, cfg))) <= 1e-12


def test_rhs_stationary_thermal_product():
    cfg = _cfg(g=0.0, n_max=40)
    rho = kron(np.diag([0.3, 0.7]), thermal_state(1.0, 40))
    assert np.max(np.abs(rhs(rho, cfg))) <= 1e-10


def test_free_qubit_precession():
    delta = 1.3
    cfg = _cfg(g=0.0, kappa=0.0, delta=delta, n_max=3)
    rho0 = kron(np.full((2, 2), 0.5), thermal_state(0.0, 3))
    spec = IntegratorSpec.uniform(5.0, 11)
    traj = integrate(rho0, cfg, spec)
    dims = cfg.dims
    rho01 = np.array([partial_trace_env(s, dims)[0, 1] for s in traj.states])
    np.testing.assert_allclose(rho01, 0.5 * np.exp(-1j * delta * spec.t_grid), atol=1e-8)


# -- Liouvillian ------------------------------------------------------------------


def test_vec_is_column_stacking():
    m = np.arange(4).reshape(2, 2)
    np.testing.assert_array_equal(vec(m), [0, 2, 1, 3])
    np.testing.assert_array_equal(unvec(vec(m), 2), m)


@pytest.mark.parametrize("coupling,dissipator", ALL)
def test_liouvillian_consistency(coupling, dissipator, rng):
    cfg = _cfg(coupling, dissipator, n_max=3)
    L = liouvillian_matrix(cfg)
    for _ in range(10):
        rho = random_hermitian(cfg.dims.total, rng)
        assert np.max(np.abs(L.matrix @ vec(rho) - vec(rhs(rho, cfg)))) <= 1e-12


def test_liouvillian_on_matrix_units():
    cfg = _cfg(Coupling.JC, Dissipator.CL, n_max=2)
    L = liouvillian_matrix(cfg)
    d = cfg.dims.total
    for k in range(d * d):
        e = np.zeros(d * d, dtype=complex)
        e[k] = 1
        np.testing.assert_allclose(L.apply(unvec(e, d)), rhs(unvec(e, d), cfg), atol=1e-13)


def test_closed_system_spectrum_is_imaginary():
    cfg = _cfg(kappa=0.0, n_max=2)
    eig = np.linalg.eigvals(liouvillian_matrix(cfg).matrix)
    assert np.max(np.abs(eig.real)) <= 1e-12


def test_qo_null_space():
    cfg = _cfg(g=0.0, n_max=3)
    L = liouvillian_matrix(cfg).matrix
    s = np.linalg.svd(L, compute_uv=False)
    assert np.sum(s < 1e-10) == 2
    stationary = kron(np.eye(2) / 2, thermal_state(cfg.nbar, 3))
    assert np.max(np.abs(L @ vec(stationary))) <= 1e-12


def test_liouvillian_cap():
    with pytest.raises(ValueError, match="cap"):
        liouvillian_matrix(_cfg(n_max=20))
