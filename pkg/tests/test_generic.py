import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qgflow.errors import ConstructionError, DomainError, ShapeError
from qgflow.generic import (CoupledState, DampedSystem, MacroSpace, jacobi_check, nic_check, pairing,
                            slack_generic)
from qgflow.lindblad import eigenpair, eigenpair_basis, spectral_decompose
from qgflow.rng import SplitMix64
from qgflow.scenarios import (SIGMA_PLUS, HeatBathParams, IsothermalParams, MaxwellBlochParams,
                              QuantumDotParams, build_damped_qs, build_heat_baths, build_isothermal,
                              build_maxwell_bloch_uniform, build_quantum_dot, maxwell_gamma,
                              quantum_dot_closed_form, quantum_dot_state)
from qgflow.states import thermal_state

from conftest import random_density_np

seeds = st.integers(0, 2**32 - 1)
H3 = np.diag([0.0, 1.0, 2.5]).astype(complex)


def pair_at(H, omega, index=0):
    return eigenpair_basis(spectral_decompose(H), omega)[index]


def heat_baths(exchange=0.2):
    hp = HeatBathParams([2.0, 3.0], [pair_at(H3, 1.0), pair_at(H3, 1.5)], [1.0, 0.5], exchange)
    return build_heat_baths(H3, hp)


def isothermal(with_gamma=True):
    gen = np.random.default_rng(4)
    gamma = None
    if with_gamma:
        # diagonal Gamma commutes with the diagonal H, so the system stays consistent
        gamma = np.array([np.diag(gen.normal(size=3)) for _ in range(2)]).astype(complex)
    J = np.array([[0.0, 0.7], [-0.7, 0.0]])
    K = np.array([[0.3, 0.1], [0.1, 0.2]])
    ip = IsothermalParams(1.3, [1.0, 2.0], [pair_at(H3, 1.0), pair_at(H3, 2.5)],
                          [[0.2, -0.1], [0.0, 0.4]], [1.0, 0.7], J, K, gamma)
    return build_isothermal(H3, ip)


def maxwell():
    H = np.diag([0.0, 1.0, 1.8]).astype(complex)
    pol = np.array([[0.1, 0.0, 0.3], [0.4, -0.2, 0.0], [0.0, 0.5, 0.1]])
    mp = MaxwellBlochParams(0.9, pol, [pair_at(H, 1.0), pair_at(H, 1.8)], [1.0, 0.4])
    return build_maxwell_bloch_uniform(H, mp)


def random_state(gen, sys, positive=False):
    rho = random_density_np(gen, sys.dim)
    z = gen.uniform(0.5, 2.0, sys.dim_z) if positive else gen.normal(size=sys.dim_z)
    return CoupledState(rho, z)


@given(seeds)
def test_heat_bath_dual_forms_and_conservation(seed):
    gen = np.random.default_rng(seed)
    sys = heat_baths()
    q = random_state(gen, sys, positive=True)
    lin = sys.vector_field(q)
    op = sys.vector_field_operator_form(q)
    assert (lin - op).norm() <= 1e-10 * max(1.0, lin.norm())
    # energy is conserved and entropy grows at the rate 2 P*
    assert abs(pairing(sys.dE(q), lin)) < 1e-11
    ds_rate = pairing(sys.dS(q), lin)
    assert ds_rate == pytest.approx(sys.entropy_production(q), rel=1e-9, abs=1e-12)
    assert ds_rate >= -1e-12
    rep = nic_check(sys, q)
    assert rep.passed


def test_heat_bath_equilibrium_is_stationary():
    sys = heat_baths()
    theta = 0.8
    rho = thermal_state(H3, 1.0 / theta).rho_hat.rho
    q = CoupledState(rho, [theta, theta])
    assert sys.vector_field(q).norm() < 1e-13
    assert sys.entropy_production(q) < 1e-13


def test_heat_bath_structure_report_and_jacobi():
    sys = heat_baths()
    rep = sys.structure_report(np.array([0.7, 1.3]))
    assert rep["b_normalization"] < 1e-15
    assert rep["K_ma_dE"] < 1e-15
    assert rep["K_ma_min_eig"] >= -1e-15
    q = random_state(np.random.default_rng(0), sys, positive=True)
    jr = jacobi_check(sys, q, trials=3, rng=SplitMix64(1))
    assert jr.passed
    assert not sys.in_domain(CoupledState(q.rho, [1.0, -0.1]))


def test_heat_bath_validation():
    with pytest.raises(DomainError):
        build_heat_baths(H3, HeatBathParams([1.0, -1.0], [pair_at(H3, 1.0)] * 2))
    with pytest.raises(ShapeError):
        build_heat_baths(H3, HeatBathParams([1.0, 1.0], [pair_at(H3, 1.0)]))


@pytest.mark.parametrize("build", [isothermal, lambda: isothermal(False), maxwell])
def test_damped_dual_forms_and_lyapunov(build):
    sys = build()
    gen = np.random.default_rng(7)
    for _ in range(10):
        q = random_state(gen, sys)
        lin = sys.vector_field(q)
        op = sys.vector_field_operator_form(q)
        assert (lin - op).norm() <= 1e-10 * max(1.0, lin.norm())
        rate = pairing(sys.dF(q), lin)
        assert rate == pytest.approx(-sys.dissipation_rate(q), rel=1e-9, abs=1e-12)
        assert rate <= 1e-12


@pytest.mark.parametrize("build", [isothermal, maxwell,
                                   lambda: build_quantum_dot(QuantumDotParams(w_b=2.0))])
def test_slack_extension_is_generic(build):
    sys = slack_generic(build(), theta_star=1.0)
    gen = np.random.default_rng(3)
    q = sys.augment(random_state(gen, sys.damped, positive=True), 0.25)
    assert nic_check(sys, q).passed
    assert jacobi_check(sys, q, trials=2, rng=SplitMix64(2)).passed
    lin = sys.vector_field(q)
    op = sys.vector_field_operator_form(q)
    assert (lin - op).norm() <= 1e-10 * max(1.0, lin.norm())
    assert abs(pairing(sys.dE(q), lin)) < 1e-11


def test_nic_rejects_damped_systems():
    with pytest.raises(TypeError):
        nic_check(isothermal(), CoupledState(np.eye(3) / 3, [0.0, 0.0]))


@given(seeds, st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_quantum_dot_closed_form(seed, w_f, w_b):
    gen = np.random.default_rng(seed)
    params = QuantumDotParams(eps1=0.2, eps2=1.1, beta_star=0.8, kappa_hat=1.4, w_f=w_f, w_b=w_b)
    sys = build_quantum_dot(params)
    q = quantum_dot_state(random_density_np(gen, 2), *gen.uniform(0.1, 3.0, 2))
    lin = sys.vector_field(q)
    ref = quantum_dot_closed_form(params, q)
    assert (lin - ref).norm() <= 1e-12 * max(1.0, ref.norm())
    assert (sys.vector_field_operator_form(q) - ref).norm() <= 1e-10 * max(1.0, ref.norm())
    # carriers are exchanged, never created
    assert abs(lin.z.sum()) < 1e-13


def test_quantum_dot_validation():
    with pytest.raises(DomainError):
        build_quantum_dot(QuantumDotParams(eps1=1.0, eps2=0.5))
    with pytest.raises(DomainError):
        quantum_dot_state(np.eye(2) / 2, 1.0, 0.0)
    sys = build_quantum_dot(QuantumDotParams())
    assert not sys.in_domain(CoupledState(np.eye(2) / 2, [1.0, -1.0]))


def test_maxwell_condition_and_gamma_zero_reduction():
    H = np.diag([0.0, 1.0, 1.8]).astype(complex)
    pairs = [pair_at(H, 1.0), pair_at(H, 1.8)]
    zero = build_maxwell_bloch_uniform(H, MaxwellBlochParams(0.9, np.zeros((3, 3)), pairs, [1.0, 0.4]))
    ref = build_damped_qs(H, 0.9, pairs, [1.0, 0.4])
    gen = np.random.default_rng(1)
    for _ in range(5):
        rho = random_density_np(gen, 3)
        q = CoupledState(rho, gen.normal(size=6))
        v = zero.vector_field(q)
        np.testing.assert_allclose(v.rho, ref.vector_field(CoupledState(rho)).rho, atol=1e-13)
        np.testing.assert_allclose(v.z, np.zeros(6), atol=1e-13)


def test_maxwell_rejects_incompatible_coupling():
    # Q feeds two degenerate levels with different polarizations, so [Q, Gamma* E] is not a multiple of Q
    H = np.diag([0.0, 1.0, 1.0]).astype(complex)
    Q = np.zeros((3, 3), dtype=complex)
    Q[0, 1] = 1.0
    Q[0, 2] = 1.0
    pol = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    with pytest.raises(ConstructionError):
        build_maxwell_bloch_uniform(H, MaxwellBlochParams(1.0, pol, [eigenpair(Q, H, 1.0)]))
    with pytest.raises(ShapeError):
        maxwell_gamma(H, np.zeros((2, 3)))


def test_damped_system_validation():
    with pytest.raises(ConstructionError):
        DampedSystem(H3, 0.0)
    with pytest.raises(ConstructionError):
        DampedSystem(np.array([[0, 1], [0, 0]]), 1.0)
    with pytest.raises(ConstructionError):
        DampedSystem(H3, 1.0, MacroSpace(2), J_ma=np.eye(2))
    with pytest.raises(ShapeError):
        DampedSystem(H3, 1.0, MacroSpace(2), gamma=np.zeros((1, 3, 3)))
    with pytest.raises(ConstructionError):
        slack_generic(isothermal(), theta_star=0.0)


def test_damped_qs_stationary_at_thermal_state():
    pairs = [pair_at(H3, 1.0), pair_at(H3, 2.5)]
    sys = build_damped_qs(H3, 1.7, pairs, [0.5, 2.0])
    rho = thermal_state(H3, 1.7).rho_hat.rho
    assert sys.vector_field(CoupledState(rho)).norm() < 1e-13
    assert sys.dissipation_rate(CoupledState(rho)) < 1e-13
    assert math.isclose(sys.beta_tilde(sys.couplings[0], np.zeros(0)), 1.7)
    assert eigenpair(SIGMA_PLUS, np.diag([0.0, 1.0])).omega == 1.0
