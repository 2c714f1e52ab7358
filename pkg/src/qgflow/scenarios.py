"""Concrete generators and coupled systems used by the CLI, the scripts and the tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConstructionError, DomainError, ShapeError
from .generic import (CoupledState, Coupling, DampedSystem, GenericSystem, MacroFunctional,
                      MacroSpace, constant_coupling, field_condition_residual, field_sensitivity)
from .lindblad import (EigenpairQ, Superoperator, eigenpair, hamiltonian_superoperator, make_MQ,
                       make_SW, spectral_decompose, eigenpair_basis, sum_superoperators)
from .linalg import hermitian_eigen
from .states import ThermalState, energy, relative_entropy, thermal_state, von_neumann_entropy

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
SIGMA_PLUS = 0.5 * (PAULI[0] + 1j * PAULI[1])  # |1><2|


# ---------------------------------------------------------------------------
# plain Lindblad flows
# ---------------------------------------------------------------------------


class LindbladFlow:
    """rho' = i[rho, H] + L rho for a fixed dissipative generator L."""

    name = "lindblad"

    def __init__(self, H, L: Superoperator, beta: float | None = None, hamiltonian: bool = True):
        self.H = np.asarray(H, dtype=complex)
        self.L = L
        self.ts: ThermalState | None = thermal_state(self.H, beta) if beta is not None else None
        gen = L + hamiltonian_superoperator(self.H) if hamiltonian else L
        # assembled once: one matvec per stage instead of re-walking the block sum
        self.generator = Superoperator.from_matrix(gen.matrix)
        self.dim_z = 0

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def vector_field(self, q: CoupledState) -> CoupledState:
        return CoupledState(self.generator(q.rho), q.z)

    def in_domain(self, q: CoupledState) -> bool:
        return True

    def monitors(self, q: CoupledState, eigen=None):
        f = relative_entropy(q.rho, self.ts, eigen) if self.ts is not None else math.nan
        return energy(q.rho, self.H), von_neumann_entropy(q.rho, eigen), f


def bloch_generator(gamma: float, delta: float, eps=(0.0, 1.0), beta: float = 1.0):
    """Detailed-balance two-level dissipator with longitudinal rate 2 gamma.

    Transition weights are normalized, ``w_j = 2 e^{-beta eps_j} / Z``, so that
    ``T1 = 1/(2 gamma)`` and ``T2 = 1/(gamma + 2 delta)`` hold for every beta.
    Returns ``(H, L)``.
    """
    if gamma < 0 or delta < 0:
        raise DomainError("Bloch rates must be nonnegative")
    e1, e2 = float(eps[0]), float(eps[1])
    if e1 == e2:
        raise DomainError("the two levels must differ in energy")
    H = np.diag([e1, e2]).astype(complex)
    ts = thermal_state(H, beta)
    # populations of levels 1 and 2 (thermal_state sorts ascending)
    p1 = math.exp(-beta * e1 - ts.log_Z)
    p2 = math.exp(-beta * e2 - ts.log_Z)
    w1, w2 = 2.0 * p1, 2.0 * p2
    Qp = eigenpair(SIGMA_PLUS, H)
    # gamma/2 (w1 N_{s+} + w2 N_{s-}) = gamma sqrt(w1 w2)/2 M_{beta,s+}
    scale = 0.5 * gamma * math.sqrt(w1 * w2)
    parts = [make_MQ(beta, Qp, H) * scale]
    if delta:
        parts.append(make_SW(PAULI[2], H) * (0.5 * delta))
    return H, sum_superoperators(parts, 2)


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return np.array([float(np.real(np.trace(rho @ s))) for s in PAULI])


def bloch_state(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (np.eye(2) + sum(ai * s for ai, s in zip(a, PAULI)))


def four_level(beta: float):
    """H = diag(1, 2, 9, 10) with the degenerate coupling Q = |1><2| + |3><4| at omega = 1.

    Returns ``(H, pair, L)`` with ``L = M_{beta,Q}``.
    """
    H = np.diag([1.0, 2.0, 9.0, 10.0]).astype(complex)
    Q = np.zeros((4, 4), dtype=complex)
    Q[0, 1] = 1.0
    Q[2, 3] = 1.0
    pair = eigenpair(Q, H, 1.0)
    return H, pair, make_MQ(beta, pair, H)


def four_level_expected_rates(beta: float) -> np.ndarray:
    """Dense 16 x 16 matrix of the displayed coordinate ODE for the four-level example."""
    n = 4
    up, down = math.exp(beta / 2), math.exp(-beta / 2)
    m = np.zeros((n * n, n * n))

    def idx(k, l):
        return k * n + l

    for (a, b) in ((0, 1), (2, 3)):
        m[idx(a, a), idx(a, a)] = -down
        m[idx(a, a), idx(b, b)] = up
        m[idx(b, b), idx(a, a)] = down
        m[idx(b, b), idx(b, b)] = -up
    for (x, y) in ((0, 2), (2, 0)):
        u, v = (x + 1, y + 1)  # (1,3) -> (2,4) and (3,1) -> (4,2)
        m[idx(x, y), idx(x, y)] = -down
        m[idx(x, y), idx(u, v)] = up
        m[idx(u, v), idx(x, y)] = down
        m[idx(u, v), idx(u, v)] = -up
    coupled = {(0, 2), (2, 0), (1, 3), (3, 1)}
    for k in range(n):
        for l in range(n):
            if k != l and (k, l) not in coupled:
                m[idx(k, l), idx(k, l)] = -math.cosh(beta / 2)
    return m


# ---------------------------------------------------------------------------
# damped quantum system
# ---------------------------------------------------------------------------


def build_damped_qs(H, beta: float, pairs: Sequence[EigenpairQ], kappas=None) -> DampedSystem:
    """rho' = i[rho, H] + sum_c kappa_c M_{beta,Q_c} rho as a damped Hamiltonian system."""
    kappas = [1.0] * len(pairs) if kappas is None else list(kappas)
    if len(kappas) != len(pairs):
        raise ShapeError("one rate per coupling")
    couplings = [constant_coupling(p, np.zeros(0), k) for p, k in zip(pairs, kappas)]
    return DampedSystem(H, beta, couplings=couplings, name="damped_qs")


# ---------------------------------------------------------------------------
# heat baths
# ---------------------------------------------------------------------------


@dataclass
class HeatBathParams:
    capacities: Sequence[float]
    pairs: Sequence[EigenpairQ]
    kappas: Sequence[float] | None = None
    exchange: float = 0.0  # strength of the direct bath-bath conduction K_ma
    k_B: float = 1.0


def _conduction_matrix(c, strength):
    # sum over bath pairs of v v^T with v = e_m/c_m - e_n/c_n, so K_ma (c_m) = 0
    M = len(c)
    K = np.zeros((M, M))
    for m in range(M):
        for n in range(m + 1, M):
            v = np.zeros(M)
            v[m] = 1.0 / c[m]
            v[n] = -1.0 / c[n]
            K += strength * np.outer(v, v)
    return K


def build_heat_baths(H, params: HeatBathParams) -> GenericSystem:
    """Quantum system between M finite heat baths with temperatures theta_m."""
    c = np.asarray(params.capacities, dtype=float)
    M = c.size
    if np.any(c <= 0):
        raise DomainError("heat capacities must be positive")
    if len(params.pairs) != M:
        raise ShapeError("one coupling per heat bath")
    kappas = [1.0] * M if params.kappas is None else list(params.kappas)
    if params.exchange < 0:
        raise DomainError("exchange strength must be nonnegative")
    energy_z = MacroFunctional(lambda th: float(np.dot(c, th)), lambda th: c.copy())

    def s_value(th):
        if np.any(th <= 0):
            raise DomainError("temperatures must stay positive")
        return float(np.dot(c, np.log(th)))

    entropy_z = MacroFunctional(s_value, lambda th: c / th)
    couplings = []
    for m, (pair, k) in enumerate(zip(params.pairs, kappas)):
        b = np.zeros(M)
        b[m] = 1.0 / c[m]
        couplings.append(constant_coupling(pair, b, k))
    return GenericSystem(H, MacroSpace(M, tuple(f"theta_{m + 1}" for m in range(M))), energy_z,
                         entropy_z, couplings, K_ma=_conduction_matrix(c, params.exchange),
                         k_B=params.k_B, domain=lambda th: bool(np.all(th > 0)), name="heat_baths")


# ---------------------------------------------------------------------------
# isothermal coupling to a harmonic macroscopic variable
# ---------------------------------------------------------------------------


@dataclass
class IsothermalParams:
    beta_star: float
    stiffness: Sequence[float]  # F_z(z) = 1/2 sum k_i z_i^2
    pairs: Sequence[EigenpairQ]
    directions: Sequence[Sequence[float]]  # a_c
    kappas: Sequence[float] | None = None
    J_ma: np.ndarray | None = None
    K_ma: np.ndarray | None = None
    gamma: np.ndarray | None = None


def build_isothermal(H, params: IsothermalParams) -> DampedSystem:
    k = np.asarray(params.stiffness, dtype=float)
    d = k.size
    if np.any(k <= 0):
        raise DomainError("stiffness must be positive")
    if len(params.directions) != len(params.pairs):
        raise ShapeError("one direction vector per coupling")
    kappas = [1.0] * len(params.pairs) if params.kappas is None else list(params.kappas)
    free_z = MacroFunctional(lambda z: 0.5 * float(np.dot(k, z * z)), lambda z: k * z)
    couplings = [constant_coupling(p, np.asarray(a, float), kk)
                 for p, a, kk in zip(params.pairs, params.directions, kappas)]
    for c in couplings:
        if c.direction(np.zeros(d)).shape != (d,):
            raise ShapeError("direction vectors must have length dim_z")
    if params.K_ma is not None:
        km = np.asarray(params.K_ma, dtype=float)
        if np.max(np.abs(km - km.T)) > 1e-13 or np.min(np.linalg.eigvalsh(km)) < -1e-12:
            raise ConstructionError("K_ma must be symmetric positive semidefinite")
    return DampedSystem(H, params.beta_star, MacroSpace(d), free_z, couplings, J_ma=params.J_ma,
                        K_ma=params.K_ma, gamma=params.gamma, name="isothermal")


# ---------------------------------------------------------------------------
# quantum dot with free and bound carriers
# ---------------------------------------------------------------------------


@dataclass
class QuantumDotParams:
    eps1: float = 0.0
    eps2: float = 1.0
    beta_star: float = 1.0
    kappa_hat: float = 1.0
    w_f: float = 1.0
    w_b: float = 1.0


def _check_densities(c):
    if np.any(np.asarray(c) <= 0):
        raise DomainError(f"carrier densities must be positive, got {np.asarray(c).tolist()}")


def build_quantum_dot(params: QuantumDotParams) -> DampedSystem:
    """Two-level dot exchanging carriers with a reservoir, z = (c_f, c_b)."""
    p = params
    if not p.eps2 > p.eps1:
        raise DomainError("need eps2 > eps1")
    if p.w_f <= 0 or p.w_b <= 0 or p.kappa_hat < 0:
        raise DomainError("equilibrium densities must be positive and kappa_hat nonnegative")
    omega = p.eps2 - p.eps1
    H = np.diag([p.eps1, p.eps2]).astype(complex)
    pair = eigenpair(SIGMA_PLUS, H, omega)
    w = np.array([p.w_f, p.w_b])

    def f_value(c):
        _check_densities(c)
        return float(np.sum(c * (np.log(c / w) - 1.0)))

    def f_grad(c):
        _check_densities(c)
        return np.log(c / w)

    def kappa(c):
        _check_densities(c)
        return p.kappa_hat * math.sqrt(c[0] * c[1] / (p.w_f * p.w_b))

    a = np.array([-1.0, 1.0]) / omega
    coupling = Coupling(pair, lambda c: a, kappa)
    return DampedSystem(H, p.beta_star, MacroSpace(2, ("c_f", "c_b")), MacroFunctional(f_value, f_grad),
                        [coupling], domain=lambda c: bool(np.all(c > 0)), name="quantum_dot")


def quantum_dot_state(rho, c_f: float, c_b: float) -> CoupledState:
    _check_densities([c_f, c_b])
    return CoupledState(rho, np.array([c_f, c_b], dtype=float))


def quantum_dot_closed_form(params: QuantumDotParams, q: CoupledState) -> CoupledState:
    """Capture-escape equations written out with the square roots cancelled."""
    p = params
    rho = q.rho
    c_f, c_b = q.z
    _check_densities(q.z)
    H = np.diag([p.eps1, p.eps2]).astype(complex)
    Q = SIGMA_PLUS
    Qd = Q.conj().T
    kt = p.kappa_hat * math.exp(p.beta_star * (p.eps1 + p.eps2) / 2)
    up = (c_b / p.w_b) * math.exp(-p.beta_star * p.eps1)
    down = (c_f / p.w_f) * math.exp(-p.beta_star * p.eps2)

    def N(X, A):
        return (X @ A @ X.conj().T - A @ X.conj().T @ X) + (X @ A @ X.conj().T - X.conj().T @ X @ A)

    drho = 1j * (rho @ H - H @ rho) + kt * (up * N(Q, rho) + down * N(Qd, rho))
    flux = 2.0 * kt * (down * rho[0, 0].real - up * rho[1, 1].real)
    return CoupledState(drho, flux * np.array([-1.0, 1.0]))


# ---------------------------------------------------------------------------
# spatially uniform Maxwell-Bloch reduction
# ---------------------------------------------------------------------------


@dataclass
class MaxwellBlochParams:
    beta: float
    polarization: np.ndarray  # N x 3, vector b_n for the n-th eigenvector of H_B
    pairs: Sequence[EigenpairQ]
    kappas: Sequence[float] | None = None
    samples: int = 8
    seed: int = 0
    tol: float = 1e-10


def maxwell_gamma(H_B, polarization) -> np.ndarray:
    """G_k = sum_n (b_n)_k h_n h_n* for the E components, zero for the H components."""
    eig = hermitian_eigen(np.asarray(H_B, dtype=complex))
    b = np.asarray(polarization, dtype=float)
    n = eig.dim
    if b.shape != (n, 3):
        raise ShapeError(f"polarization must be {n} x 3")
    U = eig.eigenvectors
    proj = [np.outer(U[:, j], U[:, j].conj()) for j in range(n)]
    G = np.zeros((6, n, n), dtype=complex)
    for k in range(3):
        G[k] = sum(b[j, k] * proj[j] for j in range(n))
    return G


def build_maxwell_bloch_uniform(H_B, params: MaxwellBlochParams) -> DampedSystem:
    """Uniform fields (E, H) coupled through a diagonal polarization operator.

    Curl terms vanish for uniform fields, so J_ma = 0 and H stays constant.
    The field condition ``[Q_c, Gamma* E] = omega_c (g_c . E) Q_c`` is
    verified on random fields; a violation raises ConstructionError.
    """
    from .rng import SplitMix64

    p = params
    gamma = maxwell_gamma(H_B, p.polarization)
    kappas = [1.0] * len(p.pairs) if p.kappas is None else list(p.kappas)
    rng = SplitMix64(p.seed)
    couplings = []
    beta = float(p.beta)
    for pair, k in zip(p.pairs, kappas):
        g = field_sensitivity(pair, gamma)
        scale = max(1.0, float(np.linalg.norm(pair.Q)))
        for _ in range(p.samples):
            zeta = rng.normals((6,))
            res = field_condition_residual(pair, gamma, g, zeta)
            if res > p.tol * scale * max(1.0, float(np.linalg.norm(zeta))):
                raise ConstructionError(
                    f"field condition violated for omega = {pair.omega:.6g}: residual {res:.3e}")
        couplings.append(constant_coupling(pair, np.zeros(6), k, g))
    # F_z = beta (|E|^2 + |H|^2) / 2 keeps F dimensionless
    free_z = MacroFunctional(lambda z: 0.5 * beta * float(np.dot(z, z)), lambda z: beta * z)
    labels = ("E_x", "E_y", "E_z", "H_x", "H_y", "H_z")
    return DampedSystem(H_B, beta, MacroSpace(6, labels), free_z, couplings, gamma=gamma,
                        transport=True, name="maxwell_bloch_uniform")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def auto_pairs(H, omega: float) -> list:
    """Elementary eigenpairs at a given energy difference."""
    sd = spectral_decompose(np.asarray(H, dtype=complex))
    return eigenpair_basis(sd, omega)
