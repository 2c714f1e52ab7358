"""Quantum systems coupled to macroscopic variables z.

Two flavours share the same building blocks:

* ``GenericSystem``: closed system with total energy ``Tr(rho H) + E(z)`` and
  entropy ``-k_B Tr(rho log rho) + S(z)``, evolving by ``J DE + K DS``.
* ``DampedSystem``: isothermal system driven by the dimensionless free energy
  ``F = Tr(rho log rho) + beta_* Tr(rho H) + F_z(z)`` via ``(J - K) DF``.

Both are evaluated in two ways: through the Poisson and Onsager operators
(nonlinear in rho through log rho and the tilted Kubo-Mori operators) and
through the equivalent Lindblad form, which is linear in rho.  Agreement of
the two is the system-level consequence of the gradient identity.

Pairings: Hermitian matrices use Re Tr(A B), macro vectors the dot product.
The coupling map ``Gamma`` is stored as Hermitian matrices ``G_k`` with
``(Gamma A)_k = Re Tr(G_k A)`` and ``Gamma* zeta = sum_k zeta_k G_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, DomainError, ShapeError
from .lindblad import EigenpairQ, dissipator
from .linalg import dag, hermitian_eigen
from .onsager import apply_K, dissipation_potential, hermitian_basis, onsager_simple
from .states import energy as quantum_energy
from .states import floored_eigen, von_neumann_entropy

# ---------------------------------------------------------------------------
# state algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoupledState:
    """A point (rho, z), or a tangent/cotangent vector of the same shape."""

    rho: np.ndarray
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=complex))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float).reshape(-1))

    def __add__(self, other):
        return CoupledState(self.rho + other.rho, self.z + other.z)

    def __sub__(self, other):
        return CoupledState(self.rho - other.rho, self.z - other.z)

    def __mul__(self, c):
        return CoupledState(c * self.rho, c * self.z)

    __rmul__ = __mul__

    def __neg__(self):
        return CoupledState(-self.rho, -self.z)

    def norm(self) -> float:
        return math.sqrt(float(np.linalg.norm(self.rho)) ** 2 + float(np.dot(self.z, self.z)))


def pairing(a: CoupledState, b: CoupledState) -> float:
    return float(np.real(np.vdot(a.rho, b.rho))) + float(np.dot(a.z, b.z))


@dataclass(frozen=True)
class MacroSpace:
    dim_z: int
    labels: tuple = ()

    def __post_init__(self):
        if self.dim_z < 0:
            raise ShapeError("dim_z must be nonnegative")
        if self.labels and len(self.labels) != self.dim_z:
            raise ShapeError("one label per macroscopic coordinate")


@dataclass(frozen=True, eq=False)
class MacroFunctional:
    """Scalar function of z with its analytic gradient."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


def zero_functional(dim_z: int) -> MacroFunctional:
    return MacroFunctional(lambda z: 0.0, lambda z: np.zeros(dim_z))


@dataclass(frozen=True, eq=False)
class Coupling:
    """Eigenpair coupling with a z-dependent direction and rate.

    ``direction`` is the vector b_c(z) of a GENERIC coupling or a_c(z) of an
    isothermal one.  ``g`` is the field sensitivity of a transport coupling,
    ``[Q, Gamma* zeta] = omega (g . zeta) Q``.
    """

    pair: EigenpairQ
    direction: Callable[[np.ndarray], np.ndarray]
    kappa: Callable[[np.ndarray], float]
    g: np.ndarray | None = None


def constant_coupling(pair: EigenpairQ, direction, kappa: float = 1.0, g=None) -> Coupling:
    d = np.asarray(direction, dtype=float).reshape(-1)
    k = float(kappa)
    if k < 0:
        raise DomainError("coupling rate must be nonnegative")
    return Coupling(pair, lambda z: d, lambda z: k, None if g is None else np.asarray(g, float))


def tilted_generator(beta: float, pair: EigenpairQ, rho):
    """M_{beta,Q} rho = e^{beta w/2} N_Q rho + e^{-beta w/2} N_{Q*} rho."""
    x = 0.5 * beta * pair.omega
    return math.exp(x) * dissipator(pair.Q, rho) + math.exp(-x) * dissipator(dag(pair.Q), rho)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


class _Coupled:
    """Common storage and linear maps of both system types."""

    def __init__(self, H, macro: MacroSpace, J_ma, K_ma, gamma, couplings, domain):
        self.H = np.asarray(H, dtype=complex)
        n = self.H.shape[0]
        if self.H.shape != (n, n):
            raise ShapeError("H must be square")
        if np.linalg.norm(self.H - dag(self.H)) > 1e-12 * max(1.0, float(np.linalg.norm(self.H))):
            raise ConstructionError("H is not Hermitian")
        self.macro = macro
        d = macro.dim_z
        self.J_ma = np.zeros((d, d)) if J_ma is None else np.asarray(J_ma, dtype=float)
        if self.J_ma.shape != (d, d):
            raise ShapeError("J_ma has the wrong shape")
        asym = float(np.max(np.abs(self.J_ma + self.J_ma.T))) if d else 0.0
        if asym > 1e-13:
            raise ConstructionError(f"J_ma is not antisymmetric: {asym:.3e}")
        if K_ma is None:
            self.K_ma = lambda z: np.zeros((d, d))
        elif callable(K_ma):
            self.K_ma = K_ma
        else:
            km = np.asarray(K_ma, dtype=float)
            self.K_ma = lambda z: km
        self.gamma = np.zeros((d, n, n), dtype=complex) if gamma is None else np.asarray(gamma, complex)
        if self.gamma.shape != (d, n, n):
            raise ShapeError(f"Gamma must have shape {(d, n, n)}")
        for g in self.gamma:
            if np.linalg.norm(g - dag(g)) > 1e-12:
                raise ConstructionError("Gamma matrices must be Hermitian")
        self.couplings = tuple(couplings)
        for c in self.couplings:
            if c.pair.Q.shape != (n, n):
                raise ShapeError("coupling operator does not match H")
        self.domain = domain

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def dim_z(self) -> int:
        return self.macro.dim_z

    def gamma_apply(self, A) -> np.ndarray:
        if not self.dim_z:
            return np.zeros(0)
        return np.real(np.einsum("kij,ji->k", self.gamma, A))

    def gamma_adjoint(self, zeta) -> np.ndarray:
        if not self.dim_z:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return np.einsum("k,kij->ij", np.asarray(zeta, dtype=float), self.gamma)

    def gamma_matrix(self) -> np.ndarray:
        """Dense dim_z x N^2 real matrix of Gamma in the Hermitian orthonormal basis."""
        basis = hermitian_basis(self.dim)
        return np.array([self.gamma_apply(b) for b in basis]).T

    def in_domain(self, q: CoupledState) -> bool:
        return True if self.domain is None else bool(self.domain(q.z))

    def _poisson(self, rho, xi: CoupledState, scale: float, with_macro: bool) -> CoupledState:
        """T diag(J_qs(rho), J_ma) T* applied to xi, with T(A, z) = (A, z - Gamma A)."""
        eff = xi.rho - self.gamma_adjoint(xi.z)
        drho = scale * 1j * (rho @ eff - eff @ rho)
        dz = -self.gamma_apply(drho)
        if with_macro and self.dim_z:
            dz = dz + scale * (self.J_ma @ xi.z)
        return CoupledState(drho, dz)

    def poisson_derivative(self, delta, xi: CoupledState) -> CoupledState:
        """Directional derivative of J(q) xi in rho along delta (J is affine in rho)."""
        return self._poisson(np.asarray(delta, dtype=complex), xi, self._j_scale, False)

    def apply_J(self, q: CoupledState, xi: CoupledState) -> CoupledState:
        return self._poisson(q.rho, xi, self._j_scale, True)

    _j_scale = 1.0


# ---------------------------------------------------------------------------
# GENERIC
# ---------------------------------------------------------------------------


class GenericSystem(_Coupled):
    """Quantum system exchanging energy with macroscopic variables under the NIC."""

    def __init__(self, H, macro: MacroSpace, energy_z: MacroFunctional, entropy_z: MacroFunctional,
                 couplings: Sequence[Coupling] = (), J_ma=None, K_ma=None, gamma=None,
                 k_B: float = 1.0, domain: Callable | None = None, name: str = "generic"):
        super().__init__(H, macro, J_ma, K_ma, gamma, couplings, domain)
        if not k_B > 0:
            raise ConstructionError("k_B must be positive")
        self.energy_z = energy_z
        self.entropy_z = entropy_z
        self.k_B = float(k_B)
        self.name = name

    # functionals ------------------------------------------------------------
    def energy(self, q: CoupledState) -> float:
        return quantum_energy(q.rho, self.H) + float(self.energy_z.value(q.z))

    def entropy(self, q: CoupledState, eigen=None) -> float:
        return self.k_B * von_neumann_entropy(q.rho, eigen) + float(self.entropy_z.value(q.z))

    def free_energy(self, q: CoupledState) -> float:
        return math.nan

    def dE(self, q: CoupledState) -> CoupledState:
        return CoupledState(self.H, self.energy_z.grad(q.z))

    def dS(self, q: CoupledState, eigen=None) -> CoupledState:
        fe = floored_eigen(q.rho, eigen)
        return CoupledState(-self.k_B * (fe.log() + np.eye(self.dim)), self.entropy_z.grad(q.z))

    def beta_hat(self, c: Coupling, z) -> float:
        return float(np.dot(self.entropy_z.grad(z), c.direction(z))) / self.k_B

    # operators --------------------------------------------------------------
    def apply_K(self, q: CoupledState, xi: CoupledState, eigen=None) -> CoupledState:
        z = q.z
        if eigen is None:
            eigen = hermitian_eigen(q.rho)
        drho = np.zeros_like(q.rho)
        dz = self.K_ma(z) @ xi.z if self.dim_z else np.zeros(0)
        for c in self.couplings:
            b = c.direction(z)
            nu = xi.rho - float(np.dot(xi.z, b)) * self.H
            k = c.kappa(z) * apply_K(onsager_simple(self.beta_hat(c, z), c.pair), q.rho, nu, eigen)
            drho = drho + k
            dz = dz - quantum_energy(k, self.H) * b
        return CoupledState(drho, dz)

    def split_field(self, q: CoupledState):
        """(J DE, K DS): the reversible and irreversible parts of the field."""
        eigen = hermitian_eigen(q.rho)
        return self.apply_J(q, self.dE(q)), self.apply_K(q, self.dS(q, eigen), eigen)

    def vector_field_operator_form(self, q: CoupledState) -> CoupledState:
        a, b = self.split_field(q)
        return a + b

    def effective_hamiltonian(self, z) -> np.ndarray:
        return self.H - self.gamma_adjoint(self.energy_z.grad(z))

    def vector_field(self, q: CoupledState) -> CoupledState:
        """Linear-in-rho form: rho' = i[rho, H_eff] + sum k_B kappa_c M_{beta_c,Q_c} rho."""
        z = q.z
        rho = q.rho
        h_eff = self.effective_hamiltonian(z)
        ham = 1j * (rho @ h_eff - h_eff @ rho)
        drho = ham.copy()
        dz = np.zeros(self.dim_z)
        if self.dim_z:
            dz = self.J_ma @ self.energy_z.grad(z) - self.gamma_apply(ham) \
                + self.K_ma(z) @ self.entropy_z.grad(z)
        for c in self.couplings:
            m = self.k_B * c.kappa(z) * tilted_generator(self.beta_hat(c, z), c.pair, rho)
            drho = drho + m
            dz = dz - quantum_energy(m, self.H) * c.direction(z)
        return CoupledState(drho, dz)

    vector_field_linear_form = vector_field

    def entropy_production(self, q: CoupledState) -> float:
        """2 P*(q, DS) assembled from the dissipation potentials of the parts."""
        z = q.z
        eigen = hermitian_eigen(q.rho)
        ds = self.dS(q, eigen)
        total = float(ds.z @ self.K_ma(z) @ ds.z) if self.dim_z else 0.0
        for c in self.couplings:
            nu = ds.rho - float(np.dot(ds.z, c.direction(z))) * self.H
            ons = onsager_simple(self.beta_hat(c, z), c.pair)
            total += 2.0 * c.kappa(z) * dissipation_potential(ons, q.rho, nu, eigen)
        return total

    def monitors(self, q: CoupledState, eigen=None):
        return self.energy(q), self.entropy(q, eigen), math.nan

    def structure_report(self, z) -> dict:
        """Residuals of the standing assumptions at one macroscopic state."""
        z = np.asarray(z, dtype=float)
        de = self.energy_z.grad(z)
        ds = self.entropy_z.grad(z)
        km = self.K_ma(z) if self.dim_z else np.zeros((0, 0))
        out = {
            "J_ma_antisymmetry": float(np.max(np.abs(self.J_ma + self.J_ma.T))) if self.dim_z else 0.0,
            "K_ma_symmetry": float(np.max(np.abs(km - km.T))) if self.dim_z else 0.0,
            "K_ma_min_eig": float(np.min(np.linalg.eigvalsh(0.5 * (km + km.T)))) if self.dim_z else 0.0,
            "J_ma_dS": float(np.linalg.norm(self.J_ma @ ds)) if self.dim_z else 0.0,
            "Gamma_adj_dS": float(np.linalg.norm(self.gamma_adjoint(ds))),
            "K_ma_dE": float(np.linalg.norm(km @ de)) if self.dim_z else 0.0,
            "b_normalization": 0.0,
            "min_beta_hat": math.inf,
        }
        for c in self.couplings:
            b = c.direction(z)
            out["b_normalization"] = max(out["b_normalization"], abs(float(np.dot(de, b)) - 1.0))
            out["min_beta_hat"] = min(out["min_beta_hat"], self.beta_hat(c, z))
        return out


# ---------------------------------------------------------------------------
# damped Hamiltonian (isothermal) systems
# ---------------------------------------------------------------------------


class DampedSystem(_Coupled):
    """Isothermal coupled system rho' , z' = (J - K) DF with dimensionless F.

    With ``transport=True`` the Onsager operator replicates its quantum row in
    the z row premultiplied by ``-Gamma`` (the polarization coupling of the
    Maxwell-Bloch reduction); each coupling then needs its field sensitivity
    ``g`` with ``[Q, Gamma* zeta] = omega (g . zeta) Q``.
    """

    def __init__(self, H, beta_star: float, macro: MacroSpace | None = None,
                 free_z: MacroFunctional | None = None, couplings: Sequence[Coupling] = (),
                 J_ma=None, K_ma=None, gamma=None, transport: bool = False,
                 domain: Callable | None = None, name: str = "damped"):
        macro = macro or MacroSpace(0)
        super().__init__(H, macro, J_ma, K_ma, gamma, couplings, domain)
        if not math.isfinite(beta_star) or beta_star <= 0:
            raise ConstructionError("beta_* must be positive")
        self.beta_star = float(beta_star)
        self.free_z = free_z or zero_functional(macro.dim_z)
        self.transport = bool(transport)
        self.name = name
        self._j_scale = 1.0 / self.beta_star
        if self.transport:
            for c in self.couplings:
                if c.g is None or c.g.shape != (macro.dim_z,):
                    raise ConstructionError("transport couplings need a field sensitivity g")

    @property
    def s(self) -> float:
        return 1.0 if self.transport else 0.0

    def _g(self, c: Coupling):
        return c.g if (self.transport and c.g is not None) else np.zeros(self.dim_z)

    def free_energy(self, q: CoupledState, eigen=None) -> float:
        return -von_neumann_entropy(q.rho, eigen) + self.beta_star * quantum_energy(q.rho, self.H) \
            + float(self.free_z.value(q.z))

    def energy(self, q: CoupledState) -> float:
        return quantum_energy(q.rho, self.H)

    def entropy(self, q: CoupledState, eigen=None) -> float:
        return von_neumann_entropy(q.rho, eigen)

    def dF(self, q: CoupledState, eigen=None) -> CoupledState:
        fe = floored_eigen(q.rho, eigen)
        return CoupledState(fe.log() + self.beta_star * self.H, self.free_z.grad(q.z))

    def beta_tilde(self, c: Coupling, z) -> float:
        df = self.free_z.grad(z)
        return self.beta_star + float(np.dot(df, c.direction(z))) - float(np.dot(self._g(c), df))

    def _lift(self, c: Coupling, z, xi: CoupledState):
        # B_c(mu, zeta) = mu + <zeta, a_c> H - s Gamma* zeta
        nu = xi.rho + float(np.dot(xi.z, c.direction(z))) * self.H
        if self.transport:
            nu = nu - self.gamma_adjoint(xi.z)
        return nu

    def _push(self, c: Coupling, z, k):
        # B_c* k = (k, <H, k> a_c - s Gamma k)
        dz = quantum_energy(k, self.H) * c.direction(z)
        if self.transport:
            dz = dz - self.gamma_apply(k)
        return dz

    def apply_K(self, q: CoupledState, xi: CoupledState, eigen=None) -> CoupledState:
        z = q.z
        if eigen is None:
            eigen = hermitian_eigen(q.rho)
        drho = np.zeros_like(q.rho)
        dz = self.K_ma(z) @ xi.z if self.dim_z else np.zeros(0)
        for c in self.couplings:
            nu = self._lift(c, z, xi)
            k = c.kappa(z) * apply_K(onsager_simple(self.beta_tilde(c, z), c.pair), q.rho, nu, eigen)
            drho = drho + k
            dz = dz + self._push(c, z, k)
        return CoupledState(drho, dz)

    def split_field(self, q: CoupledState):
        """(J DF, -K DF)."""
        eigen = hermitian_eigen(q.rho)
        df = self.dF(q, eigen)
        return self.apply_J(q, df), -self.apply_K(q, df, eigen)

    def vector_field_operator_form(self, q: CoupledState) -> CoupledState:
        a, b = self.split_field(q)
        return a + b

    def effective_hamiltonian(self, z) -> np.ndarray:
        return self.H - self.gamma_adjoint(self.free_z.grad(z)) / self.beta_star

    def vector_field(self, q: CoupledState) -> CoupledState:
        """Linear-in-rho form with the tilted temperatures beta_tilde_c(z)."""
        z = q.z
        rho = q.rho
        h_eff = self.effective_hamiltonian(z)
        ham = 1j * (rho @ h_eff - h_eff @ rho)
        drho = ham.copy()
        dz = np.zeros(self.dim_z)
        if self.dim_z:
            df = self.free_z.grad(z)
            dz = self.J_ma @ df / self.beta_star - self.gamma_apply(ham) - self.K_ma(z) @ df
        for c in self.couplings:
            m = c.kappa(z) * tilted_generator(self.beta_tilde(c, z), c.pair, rho)
            drho = drho + m
            dz = dz + self._push(c, z, m)
        return CoupledState(drho, dz)

    vector_field_linear_form = vector_field

    def dissipation_rate(self, q: CoupledState) -> float:
        """<DF, K DF> = -dF/dt, from the dissipation potentials."""
        z = q.z
        eigen = hermitian_eigen(q.rho)
        df = self.dF(q, eigen)
        total = float(df.z @ self.K_ma(z) @ df.z) if self.dim_z else 0.0
        for c in self.couplings:
            ons = onsager_simple(self.beta_tilde(c, z), c.pair)
            total += 2.0 * c.kappa(z) * dissipation_potential(ons, q.rho, self._lift(c, z, df), eigen)
        return total

    def monitors(self, q: CoupledState, eigen=None):
        return self.energy(q), self.entropy(q, eigen), self.free_energy(q, eigen)


# ---------------------------------------------------------------------------
# slack augmentation
# ---------------------------------------------------------------------------


class SlackGeneric:
    """GENERIC form of a damped system with an extra scalar e as the last z coordinate.

    E~ = F + e, S~ = e / theta_*, J~ = diag(J, 0) and
    K~ = [[K, -K DF], [-(K DF)^T, <DF, K DF>]] with K = theta_* times the damped one.
    """

    def __init__(self, damped: DampedSystem, theta_star: float = 1.0):
        if theta_star <= 0:
            raise ConstructionError("theta_* must be positive")
        self.damped = damped
        self.theta_star = float(theta_star)
        self.macro = MacroSpace(damped.dim_z + 1)
        self.name = damped.name + "+slack"

    @property
    def dim(self) -> int:
        return self.damped.dim

    @property
    def dim_z(self) -> int:
        return self.macro.dim_z

    def _split(self, q: CoupledState):
        return CoupledState(q.rho, q.z[:-1]), float(q.z[-1])

    def augment(self, q: CoupledState, e: float = 0.0) -> CoupledState:
        return CoupledState(q.rho, np.append(q.z, e))

    def energy(self, q: CoupledState, eigen=None) -> float:
        inner, e = self._split(q)
        return self.damped.free_energy(inner, eigen) + e

    def entropy(self, q: CoupledState, eigen=None) -> float:
        return self._split(q)[1] / self.theta_star

    def free_energy(self, q: CoupledState, eigen=None) -> float:
        return self.damped.free_energy(self._split(q)[0], eigen)

    def dE(self, q: CoupledState) -> CoupledState:
        df = self.damped.dF(self._split(q)[0])
        return CoupledState(df.rho, np.append(df.z, 1.0))

    def dS(self, q: CoupledState) -> CoupledState:
        return CoupledState(np.zeros_like(q.rho), np.append(np.zeros(self.damped.dim_z), 1.0 / self.theta_star))

    def apply_J(self, q: CoupledState, xi: CoupledState) -> CoupledState:
        inner, _ = self._split(q)
        out = self.damped.apply_J(inner, self._split(xi)[0])
        return CoupledState(out.rho, np.append(out.z, 0.0))

    def poisson_derivative(self, delta, xi: CoupledState) -> CoupledState:
        out = self.damped.poisson_derivative(delta, self._split(xi)[0])
        return CoupledState(out.rho, np.append(out.z, 0.0))

    def apply_K(self, q: CoupledState, xi: CoupledState) -> CoupledState:
        inner, _ = self._split(q)
        xin, eta = self._split(xi)
        eigen = hermitian_eigen(inner.rho)
        df = self.damped.dF(inner, eigen)
        kdf = self.theta_star * self.damped.apply_K(inner, df, eigen)
        kxi = self.theta_star * self.damped.apply_K(inner, xin, eigen)
        top = kxi - eta * kdf
        last = -pairing(kdf, xin) + eta * pairing(df, kdf)
        return CoupledState(top.rho, np.append(top.z, last))

    def split_field(self, q: CoupledState):
        return self.apply_J(q, self.dE(q)), self.apply_K(q, self.dS(q))

    def vector_field_operator_form(self, q: CoupledState) -> CoupledState:
        a, b = self.split_field(q)
        return a + b

    def vector_field(self, q: CoupledState) -> CoupledState:
        inner, _ = self._split(q)
        v = self.damped.vector_field(inner)
        return CoupledState(v.rho, np.append(v.z, self.damped.dissipation_rate(inner)))

    def in_domain(self, q: CoupledState) -> bool:
        return self.damped.in_domain(self._split(q)[0])

    def monitors(self, q: CoupledState, eigen=None):
        return self.energy(q, eigen), self.entropy(q), self.free_energy(q, eigen)


def slack_generic(damped: DampedSystem, theta_star: float = 1.0) -> SlackGeneric:
    return SlackGeneric(damped, theta_star)


# ---------------------------------------------------------------------------
# structural checks
# ---------------------------------------------------------------------------


def total_energy(sys, q: CoupledState) -> float:
    return sys.energy(q)


def total_entropy(sys, q: CoupledState) -> float:
    return sys.entropy(q)


def vector_field_operator_form(sys, q: CoupledState) -> CoupledState:
    return sys.vector_field_operator_form(q)


def vector_field_linear_form(sys, q: CoupledState) -> CoupledState:
    return sys.vector_field(q)


@dataclass(frozen=True)
class NICReport:
    J_dS: float
    K_dE: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.J_dS <= self.tol and self.K_dE <= self.tol


def nic_check(sys, q: CoupledState, tol: float = 1e-9) -> NICReport:
    """Norms of J DS and K DE (the non-interaction conditions)."""
    if isinstance(sys, DampedSystem):
        raise TypeError("damped systems have no NIC; wrap them with slack_generic first")
    j = sys.apply_J(q, sys.dS(q)).norm()
    k = sys.apply_K(q, sys.dE(q)).norm()
    return NICReport(j, k, tol)


@dataclass(frozen=True)
class JacobiReport:
    jacobi: float
    antisymmetry: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.jacobi <= self.tol and self.antisymmetry <= self.tol


def _bracket_gradient(sys, g: CoupledState, h: CoupledState, basis) -> CoupledState:
    # gradient of q -> <g, J(q) h>; J is affine in rho and constant in z
    coeffs = [pairing(g, sys.poisson_derivative(b, h)) for b in basis]
    grad = sum(c * b for c, b in zip(coeffs, basis))
    return CoupledState(grad, np.zeros(sys.dim_z))


def jacobi_check(sys, q: CoupledState, trials: int = 5, rng=None, tol: float = 1e-7) -> JacobiReport:
    """Cyclic sum {F,{G,H}} + cyc over random linear functionals, plus antisymmetry of J."""
    from .rng import SplitMix64, random_hermitian

    rng = rng or SplitMix64(0)
    basis = hermitian_basis(sys.dim)
    worst_jac = 0.0
    worst_anti = 0.0

    def functional():
        return CoupledState(random_hermitian(rng, sys.dim), rng.normals((sys.dim_z,)))

    for _ in range(trials):
        f, g, h = functional(), functional(), functional()
        total = 0.0
        for a, b, c in ((f, g, h), (g, h, f), (h, f, g)):
            total += pairing(a, sys.apply_J(q, _bracket_gradient(sys, b, c, basis)))
        worst_jac = max(worst_jac, abs(total))
        worst_anti = max(worst_anti, abs(pairing(f, sys.apply_J(q, g)) + pairing(g, sys.apply_J(q, f))))
    return JacobiReport(worst_jac, worst_anti, tol)


def field_sensitivity(pair: EigenpairQ, gamma) -> np.ndarray:
    """g with [Q, G_k] = omega g_k Q, by projection onto Q (zero for omega = 0)."""
    gamma = np.asarray(gamma, dtype=complex)
    Q = pair.Q
    if abs(pair.omega) < 1e-12:
        return np.zeros(gamma.shape[0])
    qq = float(np.real(np.vdot(Q, Q)))
    return np.array([float(np.real(np.vdot(Q, Q @ G - G @ Q))) / (pair.omega * qq) for G in gamma])


def field_condition_residual(pair: EigenpairQ, gamma, g, zeta) -> float:
    """||[Q, Gamma* zeta] - omega (g . zeta) Q|| for one field zeta."""
    gamma = np.asarray(gamma, dtype=complex)
    adj = np.einsum("k,kij->ij", np.asarray(zeta, float), gamma)
    Q = pair.Q
    return float(np.linalg.norm(Q @ adj - adj @ Q - pair.omega * float(np.dot(g, zeta)) * Q))
