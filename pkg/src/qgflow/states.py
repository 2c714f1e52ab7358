"""Density matrices, Gibbs states and the entropy functionals built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError, SymmetryError
from .linalg import HermitianEigen, dag, hermitian_eigen, hermitize

STATE_TOL = 1e-12
# eigenvalues in [-EIG_CLAMP, EIG_CLAMP] are replaced by EIG_FLOOR inside logs
EIG_CLAMP = 1e-12
EIG_FLOOR = 1e-14


@dataclass(frozen=True)
class FlooredEigen:
    eigen: HermitianEigen
    values: np.ndarray  # eigenvalues after flooring
    floored: bool

    def log(self):
        return self.eigen.apply(lambda _: np.log(self.values))


def floored_eigen(rho, eigen: HermitianEigen | None = None) -> FlooredEigen:
    """Eigendata of a positive semidefinite matrix with the boundary floor applied.

    Raises DomainError for an eigenvalue below ``-EIG_CLAMP``.
    """
    if eigen is None:
        eigen = hermitian_eigen(rho)
    vals = eigen.eigenvalues
    if vals[0] < -EIG_CLAMP:
        raise DomainError(f"matrix is not positive semidefinite: eigenvalue {vals[0]:.6e}")
    small = vals <= EIG_CLAMP
    out = np.where(small, EIG_FLOOR, vals)
    return FlooredEigen(eigen, out, bool(np.any(small)))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    rho: np.ndarray
    eigen: HermitianEigen

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.rho if dtype is None else self.rho.astype(dtype)


def density_matrix(rho, tol: float = STATE_TOL) -> DensityMatrix:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ShapeError(f"density matrix must be square, got {rho.shape}")
    if np.linalg.norm(rho - dag(rho)) > tol:
        raise SymmetryError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise DomainError(f"density matrix has trace {tr:.15g}")
    eig = hermitian_eigen(rho)
    if eig.eigenvalues[0] < -tol:
        raise DomainError(f"density matrix has eigenvalue {eig.eigenvalues[0]:.3e}")
    return DensityMatrix(hermitize(rho), eig)


def _matrix(rho):
    return rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _eigen_of(rho):
    return rho.eigen if isinstance(rho, DensityMatrix) else None


@dataclass(frozen=True, eq=False)
class ThermalState:
    beta: float
    H: np.ndarray
    rho_hat: DensityMatrix
    Z: float
    log_Z: float
    eps: np.ndarray
    h_eigen: HermitianEigen = field(repr=False)

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def log_rho_hat(self):
        """log of the Gibbs state, -beta H - log Z, computed without a matrix log."""
        return -self.beta * self.H - self.log_Z * np.eye(self.dim)

    @property
    def populations(self) -> np.ndarray:
        """Gibbs weights in the eigenbasis of H (ascending energies)."""
        return np.exp(-self.beta * self.eps - self.log_Z)


def thermal_state(H, beta: float) -> ThermalState:
    H = np.asarray(H, dtype=complex)
    eig = hermitian_eigen(H)
    eps = eig.eigenvalues
    beta = float(beta)
    if not math.isfinite(beta):
        raise DomainError("beta must be finite")
    # log Z with the extreme energy factored out for either sign of beta
    shift = eps[0] if beta >= 0 else eps[-1]
    w = np.exp(-beta * (eps - shift))
    log_Z = -beta * shift + math.log(float(np.sum(w)))
    pops = w / np.sum(w)
    rho_hat = hermitize(eig.apply(lambda _: pops))
    dm = DensityMatrix(rho_hat, HermitianEigen(pops, eig.eigenvectors, float(np.linalg.norm(pops))))
    return ThermalState(beta, hermitize(H), dm, math.exp(log_Z), log_Z, eps, eig)


def von_neumann_entropy(rho, eigen: HermitianEigen | None = None) -> float:
    """-Tr(rho log rho), with 0 log 0 = 0 (floored eigenvalues contribute ~1e-13)."""
    fe = floored_eigen(_matrix(rho), eigen if eigen is not None else _eigen_of(rho))
    r = fe.values
    return float(-np.sum(r * np.log(r)))


def energy(rho, H) -> float:
    return float(np.real(np.vdot(np.asarray(H, dtype=complex), _matrix(rho))))


def log_density(rho):
    return floored_eigen(_matrix(rho), _eigen_of(rho)).log()


def relative_entropy(rho, ts: ThermalState, eigen: HermitianEigen | None = None) -> float:
    """Tr(rho (log rho - log rho_hat)) = Tr(rho log rho + beta rho H) + log Z."""
    return -von_neumann_entropy(rho, eigen) + ts.beta * energy(rho, ts.H) + ts.log_Z


def relative_entropy_direct(rho, ts: ThermalState) -> float:
    """The first form, with log rho_hat taken from its eigenbasis; used as a cross-check."""
    m = _matrix(rho)
    log_hat = ts.h_eigen.apply(lambda _: np.log(ts.populations))
    return float(np.real(np.vdot(m, log_density(rho) - log_hat)))
