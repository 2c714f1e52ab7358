"""Reversible Markov chains on finitely many states and their entropic gradient structure.

Probability vectors evolve by ``p' = L p`` with nonnegative off-diagonal
rates and zero column sums.  Detailed balance with respect to ``w_eq`` makes
``kappa[n, m] = L[n, m] w_eq[m]`` symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, ShapeError, SymmetryError
from .kubo_mori import log_mean
from .lindblad import Superoperator, dbc_check
from .linalg import dag, expm
from .states import ThermalState

MARKOV_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class MarkovChain:
    N: int
    L: np.ndarray
    w_eq: np.ndarray
    kappa: np.ndarray


def _stationary(L):
    # kernel vector of L normalized to a probability vector
    n = L.shape[0]
    A = np.vstack([L, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    w, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return w


def markov_chain(L, w_eq=None, tol: float = MARKOV_TOL) -> MarkovChain:
    """Validate a rate matrix against detailed balance; ``w_eq`` is solved for when omitted."""
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ShapeError(f"rate matrix must be square, got {L.shape}")
    n = L.shape[0]
    scale = max(1.0, float(np.max(np.abs(L))))
    off = L - np.diag(np.diag(L))
    if np.any(off < -tol * scale):
        raise DomainError("negative off-diagonal rate")
    if np.max(np.abs(L.sum(axis=0))) > tol * scale:
        raise DomainError("columns of the rate matrix must sum to zero")
    w = _stationary(L) if w_eq is None else np.asarray(w_eq, dtype=float)
    if w.shape != (n,):
        raise ShapeError("w_eq has the wrong length")
    if np.any(w <= 0):
        raise DomainError("equilibrium must be strictly positive")
    w = w / w.sum()
    if np.max(np.abs(L @ w)) > tol * scale:
        raise DomainError(f"L w_eq = {np.max(np.abs(L @ w)):.3e} is not zero")
    kappa = off * w[None, :]
    if np.max(np.abs(kappa - kappa.T)) > tol * scale:
        raise SymmetryError("rates violate detailed balance")
    return MarkovChain(n, L, w, 0.5 * (kappa + kappa.T))


def markov_onsager(chain: MarkovChain, p) -> np.ndarray:
    """sum_{m>n} kappa_nm Lambda(p_n/w_n, p_m/w_m) (e_n - e_m)(e_n - e_m)^T."""
    p = np.asarray(p, dtype=float)
    if p.shape != (chain.N,):
        raise ShapeError("p has the wrong length")
    if np.any(p <= 0):
        raise DomainError("markov_onsager needs a strictly positive probability vector")
    u = p / chain.w_eq
    lam = log_mean(u[:, None], u[None, :])
    weights = chain.kappa * lam
    np.fill_diagonal(weights, 0.0)
    # graph Laplacian of the weighted edges
    return np.diag(weights.sum(axis=1)) - weights


def markov_relative_entropy(p, w) -> float:
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / w[mask])))


def markov_trajectory(chain: MarkovChain, p0, times) -> np.ndarray:
    """exp(t L) p0 at each requested time; rows are time samples."""
    p0 = np.asarray(p0, dtype=float)
    return np.array([np.real(expm(t * chain.L.astype(complex))) @ p0 for t in times])


def _simple_spectrum(ts: ThermalState, tol):
    gaps = np.diff(ts.eps)
    scale = max(1.0, float(np.max(np.abs(ts.eps))))
    if gaps.size and np.min(gaps) <= tol * scale:
        raise PreconditionError(f"H has a degenerate spectrum (gap {np.min(gaps):.3e}); "
                                "the diagonal reduction needs simple eigenvalues")


def davies_diagonal_oracle(L_quantum: Superoperator, ts: ThermalState,
                           dbc_tol: float = 1e-9, gap_tol: float = 1e-9) -> MarkovChain:
    """Rate matrix induced on the populations in the eigenbasis of H."""
    _simple_spectrum(ts, gap_tol)
    rep = dbc_check(L_quantum, ts, tol=dbc_tol)
    if not rep.passed:
        raise PreconditionError(
            f"generator fails detailed balance (stationarity {rep.stationarity_residual:.3e}, "
            f"symmetry {rep.symmetry_residual:.3e})")
    U = ts.h_eigen.eigenvectors
    n = ts.dim
    rates = np.empty((n, n))
    for m in range(n):
        dyad = np.outer(U[:, m], U[:, m].conj())
        image = dag(U) @ L_quantum(dyad) @ U
        rates[:, m] = np.real(np.diag(image))
    return markov_chain(rates, ts.populations)
