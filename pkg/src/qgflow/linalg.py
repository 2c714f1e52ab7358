"""Dense complex linear algebra used by every other module.

Tensor products follow numpy's ``kron`` convention: for ``M = kron(A, B)``
the second factor's index varies fastest, so
``M[i*d2 + k, j*d2 + l] == A[i, j] * B[k, l]``.  Superoperators act on
row-major vectorizations ``vec(A) = A.reshape(-1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, ShapeError, SymmetryError

JACOBI_MAX_SWEEPS = 100
JACOBI_REL_THRESHOLD = 1e-14


def _square(a, name="matrix"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")
    return a


def _same_square(a, b):
    a = _square(a)
    b = _square(b)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def dag(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt pairing Tr(a* b)."""
    a, b = _same_square(a, b)
    return complex(np.vdot(a, b))


def hs_norm(a) -> float:
    return float(np.linalg.norm(a))


def commutator(a, b):
    a, b = _same_square(a, b)
    return a @ b - b @ a


def anticommutator(a, b):
    a, b = _same_square(a, b)
    return a @ b + b @ a


def hermitize(a):
    return 0.5 * (a + dag(a))


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    source_norm: float
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self):
        u = self.eigenvectors
        return (u * self.eigenvalues) @ dag(u)

    def apply(self, f: Callable[[np.ndarray], np.ndarray]):
        """U diag(f(λ)) U* for a vectorized scalar function f."""
        u = self.eigenvectors
        vals = np.asarray(f(self.eigenvalues))
        return (u * vals) @ dag(u)


def _jacobi_rotation(a, v, p, q):
    apq = complex(a[p, q])
    mag = abs(apq)
    phase = apq / mag
    zeta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
    zeta = float(zeta)
    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # columns by G = [[c, s*phase], [-s*conj(phase), c]], rows by G*
    sp = s * phase
    spc = s * phase.conjugate()
    ap = a[:, p].copy()
    aq = a[:, q]
    a[:, p] = c * ap - spc * aq
    a[:, q] = sp * ap + c * aq
    rp = a[p, :].copy()
    rq = a[q, :]
    a[p, :] = c * rp - sp * rq
    a[q, :] = spc * rp + c * rq
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    vp = v[:, p].copy()
    vq = v[:, q]
    v[:, p] = c * vp - spc * vq
    v[:, q] = sp * vp + c * vq


def hermitian_eigen(a, tol: float = 1e-10) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Parameters
    ----------
    a : (n, n) array_like
        Hermitian input; ``||a - a*||_F <= tol * ||a||_F`` is required.
    tol : float
        Relative Hermiticity tolerance.

    Returns
    -------
    HermitianEigen
        Eigenvalues ascending, eigenvectors as columns.
    """
    a = _square(a)
    n = a.shape[0]
    norm = float(np.linalg.norm(a))
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    asym = float(np.linalg.norm(a - dag(a)))
    if asym > tol * max(norm, 1e-300):
        raise SymmetryError(f"matrix is not Hermitian: ||a - a*|| = {asym:.3e}, ||a|| = {norm:.3e}")
    work = hermitize(a).copy()
    v = np.eye(n, dtype=complex)
    threshold = JACOBI_REL_THRESHOLD * norm
    sweeps = 0
    if n > 1 and norm > 0.0:
        upper = np.triu_indices(n, 1)
        # entries this small cannot keep the off-diagonal norm above threshold
        skip = max(1e-300, 1e-2 * threshold / n)
        for sweeps in range(1, JACOBI_MAX_SWEEPS + 1):
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if abs(work[p, q]) > skip:
                        _jacobi_rotation(work, v, p, q)
            off = math.sqrt(2.0) * float(np.linalg.norm(work[upper]))
            if off <= threshold:
                break
        else:
            raise ConvergenceError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    vals = np.real(np.diag(work)).copy()
    order = np.argsort(vals, kind="stable")
    return HermitianEigen(vals[order], v[:, order], norm, sweeps)


def _as_eigen(a, tol):
    return a if isinstance(a, HermitianEigen) else hermitian_eigen(a, tol)


def matrix_function(a, f: Callable[[np.ndarray], np.ndarray], tol: float = 1e-10,
                    positive: bool = False):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    With ``positive=True`` the spectrum must be strictly positive (log, fractional
    powers); otherwise a DomainError names the offending eigenvalue.
    """
    eig = _as_eigen(a, tol)
    if positive:
        bad = eig.eigenvalues[eig.eigenvalues <= 0.0]
        if bad.size:
            raise DomainError(f"function requires a positive spectrum; eigenvalue {bad[0]:.6e}")
    out = eig.apply(f)
    return hermitize(out)


def logm_h(a, tol: float = 1e-10):
    return matrix_function(a, np.log, tol, positive=True)


def sqrtm_h(a, tol: float = 1e-10):
    return matrix_function(a, np.sqrt, tol, positive=True)


def expm_h(a, tol: float = 1e-10):
    return matrix_function(a, np.exp, tol)


def kron(a, b):
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace_2(m, dim1: int, dim2: int):
    """Trace out the second (fastest-varying) tensor factor."""
    m = _square(m)
    if m.shape[0] != dim1 * dim2:
        raise ShapeError(f"matrix of size {m.shape[0]} is not {dim1}*{dim2}")
    return np.einsum("ikjk->ij", m.reshape(dim1, dim2, dim1, dim2))


def partial_transpose_sigma(m, sigma_basis: HermitianEigen, dim1: int):
    """Transpose the second factor in the eigenbasis of sigma.

    Writing ``m = sum_jk Q_jk (x) e_j e_k*`` with ``{e_j}`` the columns of
    ``sigma_basis.eigenvectors``, the result is ``sum_jk Q_kj (x) e_j e_k*``.
    """
    m = _square(m)
    u = sigma_basis.eigenvectors
    dim2 = u.shape[0]
    if m.shape[0] != dim1 * dim2:
        raise ShapeError(f"matrix of size {m.shape[0]} is not {dim1}*{dim2}")
    big = np.kron(np.eye(dim1), u)
    rotated = dag(big) @ m @ big
    swapped = rotated.reshape(dim1, dim2, dim1, dim2).transpose(0, 3, 2, 1).reshape(m.shape)
    return big @ swapped @ dag(big)


# Padé(6,6) coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
_PADE_Q = 6
_PADE = [
    math.factorial(2 * _PADE_Q - k) * math.factorial(_PADE_Q)
    / (math.factorial(2 * _PADE_Q) * math.factorial(k) * math.factorial(_PADE_Q - k))
    for k in range(_PADE_Q + 1)
]
_PADE_THETA = 0.25


def expm(a):
    """General (non-Hermitian) matrix exponential, scaling and squaring with Padé(6)."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expm needs a square matrix, got {a.shape}")
    n = a.shape[0]
    norm1 = float(np.max(np.sum(np.abs(a), axis=0))) if n else 0.0
    s = 0 if norm1 <= _PADE_THETA else int(math.ceil(math.log2(norm1 / _PADE_THETA)))
    x = a / (2.0 ** s)
    ident = np.eye(n, dtype=a.dtype)
    num = _PADE[0] * ident
    den = _PADE[0] * ident
    power = ident
    for k in range(1, _PADE_Q + 1):
        power = power @ x
        num = num + _PADE[k] * power
        den = den + ((-1) ** k) * _PADE[k] * power
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r
