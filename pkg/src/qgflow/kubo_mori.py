"""Kubo-Mori operators C_rho, their tilted versions D^alpha_rho, and the miracle identities.

Everything is computed in the eigenbasis of rho, where
``D^alpha_rho`` multiplies the matrix entry ``(n, k)`` by the logarithmic mean
``Lambda(e^{alpha/2} r_n, e^{-alpha/2} r_k)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError, ShapeError
from .lindblad import EigenpairQ, TensorLindblad, commutation_residual
from .linalg import HermitianEigen, dag
from .states import ThermalState, floored_eigen

_SERIES_CUT = 1e-3


def log_mean(a, b):
    """Logarithmic mean (a - b) / (log a - log b), elementwise.

    Evaluated as sqrt(ab) sinh(x)/x with x = (log a - log b)/2 near the
    diagonal, which avoids the cancellation in a - b.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise DomainError("logarithmic mean needs positive arguments")
    la, lb = np.log(a), np.log(b)
    x = 0.5 * (la - lb)
    ax = np.abs(x)
    gm = np.exp(0.5 * (la + lb))
    x2 = x * x
    series = 1.0 + x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mid = np.sinh(x) / x
        far = (a - b) / (la - lb)
    out = np.where(ax < _SERIES_CUT, gm * series, np.where(ax <= 1.0, gm * mid, far))
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class KuboMoriOp:
    vectors: np.ndarray
    values: np.ndarray  # floored eigenvalues
    alpha: float
    weights: np.ndarray
    floored: bool = False

    @property
    def dim(self) -> int:
        return self.values.shape[0]


def _weights(values, alpha):
    up = math.exp(alpha / 2) * values
    down = math.exp(-alpha / 2) * values
    return log_mean(up[:, None], down[None, :])


def kubo_mori(rho, alpha: float = 0.0, eigen: HermitianEigen | None = None) -> KuboMoriOp:
    fe = floored_eigen(np.asarray(rho, dtype=complex), eigen)
    return KuboMoriOp(fe.eigen.eigenvectors, fe.values, float(alpha),
                      _weights(fe.values, alpha), fe.floored)


def kubo_mori_product(rho, sigma, rho_eigen: HermitianEigen | None = None,
                      sigma_eigen: HermitianEigen | None = None) -> KuboMoriOp:
    """C for rho (x) sigma, assembled from the two factor eigendecompositions."""
    fr = floored_eigen(np.asarray(rho, dtype=complex), rho_eigen)
    fs = floored_eigen(np.asarray(sigma, dtype=complex), sigma_eigen)
    vals = np.kron(fr.values, fs.values)
    vecs = np.kron(fr.eigen.eigenvectors, fs.eigen.eigenvectors)
    return KuboMoriOp(vecs, vals, 0.0, _weights(vals, 0.0), fr.floored or fs.floored)


def apply_D(op: KuboMoriOp, A):
    A = np.asarray(A, dtype=complex)
    if A.shape != (op.dim, op.dim):
        raise ShapeError(f"operand {A.shape} does not match dimension {op.dim}")
    U = op.vectors
    return U @ (op.weights * (dag(U) @ A @ U)) @ dag(U)


def apply_C(rho, A):
    return apply_D(kubo_mori(rho), A)


@dataclass(frozen=True)
class MiracleReport:
    classic: float
    generalized: float
    corollary: float
    floored: bool

    @property
    def worst(self) -> float:
        return max(self.classic, self.generalized, self.corollary)


def miracle_residuals(rho, H, beta: float, pair: EigenpairQ, alpha: float | None = None,
                      eigen: HermitianEigen | None = None) -> MiracleReport:
    """Residuals of the three identities

    * ``C_rho [Q, log rho] = [Q, rho]``
    * ``D^a_rho ([Q, log rho] - a Q) = e^{-a/2} Q rho - e^{a/2} rho Q``
    * ``D^{-beta w}_rho [Q, log rho + beta H] = e^{beta w/2} Q rho - e^{-beta w/2} rho Q``

    ``alpha`` defaults to ``-beta * omega``.
    """
    rho = np.asarray(rho, dtype=complex)
    H = np.asarray(H, dtype=complex)
    Q = pair.Q
    w = pair.omega
    if alpha is None:
        alpha = -beta * w
    c0 = kubo_mori(rho, 0.0, eigen)
    U, r = c0.vectors, c0.values
    log_rho = (U * np.log(r)) @ dag(U)
    rho_f = (U * r) @ dag(U)
    ql = Q @ log_rho - log_rho @ Q
    classic = np.linalg.norm(apply_D(c0, ql) - (Q @ rho_f - rho_f @ Q))
    da = KuboMoriOp(U, r, alpha, _weights(r, alpha), c0.floored)
    gen = np.linalg.norm(apply_D(da, ql - alpha * Q)
                         - (math.exp(-alpha / 2) * Q @ rho_f - math.exp(alpha / 2) * rho_f @ Q))
    dc = KuboMoriOp(U, r, -beta * w, _weights(r, -beta * w), c0.floored)
    lhs = apply_D(dc, ql + beta * (Q @ H - H @ Q))
    rhs = math.exp(beta * w / 2) * Q @ rho_f - math.exp(-beta * w / 2) * rho_f @ Q
    cor = np.linalg.norm(lhs - rhs)
    return MiracleReport(float(classic), float(gen), float(cor), c0.floored)


def block_D_formula_check(rho, alpha: float, blocks) -> float:
    """Residual of C on diag(e^{a/2} rho, e^{-a/2} rho) against blockwise C and D^{+-a}.

    Blocks ``(A, B, C, D)`` sit at positions 11, 12, 21, 22 of the doubled space,
    written as ``A (x) E11 + B (x) E12 + C (x) E21 + D (x) E22``.
    """
    rho = np.asarray(rho, dtype=complex)
    A, B, C, D = (np.asarray(x, dtype=complex) for x in blocks)
    n = rho.shape[0]
    for x in (A, B, C, D):
        if x.shape != (n, n):
            raise ShapeError("blocks must match rho")
    units = [np.zeros((2, 2)) for _ in range(4)]
    for k, (i, j) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
        units[k][i, j] = 1.0
    big_rho = np.kron(rho, np.diag([math.exp(alpha / 2), math.exp(-alpha / 2)]))
    big = sum(np.kron(x, e) for x, e in zip((A, B, C, D), units))
    doubled = apply_D(kubo_mori(big_rho, 0.0), big)

    c = kubo_mori(rho, 0.0)
    U, r = c.vectors, c.values
    dp = KuboMoriOp(U, r, alpha, _weights(r, alpha))
    dm = KuboMoriOp(U, r, -alpha, _weights(r, -alpha))
    parts = (math.exp(alpha / 2) * apply_D(c, A), apply_D(dp, B), apply_D(dm, C),
             math.exp(-alpha / 2) * apply_D(c, D))
    blockwise = sum(np.kron(x, e) for x, e in zip(parts, units))
    return float(np.linalg.norm(doubled - blockwise))


def tensor_miracle_check(tl: TensorLindblad, ts: ThermalState, rho,
                         precondition_tol: float = 1e-10) -> float:
    """Residual of C_{rho (x) sigma}[Q, (log rho - log rho_hat) (x) 1] = [Q, rho (x) sigma]."""
    Qop = tl.Qop
    scale = max(1.0, float(np.linalg.norm(Qop)) * float(np.linalg.norm(tl.sigma)))
    res = commutation_residual(Qop, ts.rho_hat.rho, tl.sigma)
    if res > precondition_tol * scale:
        raise PreconditionError(f"Q does not commute with rho_hat (x) sigma: residual {res:.3e}")
    rho = np.asarray(rho, dtype=complex)
    fr = floored_eigen(rho)
    op = kubo_mori_product(rho, tl.sigma, rho_eigen=fr.eigen, sigma_eigen=tl.sigma_eigen)
    log_rho = fr.log()
    rho_f = fr.eigen.apply(lambda _: fr.values)
    xi = np.kron(log_rho - ts.log_rho_hat, np.eye(tl.dim2))
    lhs = apply_D(op, Qop @ xi - xi @ Qop)
    prod = np.kron(rho_f, tl.sigma)
    rhs = Qop @ prod - prod @ Qop
    return float(np.linalg.norm(lhs - rhs))
