"""State-dependent Onsager operators K(rho) and the gradient form L rho = -K(rho)(log rho + beta H)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ShapeError, SymmetryError
from .kubo_mori import KuboMoriOp, _weights, apply_D, kubo_mori_product
from .lindblad import (EigenpairQ, MQBlock, Superoperator, TensorLindblad, make_tensor_lindblad,
                       sum_superoperators)
from .linalg import dag, partial_trace_2
from .states import FlooredEigen, ThermalState, floored_eigen


@dataclass(frozen=True, eq=False)
class SimpleSource:
    beta: float
    pair: EigenpairQ


@dataclass(frozen=True, eq=False)
class TensorSource:
    tl: TensorLindblad


@dataclass(frozen=True, eq=False)
class OnsagerApplication:
    """Weighted sum of Onsager operators; each term is a simple or a tensor source."""

    dim: int
    terms: tuple = ()

    def generator(self) -> Superoperator:
        ops = []
        for w, src in self.terms:
            if isinstance(src, SimpleSource):
                ops.append(w * MQBlock(src.beta, src.pair).generator())
            else:
                ops.append(w * make_tensor_lindblad(src.tl))
        return sum_superoperators(ops, self.dim)

    def __call__(self, rho, xi):
        return apply_K(self, rho, xi)


def onsager_simple(beta: float, pair: EigenpairQ, weight: float = 1.0) -> OnsagerApplication:
    return OnsagerApplication(pair.Q.shape[0], ((float(weight), SimpleSource(float(beta), pair)),))


def onsager_tensor(tl: TensorLindblad, weight: float = 1.0) -> OnsagerApplication:
    return OnsagerApplication(tl.dim1, ((float(weight), TensorSource(tl)),))


def sum_onsager(ops: Sequence[OnsagerApplication], dim: int | None = None) -> OnsagerApplication:
    ops = list(ops)
    if not ops and dim is None:
        raise ShapeError("empty sum needs an explicit dimension")
    dims = {o.dim for o in ops} | ({dim} if dim is not None else set())
    if len(dims) != 1:
        raise ShapeError(f"Onsager operators of different dimensions: {sorted(dims)}")
    return OnsagerApplication(dims.pop(), tuple(t for o in ops for t in o.terms))


class _Prepared:
    """Eigendata of rho shared by all terms of one evaluation."""

    def __init__(self, rho, eigen=None):
        self.rho = np.asarray(rho, dtype=complex)
        self.fe: FlooredEigen = floored_eigen(self.rho, eigen)
        self._tilted: dict = {}

    def tilted(self, alpha: float) -> KuboMoriOp:
        op = self._tilted.get(alpha)
        if op is None:
            fe = self.fe
            op = KuboMoriOp(fe.eigen.eigenvectors, fe.values, alpha, _weights(fe.values, alpha),
                            fe.floored)
            self._tilted[alpha] = op
        return op

    def product(self, tl: TensorLindblad) -> KuboMoriOp:
        return kubo_mori_product(self.rho, tl.sigma, rho_eigen=self.fe.eigen,
                                 sigma_eigen=tl.sigma_eigen)


def _check_xi(xi, n):
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (n, n):
        raise ShapeError(f"xi has shape {xi.shape}, expected {(n, n)}")
    if np.linalg.norm(xi - dag(xi)) > 1e-10 * max(1.0, float(np.linalg.norm(xi))):
        raise SymmetryError("Onsager operators act on Hermitian matrices")
    return xi


def _simple_K(prep, src: SimpleSource, xi):
    Q = src.pair.Q
    Qd = dag(Q)
    bw = src.beta * src.pair.omega
    a = apply_D(prep.tilted(-bw), Q @ xi - xi @ Q)
    b = apply_D(prep.tilted(bw), Qd @ xi - xi @ Qd)
    return (Qd @ a - a @ Qd) + (Q @ b - b @ Q)


def _tensor_K(prep, tl: TensorLindblad, xi):
    Qop = tl.Qop
    big = np.kron(xi, np.eye(tl.dim2))
    inner = apply_D(prep.product(tl), Qop @ big - big @ Qop)
    return partial_trace_2(Qop @ inner - inner @ Qop, tl.dim1, tl.dim2)


def _apply(onsager, prep, xi):
    out = np.zeros_like(xi)
    for w, src in onsager.terms:
        if isinstance(src, SimpleSource):
            out += w * _simple_K(prep, src, xi)
        else:
            out += w * _tensor_K(prep, src.tl, xi)
    return out


def apply_K(onsager: OnsagerApplication, rho, xi, eigen=None):
    """K(rho) xi; for a simple source ``[Q*, D^{-bw}[Q, xi]] + [Q, D^{bw}[Q*, xi]]``."""
    xi = _check_xi(xi, onsager.dim)
    return _apply(onsager, _Prepared(rho, eigen), xi)


def dissipation_potential(onsager: OnsagerApplication, rho, xi, eigen=None) -> float:
    """R*(rho, xi) = 1/2 <[Q, xi (x) 1], C_{rho (x) sigma} [Q, xi (x) 1]>."""
    xi = _check_xi(xi, onsager.dim)
    prep = _Prepared(rho, eigen)
    total = 0.0
    for w, src in onsager.terms:
        if isinstance(src, SimpleSource):
            Q = src.pair.Q
            Qd = dag(Q)
            bw = src.beta * src.pair.omega
            c1 = Q @ xi - xi @ Q
            c2 = Qd @ xi - xi @ Qd
            val = np.vdot(c1, apply_D(prep.tilted(-bw), c1)) + np.vdot(c2, apply_D(prep.tilted(bw), c2))
        else:
            tl = src.tl
            big = np.kron(xi, np.eye(tl.dim2))
            c = tl.Qop @ big - big @ tl.Qop
            val = np.vdot(c, apply_D(prep.product(tl), c))
        total += w * 0.5 * val.real
    return float(total)


def free_energy_gradient(rho, ts: ThermalState, eigen=None):
    """log rho + beta H (the additive log Z is dropped; K annihilates the identity)."""
    return floored_eigen(np.asarray(rho, dtype=complex), eigen).log() + ts.beta * ts.H


def gradient_form_check(onsager: OnsagerApplication, rho, ts: ThermalState,
                        generator: Superoperator | None = None) -> float:
    """||L rho + K(rho)(log rho + beta H)||_F with L the matching generator."""
    rho = np.asarray(rho, dtype=complex)
    prep = _Prepared(rho)
    L = generator if generator is not None else onsager.generator()
    df = prep.fe.log() + ts.beta * ts.H
    return float(np.linalg.norm(L(rho) + _apply(onsager, prep, df)))


def hermitian_basis(n: int) -> list:
    """Orthonormal basis of Hermitian n x n matrices for the real pairing Re Tr(A B)."""
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    s = 1.0 / math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n), dtype=complex)
            e[i, j] = e[j, i] = s
            out.append(e)
            f = np.zeros((n, n), dtype=complex)
            f[i, j] = -1j * s
            f[j, i] = 1j * s
            out.append(f)
    return out


def dense_snapshot(onsager: OnsagerApplication, rho) -> np.ndarray:
    """Real N^2 x N^2 matrix of K(rho) in the basis of ``hermitian_basis``."""
    basis = hermitian_basis(onsager.dim)
    prep = _Prepared(rho)
    cols = [_apply(onsager, prep, b) for b in basis]
    return np.array([[np.vdot(bi, c).real for c in cols] for bi in basis])
