"""Detailed-balance Lindblad generators in three equivalent forms.

A generator can be given as a sum of elementary blocks (``S_W`` for a
Hermitian ``W`` commuting with ``H``, ``M_{beta,Q}`` for an eigenpair
``[Q, H] = omega Q``), as a general GKSL coefficient matrix, or in the
compact tensor form ``L(rho) = -Tr_2 [Q, [Q, rho (x) sigma]]`` with ``Q``
Hermitian on a doubled space.  This module builds all three, converts
between them and checks the detailed balance condition and complete
positivity numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (ConstructionError, DomainError, PreconditionError, RepresentationError,
                     ShapeError)
from .linalg import (HermitianEigen, dag, expm, hermitian_eigen, hermitize, kron,
                     partial_trace_2, partial_transpose_sigma)
from .states import ThermalState

GROUP_TOL = 1e-9


# ---------------------------------------------------------------------------
# superoperators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Superoperator:
    """Linear map on N x N matrices; ``matrix`` acts on row-major vec(A)."""

    dim: int
    action: Callable[[np.ndarray], np.ndarray]

    def __call__(self, a):
        return self.action(np.asarray(a, dtype=complex))

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.dim
        out = np.empty((n * n, n * n), dtype=complex)
        for k in range(n * n):
            e = np.zeros((n, n), dtype=complex)
            e.flat[k] = 1.0
            out[:, k] = self.action(e).reshape(-1)
        return out

    @classmethod
    def from_matrix(cls, m) -> "Superoperator":
        m = np.asarray(m, dtype=complex)
        n = int(round(math.sqrt(m.shape[0])))
        if m.shape != (n * n, n * n):
            raise ShapeError(f"superoperator matrix must be N^2 x N^2, got {m.shape}")
        op = cls(n, lambda a: (m @ a.reshape(-1)).reshape(n, n))
        op.__dict__["matrix"] = m
        return op

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint."""
        return Superoperator.from_matrix(dag(self.matrix))

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if other.dim != self.dim:
            raise ShapeError("superoperator dimensions differ")
        f, g = self.action, other.action
        return Superoperator(self.dim, lambda a: f(a) + g(a))

    def __mul__(self, c) -> "Superoperator":
        f = self.action
        return Superoperator(self.dim, lambda a: c * f(a))

    __rmul__ = __mul__

    def __neg__(self) -> "Superoperator":
        return -1.0 * self

    def __sub__(self, other):
        return self + (-other)


def zero_superoperator(n: int) -> Superoperator:
    return Superoperator(n, lambda a: np.zeros_like(a))


def sum_superoperators(ops: Sequence[Superoperator], n: int) -> Superoperator:
    ops = list(ops)
    if not ops:
        return zero_superoperator(n)
    actions = [o.action for o in ops]
    return Superoperator(n, lambda a: sum(f(a) for f in actions))


def hamiltonian_superoperator(H) -> Superoperator:
    """A -> i[A, H], the Liouville-von Neumann part of rho' = i[rho, H] + L rho."""
    H = np.asarray(H, dtype=complex)
    return Superoperator(H.shape[0], lambda a: 1j * (a @ H - H @ a))


def dissipator(Q, a):
    """[Q, a Q*] + [Q a, Q*] = 2 Q a Q* - {Q* Q, a}."""
    qd = dag(Q)
    qdq = qd @ Q
    return 2.0 * Q @ a @ qd - qdq @ a - a @ qdq


# ---------------------------------------------------------------------------
# spectral data of H
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenpairQ:
    omega: float
    Q: np.ndarray
    residual: float

    def conj(self) -> "EigenpairQ":
        return EigenpairQ(-self.omega, dag(self.Q), self.residual)


def eigenpair_tolerance(Q, H) -> float:
    return 1e-10 * float(np.linalg.norm(Q)) * max(1.0, float(np.linalg.norm(H)))


def eigenpair(Q, H, omega: float | None = None) -> EigenpairQ:
    """Validate (omega, Q) with [Q, H] = omega Q; omega is inferred when omitted."""
    Q = np.asarray(Q, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if Q.shape != H.shape:
        raise ShapeError(f"Q {Q.shape} and H {H.shape} differ")
    c = Q @ H - H @ Q
    if omega is None:
        qq = np.vdot(Q, Q).real
        omega = float(np.vdot(Q, c).real / qq) if qq > 0 else 0.0
    res = float(np.linalg.norm(c - omega * Q))
    if res > eigenpair_tolerance(Q, H):
        raise ConstructionError(f"[Q,H] != omega Q: residual {res:.3e} at omega={omega:.6g}")
    return EigenpairQ(float(omega), Q, res)


@dataclass(frozen=True)
class SpectralDecomp:
    distinct_eps: np.ndarray
    projectors: list
    omegas: np.ndarray
    multiplicities: dict
    eigen: HermitianEigen = field(repr=False)
    clusters: list = field(repr=False, default_factory=list)
    tol: float = 0.0

    def multiplicity(self, omega: float) -> int:
        key = self._match(omega)
        return 0 if key is None else self.multiplicities[key]

    def _match(self, omega):
        hits = [w for w in self.omegas if abs(w - omega) <= self.tol]
        return float(hits[0]) if hits else None


def spectral_decompose(H, group_tol: float = GROUP_TOL) -> SpectralDecomp:
    H = np.asarray(H, dtype=complex)
    eig = hermitian_eigen(H)
    tol = group_tol * max(1.0, float(np.linalg.norm(H)))
    vals = eig.eigenvalues
    clusters = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[clusters[-1][-1]] <= tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    eps = np.array([vals[c].mean() for c in clusters])
    u = eig.eigenvectors
    projectors = [u[:, c] @ dag(u[:, c]) for c in clusters]
    diffs = sorted(eps[m] - eps[n] for n in range(len(eps)) for m in range(len(eps)))
    omegas: list[float] = []
    for d in diffs:
        if omegas and abs(d - omegas[-1]) <= tol:
            continue
        omegas.append(0.0 if abs(d) <= tol else float(d))
    mult = {w: 0 for w in omegas}
    for n, cn in enumerate(clusters):
        for m, cm in enumerate(clusters):
            d = eps[m] - eps[n]
            key = min(omegas, key=lambda w: abs(w - d))
            mult[key] += len(cn) * len(cm)
    return SpectralDecomp(eps, projectors, np.array(omegas), mult, eig, clusters, tol)


def eigenpair_basis(sd: SpectralDecomp, omega: float) -> list[EigenpairQ]:
    """HS-orthonormal basis h_a h_b* (a in cluster n, b in cluster m, eps_m - eps_n = omega)."""
    key = sd._match(omega)
    if key is None:
        raise DomainError(f"omega={omega} is not an energy difference of H")
    u = sd.eigen.eigenvectors
    out = []
    for n, cn in enumerate(sd.clusters):
        for m, cm in enumerate(sd.clusters):
            if abs(sd.distinct_eps[m] - sd.distinct_eps[n] - key) > sd.tol:
                continue
            for a in cn:
                for b in cm:
                    Q = np.outer(u[:, a], u[:, b].conj())
                    lam = sd.eigen.eigenvalues
                    out.append(EigenpairQ(key, Q, abs(lam[b] - lam[a] - key)))
    return out


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SWBlock:
    W: np.ndarray
    residual: float

    def generator(self, H=None) -> Superoperator:
        W = self.W
        return Superoperator(W.shape[0], lambda a: dissipator(W, a))

    @property
    def sort_key(self):
        return (0.0, float(np.linalg.norm(self.W)))


@dataclass(frozen=True)
class MQBlock:
    beta: float
    pair: EigenpairQ

    def generator(self, H=None) -> Superoperator:
        Q = self.pair.Q
        Qd = dag(Q)
        up = math.exp(self.beta * self.pair.omega / 2)
        down = math.exp(-self.beta * self.pair.omega / 2)
        return Superoperator(Q.shape[0], lambda a: up * dissipator(Q, a) + down * dissipator(Qd, a))

    @property
    def sort_key(self):
        return (self.pair.omega, float(np.linalg.norm(self.pair.Q)))


BuildingBlock = SWBlock | MQBlock


def sw_block(W, H) -> SWBlock:
    W = np.asarray(W, dtype=complex)
    H = np.asarray(H, dtype=complex)
    if np.linalg.norm(W - dag(W)) > 1e-12 * max(1.0, np.linalg.norm(W)):
        raise ConstructionError("W must be Hermitian")
    res = float(np.linalg.norm(W @ H - H @ W))
    if res > eigenpair_tolerance(W, H):
        raise ConstructionError(f"W does not commute with H: residual {res:.3e}")
    return SWBlock(hermitize(W), res)


def make_SW(W, H) -> Superoperator:
    """S_W A = [W, A W] + [W A, W]."""
    return sw_block(W, H).generator()


def make_MQ(beta: float, pair: EigenpairQ, H=None) -> Superoperator:
    """M_{beta,Q} = e^{beta omega/2} N_Q + e^{-beta omega/2} N_{Q*}."""
    if H is not None:
        pair = eigenpair(pair.Q, H, pair.omega)
    return MQBlock(float(beta), pair).generator()


def make_general_lindblad(a, Qs: Sequence[np.ndarray]) -> Superoperator:
    """L A = sum_nm a_nm ([Q_n, A Q_m*] + [Q_n A, Q_m*]) for a Hermitian PSD ``a``."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    Qs = [np.asarray(q, dtype=complex) for q in Qs]
    if a.shape != (len(Qs), len(Qs)):
        raise ShapeError(f"coefficient matrix {a.shape} does not match {len(Qs)} operators")
    if not Qs:
        raise ShapeError("need at least one operator")
    n = Qs[0].shape[0]
    if len(Qs) and np.linalg.norm(a) > 0:
        eig = hermitian_eigen(a, tol=1e-10)
        if eig.eigenvalues[0] < -1e-10 * max(1.0, np.linalg.norm(a)):
            raise DomainError(f"coefficient matrix is not PSD: min eigenvalue {eig.eigenvalues[0]:.3e}")
    terms = [(a[i, j], Qs[i], dag(Qs[j])) for i in range(len(Qs)) for j in range(len(Qs))
             if a[i, j] != 0]

    def act(x):
        out = np.zeros((n, n), dtype=complex)
        for c, qn, qmd in terms:
            qx = qn @ x
            out += c * (2.0 * qx @ qmd - x @ qmd @ qn - qmd @ qx)
        return out

    return Superoperator(n, act)


# ---------------------------------------------------------------------------
# compact tensor form
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TensorLindblad:
    dim1: int
    dim2: int
    Qop: np.ndarray
    sigma: np.ndarray
    commutation_residual: float | None = None

    @cached_property
    def sigma_eigen(self) -> HermitianEigen:
        return hermitian_eigen(self.sigma)

    def kraus_blocks(self):
        """Blocks Q_kl = <e_k| Q |e_l> in the sigma eigenbasis, with sigma_l."""
        u = self.sigma_eigen.eigenvectors
        big = np.kron(np.eye(self.dim1), u)
        rot = (dag(big) @ self.Qop @ big).reshape(self.dim1, self.dim2, self.dim1, self.dim2)
        return rot.transpose(1, 3, 0, 2), self.sigma_eigen.eigenvalues


def tensor_lindblad(Qop, sigma, dim1: int, ts: ThermalState | None = None) -> TensorLindblad:
    Qop = np.asarray(Qop, dtype=complex)
    sigma = np.atleast_2d(np.asarray(sigma, dtype=complex))
    dim2 = sigma.shape[0]
    if Qop.shape != (dim1 * dim2, dim1 * dim2):
        raise ShapeError(f"Q has shape {Qop.shape}, expected {(dim1 * dim2,) * 2}")
    scale = max(1.0, float(np.linalg.norm(Qop)))
    if np.linalg.norm(Qop - dag(Qop)) > 1e-12 * scale:
        raise ConstructionError("tensor operator must be Hermitian")
    if np.linalg.norm(sigma - dag(sigma)) > 1e-12 * max(1.0, float(np.linalg.norm(sigma))):
        raise ConstructionError("sigma must be Hermitian")
    sig_eig = hermitian_eigen(sigma)
    if sig_eig.eigenvalues[0] < -1e-12 * max(1.0, float(np.linalg.norm(sigma))):
        raise ConstructionError(f"sigma is not PSD: eigenvalue {sig_eig.eigenvalues[0]:.3e}")
    res = None
    if ts is not None:
        res = commutation_residual(Qop, ts.rho_hat.rho, sigma)
    tl = TensorLindblad(dim1, dim2, hermitize(Qop), hermitize(sigma), res)
    tl.__dict__["sigma_eigen"] = sig_eig
    return tl


def commutation_residual(Qop, rho_hat, sigma) -> float:
    prod = np.kron(rho_hat, sigma)
    return float(np.linalg.norm(Qop @ prod - prod @ Qop))


def make_tensor_lindblad(tl: TensorLindblad) -> Superoperator:
    """L(rho) = -Tr_2 [Q, [Q, rho (x) sigma]]."""
    Q, sigma, d1, d2 = tl.Qop, tl.sigma, tl.dim1, tl.dim2
    QQ = Q @ Q

    def act(rho):
        x = np.kron(rho, sigma)
        inner = QQ @ x - 2.0 * Q @ x @ Q + x @ QQ
        return -partial_trace_2(inner, d1, d2)

    return Superoperator(d1, act)


def kraus_tensor_lindblad(tl: TensorLindblad) -> Superoperator:
    """Same generator through sum_kl sigma_l ([Q_kl rho, Q_kl*] + [Q_kl, rho Q_kl*])."""
    blocks, s = tl.kraus_blocks()
    terms = [(s[l], blocks[k, l]) for k in range(tl.dim2) for l in range(tl.dim2)
             if np.any(blocks[k, l] != 0)]
    return Superoperator(tl.dim1, lambda rho: sum((w * dissipator(q, rho) for w, q in terms),
                                                 np.zeros_like(rho)))


def block_tensor(block: BuildingBlock, ts: ThermalState | None = None) -> TensorLindblad:
    """Compact form of a single block: W (x) 1, or Q* (x) E_12 + Q (x) E_21 with sigma_{beta omega}."""
    if isinstance(block, SWBlock):
        return tensor_lindblad(block.W, np.eye(1), block.W.shape[0], ts)
    Q = block.pair.Q
    n = Q.shape[0]
    e12 = np.array([[0, 1], [0, 0]], dtype=complex)
    Qop = np.kron(dag(Q), e12) + np.kron(Q, e12.T)
    x = block.beta * block.pair.omega / 2
    sigma = np.diag([math.exp(x), math.exp(-x)]).astype(complex)
    return tensor_lindblad(Qop, sigma, n, ts)


def y_sigma(tl: TensorLindblad) -> TensorLindblad:
    """Dual representation (sigma^{1/2} T_sigma Q sigma^{1/2}, sigma^{-1}) of the same generator."""
    eig = tl.sigma_eigen
    s = eig.eigenvalues
    if s[0] <= 0:
        raise DomainError(f"sigma must be positive definite; eigenvalue {s[0]:.3e}")
    root = eig.apply(lambda _: np.sqrt(s))
    inv = hermitize(eig.apply(lambda _: 1.0 / s))
    big = np.kron(np.eye(tl.dim1), root)
    Qy = big @ partial_transpose_sigma(tl.Qop, eig, tl.dim1) @ big
    out = TensorLindblad(tl.dim1, tl.dim2, hermitize(Qy), inv, None)
    out.__dict__["sigma_eigen"] = HermitianEigen(1.0 / s, eig.eigenvectors, float(np.linalg.norm(1 / s)))
    return out


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DBCReport:
    stationarity_residual: float
    symmetry_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.stationarity_residual <= self.tol and self.symmetry_residual <= self.tol


def dbc_check(L: Superoperator, ts: ThermalState, tol: float = 1e-10) -> DBCReport:
    """Stationarity of rho_hat and L(A rho_hat) = L*(A) rho_hat over matrix units A."""
    n = L.dim
    rho_hat = ts.rho_hat.rho
    S = L.matrix
    Sd = dag(S)
    stat = float(np.linalg.norm(L(rho_hat)))
    # column k of (A -> L(A rho_hat)) and (A -> L*(A) rho_hat) for A = E_k
    right = np.kron(np.eye(n), rho_hat.T)  # vec(A rho) = (1 (x) rho^T) vec(A)
    lhs = S @ right
    rhs = right @ Sd
    sym = float(np.max(np.linalg.norm(lhs - rhs, axis=0)))
    return DBCReport(stat, sym, tol)


@dataclass(frozen=True)
class CPReport:
    min_eigenvalues: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(v >= -self.tol for v in self.min_eigenvalues.values())


def choi_matrix(S: np.ndarray, n: int):
    """sum_ij E_ij (x) Phi(E_ij) for the map with row-major matrix S."""
    return S.reshape(n, n, n, n).transpose(2, 0, 3, 1).reshape(n * n, n * n)


def cp_check(L: Superoperator, t_sample: float = 0.1, tol: float = 1e-9) -> CPReport:
    n = L.dim
    S = L.matrix
    mins = {}
    for t in (t_sample, t_sample / 10):
        choi = hermitize(choi_matrix(expm(t * S), n))
        mins[t] = float(hermitian_eigen(choi, tol=1e-8).eigenvalues[0])
    return CPReport(mins, tol)


def superoperator_distance(a: Superoperator, b: Superoperator) -> float:
    return float(np.linalg.norm(a.matrix - b.matrix))


# ---------------------------------------------------------------------------
# decomposition of a DBC generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Decomposition:
    blocks: list
    tensor: TensorLindblad
    coefficients: np.ndarray  # M_{ij,mn} in the dyads h_i h_j* of H
    blocks_residual: float
    tensor_residual: float
    coefficient_residual: float
    commutation_residual: float


def _cluster_labels(values, tol):
    order = np.argsort(values, kind="stable")
    labels = np.empty(len(values), dtype=int)
    reps: list[float] = []
    for idx in order:
        if reps and abs(values[idx] - reps[-1]) <= tol:
            labels[idx] = len(reps) - 1
        else:
            reps.append(values[idx])
            labels[idx] = len(reps) - 1
    return labels, np.array(reps)


def _psd_sqrt(block, tol):
    eig = hermitian_eigen(hermitize(block), tol=1e-8)
    lam = eig.eigenvalues
    if lam[0] < -tol:
        raise RepresentationError(
            f"coefficient matrix has eigenvalue {lam[0]:.3e}: not completely positive, "
            "so no detailed-balance representation exists")
    return eig, np.clip(lam, 0.0, None)


def decompose_dbc(L: Superoperator, ts: ThermalState, tol: float = 1e-9,
                  group_tol: float = GROUP_TOL) -> Decomposition:
    """Write a detailed-balance generator as blocks and as a compact tensor form.

    The coefficients ``M`` of ``L = sum M_{ij,mn}([P_ij ., P_mn*] + [P_ij, . P_mn*])``
    over the dyads ``P_ij = h_i h_j*`` are read off the (unique) process matrix
    of ``L`` after removing the identity direction, which is the only gauge
    freedom once the Hamiltonian part vanishes.  Symmetries forced by detailed
    balance are then imposed by averaging, and both representations are
    rebuilt and compared against ``L``.
    """
    rep = dbc_check(L, ts, tol)
    if not rep.passed:
        raise PreconditionError(
            f"generator fails detailed balance: stationarity {rep.stationarity_residual:.3e}, "
            f"symmetry {rep.symmetry_residual:.3e}")
    n = L.dim
    beta = ts.beta
    U = ts.h_eigen.eigenvectors
    eps = ts.eps
    r = ts.populations
    scale = max(1.0, float(np.linalg.norm(L.matrix)))

    # L in the eigenbasis of H, reshuffled: X[(i,j),(m,n)] = <h_i| L(h_j h_n*) |h_m>
    S = L.matrix
    R = np.kron(U, U.conj())  # vec(U A U*) = (U (x) conj U) vec(A)
    Se = dag(R) @ S @ R
    X = Se.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
    u = np.eye(n).reshape(-1) / math.sqrt(n)
    P = np.eye(n * n) - np.outer(u, u)
    M = 0.5 * (P @ X @ P)

    # detailed-balance structure: Hermitian, block diagonal in omega, KMS pairing
    omega_ij = (eps[None, :] - eps[:, None]).reshape(-1)  # omega of P_ij is eps_j - eps_i
    otol = group_tol * max(1.0, float(np.linalg.norm(ts.H)))
    labels, reps = _cluster_labels(omega_ij, otol)
    same = labels[:, None] == labels[None, :]
    M = hermitize(np.where(same, M, 0.0))
    swap = np.arange(n * n).reshape(n, n).T.reshape(-1)  # (i,j) -> (j,i)
    kms = np.exp(beta * omega_ij)[:, None]
    mirrored = M[np.ix_(swap, swap)].T  # mirrored[(ij),(mn)] = M[(nm),(ji)]
    M = 0.5 * (M + kms * mirrored)
    M = hermitize(M)

    def from_coeffs(C):
        # sandwich part 2 C_{ij,mn} P_ij a P_mn*, back in the vec layout
        Sg = 2.0 * C.reshape(n, n, n, n).transpose(0, 2, 1, 3).reshape(n * n, n * n)
        # anticommutator part with G = sum C_{ij,mn} P_mn* P_ij, P_mn* P_ij = delta_mi h_n h_j*
        G = np.einsum("ijin->nj", C.reshape(n, n, n, n))
        Sg = Sg - np.kron(G, np.eye(n)) - np.kron(np.eye(n), G.T)
        return R @ Sg @ dag(R)

    coeff_res = float(np.linalg.norm(from_coeffs(M) - S))
    if coeff_res > tol * scale:
        raise RepresentationError(f"coefficient fit residual {coeff_res:.3e} exceeds tolerance")

    # square root of the rescaled coefficients, sector by sector
    ii = np.repeat(np.arange(n), n)
    inv_sqrt = 1.0 / np.sqrt(r[ii])
    Mt = inv_sqrt[:, None] * M * inv_sqrt[None, :]
    root = np.zeros_like(Mt)
    blocks: list = []
    for lab in range(len(reps)):
        idx = np.flatnonzero(labels == lab)
        sub = Mt[np.ix_(idx, idx)]
        if np.linalg.norm(sub) == 0:
            continue
        eig, lam = _psd_sqrt(sub, tol * scale)
        V = eig.eigenvectors
        root[np.ix_(idx, idx)] = (V * np.sqrt(lam)) @ dag(V)
        omega = float(reps[lab])
        if omega < -otol:
            continue
        # blocks from the unscaled coefficients of this sector
        msub = hermitize(M[np.ix_(idx, idx)])
        meig = hermitian_eigen(msub, tol=1e-8)
        cut = tol * scale
        for lam_k, vec in zip(meig.eigenvalues, meig.eigenvectors.T):
            if lam_k <= cut:
                continue
            F = np.zeros(n * n, dtype=complex)
            F[idx] = vec
            F = U @ F.reshape(n, n) @ dag(U)
            if abs(omega) <= otol:
                tr2 = np.trace(dag(F) @ dag(F))
                if abs(tr2) > 0:
                    F = F * np.exp(0.5j * np.angle(tr2))
                Xh = hermitize(F)
                Yh = hermitize(-1j * F)
                for W in (Xh, Yh):
                    W = math.sqrt(lam_k) * W
                    if np.linalg.norm(W) ** 2 > cut:
                        blocks.append(SWBlock(W, float(np.linalg.norm(W @ ts.H - ts.H @ W))))
            else:
                Q = math.sqrt(lam_k * math.exp(-beta * omega / 2)) * F
                res = float(np.linalg.norm(Q @ ts.H - ts.H @ Q - omega * Q))
                blocks.append(MQBlock(beta, EigenpairQ(omega, Q, res)))
    blocks.sort(key=lambda b: b.sort_key)

    # A_{ij,kl} = sqrt(r_i / r_k) (M~^{1/2})_{ij,kl};  Q = sum A_{ij,kl} P_ij (x) P_kl*
    kk = ii
    A = np.sqrt(r[ii])[:, None] * root / np.sqrt(r[kk])[None, :]
    A4 = A.reshape(n, n, n, n)  # [i, j, k, l]
    # P_ij (x) P_kl* = (h_i h_j*) (x) (h_l h_k*); in the eigenbasis entry [(i,l),(j,k)]
    Qe = A4.transpose(0, 3, 1, 2).reshape(n * n, n * n)
    UU = np.kron(U, U)
    Qop = hermitize(UU @ Qe @ dag(UU))
    tl = tensor_lindblad(Qop, ts.rho_hat.rho, n, ts)

    target = L.matrix
    blocks_res = float(np.linalg.norm(
        sum_superoperators([b.generator() for b in blocks], n).matrix - target))
    tensor_res = float(np.linalg.norm(make_tensor_lindblad(tl).matrix - target))
    return Decomposition(blocks, tl, M, blocks_res, tensor_res, coeff_res,
                         float(tl.commutation_residual))
