import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qgflow.rng import SplitMix64

settings.register_profile("qgflow", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qgflow")


@pytest.fixture
def rng():
    return SplitMix64(20240611)


def random_hermitian_np(gen: np.random.Generator, n, scale=1.0):
    x = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
    return scale * 0.5 * (x + x.conj().T)


def random_density_np(gen: np.random.Generator, n, floor=1e-2):
    x = gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n))
    r = x @ x.conj().T
    r /= np.trace(r).real
    return (1 - floor * n) * r + floor * np.eye(n) if floor * n < 1 else np.eye(n) / n


def vec_sandwich(A, B):
    """Row-major matrix of X -> A X B."""
    return np.kron(A, np.asarray(B).T)


def dense_dissipator(Q):
    """Matrix of X -> 2 Q X Q* - {Q*Q, X}, assembled with numpy only."""
    n = Q.shape[0]
    Qd = Q.conj().T
    I = np.eye(n)
    return 2 * vec_sandwich(Q, Qd) - vec_sandwich(Qd @ Q, I) - vec_sandwich(I, Qd @ Q)


def simple_spectrum_h(gen: np.random.Generator, n, rotate=True):
    eps = np.cumsum(np.concatenate([[gen.uniform(-1, 0)], 0.2 + gen.uniform(0, 1, n - 1)]))
    if not rotate:
        return np.diag(eps).astype(complex), np.eye(n, dtype=complex), eps
    u, _ = np.linalg.qr(gen.normal(size=(n, n)) + 1j * gen.normal(size=(n, n)))
    return u @ np.diag(eps) @ u.conj().T, u, eps


def random_blocks(gen: np.random.Generator, H, beta, count):
    """Random detailed-balance building blocks for H: S_W and M_{beta,Q} mixtures."""
    from qgflow.lindblad import EigenpairQ, MQBlock, SWBlock, eigenpair_basis, spectral_decompose

    sd = spectral_decompose(H)
    n = H.shape[0]
    blocks = []
    for k in range(count):
        omega = float(sd.omegas[gen.integers(len(sd.omegas))])
        basis = eigenpair_basis(sd, omega)
        c = gen.normal(size=len(basis)) + 1j * gen.normal(size=len(basis))
        Q = sum(ci * p.Q for ci, p in zip(c, basis))
        if abs(omega) < 1e-12 and k % 2 == 0:
            W = 0.5 * (Q + Q.conj().T)
            blocks.append(SWBlock(W, float(np.linalg.norm(W @ H - H @ W))))
        else:
            blocks.append(MQBlock(beta, EigenpairQ(omega, Q, float(np.linalg.norm(Q @ H - H @ Q - omega * Q)))))
    return blocks


NODES, WEIGHTS = np.polynomial.legendre.leggauss(80)


def frac_power(rho, s):
    w, v = np.linalg.eigh(rho)
    return (v * np.maximum(w, 0) ** s) @ v.conj().T


def quadrature_D(rho, A, alpha=0.0):
    """int_0^1 (e^{a/2} rho)^s A (e^{-a/2} rho)^{1-s} ds by Gauss-Legendre on [0, 1]."""
    out = np.zeros_like(A, dtype=complex)
    for x, w in zip(NODES, WEIGHTS):
        s = 0.5 * (x + 1)
        out += 0.5 * w * (math.exp(alpha * s / 2) * frac_power(rho, s) @ A
                          @ (math.exp(-alpha * (1 - s) / 2) * frac_power(rho, 1 - s)))
    return out
