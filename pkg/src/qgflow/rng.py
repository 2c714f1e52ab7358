"""Portable SplitMix64 generator and the random instances built from it.

The stream is fully specified so seeds reproduce in any language:

    state  <- state + 0x9E3779B97F4A7C15            (mod 2^64)
    z      <- state
    z      <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (mod 2^64)
    z      <- (z ^ (z >> 27)) * 0x94D049BB133111EB  (mod 2^64)
    output <- z ^ (z >> 31)

Uniform doubles are ``(output >> 11) * 2^-53`` in [0, 1).  Normals use the
Box-Muller transform on two consecutive uniforms, returning the cosine branch
only (one normal per pair, so the stream never carries hidden state).
"""
from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.uniform()

    def normal(self) -> float:
        u1 = self.uniform()
        u2 = self.uniform()
        # 1 - u1 lies in (0, 1], so the log is finite
        return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, shape) -> np.ndarray:
        n = int(np.prod(shape))
        return np.array([self.normal() for _ in range(n)]).reshape(shape)

    def complex_normals(self, shape) -> np.ndarray:
        re = self.normals(shape)
        im = self.normals(shape)
        return re + 1j * im

    def spawn(self, index: int) -> "SplitMix64":
        """Independent child stream for trial ``index``, derived from the current state."""
        child = SplitMix64(self.state ^ ((index + 1) * GOLDEN & MASK64))
        child.next_u64()
        return child


def random_hermitian(rng: SplitMix64, n: int, scale: float = 1.0) -> np.ndarray:
    x = rng.complex_normals((n, n))
    return scale * 0.5 * (x + x.conj().T)


def random_density(rng: SplitMix64, n: int, min_eig: float = 1e-3) -> np.ndarray:
    """Full-rank density matrix (Wishart-like, then mixed with I/n to bound its spectrum)."""
    x = rng.complex_normals((n, n))
    r = x @ x.conj().T
    r = r / np.trace(r).real
    mix = min(1.0, n * min_eig)
    return (1.0 - mix) * r + mix * np.eye(n) / n


def random_simple_spectrum(rng: SplitMix64, n: int, min_gap: float = 0.1) -> np.ndarray:
    """Sorted energies with pairwise gaps at least ``min_gap``."""
    gaps = np.array([min_gap + rng.uniform() for _ in range(n - 1)])
    eps = np.concatenate([[rng.uniform_range(-1.0, 0.0)], gaps]).cumsum()
    return eps


def random_unitary(rng: SplitMix64, n: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.complex_normals((n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))
