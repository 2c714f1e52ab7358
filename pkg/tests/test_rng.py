import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from qgflow.rng import SplitMix64, random_density, random_hermitian, random_simple_spectrum, random_unitary


def splitmix_reference(seed, count):
    """Same recurrence in numpy uint64 arithmetic, which wraps modulo 2^64."""
    state = np.uint64(seed)
    out = []
    with np.errstate(over="ignore"):
        for _ in range(count):
            state = state + np.uint64(0x9E3779B97F4A7C15)
            z = state
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            out.append(int(z ^ (z >> np.uint64(31))))
    return out


def test_published_stream():
    r = SplitMix64(1234567)
    assert [r.next_u64() for _ in range(5)] == [6457827717110365317, 3203168211198807973,
                                               9817491932198370423, 4593380528125082431,
                                               16408922859458223821]


@given(st.integers(0, 2**64 - 1))
def test_matches_uint64_reference(seed):
    r = SplitMix64(seed)
    assert [r.next_u64() for _ in range(4)] == splitmix_reference(seed, 4)


def test_uniform_and_normal_ranges():
    r = SplitMix64(0)
    u = np.array([r.uniform() for _ in range(4000)])
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.03
    x = r.normals((4000,))
    assert np.all(np.isfinite(x))
    assert abs(x.mean()) < 0.08 and abs(x.std() - 1) < 0.08


def test_spawn_is_deterministic_and_distinct():
    a = SplitMix64(9)
    s1 = [a.spawn(i).next_u64() for i in range(4)]
    s2 = [SplitMix64(9).spawn(i).next_u64() for i in range(4)]
    assert s1 == s2
    assert len(set(s1)) == 4


@given(st.integers(0, 2**32), st.integers(1, 6))
def test_random_instances(seed, n):
    r = SplitMix64(seed)
    h = random_hermitian(r, n)
    np.testing.assert_allclose(h, h.conj().T)
    rho = random_density(r, n)
    assert abs(np.trace(rho) - 1) < 1e-13
    assert np.linalg.eigvalsh(rho).min() >= 1e-3 - 1e-12
    u = random_unitary(r, n)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-12)
    eps = random_simple_spectrum(r, n, 0.1)
    assert np.all(np.diff(eps) >= 0.1)
    assert math.isfinite(float(eps.sum()))
