"""Acceptance criteria 1-11.

Each criterion is a function returning (passed, detail); the pytest wrapper
times it, prints one PASS/FAIL line and enforces the time budget.  Run the
file directly (``python tests/test_acceptance.py``) for the summary alone.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_blocks, random_hermitian_np, simple_spectrum_h  # noqa: E402
from qgflow.generic import CoupledState, field_condition_residual, field_sensitivity  # noqa: E402
from qgflow.integrator import IntegratorConfig, simulate  # noqa: E402
from qgflow.kubo_mori import miracle_residuals, tensor_miracle_check  # noqa: E402
from qgflow.lindblad import (EigenpairQ, MQBlock, SWBlock, block_tensor, cp_check, dbc_check,  # noqa: E402
                             decompose_dbc, eigenpair_basis, make_MQ, make_SW, make_tensor_lindblad,
                             spectral_decompose, sum_superoperators, tensor_lindblad, y_sigma)
from qgflow.linalg import hermitian_eigen, kron  # noqa: E402
from qgflow.markov import davies_diagonal_oracle, markov_trajectory  # noqa: E402
from qgflow.onsager import gradient_form_check, onsager_simple, onsager_tensor, sum_onsager  # noqa: E402
from qgflow.rng import SplitMix64, random_density  # noqa: E402
from qgflow.scenarios import (HeatBathParams, LindbladFlow, MaxwellBlochParams, QuantumDotParams,  # noqa: E402
                              bloch_generator, bloch_state, bloch_vector, build_damped_qs, build_heat_baths,
                              build_maxwell_bloch_uniform, build_quantum_dot, four_level,
                              four_level_expected_rates, maxwell_gamma, quantum_dot_closed_form,
                              quantum_dot_state)
from qgflow.states import thermal_state  # noqa: E402


def random_pair(gen, H):
    sd = spectral_decompose(H)
    omega = float(sd.omegas[gen.integers(len(sd.omegas))])
    basis = eigenpair_basis(sd, omega)
    Q = sum((gen.normal() + 1j * gen.normal()) * p.Q for p in basis)
    Q = Q / np.linalg.norm(Q)
    return EigenpairQ(omega, Q, float(np.linalg.norm(Q @ H - H @ Q - omega * Q)))


def normalized_blocks(gen, H, beta, count):
    out = []
    for b in random_blocks(gen, H, beta, count):
        if isinstance(b, SWBlock):
            out.append(SWBlock(b.W / np.linalg.norm(b.W), b.residual))
        else:
            Q = b.pair.Q / np.linalg.norm(b.pair.Q)
            out.append(MQBlock(b.beta, EigenpairQ(b.pair.omega, Q, b.pair.residual)))
    return out


def onsager_of(blocks, n):
    parts = []
    for b in blocks:
        if isinstance(b, SWBlock):
            parts.append(onsager_simple(1.0, EigenpairQ(0.0, b.W, b.residual), 0.5))
        else:
            parts.append(onsager_simple(b.beta, b.pair))
    return sum_onsager(parts, n)


def commutant_tensor(gen, rho_hat, sigma, tol=1e-9):
    """Random Hermitian Q on the doubled space commuting with rho_hat (x) sigma."""
    P = kron(rho_hat, sigma)
    eig = hermitian_eigen(P)
    vals, V = eig.eigenvalues, eig.eigenvectors
    X = random_hermitian_np(gen, P.shape[0])
    Xe = V.conj().T @ X @ V
    same = np.abs(vals[:, None] - vals[None, :]) <= tol
    Q = V @ np.where(same, Xe, 0.0) @ V.conj().T
    Q = 0.5 * (Q + Q.conj().T)
    return Q / max(1e-300, np.linalg.norm(Q))


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1():
    gen = np.random.default_rng(101)
    rng = SplitMix64(101)
    worst = {"classic": 0.0, "generalized": 0.0, "tensor": 0.0}
    count = 0
    for k in range(500):
        n = 2 + k % 5
        H, U, eps = simple_spectrum_h(gen, n)
        if k % 7 == 0 and n > 2:  # degenerate spectra too
            eps = eps.copy()
            eps[1] = eps[0]
            H = U @ np.diag(eps) @ U.conj().T
        beta = gen.uniform(-2, 2)
        alpha = gen.uniform(-3, 3)
        pair = random_pair(gen, H)
        rho = random_density(rng, n)
        rep = miracle_residuals(rho, H, beta, pair, alpha)
        ts = thermal_state(H, beta)
        if k % 4 == 0:
            L = sum_superoperators([b.generator() for b in normalized_blocks(gen, H, beta, 2)], n)
            tl = decompose_dbc(L, ts).tensor
        else:
            tl = block_tensor(MQBlock(beta, pair), ts)
        t = tensor_miracle_check(tl, ts, rho)
        worst["classic"] = max(worst["classic"], rep.classic, rep.corollary)
        worst["generalized"] = max(worst["generalized"], rep.generalized)
        worst["tensor"] = max(worst["tensor"], t)
        count += 1
    ok = count >= 500 and max(worst.values()) <= 1e-9
    return ok, f"{count} instances, worst " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items())


def criterion_2():
    gen = np.random.default_rng(202)
    worst_dbc = 0.0
    worst_cp = math.inf
    count = 0
    failures = 0
    for k in range(210):
        n = 2 + k % 3
        H, _, _ = simple_spectrum_h(gen, n)
        beta = gen.uniform(-2, 2)
        ts = thermal_state(H, beta)
        kind = k % 3
        if kind == 0:
            # W commuting with H: a real combination of the spectral projectors
            sd = spectral_decompose(H)
            W = sum(gen.normal() * P for P in sd.projectors)
            L = make_SW(W / np.linalg.norm(W), H)
        elif kind == 1:
            L = make_MQ(beta, random_pair(gen, H), H)
        else:
            sigma = ts.rho_hat.rho if k % 2 else thermal_state(H, gen.uniform(-1, 1)).rho_hat.rho
            Q = commutant_tensor(gen, ts.rho_hat.rho, sigma)
            tl = tensor_lindblad(Q, sigma, n, ts)
            assert tl.commutation_residual <= 1e-9
            L = make_tensor_lindblad(tl)
        d = dbc_check(L, ts, 1e-9)
        c = cp_check(L, 0.1, 1e-9)
        worst_dbc = max(worst_dbc, d.stationarity_residual, d.symmetry_residual)
        worst_cp = min(worst_cp, min(c.min_eigenvalues.values()))
        failures += (not d.passed) + (not c.passed)
        count += 1
    ok = count >= 200 and failures == 0
    return ok, f"{count} generators, worst DBC residual {worst_dbc:.2e}, min Choi eigenvalue {worst_cp:.2e}"


def criterion_3():
    gen = np.random.default_rng(303)
    rng = SplitMix64(303)
    worst = {"simple": 0.0, "tensor": 0.0, "dual": 0.0}
    count = 0
    for k in range(300):
        n = 2 + k % 3
        H, _, _ = simple_spectrum_h(gen, n)
        beta = gen.uniform(-2, 2)
        ts = thermal_state(H, beta)
        blocks = normalized_blocks(gen, H, beta, 1 + k % 3)
        L = sum_superoperators([b.generator() for b in blocks], n)
        tl = decompose_dbc(L, ts).tensor
        rho = random_density(rng, n)
        worst["simple"] = max(worst["simple"], gradient_form_check(onsager_of(blocks, n), rho, ts, L))
        worst["tensor"] = max(worst["tensor"], gradient_form_check(onsager_tensor(tl), rho, ts, L))
        worst["dual"] = max(worst["dual"], gradient_form_check(onsager_tensor(y_sigma(tl)), rho, ts, L))
        count += 1
    ok = count >= 300 and max(worst.values()) <= 1e-8
    return ok, f"{count} instances, worst " + ", ".join(f"{k}={v:.2e}" for k, v in worst.items())


def criterion_4():
    gen = np.random.default_rng(404)
    worst_res = 0.0
    worst_comm = 0.0
    count = 0
    for k in range(120):
        n = (2, 3, 4)[k % 3]
        H, _, _ = simple_spectrum_h(gen, n)
        beta = gen.uniform(-1.5, 1.5)
        ts = thermal_state(H, beta)
        L = sum_superoperators([b.generator() for b in normalized_blocks(gen, H, beta, 1 + k % 4)], n)
        dec = decompose_dbc(L, ts)
        rebuilt = sum_superoperators([b.generator() for b in dec.blocks], n).matrix
        tensor = make_tensor_lindblad(dec.tensor).matrix
        worst_res = max(worst_res, float(np.linalg.norm(rebuilt - L.matrix)),
                        float(np.linalg.norm(tensor - L.matrix)))
        prod = kron(ts.rho_hat.rho, ts.rho_hat.rho)
        worst_comm = max(worst_comm, float(np.linalg.norm(dec.tensor.Qop @ prod - prod @ dec.tensor.Qop)))
        count += 1
    ok = count >= 100 and worst_res <= 1e-8 and worst_comm <= 1e-8
    return ok, f"{count} generators, worst round trip {worst_res:.2e}, worst [Q, rho(x)rho] {worst_comm:.2e}"


def fit_rate(t, y):
    slope, _ = np.polyfit(t, np.log(y), 1)
    return -slope


def criterion_5():
    lines = []
    ok = True
    for gamma, delta in ((1.0, 0.0), (1.0, 1.0), (0.3, 2.0)):
        H, L = bloch_generator(gamma, delta)
        flow = LindbladFlow(H, L, beta=1.0)
        a_eq = bloch_vector(flow.ts.rho_hat.rho)
        traj = simulate(flow, CoupledState(bloch_state([0.7, 0.0, -0.5])),
                        IntegratorConfig(dt=1e-3, t_end=3.0, output_stride=20))
        a = np.array([bloch_vector(r) for r in traj.rhos])
        T2 = 1.0 / fit_rate(traj.times, np.hypot(a[:, 0], a[:, 1]))
        T1 = 1.0 / fit_rate(traj.times, np.abs(a[:, 2] - a_eq[2]))
        e1 = abs(T1 * 2 * gamma - 1)
        e2 = abs(T2 * (gamma + 2 * delta) - 1)
        ok &= e1 <= 1e-3 and e2 <= 1e-3 and T1 >= T2 / 2 - 1e-6
        lines.append(f"(g={gamma},d={delta}) T1 err {e1:.1e} T2 err {e2:.1e}")
    return ok, "; ".join(lines)


def criterion_6():
    worst = 0.0
    coupled_ok = True
    for beta in (0.0, 0.5, 1.0, 2.3, -1.0):
        _, _, L = four_level(beta)
        M = L.matrix
        expected = four_level_expected_rates(beta)
        worst = max(worst, float(np.max(np.abs(0.5 * M - expected))))
        # rho_13 <-> rho_24 coupling present; rho_12 is decoupled from every other entry
        idx = lambda k, l: 4 * k + l  # noqa: E731
        coupled_ok &= abs(M[idx(0, 2), idx(1, 3)]) > 0 and abs(M[idx(1, 3), idx(0, 2)]) > 0
        row = M[idx(0, 1)].copy()
        row[idx(0, 1)] = 0
        coupled_ok &= np.max(np.abs(row)) == 0
    ok = worst <= 1e-12 and coupled_ok
    return ok, f"max |displayed - generator| = {worst:.1e}, coupling pattern {'ok' if coupled_ok else 'wrong'}"


def heat_bath_system():
    H = np.diag([0.0, 1.0, 2.5]).astype(complex)
    sd = spectral_decompose(H)
    pairs = [eigenpair_basis(sd, 1.0)[0], eigenpair_basis(sd, 1.5)[0]]
    return build_heat_baths(H, HeatBathParams([2.0, 3.0], pairs, [1.0, 0.5], exchange=0.2))


def criterion_7():
    sys_ = heat_bath_system()
    # full rank: dS/dt has a log singularity at pure states
    rho0 = 0.7 * np.full((3, 3), 1 / 3, dtype=complex) + 0.1 * np.eye(3)
    traj = simulate(sys_, CoupledState(rho0, [0.8, 1.6]), IntegratorConfig(dt=1e-3, t_end=10.0, output_stride=1))
    dE = float(np.max(np.abs(traj.energy - traj.energy[0])))
    dS_min = float(np.min(np.diff(traj.entropy)))
    h = 1e-3
    idx = np.linspace(2, len(traj.times) - 3, 100).astype(int)
    S = traj.entropy
    worst = 0.0
    for i in idx:
        rate = (-S[i + 2] + 8 * S[i + 1] - 8 * S[i - 1] + S[i - 2]) / (12 * h)
        two_p = sys_.entropy_production(traj.states[i])
        worst = max(worst, abs(rate - two_p) / abs(two_p))
    ok = dE <= 1e-7 and dS_min >= -1e-9 and worst <= 1e-6
    return ok, f"|dE| {dE:.1e}, min step dS {dS_min:.1e}, dS/dt vs 2P* rel {worst:.1e}"


def criterion_8():
    params = QuantumDotParams(eps1=0.0, eps2=1.0, beta_star=1.0, kappa_hat=1.0, w_f=1.0, w_b=2.0)
    sys_ = build_quantum_dot(params)
    rho0 = np.array([[0.2, 0.3], [0.3, 0.8]], dtype=complex)
    traj = simulate(sys_, quantum_dot_state(rho0, 1.5, 0.5), IntegratorConfig(dt=1e-3, t_end=10.0, output_stride=10))
    total = traj.zs.sum(axis=1)
    drift = float(np.max(np.abs(total - total[0])))
    f_up = float(np.max(np.diff(traj.free_energy)))
    positive = bool(np.all(traj.zs > 0))
    gen = np.random.default_rng(808)
    worst = 0.0
    for _ in range(100):
        x = gen.normal(size=(2, 2)) + 1j * gen.normal(size=(2, 2))
        rho = x @ x.conj().T
        rho /= np.trace(rho).real
        q = quantum_dot_state(rho, *gen.uniform(0.05, 4.0, 2))
        worst = max(worst, (sys_.vector_field_operator_form(q) - quantum_dot_closed_form(params, q)).norm())
    ok = drift <= 1e-10 and f_up <= 1e-12 and positive and worst <= 1e-9
    return ok, (f"c_f+c_b drift {drift:.1e}, max F increase {f_up:.1e}, densities positive {positive}, "
                f"closed form {worst:.1e}")


def criterion_9():
    gen = np.random.default_rng(909)
    worst = 0.0
    for n in (2, 3, 4, 5):
        H, U, eps = simple_spectrum_h(gen, n)
        beta = gen.uniform(-1, 1)
        ts = thermal_state(H, beta)
        L = sum_superoperators([b.generator() for b in normalized_blocks(gen, H, beta, 3)], n)
        chain = davies_diagonal_oracle(L, ts)
        p0 = gen.uniform(0.1, 1.0, n)
        p0 /= p0.sum()
        rho0 = U @ np.diag(p0) @ U.conj().T
        traj = simulate(LindbladFlow(H, L, beta), CoupledState(rho0),
                        IntegratorConfig(dt=1e-3, t_end=10.0, output_stride=100))
        pops = np.array([np.real(np.diag(U.conj().T @ r @ U)) for r in traj.rhos])
        ref = markov_trajectory(chain, p0, traj.times)
        worst = max(worst, float(np.max(np.abs(pops - ref))))
    return worst <= 1e-7, f"max |quantum diagonal - Markov| = {worst:.1e}"


def criterion_10():
    H = np.diag([0.0, 1.0, 1.8]).astype(complex)
    sd = spectral_decompose(H)
    pairs = [eigenpair_basis(sd, 1.0)[0], eigenpair_basis(sd, 1.8)[0]]
    pol = np.array([[0.1, 0.0, 0.3], [0.4, -0.2, 0.0], [0.0, 0.5, 0.1]])
    gamma = maxwell_gamma(H, pol)
    gen = np.random.default_rng(1010)
    cond = 0.0
    for p in pairs:
        g = field_sensitivity(p, gamma)
        for _ in range(50):
            cond = max(cond, field_condition_residual(p, gamma, g, gen.normal(size=6)))
    sys_ = build_maxwell_bloch_uniform(H, MaxwellBlochParams(0.9, pol, pairs, [1.0, 0.4]))
    rho0 = np.full((3, 3), 1 / 3, dtype=complex)
    cfg = IntegratorConfig(dt=1e-3, t_end=5.0, output_stride=10)
    traj = simulate(sys_, CoupledState(rho0, [0.3, -0.2, 0.5, 0.1, 0.0, -0.4]), cfg)
    f_up = float(np.max(np.diff(traj.free_energy)))
    zero = build_maxwell_bloch_uniform(H, MaxwellBlochParams(0.9, np.zeros((3, 3)), pairs, [1.0, 0.4]))
    t0 = simulate(zero, CoupledState(rho0, [0.3, -0.2, 0.5, 0.1, 0.0, -0.4]), cfg)
    t1 = simulate(build_damped_qs(H, 0.9, pairs, [1.0, 0.4]), CoupledState(rho0), cfg)
    diff = float(np.max(np.abs(t0.rhos - t1.rhos)))
    ok = cond <= 1e-10 and f_up <= 1e-12 and diff <= 1e-9
    return ok, f"field condition {cond:.1e}, max F increase {f_up:.1e}, Gamma=0 vs damped QS {diff:.1e}"


def criterion_11():
    gen = np.random.default_rng(1111)
    worst = 0.0
    count = 0
    for k in range(110):
        if k % 2:
            d1, d2 = 1 + k % 3, 1 + (k // 3) % 3
            Q = random_hermitian_np(gen, d1 * d2)
            Q /= np.linalg.norm(Q)
            x = gen.normal(size=(d2, d2)) + 1j * gen.normal(size=(d2, d2))
            sigma = x @ x.conj().T + 0.1 * np.eye(d2)
            sigma /= np.trace(sigma).real
            tl = tensor_lindblad(Q, sigma, d1)
        else:
            n = 2 + k % 3
            H, _, _ = simple_spectrum_h(gen, n)
            beta = gen.uniform(-1.5, 1.5)
            ts = thermal_state(H, beta)
            L = sum_superoperators([b.generator() for b in normalized_blocks(gen, H, beta, 2)], n)
            tl = decompose_dbc(L, ts).tensor
        a = make_tensor_lindblad(tl).matrix
        b = make_tensor_lindblad(y_sigma(tl)).matrix
        worst = max(worst, float(np.linalg.norm(a - b)))
        count += 1
    return count >= 100 and worst <= 1e-10, f"{count} instances, worst generator difference {worst:.1e}"


CRITERIA = {
    1: ("miracle identities", criterion_1, 30),
    2: ("DBC construction", criterion_2, 30),
    3: ("gradient structure", criterion_3, 60),
    4: ("decomposition round trip", criterion_4, 120),
    5: ("Bloch rates", criterion_5, 10),
    6: ("four-level example", criterion_6, 5),
    7: ("heat baths", criterion_7, 60),
    8: ("quantum dot", criterion_8, 30),
    9: ("Davies diagonal oracle", criterion_9, 30),
    10: ("Maxwell-Bloch uniform", criterion_10, 30),
    11: ("dual tensor representation", criterion_11, 20),
}


def evaluate(number):
    name, fn, budget = CRITERIA[number]
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    passed = bool(ok) and elapsed < budget
    line = (f"criterion {number:2d} {name:28s} {'PASS' if passed else 'FAIL'}  "
            f"[{elapsed:6.2f}s / {budget}s] {detail}")
    return passed, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    passed, line = evaluate(number)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [evaluate(k) for k in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
