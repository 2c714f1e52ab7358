"""Command line entry point: ``simulate``, ``check`` and ``decompose``.

Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 integration failure.
Reports go to stdout as JSON; diagnostics go to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import config as cfgmod
from .config import ScenarioConfig, build_system, dissipative_generator, load_config, matrix_json
from .errors import (ConfigError, ConstructionError, DomainError, IntegrationError, PreconditionError,
                     RepresentationError, ShapeError, SymmetryError)
from .generic import CoupledState, DampedSystem, GenericSystem, nic_check, slack_generic
from .integrator import simulate
from .kubo_mori import miracle_residuals, tensor_miracle_check
from .lindblad import (EigenpairQ, MQBlock, SWBlock, Superoperator, block_tensor, cp_check, dbc_check,
                       decompose_dbc, eigenpair_basis, spectral_decompose)
from .onsager import gradient_form_check, onsager_simple, onsager_tensor, sum_onsager
from .rng import SplitMix64, random_density
from .states import thermal_state

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_INTEGRATION = 0, 1, 2, 3
SUITES = ("dbc", "cp", "nic", "identities", "gradient")


def _diag(**payload):
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QGFLOW_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(fn, trials: int, seed: int) -> list:
    """Evaluate ``fn(index, rng)`` for each trial, in parallel, merged by index."""
    master = SplitMix64(seed)
    rngs = [master.spawn(i) for i in range(trials)]
    workers = min(_threads(), trials)
    if workers <= 1:
        return [fn(i, r) for i, r in enumerate(rngs)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(trials), rngs))


def _random_pair(rng, sd, H) -> EigenpairQ:
    omega = float(sd.omegas[int(rng.uniform() * len(sd.omegas))])
    basis = eigenpair_basis(sd, omega)
    coeffs = rng.complex_normals((len(basis),))
    Q = sum(c * p.Q for c, p in zip(coeffs, basis))
    Q = Q / np.linalg.norm(Q)
    return EigenpairQ(omega, Q, float(np.linalg.norm(Q @ H - H @ Q - omega * Q)))


# ---------------------------------------------------------------------------
# suites; each returns (trial records, failing case or None)
# ---------------------------------------------------------------------------


def _dissipative(cfg: ScenarioConfig) -> Superoperator:
    if cfg.scenario not in ("lindblad", "damped_qs"):
        raise ConfigError(f"this suite needs a lindblad or damped_qs scenario, not {cfg.scenario}")
    return dissipative_generator(cfg)


def suite_dbc(cfg, trials, seed, tol):
    L = _dissipative(cfg)
    rep = dbc_check(L, thermal_state(cfg.H, cfg.beta), tol)
    rec = {"index": 0, "stationarity": rep.stationarity_residual, "symmetry": rep.symmetry_residual,
           "passed": rep.passed}
    case = None if rep.passed else {"generator": matrix_json(L.matrix), "hamiltonian": matrix_json(cfg.H),
                                    "beta": cfg.beta}
    return [rec], case


def suite_cp(cfg, trials, seed, tol):
    L = _dissipative(cfg)
    rep = cp_check(L, 0.1, tol)
    rec = {"index": 0, "min_choi_eigenvalue": float(min(rep.min_eigenvalues.values())),
           "sample_times": sorted(rep.min_eigenvalues), "passed": rep.passed}
    case = None if rep.passed else {"generator": matrix_json(L.matrix)}
    return [rec], case


def _random_macro(rng, cfg: ScenarioConfig, z0):
    z0 = np.asarray(z0, dtype=float)
    if cfg.scenario in ("heat_baths", "quantum_dot"):
        return z0 * np.exp(0.3 * rng.normals(z0.shape))
    return z0 + 0.5 * rng.normals(z0.shape)


def suite_nic(cfg, trials, seed, tol):
    system, q0 = build_system(cfg)
    if isinstance(system, DampedSystem):
        system = slack_generic(system)
        q0 = system.augment(q0)
    elif not isinstance(system, GenericSystem):
        raise ConfigError("nic needs a coupled scenario (heat_baths, isothermal, quantum_dot, "
                          "maxwell_bloch_uniform or damped_qs)")
    n = cfg.dim

    def trial(i, rng):
        q = CoupledState(random_density(rng, n), _random_macro(rng, cfg, q0.z))
        rep = nic_check(system, q, tol)
        return {"index": i, "J_dS": rep.J_dS, "K_dE": rep.K_dE, "passed": rep.passed,
                "_case": {"rho": matrix_json(q.rho), "z": q.z.tolist()}}

    return _collect(run_trials(trial, trials, seed))


def suite_identities(cfg, trials, seed, tol):
    H, beta, n = cfg.H, cfg.beta, cfg.dim
    sd = spectral_decompose(H)
    ts = thermal_state(H, beta)

    def trial(i, rng):
        rho = random_density(rng, n)
        pair = _random_pair(rng, sd, H)
        alpha = rng.uniform_range(-3.0, 3.0)
        rep = miracle_residuals(rho, H, beta, pair, alpha)
        tensor = tensor_miracle_check(block_tensor(MQBlock(beta, pair), ts), ts, rho)
        worst = max(rep.worst, tensor)
        return {"index": i, "classic": rep.classic, "generalized": rep.generalized,
                "corollary": rep.corollary, "tensor": tensor, "alpha": alpha, "passed": worst <= tol,
                "_case": {"rho": matrix_json(rho), "Q": matrix_json(pair.Q), "omega": pair.omega,
                          "alpha": alpha}}

    return _collect(run_trials(trial, trials, seed))


def _onsager_for(cfg: ScenarioConfig):
    """Onsager operator matching the dissipative generator, with that generator."""
    n, H, beta = cfg.dim, cfg.H, cfg.beta
    ts = thermal_state(H, beta)
    parts = [onsager_simple(beta, pair, float(spec.get("kappa", 1.0))) for pair, spec in cfg.couplings]
    if cfg.scenario == "lindblad":
        p = cfg.params
        for k, w in enumerate(p.get("sw", [])):
            W = cfgmod.complex_matrix(w, (n, n), f"scenario_params/sw/{k}")
            # S_W is half of M_{beta,W} with omega = 0
            parts.append(onsager_simple(beta, EigenpairQ(0.0, W, float(np.linalg.norm(W @ H - H @ W))), 0.5))
        rest = dict(p)
        rest.pop("sw", None)
        rest.pop("hamiltonian_part", None)
        if rest:
            sub = ScenarioConfig(cfg.raw, n, H, beta, cfg.k_B, "lindblad", rest)
            L_rest = dissipative_generator(sub)
            dec = decompose_dbc(L_rest, ts)
            parts.append(onsager_tensor(dec.tensor))
    # coupled scenarios: compare against the generator the couplings induce
    L = dissipative_generator(cfg) if cfg.scenario in ("lindblad", "damped_qs") else None
    return sum_onsager(parts, n), L, ts


def suite_gradient(cfg, trials, seed, tol):
    try:
        onsager, L, ts = _onsager_for(cfg)
    except (PreconditionError, RepresentationError) as exc:
        # no gradient structure exists for this generator
        return [{"index": 0, "passed": False, "error": str(exc)}], {"reason": str(exc)}
    n = cfg.dim

    def trial(i, rng):
        rho = random_density(rng, n)
        res = gradient_form_check(onsager, rho, ts, generator=L)
        return {"index": i, "residual": res, "passed": res <= tol, "_case": {"rho": matrix_json(rho)}}

    return _collect(run_trials(trial, trials, seed))


def _collect(records):
    case = None
    for r in records:
        c = r.pop("_case")
        if not r["passed"] and case is None:
            case = {"index": r["index"], **c}
    return records, case


SUITE_FUNCS = {"dbc": suite_dbc, "cp": suite_cp, "nic": suite_nic, "identities": suite_identities,
               "gradient": suite_gradient}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_simulate(config_path, out_path) -> int:
    cfg = load_config(config_path)
    system, q0 = build_system(cfg)
    traj = simulate(system, q0, cfg.integrator)
    traj.to_csv(out_path)
    _diag(status="ok", command="simulate", snapshots=len(traj.times), halvings=traj.halvings,
          max_trace_err=float(np.nanmax(traj.trace_err)), max_herm_err=float(np.nanmax(traj.herm_err)),
          min_eig=float(np.nanmin(traj.min_eig)))
    return EXIT_OK


def cmd_check(config_path, which, trials=None, seed=None, tol=None, out=None) -> int:
    out = out or sys.stdout
    if which not in SUITES:
        raise ConfigError(f"unknown suite {which!r}; choose from {', '.join(SUITES)}")
    cfg = load_config(config_path)
    trials = cfg.check.trials if trials is None else trials
    seed = cfg.seed if seed is None else seed
    tol = cfg.check.tol if tol is None else tol
    if trials < 1 or not tol > 0:
        raise ConfigError("trials must be positive and tol must be positive")
    records, case = SUITE_FUNCS[which](cfg, trials, seed, tol)
    passed = all(r["passed"] for r in records)
    report = {"suite": which, "passed": passed, "tol": tol, "seed": seed, "trials": records}
    if case is not None:
        report["failing_case"] = {"hamiltonian": matrix_json(cfg.H), "beta": cfg.beta, **case}
    print(json.dumps(report, sort_keys=True), file=out)
    return EXIT_OK if passed else EXIT_FAIL


def _block_json(b):
    if isinstance(b, SWBlock):
        return {"kind": "SW", "W": matrix_json(b.W), "commutation_residual": b.residual}
    return {"kind": "MQ", "beta": b.beta, "omega": b.pair.omega, "Q": matrix_json(b.pair.Q),
            "eigenpair_residual": b.pair.residual}


def _reingest(cfg: ScenarioConfig, blocks) -> dict:
    raw = {k: v for k, v in cfg.raw.items() if k not in ("couplings", "scenario_params", "scenario")}
    raw["scenario"] = "lindblad"
    raw["couplings"] = [{"type": "eigenpair", "omega": b.pair.omega, "Q": matrix_json(b.pair.Q)}
                        for b in blocks if isinstance(b, MQBlock)]
    raw["scenario_params"] = {"sw": [matrix_json(b.W) for b in blocks if isinstance(b, SWBlock)],
                              "hamiltonian_part": cfg.params.get("hamiltonian_part", True)}
    return raw


def cmd_decompose(config_path, out_path, out=None) -> int:
    out = out or sys.stdout
    cfg = load_config(config_path)
    L = _dissipative(cfg)
    ts = thermal_state(cfg.H, cfg.beta)
    try:
        dec = decompose_dbc(L, ts, cfg.check.tol)
    except (PreconditionError, RepresentationError) as exc:
        rep = dbc_check(L, ts, cfg.check.tol)
        print(json.dumps({"passed": False, "error": str(exc),
                          "stationarity_residual": rep.stationarity_residual,
                          "symmetry_residual": rep.symmetry_residual}, sort_keys=True), file=out)
        return EXIT_FAIL
    doc = {
        "blocks": [_block_json(b) for b in dec.blocks],
        "tensor": {"dim1": dec.tensor.dim1, "dim2": dec.tensor.dim2, "Q": matrix_json(dec.tensor.Qop),
                   "sigma": matrix_json(dec.tensor.sigma)},
        "sigma": "thermal_state",
        "residuals": {"blocks": dec.blocks_residual, "tensor": dec.tensor_residual,
                      "coefficients": dec.coefficient_residual, "commutation": dec.commutation_residual},
        "config": _reingest(cfg, dec.blocks),
    }
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    print(json.dumps({"passed": True, "blocks": len(dec.blocks), **doc["residuals"]}, sort_keys=True),
          file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgflow", description="Detailed-balance quantum dynamics toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("simulate", help="integrate a scenario and write a CSV trajectory")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    c = sub.add_parser("check", help="run a verification suite")
    c.add_argument("suite", choices=SUITES)
    c.add_argument("--config", required=True)
    c.add_argument("--trials", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--tol", type=float)
    d = sub.add_parser("decompose", help="write a detailed-balance generator as blocks and tensor form")
    d.add_argument("--config", required=True)
    d.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out)
        if args.command == "check":
            return cmd_check(args.config, args.suite, args.trials, args.seed, args.tol)
        return cmd_decompose(args.config, args.out)
    except IntegrationError as exc:
        _diag(status="error", kind="integration", message=str(exc))
        return EXIT_INTEGRATION
    except (ConfigError, ShapeError, DomainError, ConstructionError, SymmetryError,
            PreconditionError) as exc:
        _diag(status="error", kind="validation", error=type(exc).__name__, message=str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _diag(status="error", kind="io", message=str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
