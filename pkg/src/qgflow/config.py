"""JSON scenario configuration: schema, parsing and system assembly.

Complex matrices are objects ``{"real": [[...]], "imag": [[...]]}`` with
row-major nested lists; ``imag`` may be omitted for real matrices.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import jsonschema
import numpy as np

from .errors import ConfigError, ConstructionError, DomainError, ShapeError
from .generic import CoupledState
from .integrator import IntegratorConfig
from .lindblad import (EigenpairQ, Superoperator, eigenpair, eigenpair_basis, make_MQ, make_SW,
                       spectral_decompose, sum_superoperators)
from .scenarios import (HeatBathParams, IsothermalParams, LindbladFlow, MaxwellBlochParams,
                        QuantumDotParams, bloch_generator, build_damped_qs, build_heat_baths,
                        build_isothermal, build_maxwell_bloch_uniform, build_quantum_dot)

SCHEMA_VERSION = 1
SCENARIOS = ("lindblad", "damped_qs", "heat_baths", "isothermal", "quantum_dot", "maxwell_bloch_uniform")

_MATRIX = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}},
}
_CMATRIX = {
    "type": "object",
    "properties": {"real": _MATRIX, "imag": _MATRIX},
    "required": ["real"],
    "additionalProperties": False,
}
_VECTOR = {"type": "array", "items": {"type": "number"}}
_COUPLING_COMMON = {
    "omega": {"type": "number"},
    "kappa": {"type": "number", "minimum": 0},
    "bath": {"type": "integer", "minimum": 0},
    "a": _VECTOR,
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "dim": {"type": "integer", "minimum": 1},
        "hamiltonian": _CMATRIX,
        "beta": {"type": "number"},
        "k_B": {"type": "number", "exclusiveMinimum": 0},
        "couplings": {
            "type": "array",
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "properties": {"type": {"const": "eigenpair"}, "Q": _CMATRIX, **_COUPLING_COMMON},
                        "required": ["type", "Q"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {"type": {"const": "auto"}, "index": {"type": "integer", "minimum": 0},
                                       **_COUPLING_COMMON},
                        "required": ["type", "omega"],
                        "additionalProperties": False,
                    },
                ]
            },
        },
        "scenario": {"enum": list(SCENARIOS)},
        "scenario_params": {"type": "object"},
        "integrator": {
            "type": "object",
            "properties": {
                "method": {"enum": ["rk4", "heun"]},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "output_stride": {"type": "integer", "minimum": 1},
                "domain_guard": {"type": "boolean"},
                "monitors": {
                    "type": "object",
                    "properties": {k: {"type": "boolean"} for k in
                                   ("trace", "hermiticity", "positivity", "energy", "entropy", "free_energy")},
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "rho0": _CMATRIX,
        "check": {
            "type": "object",
            "properties": {
                "trials": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["schema_version", "dim", "hamiltonian", "scenario"],
    "additionalProperties": False,
}

_PARAM_SCHEMAS: dict[str, dict] = {
    "lindblad": {
        "type": "object",
        "properties": {
            "bloch": {
                "type": "object",
                "properties": {"gamma": {"type": "number", "minimum": 0},
                               "delta": {"type": "number", "minimum": 0}},
                "required": ["gamma", "delta"],
                "additionalProperties": False,
            },
            "sw": {"type": "array", "items": _CMATRIX},
            "superoperator": _CMATRIX,
            "hamiltonian_part": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "damped_qs": {"type": "object", "properties": {}, "additionalProperties": False},
    "heat_baths": {
        "type": "object",
        "properties": {
            "capacities": {**_VECTOR, "minItems": 1},
            "exchange": {"type": "number", "minimum": 0},
            "theta0": _VECTOR,
        },
        "required": ["capacities", "theta0"],
        "additionalProperties": False,
    },
    "isothermal": {
        "type": "object",
        "properties": {
            "stiffness": {**_VECTOR, "minItems": 1},
            "z0": _VECTOR,
            "J_ma": _MATRIX,
            "K_ma": _MATRIX,
            "gamma": {"type": "array", "items": _CMATRIX},
        },
        "required": ["stiffness", "z0"],
        "additionalProperties": False,
    },
    "quantum_dot": {
        "type": "object",
        "properties": {
            "kappa_hat": {"type": "number", "minimum": 0},
            "w_f": {"type": "number"},
            "w_b": {"type": "number"},
            "c0": {**_VECTOR, "minItems": 2, "maxItems": 2},
        },
        "required": ["c0"],
        "additionalProperties": False,
    },
    "maxwell_bloch_uniform": {
        "type": "object",
        "properties": {
            "polarization": _MATRIX,
            "E0": {**_VECTOR, "minItems": 3, "maxItems": 3},
            "H0": {**_VECTOR, "minItems": 3, "maxItems": 3},
        },
        "required": ["polarization"],
        "additionalProperties": False,
    },
}


def complex_matrix(obj, shape=None, name="matrix") -> np.ndarray:
    re = np.asarray(obj["real"], dtype=float)
    im = np.asarray(obj.get("imag", np.zeros_like(re)), dtype=float)
    if re.ndim != 2 or re.shape != im.shape:
        raise ShapeError(f"{name}: real and imag parts must be matrices of equal shape")
    if shape is not None and re.shape != shape:
        raise ShapeError(f"{name} has shape {re.shape}, expected {shape}")
    return re + 1j * im


def matrix_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"real": m.real.tolist(), "imag": m.imag.tolist()}


@dataclass
class CheckSettings:
    trials: int = 20
    tol: float = 1e-9


@dataclass
class ScenarioConfig:
    raw: dict
    dim: int
    H: np.ndarray
    beta: float
    k_B: float
    scenario: str
    params: dict
    couplings: list = field(default_factory=list)  # (EigenpairQ, spec dict)
    integrator: IntegratorConfig | None = None
    seed: int = 0
    rho0: np.ndarray | None = None
    check: CheckSettings = field(default_factory=CheckSettings)


def _validate(instance, schema, where):
    try:
        jsonschema.validate(instance, schema)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"{where}{'/' + path if path else ''}: {exc.message}") from None


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    return parse_config(raw)


def _resolve_couplings(raw, H) -> list:
    sd = None
    out = []
    for k, spec in enumerate(raw.get("couplings", [])):
        if spec["type"] == "eigenpair":
            Q = complex_matrix(spec["Q"], H.shape, f"couplings/{k}/Q")
            try:
                pair = eigenpair(Q, H, spec.get("omega"))
            except ConstructionError as exc:
                raise ConfigError(f"couplings/{k}: {exc}") from None
        else:
            sd = sd or spectral_decompose(H)
            basis = eigenpair_basis(sd, float(spec["omega"]))
            if not basis:
                raise ConfigError(f"couplings/{k}: omega = {spec['omega']} is not an energy difference of H")
            idx = spec.get("index", 0)
            if idx >= len(basis):
                raise ConfigError(f"couplings/{k}: index {idx} exceeds the {len(basis)} available pairs")
            pair = basis[idx]
        out.append((pair, spec))
    return out


def parse_config(raw) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _validate(raw, SCHEMA, "config")
    scenario = raw["scenario"]
    params = raw.get("scenario_params", {})
    _validate(params, _PARAM_SCHEMAS[scenario], "scenario_params")
    n = raw["dim"]
    try:
        H = complex_matrix(raw["hamiltonian"], (n, n), "hamiltonian")
        if np.linalg.norm(H - H.conj().T) > 1e-12 * max(1.0, float(np.linalg.norm(H))):
            raise ConfigError("hamiltonian is not Hermitian")
        beta = float(raw.get("beta", 1.0))
        couplings = _resolve_couplings(raw, H)
        integ = IntegratorConfig(**raw["integrator"]) if "integrator" in raw else IntegratorConfig()
        rho0 = complex_matrix(raw["rho0"], (n, n), "rho0") if "rho0" in raw else None
    except (ShapeError, DomainError) as exc:
        raise ConfigError(str(exc)) from None
    chk = raw.get("check", {})
    return ScenarioConfig(raw, n, H, beta, float(raw.get("k_B", 1.0)), scenario, params, couplings,
                          integ, int(raw.get("seed", 0)), rho0,
                          CheckSettings(chk.get("trials", 20), chk.get("tol", 1e-9)))


def default_rho0(n: int) -> np.ndarray:
    """Projector onto the uniform superposition (1, ..., 1)/sqrt(n)."""
    v = np.ones(n) / math.sqrt(n)
    return np.outer(v, v).astype(complex)


def _kappa(spec) -> float:
    return float(spec.get("kappa", 1.0))


def dissipative_generator(cfg: ScenarioConfig) -> Superoperator:
    """The dissipative generator of a lindblad or damped_qs config (no Hamiltonian part)."""
    n, H, beta = cfg.dim, cfg.H, cfg.beta
    parts = [_kappa(spec) * make_MQ(beta, pair, H) for pair, spec in cfg.couplings]
    p = cfg.params
    if cfg.scenario == "lindblad":
        if "bloch" in p:
            if n != 2 or abs(H[0, 1]) > 0:
                raise ConfigError("bloch needs a diagonal two-level Hamiltonian")
            _, L = bloch_generator(p["bloch"]["gamma"], p["bloch"]["delta"],
                                   (H[0, 0].real, H[1, 1].real), beta)
            parts.append(L)
        for k, w in enumerate(p.get("sw", [])):
            W = complex_matrix(w, (n, n), f"scenario_params/sw/{k}")
            try:
                parts.append(make_SW(W, H))
            except ConstructionError as exc:
                raise ConfigError(f"scenario_params/sw/{k}: {exc}") from None
        if "superoperator" in p:
            S = complex_matrix(p["superoperator"], (n * n, n * n), "scenario_params/superoperator")
            parts.append(Superoperator.from_matrix(S))
    elif cfg.scenario != "damped_qs":
        raise ConfigError(f"scenario {cfg.scenario!r} has no fixed dissipative generator")
    return sum_superoperators(parts, n)


def build_system(cfg: ScenarioConfig):
    """(system, initial state) for the configured scenario."""
    n, H = cfg.dim, cfg.H
    rho0 = cfg.rho0 if cfg.rho0 is not None else default_rho0(n)
    p = cfg.params
    pairs = [pair for pair, _ in cfg.couplings]
    kappas = [_kappa(spec) for _, spec in cfg.couplings]
    try:
        if cfg.scenario == "lindblad":
            L = dissipative_generator(cfg)
            return LindbladFlow(H, L, cfg.beta, p.get("hamiltonian_part", True)), CoupledState(rho0)
        if cfg.scenario == "damped_qs":
            return build_damped_qs(H, cfg.beta, pairs, kappas), CoupledState(rho0)
        if cfg.scenario == "heat_baths":
            M = len(p["capacities"])
            if len(p["theta0"]) != M:
                raise ConfigError("theta0 needs one temperature per bath")
            by_bath: list = [None] * M
            for k, (pair, spec) in enumerate(cfg.couplings):
                m = spec.get("bath", k)
                if m >= M or by_bath[m] is not None:
                    raise ConfigError(f"couplings/{k}: bath index {m} invalid or already used")
                by_bath[m] = (pair, _kappa(spec))
            if any(b is None for b in by_bath):
                raise ConfigError("every heat bath needs exactly one coupling")
            hp = HeatBathParams(p["capacities"], [b[0] for b in by_bath], [b[1] for b in by_bath],
                                p.get("exchange", 0.0), cfg.k_B)
            theta0 = np.asarray(p["theta0"], dtype=float)
            if np.any(theta0 <= 0):
                raise ConfigError("theta0 must be positive")
            return build_heat_baths(H, hp), CoupledState(rho0, theta0)
        if cfg.scenario == "isothermal":
            d = len(p["stiffness"])
            dirs = []
            for k, (_, spec) in enumerate(cfg.couplings):
                if "a" not in spec:
                    raise ConfigError(f"couplings/{k}: isothermal couplings need a direction 'a'")
                dirs.append(spec["a"])
            gamma = None
            if "gamma" in p:
                gamma = np.array([complex_matrix(g, (n, n), "scenario_params/gamma") for g in p["gamma"]])
            ip = IsothermalParams(cfg.beta, p["stiffness"], pairs, dirs, kappas,
                                  np.asarray(p["J_ma"], float) if "J_ma" in p else None,
                                  np.asarray(p["K_ma"], float) if "K_ma" in p else None, gamma)
            z0 = np.asarray(p["z0"], dtype=float)
            if z0.shape != (d,):
                raise ConfigError("z0 must match the stiffness vector")
            return build_isothermal(H, ip), CoupledState(rho0, z0)
        if cfg.scenario == "quantum_dot":
            if n != 2 or abs(H[0, 1]) > 0:
                raise ConfigError("quantum_dot needs a diagonal two-level Hamiltonian")
            qp = QuantumDotParams(H[0, 0].real, H[1, 1].real, cfg.beta, p.get("kappa_hat", 1.0),
                                  p.get("w_f", 1.0), p.get("w_b", 1.0))
            c0 = np.asarray(p["c0"], dtype=float)
            if np.any(c0 <= 0):
                raise ConfigError("carrier densities c0 must be positive")
            return build_quantum_dot(qp), CoupledState(rho0, c0)
        if cfg.scenario == "maxwell_bloch_uniform":
            mp = MaxwellBlochParams(cfg.beta, np.asarray(p["polarization"], float), pairs, kappas,
                                    seed=cfg.seed)
            z0 = np.concatenate([p.get("E0", [0.0] * 3), p.get("H0", [0.0] * 3)]).astype(float)
            return build_maxwell_bloch_uniform(H, mp), CoupledState(rho0, z0)
    except (ShapeError, DomainError, ConstructionError) as exc:
        raise ConfigError(f"{cfg.scenario}: {exc}") from None
    raise ConfigError(f"unknown scenario {cfg.scenario!r}")
