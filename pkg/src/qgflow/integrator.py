"""Fixed-step explicit integration with structure monitors.

After every step rho is projected back onto Hermitian matrices; the size of
that projection is recorded, as are the trace drift and the smallest
eigenvalue.  The trace is never renormalized.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, IntegrationError
from .generic import CoupledState
from .linalg import dag, hermitian_eigen
from .states import STATE_TOL

MAX_HALVINGS = 20


@dataclass
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    output_stride: int = 1
    domain_guard: bool = True
    monitors: dict = field(default_factory=lambda: dict(
        trace=True, hermiticity=True, positivity=True, energy=True, entropy=True, free_energy=True))
    positivity_tol: float = STATE_TOL

    def __post_init__(self):
        if self.method not in ("rk4", "heun"):
            raise ConfigError(f"unknown method {self.method!r}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be positive")
        if not self.t_end >= self.dt:
            raise ConfigError("dt must not exceed t_end")
        if int(self.output_stride) < 1:
            raise ConfigError("output_stride must be at least 1")
        self.output_stride = int(self.output_stride)

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise ConfigError("t_end must be an integer multiple of dt")
        return n


@dataclass
class Trajectory:
    times: np.ndarray
    states: list
    trace_err: np.ndarray
    herm_err: np.ndarray
    min_eig: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    free_energy: np.ndarray
    halvings: int = 0
    labels: tuple = ()

    @property
    def rhos(self) -> np.ndarray:
        return np.array([s.rho for s in self.states])

    @property
    def zs(self) -> np.ndarray:
        return np.array([s.z for s in self.states])

    def header(self) -> list:
        n = self.states[0].rho.shape[0]
        cols = ["t", "trace_err", "herm_err", "min_eig", "energy", "entropy", "free_energy"]
        for i in range(n):
            for j in range(n):
                cols += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
        dz = self.states[0].z.size
        names = self.labels if len(self.labels) == dz else tuple(f"z_{k}" for k in range(dz))
        return cols + list(names)

    def rows(self):
        for k, s in enumerate(self.states):
            vals = [self.times[k], self.trace_err[k], self.herm_err[k], self.min_eig[k],
                    self.energy[k], self.entropy[k], self.free_energy[k]]
            for x in s.rho.reshape(-1):
                vals += [x.real, x.imag]
            vals += list(s.z)
            yield [format(float(v), ".17g") for v in vals]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for r in self.rows():
            w.writerow(r)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def _rk4(f, q, h):
    k1 = f(q)
    k2 = f(q + (0.5 * h) * k1)
    k3 = f(q + (0.5 * h) * k2)
    k4 = f(q + h * k3)
    return q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _heun(f, q, h):
    k1 = f(q)
    k2 = f(q + h * k1)
    return q + (0.5 * h) * (k1 + k2)


_METHODS = {"rk4": _rk4, "heun": _heun}


def _positive_enough(rho, tol) -> bool:
    # Cholesky of rho + 100 tol I succeeds iff min eig(rho) > -100 tol
    try:
        np.linalg.cholesky(rho + 100.0 * tol * np.eye(rho.shape[0]))
        return True
    except np.linalg.LinAlgError:
        return False


class _Stepper:
    def __init__(self, f, cfg: IntegratorConfig, in_domain):
        self.f = f
        self.cfg = cfg
        self.step = _METHODS[cfg.method]
        self.in_domain = in_domain
        self.halvings = 0
        self.herm_err = 0.0

    def _finish(self, q):
        if not (np.all(np.isfinite(q.rho)) and np.all(np.isfinite(q.z))):
            raise IntegrationError("non-finite state encountered")
        err = 0.5 * float(np.linalg.norm(q.rho - dag(q.rho)))
        return CoupledState(0.5 * (q.rho + dag(q.rho)), q.z), err

    def _ok(self, q):
        if not self.cfg.domain_guard:
            return True
        if not _positive_enough(q.rho, self.cfg.positivity_tol):
            return False
        return self.in_domain is None or self.in_domain(q)

    def advance(self, q, h, depth=0):
        try:
            trial, err = self._finish(self.step(self.f, q, h))
            ok = self._ok(trial)
        except (IntegrationError, ValueError, FloatingPointError) as exc:
            if not self.cfg.domain_guard:
                raise IntegrationError(str(exc)) from exc
            ok = False
        if ok:
            self.herm_err = max(self.herm_err, err)
            return trial
        if depth >= MAX_HALVINGS:
            raise IntegrationError(f"domain guard exhausted after {MAX_HALVINGS} halvings (h = {h:.3e})")
        self.halvings += 1
        mid = self.advance(q, 0.5 * h, depth + 1)
        return self.advance(mid, 0.5 * h, depth + 1)


def integrate(field: Callable[[CoupledState], CoupledState], q0: CoupledState, cfg: IntegratorConfig,
              monitors: Callable | None = None, in_domain: Callable | None = None,
              labels: tuple = ()) -> Trajectory:
    """Advance q0 on the grid t_k = k dt and record every ``output_stride``-th state.

    ``monitors(q, eigen)`` returns (energy, entropy, free_energy), reusing the
    eigendecomposition of rho computed for the positivity monitor; ``in_domain(q)``
    rejects states outside the admissible set when the guard is on.
    """
    n = cfg.n_steps
    flags = cfg.monitors
    stepper = _Stepper(field, cfg, in_domain)
    q = CoupledState(q0.rho, q0.z)
    times, states, tr, he, me, en, s_, fe = [], [], [], [], [], [], [], []

    def record(k, q):
        times.append(k * cfg.dt)
        states.append(q)
        tr.append(abs(float(np.trace(q.rho).real) - 1.0) if flags.get("trace", True) else math.nan)
        he.append(stepper.herm_err if flags.get("hermiticity", True) else math.nan)
        stepper.herm_err = 0.0
        eig = hermitian_eigen(q.rho)
        me.append(float(eig.eigenvalues[0]) if flags.get("positivity", True) else math.nan)
        vals = monitors(q, eig) if monitors is not None else (math.nan,) * 3
        for key, arr, v in (("energy", en, vals[0]), ("entropy", s_, vals[1]), ("free_energy", fe, vals[2])):
            arr.append(float(v) if flags.get(key, True) else math.nan)

    record(0, q)
    for k in range(1, n + 1):
        q = stepper.advance(q, cfg.dt)
        if k % cfg.output_stride == 0 or k == n:
            record(k, q)
    return Trajectory(np.array(times), states, np.array(tr), np.array(he), np.array(me),
                      np.array(en), np.array(s_), np.array(fe), stepper.halvings, labels)


def simulate(system, q0: CoupledState, cfg: IntegratorConfig) -> Trajectory:
    """Integrate a system exposing ``vector_field``, ``monitors`` and ``in_domain``."""
    macro = getattr(system, "macro", None)
    labels = tuple(getattr(macro, "labels", ())) if macro is not None else ()
    return integrate(system.vector_field, q0, cfg, monitors=system.monitors,
                     in_domain=system.in_domain, labels=labels)
