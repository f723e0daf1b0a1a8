"""Cross-checks between the tau-function solver, the Fock oracle and the
direct numerics of the linear system."""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, fields

import numpy as np

from .blocks import BlockTruncation, ThetaTriple
from .fuchsia import (apparent_singularity_residual, connection_offdiag, hamiltonian_check,
                      monodromy_pair, reduce_to_scalar, schlesinger_flow, system_from_rabi)
from .oracle import FockTruncation, eigenvalues
from .rabi import RabiParams, SolverOptions, spectrum, tau_series
from .tau import TauSeries, dlog_tau, dlog_tau_fd

DESK_G = (0.1, 0.2, 0.3)
DESK_DELTA = (0.2, 0.5, 0.7)
FAMILIES = ("oracle", "monodromy", "connection", "schlesinger", "apparent", "hamiltonian", "tau")


@dataclass(frozen=True)
class Tolerances:
    oracle: float = 1e-5
    trace: float = 1e-4
    offdiag_zero: float = 1e-5
    offdiag_mid: float = 1e-3
    flow_trace: float = 1e-5
    flow_matrix_trace: float = 1e-10
    apparent: float = 1e-10
    hamiltonian: float = 1e-5
    dlog1: float = 1e-6
    dlog2: float = 1e-5

    @classmethod
    def from_env(cls, env=None) -> "Tolerances":
        """Override any field with RABI_<FIELD> (e.g. RABI_ORACLE=1e-6)."""
        env = os.environ if env is None else env
        vals = {}
        for f in fields(cls):
            raw = env.get(f"RABI_{f.name.upper()}")
            if raw is not None:
                vals[f.name] = float(raw)
        return cls(**vals)


@dataclass
class Check:
    family: str
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


def _check(family, name, value, tol, below=True, detail=""):
    ok = bool(np.isfinite(value)) and (value < tol if below else value > tol)
    return Check(family, name, ok, float(value), tol, detail)


def oracle_checks(grid, tol: Tolerances, levels=4, trunc=BlockTruncation(10), roots=None):
    out = []
    for g, delta in grid:
        res = roots[(g, delta)] if roots else spectrum(g, delta, levels, trunc)
        ev = eigenvalues(g, delta, FockTruncation(80))
        for r in res:
            if not r.converged:
                out.append(Check("oracle", f"g={g} delta={delta} seed E~{r.E:.4f}", False,
                                 math.inf, tol.oracle, r.message or "not converged"))
                continue
            err = float(np.min(np.abs(ev - r.E)))
            out.append(_check("oracle", f"g={g} delta={delta} E={r.E:.8f}", err, tol.oracle))
    return out


def monodromy_checks(roots, tol: Tolerances, sigma_offset: float = 0.0):
    out = []
    for (g, delta), res in roots.items():
        for r in res:
            if not r.converged:
                continue
            mp = monodromy_pair(system_from_rabi(RabiParams(g, delta, r.E)))
            sigma = r.sigma.real + sigma_offset
            dev = abs(mp.traces[2] - 2 * math.cos(math.pi * sigma))
            out.append(_check("monodromy", f"g={g} delta={delta} E={r.E:.8f}", dev, tol.trace))
    return out


def connection_checks(grid, tol: Tolerances, levels=4):
    out = []
    for g, delta in grid:
        ev = eigenvalues(g, delta, FockTruncation(80))[: levels + 1]
        for E in ev[:levels]:
            v = abs(connection_offdiag(RabiParams(g, delta, E)))
            out.append(_check("connection", f"g={g} delta={delta} at E={E:.8f}", v, tol.offdiag_zero))
        for E in (ev[:-1] + ev[1:])[:levels] / 2:
            v = abs(connection_offdiag(RabiParams(g, delta, E)))
            out.append(_check("connection", f"g={g} delta={delta} midpoint {E:.8f}", v,
                              tol.offdiag_mid, below=False))
    return out


def schlesinger_checks(tol: Tolerances, g=0.3, delta=0.4, E=0.37, t_end=-0.04, steps=4):
    """Traces of monodromies and of A0, At along a flow from t=-4g^2 to t_end."""
    sys0 = system_from_rabi(RabiParams(g, delta, E))
    ref = np.array(monodromy_pair(sys0).traces)
    tr0 = np.array([np.trace(sys0.A0), np.trace(sys0.At)])
    worst_m = worst_a = 0.0
    cur = sys0
    for tv in np.linspace(sys0.t, t_end, steps + 1)[1:]:
        cur = schlesinger_flow(cur, tv)
        worst_m = max(worst_m, float(np.max(np.abs(np.array(monodromy_pair(cur).traces) - ref))))
        worst_a = max(worst_a, float(np.max(np.abs(np.array([np.trace(cur.A0), np.trace(cur.At)]) - tr0))))
    span = f"t in [{sys0.t.real:.2f}, {t_end}]"
    return [_check("schlesinger", f"monodromy traces, {span}", worst_m, tol.flow_trace),
            _check("schlesinger", f"Tr A0, Tr At, {span}", worst_a, tol.flow_matrix_trace)]


FINE_FLOW = dict(rtol=3e-14, atol=1e-16)


def random_rabi_flowed(rng, count=100):
    """Random Rabi systems flowed to t1 = t0 * U(0.5, 0.9).

    At t0 itself (At)12 = 0 puts the apparent singularity on t, so the
    relation is checked just off it.  The flow runs at near machine
    tolerance because lam - t can be ~1e-4, where the relation cancels
    terms of size 1e6.
    """
    for _ in range(count):
        p = RabiParams(rng.uniform(0.05, 0.35), rng.uniform(0.1, 0.8), rng.uniform(-1, 2))
        sys0 = system_from_rabi(p)
        yield p, schlesinger_flow(sys0, sys0.t * rng.uniform(0.5, 0.9), **FINE_FLOW)


def apparent_checks(tol: Tolerances, count=100, seed=7):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, sysf in random_rabi_flowed(rng, count):
        worst = max(worst, apparent_singularity_residual(reduce_to_scalar(sysf, dps=30)))
    return [_check("apparent", f"{count} random systems", worst, tol.apparent)]


def hamiltonian_checks(tol: Tolerances, g=0.2, delta=0.4, roots=None):
    res = roots[(g, delta)][0] if roots and (g, delta) in roots else spectrum(g, delta, 1)[0]
    if not res.converged:
        return [Check("hamiltonian", f"g={g} delta={delta}", False, math.inf, tol.hamiltonian,
                      "no converged root")]
    p = RabiParams(g, delta, res.E)
    dev = hamiltonian_check(system_from_rabi(p), tau_series(p, res.n, res.s))
    return [_check("hamiltonian", f"g={g} delta={delta} E={res.E:.8f}, t in [-0.3, -0.1]",
                   dev, tol.hamiltonian)]


def tau_sample(count=20, seed=11):
    """Generic (theta, sigma, s, t) points for derivative self-checks."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        th0 = rng.uniform(0.1, 0.9) + 0.2j * rng.uniform(-1, 1)
        tht = rng.uniform(0.1, 0.9)
        thinf = rng.uniform(-0.3, 0.3)
        sigma = rng.uniform(0.1, 0.4) + 0.1j * rng.uniform(-1, 1)
        s = complex(np.exp(rng.uniform(-1, 1) + 1j * rng.uniform(0, 2 * np.pi)))
        t = -rng.uniform(0.05, 0.3)
        yield ThetaTriple(th0, tht, thinf), sigma, s, t


def tau_checks(tol: Tolerances, count=20):
    w1 = w2 = 0.0
    for theta, sigma, s, t in tau_sample(count):
        ser = TauSeries(theta, sigma, s, BlockTruncation(10), 3)
        for order, h in ((1, 1e-4), (2, 1e-3)):
            a = dlog_tau(ser, t, order)
            rel = abs(a - dlog_tau_fd(ser, t, order, h)) / max(1.0, abs(a))
            if order == 1:
                w1 = max(w1, rel)
            else:
                w2 = max(w2, rel)
    return [_check("tau", f"order 1 vs finite differences, {count} points", w1, tol.dlog1),
            _check("tau", f"order 2 vs finite differences, {count} points", w2, tol.dlog2)]


def run(families=FAMILIES, grid=None, tol: Tolerances | None = None, levels=4,
        trunc=BlockTruncation(10), sigma_offset=0.0):
    """Run the selected families; returns (checks, seconds per family)."""
    tol = tol or Tolerances.from_env()
    grid = [(g, d) for g in DESK_G for d in DESK_DELTA] if grid is None else list(grid)
    unknown = set(families) - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown check families: {sorted(unknown)}")
    roots = None
    if {"oracle", "monodromy"} & set(families):
        roots = {(g, d): spectrum(g, d, levels, trunc) for g, d in grid}
    checks, timing = [], {}
    runners = {
        "oracle": lambda: oracle_checks(grid, tol, levels, trunc, roots),
        "monodromy": lambda: monodromy_checks(roots, tol, sigma_offset),
        "connection": lambda: connection_checks(grid, tol, levels),
        "schlesinger": lambda: schlesinger_checks(tol),
        "apparent": lambda: apparent_checks(tol),
        "hamiltonian": lambda: hamiltonian_checks(tol, roots=roots),
        "tau": lambda: tau_checks(tol),
    }
    for fam in FAMILIES:
        if fam in families:
            t0 = time.perf_counter()
            checks += runners[fam]()
            timing[fam] = time.perf_counter() - t0
    return checks, timing
