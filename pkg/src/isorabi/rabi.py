"""Rabi spectrum from the tau function: monodromy data, initial conditions
and a Newton solver on the pair (E, s).

Monodromy data here use full local exponents (Tr M_0 = 2 cos pi theta0,
Tr M_t M_0 = 2 cos pi sigma).  The tau expansion is written in half those
values; :meth:`MonodromyData.series_theta` and :meth:`MonodromyData.series_sigma`
do the conversion.
"""

from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .blocks import BlockTruncation, ResonanceError, ThetaTriple
from .tau import TauSeries, TauZeroError, dlog_tau

log = logging.getLogger(__name__)

DESK_G_MAX = 0.35
IMAG_TOL = 1e-6


@dataclass(frozen=True)
class RabiParams:
    g: float
    delta: float
    E: complex = 0.0

    @property
    def t(self) -> float:
        return -4.0 * self.g * self.g

    @property
    def theta(self) -> complex:
        """theta0 = thetat = E + g^2."""
        return self.E + self.g * self.g

    def with_E(self, E: complex) -> "RabiParams":
        return RabiParams(self.g, self.delta, E)


@dataclass(frozen=True)
class MonodromyData:
    theta0: complex
    thetat: complex
    thetainf: complex
    sigma: complex
    s: complex | None = None

    def series_theta(self) -> ThetaTriple:
        return ThetaTriple(self.theta0 / 2, self.thetat / 2, self.thetainf / 2)

    def series_sigma(self) -> complex:
        return self.sigma / 2


@dataclass
class SpectralResult:
    n: int
    E: float
    s: complex
    residual_norm: float
    truncation: tuple[int, int]
    converged: bool
    sigma: complex = 0j
    imag_E: float = 0.0
    iterations: int = 0
    branch_mismatch: float = math.inf
    message: str = ""


@dataclass(frozen=True)
class SolverOptions:
    n_window: int = 4
    max_level: int = 10
    tol: float = 1e-9
    max_iter: int = 40
    imag_tol: float = IMAG_TOL
    fd_step: float = 1e-7
    scan_radii: tuple[float, ...] = tuple(np.logspace(-3, 4, 8))
    scan_phases: int = 8
    newton_starts: int = 8
    branch_tol: float = 1e-6

    @property
    def trunc(self) -> BlockTruncation:
        return BlockTruncation(self.max_level)


def monodromy_from_rabi(p: RabiParams, n: int) -> MonodromyData:
    th = p.theta
    return MonodromyData(th, th, 0.0, 2 * (th + n))


def initial_conditions(p: RabiParams) -> tuple[complex, complex]:
    """Values of d log tau and its t-derivative at t = -4 g^2."""
    g2 = p.g * p.g
    return p.theta / 2 + p.delta**2 / (4 * g2), p.delta**2 / (16 * g2 * g2)


def third_condition(p: RabiParams) -> float:
    """d^3/dt^3 log tau at t = -4 g^2, from the flow equations at the Rabi point.

    d/dt Tr(A0 At) = -Tr(sigma3 [A0, At]) / 2 = -delta^2 there, so
    (Tr A0 At / t^2)' = -delta^2/t^2 - 2 delta^2/t^3.  The two printed
    conditions leave a second branch of solutions that fails this one.
    """
    t = p.t
    return -p.delta**2 / t**2 - 2 * p.delta**2 / t**3


def tau_series(p: RabiParams, n: int, s: complex, opts: SolverOptions = SolverOptions()) -> TauSeries:
    m = monodromy_from_rabi(p, n)
    return TauSeries(m.series_theta(), m.series_sigma(), s, opts.trunc, opts.n_window)


def _residuals_of(series: TauSeries, p: RabiParams) -> np.ndarray:
    return np.array(series.log_derivatives(p.t)[:2]) - np.array(initial_conditions(p))


def branch_mismatch(series: TauSeries, p: RabiParams) -> float:
    """Relative miss of the third log-derivative (small on the physical branch)."""
    h3 = third_condition(p)
    return abs(dlog_tau(series, p.t, 3) - h3) / (1 + abs(h3))


def residuals(p: RabiParams, n: int, s: complex, trunc: BlockTruncation = BlockTruncation(10),
              n_window: int = 4) -> tuple[complex, complex]:
    """(r1, r2): mismatch of the tau log-derivatives against the initial conditions."""
    opts = SolverOptions(n_window=n_window, max_level=trunc.max_level)
    try:
        r = _residuals_of(tau_series(p, n, s, opts), p)
    except (ResonanceError, TauZeroError) as exc:
        raise type(exc)(f"{exc} [g={p.g}, delta={p.delta}, E={p.E}, n={n}, s={s}]") from exc
    return complex(r[0]), complex(r[1])


def centred_shift(E: complex, g: float) -> int:
    """Shift n putting the dominant surviving term at the centre of the n-window.

    With sigma = theta + n only shifts with sigma + m <= theta survive
    (the structure constant vanishes above), so the dominant term is the
    one with sigma nearest zero among sigma <= theta: sigma = theta when
    theta < 1/2, else theta - round(theta).
    """
    return -max(0, int(round((E + g * g).real)))


class _Problem:
    """Residual maps in (E, log s) with per-E series caching."""

    def __init__(self, g, delta, n, opts):
        self.g, self.delta, self.n, self.opts = g, delta, n, opts
        self._cache = {}

    def series(self, E, u=0j):
        key = complex(E)
        ser = self._cache.get(key)
        if ser is None:
            if len(self._cache) > 64:
                self._cache.clear()
            ser = tau_series(RabiParams(self.g, self.delta, key), self.n, 1.0, self.opts)
            self._cache[key] = ser
        return ser.with_s(cmath.exp(u))

    def __call__(self, E, u):
        """Raw (r1, r2)."""
        return _residuals_of(self.series(E, u), RabiParams(self.g, self.delta, E))

    def scaled(self, E, u):
        """(r1, r2, r3), each relative to its target."""
        p = RabiParams(self.g, self.delta, E)
        ser = self.series(E, u)
        targets = np.array([*initial_conditions(p), third_condition(p)])
        return (np.array(ser.log_derivatives(p.t)) - targets) / (1 + np.abs(targets))


_SOFT_ERRORS = (ResonanceError, TauZeroError, OverflowError, ZeroDivisionError)


def _safe_norm(f, E, u):
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            r = f(E, u)
    except _SOFT_ERRORS:
        return None, math.inf
    nr = float(np.linalg.norm(r))
    return r, nr if np.isfinite(nr) else math.inf


def _fd_jacobian(f, E, u, r0, h):
    hE = h * max(1.0, abs(E))
    hu = h * max(1.0, abs(u))
    return np.column_stack([(f(E + hE, u) - r0) / hE, (f(E, u + hu) - r0) / hu])


def _damped(f, E, u, opts, max_iter, stop):
    """Damped (Gauss-)Newton on f(E, u) = 0 with energy steps capped at 0.25."""
    r, norm = _safe_norm(f, E, u)
    if r is None:
        return E, u, norm, 0
    damp = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        if norm < stop:
            break
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                J = _fd_jacobian(f, E, u, r, opts.fd_step)
            if not np.all(np.isfinite(J)):
                break
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        except (np.linalg.LinAlgError, *_SOFT_ERRORS):
            break
        if abs(step[0]) > 0.25:
            step = step * (0.25 / abs(step[0]))
        while damp > 1e-4:
            En, un = E + damp * step[0], u + damp * step[1]
            rn, nn = _safe_norm(f, En, un)
            if nn < norm:
                gain = nn / norm
                E, u, r, norm = En, un, rn, nn
                damp = min(1.0, 2 * damp)
                break
            damp /= 2
        else:
            break
        if gain > 0.5 and norm < 1e-8:
            break  # at the truncation floor
    return E, u, norm, it


def _scan_s(prob: _Problem, E: complex, opts: SolverOptions):
    """Coarse log-polar grid over s: the best phase on each radius, best first.

    Keeping one start per radius spreads the starts over magnitudes; the
    raw ranking at the seed energy tends to favour large |s|.
    """
    cands = []
    for rho in opts.scan_radii:
        ring = []
        for k in range(opts.scan_phases):
            u = math.log(rho) + 2j * math.pi * (k + 0.5) / opts.scan_phases
            _, nr = _safe_norm(prob.scaled, E, u)
            if np.isfinite(nr):
                ring.append((nr, u))
        if ring:
            cands.append(min(ring, key=lambda c: c[0]))
    cands.sort(key=lambda c: c[0])
    return [u for _, u in cands]


def _refine(prob: _Problem, E: complex, u: complex, opts: SolverOptions):
    """Branch-selecting Gauss-Newton on three conditions, then Newton on two."""
    E, u, _, it1 = _damped(prob.scaled, E, u, opts, opts.max_iter, 1e-13)
    E, u, norm, it2 = _damped(prob, E, u, opts, 8, opts.tol * 1e-3)
    return E, u, norm, it1 + it2


def solve_level(g: float, delta: float, n: int | None, E_seed: float,
                trunc: BlockTruncation = BlockTruncation(10),
                opts: SolverOptions | None = None) -> SpectralResult:
    """Solve the initial conditions for (E, s) from an energy seed.

    s is seeded from a log-polar grid.  Each start runs Gauss-Newton on the
    two initial conditions plus the third-derivative condition, which steers
    away from the non-physical branch, then damped Newton on the two
    conditions alone.  Starts are tried best-first until a root passes
    :func:`branch_mismatch`.
    ``n=None`` picks the shift that centres the series sigma.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    if g > DESK_G_MAX:
        warnings.warn(f"g={g} is beyond the tested range g <= {DESK_G_MAX}", RuntimeWarning,
                      stacklevel=2)
    opts = opts or SolverOptions(max_level=trunc.max_level)
    if opts.max_level != trunc.max_level:
        opts = replace(opts, max_level=trunc.max_level)
    if delta == 0:
        return decoupled_level(g, max(0, round(float(np.real(E_seed)) + g * g)), opts)
    E0 = complex(E_seed)
    n = centred_shift(E0, g) if n is None else n
    prob = _Problem(g, delta, n, opts)
    best = None
    starts = []
    for jitter in (0.0, 1e-6, -1e-6):
        starts = _scan_s(prob, E0 + jitter, opts)
        if starts:
            E0 += jitter
            break
    for u0 in starts[: opts.newton_starts]:
        try:
            E, u, norm, it = _refine(prob, E0, u0, opts)
            bm = branch_mismatch(prob.series(E, u), RabiParams(g, delta, E)) \
                if norm < opts.tol else math.inf
        except (ResonanceError, TauZeroError) as exc:
            log.debug("newton start failed: %s", exc)
            continue
        cand = (E, u, norm, it, bm)
        if best is None or (bm, norm) < (best[4], best[2]):
            best = cand
        if norm < opts.tol and bm < opts.branch_tol and abs(E.imag) < opts.imag_tol:
            break
    trunc_pair = (opts.n_window, opts.max_level)
    if best is None:
        return SpectralResult(n, float(E0.real), 0j, math.inf, trunc_pair, False,
                              2 * (E0 + g * g + n), message="no usable starting point")
    E, u, norm, it, bm = best
    if norm >= opts.tol:
        msg = "not converged"
    elif bm >= opts.branch_tol:
        msg = "root on the non-physical branch"
    elif abs(E.imag) >= opts.imag_tol:
        msg = "spurious complex root"
    else:
        msg = ""
    return SpectralResult(n, float(E.real), complex(cmath.exp(u)), norm, trunc_pair, not msg,
                          2 * (E + g * g + n), float(E.imag), it, bm, msg)


def decoupled_level(g: float, m: int, opts: SolverOptions = SolverOptions()) -> SpectralResult:
    """Exact level m - g^2 of the delta = 0 displaced oscillator.

    The scalar reduction degenerates there (A0, At become diagonal), so the
    root is not searched for; s carries no information and is left at 0.
    """
    E = m - g * g
    n = centred_shift(E, g)
    return SpectralResult(n, E, 0j, 0.0, (opts.n_window, opts.max_level), True,
                          complex(2 * (E + g * g + n)), 0.0, 0, 0.0,
                          "decoupled limit, closed form")


def ladder_seeds(g: float, delta: float, count: int) -> list[float]:
    """Uncoupled levels m +- delta shifted by -g^2, lowest ``count`` of them.

    A seed whose theta = E + g^2 sits on a multiple of 1/2 (where the expansion
    is resonant, e.g. degenerate pairs at delta = 1/2) is split into two seeds
    g/2 either side.
    """
    ladder = sorted(m + sgn * delta for m in range(count + 1) for sgn in (1, -1))[:count]
    seeds = []
    for e in ladder:
        frac = abs(2 * e - round(2 * e))
        if frac < g / 4:
            seeds += [e - g * g - g / 2, e - g * g + g / 2]
        else:
            seeds.append(e - g * g)
    out = []
    for s in sorted(seeds):
        if not out or abs(s - out[-1]) > 1e-9:
            out.append(s)
    return out


def spectrum(g: float, delta: float, levels: int = 4,
             trunc: BlockTruncation = BlockTruncation(10),
             opts: SolverOptions | None = None) -> list[SpectralResult]:
    """Lowest ``levels`` energies, ascending and distinct to 1e-6.

    Seeds that fail are reported as unconverged entries after the converged
    ones; they never abort the batch.
    """
    if g <= 0:
        raise ValueError("g must be positive")
    if delta == 0:
        o = opts or SolverOptions(max_level=trunc.max_level)
        return [decoupled_level(g, m, o) for m in range(levels)]
    good: list[SpectralResult] = []
    failed: list[SpectralResult] = []
    for seed in ladder_seeds(g, delta, levels + 2):
        try:
            res = solve_level(g, delta, None, seed, trunc, opts)
        except (ResonanceError, TauZeroError) as exc:
            res = SpectralResult(centred_shift(seed, g), seed, 0j, math.inf,
                                 (4, trunc.max_level), False, message=str(exc))
        if not res.converged:
            failed.append(res)
        elif all(abs(res.E - r.E) > 1e-6 for r in good):
            good.append(res)
    good.sort(key=lambda r: r.E)
    out = good[:levels]
    return out + failed[: max(0, levels - len(out))]
