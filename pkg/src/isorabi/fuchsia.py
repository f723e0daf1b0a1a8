"""Direct numerics on the 2x2 linear system

    dPhi/dz = (sigma3/2 + A0/z + At/(z - t)) Phi

monodromy by transport around loops, the connection coefficient between
the Frobenius solutions at 0 and t, the Schlesinger flow in t, and the
reduction to a scalar second-order equation.

2x2 matrices are plain complex numpy arrays of shape (2, 2).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .blocks import ResonanceError
from .rabi import RabiParams

SIGMA3 = np.diag([1.0, -1.0]).astype(complex)
RTOL = 1e-12
ATOL = 1e-14


class PathError(RuntimeError):
    """Transport path passes too close to a singular point, or the integrator gave up."""


class FlowError(RuntimeError):
    pass


class FrobeniusResonanceError(ResonanceError):
    """Local exponents differ by an integer: the Frobenius basis has logarithms."""


class DegenerateReductionError(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    A0: np.ndarray
    At: np.ndarray
    t: complex
    leading: np.ndarray = field(default_factory=lambda: SIGMA3 / 2)

    def __post_init__(self):
        object.__setattr__(self, "A0", np.asarray(self.A0, dtype=complex).reshape(2, 2))
        object.__setattr__(self, "At", np.asarray(self.At, dtype=complex).reshape(2, 2))
        object.__setattr__(self, "t", complex(self.t))

    def coefficient(self, z: complex) -> np.ndarray:
        return self.leading + self.A0 / z + self.At / (z - self.t)

    @property
    def theta0(self) -> complex:
        """Trace of A0; the exponent difference when det A0 = 0."""
        return complex(np.trace(self.A0))

    @property
    def thetat(self) -> complex:
        return complex(np.trace(self.At))

    @property
    def thetainf(self) -> complex:
        S = self.A0 + self.At
        return complex(S[1, 1] - S[0, 0])


def system_from_rabi(p: RabiParams) -> SystemSpec:
    if p.g <= 0:
        raise ValueError("g must be positive")
    th = p.theta
    A0 = np.array([[th, -p.delta], [0, 0]], dtype=complex)
    At = np.array([[0, 0], [-p.delta, th]], dtype=complex)
    return SystemSpec(A0, At, p.t)


# ---------------------------------------------------------------- transport

def _segment_distance(a: complex, b: complex, c: complex) -> float:
    d = b - a
    if d == 0:
        return abs(c - a)
    s = min(1.0, max(0.0, ((c - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(a + s * d - c)


def _transport(sys: SystemSpec, z: Callable, dz: Callable, span, Y0: np.ndarray,
               rtol=RTOL, atol=ATOL) -> np.ndarray:
    shape = Y0.shape
    cols = 1 if Y0.ndim == 1 else shape[1]

    def rhs(s, y):
        zz = z(s)
        return dz(s) * (sys.coefficient(zz) @ y.reshape(2, cols)).ravel()

    sol = solve_ivp(rhs, span, np.asarray(Y0, dtype=complex).ravel(), method="DOP853",
                    rtol=rtol, atol=atol)
    if sol.status != 0:
        raise PathError(f"integration failed: {sol.message}")
    return sol.y[:, -1].reshape(shape)


def integrate_path(sys: SystemSpec, path: Sequence[complex], Y0: np.ndarray,
                   safety: float | None = None, rtol: float = RTOL) -> np.ndarray:
    """Transport a solution (vector or 2x2 fundamental matrix) along a polyline."""
    pts = [complex(z) for z in path]
    if len(pts) < 2:
        return np.array(Y0, dtype=complex)
    safety = 1e-3 * max(abs(sys.t), 1e-3) if safety is None else safety
    for a, b in zip(pts[:-1], pts[1:]):
        for c in (0j, sys.t):
            if _segment_distance(a, b, c) < safety:
                raise PathError(f"segment {a} -> {b} passes within {safety:g} of z={c}")
    Y = np.array(Y0, dtype=complex)
    for a, b in zip(pts[:-1], pts[1:]):
        Y = _transport(sys, lambda s, a=a, b=b: a + s * (b - a), lambda s, a=a, b=b: b - a,
                       (0.0, 1.0), Y, rtol=rtol)
    return Y


def _arc(sys, centre, radius, phi0, phi1, Y):
    return _transport(sys, lambda ph: centre + radius * cmath.exp(1j * ph),
                      lambda ph: 1j * radius * cmath.exp(1j * ph), (phi0, phi1), Y)


# ---------------------------------------------------------------- monodromy

@dataclass
class MonodromyPair:
    """Loop monodromies with Phi(basepoint) = 1, Phi -> Phi M (counterclockwise).

    M0, Mt, Minf are for the determinant-normalized system; raw_M0, raw_Mt
    differ from them by exp(i pi Tr A0), exp(i pi Tr At).
    """
    M0: np.ndarray
    Mt: np.ndarray
    Minf: np.ndarray
    raw_M0: np.ndarray
    raw_Mt: np.ndarray
    basepoint: complex

    @property
    def traces(self) -> tuple[complex, complex, complex]:
        return (complex(np.trace(self.M0)), complex(np.trace(self.Mt)),
                complex(np.trace(self.Mt @ self.M0)))


def loop_radius(t: complex) -> float:
    return min(abs(t) / 3, 1 / 3)


def monodromy_pair(sys: SystemSpec, basepoint: complex | None = None) -> MonodromyPair:
    """Monodromies around 0 and t from a common basepoint near 0.

    The loop around 0 is the circle |z| = |b|.  The loop around t follows that
    circle (the short way) to the ray towards t, goes out along the ray, circles
    t at the same radius and returns the same way.
    """
    t = sys.t
    r = loop_radius(t) if basepoint is None else abs(basepoint)
    b = complex(r) if basepoint is None else complex(basepoint)
    if not 0 < r < abs(t) / 2:
        raise PathError("basepoint must satisfy 0 < |b| < |t|/2")
    phb = cmath.phase(b)
    pht = cmath.phase(t)
    dphi = (pht - phb) % (2 * math.pi)
    if dphi > math.pi:
        dphi -= 2 * math.pi
    I = np.eye(2, dtype=complex)
    M0 = _arc(sys, 0, r, phb, phb + 2 * math.pi, I)
    u = t / abs(t)
    near, far = r * u, t - r * u

    def around_t(Y):
        Y = _arc(sys, 0, r, phb, phb + dphi, Y)
        Y = integrate_path(sys, [near, far], Y)
        Y = _arc(sys, t, r, pht + math.pi, pht + 3 * math.pi, Y)
        Y = integrate_path(sys, [far, near], Y)
        return _arc(sys, 0, r, phb + dphi, phb, Y)

    Mt = around_t(I)
    n0 = cmath.exp(-1j * math.pi * sys.theta0)
    nt = cmath.exp(-1j * math.pi * sys.thetat)
    M0n, Mtn = M0 * n0, Mt * nt
    return MonodromyPair(M0n, Mtn, np.linalg.inv(Mtn @ M0n), M0, Mt, b)


def composite_trace(sys: SystemSpec) -> complex:
    """Tr(M_t M_0) of the normalized system; equals 2 cos(pi sigma)."""
    return monodromy_pair(sys).traces[2]


# ---------------------------------------------------------------- Frobenius

def frobenius_sum(residue: np.ndarray, higher: Callable[[int], np.ndarray], rho: complex,
                  c0: np.ndarray, w: complex, tail_tol: float = 1e-16, max_terms: int = 800):
    """Sum_k c_k w^k for the solution w^rho sum c_k w^k of w y' = (residue + sum_j B_j w^j) y.

    Terms are added until three consecutive ones fall below tail_tol relative
    to the partial sum.
    """
    I = np.eye(2, dtype=complex)
    cs = [np.asarray(c0, dtype=complex)]
    total = cs[0].copy()
    wk = 1.0 + 0j
    small = 0
    for k in range(1, max_terms):
        rhs = sum(higher(j) @ cs[k - j] for j in range(1, k + 1))
        M = (rho + k) * I - residue
        if abs(np.linalg.det(M)) < 1e-12 * max(1.0, np.abs(M).max() ** 2):
            raise FrobeniusResonanceError(f"Frobenius recursion singular at k={k}, exponent {rho}")
        ck = np.linalg.solve(M, rhs)
        cs.append(ck)
        wk *= w
        term = ck * wk
        total = total + term
        small = small + 1 if np.abs(term).max() < tail_tol * np.abs(total).max() else 0
        if small >= 3:
            return total
    raise FrobeniusResonanceError("Frobenius series did not converge at the matching point")


def connection_offdiag(p: RabiParams, integer_tol: float = 1e-9) -> complex:
    """Coefficient of the exponent-theta local solution at z = t in the
    solution that is analytic at z = 0.

    It vanishes exactly when that solution is analytic at both points.
    Vectors are unit-normalized: (delta, theta)/|.| at 0, (0, 1) for the
    singular solution at t.  Real for real E.
    """
    sys = system_from_rabi(p)
    th = sys.theta0
    if p.delta == 0:
        raise DegenerateReductionError("delta = 0 decouples the system")
    if abs(th - round(th.real)) < integer_tol:
        raise FrobeniusResonanceError(f"theta = {th} is an integer: exponents are resonant")
    t = sys.t
    A0, At, half = sys.A0, sys.At, SIGMA3 / 2

    def at_zero(j):
        return half - At / t if j == 1 else -At / t**j

    def at_t(j):
        return half + A0 / t if j == 1 else (-1) ** (j - 1) * A0 / t**j

    c0 = np.array([p.delta, th], dtype=complex)
    c0 /= np.linalg.norm(c0)
    z0, z1 = t / 4, 3 * t / 4
    y = integrate_path(sys, [z0, z1], frobenius_sum(A0, at_zero, 0, c0, z0))
    w = z1 - t
    ua = np.array([th, p.delta], dtype=complex)
    ua /= np.linalg.norm(ua)
    u = frobenius_sum(At, at_t, 0, ua, w)
    v = cmath.exp(th * cmath.log(w)) * frobenius_sum(At, at_t, th, np.array([0, 1], complex), w)
    det = lambda a, b: a[0] * b[1] - a[1] * b[0]  # noqa: E731
    return complex(det(y, u) / det(v, u))


# ---------------------------------------------------------------- flow

def _flow_rhs(t, A0, At):
    c = At @ A0 - A0 @ At
    return c / t, -c / t - 0.5 * (At @ SIGMA3 - SIGMA3 @ At)


def schlesinger_flow(sys: SystemSpec, t_target: complex,
                     path: Sequence[complex] | None = None,
                     rtol: float = RTOL, atol: float = ATOL) -> SystemSpec:
    """Evolve (A0, At) in t along a polyline from sys.t to t_target."""
    pts = [sys.t] + [complex(x) for x in (path or [])] + [complex(t_target)]
    for a, b in zip(pts[:-1], pts[1:]):
        if _segment_distance(a, b, 0j) < 1e-12:
            raise FlowError("flow path passes through t = 0")
    y = np.concatenate([sys.A0.ravel(), sys.At.ravel()])
    for a, b in zip(pts[:-1], pts[1:]):
        if a == b:
            continue

        def rhs(s, y, a=a, b=b):
            d0, dt = _flow_rhs(a + s * (b - a), y[:4].reshape(2, 2), y[4:].reshape(2, 2))
            return (b - a) * np.concatenate([d0.ravel(), dt.ravel()])

        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", rtol=rtol, atol=atol)
        if sol.status != 0:
            raise FlowError(f"flow integration failed: {sol.message}")
        y = sol.y[:, -1]
    return SystemSpec(y[:4].reshape(2, 2), y[4:].reshape(2, 2), pts[-1], sys.leading)


def hamiltonian(sys: SystemSpec) -> complex:
    """-Tr(sigma3 At)/2 - Tr(A0 At)/t."""
    return complex(-0.5 * np.trace(SIGMA3 @ sys.At) - np.trace(sys.A0 @ sys.At) / sys.t)


def hamiltonian_check(sys: SystemSpec, series, t_values: Sequence[float] | None = None) -> float:
    """Max |H(t) - d/dt log tau(t)| with H from the flowed system."""
    from .tau import dlog_tau

    if t_values is None:
        t_values = np.linspace(-0.3, -0.1, 5)
    worst = 0.0
    cur = sys
    for tv in sorted(t_values, key=lambda x: abs(x - sys.t)):
        cur = schlesinger_flow(cur, tv)
        worst = max(worst, abs(hamiltonian(cur) - dlog_tau(series, tv, 1)))
    return worst


# ---------------------------------------------------------------- scalar ODE

@dataclass(frozen=True)
class ScalarReduction:
    """f'' + p f' + q f = 0 for the first-row entries of Phi.

    p = (1-theta0)/z + (1-thetat)/(z-t) - 1/(z-lam)
    q = -1/4 + C0/z + Ct/(z-t) + mu/(z-lam)
    """
    t: complex
    lam: complex
    mu: complex
    k: complex
    C0: complex
    Ct: complex
    theta0: complex
    thetat: complex
    thetainf: complex

    @property
    def p_residues(self) -> dict[str, complex]:
        return {"0": 1 - self.theta0, "t": 1 - self.thetat, "lam": -1.0 + 0j}

    q_constant: float = -0.25

    def p(self, z: complex) -> complex:
        return (1 - self.theta0) / z + (1 - self.thetat) / (z - self.t) - 1 / (z - self.lam)

    def q(self, z: complex) -> complex:
        return -0.25 + self.C0 / z + self.Ct / (z - self.t) + self.mu / (z - self.lam)


def eliminate(sys: SystemSpec, z: complex) -> tuple[complex, complex]:
    """p(z), q(z) by direct elimination of the second row at one point."""
    t = sys.t
    A = sys.coefficient(z)
    dA = -sys.A0 / z**2 - sys.At / (z - t) ** 2
    r = dA[0, 1] / A[0, 1]
    p = -np.trace(A) - r
    q = -dA[0, 0] + A[0, 0] * r + np.linalg.det(A)
    return complex(p), complex(q)


def reduce_to_scalar(sys: SystemSpec, det_tol: float = 1e-9, dps: int | None = None) -> ScalarReduction:
    """lam, mu, k, C0, Ct of the scalar equation for the first row of Phi.

    Needs det A0 = det At = 0 (no double poles in q).  With ``dps`` the
    arithmetic is done in mpmath at that many digits: near lam -> t the
    apparent-singularity relation cancels terms of size 1/(lam - t), and
    binary64 rounding alone can then exceed 1e-10.
    """
    scale = 1 + np.abs(sys.A0).max() ** 2 + np.abs(sys.At).max() ** 2
    if abs(np.linalg.det(sys.A0)) > det_tol * scale or abs(np.linalg.det(sys.At)) > det_tol * scale:
        raise DegenerateReductionError("reduction needs det A0 = det At = 0")
    if dps is None:
        num = complex
        ctx = None
    else:
        import mpmath

        ctx = mpmath.mp.clone() if hasattr(mpmath.mp, "clone") else mpmath.mp
        ctx.dps = dps
        num = ctx.mpc
    (a, b), (c, d) = ([num(x) for x in row] for row in sys.A0)
    (e, f), (h, k_) = ([num(x) for x in row] for row in sys.At)
    t = num(sys.t)
    k = b + f
    if abs(complex(k)) < 1e-14 * scale:
        raise DegenerateReductionError("A12(z) has no finite zero (k = 0)")
    lam = t * b / k
    at = max(1.0, abs(sys.t))
    if abs(complex(lam)) < 1e-12 * at or abs(complex(lam - t)) < 1e-12 * at:
        raise DegenerateReductionError(f"apparent singularity lam = {complex(lam)} collides with 0 or t")
    mu = num(0.5) + a / lam + e / (lam - t)
    cross = (a * k_ + e * d) / t - (b * h + f * c) / t
    C0 = (d - a) / 2 - cross - num(0.5) + (a + e) / t - a / lam
    Ct = (k_ - e) / 2 + cross - num(0.5) - (a + e) / t + e / (t - lam)
    return ScalarReduction(t, lam, mu, k, C0, Ct, a + d, e + k_, (d + k_) - (a + e))


def apparent_singularity_residual(red: ScalarReduction, theta=None) -> float:
    """|mu^2 - [(th0-1)/lam + (tht-1)/(lam-t)] mu + C0/lam + Ct/(lam-t) - 1/4|."""
    th0, tht = (red.theta0, red.thetat) if theta is None else (theta[0], theta[1])
    lam, mu, t = red.lam, red.mu, red.t
    lhs = mu**2 - ((th0 - 1) / lam + (tht - 1) / (lam - t)) * mu + red.C0 / lam + red.Ct / (lam - t)
    return float(abs(lhs - 0.25))


@dataclass(frozen=True)
class PVFunction:
    ratio: complex
    from_lam_mu: complex

    @property
    def difference(self) -> float:
        return float(abs(self.ratio - self.from_lam_mu))


def pv_y(sys: SystemSpec) -> PVFunction:
    """y = (A0)11 (At)12 / ((At)11 (A0)12), also from (theta, lam, mu)."""
    den = sys.At[0, 0] * sys.A0[0, 1]
    if abs(den) < 1e-300:
        raise DegenerateReductionError("(At)11 (A0)12 vanishes")
    red = reduce_to_scalar(sys)
    big = red.theta0 + red.thetat - red.thetainf
    y2 = (big - (2 * red.mu - 1) * (red.lam - red.t)) / (big - (2 * red.mu - 1) * red.lam)
    return PVFunction(complex(sys.A0[0, 0] * sys.At[0, 1] / den), complex(y2))
