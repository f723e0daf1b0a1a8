"""Truncated Painleve V tau function and its logarithmic derivatives.

The expansion

    tau~(t) = sum_n C(sigma+n) s^n t^{(sigma+n)^2} B(sigma+n; t)

is evaluated divided by C(sigma) t^{sigma^2}; the dropped factor only adds the
known sigma^2/t to d/dt log tau, which :func:`dlog_tau` puts back.  The tau
function of the linear system is tau = t^kappa / tau~ with
kappa = (theta0 - thetat)^2 - thetainf^2 (expansion variables).

Powers of t use a single determination, arg t in (-pi, pi] with arg t = +pi on
the negative real axis.
"""

from __future__ import annotations

import cmath
import math
import warnings

import numpy as np

from .blocks import BlockTruncation, ResonanceError, ThetaTriple, level_sums
from .constants import constant_ratio

CONVERGENCE_RADIUS_HINT = 0.5


class TauDomainError(ValueError):
    pass


class TauZeroError(ArithmeticError):
    """tau~ vanishes at t: the log-derivatives have a pole there."""


def log_t(t: complex) -> complex:
    t = complex(t)
    if t == 0:
        raise TauDomainError("t = 0 is not in the domain of the expansion")
    if t.imag == 0.0:
        return complex(math.log(abs(t)), math.pi if t.real < 0 else 0.0)
    return cmath.log(t)


def _falling(k: np.ndarray, j: int) -> np.ndarray:
    out = np.ones(k.shape)
    for i in range(j):
        out = out * (k - i)
    return out


class TauSeries:
    """Truncated tau expansion at fixed (theta, sigma, s).

    Shifts n whose structure-constant ratio vanishes are dropped at
    construction; :attr:`active_shifts` lists the ones kept.
    """

    def __init__(self, theta: ThetaTriple, sigma: complex, s: complex,
                 trunc: BlockTruncation = BlockTruncation(10), n_window: int = 4,
                 variant: str = "standard"):
        if n_window < 0:
            raise ValueError("n_window must be >= 0")
        self.theta = theta
        self.sigma = complex(sigma)
        self.s = complex(s)
        self.trunc = trunc
        self.n_window = n_window
        self.variant = variant
        self.kappa = complex((theta.theta0 - theta.thetat) ** 2 - theta.thetainf**2)
        shifts, weights, powers, coeffs = [], [], [], []
        for n in range(-n_window, n_window + 1):
            d = constant_ratio(theta, self.sigma, n)
            if d == 0:
                continue
            sn = self.sigma + n
            shifts.append(n)
            weights.append(d)
            powers.append(sn**2 - self.sigma**2)
            coeffs.append(level_sums(theta, sn, trunc.max_level, variant))
        self.active_shifts = shifts
        self._n = np.array(shifts, dtype=float)
        self._d = np.array(weights, dtype=complex)
        self._p = np.array(powers, dtype=complex)
        # coefficients of P, P', P'', P''' for each term's block polynomial
        L = trunc.max_level
        k = np.arange(L + 1)
        table = np.zeros((len(shifts), 4, L + 1), dtype=complex)
        for i, c in enumerate(coeffs):
            for j in range(min(4, L + 1)):
                table[i, j, : L + 1 - j] = c[j:] * _falling(k[j:], j)
        self._table = table

    def with_s(self, s: complex) -> "TauSeries":
        """Same coefficients, different s (no recomputation)."""
        new = object.__new__(TauSeries)
        new.__dict__.update(self.__dict__)
        new.s = complex(s)
        return new

    def _term_values(self, t: complex):
        """Per-term prefactors D_n s^n t^p e^{-thetat t} and [P, P', P'', P''']."""
        if abs(t) > CONVERGENCE_RADIUS_HINT:
            warnings.warn(f"|t|={abs(t):.3g} is outside the tested convergence window",
                          RuntimeWarning, stacklevel=3)
        lt = log_t(t)
        ls = cmath.log(self.s) if self.s != 0 else complex(-math.inf)
        with np.errstate(invalid="ignore"):
            expo = self._p * lt - self.theta.thetat * t + np.where(self._n != 0, self._n * ls, 0)
        pre = self._d * np.exp(expo)
        tp = t ** np.arange(self._table.shape[2])
        return pre, self._table @ tp

    def _combine(self, t, pre, P):
        # derivatives of t^p e^{-a t}, each divided by itself; q = p/t - a
        p = self._p
        q = p / t - self.theta.thetat
        w2 = q * q - p / t**2
        w3 = q**3 - 3 * q * p / t**2 + 2 * p / t**3
        P0, P1, P2, P3 = P.T
        return (complex(pre @ P0),
                complex(pre @ (q * P0 + P1)),
                complex(pre @ (w2 * P0 + 2 * q * P1 + P2)),
                complex(pre @ (w3 * P0 + 3 * w2 * P1 + 3 * q * P2 + P3)))

    def term_magnitudes(self, t: complex) -> dict[int, float]:
        pre, P = self._term_values(complex(t))
        return {n: float(abs(v)) for n, v in zip(self.active_shifts, pre * P[:, 0])}

    def derivatives(self, t: complex, order: int = 2) -> tuple[complex, ...]:
        """tau~ and its t-derivatives up to ``order`` (at most 3)."""
        t = complex(t)
        pre, P = self._term_values(t)
        return self._combine(t, pre, P)[: order + 1]

    def log_derivatives(self, t: complex, zero_tol: float = 1e-13) -> tuple[complex, complex, complex]:
        """First three t-derivatives of log tau, from one evaluation."""
        t = complex(t)
        pre, P = self._term_values(t)
        f, f1, f2, f3 = self._combine(t, pre, P)
        scale = float(np.max(np.abs(pre * P[:, 0]), initial=0.0))
        if f == 0 or abs(f) <= zero_tol * scale:
            raise TauZeroError(f"tau~ vanishes at t={t} (|tau~|={abs(f):.3g})")
        shift = self.kappa - self.sigma**2
        l1 = f1 / f
        return (shift / t - l1,
                -shift / t**2 - (f2 / f - l1 * l1),
                2 * shift / t**3 - (f3 / f - 3 * l1 * f2 / f + 2 * l1**3))

    def __call__(self, t: complex) -> complex:
        return tau_tilde(self, t)


def tau_tilde(series: TauSeries, t: complex) -> complex:
    return series.derivatives(t, 0)[0]


def dlog_tau(series: TauSeries, t: complex, order: int = 1, zero_tol: float = 1e-13) -> complex:
    """k-th t-derivative of log tau (k = order, 1 to 3), tau = t^kappa / tau~."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    return series.log_derivatives(t, zero_tol)[order - 1]


def dlog_tau_fd(series: TauSeries, t: complex, order: int = 1, h: float = 1e-3) -> complex:
    """Five-point finite-difference log-derivative, for self-checks only."""
    t = complex(t)
    f0 = tau_tilde(series, t)
    logs = {k: cmath.log(tau_tilde(series, t + k * h) / f0) for k in (-2, -1, 1, 2)}
    logs[0] = 0j
    kap = series.kappa - series.sigma**2
    if order == 1:
        d = (logs[-2] - 8 * logs[-1] + 8 * logs[1] - logs[2]) / (12 * h)
        return kap / t - d
    if order == 2:
        d2 = (-logs[-2] + 16 * logs[-1] - 30 * logs[0] + 16 * logs[1] - logs[2]) / (12 * h * h)
        return -kap / t**2 - d2
    raise ValueError("order must be 1 or 2")


def stokes_product(thetainf: complex, sigma: complex) -> complex:
    """s1 s2 from 2cos(pi sigma) = 2cos(pi thetainf) + exp(i pi thetainf) s1 s2.

    Uses the full-exponent convention of the monodromy data
    (Tr M_t M_0 = 2 cos pi sigma).
    """
    return (2 * cmath.cos(math.pi * sigma) - 2 * cmath.cos(math.pi * thetainf)) \
        * cmath.exp(-1j * math.pi * thetainf)


__all__ = [
    "ResonanceError", "TauDomainError", "TauSeries", "TauZeroError",
    "dlog_tau", "dlog_tau_fd", "log_t", "stokes_product", "tau_tilde",
]
