"""Barnes-G structure constants of the tau expansion, as ratios.

    C(theta, sigma) = prod_{eps=+-} G(1+thinf+eps sigma) G(1+tht+th0+eps sigma)
                                   G(1+tht-th0+eps sigma) / G(1+2 eps sigma)

Only D_n = C(sigma+n)/C(sigma) is ever needed.  Shifting the argument of G by
an integer reduces to a finite chain of Gamma values through
G(1+z) = Gamma(z) G(z), so no Barnes G evaluation is required.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .blocks import ResonanceError, ThetaTriple

POLE_TOL = 1e-12


class GammaPoleError(ResonanceError):
    """log Gamma evaluated at a non-positive integer."""


def _is_pole(z: complex, tol: float = POLE_TOL) -> bool:
    k = round(z.real)
    return k <= 0 and abs(z - k) < tol


def log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z)."""
    z = complex(z)
    if _is_pole(z):
        raise GammaPoleError(f"Gamma has a pole at z={z}")
    return complex(loggamma(z))


def _gamma_chain(theta: ThetaTriple, sigma: complex, n: int):
    """Factors (z, power) with C(sigma+n)/C(sigma) = prod Gamma(z)**power, n > 0."""
    th0, tht, thinf = (complex(x) for x in theta)
    out = []
    for a in (thinf, tht + th0, tht - th0):
        out += [(1 + a + sigma + k, +1) for k in range(n)]
        out += [(1 + a - sigma - k, -1) for k in range(1, n + 1)]
    out += [(1 + 2 * sigma + k, -1) for k in range(2 * n)]
    out += [(1 - 2 * sigma - k, +1) for k in range(1, 2 * n + 1)]
    return out


def _chain(theta, sigma, n):
    if n >= 0:
        return _gamma_chain(theta, sigma, n)
    # C(sigma-m)/C(sigma) is the reciprocal of the forward chain from sigma-m.
    return [(z, -p) for z, p in _gamma_chain(theta, sigma + n, -n)]


def constant_ratio(theta: ThetaTriple, sigma: complex, n: int) -> complex:
    """D_n = C(theta, sigma+n) / C(theta, sigma), accumulated in log space.

    A pole of a reciprocal Gamma makes the ratio exactly zero (the series
    terminates there); a pole of a Gamma in the numerator is a genuine
    resonance and raises.
    """
    if n == 0:
        return 1.0 + 0j
    sigma = complex(sigma)
    chain = _chain(theta, sigma, n)
    if any(p > 0 and _is_pole(z) for z, p in chain):
        raise ResonanceError(f"Gamma pole in the structure-constant chain (sigma={sigma}, n={n})")
    if any(p < 0 and _is_pole(z) for z, p in chain):
        return 0j
    return cmath.exp(sum(p * log_gamma(z) for z, p in chain))


def constant_ratio_direct(theta: ThetaTriple, sigma: complex, n: int) -> complex:
    """Same ratio by direct multiplication of Gamma values (no log space)."""
    from scipy.special import gamma, rgamma

    v = 1.0 + 0j
    for z, p in _chain(theta, complex(sigma), n):
        v *= gamma(z) if p > 0 else rgamma(z)
    return complex(v)


@dataclass
class ConstantRatioTable:
    n_window: int
    values: dict[int, complex] = field(default_factory=dict)

    def __getitem__(self, n: int) -> complex:
        return self.values[n]

    def as_array(self) -> np.ndarray:
        return np.array([self.values[n] for n in range(-self.n_window, self.n_window + 1)])


def constant_ratio_table(theta: ThetaTriple, sigma: complex, n_window: int) -> ConstantRatioTable:
    if n_window < 0:
        raise ValueError("n_window must be >= 0")
    table = ConstantRatioTable(n_window)
    for n in range(-n_window, n_window + 1):
        table.values[n] = constant_ratio(theta, sigma, n)
    return table
