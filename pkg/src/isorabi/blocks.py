"""Irregular conformal block of the Painleve V tau function.

The block is a double power series over pairs of Young diagrams,

    B(theta, sigma; t) = exp(-theta_t t) * sum_{lam, mu} B_{lam,mu} t^{|lam|+|mu|},

with each coefficient a product of one factor per box.  Parameters here are
in the expansion's own normalization (half the local exponent differences);
:mod:`isorabi.rabi` converts from monodromy data.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .partitions import Partition, conjugate, hook_length, partition_pairs

VARIANTS = ("standard", "unsquared")


class ResonanceError(ArithmeticError):
    """A denominator of the expansion vanishes (non-generic sigma)."""


@dataclass(frozen=True)
class ThetaTriple:
    theta0: complex
    thetat: complex
    thetainf: complex = 0.0

    def __iter__(self):
        return iter((self.theta0, self.thetat, self.thetainf))


@dataclass(frozen=True)
class BlockTruncation:
    max_level: int = 10

    def __post_init__(self):
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")


def singular_tolerance(sigma: complex) -> float:
    return 1e-12 * (1.0 + abs(2 * sigma))


def _box_factor(theta, sign, sigma, c, h, d, variant):
    th0, tht, thinf = theta
    num = (thinf + sign * sigma + c) * ((tht + sign * sigma + c) ** 2 - th0**2)
    if variant == "standard":
        den = h * h * (d + 2 * sign * sigma) ** 2
    else:
        den = h * h * (d + 2 * sigma)
    return num / den


def _denominator_offsets(lam: Partition, mu: Partition):
    """Yield (sign, i - j, hook, integer part of the 2sigma denominator)."""
    lam_c, mu_c = conjugate(lam), conjugate(mu)
    for i, j in lam.boxes():
        yield +1, i - j, hook_length(lam, i, j), lam_c.row(j) + mu.row(i) - i - j + 1
    for i, j in mu.boxes():
        yield -1, i - j, hook_length(mu, i, j), lam.row(i) + mu_c.row(j) - i - j + 1


def block_coeff(theta: ThetaTriple, sigma: complex, lam: Partition, mu: Partition,
                variant: str = "standard", tol: float | None = None) -> complex:
    """Coefficient B_{lam,mu}(theta, sigma).

    ``variant="standard"`` squares the ``(... + 2 sigma)`` denominators and uses
    ``-2 sigma`` for boxes of ``mu``; it is the form whose tau function solves
    the isomonodromic flow.  ``variant="unsquared"`` keeps single powers and
    ``+2 sigma`` on both diagrams; it exists for comparison only.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    tol = singular_tolerance(sigma) if tol is None else tol
    val = 1.0 + 0j
    for sign, c, h, d in _denominator_offsets(lam, mu):
        shift = 2 * sign * sigma if variant == "standard" else 2 * sigma
        if abs(d + shift) < tol:
            raise ResonanceError(f"denominator {d} + {shift} vanishes at sigma={sigma}")
        val *= _box_factor(tuple(theta), sign, sigma, c, h, d, variant)
    return val


@lru_cache(maxsize=None)
def _box_table(level: int):
    """Flattened box data for every pair at one level, for vectorized products."""
    seg, sign, c, h, d = [], [], [], [], []
    npairs = 0
    for lam, mu in partition_pairs(level):
        for s_, c_, h_, d_ in _denominator_offsets(lam, mu):
            seg.append(npairs)
            sign.append(s_)
            c.append(c_)
            h.append(h_)
            d.append(d_)
        npairs += 1
    seg = np.asarray(seg, dtype=np.intp)
    starts = np.flatnonzero(np.r_[True, seg[1:] != seg[:-1]]) if seg.size else seg
    return (npairs, starts, np.asarray(sign, float), np.asarray(c, float),
            np.asarray(h, float), np.asarray(d, float))


def level_sums(theta: ThetaTriple, sigma: complex, max_level: int,
               variant: str = "standard", tol: float | None = None) -> np.ndarray:
    """Array S with S[k] = sum over |lam|+|mu| = k of B_{lam,mu}."""
    key = (complex(theta.theta0), complex(theta.thetat), complex(theta.thetainf),
           complex(sigma), int(max_level), variant,
           singular_tolerance(sigma) if tol is None else float(tol))
    return _level_sums_cached(*key).copy()


@lru_cache(maxsize=4096)
def _level_sums_cached(th0, tht, thinf, sigma, max_level, variant, tol):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    out = np.zeros(max_level + 1, dtype=complex)
    out[0] = 1.0
    for k in range(1, max_level + 1):
        npairs, starts, sign, c, h, d = _box_table(k)
        shift = 2 * sign * sigma if variant == "standard" else 2 * sigma * np.ones_like(sign)
        den_lin = d + shift
        if np.any(np.abs(den_lin) < tol):
            raise ResonanceError(f"resonant denominator at level {k}, sigma={sigma}")
        ss = sign * sigma
        num = (thinf + ss + c) * ((tht + ss + c) ** 2 - th0**2)
        den = h * h * (den_lin**2 if variant == "standard" else den_lin)
        prods = np.multiply.reduceat(num / den, starts)
        out[k] = prods.sum()
    return out


def block_series(theta: ThetaTriple, sigma: complex, t: complex,
                 trunc: BlockTruncation = BlockTruncation(), variant: str = "standard") -> complex:
    coeffs = level_sums(theta, sigma, trunc.max_level, variant)
    poly = np.polynomial.polynomial.polyval(t, coeffs)
    return cmath.exp(-theta.thetat * t) * poly
