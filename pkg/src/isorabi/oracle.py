"""Reference spectrum by dense diagonalization in a truncated Fock basis.

Basis ordering: index 2n is |n, +>, index 2n+1 is |n, ->.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FockTruncation:
    n_max: int = 80

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def dim(self) -> int:
        return 2 * (self.n_max + 1)


def build_hamiltonian(g: float, delta: float, trunc: FockTruncation = FockTruncation()) -> np.ndarray:
    """H = a^dag a + delta sigma_z + g sigma_x (a + a^dag), real symmetric."""
    n = np.arange(trunc.n_max + 1)
    H = np.zeros((trunc.dim, trunc.dim))
    H[2 * n, 2 * n] = n + delta
    H[2 * n + 1, 2 * n + 1] = n - delta
    m = n[:-1]
    c = g * np.sqrt(m + 1.0)
    for i, j in ((2 * m, 2 * m + 3), (2 * m + 1, 2 * m + 2)):
        H[i, j] = c
        H[j, i] = c
    return H


def eigenvalues(g: float, delta: float, trunc: FockTruncation = FockTruncation()) -> np.ndarray:
    return np.linalg.eigvalsh(build_hamiltonian(g, delta, trunc))


def parity_blocks(g: float, delta: float, trunc: FockTruncation = FockTruncation()):
    """The two blocks of the parity sigma_z (-1)^n, each of size n_max + 1.

    Returned as (even, odd) where even holds the states with sigma_z (-1)^n = +1.
    """
    H = build_hamiltonian(g, delta, trunc)
    n = np.arange(trunc.n_max + 1)
    plus_even = np.where(n % 2 == 0, 2 * n, 2 * n + 1)
    plus_odd = np.where(n % 2 == 0, 2 * n + 1, 2 * n)
    return H[np.ix_(plus_even, plus_even)], H[np.ix_(plus_odd, plus_odd)]


def converged_eigenvalues(g: float, delta: float, k: int = 8, n_max: int = 80,
                          tol: float = 1e-10, max_n: int = 1280) -> np.ndarray:
    """Lowest k eigenvalues, doubling n_max until they move by less than tol."""
    prev = eigenvalues(g, delta, FockTruncation(n_max))[:k]
    while 2 * n_max <= max_n:
        n_max *= 2
        cur = eigenvalues(g, delta, FockTruncation(n_max))[:k]
        if np.max(np.abs(cur - prev)) < tol:
            return cur
        prev = cur
    raise RuntimeError(f"Fock spectrum not stable to {tol} up to n_max={n_max}")
