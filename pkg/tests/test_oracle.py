import numpy as np
import pytest

from isorabi.oracle import (FockTruncation, build_hamiltonian, converged_eigenvalues,
                            eigenvalues, parity_blocks)


def test_four_by_four():
    H = build_hamiltonian(0.5, 0.3, FockTruncation(1))
    ref = np.array([[0.3, 0, 0, 0.5],
                    [0, -0.3, 0.5, 0],
                    [0, 0.5, 1.3, 0],
                    [0.5, 0, 0, 0.7]])
    assert np.array_equal(H, ref)


def test_symmetric_bitwise():
    H = build_hamiltonian(0.27, 0.61, FockTruncation(40))
    assert np.array_equal(H, H.T)
    assert FockTruncation(40).dim == H.shape[0] == 82


def test_uncoupled():
    H = build_hamiltonian(0, 0.4, FockTruncation(10))
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    assert eigenvalues(0, 0.4)[:5] == pytest.approx([-0.4, 0.4, 0.6, 1.4, 1.6], abs=1e-14)


def test_displaced_oscillator():
    ev = eigenvalues(0.5, 0, FockTruncation(60))
    assert ev[:6] == pytest.approx([-0.25, -0.25, 0.75, 0.75, 1.75, 1.75], abs=1e-8)


def test_cutoff_convergence():
    a = eigenvalues(0.3, 0.5, FockTruncation(80))[0]
    b = eigenvalues(0.3, 0.5, FockTruncation(120))[0]
    assert abs(a - b) < 1e-10


@pytest.mark.parametrize("g", [0.1, 0.2, 0.3])
@pytest.mark.parametrize("delta", [0.2, 0.5, 0.7])
def test_doubling_window(g, delta):
    a = eigenvalues(g, delta, FockTruncation(80))[:8]
    b = eigenvalues(g, delta, FockTruncation(160))[:8]
    assert np.max(np.abs(a - b)) < 1e-10


def test_converged_eigenvalues():
    ev = converged_eigenvalues(0.2, 0.4, 5)
    assert ev == pytest.approx([-0.42244345325565613, 0.26509101296952897, 0.6895484271944664,
                                1.1954451457683148, 1.7582093209087952], abs=1e-12)


def test_parity_blocks():
    tr = FockTruncation(30)
    even, odd = parity_blocks(0.3, 0.45, tr)
    assert even.shape == odd.shape == (31, 31)
    both = np.sort(np.r_[np.linalg.eigvalsh(even), np.linalg.eigvalsh(odd)])
    assert np.max(np.abs(both - eigenvalues(0.3, 0.45, tr))) < 1e-10


def test_parity_blocks_uncoupled_are_diagonal():
    even, odd = parity_blocks(0, 0.3, FockTruncation(6))
    for b in (even, odd):
        assert np.count_nonzero(b - np.diag(np.diag(b))) == 0


def test_bad_truncation():
    with pytest.raises(ValueError):
        FockTruncation(0)
