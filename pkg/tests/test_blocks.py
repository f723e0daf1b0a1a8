import cmath

import numpy as np
import pytest

from isorabi.blocks import (BlockTruncation, ResonanceError, ThetaTriple, block_coeff,
                            block_series, level_sums)
from isorabi.partitions import Partition, partition_pairs

E, ONE = Partition(), Partition((1,))
TH1 = ThetaTriple(1, 1, 0)
# generic point; level-6 block from a direct mpmath double sum over diagram pairs
TH2 = ThetaTriple(0.3 + 0.1j, 0.45, 0.2)
S2 = 0.31 + 0.07j
B6_REF = 0.972441090503236554659623354641 + 0.0189158819188827805078878351275j


def test_empty_pair_is_one():
    assert block_coeff(TH2, S2, E, E) == 1


def test_unsquared_hand_values():
    assert block_coeff(TH1, 3, ONE, E, variant="unsquared") == 7.5
    assert block_coeff(TH1, 3, E, ONE, variant="unsquared") == -1.5


def test_standard_hand_values():
    # 3 (4^2-1) / (0+6)^2 and (-3)((-2)^2-1) / (0-6)^2
    assert block_coeff(TH1, 3, ONE, E) == 1.25
    assert block_coeff(TH1, 3, E, ONE) == -0.25


def test_unsquared_level_one_series():
    v = block_series(TH1, 3, 0.1, BlockTruncation(1), variant="unsquared")
    assert v == pytest.approx(np.exp(-0.1) * 1.6, rel=1e-14)


def test_series_at_zero():
    for L in (0, 3, 8):
        assert block_series(TH2, S2, 0, BlockTruncation(L)) == 1


def test_level_six_against_direct_sum():
    assert abs(block_series(TH2, S2, -0.16, BlockTruncation(6)) - B6_REF) < 1e-13


def test_level_sums_agree_with_coefficients():
    sums = level_sums(TH2, S2, 4)
    for k in range(5):
        direct = sum(block_coeff(TH2, S2, lam, mu) for lam, mu in partition_pairs(k))
        assert abs(sums[k] - direct) < 1e-13 * max(1, abs(direct))


def test_mirror_symmetry():
    th = ThetaTriple(0.37, 0.21, 0.0)
    for k in range(1, 5):
        for lam, mu in partition_pairs(k):
            a = block_coeff(th, 0.27, lam, mu)
            b = block_coeff(th, -0.27, mu, lam)
            assert abs(a - b) < 1e-12 * max(1, abs(a))


def test_truncation_consistency():
    th = ThetaTriple(0.4, 0.4, 0)
    t = -0.16
    s6 = block_series(th, 1.1, t, BlockTruncation(6))
    s8 = block_series(th, 1.1, t, BlockTruncation(8))
    c = level_sums(th, 1.1, 8)
    bound = abs(cmath.exp(-0.4 * t)) * (abs(c[7] * t**7) + abs(c[8] * t**8))
    assert abs(s6 - s8) <= bound * (1 + 1e-9)


def test_resonance_raises():
    with pytest.raises(ResonanceError):
        block_coeff(TH1, 0, ONE, E, variant="unsquared")
    with pytest.raises(ResonanceError):
        level_sums(TH1, 0.5, 2)


def test_bad_inputs():
    with pytest.raises(ValueError):
        BlockTruncation(-1)
    with pytest.raises(ValueError):
        block_coeff(TH1, 3, ONE, E, variant="printed")
