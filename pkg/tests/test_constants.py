import cmath
import math

import pytest

from isorabi.blocks import ResonanceError, ThetaTriple
from isorabi.constants import (GammaPoleError, constant_ratio, constant_ratio_direct,
                               constant_ratio_table, log_gamma)

# reference ratios from mpmath.barnesg at 30 digits
TH_R, SIG_R = ThetaTriple(0.8, 0.8, 0), 2.2
D_REF = {1: 5.51505214264127346477397324625e-7, -1: -766.513640473956757068500690418}
TH_G, SIG_G = ThetaTriple(0.3 + 0.1j, 0.45, 0.2), 0.31 + 0.07j
DG_REF = {
    -2: -0.00406884107124982914107851725652 + 0.00992430640549608297542226805752j,
    1: -0.00962041417969658479752094055717 - 0.0571181990496274740499638606361j,
    3: -4.76009607766853369762582245585e-13 - 3.15443047017703168699559463092e-13j,
}


def test_log_gamma_values():
    assert log_gamma(1) == 0
    assert log_gamma(0.5) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-15)
    ref = 1.20963215300324360813268858898 + 1.42702170204027861960879115857j
    assert abs(log_gamma(3.7 + 1.2j) - ref) < 1e-13


@pytest.mark.parametrize("z", [0, -1, -7, -3 + 1e-14])
def test_log_gamma_poles(z):
    with pytest.raises(GammaPoleError):
        log_gamma(z)


def test_ratio_against_barnes_g():
    for n, ref in D_REF.items():
        assert abs(constant_ratio(TH_R, SIG_R, n) - ref) < 1e-11 * abs(ref)
    for n, ref in DG_REF.items():
        assert abs(constant_ratio(TH_G, SIG_G, n) - ref) < 1e-11 * abs(ref)


def test_zero_shift():
    assert constant_ratio(TH_G, SIG_G, 0) == 1


@pytest.mark.parametrize("m", range(-3, 4))
@pytest.mark.parametrize("n", range(-3, 4))
def test_cocycle(m, n):
    lhs = constant_ratio(TH_G, SIG_G, m + n)
    rhs = constant_ratio(TH_G, SIG_G, m) * constant_ratio(TH_G, SIG_G + m, n)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


@pytest.mark.parametrize("n", range(-6, 7))
def test_log_space_matches_direct(n):
    a = constant_ratio(TH_G, SIG_G, n)
    b = constant_ratio_direct(TH_G, SIG_G, n)
    assert abs(a - b) <= 1e-10 * abs(b)


def test_reciprocal_pole_gives_zero():
    # theta0 = thetat = 0.3, sigma = 0.6: 1/Gamma(1 + 0.6 - sigma - 1) = 0
    th = ThetaTriple(0.3, 0.3, 0)
    assert constant_ratio(th, 0.6, 1) == 0
    assert constant_ratio(th, 0.6 + 0.01j, 1) != 0


def test_numerator_pole_raises():
    # Gamma(1 + 0.6 + sigma) with sigma = -1.6
    th = ThetaTriple(0.3, 0.3, 0)
    with pytest.raises(ResonanceError):
        constant_ratio(th, -1.6, 1)


def test_table():
    tab = constant_ratio_table(TH_G, SIG_G, 3)
    assert tab[0] == 1
    assert len(tab.as_array()) == 7
    assert cmath.isclose(tab[1], DG_REF[1], rel_tol=1e-11)
    with pytest.raises(ValueError):
        constant_ratio_table(TH_G, SIG_G, -1)
