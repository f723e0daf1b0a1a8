import math

import numpy as np
import pytest

from isorabi.blocks import BlockTruncation
from isorabi.rabi import (RabiParams, SolverOptions, branch_mismatch, centred_shift,
                          initial_conditions, ladder_seeds, monodromy_from_rabi, residuals,
                          solve_level, spectrum, tau_series, third_condition)

# Fock spectra (n_max doubled from 80 until stable to 1e-10)
FOCK = {
    (0.1, 0.4): [-0.4055693005473374, 0.35709144885029576, 0.631741989570801, 1.3280656958313661],
    (0.05, 0.3): [-0.3015634158049522, 0.29380723054517605, 0.7030641000262167, 1.289287265031255],
    (0.2, 0.7): [-0.7168306408224328, 0.18909536642083766, 0.776877877444207, 1.119358180577444],
}


def test_monodromy_data():
    m = monodromy_from_rabi(RabiParams(0.5, 0.2, 0.25), 0)
    assert (m.theta0, m.thetat, m.thetainf, m.sigma) == (0.5, 0.5, 0.0, 1.0)
    m = monodromy_from_rabi(RabiParams(0.3, 0.2, -0.5), 1)
    assert m.theta0 == pytest.approx(-0.41) and m.sigma == pytest.approx(1.18)
    p = RabiParams(0.3, 0.2, 0.17)
    assert monodromy_from_rabi(p, 3).sigma - monodromy_from_rabi(p, 2).sigma == pytest.approx(2)


def test_series_variables_are_halved():
    m = monodromy_from_rabi(RabiParams(0.3, 0.2, 0.17), 1)
    assert m.series_sigma() == m.sigma / 2
    assert m.series_theta().theta0 == m.theta0 / 2


def test_initial_condition_targets():
    assert initial_conditions(RabiParams(0.3, 0.0, -0.09)) == (0, 0)
    E = 0.31
    h1, h2 = initial_conditions(RabiParams(0.2, 0.4, E))
    assert h1 == pytest.approx((E + 0.04) / 2 + 1)
    assert h2 == pytest.approx(6.25)


def test_third_condition():
    p = RabiParams(0.2, 0.4, 0.1)
    t = -0.16
    assert third_condition(p) == pytest.approx(-0.16 / t**2 - 0.32 / t**3)


def test_centred_shift():
    assert centred_shift(0.3, 0.2) == 0
    assert centred_shift(1.7, 0.2) == -2
    # negative theta keeps n = 0 so C(sigma) does not vanish
    assert centred_shift(-0.9, 0.2) == 0


def test_seeds_split_on_resonance():
    seeds = ladder_seeds(0.2, 0.5, 4)
    # delta = 1/2 puts 1 - delta and 0 + delta on the same half-integer theta
    assert any(abs(s - (0.5 - 0.04 - 0.1)) < 1e-12 for s in seeds)
    assert seeds == sorted(seeds)


def test_solve_from_nearby_seed():
    r = solve_level(0.1, 0.4, None, 0.39)
    assert r.converged
    assert abs(r.E - FOCK[(0.1, 0.4)][1]) < 1e-5
    assert abs(r.imag_E) < 1e-6
    assert np.linalg.norm(residuals(RabiParams(0.1, 0.4, r.E), r.n, r.s)) < 1e-8


def test_root_is_on_physical_branch():
    r = solve_level(0.2, 0.7, None, 0.7 - 0.5 - 0.04)
    p = RabiParams(0.2, 0.7, r.E)
    assert r.converged and abs(r.E - FOCK[(0.2, 0.7)][1]) < 1e-5
    assert branch_mismatch(tau_series(p, r.n, r.s), p) < 1e-6
    res = residuals(p, r.n, r.s)
    assert max(abs(r_.imag) for r_ in res) < 1e-8


def test_quantization_consistency():
    r = solve_level(0.2, 0.7, None, -0.74)
    th = r.E + 0.04
    assert math.cos(math.pi * r.sigma.real) == pytest.approx(math.cos(2 * math.pi * th), abs=1e-10)


@pytest.mark.parametrize("key", list(FOCK))
def test_spectrum_matches_fock(key):
    res = spectrum(*key, 4)
    assert all(r.converged for r in res)
    assert [r.E for r in res] == pytest.approx(FOCK[key], abs=1e-5)
    Es = [r.E for r in res]
    assert all(b - a > 1e-6 for a, b in zip(Es, Es[1:]))


def test_decoupled_limit():
    res = spectrum(0.3, 0, 4)
    assert [r.E for r in res] == pytest.approx([m - 0.09 for m in range(4)], abs=1e-12)
    assert all("decoupled" in r.message for r in res)
    assert solve_level(0.2, 0, None, 1.9).E == pytest.approx(1.96, abs=1e-12)


def test_truncation_is_recorded():
    r = solve_level(0.1, 0.4, None, -0.42, BlockTruncation(8))
    assert r.truncation == (4, 8) and r.converged


def test_large_g_warns():
    with pytest.warns(RuntimeWarning):
        solve_level(0.4, 0.5, None, -0.66, opts=SolverOptions(newton_starts=1, max_iter=2))


def test_rejects_nonpositive_g():
    with pytest.raises(ValueError):
        spectrum(0, 0.4)
    with pytest.raises(ValueError):
        solve_level(-0.1, 0.4, 0, 0.1)
