import pytest

from isorabi.validate import FAMILIES, Tolerances, run, tau_checks


def test_tolerance_overrides():
    tol = Tolerances.from_env({"RABI_ORACLE": "1e-7", "RABI_APPARENT": "3e-11", "OTHER": "1"})
    assert tol.oracle == 1e-7 and tol.apparent == 3e-11 and tol.trace == 1e-4


def test_single_family():
    checks, timing = run(["schlesinger"])
    assert set(timing) == {"schlesinger"}
    assert {c.family for c in checks} == {"schlesinger"}
    assert all(c.passed for c in checks)


def test_sigma_corruption_is_caught():
    checks, _ = run(["monodromy"], grid=[(0.2, 0.5)], levels=2, sigma_offset=0.01)
    assert checks and not any(c.passed for c in checks)
    clean, _ = run(["monodromy"], grid=[(0.2, 0.5)], levels=2)
    assert all(c.passed for c in clean)


def test_tight_tolerance_fails():
    assert not all(c.passed for c in tau_checks(Tolerances(dlog2=1e-12)))


def test_unknown_family():
    with pytest.raises(ValueError):
        run(["nope"])
    assert "apparent" in FAMILIES
