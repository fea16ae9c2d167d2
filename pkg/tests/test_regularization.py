"""Smoothed friction potential: envelope, gradient, resolvent, margins."""

import numpy as np
import pytest

from crawlsim import (
    FrictionPotential,
    RegularizationIndex,
    envelope,
    gradient,
    monotonicity_margin,
    resolvent,
    subdifferential,
)


def test_index_validation():
    n = RegularizationIndex(100, 200)
    assert n.scaled(2) == RegularizationIndex(200, 400)
    assert n.max == 200
    for bad in (0, -1, 2.5, True):
        with pytest.raises(ValueError):
            RegularizationIndex(bad, 100)


def test_potential_validation():
    assert FrictionPotential(0.0).value(3.0) == 0.0
    assert FrictionPotential(0.5).value(-2.0) == 1.0
    with pytest.raises(ValueError):
        FrictionPotential(-0.1)


def test_envelope_branch_values():
    pot = FrictionPotential(0.3)
    n = 10
    # inside the band (n|y| <= f): pure quadratic
    assert envelope(pot, n, 0.02) == pytest.approx(0.5 * 10 * 0.02**2, abs=1e-15)
    # outside: shifted absolute value
    assert envelope(pot, n, 0.5) == pytest.approx(0.3 * 0.5 - 0.09 / 20.0, abs=1e-15)
    # the two branches agree at the seam y = f/n
    seam = 0.3 / 10
    assert 0.5 * n * seam**2 == pytest.approx(0.3 * seam - 0.09 / (2 * n), abs=1e-15)


def test_envelope_monotone_in_n_and_below_potential():
    pot = FrictionPotential(0.25)
    ys = np.linspace(-2.0, 2.0, 401)
    for y in ys:
        lo = envelope(pot, 50, float(y))
        hi = envelope(pot, 100, float(y))
        assert lo <= hi + 1e-15
        assert hi <= pot.value(float(y)) + 1e-15


def test_envelope_exact_tail():
    # outside the band the defect against f|y| is exactly f^2/(2n)
    pot = FrictionPotential(0.4)
    n = 37
    for y in (0.4 / n + 1e-6, 0.5, -1.3, 10.0):
        assert pot.value(y) - envelope(pot, n, y) == pytest.approx(
            0.4**2 / (2 * n), abs=1e-15
        )


def test_gradient_is_clamp_and_derivative_of_envelope():
    pot = FrictionPotential(0.3)
    n = 25
    assert gradient(pot, n, 0.001) == pytest.approx(0.025, abs=1e-15)
    assert gradient(pot, n, 1.0) == 0.3
    assert gradient(pot, n, -1.0) == -0.3
    # finite differences of the envelope, excluding the kink band edges
    h = 1e-7
    rng = np.random.default_rng(7)
    for y in rng.uniform(-2.0, 2.0, 200):
        if abs(abs(n * y) - pot.f) < 10 * n * h:
            continue  # FD straddles the seam there
        fd = (envelope(pot, n, y + h) - envelope(pot, n, y - h)) / (2 * h)
        assert abs(fd - gradient(pot, n, float(y))) < 1e-6


def test_resolvent_branches():
    pot = FrictionPotential(0.3)
    n = 10
    assert resolvent(pot, n, 0.02) == 0.0  # inside band: collapses to zero
    assert resolvent(pot, n, 0.5) == pytest.approx(0.5 - 0.03, abs=1e-15)
    assert resolvent(pot, n, -0.5) == pytest.approx(-0.47, abs=1e-15)


def test_resolvent_inclusion_exact_sweep():
    # the defining inclusion gradient(y) in d(phi)(resolvent(y)) holds with
    # zero tolerance: branchwise evaluation leaves no roundoff at the seams
    rng = np.random.default_rng(42)
    for _ in range(2000):
        f = float(rng.uniform(0.0, 2.0))
        n = int(rng.integers(1, 10_000))
        y = float(rng.uniform(-5.0, 5.0))
        pot = FrictionPotential(f)
        g = gradient(pot, n, y)
        j = resolvent(pot, n, y)
        lo, hi = subdifferential(pot, j, v_stick=0.0)
        assert lo <= g <= hi


def test_subdifferential():
    pot = FrictionPotential(0.2)
    assert subdifferential(pot, 1.0) == (0.2, 0.2)
    assert subdifferential(pot, -1.0) == (-0.2, -0.2)
    assert subdifferential(pot, 0.0) == (-0.2, 0.2)


def test_monotonicity_margin_nonnegative_sweep():
    rng = np.random.default_rng(3)
    worst = np.inf
    for _ in range(5000):
        f = float(rng.uniform(0.0, 1.5))
        pot = FrictionPotential(f)
        n = int(rng.integers(1, 5000))
        r = int(rng.integers(1, 5000))
        y1 = float(rng.uniform(-3.0, 3.0))
        y2 = float(rng.uniform(-3.0, 3.0))
        m = monotonicity_margin(pot, y1, y2, n, r)
        worst = min(worst, m)
        assert m >= 0.0
    assert worst >= 0.0


def test_monotonicity_margin_adversarial_band_edges():
    # the bound is tightest when both points sit at opposite band edges
    pot = FrictionPotential(1.0)
    for n, r in ((1, 1), (1, 1000), (7, 13)):
        for s in (1.0, -1.0):
            y1 = s * 1.0 / n  # exactly at the seam
            y2 = -s * 1.0 / r
            assert monotonicity_margin(pot, y1, y2, n, r) >= 0.0
