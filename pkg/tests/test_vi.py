"""Inequality-system verification layer."""

import numpy as np
import pytest

from crawlsim import (
    CandidateTrajectory,
    candidate_from_events,
    candidate_from_penalized,
    linear_relation_residual,
    stieltjes_midpoint,
    test_family as make_test_family,
    uniqueness_gap,
    verify_trajectory,
    vi_residual,
    vi_tolerance,
)


def test_stieltjes_midpoint_exact_on_linear():
    grid = np.linspace(0.0, 1.0, 101)
    # integral of t dt: the midpoint rule telescopes to (1^2 - 0^2)/2 exactly
    assert stieltjes_midpoint(grid, grid) == pytest.approx(0.5, abs=1e-15)


def test_stieltjes_windows_are_additive():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(200)
    k = np.cumsum(rng.standard_normal(200)) * 1e-2
    full = stieltjes_midpoint(v, k, 0, 199)
    split = stieltjes_midpoint(v, k, 0, 77) + stieltjes_midpoint(v, k, 77, 199)
    assert split == pytest.approx(full, abs=1e-12)


def test_stieltjes_validation():
    v = np.zeros(10)
    with pytest.raises(ValueError):
        stieltjes_midpoint(v, np.zeros(9))
    with pytest.raises(ValueError):
        stieltjes_midpoint(v, v, 5, 5)


def test_vi_tolerance():
    assert vi_tolerance(1e-3, 0.0) == 1e-3
    assert vi_tolerance(1e-3, 2e-3, constant=2.0) == pytest.approx(6e-3)
    with pytest.raises(ValueError):
        vi_tolerance(0.0, 0.0)
    with pytest.raises(ValueError):
        vi_tolerance(1e-3, -1.0)


def test_candidate_validation():
    grid = np.linspace(0.0, 1.0, 11)
    with pytest.raises(ValueError):
        CandidateTrajectory("x", grid, np.zeros(10), np.zeros(11), np.zeros(11), 0.0)


def test_equality_member_residual_is_exact_zero(bench_oracle):
    cand = candidate_from_events(bench_oracle)
    # z identical to the velocity: every summand vanishes identically
    res = vi_residual(0.1, cand.y, cand.k1, cand.y, cand.grid)
    assert res == 0.0


def test_family_is_seeded_and_contains_equality_members(bench_oracle, bench):
    cand = candidate_from_events(bench_oracle)
    fam_a = make_test_family(cand, bench.gait, seed=5)
    fam_b = make_test_family(cand, bench.gait, seed=5)
    fam_c = make_test_family(cand, bench.gait, seed=6)
    names = [tf.name for tf in fam_a]
    assert "velocity-body1" in names and "velocity-body2" in names
    for a, b in zip(fam_a, fam_b):
        assert np.array_equal(a.values, b.values)
    assert any(
        not np.array_equal(a.values, c.values) for a, c in zip(fam_a, fam_c)
    )


def test_linear_relation_residual_small_on_both_solvers(bench, bench_run, bench_oracle):
    for cand in (candidate_from_penalized(bench_run), candidate_from_events(bench_oracle)):
        assert linear_relation_residual(bench.params, bench.gait, cand) < 1e-7


def test_verify_oracle_candidate(bench, bench_oracle):
    cand = candidate_from_events(bench_oracle)
    report = verify_trajectory(bench.params, bench.gait, cand, epsilon_limit=0.0)
    assert report.ok
    assert report.max_residual < 1e-4
    assert report.tolerance == pytest.approx(1e-3)
    # the equality members pass with exactly zero residual on every window
    for row in report.rows:
        if (row.body, row.test) in ((1, "velocity-body1"), (2, "velocity-body2")):
            assert row.residual == 0.0


def test_verify_penalized_candidate(bench, bench_run):
    # certified distance of the n = 800 run to the limit:
    # sqrt((f1^2 + f2^2)/800 * horizon) = sqrt(0.1/800*5) = 0.025
    cand = candidate_from_penalized(bench_run)
    eps = np.sqrt((0.1**2 + 0.3**2) / 800 * 5.0)
    report = verify_trajectory(bench.params, bench.gait, cand, epsilon_limit=eps)
    assert report.ok
    assert report.linear_residual <= report.linear_tolerance


def test_verify_rejects_gross_corruption(bench, bench_oracle):
    good = candidate_from_events(bench_oracle)
    bad = CandidateTrajectory(
        source="corrupted",
        grid=good.grid,
        y=good.y,
        k1=-good.k1,  # impulse with the wrong sign fights the motion
        k2=good.k2,
        c2=good.c2,
    )
    report = verify_trajectory(bench.params, bench.gait, bad)
    assert not report.ok


def test_verify_rejects_subtle_corruption_preserving_balance(bench, bench_oracle):
    # moving impulse between the bodies keeps M*y + k1 + k2 + m2*dl intact,
    # so only the inequalities can catch it
    good = candidate_from_events(bench_oracle)
    shift = 0.1 * np.sin(2.0 * np.pi * good.grid / 5.0)
    bad = CandidateTrajectory(
        source="balance-preserving corruption",
        grid=good.grid,
        y=good.y,
        k1=good.k1 + shift,
        k2=good.k2 - shift,
        c2=good.c2,
    )
    report = verify_trajectory(bench.params, bench.gait, bad)
    assert report.linear_residual <= report.linear_tolerance  # balance still holds
    assert not report.ok  # ... but the inequalities fail


def test_uniqueness_gap(bench_run, bench_oracle):
    a = candidate_from_penalized(bench_run)
    b = candidate_from_events(bench_oracle)
    dy, dk1, dk12 = uniqueness_gap(a, b)
    # the smoothed run is certified within 0.025 of the limit; the event
    # solution is exact, so the gap cannot exceed that certificate
    assert dy <= 0.025
    assert dk1 < 0.1 and dk12 < 0.1
    short = CandidateTrajectory("s", a.grid[:-1], a.y[:-1], a.k1[:-1], a.k2[:-1], a.c2)
    with pytest.raises(ValueError):
        uniqueness_gap(a, short)
