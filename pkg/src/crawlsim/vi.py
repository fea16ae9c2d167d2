"""Variational-inequality verification of candidate trajectories.

A trajectory of the crawler is characterized, without reference to any
particular solver, by three conditions on ``(y, k1, k2)``:

* the linear relation  ``M*y(t) + k1(t) + k2(t) = -m2 * dl/dt(t)``
  with ``k1(0) = 0`` and ``k2(0) = c2 = -M*y(0) - m2*dl/dt(0)``,
* for every continuous test function ``z`` and window ``[s, t]``:

      integral (z - y) dk1  +  integral f1*(|y| - |z|) dtau  <=  0

* the same inequality for body 2 with ``y + dl/dt`` in place of ``y``,
  ``k2`` in place of ``k1`` and threshold ``f2``.

The inequalities say exactly that the impulse rates lie in the Coulomb
subdifferentials ``dk1 in f1*sign(y) dt`` (and likewise for body 2); any
two trajectories satisfying all three conditions coincide, which is what
makes the check meaningful: a candidate produced by one solver is verified
against the conditions alone, not against another solver.

Checks run on the candidate's own sample grid.  Stieltjes integrals use
the midpoint rule ``sum 0.5*(v_j + v_{j+1}) * (k_{j+1} - k_j)`` and time
integrals the trapezoid rule, both windowed in O(1) through prefix sums.
Equality test functions (``z = y`` for body 1, ``z = y + dl/dt`` for body
2) produce exactly zero residual in floating point — every summand
vanishes identically — giving the suite a sharp self-test.

The pass tolerance is ``constant * (grid_spacing + epsilon_limit)``: the
discretization of the integrals costs ``O(grid_spacing)`` in the worst
case and a penalized candidate satisfies the inequalities only up to its
certified distance ``epsilon_limit`` from the limit (an exact event-driven
candidate passes ``epsilon_limit = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GaitProgram, PhysicalParams
from .penalized import PenalizedTrajectory
from .stickslip import EventTrajectory

__all__ = [
    "CandidateTrajectory",
    "candidate_from_penalized",
    "candidate_from_events",
    "TestFunction",
    "test_family",
    "stieltjes_midpoint",
    "vi_residual",
    "vi_tolerance",
    "linear_relation_residual",
    "CheckRow",
    "VerificationReport",
    "verify_trajectory",
    "uniqueness_gap",
]


@dataclass(frozen=True)
class CandidateTrajectory:
    """Solver-agnostic ``(y, k1, k2)`` candidate on a uniform grid."""

    source: str
    grid: np.ndarray
    y: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    c2: float

    def __post_init__(self) -> None:
        n = self.grid.shape
        for name in ("y", "k1", "k2"):
            if getattr(self, name).shape != n:
                raise ValueError(f"{name} must match the grid shape {n}")
        if self.grid.ndim != 1 or self.grid.size < 2:
            raise ValueError("grid must be 1-d with at least 2 samples")


def candidate_from_penalized(tr: PenalizedTrajectory) -> CandidateTrajectory:
    """Wrap a penalized run for verification."""
    return CandidateTrajectory(
        source=f"penalized[n1={tr.n.n1}, n2={tr.n.n2}]",
        grid=tr.grid,
        y=tr.y,
        k1=tr.k1,
        k2=tr.k2,
        c2=tr.c2,
    )


def candidate_from_events(tr: EventTrajectory) -> CandidateTrajectory:
    """Wrap an event-driven run for verification."""
    return CandidateTrajectory(
        source="events",
        grid=tr.grid,
        y=tr.y,
        k1=tr.k1,
        k2=tr.k2,
        c2=tr.c2,
    )


# ---------------------------------------------------------------------------
# Integrals
# ---------------------------------------------------------------------------


def stieltjes_midpoint(v: np.ndarray, k: np.ndarray, lo: int = 0, hi: int | None = None) -> float:
    """Midpoint Stieltjes sum of ``integral v dk`` over grid cells ``[lo, hi]``."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(k, dtype=float)
    if v.shape != k.shape or v.ndim != 1:
        raise ValueError("v and k must be matching 1-d arrays")
    hi = v.size - 1 if hi is None else hi
    if not (0 <= lo < hi <= v.size - 1):
        raise ValueError(f"bad window [{lo}, {hi}] for {v.size} samples")
    vm = 0.5 * (v[lo:hi] + v[lo + 1 : hi + 1])
    return float(np.sum(vm * np.diff(k[lo : hi + 1])))


def _prefix_stieltjes(v: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Prefix sums ``P[j] = integral of v dk over [grid[0], grid[j]]``."""
    cell = 0.5 * (v[:-1] + v[1:]) * np.diff(k)
    out = np.empty(v.size)
    out[0] = 0.0
    np.cumsum(cell, out=out[1:])
    return out


def _prefix_trapezoid(w: np.ndarray, grid: np.ndarray) -> np.ndarray:
    cell = 0.5 * (w[:-1] + w[1:]) * np.diff(grid)
    out = np.empty(w.size)
    out[0] = 0.0
    np.cumsum(cell, out=out[1:])
    return out


def vi_residual(
    f: float,
    v: np.ndarray,
    k: np.ndarray,
    z: np.ndarray,
    grid: np.ndarray,
    lo: int = 0,
    hi: int | None = None,
) -> float:
    """Residual of one friction inequality on one window.

    ``v`` is the body velocity, ``k`` its impulse, ``z`` the test function;
    the inequality holds when the returned value is ``<= 0`` up to
    tolerance.
    """
    hi = v.size - 1 if hi is None else hi
    s = stieltjes_midpoint(z - v, k, lo, hi)
    w = f * (np.abs(v) - np.abs(z))
    cell = 0.5 * (w[lo:hi] + w[lo + 1 : hi + 1]) * np.diff(grid[lo : hi + 1])
    return s + float(np.sum(cell))


def vi_tolerance(grid_spacing: float, epsilon_limit: float, constant: float = 1.0) -> float:
    """Pass threshold for inequality residuals.

    ``epsilon_limit`` is the candidate's certified sup-distance to the
    exact trajectory (zero for an exact candidate); ``grid_spacing`` pays
    for the quadrature.
    """
    if grid_spacing <= 0.0 or epsilon_limit < 0.0 or constant <= 0.0:
        raise ValueError("grid_spacing and constant must be positive, epsilon_limit >= 0")
    return constant * (grid_spacing + epsilon_limit)


def linear_relation_residual(
    params: PhysicalParams, gait: GaitProgram, cand: CandidateTrajectory
) -> float:
    """Max residual of ``M*y + k1 + k2 + m2*dl/dt`` over the grid."""
    ld = np.array([gait.eval(float(t))[1] for t in cand.grid])
    rel = params.M * cand.y + cand.k1 + cand.k2 + params.m2 * ld
    return float(np.max(np.abs(rel)))


# ---------------------------------------------------------------------------
# Test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TestFunction:
    """Named continuous test function, tabulated on the candidate grid."""

    name: str
    values: np.ndarray


def test_family(
    cand: CandidateTrajectory,
    gait: GaitProgram,
    seed: int = 0,
    n_random: int = 8,
) -> tuple[TestFunction, ...]:
    """Standard family of test functions for one candidate.

    Contains constants spanning the velocity range, both body velocities
    themselves (the equality members), perturbed copies, and seeded
    piecewise-linear functions.  All are bounded by ``B``, twice the
    velocity scale of the problem, which is where the inequalities have
    discriminating power.
    """
    grid = cand.grid
    ld = np.array([gait.eval(float(t))[1] for t in grid])
    w = cand.y + ld
    bound = 2.0 * (float(np.max(np.abs(cand.y))) + float(np.max(np.abs(ld))) + 1.0)

    fam: list[TestFunction] = []
    for c in np.linspace(-bound, bound, 9):
        fam.append(TestFunction(name=f"const({c:+.3g})", values=np.full(grid.size, c)))
    fam.append(TestFunction(name="velocity-body1", values=cand.y.copy()))
    fam.append(TestFunction(name="velocity-body2", values=w))
    span = grid[-1] - grid[0]
    hat = np.clip(1.0 - np.abs((grid - grid[0]) / span - 0.5) * 4.0, 0.0, 1.0)
    fam.append(TestFunction(name="body1+hat", values=cand.y + 0.4 * bound * hat))
    fam.append(TestFunction(name="body1-hat", values=cand.y - 0.4 * bound * hat))
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        n_nodes = int(rng.integers(4, 14))
        ts = np.sort(rng.uniform(grid[0], grid[-1], n_nodes))
        ts[0], ts[-1] = grid[0], grid[-1]
        vals = rng.uniform(-bound, bound, n_nodes)
        fam.append(
            TestFunction(name=f"piecewise-linear[{i}]", values=np.interp(grid, ts, vals))
        )
    return tuple(fam)


# ---------------------------------------------------------------------------
# Full verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRow:
    """Result of one inequality on one window."""

    body: int
    test: str
    window: tuple[float, float]
    residual: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of the full inequality suite on one candidate."""

    source: str
    ok: bool
    tolerance: float
    linear_residual: float
    linear_tolerance: float
    max_residual: float  # largest inequality residual seen (signed)
    rows: tuple[CheckRow, ...]

    def failures(self) -> tuple[CheckRow, ...]:
        return tuple(r for r in self.rows if not r.passed)


def _window_indices(
    grid: np.ndarray, n_random: int, seed: int
) -> list[tuple[int, int]]:
    n = grid.size
    half = n // 2
    wins = [(0, n - 1)]
    if half >= 1 and half < n - 1:
        wins += [(0, half), (half, n - 1)]
    rng = np.random.default_rng(seed + 1)
    for _ in range(n_random):
        lo = int(rng.integers(0, n - 2))
        hi = int(rng.integers(lo + 1, n))
        hi = min(hi, n - 1)
        if hi <= lo:
            hi = lo + 1
        wins.append((lo, hi))
    return wins


def verify_trajectory(
    params: PhysicalParams,
    gait: GaitProgram,
    cand: CandidateTrajectory,
    epsilon_limit: float = 0.0,
    seed: int = 0,
    n_random_tests: int = 8,
    n_random_windows: int = 100,
    tol_constant: float = 1.0,
    linear_tolerance: float = 1e-6,
) -> VerificationReport:
    """Run the complete characterization suite on one candidate.

    Checks the linear relation against ``linear_tolerance`` (scaled by the
    velocity magnitude) and both friction inequalities for every test
    function against every window.  ``epsilon_limit`` must be the
    candidate's convergence certificate when it comes from the penalized
    solver; exact candidates use ``0``.
    """
    grid = cand.grid
    spacing = float(grid[1] - grid[0])
    tol = vi_tolerance(spacing, epsilon_limit, tol_constant)
    lin_tol = linear_tolerance * max(1.0, float(np.max(np.abs(cand.y))))
    lin = linear_relation_residual(params, gait, cand)

    ld = np.array([gait.eval(float(t))[1] for t in grid])
    bodies = (
        (1, params.f1, cand.y, cand.k1),
        (2, params.f2, cand.y + ld, cand.k2),
    )
    fam = test_family(cand, gait, seed=seed, n_random=n_random_tests)
    wins = _window_indices(grid, n_random_windows, seed)

    rows: list[CheckRow] = []
    worst = -math.inf
    ok = lin <= lin_tol
    for body, f, v, k in bodies:
        for tf in fam:
            z = tf.values
            stj = _prefix_stieltjes(z - v, k)
            tim = _prefix_trapezoid(f * (np.abs(v) - np.abs(z)), grid)
            for lo, hi in wins:
                res = (stj[hi] - stj[lo]) + (tim[hi] - tim[lo])
                passed = res <= tol
                ok = ok and passed
                worst = max(worst, res)
                rows.append(
                    CheckRow(
                        body=body,
                        test=tf.name,
                        window=(float(grid[lo]), float(grid[hi])),
                        residual=res,
                        tolerance=tol,
                        passed=passed,
                    )
                )
    return VerificationReport(
        source=cand.source,
        ok=ok,
        tolerance=tol,
        linear_residual=lin,
        linear_tolerance=lin_tol,
        max_residual=worst,
        rows=tuple(rows),
    )


def uniqueness_gap(
    a: CandidateTrajectory, b: CandidateTrajectory
) -> tuple[float, float, float]:
    """Sup gaps ``(|y_a-y_b|, |k1_a-k1_b|, |(k1+k2)_a-(k1+k2)_b|)``.

    Both candidates must share the same grid.  Two verified trajectories
    of the same data can differ by at most the sum of their certified
    distances to the limit; larger gaps disprove one of them.
    """
    if a.grid.shape != b.grid.shape or not np.array_equal(a.grid, b.grid):
        raise ValueError("candidates must share the same sample grid")
    dy = float(np.max(np.abs(a.y - b.y)))
    dk1 = float(np.max(np.abs(a.k1 - b.k1)))
    dk12 = float(np.max(np.abs((a.k1 + a.k2) - (b.k1 + b.k2))))
    return (dy, dk1, dk12)
