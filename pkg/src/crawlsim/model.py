"""Physical model of a two-body dry-friction crawler.

Two point bodies of mass ``m1`` and ``m2`` slide along a line.  A massless
actuated linkage prescribes the gap ``x2(t) - x1(t) = l(t)`` between them,
and each body feels Coulomb dry friction from the ground with thresholds
``f1`` and ``f2`` (static and kinetic coefficients are equal).  Eliminating
the linkage constraint reduces the dynamics to a single velocity unknown
``y = dx1/dt``; body 2 then moves with ``y + dl/dt``.

This module holds the building blocks shared by every solver in the
package: parameter containers, the gait catalog (prescribed ``l(t)``
programs with analytic first and second derivatives), the pointwise
Coulomb force law, the body-body contact force, and position
reconstruction from sampled velocities.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

__all__ = [
    "STICK_BAND",
    "PhysicalParams",
    "InitialConditions",
    "BodyState",
    "Regime",
    "GaitProgram",
    "ConstantGait",
    "SinusoidGait",
    "PiecewiseParabolicGait",
    "SplineGait",
    "gait_eval",
    "forcing_breakpoints",
    "contact_force",
    "coulomb_force",
    "reconstruct_positions",
    "net_displacement_per_period",
]

# Velocities with |v| <= STICK_BAND are treated as "at rest" when deciding
# between the stick and slip branches of the friction law.  Configurable at
# every call site; this is only the shared default.
STICK_BAND = 1e-9


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysicalParams:
    """Masses and friction thresholds of the two bodies.

    ``M`` is always derived from ``m1 + m2`` so the total mass can never
    drift out of sync with the individual masses.
    """

    m1: float
    m2: float
    f1: float
    f2: float

    def __post_init__(self) -> None:
        for name in ("m1", "m2"):
            if _require_finite(name, getattr(self, name)) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        for name in ("f1", "f2"):
            if _require_finite(name, getattr(self, name)) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def M(self) -> float:
        """Total mass ``m1 + m2`` (recomputed, never stored)."""
        return self.m1 + self.m2


@dataclass(frozen=True)
class InitialConditions:
    """Initial reduced velocity ``y0 = dx1/dt(0)`` and position ``x1(0)``."""

    y0: float = 0.0
    x10: float = 0.0

    def __post_init__(self) -> None:
        _require_finite("y0", self.y0)
        _require_finite("x10", self.x10)


class BodyState(Enum):
    """Friction state of a single body: sticking or slipping in a direction."""

    STICK = "stick"
    SLIP_PLUS = "slip+"
    SLIP_MINUS = "slip-"

    @property
    def sigma(self) -> int:
        """Slip direction: +1 / -1 when slipping, 0 when sticking."""
        if self is BodyState.SLIP_PLUS:
            return 1
        if self is BodyState.SLIP_MINUS:
            return -1
        return 0


@dataclass(frozen=True)
class Regime:
    """Joint friction state of the pair, with slip directions.

    ``sigma1``/``sigma2`` are the slip directions (sign of the body velocity
    when slipping, sign of the driving force at breakaway, 0 while stuck).
    """

    body1: BodyState
    body2: BodyState
    sigma1: int
    sigma2: int

    def __post_init__(self) -> None:
        for name in ("sigma1", "sigma2"):
            if getattr(self, name) not in (-1, 0, 1):
                raise ValueError(f"{name} must be -1, 0 or +1")


def _sign(x: float) -> float:
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


# ---------------------------------------------------------------------------
# Gait catalog
# ---------------------------------------------------------------------------


class GaitProgram:
    """A prescribed linkage-length program ``l(t)``.

    Subclasses provide ``eval(t) -> (l, dl, ddl)`` with analytic first and
    second derivatives, a ``period`` attribute (``None`` when the program is
    not periodic), and ``kink_times()`` listing the offsets within one
    period where some derivative beyond the first is discontinuous (used by
    tests and quadrature to avoid sampling straddling a knot).
    """

    period: float | None = None

    def eval(self, t: float) -> tuple[float, float, float]:
        raise NotImplementedError

    def value(self, t: float) -> float:
        return self.eval(t)[0]

    def velocity(self, t: float) -> float:
        return self.eval(t)[1]

    def acceleration(self, t: float) -> float:
        return self.eval(t)[2]

    def kink_times(self) -> tuple[float, ...]:
        return ()


class ConstantGait(GaitProgram):
    """Fixed gap ``l(t) = l0``; periodic with any period (default 1)."""

    def __init__(self, l0: float, period: float = 1.0):
        if _require_finite("l0", l0) <= 0.0:
            raise ValueError(f"l0 must be positive, got {l0!r}")
        if _require_finite("period", period) <= 0.0:
            raise ValueError(f"period must be positive, got {period!r}")
        self.l0 = float(l0)
        self.period = float(period)

    def eval(self, t: float) -> tuple[float, float, float]:
        return (self.l0, 0.0, 0.0)


class SinusoidGait(GaitProgram):
    """Harmonic gap program ``l(t) = l0 + A sin(omega t + phase)``."""

    def __init__(self, l0: float, amplitude: float, omega: float, phase: float = 0.0):
        _require_finite("l0", l0)
        _require_finite("amplitude", amplitude)
        if _require_finite("omega", omega) <= 0.0:
            raise ValueError(f"omega must be positive, got {omega!r}")
        _require_finite("phase", phase)
        if abs(amplitude) >= l0:
            raise ValueError("amplitude must be smaller than l0 (gap stays positive)")
        self.l0 = float(l0)
        self.amplitude = float(amplitude)
        self.omega = float(omega)
        self.phase = float(phase)
        self.period = 2.0 * math.pi / self.omega

    def eval(self, t: float) -> tuple[float, float, float]:
        a, w = self.amplitude, self.omega
        arg = w * t + self.phase
        s = math.sin(arg)
        c = math.cos(arg)
        return (self.l0 + a * s, a * w * c, -a * w * w * s)


class PiecewiseParabolicGait(GaitProgram):
    """Periodic bang-bang gap program: piecewise-constant acceleration.

    The program is specified by per-segment ``(duration, acceleration)``
    pairs.  Integrating twice gives a continuous piecewise-linear velocity
    and a C^1 piecewise-parabolic gap.  Periodicity fixes the free
    constants: the accelerations must satisfy ``sum(a_i * d_i) == 0`` (the
    velocity returns to its starting value; rejected otherwise) and the
    base velocity is chosen so the gap itself returns to ``l0`` after one
    period.  The second derivative jumps at segment boundaries, which is
    inherent to parabolic profiles; a nontrivial periodic piecewise
    parabola cannot be C^2.
    """

    def __init__(self, l0: float, durations, accelerations):
        if _require_finite("l0", l0) <= 0.0:
            raise ValueError(f"l0 must be positive, got {l0!r}")
        durations = [float(d) for d in durations]
        accelerations = [float(a) for a in accelerations]
        if len(durations) == 0 or len(durations) != len(accelerations):
            raise ValueError("durations and accelerations must be equal-length, non-empty")
        for d in durations:
            if not math.isfinite(d) or d <= 0.0:
                raise ValueError(f"segment durations must be positive, got {d!r}")
        for a in accelerations:
            _require_finite("acceleration", a)
        drift = sum(a * d for a, d in zip(accelerations, durations))
        scale = max([1.0] + [abs(a * d) for a, d in zip(accelerations, durations)])
        if abs(drift) > 1e-10 * scale:
            raise ValueError(
                f"accelerations do not integrate to a periodic velocity: sum(a*d) = {drift!r}"
            )

        self.l0 = float(l0)
        self.durations = tuple(durations)
        self.accelerations = tuple(accelerations)
        self.period = float(sum(durations))

        # Segment-start times, velocity offsets w_i (relative to the base
        # velocity v0) and their integrals W_i.
        starts = [0.0]
        w = [0.0]
        W = [0.0]
        for d, a in zip(durations, accelerations):
            starts.append(starts[-1] + d)
            W.append(W[-1] + w[-1] * d + 0.5 * a * d * d)
            w.append(w[-1] + a * d)
        # v0 makes the gap periodic: integral of (v0 + w) over one period is 0.
        self._v0 = -W[-1] / self.period
        self._starts = np.asarray(starts[:-1])
        self._w = w[:-1]
        self._W = W[:-1]

    def eval(self, t: float) -> tuple[float, float, float]:
        P = self.period
        tau = math.fmod(t, P)
        if tau < 0.0:
            tau += P
        i = int(np.searchsorted(self._starts, tau, side="right")) - 1
        a = self.accelerations[i]
        dt = tau - self._starts[i]
        vel = self._v0 + self._w[i] + a * dt
        val = self.l0 + self._v0 * tau + self._W[i] + self._w[i] * dt + 0.5 * a * dt * dt
        return (val, vel, a)

    def kink_times(self) -> tuple[float, ...]:
        return tuple(float(s) for s in self._starts)


class SplineGait(GaitProgram):
    """Cubic-spline gap program through tabulated ``(t, l)`` samples.

    With ``periodic=True`` the spline closes smoothly over the sample span
    (first and last values must match) and evaluation wraps modulo the
    period.  Otherwise the spline is clamped: ``end_slopes`` fixes the
    first derivative at both ends (zero if omitted) and evaluation outside
    the span extrapolates the boundary cubics.  Construction verifies the
    second derivative is continuous at every interior knot.
    """

    def __init__(self, times, values, periodic: bool = True, end_slopes=None):
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.size < 4 or t.shape != v.shape:
            raise ValueError("need matching 1-d arrays of at least 4 samples")
        if not np.all(np.diff(t) > 0.0):
            raise ValueError("sample times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("samples must be finite")
        if np.any(v <= 0.0):
            raise ValueError("gap samples must be positive")
        if periodic:
            if end_slopes is not None:
                raise ValueError("end_slopes only applies to non-periodic splines")
            if v[0] != v[-1]:
                raise ValueError("periodic spline needs values[0] == values[-1]")
            self._spline = CubicSpline(t, v, bc_type="periodic")
            self.period = float(t[-1] - t[0])
        else:
            s0, s1 = (0.0, 0.0) if end_slopes is None else end_slopes
            self._spline = CubicSpline(t, v, bc_type=((1, float(s0)), (1, float(s1))))
            self.period = None
        self._t0 = float(t[0])
        self._knots = t

        # C^2 check at interior knots: the one-sided second derivatives of
        # adjacent cubic pieces must agree at the joint.  Piece i is
        # c0*(t-ti)^3 + c1*(t-ti)^2 + c2*(t-ti) + c3.
        c = self._spline.c
        h = np.diff(t)
        left = 6.0 * c[0, :-1] * h[:-1] + 2.0 * c[1, :-1]  # end of piece i-1
        right = 2.0 * c[1, 1:]  # start of piece i
        scale = max(1.0, float(np.max(np.abs(right))), float(np.max(np.abs(left))))
        if np.max(np.abs(left - right)) > 1e-8 * scale:
            raise ValueError("spline second derivative is discontinuous at a knot")

    def eval(self, t: float) -> tuple[float, float, float]:
        if self.period is not None:
            tau = self._t0 + math.fmod(t - self._t0, self.period)
            if tau < self._t0:
                tau += self.period
        else:
            tau = t
        return (
            float(self._spline(tau)),
            float(self._spline(tau, 1)),
            float(self._spline(tau, 2)),
        )

    def kink_times(self) -> tuple[float, ...]:
        # C^2 everywhere, but the third derivative jumps at knots.
        return tuple(float(k - self._t0) for k in self._knots[:-1])


def gait_eval(gait: GaitProgram, t: float) -> tuple[float, float, float]:
    """Evaluate ``(l, dl/dt, d2l/dt2)`` at time ``t``."""
    return gait.eval(t)


def forcing_breakpoints(links: Sequence[GaitProgram], horizon: float) -> list[float]:
    """Interior times in ``(0, horizon)`` where some link program has a kink.

    Periodic programs repeat their kink offsets every period; non-periodic
    ones contribute each offset once.  Near-coincident times are merged.
    Solvers split their work at these times so no step or scan straddles a
    forcing discontinuity.
    """
    if horizon <= 0.0 or not math.isfinite(horizon):
        raise ValueError(f"horizon must be finite and positive, got {horizon!r}")
    pts: set[float] = set()
    for link in links:
        offsets = link.kink_times()
        if not offsets:
            continue
        if link.period is None:
            candidates: Iterable[float] = offsets
        else:
            per = link.period
            reps = int(math.floor(horizon / per)) + 1
            candidates = (j * per + o for j in range(reps + 1) for o in offsets)
        for t in candidates:
            if 0.0 < t < horizon:
                pts.add(float(t))
    merged: list[float] = []
    tol = 1e-12 * max(1.0, horizon)
    for t in sorted(pts):
        if not merged or t - merged[-1] > tol:
            merged.append(t)
    return merged


# ---------------------------------------------------------------------------
# Forces
# ---------------------------------------------------------------------------


def contact_force(params: PhysicalParams, ddl: float, force1: float, force2: float) -> float:
    """Linkage contact force ``G2`` on body 2 (body 1 feels ``-G2``).

    ``force1``/``force2`` are the friction forces currently acting on the
    bodies.  Derived by eliminating the linkage constraint from the two
    Newton equations.
    """
    m1, m2 = params.m1, params.m2
    return (m1 * m2 / params.M) * (ddl + force2 / m2 - force1 / m1)


def coulomb_force(
    g: float, v: float, f: float, v_stick: float = STICK_BAND
) -> tuple[float, BodyState]:
    """Coulomb friction force on one body, with the regime it implies.

    ``g`` is the non-friction force acting on the body and ``v`` its
    velocity.  At rest the friction balances ``g`` exactly while
    ``|g| <= f`` (stick); otherwise the force saturates at the threshold,
    directed against the velocity when moving and against the driving force
    at breakaway.
    """
    if f < 0.0:
        raise ValueError("friction threshold must be >= 0")
    if abs(v) <= v_stick:
        if abs(g) <= f:
            return (g, BodyState.STICK)
        s = _sign(g)
        return (f * s, BodyState.SLIP_PLUS if s > 0 else BodyState.SLIP_MINUS)
    s = _sign(v)
    return (f * s, BodyState.SLIP_PLUS if s > 0 else BodyState.SLIP_MINUS)


def reconstruct_positions(
    grid: np.ndarray, y: np.ndarray, x10: float, gait: GaitProgram
) -> tuple[np.ndarray, np.ndarray]:
    """Rebuild body positions from sampled reduced velocity.

    ``x1`` integrates ``y`` with the composite trapezoid rule on the given
    grid; ``x2`` is literally ``x1 + l`` at every sample, so the gap
    matches the prescribed ``l`` to within one floating-point rounding.
    """
    grid = np.asarray(grid, dtype=float)
    y = np.asarray(y, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or grid.shape != y.shape:
        raise ValueError("grid and y must be matching non-empty 1-d arrays")
    if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
        raise ValueError("grid must be strictly increasing")
    if grid.size == 1:
        x1 = np.array([x10], dtype=float)
    else:
        x1 = x10 + cumulative_trapezoid(y, grid, initial=0.0)
    l_vals = np.array([gait.eval(t)[0] for t in grid])
    x2 = x1 + l_vals
    return (x1, x2)


def net_displacement_per_period(
    grid: np.ndarray, x1: np.ndarray, period: float, min_periods: int = 2
) -> float:
    """Net advance of body 1 over the last complete gait period.

    The first period is always discarded (start-up transient), so the run
    must cover at least ``min_periods >= 2`` full periods.  Sampled
    positions are interpolated linearly at the period boundaries.
    """
    grid = np.asarray(grid, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    if grid.ndim != 1 or grid.shape != x1.shape or grid.size < 2:
        raise ValueError("grid and x1 must be matching 1-d arrays with >= 2 samples")
    if not math.isfinite(period) or period <= 0.0:
        raise ValueError(f"period must be finite and positive, got {period!r}")
    if min_periods < 2:
        raise ValueError("min_periods must be >= 2: the first period is discarded")
    span = float(grid[-1] - grid[0])
    nfull = int(math.floor(span / period + 1e-9))
    if nfull < min_periods:
        raise ValueError(
            f"horizon {span:g} covers only {nfull} full period(s) of {period:g}; "
            f"need at least {min_periods}"
        )
    hi = grid[0] + nfull * period
    lo = hi - period
    return float(np.interp(hi, grid, x1) - np.interp(lo, grid, x1))
