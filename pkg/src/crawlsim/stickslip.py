"""Event-driven reference solver for the unregularized stick-slip dynamics.

Between friction-state transitions the crawler sits in one of four regimes
(both bodies slipping, exactly one stuck, or both at rest), and in each
regime the reduced dynamics integrate in closed form against the gait:

* both slip:  M * dy/dt = -m2*ddl - f1*s1 - f2*s2   (s_i the slip signs)
* body 1 stuck:  y = 0, body 2 is dragged by the linkage at dl/dt
* body 2 stuck:  y = -dl/dt, body 1 moves against its own friction
* both at rest:  possible only while the gait holds dl/dt identically zero

Transitions are located by scanning each regime's exit functions (a body
velocity reaching zero, or a stuck body's static-force margin reaching its
threshold) on a fine grid and polishing the bracketed crossing with a root
finder.  Friction impulses ``k1``/``k2`` and the position ``x1`` accumulate
in closed form per phase, so this solver has no step-size error at all:
its only inaccuracies are the event times (root-finder tolerance) and
events closer together than the scan resolution.

This is deliberately a completely different discretization from
`crawlsim.penalized` — no smoothing index, no Runge-Kutta steps — which is
what makes agreement between the two solvers meaningful evidence.

Stuck bodies: a body at rest stays stuck while the force the rest of the
system exerts on it fits under its static threshold.  With body 1 stuck,
the linkage transmits ``G1 = -(m2*ddl + f2*s2)`` to it, so it holds while
``|m2*ddl + f2*s2| <= f1``; with body 2 stuck the transmitted force is
``G2 = m1*ddl - f1*s1`` against threshold ``f2``.  When both bodies sit at
rest at an instant where the gait still accelerates, the kinematic
constraint forces one of them to move; which one follows the same margins
with the incipient slip directions ``s2 = sign(ddl)``, ``s1 = -sign(ddl)``
(at most one margin can hold, and when neither does, slipping in those
directions is self-consistent).
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import (
    STICK_BAND,
    BodyState,
    GaitProgram,
    InitialConditions,
    PhysicalParams,
    Regime,
    forcing_breakpoints,
)

__all__ = [
    "OracleError",
    "EventConfig",
    "Event",
    "Phase",
    "EventTrajectory",
    "classify_regime",
    "simulate_events",
    "phase_values",
    "phase_forces",
]


class OracleError(RuntimeError):
    """Event-driven solve failed (degenerate data or event accumulation)."""


@dataclass(frozen=True)
class EventConfig:
    """Resolution knobs of the event-driven solver.

    ``scan_dt`` is the spacing at which exit functions are sampled while
    hunting for the next transition; crossings closer together than this
    can be missed.  ``None`` picks ``min(output_grid, period/2048)``.
    ``time_tol`` is the event-time tolerance relative to the horizon.
    """

    scan_dt: float | None = None
    time_tol: float = 1e-10
    v_stick: float = STICK_BAND
    max_events: int = 200_000
    output_grid: float = 1e-3

    def __post_init__(self) -> None:
        if self.scan_dt is not None and not (
            math.isfinite(self.scan_dt) and self.scan_dt > 0.0
        ):
            raise ValueError(f"scan_dt must be finite and positive, got {self.scan_dt!r}")
        for name in ("time_tol", "v_stick", "output_grid"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be finite and positive, got {v!r}")
        if self.max_events < 1:
            raise ValueError("max_events must be >= 1")


@dataclass(frozen=True)
class Event:
    """One friction-state transition.

    ``kind`` is one of ``"body1-stop"``, ``"body2-stop"`` (a slipping body
    reached zero velocity), ``"body1-break:+"`` / ``"body1-break:-"`` /
    ``"body2-break:+"`` / ``"body2-break:-"`` (a stuck body's static margin
    saturated; the suffix is its new slip direction), or ``"wake"`` (the
    gait became active again after a rest).
    """

    time: float
    kind: str
    before: Regime
    after: Regime


@dataclass(frozen=True)
class Phase:
    """One maximal stretch of constant friction regime, with its closed form.

    The stored start state (``y0``, ``x10``, ``k10``, ``k20`` plus the gait
    values ``l0``, ``ld0`` at ``t0``) determines the trajectory on
    ``[t0, t1]`` exactly; `phase_values` evaluates it.
    """

    t0: float
    t1: float
    regime: Regime
    y0: float
    x10: float
    k10: float
    k20: float
    l0: float
    ld0: float


@dataclass(frozen=True)
class EventTrajectory:
    """Exact stick-slip solution, sampled on a uniform grid.

    ``k2`` includes the integration constant ``c2`` fixed at ``t = 0`` by
    the linear relation, mirroring the penalized solver's convention.
    Samples at an event time carry the regime of the phase that ends there.
    """

    params: PhysicalParams
    gait: GaitProgram
    grid: np.ndarray
    y: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    x1: np.ndarray
    regime1: tuple[BodyState, ...]
    regime2: tuple[BodyState, ...]
    c2: float
    phases: tuple[Phase, ...]
    events: tuple[Event, ...]

    def phase_at(self, t: float) -> Phase:
        """Phase whose (left-open) time span contains ``t``."""
        starts = [ph.t0 for ph in self.phases]
        idx = max(0, bisect_left(starts, float(t)) - 1)
        if idx + 1 < len(self.phases) and t > self.phases[idx].t1:
            idx += 1  # guard against float dust between adjacent spans
        return self.phases[idx]

    def sample(self, t: float) -> tuple[float, float, float, float]:
        """Exact ``(y, k1, k2, x1)`` at an arbitrary time in the horizon."""
        return phase_values(self.params, self.gait, self.phase_at(t), float(t))


def _sgn(x: float) -> int:
    return 1 if x > 0.0 else (-1 if x < 0.0 else 0)


def _regime(s1: int, s2: int) -> Regime:
    def state(s: int) -> BodyState:
        if s > 0:
            return BodyState.SLIP_PLUS
        if s < 0:
            return BodyState.SLIP_MINUS
        return BodyState.STICK

    return Regime(body1=state(s1), body2=state(s2), sigma1=s1, sigma2=s2)


# ---------------------------------------------------------------------------
# Per-phase closed forms
# ---------------------------------------------------------------------------


def phase_values(
    params: PhysicalParams, gait: GaitProgram, phase: Phase, t: float
) -> tuple[float, float, float, float]:
    """Closed-form ``(y, k1, k2, x1)`` of ``phase`` at time ``t``.

    Valid for ``t`` in the phase's span; the formulas only involve the gait
    values at ``t`` and the stored start state, never a step history.
    """
    m1, m2, M = params.m1, params.m2, params.M
    f1, f2 = params.f1, params.f2
    s1, s2 = phase.regime.sigma1, phase.regime.sigma2
    l, ld, _ = gait.eval(t)
    tau = t - phase.t0
    if s1 != 0 and s2 != 0:  # both slipping
        coasting = phase.y0 + (m2 / M) * phase.ld0
        c = (f1 * s1 + f2 * s2) / M
        y = coasting - (m2 / M) * ld - c * tau
        x1 = phase.x10 + coasting * tau - 0.5 * c * tau * tau - (m2 / M) * (l - phase.l0)
        k1 = phase.k10 + f1 * s1 * tau
        k2 = phase.k20 + f2 * s2 * tau
    elif s1 == 0 and s2 != 0:  # body 1 stuck
        y = 0.0
        x1 = phase.x10
        k1 = phase.k10 - m2 * (ld - phase.ld0) - f2 * s2 * tau
        k2 = phase.k20 + f2 * s2 * tau
    elif s1 != 0:  # body 2 stuck
        y = -ld
        x1 = phase.x10 - (l - phase.l0)
        k1 = phase.k10 + f1 * s1 * tau
        k2 = phase.k20 + m1 * (ld - phase.ld0) - f1 * s1 * tau
    else:  # both at rest (gait quiet)
        y = 0.0
        x1 = phase.x10
        k1 = phase.k10
        k2 = phase.k20
    return (y, k1, k2, x1)


def phase_forces(
    params: PhysicalParams, gait: GaitProgram, phase: Phase, t: float
) -> tuple[float, float, float]:
    """Friction forces ``(F1, F2)`` and linkage force ``G2`` within a phase."""
    m1, m2, M = params.m1, params.m2, params.M
    f1, f2 = params.f1, params.f2
    s1, s2 = phase.regime.sigma1, phase.regime.sigma2
    _, _, ldd = gait.eval(t)
    if s1 != 0 and s2 != 0:
        F1, F2 = f1 * s1, f2 * s2
        dy = (-m2 * ldd - F1 - F2) / M
        return (F1, F2, m2 * (dy + ldd) + F2)
    if s1 == 0 and s2 != 0:
        F2 = f2 * s2
        G2 = m2 * ldd + F2
        return (-G2, F2, G2)
    if s1 != 0:
        F1 = f1 * s1
        G2 = m1 * ldd - F1
        return (F1, G2, G2)
    return (0.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Regime decision at an instant
# ---------------------------------------------------------------------------


def _quiet_until(gait: GaitProgram, t: float, t_end: float, band: float) -> float:
    """Largest ``t' <= t_end`` with ``dl/dt`` identically ~0 on ``[t, t']``.

    Checked piecewise between the gait's kinks by sampling; returns ``t``
    itself when the gait is active immediately after ``t``.
    """
    if t_end <= t:
        return t
    cuts = [c for c in forcing_breakpoints((gait,), t_end) if c > t]
    edges = [t] + cuts + [t_end]
    quiet_end = t
    for a, b in zip(edges[:-1], edges[1:]):
        ts = np.linspace(a, b, 9)
        ts[-1] = np.nextafter(b, a)  # stay left of the kink at b
        ok = all(
            abs(v) <= band and abs(acc) <= band
            for (_, v, acc) in (gait.eval(float(s)) for s in ts)
        )
        if not ok:
            break
        quiet_end = b
    return quiet_end


def _decide(
    params: PhysicalParams,
    gait: GaitProgram,
    t: float,
    y: float,
    band: float,
    t_end: float,
) -> tuple[int, int, float | None]:
    """Slip signs ``(s1, s2)`` of the regime entered at ``(t, y)``.

    The third element is the rest horizon when both bodies stay at rest
    (``None`` otherwise).  Degenerate instants (both bodies at rest while
    the gait acceleration vanishes only momentarily) are resolved by
    probing slightly later times; genuinely ambiguous data raise
    `OracleError`.
    """
    m1, m2, f1, f2 = params.m1, params.m2, params.f1, params.f2
    probe = t
    nudge = max(1e-12 * max(1.0, abs(t_end)), 1e-15)
    probe_cap = t + 1e-6 * max(1.0, abs(t_end))
    for _ in range(48):
        _, ld, ldd = gait.eval(probe)
        v1 = y
        v2 = y + ld
        if abs(v1) > band and abs(v2) > band:
            return (_sgn(v1), _sgn(v2), None)
        if abs(v1) <= band < abs(v2):
            s2 = _sgn(v2)
            margin = m2 * ldd + f2 * s2  # = -G1 while body 1 holds
            if abs(margin) <= f1:
                return (0, s2, None)
            return (-_sgn(margin), s2, None)
        if abs(v2) <= band < abs(v1):
            s1 = _sgn(v1)
            margin = m1 * ldd - f1 * s1  # = G2 while body 2 holds
            if abs(margin) <= f2:
                return (s1, 0, None)
            return (s1, _sgn(margin), None)
        # Both bodies at rest.
        quiet = _quiet_until(gait, probe, t_end, band)
        if quiet > probe + nudge:
            return (0, 0, quiet)
        if abs(ldd) > band:
            s = _sgn(ldd)
            if m2 * abs(ldd) + f2 <= f1:
                return (0, s, None)
            if m1 * abs(ldd) + f1 <= f2:
                return (-s, 0, None)
            return (-s, s, None)
        # Momentarily vanishing acceleration: look slightly ahead.
        probe = probe + nudge
        nudge *= 4.0
        if probe >= t_end:
            return (0, 0, t_end)
        if probe > probe_cap:
            break
    raise OracleError(
        f"cannot classify the friction regime near t = {t:.9g}: "
        "the gait is degenerate there (acceleration vanishes to high order)"
    )


def classify_regime(
    params: PhysicalParams,
    gait: GaitProgram,
    t: float,
    y: float,
    v_stick: float = STICK_BAND,
) -> Regime:
    """Friction regime the exact dynamics enter at time ``t`` with velocity ``y``."""
    horizon = t + (gait.period if gait.period is not None else 1.0)
    s1, s2, _ = _decide(params, gait, t, y, v_stick, horizon)
    return _regime(s1, s2)


# ---------------------------------------------------------------------------
# Event hunting
# ---------------------------------------------------------------------------


def _first_crossing(fns, t0, t_end, dt, skip, xtol):
    """Earliest strict down-crossing of any exit function on ``(t0, t_end]``.

    Each entry of ``fns`` is ``(g, tag)`` with ``g(t) >= 0`` while the
    current regime persists.  Returns ``(time, tag)`` or ``(None, None)``.
    Functions are sampled every ``dt`` starting at ``t0 + skip``; a bracketed
    crossing is polished with a root finder (jumps land on the jump time).
    """
    if not fns or t_end <= t0:
        return (None, None)
    prev_t = t0 + min(skip, 0.5 * (t_end - t0))
    prev = [g(prev_t) for g, _ in fns]
    hits = [(prev_t, tag) for val, (_, tag) in zip(prev, fns) if val < 0.0]
    if hits:
        return min(hits)  # crossed already within the skip: take it there
    t = prev_t
    while t < t_end:
        t = min(t + dt, t_end)
        cur = [g(t) for g, _ in fns]
        hits = []
        for val, pval, (g, tag) in zip(cur, prev, fns):
            if val < 0.0:
                if pval > 0.0:
                    root = brentq(g, prev_t, t, xtol=xtol)
                    hits.append((float(root), tag))
                else:  # left end sat exactly on the threshold
                    hits.append((prev_t, tag))
        if hits:
            return min(hits)
        prev, prev_t = cur, t
    return (None, None)


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def simulate_events(
    params: PhysicalParams,
    gait: GaitProgram,
    ic: InitialConditions,
    horizon: float,
    cfg: EventConfig = EventConfig(),
) -> EventTrajectory:
    """Solve the exact stick-slip dynamics on ``[0, horizon]`` by events."""
    if not math.isfinite(horizon) or horizon <= 0.0:
        raise ValueError(f"horizon must be finite and positive, got {horizon!r}")
    T = float(horizon)
    band = cfg.v_stick
    time_tol = cfg.time_tol * max(1.0, T)
    skip = 10.0 * time_tol
    xtol = max(1e-15, 0.1 * time_tol)
    if cfg.scan_dt is not None:
        scan_dt = cfg.scan_dt
    elif gait.period is not None:
        scan_dt = min(cfg.output_grid, gait.period / 2048.0)
    else:
        scan_dt = cfg.output_grid

    m1, m2, M = params.m1, params.m2, params.M
    f1, f2 = params.f1, params.f2

    t = 0.0
    y = 0.0 if abs(ic.y0) <= band else float(ic.y0)
    l0, ld0, _ = gait.eval(0.0)
    c2 = -M * ic.y0 - m2 * ld0
    k1, k2, x1 = 0.0, c2, float(ic.x10)

    phases: list[Phase] = []
    events: list[Event] = []
    s1, s2, rest_until = _decide(params, gait, t, y, band, T)
    stalls = 0

    while True:
        l_a, ld_a, _ = gait.eval(t)
        if s1 == 0:
            y = 0.0  # stuck (or resting) body 1 pins the reduced velocity
        elif s2 == 0:
            y = -ld_a  # stuck body 2 pins it to the gait rate
        regime = _regime(s1, s2)

        # --- exit functions of the current regime ------------------------
        fns = []
        if s1 != 0 and s2 != 0:
            coasting = y + (m2 / M) * ld_a
            c = (f1 * s1 + f2 * s2) / M

            def y_of(tt, _co=coasting, _c=c, _t0=t):
                _, ld, _ = gait.eval(tt)
                return _co - (m2 / M) * ld - _c * (tt - _t0)

            fns.append((lambda tt, _s=s1, _y=y_of: _s * _y(tt), "body1-stop"))
            fns.append(
                (
                    lambda tt, _s=s2, _y=y_of: _s * (_y(tt) + gait.eval(tt)[1]),
                    "body2-stop",
                )
            )
        elif s1 == 0 and s2 != 0:

            def margin1(tt, _s=s2):
                _, _, ldd = gait.eval(tt)
                return m2 * ldd + f2 * _s  # in [-f1, f1] while body 1 holds

            fns.append((lambda tt, _m=margin1: f1 - _m(tt), "body1-break:-"))
            fns.append((lambda tt, _m=margin1: _m(tt) + f1, "body1-break:+"))
            fns.append((lambda tt, _s=s2: _s * gait.eval(tt)[1], "body2-stop"))
        elif s1 != 0 and s2 == 0:

            def margin2(tt, _s=s1):
                _, _, ldd = gait.eval(tt)
                return m1 * ldd - f1 * _s  # in [-f2, f2] while body 2 holds

            fns.append((lambda tt, _m=margin2: f2 - _m(tt), "body2-break:+"))
            fns.append((lambda tt, _m=margin2: _m(tt) + f2, "body2-break:-"))
            fns.append((lambda tt, _s=s1: -_s * gait.eval(tt)[1], "body1-stop"))
        # rest phase: no exit functions; it ends at its precomputed horizon.

        # --- find where the phase ends -----------------------------------
        if s1 == 0 and s2 == 0:
            t_ev, tag = (rest_until if rest_until is not None else T, "wake")
            if t_ev >= T:
                t_ev, tag = (None, None)
        else:
            t_ev, tag = _first_crossing(fns, t, T, scan_dt, skip, xtol)

        t1 = T if t_ev is None else min(max(t_ev, t + skip), T)
        phases.append(
            Phase(
                t0=t, t1=t1, regime=regime, y0=y, x10=x1, k10=k1, k20=k2,
                l0=l_a, ld0=ld_a,
            )
        )
        y, k1, k2, x1 = phase_values(params, gait, phases[-1], t1)

        if t_ev is None or t1 >= T - time_tol:
            break

        # --- transition ---------------------------------------------------
        stalls = stalls + 1 if (t1 - t) <= 2.0 * skip else 0
        if stalls >= 200:
            raise OracleError(
                f"event accumulation near t = {t1:.9g}: "
                f"{stalls} consecutive transitions without progress"
            )
        if len(phases) >= cfg.max_events:
            raise OracleError(
                f"exceeded max_events = {cfg.max_events} near t = {t1:.9g}"
            )

        before = phases[-1].regime
        t = t1
        if tag == "body1-stop":
            y = 0.0
            s1, s2, rest_until = _decide(params, gait, t, y, band, T)
        elif tag == "body2-stop":
            y = -gait.eval(t)[1]
            if abs(y) <= band:
                y = 0.0
            s1, s2, rest_until = _decide(params, gait, t, y, band, T)
        elif tag == "body1-break:+":
            s1, rest_until = 1, None
            y = 0.0
        elif tag == "body1-break:-":
            s1, rest_until = -1, None
            y = 0.0
        elif tag == "body2-break:+":
            s2, rest_until = 1, None
            y = -gait.eval(t)[1]
        elif tag == "body2-break:-":
            s2, rest_until = -1, None
            y = -gait.eval(t)[1]
        else:  # wake from rest
            y = 0.0
            s1, s2, rest_until = _decide(params, gait, t, y, band, T)
        events.append(Event(time=t, kind=tag, before=before, after=_regime(s1, s2)))

    # --- sample on the uniform grid --------------------------------------
    cells = max(1, int(round(T / cfg.output_grid)))
    grid = np.linspace(0.0, T, cells + 1)
    ys = np.empty(grid.size)
    k1s = np.empty(grid.size)
    k2s = np.empty(grid.size)
    x1s = np.empty(grid.size)
    reg1: list[BodyState] = []
    reg2: list[BodyState] = []
    starts = [ph.t0 for ph in phases]
    for i, tt in enumerate(grid):
        idx = max(0, bisect_left(starts, float(tt)) - 1)
        if idx + 1 < len(phases) and tt > phases[idx].t1:
            idx += 1
        ph = phases[idx]
        ys[i], k1s[i], k2s[i], x1s[i] = phase_values(params, gait, ph, float(tt))
        reg1.append(ph.regime.body1)
        reg2.append(ph.regime.body2)
    for arr in (grid, ys, k1s, k2s, x1s):
        arr.setflags(write=False)

    return EventTrajectory(
        params=params,
        gait=gait,
        grid=grid,
        y=ys,
        k1=k1s,
        k2=k2s,
        x1=x1s,
        regime1=tuple(reg1),
        regime2=tuple(reg2),
        c2=c2,
        phases=tuple(phases),
        events=tuple(events),
    )
