"""Penalized (smoothed) solver for the reduced crawler dynamics.

Replacing each Coulomb law by its clamped smoothing of index ``n`` turns
the reduced dynamics into an ordinary ODE for ``y = dx1/dt``:

    M * dy/dt + clamp(n1*y, f1) + clamp(n2*(y + dl/dt), f2) = -m2 * d2l/dt2

The friction impulses are accumulated alongside the state,

    k1(t) = integral of clamp(n1*y),
    k2(t) = integral of clamp(n2*(y + dl/dt)) + c2,
    c2    = -M*y0 - m2*dl/dt(0),

so that the linear relation ``M*y + k1 + k2 = -m2*dl/dt`` holds for every
``t`` up to integrator tolerance: the impulses are advanced by the same
Runge-Kutta weights as the velocity, making the relation a conserved
linear invariant of the augmented system.

Integration uses an adaptive embedded Runge-Kutta pair with a stiffness
guard: explicit steps are unstable once ``h * n`` grows past order one, so
steps are capped at ``stiffness_guard / max(n1, n2)`` in addition to the
usual error control.  The solve is split at the gait's kink times (where
the drive ``d2l/dt2`` jumps) so no Runge-Kutta step straddles a forcing
discontinuity; otherwise the step quadrature that advances the impulse
channels silently loses accuracy there.

Two runs with different smoothing indices obey an a-priori Cauchy bound
(`cauchy_bound`); `refine` walks a doubling schedule of indices until the
bound certifies the requested accuracy, returning the terminal run as the
limit candidate together with the certificate.

The same machinery drives chains of ``p`` bodies (see `crawlsim.chain`);
the two-body API is the ``p = 2`` wiring of one shared kernel, so the
chain reduction is exact by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import GaitProgram, InitialConditions, PhysicalParams, forcing_breakpoints
from .regularization import RegularizationIndex

__all__ = [
    "SolverError",
    "SolverConfig",
    "PenalizedTrajectory",
    "RefinePair",
    "ConvergenceCertificate",
    "RefineResult",
    "rhs",
    "integrate",
    "cauchy_bound",
    "refine",
]


class SolverError(RuntimeError):
    """Integration failed (step underflow, non-finite state, broken invariant)."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and discretization of the penalized solver.

    ``output_grid`` is the target spacing of the uniform sample grid (the
    solve itself is adaptive; samples come from the dense interpolant).
    ``stiffness_guard`` caps ``h * max(n)`` so the explicit stepper stays
    inside its stability region even when error control alone would allow
    larger steps.
    """

    rtol: float = 1e-8
    atol: float = 1e-10
    h_max: float = 5e-3
    output_grid: float = 1e-3
    stiffness_guard: float = 1.0

    def __post_init__(self) -> None:
        for name in ("rtol", "atol", "h_max", "output_grid", "stiffness_guard"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"{name} must be finite and positive, got {v!r}")


@dataclass(frozen=True)
class PenalizedTrajectory:
    """Sampled solution of the smoothed dynamics at one index pair."""

    n: RegularizationIndex
    grid: np.ndarray
    y: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    c2: float
    eq_residual: float  # measured max of |M*y + k1 + k2 + m2*dl/dt|


# ---------------------------------------------------------------------------
# Shared reduced-dynamics kernel (two-body == chain with p = 2)
# ---------------------------------------------------------------------------


def _clamp(x: float, f: float) -> float:
    if x > f:
        return f
    if x < -f:
        return -f
    return x


def _offset_rates(links, t: float):
    """Velocities and accelerations of the body offsets L_i = sum of links < i."""
    p = len(links) + 1
    ld = [0.0] * p
    ldd = [0.0] * p
    for j, link in enumerate(links):
        _, v, a = link.eval(t)
        ld[j + 1] = ld[j] + v
        ldd[j + 1] = ldd[j] + a
    return ld, ldd


def _kernel_rates(t, y, masses, frictions, ns, links, m_tot):
    """Acceleration of ``y`` plus the clamped force of every body."""
    ld, ldd = _offset_rates(links, t)
    drive = 0.0
    for m, a in zip(masses, ldd):
        drive += m * a
    tot = -drive
    forces = []
    for f, n, v in zip(frictions, ns, ld):
        g = _clamp(n * (y + v), f)
        forces.append(g)
        tot -= g
    return tot / m_tot, forces


def rhs(
    params: PhysicalParams,
    gait: GaitProgram,
    n: RegularizationIndex,
    t: float,
    y: float,
) -> float:
    """Acceleration ``dy/dt`` of the smoothed two-body dynamics."""
    acc, _ = _kernel_rates(
        t,
        y,
        (params.m1, params.m2),
        (params.f1, params.f2),
        (n.n1, n.n2),
        (gait,),
        params.M,
    )
    return acc


def _solve_reduced(masses, frictions, ns, links, y0, horizon, cfg: SolverConfig):
    """Integrate the reduced dynamics of ``p`` linked bodies.

    Returns ``(grid, y, ks, c_last)`` where ``ks`` stacks one impulse
    channel per body and the last channel carries the integration constant
    fixed by the linear relation at ``t = 0``.
    """
    if not (len(masses) == len(frictions) == len(ns) == len(links) + 1):
        raise ValueError("need p masses, p frictions, p indices and p-1 links")
    if horizon <= 0.0 or not math.isfinite(horizon):
        raise ValueError(f"horizon must be finite and positive, got {horizon!r}")
    p = len(masses)
    m_tot = 0.0
    for m in masses:
        m_tot += m

    cells = max(1, int(round(horizon / cfg.output_grid)))
    grid = np.linspace(0.0, horizon, cells + 1)

    ld0, _ = _offset_rates(links, 0.0)
    c_last = -m_tot * y0
    for m, v in zip(masses, ld0):
        c_last -= m * v

    state0 = np.zeros(p + 1)
    state0[0] = y0
    state0[-1] = c_last

    def f(t, state):
        acc, forces = _kernel_rates(t, state[0], masses, frictions, ns, links, m_tot)
        return [acc] + forces

    max_step = min(cfg.h_max, cfg.stiffness_guard / max(ns))
    edges = [0.0] + forcing_breakpoints(links, horizon) + [horizon]
    out = np.empty((p + 1, grid.size))
    out[:, 0] = state0
    state = state0
    for a, b in zip(edges[:-1], edges[1:]):
        lo = int(np.searchsorted(grid, a, side="right"))
        hi = int(np.searchsorted(grid, b, side="right"))
        want = grid[lo:hi]
        carry_extra = want.size == 0 or want[-1] != b
        t_eval = np.append(want, b) if carry_extra else want

        # Gait programs evaluate right-continuously at a kink, but the final
        # Runge-Kutta stages of this chunk land exactly on its right edge and
        # must see the left-limit forcing; pin them one ulp inside.
        b_inside = float(np.nextafter(b, a))

        def f_chunk(t, state, _b=b, _b_inside=b_inside):
            return f(t if t < _b else _b_inside, state)

        sol = solve_ivp(
            f_chunk,
            (a, b),
            state,
            method="RK45",
            rtol=cfg.rtol,
            atol=cfg.atol,
            max_step=max_step,
            t_eval=t_eval,
            dense_output=False,
        )
        if not sol.success:
            t_fail = float(sol.t[-1]) if sol.t.size else a
            raise SolverError(
                f"integration failed near t = {t_fail:.6g}: {sol.message} "
                f"(smoothing indices may be too large for the configured tolerances)"
            )
        if not np.all(np.isfinite(sol.y)):
            raise SolverError("integration produced non-finite state")
        out[:, lo:hi] = sol.y[:, : want.size]
        state = sol.y[:, -1]

    y = out[0]
    ks = out[1:]

    # The linear relation is a conserved invariant of the augmented system;
    # verify it survived discretization.
    rel = m_tot * y
    for row in ks:
        rel = rel + row
    drift = np.array([sum(m * v for m, v in zip(masses, _offset_rates(links, t)[0])) for t in grid])
    residual = float(np.max(np.abs(rel + drift)))
    tol = 10.0 * (cfg.atol + cfg.rtol * max(1.0, float(np.max(np.abs(y)))))
    if residual > tol:
        raise SolverError(
            f"linear-relation residual {residual:.3e} exceeds {tol:.3e}; "
            "integration is not trustworthy at these settings"
        )

    for arr in (grid, y, ks):
        arr.setflags(write=False)
    return grid, y, ks, c_last, residual


def integrate(
    params: PhysicalParams,
    gait: GaitProgram,
    ic: InitialConditions,
    n: RegularizationIndex,
    horizon: float,
    cfg: SolverConfig = SolverConfig(),
) -> PenalizedTrajectory:
    """Solve the smoothed two-body dynamics on ``[0, horizon]``."""
    grid, y, ks, c2, residual = _solve_reduced(
        (params.m1, params.m2),
        (params.f1, params.f2),
        (n.n1, n.n2),
        (gait,),
        ic.y0,
        horizon,
        cfg,
    )
    return PenalizedTrajectory(
        n=n, grid=grid, y=y, k1=ks[0], k2=ks[1], c2=c2, eq_residual=residual
    )


# ---------------------------------------------------------------------------
# Cauchy refinement
# ---------------------------------------------------------------------------


def cauchy_bound(
    f1: float, f2: float, n: RegularizationIndex, r: RegularizationIndex, t: float
) -> float:
    """A-priori bound on ``sup |y_n - y_r|**2`` over ``[0, t]``.

    Two smoothed solutions at index pairs ``n`` and ``r`` satisfy

        sup |y_n - y_r|**2 <= f1**2*(1/n1 + 1/r1)*t + f2**2*(1/n2 + 1/r2)*t,

    independent of the gait and masses.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return f1 * f1 * (1.0 / n.n1 + 1.0 / r.n1) * t + f2 * f2 * (1.0 / n.n2 + 1.0 / r.n2) * t


@dataclass(frozen=True)
class RefinePair:
    """Adjacent schedule runs with their theoretical and measured gap."""

    n: RegularizationIndex
    r: RegularizationIndex
    bound: float  # theoretical bound on sup|y_n - y_r|**2
    measured_sup: float  # measured sup|y_n - y_r|


@dataclass(frozen=True)
class ConvergenceCertificate:
    """What the refinement schedule proved about its terminal run.

    ``epsilon_limit`` bounds the sup-distance between the terminal run and
    the (unique) limit of the smoothing scheme: it is the square root of
    the tail of the Cauchy bound as the partner index goes to infinity.
    """

    schedule: tuple[RegularizationIndex, ...]
    pairs: tuple[RefinePair, ...]
    converged: bool
    terminal_bound: float  # bound between the terminal run and its (unrun) double
    epsilon: float  # requested accuracy
    epsilon_limit: float  # certified sup-distance of the terminal run to the limit
    horizon: float


@dataclass(frozen=True)
class RefineResult:
    runs: tuple[PenalizedTrajectory, ...]
    certificate: ConvergenceCertificate

    @property
    def limit(self) -> PenalizedTrajectory:
        """Terminal run of the schedule: the certified limit candidate."""
        return self.runs[-1]


def refine(
    params: PhysicalParams,
    gait: GaitProgram,
    ic: InitialConditions,
    horizon: float,
    cfg: SolverConfig = SolverConfig(),
    n0: RegularizationIndex = RegularizationIndex(100, 100),
    epsilon: float = 0.02,
    k_max: int = 10,
) -> RefineResult:
    """Run the doubling schedule ``n0 * 2**k`` until the Cauchy bound meets
    ``epsilon**2`` (or ``k_max`` is exhausted; the result then carries
    ``converged=False`` with all partial runs).

    Each adjacent pair is cross-checked: the measured sup-difference must
    respect the theoretical bound up to integration tolerance, otherwise
    the integrator itself is broken and a `SolverError` is raised.
    """
    if epsilon <= 0.0 or not math.isfinite(epsilon):
        raise ValueError("epsilon must be finite and positive")
    if k_max < 0:
        raise ValueError("k_max must be >= 0")

    runs: list[PenalizedTrajectory] = []
    pairs: list[RefinePair] = []
    converged = False
    terminal_bound = math.inf
    for k in range(k_max + 1):
        nk = n0.scaled(2**k)
        run = integrate(params, gait, ic, nk, horizon, cfg)
        if runs:
            prev = runs[-1]
            measured = float(np.max(np.abs(run.y - prev.y)))
            bound = cauchy_bound(params.f1, params.f2, prev.n, nk, horizon)
            slack = 2.0 * (cfg.atol + cfg.rtol * max(1.0, float(np.max(np.abs(run.y)))))
            if measured > math.sqrt(bound) + slack:
                raise SolverError(
                    f"measured gap {measured:.3e} between indices {prev.n} and {nk} "
                    f"violates the theoretical bound {math.sqrt(bound):.3e}"
                )
            pairs.append(RefinePair(n=prev.n, r=nk, bound=bound, measured_sup=measured))
        runs.append(run)
        terminal_bound = cauchy_bound(params.f1, params.f2, nk, nk.scaled(2), horizon)
        if terminal_bound <= epsilon * epsilon:
            converged = True
            break

    n_final = runs[-1].n
    tail = (params.f1**2 / n_final.n1 + params.f2**2 / n_final.n2) * horizon
    certificate = ConvergenceCertificate(
        schedule=tuple(run.n for run in runs),
        pairs=tuple(pairs),
        converged=converged,
        terminal_bound=terminal_bound,
        epsilon=epsilon,
        epsilon_limit=math.sqrt(tail),
        horizon=horizon,
    )
    return RefineResult(runs=tuple(runs), certificate=certificate)
