"""Chains of ``p`` friction bodies coupled by ``p - 1`` gait links.

Body ``i`` follows ``x_{i+1} = x_i + l_i(t)`` for prescribed link programs
``l_1 .. l_{p-1}``, each body feeling its own Coulomb threshold.  The
reduced unknown is again the velocity ``y`` of body 1; body ``i`` moves at
``y + L_i`` where ``L_i`` is the cumulative link rate.  The smoothed
dynamics are

    m_tot * dy/dt + sum_i clamp(n_i * (y + L_i), f_i) = -sum_i m_i * dL_i

which is solved by the identical kernel as the two-body case — a chain
with ``p = 2`` reproduces `crawlsim.penalized.integrate` bit for bit, by
construction rather than by coincidence.  The two-index Cauchy bound
generalizes term by term:

    sup |y_n - y_r|**2 <= sum_i f_i**2 * (1/n_i + 1/r_i) * t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .model import GaitProgram
from .penalized import SolverConfig, _solve_reduced

__all__ = [
    "ChainSpec",
    "ChainTrajectory",
    "chain_integrate",
    "chain_cauchy_bound",
    "chain_positions",
]


@dataclass(frozen=True)
class ChainSpec:
    """Masses and friction thresholds of a ``p``-body chain."""

    masses: tuple[float, ...]
    frictions: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "frictions", tuple(float(f) for f in self.frictions))
        if len(self.masses) < 2:
            raise ValueError("a chain needs at least 2 bodies")
        if len(self.frictions) != len(self.masses):
            raise ValueError("need exactly one friction threshold per body")
        for m in self.masses:
            if not math.isfinite(m) or m <= 0.0:
                raise ValueError(f"masses must be finite and positive, got {m!r}")
        for f in self.frictions:
            if not math.isfinite(f) or f < 0.0:
                raise ValueError(f"thresholds must be finite and >= 0, got {f!r}")

    @property
    def p(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))


@dataclass(frozen=True)
class ChainTrajectory:
    """Sampled smoothed chain solution at one tuple of smoothing indices.

    ``ks`` stacks one impulse channel per body (shape ``p x len(grid)``);
    the last channel starts at the integration constant ``c_last`` fixed by
    the chain's linear relation at ``t = 0``.
    """

    ns: tuple[int, ...]
    grid: np.ndarray
    y: np.ndarray
    ks: np.ndarray
    c_last: float
    eq_residual: float


def _check_indices(spec: ChainSpec, ns) -> tuple[int, ...]:
    ns = tuple(ns)
    if len(ns) != spec.p:
        raise ValueError(f"need {spec.p} smoothing indices, got {len(ns)}")
    for n in ns:
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"smoothing indices must be integers >= 1, got {n!r}")
    return tuple(int(n) for n in ns)


def chain_integrate(
    spec: ChainSpec,
    links: tuple[GaitProgram, ...],
    y0: float,
    ns: tuple[int, ...],
    horizon: float,
    cfg: SolverConfig = SolverConfig(),
) -> ChainTrajectory:
    """Solve the smoothed ``p``-body dynamics on ``[0, horizon]``."""
    links = tuple(links)
    if len(links) != spec.p - 1:
        raise ValueError(f"a {spec.p}-body chain needs {spec.p - 1} links, got {len(links)}")
    ns = _check_indices(spec, ns)
    grid, y, ks, c_last, residual = _solve_reduced(
        spec.masses, spec.frictions, ns, links, float(y0), horizon, cfg
    )
    return ChainTrajectory(
        ns=ns, grid=grid, y=y, ks=ks, c_last=c_last, eq_residual=residual
    )


def chain_cauchy_bound(
    spec: ChainSpec, ns: tuple[int, ...], rs: tuple[int, ...], t: float
) -> float:
    """A-priori bound on ``sup |y_n - y_r|**2`` for two index tuples."""
    ns = _check_indices(spec, ns)
    rs = _check_indices(spec, rs)
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return float(
        sum(f * f * (1.0 / n + 1.0 / r) * t for f, n, r in zip(spec.frictions, ns, rs))
    )


def chain_positions(
    grid: np.ndarray, y: np.ndarray, x10: float, links: tuple[GaitProgram, ...]
) -> np.ndarray:
    """Positions of every chain body (shape ``p x len(grid)``).

    Body 1 integrates ``y`` by the trapezoid rule; each further body adds
    its link's prescribed gap, so adjacent rows differ exactly by ``l_i``.
    """
    grid = np.asarray(grid, dtype=float)
    y = np.asarray(y, dtype=float)
    if grid.ndim != 1 or grid.shape != y.shape or grid.size == 0:
        raise ValueError("grid and y must be matching non-empty 1-d arrays")
    x1 = x10 + (
        cumulative_trapezoid(y, grid, initial=0.0) if grid.size > 1 else np.zeros(1)
    )
    rows = [x1]
    for link in links:
        l_vals = np.array([link.eval(float(t))[0] for t in grid])
        rows.append(rows[-1] + l_vals)
    return np.vstack(rows)
