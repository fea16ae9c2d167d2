"""Delimited output for simulation runs.

Every solver writes the same table so downstream tooling never needs to
know which one produced a file::

    t,y,x1,x2,k1,k2,F1,F2,G2,regime1,regime2

Chain runs append ``k3..kp`` after ``regime2``.  Numbers are printed with
``%.17g`` so a written file reparses to the exact same doubles; regime
columns hold the tokens ``stick`` / ``slip+`` / ``slip-``.

For the smoothed solver the regime is read off the clamp: a body counts
as sticking while its force sits strictly inside the threshold band
(``|n*v| < f``) and as slipping in the direction of motion once the clamp
saturates.  The event-driven solver knows its regimes exactly and also
writes each transition to a ``*.events.csv`` sidecar.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import ChainSpec, ChainTrajectory, chain_positions
from .model import (
    BodyState,
    GaitProgram,
    InitialConditions,
    PhysicalParams,
    reconstruct_positions,
)
from .penalized import PenalizedTrajectory, _kernel_rates, _offset_rates
from .stickslip import Event, EventTrajectory, phase_forces

__all__ = [
    "RUN_COLUMNS",
    "EVENT_COLUMNS",
    "RunTable",
    "penalized_table",
    "events_table",
    "chain_table",
    "write_run_csv",
    "write_events_csv",
    "read_run_csv",
]

RUN_COLUMNS = ("t", "y", "x1", "x2", "k1", "k2", "F1", "F2", "G2", "regime1", "regime2")
EVENT_COLUMNS = (
    "t",
    "kind",
    "regime1_before",
    "regime2_before",
    "regime1_after",
    "regime2_after",
)

_REGIME_TOKENS = {state.value for state in BodyState}


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass(frozen=True)
class RunTable:
    """Column-ordered run data: float arrays plus regime token lists."""

    columns: tuple[str, ...]
    data: dict[str, object]

    def __post_init__(self) -> None:
        sizes = set()
        for name in self.columns:
            if name not in self.data:
                raise ValueError(f"column {name!r} missing from data")
            sizes.add(len(self.data[name]))
        if len(sizes) != 1:
            raise ValueError(f"columns have mismatched lengths: {sorted(sizes)}")

    def __len__(self) -> int:
        return len(self.data[self.columns[0]])

    def column(self, name: str):
        return self.data[name]


def _saturation_state(n: int, v: float, f: float) -> BodyState:
    """Regime implied by the clamp: strict interior is stick, the rest slip."""
    if abs(n * v) < f:
        return BodyState.STICK
    if v > 0.0:
        return BodyState.SLIP_PLUS
    if v < 0.0:
        return BodyState.SLIP_MINUS
    return BodyState.STICK


def penalized_table(
    params: PhysicalParams,
    gait: GaitProgram,
    ic: InitialConditions,
    tr: PenalizedTrajectory,
) -> RunTable:
    """Full output table for a smoothed-solver run."""
    grid = tr.grid
    x1, x2 = reconstruct_positions(grid, tr.y, ic.x10, gait)
    m = grid.size
    F1 = np.empty(m)
    F2 = np.empty(m)
    G2 = np.empty(m)
    reg1: list[str] = []
    reg2: list[str] = []
    masses = (params.m1, params.m2)
    frictions = (params.f1, params.f2)
    ns = (tr.n.n1, tr.n.n2)
    for i, t in enumerate(grid):
        acc, forces = _kernel_rates(t, tr.y[i], masses, frictions, ns, (gait,), params.M)
        _, ld, ldd = gait.eval(t)
        F1[i], F2[i] = forces
        G2[i] = params.m2 * (acc + ldd) + F2[i]
        reg1.append(_saturation_state(tr.n.n1, tr.y[i], params.f1).value)
        reg2.append(_saturation_state(tr.n.n2, tr.y[i] + ld, params.f2).value)
    data = {
        "t": grid,
        "y": tr.y,
        "x1": x1,
        "x2": x2,
        "k1": tr.k1,
        "k2": tr.k2,
        "F1": F1,
        "F2": F2,
        "G2": G2,
        "regime1": reg1,
        "regime2": reg2,
    }
    return RunTable(columns=RUN_COLUMNS, data=data)


def events_table(tr: EventTrajectory) -> RunTable:
    """Full output table for an event-driven run."""
    grid = tr.grid
    m = grid.size
    l_vals = np.array([tr.gait.eval(t)[0] for t in grid])
    F1 = np.empty(m)
    F2 = np.empty(m)
    G2 = np.empty(m)
    for i, t in enumerate(grid):
        F1[i], F2[i], G2[i] = phase_forces(tr.params, tr.gait, tr.phase_at(t), t)
    data = {
        "t": grid,
        "y": tr.y,
        "x1": tr.x1,
        "x2": tr.x1 + l_vals,
        "k1": tr.k1,
        "k2": tr.k2,
        "F1": F1,
        "F2": F2,
        "G2": G2,
        "regime1": [state.value for state in tr.regime1],
        "regime2": [state.value for state in tr.regime2],
    }
    return RunTable(columns=RUN_COLUMNS, data=data)


def chain_table(
    spec: ChainSpec,
    links: tuple[GaitProgram, ...],
    tr: ChainTrajectory,
    x10: float = 0.0,
) -> RunTable:
    """Output table for a chain run; appends ``k3..kp`` columns.

    ``G2`` is still the force carried by the first link, obtained by
    summing the Newton equations of bodies ``2..p`` (for two bodies this
    reduces to the usual ``m2*(dy/dt + ddl) + F2``).
    """
    grid = tr.grid
    p = spec.p
    positions = chain_positions(grid, tr.y, x10, links)
    m = grid.size
    F1 = np.empty(m)
    F2 = np.empty(m)
    G2 = np.empty(m)
    reg1: list[str] = []
    reg2: list[str] = []
    for i, t in enumerate(grid):
        acc, forces = _kernel_rates(
            t, tr.y[i], spec.masses, spec.frictions, tr.ns, links, spec.total_mass
        )
        ld, ldd = _offset_rates(links, t)
        F1[i], F2[i] = forces[0], forces[1]
        G2[i] = sum(
            spec.masses[j] * (acc + ldd[j]) + forces[j] for j in range(1, p)
        )
        reg1.append(_saturation_state(tr.ns[0], tr.y[i], spec.frictions[0]).value)
        reg2.append(
            _saturation_state(tr.ns[1], tr.y[i] + ld[1], spec.frictions[1]).value
        )
    extra = tuple(f"k{j}" for j in range(3, p + 1))
    data = {
        "t": grid,
        "y": tr.y,
        "x1": positions[0],
        "x2": positions[1],
        "k1": tr.ks[0],
        "k2": tr.ks[1],
        "F1": F1,
        "F2": F2,
        "G2": G2,
        "regime1": reg1,
        "regime2": reg2,
    }
    for j, name in enumerate(extra, start=2):
        data[name] = tr.ks[j]
    return RunTable(columns=RUN_COLUMNS + extra, data=data)


def write_run_csv(path: str | Path, table: RunTable) -> Path:
    """Write a run table; returns the path written."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        cols = [table.data[name] for name in table.columns]
        for i in range(len(table)):
            writer.writerow(
                [cell if isinstance(cell, str) else _fmt(cell) for cell in (c[i] for c in cols)]
            )
    return path


def write_events_csv(path: str | Path, events: tuple[Event, ...]) -> Path:
    """Write the transition sidecar for an event-driven run."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENT_COLUMNS)
        for ev in events:
            writer.writerow(
                [
                    _fmt(ev.time),
                    ev.kind,
                    ev.before.body1.value,
                    ev.before.body2.value,
                    ev.after.body1.value,
                    ev.after.body2.value,
                ]
            )
    return path


def read_run_csv(path: str | Path) -> RunTable:
    """Read a run table back; numeric columns become float arrays."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)
    columns = tuple(header)
    data: dict[str, object] = {}
    for j, name in enumerate(columns):
        cells = [row[j] for row in rows]
        if name.startswith("regime"):
            bad = [c for c in cells if c not in _REGIME_TOKENS]
            if bad:
                raise ValueError(f"{path}: invalid regime token {bad[0]!r}")
            data[name] = cells
        else:
            data[name] = np.array([float(c) for c in cells])
    return RunTable(columns=columns, data=data)
