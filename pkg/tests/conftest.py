"""Shared scenario fixtures.

The expensive solver runs are session-scoped so every test file reuses
them.  Three scenarios cover the interesting dynamics:

* ``bench``     asymmetric thresholds + fast sinusoid: both bodies slip
                most of the time, nonzero drift dominated by a transient.
* ``slow``      slow parabolic stroke with accelerations comparable to
                the thresholds: genuine stick phases, exactly periodic
                stick-slip cycle after two periods.
* ``symmetric`` equal masses/thresholds + cosine stroke: the exact
                solution is ``y = -dl/dt / 2`` at every smoothing index
                and the drift vanishes identically.
"""

from types import SimpleNamespace

import numpy as np
import pytest

from crawlsim import (
    EventConfig,
    InitialConditions,
    PhysicalParams,
    PiecewiseParabolicGait,
    RegularizationIndex,
    SinusoidGait,
    SolverConfig,
    integrate,
    simulate_events,
)

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def bench():
    return SimpleNamespace(
        params=PhysicalParams(m1=1.0, m2=1.0, f1=0.1, f2=0.3),
        gait=SinusoidGait(l0=1.0, amplitude=0.25, omega=TWO_PI),
        ic=InitialConditions(),
        horizon=5.0,
    )


@pytest.fixture(scope="session")
def slow():
    return SimpleNamespace(
        params=PhysicalParams(m1=1.0, m2=1.0, f1=0.1, f2=0.3),
        gait=PiecewiseParabolicGait(
            l0=1.0,
            durations=(2.0, 2.0, 3.0, 3.0),
            accelerations=(0.36, -0.36, -0.24, 0.24),
        ),
        ic=InitialConditions(),
        horizon=30.0,
    )


@pytest.fixture(scope="session")
def symmetric():
    return SimpleNamespace(
        params=PhysicalParams(m1=1.0, m2=1.0, f1=0.2, f2=0.2),
        gait=SinusoidGait(l0=1.0, amplitude=0.25, omega=TWO_PI, phase=np.pi / 2),
        ic=InitialConditions(),
        horizon=3.0,
    )


@pytest.fixture(scope="session")
def bench_run(bench):
    """Moderate-index smoothed benchmark run shared by cheap checks."""
    return integrate(
        bench.params,
        bench.gait,
        bench.ic,
        RegularizationIndex(800, 800),
        bench.horizon,
        SolverConfig(),
    )


@pytest.fixture(scope="session")
def bench_oracle(bench):
    return simulate_events(bench.params, bench.gait, bench.ic, bench.horizon, EventConfig())


@pytest.fixture(scope="session")
def slow_oracle(slow):
    return simulate_events(slow.params, slow.gait, slow.ic, slow.horizon, EventConfig())
