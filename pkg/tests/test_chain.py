"""Chain generalization: p linked bodies sharing the two-body kernel."""

import math

import numpy as np
import pytest

from crawlsim import (
    ChainSpec,
    RegularizationIndex,
    SinusoidGait,
    SolverConfig,
    cauchy_bound,
    chain_cauchy_bound,
    chain_integrate,
    chain_positions,
)

TWO_PI = 2.0 * math.pi


def test_chain_spec_validation():
    spec = ChainSpec(masses=(1.0, 2.0), frictions=(0.1, 0.2))
    assert spec.p == 2
    assert spec.total_mass == 3.0
    with pytest.raises(ValueError):
        ChainSpec(masses=(1.0,), frictions=(0.1,))  # p < 2
    with pytest.raises(ValueError):
        ChainSpec(masses=(1.0, 1.0), frictions=(0.1,))  # length mismatch
    with pytest.raises(ValueError):
        ChainSpec(masses=(1.0, -1.0), frictions=(0.1, 0.1))
    with pytest.raises(ValueError):
        ChainSpec(masses=(1.0, 1.0), frictions=(0.1, -0.1))


def test_chain_index_validation():
    spec = ChainSpec(masses=(1.0, 1.0), frictions=(0.1, 0.3))
    links = (SinusoidGait(1.0, 0.25, TWO_PI),)
    with pytest.raises(ValueError):
        chain_integrate(spec, links, 0.0, (100,), 1.0)  # wrong count
    with pytest.raises(ValueError):
        chain_integrate(spec, links, 0.0, (100, 0), 1.0)  # not >= 1
    with pytest.raises(ValueError):
        chain_integrate(spec, links, 0.0, (100, True), 1.0)  # bool is not an index


def test_two_body_chain_matches_dedicated_solver_bitwise(bench, bench_run):
    spec = ChainSpec(
        masses=(bench.params.m1, bench.params.m2),
        frictions=(bench.params.f1, bench.params.f2),
    )
    tr = chain_integrate(
        spec, (bench.gait,), bench.ic.y0, (800, 800), bench.horizon, SolverConfig()
    )
    assert np.array_equal(tr.y, bench_run.y)
    assert np.array_equal(tr.ks[0], bench_run.k1)
    assert np.array_equal(tr.ks[1], bench_run.k2)
    assert tr.c_last == bench_run.c2
    assert tr.eq_residual == bench_run.eq_residual


def test_chain_cauchy_bound_reduces_to_two_body():
    spec = ChainSpec(masses=(1.0, 1.0), frictions=(0.1, 0.3))
    a = chain_cauchy_bound(spec, (100, 300), (200, 600), 5.0)
    b = cauchy_bound(
        0.1, 0.3, RegularizationIndex(100, 300), RegularizationIndex(200, 600), 5.0
    )
    assert a == pytest.approx(b, abs=1e-15)


@pytest.fixture(scope="module")
def chain3():
    spec = ChainSpec(masses=(1.0, 0.8, 1.2), frictions=(0.05, 0.2, 0.35))
    links = (
        SinusoidGait(1.0, 0.2, TWO_PI, math.pi / 2),
        SinusoidGait(1.2, 0.2, TWO_PI, math.pi / 2 + 2 * math.pi / 3),
    )
    return spec, links


def test_three_body_chain_refinement_obeys_bound(chain3):
    spec, links = chain3
    coarse = chain_integrate(spec, links, 0.0, (200, 200, 200), 3.0)
    fine = chain_integrate(spec, links, 0.0, (400, 400, 400), 3.0)
    assert coarse.eq_residual < 1e-9 and fine.eq_residual < 1e-9
    gap = float(np.max(np.abs(coarse.y - fine.y)))
    bound = chain_cauchy_bound(spec, (200, 200, 200), (400, 400, 400), 3.0)
    assert gap <= math.sqrt(bound)


def test_chain_positions_keep_link_gaps_exact(chain3):
    spec, links = chain3
    tr = chain_integrate(spec, links, 0.0, (200, 200, 200), 2.0)
    pos = chain_positions(tr.grid, tr.y, 0.5, links)
    assert pos.shape == (3, tr.grid.size)
    assert pos[0, 0] == 0.5
    for j, link in enumerate(links):
        l_vals = np.array([link.eval(t)[0] for t in tr.grid])
        assert float(np.max(np.abs((pos[j + 1] - pos[j]) - l_vals))) < 1e-12
