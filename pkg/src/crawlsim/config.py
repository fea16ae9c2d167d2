"""TOML run configuration.

One file describes a complete experiment; every CLI command reads the
sections it needs and ignores none silently: unknown keys anywhere are
rejected with their full path, so a typo like ``[solver] rtoll`` fails
loudly instead of running with a default.

Sections (all tables optional unless noted):

* ``[params]``  masses/thresholds ``m1 m2 f1 f2`` (required unless
  ``[chain]`` is given)
* ``[gait]``    link program; ``kind`` selects ``constant`` / ``sinusoid``
  / ``parabolic`` / ``spline`` with that program's own keys
* ``[ic]``      ``y0``, ``x10`` (default 0)
* ``[run]``     ``horizon`` (required)
* ``[solver]``  penalized tolerances plus smoothing indices ``n1 n2``
* ``[refine]``  ``n0`` (pair), ``epsilon``, ``k_max``
* ``[oracle]``  event-solver knobs ``scan_dt time_tol v_stick max_events``
* ``[verify]``  inequality-suite knobs (seed, test/window counts, ...)
* ``[compare]`` solver cross-check: relative drift ``tolerance``,
  ``min_periods``
* ``[chain]``   ``masses frictions ns`` plus ``[[chain.links]]`` gait
  tables for a p-body run
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .chain import ChainSpec
from .model import (
    ConstantGait,
    GaitProgram,
    InitialConditions,
    PhysicalParams,
    PiecewiseParabolicGait,
    SinusoidGait,
    SplineGait,
)
from .penalized import SolverConfig
from .regularization import RegularizationIndex
from .stickslip import EventConfig

__all__ = [
    "ConfigError",
    "RefineSettings",
    "VerifySettings",
    "CompareSettings",
    "ChainSetup",
    "RunSetup",
    "parse_config",
    "load_config",
]


class ConfigError(Exception):
    """A configuration file is malformed; the message names the key path."""


@dataclass(frozen=True)
class RefineSettings:
    n0: RegularizationIndex = RegularizationIndex(100, 100)
    epsilon: float = 0.02
    k_max: int = 10


@dataclass(frozen=True)
class VerifySettings:
    seed: int = 0
    n_random_tests: int = 8
    n_random_windows: int = 100
    tol_constant: float = 1.0
    linear_tolerance: float = 1e-6
    epsilon_limit: float = 0.0  # certified sup-distance of an external candidate


@dataclass(frozen=True)
class CompareSettings:
    tolerance: float = 0.05
    min_periods: int = 2


@dataclass(frozen=True)
class ChainSetup:
    spec: ChainSpec
    links: tuple[GaitProgram, ...]
    ns: tuple[int, ...]
    y0: float = 0.0
    x10: float = 0.0


@dataclass(frozen=True)
class RunSetup:
    """Everything a CLI command may need, parsed and validated."""

    horizon: float
    params: PhysicalParams | None
    gait: GaitProgram | None
    ic: InitialConditions = InitialConditions()
    solver: SolverConfig = SolverConfig()
    ns: RegularizationIndex = RegularizationIndex(6400, 6400)
    refine: RefineSettings = RefineSettings()
    oracle: EventConfig = field(default_factory=EventConfig)
    verify: VerifySettings = VerifySettings()
    compare: CompareSettings = CompareSettings()
    chain: ChainSetup | None = None

    def require_two_body(self) -> tuple[PhysicalParams, GaitProgram]:
        if self.params is None or self.gait is None:
            raise ConfigError("this command needs [params] and [gait] sections")
        return (self.params, self.gait)


# ---------------------------------------------------------------------------
# Typed readers (TOML already types values; these reject the wrong type
# with the key's full path, and keep booleans out of number slots).
# ---------------------------------------------------------------------------


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite, got {value!r}")
    return v


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path}: expected true/false, got {value!r}")
    return value


def _as_float_list(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty array of numbers")
    return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(value))


def _as_int_list(value, path: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}: expected a non-empty array of integers")
    return tuple(_as_int(v, f"{path}[{i}]") for i, v in enumerate(value))


class _Table:
    """One TOML table with strict key accounting."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a table")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def get(self, key: str, default=None):
        self.seen.add(key)
        return self.data.get(key, default)

    def require(self, key: str):
        self.seen.add(key)
        if key not in self.data:
            raise ConfigError(f"{self.path}.{key}: required key is missing")
        return self.data[key]

    def finish(self) -> None:
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            keys = ", ".join(f"{self.path}.{k}" for k in unknown)
            raise ConfigError(f"unknown key(s): {keys}")

    def sub(self, key: str) -> str:
        return f"{self.path}.{key}"


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------


def _parse_gait(data: dict, path: str) -> GaitProgram:
    tab = _Table(data, path)
    kind = tab.require("kind")
    if not isinstance(kind, str):
        raise ConfigError(f"{path}.kind: expected a string")
    try:
        if kind == "constant":
            gait: GaitProgram = ConstantGait(
                l0=_as_float(tab.require("l0"), tab.sub("l0")),
                period=_as_float(tab.get("period", 1.0), tab.sub("period")),
            )
        elif kind == "sinusoid":
            gait = SinusoidGait(
                l0=_as_float(tab.require("l0"), tab.sub("l0")),
                amplitude=_as_float(tab.require("amplitude"), tab.sub("amplitude")),
                omega=_as_float(tab.require("omega"), tab.sub("omega")),
                phase=_as_float(tab.get("phase", 0.0), tab.sub("phase")),
            )
        elif kind == "parabolic":
            gait = PiecewiseParabolicGait(
                l0=_as_float(tab.require("l0"), tab.sub("l0")),
                durations=_as_float_list(tab.require("durations"), tab.sub("durations")),
                accelerations=_as_float_list(
                    tab.require("accelerations"), tab.sub("accelerations")
                ),
            )
        elif kind == "spline":
            slopes = tab.get("end_slopes")
            gait = SplineGait(
                times=_as_float_list(tab.require("times"), tab.sub("times")),
                values=_as_float_list(tab.require("values"), tab.sub("values")),
                periodic=_as_bool(tab.get("periodic", True), tab.sub("periodic")),
                end_slopes=(
                    None if slopes is None else _as_float_list(slopes, tab.sub("end_slopes"))
                ),
            )
        else:
            raise ConfigError(
                f"{path}.kind: unknown gait kind {kind!r} "
                "(expected constant, sinusoid, parabolic or spline)"
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    tab.finish()
    return gait


def _parse_params(data: dict, path: str) -> PhysicalParams:
    tab = _Table(data, path)
    try:
        params = PhysicalParams(
            m1=_as_float(tab.require("m1"), tab.sub("m1")),
            m2=_as_float(tab.require("m2"), tab.sub("m2")),
            f1=_as_float(tab.require("f1"), tab.sub("f1")),
            f2=_as_float(tab.require("f2"), tab.sub("f2")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    tab.finish()
    return params


def _parse_solver(data: dict, path: str) -> tuple[SolverConfig, RegularizationIndex]:
    tab = _Table(data, path)
    defaults = SolverConfig()
    try:
        cfg = SolverConfig(
            rtol=_as_float(tab.get("rtol", defaults.rtol), tab.sub("rtol")),
            atol=_as_float(tab.get("atol", defaults.atol), tab.sub("atol")),
            h_max=_as_float(tab.get("h_max", defaults.h_max), tab.sub("h_max")),
            output_grid=_as_float(
                tab.get("output_grid", defaults.output_grid), tab.sub("output_grid")
            ),
            stiffness_guard=_as_float(
                tab.get("stiffness_guard", defaults.stiffness_guard),
                tab.sub("stiffness_guard"),
            ),
        )
        ns = RegularizationIndex(
            n1=_as_int(tab.get("n1", 6400), tab.sub("n1")),
            n2=_as_int(tab.get("n2", 6400), tab.sub("n2")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    tab.finish()
    return (cfg, ns)


def _parse_refine(data: dict, path: str) -> RefineSettings:
    tab = _Table(data, path)
    try:
        n0_raw = tab.get("n0")
        if n0_raw is None:
            n0 = RegularizationIndex(100, 100)
        else:
            pair = _as_int_list(n0_raw, tab.sub("n0"))
            if len(pair) != 2:
                raise ConfigError(f"{path}.n0: expected exactly two integers")
            n0 = RegularizationIndex(*pair)
        settings = RefineSettings(
            n0=n0,
            epsilon=_as_float(tab.get("epsilon", 0.02), tab.sub("epsilon")),
            k_max=_as_int(tab.get("k_max", 10), tab.sub("k_max")),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if settings.epsilon <= 0.0:
        raise ConfigError(f"{path}.epsilon: must be positive")
    if settings.k_max < 0:
        raise ConfigError(f"{path}.k_max: must be >= 0")
    tab.finish()
    return settings


def _parse_oracle(data: dict, path: str, output_grid: float) -> EventConfig:
    tab = _Table(data, path)
    defaults = EventConfig()
    scan = tab.get("scan_dt")
    try:
        cfg = EventConfig(
            scan_dt=None if scan is None else _as_float(scan, tab.sub("scan_dt")),
            time_tol=_as_float(tab.get("time_tol", defaults.time_tol), tab.sub("time_tol")),
            v_stick=_as_float(tab.get("v_stick", defaults.v_stick), tab.sub("v_stick")),
            max_events=_as_int(
                tab.get("max_events", defaults.max_events), tab.sub("max_events")
            ),
            output_grid=output_grid,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    tab.finish()
    return cfg


def _parse_verify(data: dict, path: str) -> VerifySettings:
    tab = _Table(data, path)
    settings = VerifySettings(
        seed=_as_int(tab.get("seed", 0), tab.sub("seed")),
        n_random_tests=_as_int(tab.get("n_random_tests", 8), tab.sub("n_random_tests")),
        n_random_windows=_as_int(
            tab.get("n_random_windows", 100), tab.sub("n_random_windows")
        ),
        tol_constant=_as_float(tab.get("tol_constant", 1.0), tab.sub("tol_constant")),
        linear_tolerance=_as_float(
            tab.get("linear_tolerance", 1e-6), tab.sub("linear_tolerance")
        ),
        epsilon_limit=_as_float(tab.get("epsilon_limit", 0.0), tab.sub("epsilon_limit")),
    )
    if settings.n_random_tests < 0 or settings.n_random_windows < 0:
        raise ConfigError(f"{path}: test/window counts must be >= 0")
    if settings.tol_constant <= 0.0 or settings.linear_tolerance <= 0.0:
        raise ConfigError(f"{path}: tolerances must be positive")
    if settings.epsilon_limit < 0.0:
        raise ConfigError(f"{path}: epsilon_limit must be >= 0")
    tab.finish()
    return settings


def _parse_compare(data: dict, path: str) -> CompareSettings:
    tab = _Table(data, path)
    settings = CompareSettings(
        tolerance=_as_float(tab.get("tolerance", 0.05), tab.sub("tolerance")),
        min_periods=_as_int(tab.get("min_periods", 2), tab.sub("min_periods")),
    )
    if settings.tolerance <= 0.0:
        raise ConfigError(f"{path}.tolerance: must be positive")
    if settings.min_periods < 2:
        raise ConfigError(f"{path}.min_periods: must be >= 2")
    tab.finish()
    return settings


def _parse_chain(data: dict, path: str) -> ChainSetup:
    tab = _Table(data, path)
    masses = _as_float_list(tab.require("masses"), tab.sub("masses"))
    frictions = _as_float_list(tab.require("frictions"), tab.sub("frictions"))
    ns = _as_int_list(tab.require("ns"), tab.sub("ns"))
    links_raw = tab.require("links")
    if not isinstance(links_raw, list) or not links_raw:
        raise ConfigError(f"{path}.links: expected at least one [[chain.links]] table")
    links = tuple(
        _parse_gait(entry, f"{path}.links[{i}]") for i, entry in enumerate(links_raw)
    )
    try:
        spec = ChainSpec(masses=masses, frictions=frictions)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if len(ns) != spec.p:
        raise ConfigError(f"{path}.ns: need {spec.p} indices, got {len(ns)}")
    if len(links) != spec.p - 1:
        raise ConfigError(f"{path}.links: need {spec.p - 1} links, got {len(links)}")
    setup = ChainSetup(
        spec=spec,
        links=links,
        ns=ns,
        y0=_as_float(tab.get("y0", 0.0), tab.sub("y0")),
        x10=_as_float(tab.get("x10", 0.0), tab.sub("x10")),
    )
    tab.finish()
    return setup


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def parse_config(data: dict, source: str = "<config>") -> RunSetup:
    """Validate a parsed TOML document into a `RunSetup`."""
    top = _Table(data, source)

    run_tab = _Table(top.require("run"), "run")
    horizon = _as_float(run_tab.require("horizon"), "run.horizon")
    if horizon <= 0.0:
        raise ConfigError("run.horizon: must be positive")
    run_tab.finish()

    params = gait = None
    if top.get("params") is not None:
        params = _parse_params(top.get("params"), "params")
    if top.get("gait") is not None:
        gait = _parse_gait(top.get("gait"), "gait")
    if (params is None) != (gait is None):
        raise ConfigError("[params] and [gait] must be given together")

    ic_raw = top.get("ic")
    if ic_raw is None:
        ic = InitialConditions()
    else:
        ic_tab = _Table(ic_raw, "ic")
        ic = InitialConditions(
            y0=_as_float(ic_tab.get("y0", 0.0), "ic.y0"),
            x10=_as_float(ic_tab.get("x10", 0.0), "ic.x10"),
        )
        ic_tab.finish()

    solver_raw = top.get("solver")
    if solver_raw is None:
        solver, ns = SolverConfig(), RegularizationIndex(6400, 6400)
    else:
        solver, ns = _parse_solver(solver_raw, "solver")

    refine_raw = top.get("refine")
    refine = RefineSettings() if refine_raw is None else _parse_refine(refine_raw, "refine")

    oracle_raw = top.get("oracle")
    oracle = (
        EventConfig(output_grid=solver.output_grid)
        if oracle_raw is None
        else _parse_oracle(oracle_raw, "oracle", solver.output_grid)
    )

    verify_raw = top.get("verify")
    verify = VerifySettings() if verify_raw is None else _parse_verify(verify_raw, "verify")

    compare_raw = top.get("compare")
    compare = (
        CompareSettings() if compare_raw is None else _parse_compare(compare_raw, "compare")
    )

    chain_raw = top.get("chain")
    chain = None if chain_raw is None else _parse_chain(chain_raw, "chain")

    if params is None and chain is None:
        raise ConfigError("need either [params]+[gait] or a [chain] section")

    top.finish()
    return RunSetup(
        horizon=horizon,
        params=params,
        gait=gait,
        ic=ic,
        solver=solver,
        ns=ns,
        refine=refine,
        oracle=oracle,
        verify=verify,
        compare=compare,
        chain=chain,
    )


def load_config(path: str | Path) -> RunSetup:
    """Read and validate a TOML configuration file."""
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    return parse_config(data, source=str(path))
