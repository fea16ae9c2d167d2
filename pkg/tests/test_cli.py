"""Configuration loading, delimited output, and the command-line interface."""

import math

import numpy as np
import pytest

from crawlsim import ConfigError, load_config
from crawlsim.cli import main
from crawlsim.config import parse_config
from crawlsim.csvio import (
    RUN_COLUMNS,
    RunTable,
    chain_table,
    events_table,
    penalized_table,
    read_run_csv,
    write_events_csv,
    write_run_csv,
)
from crawlsim import (
    ChainSpec,
    EventConfig,
    InitialConditions,
    PhysicalParams,
    SinusoidGait,
    chain_integrate,
    simulate_events,
)

TWO_PI = 2.0 * math.pi

SMALL_TOML = """
[params]
m1 = 1.0
m2 = 1.0
f1 = 0.1
f2 = 0.3

[gait]
kind = "sinusoid"
l0 = 1.0
amplitude = 0.25
omega = 6.283185307179586

[run]
horizon = 2.0

[solver]
n1 = 200
n2 = 200

[refine]
n0 = [100, 100]
epsilon = 0.05
k_max = 4
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_TOML)
    return path


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def test_load_config_round_trip(small_config):
    setup = load_config(small_config)
    assert setup.params == PhysicalParams(1.0, 1.0, 0.1, 0.3)
    assert setup.horizon == 2.0
    assert (setup.ns.n1, setup.ns.n2) == (200, 200)
    assert setup.refine.epsilon == 0.05
    assert setup.gait.period == pytest.approx(1.0)
    assert setup.chain is None


def test_config_rejects_unknown_keys():
    data = {
        "run": {"horizon": 1.0},
        "params": {"m1": 1.0, "m2": 1.0, "f1": 0.1, "f2": 0.1, "rtoll": 1e-9},
        "gait": {"kind": "constant", "l0": 1.0},
    }
    with pytest.raises(ConfigError, match=r"params\.rtoll"):
        parse_config(data)


def test_config_rejects_unknown_gait_kind():
    data = {
        "run": {"horizon": 1.0},
        "params": {"m1": 1.0, "m2": 1.0, "f1": 0.1, "f2": 0.1},
        "gait": {"kind": "zigzag", "l0": 1.0},
    }
    with pytest.raises(ConfigError, match="zigzag"):
        parse_config(data)


def test_config_requires_run_horizon():
    with pytest.raises(ConfigError, match=r"run"):
        parse_config({"params": {"m1": 1, "m2": 1, "f1": 0, "f2": 0}})


def test_config_requires_matching_params_and_gait():
    data = {
        "run": {"horizon": 1.0},
        "params": {"m1": 1.0, "m2": 1.0, "f1": 0.1, "f2": 0.1},
    }
    with pytest.raises(ConfigError, match=r"\[gait\]"):
        parse_config(data)


def test_config_rejects_bool_in_number_slot():
    data = {
        "run": {"horizon": 1.0},
        "params": {"m1": True, "m2": 1.0, "f1": 0.1, "f2": 0.1},
        "gait": {"kind": "constant", "l0": 1.0},
    }
    with pytest.raises(ConfigError, match=r"params\.m1"):
        parse_config(data)


def test_config_propagates_model_validation():
    data = {
        "run": {"horizon": 1.0},
        "params": {"m1": 1.0, "m2": 1.0, "f1": 0.1, "f2": 0.1},
        "gait": {"kind": "sinusoid", "l0": 1.0, "amplitude": 2.0, "omega": 1.0},
    }
    with pytest.raises(ConfigError, match="amplitude"):
        parse_config(data)


def test_config_chain_section():
    data = {
        "run": {"horizon": 1.0},
        "chain": {
            "masses": [1.0, 1.0, 1.0],
            "frictions": [0.1, 0.2, 0.3],
            "ns": [100, 100, 100],
            "links": [
                {"kind": "constant", "l0": 1.0},
                {"kind": "constant", "l0": 1.5},
            ],
        },
    }
    setup = parse_config(data)
    assert setup.chain is not None and setup.chain.spec.p == 3
    data["chain"]["ns"] = [100, 100]
    with pytest.raises(ConfigError, match=r"chain\.ns"):
        parse_config(data)


def test_config_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/path.toml")


# ---------------------------------------------------------------------------
# Delimited output
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def bench_tables(bench, bench_run, bench_oracle):
    pen = penalized_table(bench.params, bench.gait, bench.ic, bench_run)
    orc = events_table(bench_oracle)
    return pen, orc


def test_run_tables_have_standard_columns(bench_tables):
    pen, orc = bench_tables
    assert pen.columns == RUN_COLUMNS
    assert orc.columns == RUN_COLUMNS
    assert len(pen) == len(orc) == 5001


def test_table_gap_and_force_consistency(bench, bench_tables):
    pen, _ = bench_tables
    l_vals = np.array([bench.gait.eval(t)[0] for t in pen.column("t")])
    assert np.array_equal(pen.column("x2"), pen.column("x1") + l_vals)
    # forces stay within their thresholds
    assert float(np.max(np.abs(pen.column("F1")))) <= bench.params.f1 + 1e-12
    assert float(np.max(np.abs(pen.column("F2")))) <= bench.params.f2 + 1e-12


def test_regime_tokens_reflect_saturation(bench, bench_tables):
    pen, _ = bench_tables
    n1 = 800
    for i in (100, 2500, 4900):
        v1 = pen.column("y")[i]
        expected = "stick" if abs(n1 * v1) < bench.params.f1 else (
            "slip+" if v1 > 0 else "slip-"
        )
        assert pen.column("regime1")[i] == expected


def test_csv_round_trip_is_exact(tmp_path, bench_tables):
    pen, _ = bench_tables
    path = write_run_csv(tmp_path / "run.csv", pen)
    back = read_run_csv(path)
    assert back.columns == pen.columns
    for name in pen.columns:
        if name.startswith("regime"):
            assert list(back.column(name)) == list(pen.column(name))
        else:
            assert np.array_equal(back.column(name), np.asarray(pen.column(name)))


def test_events_sidecar_round_trip(tmp_path, bench_oracle):
    path = write_events_csv(tmp_path / "ev.csv", bench_oracle.events)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,kind,regime1_before,regime2_before,regime1_after,regime2_after"
    assert len(lines) == 1 + len(bench_oracle.events)


def test_chain_table_appends_extra_impulse_columns():
    spec = ChainSpec(masses=(1.0, 0.8, 1.2), frictions=(0.05, 0.2, 0.35))
    links = (
        SinusoidGait(1.0, 0.2, TWO_PI, math.pi / 2),
        SinusoidGait(1.2, 0.2, TWO_PI, math.pi / 2 + 2 * math.pi / 3),
    )
    tr = chain_integrate(spec, links, 0.0, (200, 200, 200), 1.0)
    table = chain_table(spec, links, tr)
    assert table.columns == RUN_COLUMNS + ("k3",)
    assert np.array_equal(table.column("k3"), tr.ks[2])


def test_read_rejects_bad_regime_token(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,y,regime1\n0,1,walking\n")
    with pytest.raises(ValueError, match="walking"):
        read_run_csv(path)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def test_cli_simulate(small_config, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["simulate", "--config", str(small_config), "--out", str(out)])
    assert code == 0
    table = read_run_csv(out / "small.run.csv")
    assert table.columns == RUN_COLUMNS
    assert np.allclose(table.column("t"), np.linspace(0.0, 2.0, 2001))
    assert "wrote" in capsys.readouterr().out


def test_cli_oracle_writes_sidecar(small_config, tmp_path):
    out = tmp_path / "out"
    code = main(["oracle", "--config", str(small_config), "--out", str(out)])
    assert code == 0
    assert (out / "small.oracle.csv").exists()
    assert (out / "small.oracle.events.csv").exists()


def test_cli_compare_agrees(small_config, tmp_path):
    code = main(["compare", "--config", str(small_config), "--out", str(tmp_path)])
    assert code == 0


def test_cli_converge_and_verify(small_config, tmp_path):
    out = tmp_path / "out"
    assert main(["converge", "--config", str(small_config), "--out", str(out)]) == 0
    assert (out / "small.limit.csv").exists()
    assert (out / "small.refine.csv").exists()
    assert main(["verify", "--config", str(small_config), "--out", str(out), "--seed", "3"]) == 0
    assert (out / "small.checks.csv").exists()


def test_cli_verify_reads_any_command_output(small_config, tmp_path):
    out = tmp_path / "out"
    assert main(["oracle", "--config", str(small_config), "--out", str(out)]) == 0
    code = main(
        [
            "verify",
            "--config",
            str(small_config),
            "--input",
            str(out / "small.oracle.csv"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert (out / "small.checks.csv").exists()


def test_cli_verify_names_linear_relation_on_corrupt_k1(small_config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(small_config), "--out", str(out)]) == 0
    table = read_run_csv(out / "small.run.csv")
    # a constant offset on k1 leaves every increment (and hence every
    # inequality) untouched; only the balance relation can catch it
    data = dict(table.data)
    data["k1"] = table.column("k1") + 0.05
    write_run_csv(out / "tampered.run.csv", RunTable(columns=table.columns, data=data))
    code = main(
        [
            "verify",
            "--config",
            str(small_config),
            "--input",
            str(out / "tampered.run.csv"),
            "--out",
            str(out),
        ]
    )
    assert code == 1
    assert "linear-relation" in capsys.readouterr().err


def test_cli_quiet_suppresses_progress(small_config, tmp_path, capsys):
    code = main(
        ["simulate", "--config", str(small_config), "--out", str(tmp_path), "--quiet"]
    )
    assert code == 0
    assert capsys.readouterr().out == ""


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(SMALL_TOML + "\n[extra]\nkey = 1\n")
    code = main(["simulate", "--config", str(bad), "--out", str(tmp_path)])
    assert code == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_missing_config_exit_code(tmp_path):
    code = main(["simulate", "--config", str(tmp_path / "nope.toml")])
    assert code == 2


def test_cli_solver_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "tight.toml"
    cfg.write_text(SMALL_TOML + "\n[oracle]\nmax_events = 1\n")
    code = main(["oracle", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 3
    assert "solver error" in capsys.readouterr().err


def test_cli_converge_failure_exit_code(tmp_path):
    cfg = tmp_path / "deep.toml"
    cfg.write_text(SMALL_TOML.replace("epsilon = 0.05", "epsilon = 1e-4").replace(
        "k_max = 4", "k_max = 0"
    ))
    code = main(["converge", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == 1


def test_cli_env_var_default_out(small_config, tmp_path, monkeypatch):
    target = tmp_path / "envout"
    monkeypatch.setenv("CRAWLSIM_OUT", str(target))
    code = main(["simulate", "--config", str(small_config), "--quiet"])
    assert code == 0
    assert (target / "small.run.csv").exists()


def test_cli_plots_render_figures(small_config, tmp_path):
    out = tmp_path / "figs"
    code = main(
        ["simulate", "--config", str(small_config), "--out", str(out), "--plots"]
    )
    assert code == 0
    svg = out / "small.run.svg"
    assert svg.exists()
    assert svg.read_text(errors="ignore").lstrip().startswith("<?xml")
