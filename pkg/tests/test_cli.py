from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest

from j1j2 import cli
from j1j2.cli import COLUMNS, ConfigError, RunConfig, emit_plotdata, main, run_sweep, write_csv

TWO_SITE = {"lattice": "1x2", "periodic": False, "grid": [0.5]}


def write_config(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_two_site_exact_row():
    rows = run_sweep(RunConfig.from_dict(TWO_SITE))
    assert len(rows) == 1
    # default conventions scale the half/once value by 4 * 2
    assert rows[0]["energy"] == pytest.approx(-0.75 * 8)
    assert rows[0]["error"] == ""


def test_csv_is_deterministic(tmp_path):
    path = write_config(tmp_path, {"lattice": "2x3", "grid": [0.0, 0.5], "method": "qlanczos-chebyshev",
                                   "krylov": {"d": 3}})
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        assert main(["sweep", "--config", path, "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        for r in rows:
            r.pop("wall_time")
        outs.append(rows)
    assert outs[0] == outs[1]
    assert len(outs[0]) == 2 and set(outs[0][0]) == set(COLUMNS) - {"wall_time"}


def test_empty_records_give_header_only():
    buf = io.StringIO()
    write_csv([], buf)
    assert buf.getvalue() == ",".join(COLUMNS) + "\n"


def test_float_formatting_roundtrips():
    assert cli.format_value(0.1 + 0.2) == repr(0.1 + 0.2)
    assert cli.format_value(None) == "" and cli.format_value(float("nan")) == ""


@pytest.mark.parametrize("bad", [
    {"schema_version": 2},
    {"lattice": "5x5"},
    {"method": "dmrg"},
    {"surprise": 1},
    {"moments": {"fraction": 0}},
    {"coupling": {"spin_convention": "quarter"}},
])
def test_bad_configs_are_rejected(bad, tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(bad)
    assert main(["sweep", "--config", write_config(tmp_path, bad)]) == 1


def test_missing_config_file_exits_1(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.json")]) == 1


def test_hash_ignores_output_paths():
    a = RunConfig.from_dict(dict(TWO_SITE, output={"csv": "a.csv"}))
    b = RunConfig.from_dict(dict(TWO_SITE, output={"csv": "b.csv"}))
    c = RunConfig.from_dict(dict(TWO_SITE, grid=[0.4]))
    assert a.hash() == b.hash() != c.hash()
    assert len(a.hash()) == 16


def test_point_failure_sets_exit_code_2(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("simulated failure")

    monkeypatch.setattr("j1j2.krylov.qlanczos", boom)
    path = write_config(tmp_path, dict(TWO_SITE, method="qlanczos-chebyshev", krylov={"d": 1}))
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", path, "--out", str(out)]) == 2
    row = next(csv.DictReader(out.open()))
    assert "simulated failure" in row["error"]


def test_energy_bars_columns():
    rows = [
        {"j2j1": 0.5, "method": "vqe", "energy": -10.0, "oracle_energy": -14.0, "error": ""},
        {"j2j1": 0.5, "method": "qlanczos-chebyshev", "energy": -13.5, "oracle_energy": -14.0, "error": ""},
    ]
    cols, table = emit_plotdata(rows, "energy-bars")
    assert cols == ("j2j1", "vqe", "qlanczos", "exact")
    assert table == [{"j2j1": 0.5, "vqe": -10.0, "qlanczos": -13.5, "exact": -14.0}]


def test_warmstart_trace_columns():
    traces = [{"warm": False, "trace": [0, -1, -0.5]}, {"warm": True, "trace": [-2, -3, -3]}]
    cols, table = emit_plotdata(traces, "warmstart-trace")
    assert cols == ("iteration", "naive", "warm")
    assert [r["naive"] for r in table] == [0, -1, -1]


def test_unknown_figure(tmp_path):
    assert main(["emit", "--figure", "fig99"]) == 1


def test_reference_table_is_plot_coordinates_only():
    ref = cli.load_reference()
    assert ref["schema_version"] == 1
    adj = ref["figures"]["neel-adjusted"]["adjusted"]
    assert adj["x"][-1] == 1.0 and adj["y"][-1] == pytest.approx(0.00399, abs=1e-5)
    cols, table = emit_plotdata(None, "reference", "krylov-neel")
    assert {r["figure"] for r in table} == {"krylov-neel"}


def _curve_rows(values, truth=None, col="neel"):
    xs = [0.0, 0.1, 0.2, 0.3, 0.5, 0.56, 0.58, 0.7, 0.8, 0.9, 1.0]
    rows = []
    for x, v in zip(xs, values):
        r = {c: None for c in COLUMNS}
        r.update(j2j1=x, method="vqe", seed=0, error="", note="")
        r[col] = v
        rows.append(r)
    return xs, rows


def test_correct_identity_input(tmp_path):
    xs, rows = _curve_rows([0.37 - 0.36 * x**2 for x in [0.0, 0.1, 0.2, 0.3, 0.5, 0.56, 0.58, 0.7, 0.8, 0.9, 1.0]])
    out, params = cli.correct_records(rows, {"neel": [(0.0, 0.37), (1.0, 0.01)]})
    for a, b in zip(rows, out):
        assert b["neel_crzne"] == pytest.approx(a["neel"], abs=1e-6)
    assert params[0]["observable"] == "neel"


def test_correct_synthetic_distortion():
    xs = np.array([0.0, 0.1, 0.2, 0.3, 0.5, 0.56, 0.58, 0.7, 0.8, 0.9, 1.0])
    truth = 0.37 - 0.366 * xs**2
    _, rows = _curve_rows(list(0.8 * truth + 0.02))
    out, _ = cli.correct_records(rows, {"neel": [(0.0, truth[0]), (1.0, truth[-1])]})
    assert np.max(np.abs(np.array([r["neel_crzne"] for r in out]) - truth)) <= 1e-3


def test_correct_needs_anchors(tmp_path):
    with pytest.raises(ConfigError):
        cli.correct_records([], {})


def test_correct_command_roundtrip(tmp_path):
    xs, rows = _curve_rows([0.37 - 0.36 * x**2 for x in [0.0, 0.1, 0.2, 0.3, 0.5, 0.56, 0.58, 0.7, 0.8, 0.9, 1.0]])
    src = tmp_path / "in.csv"
    write_csv(rows, str(src))
    anchors = tmp_path / "a.json"
    anchors.write_text(json.dumps({"neel": [[0.0, 0.37], [1.0, 0.01]]}))
    out = tmp_path / "out.csv"
    assert main(["correct", "--in", str(src), "--anchors", str(anchors), "--out", str(out)]) == 0
    assert json.loads((tmp_path / "out.csv.params.json").read_text())[0]["observable"] == "neel"


def test_oracle_and_moments_commands(capsys):
    assert main(["oracle", "--lattice", "2x3", "--j2j1", "0.5"]) == 0
    assert "energy" in json.loads(capsys.readouterr().out)
    assert main(["moments", "--lattice", "2x3", "--j2j1", "0.5", "--state", "neel"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["moments"]["moments"]) == 4 and "e0" in out


def test_threaded_sweep_matches_serial(monkeypatch):
    cfg = RunConfig.from_dict({"lattice": "2x3", "grid": [0.0, 0.5, 1.0]})
    serial = run_sweep(cfg)
    monkeypatch.setenv("J1J2_THREADS", "2")
    par = run_sweep(cfg)
    for a, b in zip(serial, par):
        a.pop("wall_time"), b.pop("wall_time")
        assert a == b
