import io
import json
import math

import numpy as np
import pytest
import yaml

from qngherald import __version__, cli, config
from qngherald.errors import ConfigError, NoClickSupport
from qngherald.gaussian import MechInitState, mech_initial_cm
from qngherald.herald import ConditionalState

FAST = {"analysis": {"orders": [1], "threshold": {"starts": 16}}}


def fast(**over):
    doc = {"analysis": dict(FAST["analysis"])}
    for k, v in over.items():
        if k == "analysis":
            doc["analysis"].update(v)
        else:
            doc[k] = v
    return doc


def write(tmp_path, doc, name="c.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_defaults_build():
    cfg = config.load()
    assert cfg.system.g == 0.02 and cfg.system.kappa == 1.0
    assert cfg.pulses[0].spec.tau == 2.0
    assert cfg.eta == (1.0,)
    assert cfg.threshold_seed == 20240611


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"system": {"colour": 1}}, "system.colour"),
        ({"system": {"kappa": -1.0}}, "system.kappa"),
        ({"system": {"g": "big"}}, "system.g"),
        ({"system": {"detuning": "green"}}, "system.detuning"),
        ({"initial": {"n0": -0.1}}, "initial.n0"),
        ({"pulses": []}, "pulses"),
        ({"pulses": [{"tau": 0.0}]}, "pulses.0.tau"),
        ({"pulses": [{"tau": 1.0, "width": 2}]}, "pulses.0"),
        ({"detector": {"eta": 1.5}}, "detector.eta"),
        ({"detector": {"eta": [1.0, 1.0]}}, "detector.eta"),
        ({"analysis": {"orders": [99]}}, "analysis.orders"),
        ({"analysis": {"basis": "diagonal"}}, "analysis.basis"),
        ({"analysis": {"sensing": {"Nc": []}}}, "analysis.sensing.Nc"),
        ({"engine": "quantum"}, "engine"),
        ({"sweep": [{"path": "system.nope", "values": [1]}]}, "system.nope"),
        ({"sweep": [{"path": "system.g", "values": [1]}] * 4}, "sweep"),
        ({"sweep": [{"path": "system.g", "start": 0, "stop": 1, "num": 3, "space": "log"}]}, "sweep.0"),
    ],
)
def test_validation_names_the_field(doc, path):
    with pytest.raises(ConfigError) as info:
        config.load(doc)
    assert info.value.path == path
    assert path in str(info.value)


def test_bad_yaml_and_unknown_preset(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("system: [unclosed")
    with pytest.raises(ConfigError, match="invalid YAML"):
        config.load(str(bad))
    with pytest.raises(ConfigError, match="unknown preset"):
        config.load(preset="lab")


def test_heating_sets_nbar():
    cfg = config.load({"system": {"gamma": 0.01, "heating": 0.06}})
    assert cfg.system.gamma * cfg.system.nbar == pytest.approx(0.06)


def test_set_path_wildcard_touches_every_pulse():
    doc = config.defaults()
    doc["pulses"] = [{"tau": 1.0}, {"tau": 2.0}]
    out = config.set_path(doc, "pulses.*.tau", 0.5)
    assert [p["tau"] for p in out["pulses"]] == [0.5, 0.5]
    assert doc["pulses"][0]["tau"] == 1.0


def test_default_scenario_row():
    row = cli.run_scenario(config.load(fast()))
    assert row["Q1"] >= 0.95 and row["pass1"]
    assert 1e-4 <= row["p_s"] <= 1e-2
    assert row["version"] == __version__ and row["engine"] == "rwa"
    assert all(math.isfinite(v) for v in row.values() if isinstance(v, float))


def test_freespace_preset_row():
    row = cli.run_scenario(config.load(fast(), preset="freespace"))
    assert row["engine"] == "freespace"
    assert row["Q1"] > 0.48


def test_zero_coupling_is_tagged_with_its_stage():
    with pytest.raises(NoClickSupport) as info:
        cli.run_scenario(config.load(fast(system={"g": 0.0})))
    assert info.value.stage == "herald"
    assert str(info.value).startswith("[herald]")


def test_optional_analyses_add_columns():
    doc = fast(analysis={"sensing": {"Nc": [0.1]}, "readout": {"eta": [1.0, 0.5]}})
    row = cli.run_scenario(config.load(doc))
    assert row["dNc@0.1"] == pytest.approx(1 / math.sqrt(500 * row["F@0.1"]))
    assert row["readout_p1@eta=0.5"] < row["readout_p1@eta=1"]


def test_sweep_row_count_is_the_axis_product():
    doc = fast(sweep=[{"path": "initial.n0", "values": [0.0, 0.1]},
                      {"path": "pulses.0.tau", "start": 1.0, "stop": 2.0, "num": 3}])
    rows = list(cli.run_sweep(config.load(doc)))
    assert len(rows) == 6
    assert [r["row"] for r in rows] == list(range(6))
    assert rows[4]["sweep:initial.n0"] == 0.1 and rows[4]["pulse0.tau"] == 1.5
    assert all(r["error"] == "" for r in rows)


def test_sweep_keeps_going_past_a_bad_row():
    doc = fast(sweep=[{"path": "system.g", "values": [0.02, 0.0, 0.03]}])
    rows = list(cli.run_sweep(config.load(doc)))
    assert len(rows) == 3
    assert rows[1]["error"].startswith("NoClickSupport") and rows[1]["error_stage"] == "herald"
    assert rows[0]["error"] == rows[2]["error"] == ""


def test_empty_sweep_equals_single_scenario():
    cfg = config.load(fast())
    (row,) = cli.run_sweep(cfg)
    single = cli.run_scenario(cfg)
    assert {k: v for k, v in row.items() if k not in ("row", "error")} == single


def test_parallel_sweep_matches_serial():
    doc = fast(sweep=[{"path": "initial.n0", "values": [0.0, 0.05, 0.1]}])
    cfg = config.load(doc)
    assert list(cli.run_sweep(cfg, workers=2)) == list(cli.run_sweep(cfg, workers=1))


def test_csv_single_row_has_two_lines():
    buf = io.StringIO()
    cli.emit([{"a": 1.0, "b": "x,y", "c": True}], "csv", buf)
    lines = buf.getvalue().splitlines()
    assert lines == ["a,b,c", '1,"x,y",true']


def test_floats_keep_full_precision():
    x = 0.1 + 0.2
    assert float(cli.format_value(x)) == x
    assert cli.format_value(math.inf) == "Infinity"


def test_jsonl_round_trip(tmp_path):
    rows = [{"n": 3, "x": 1 / 3, "ok": False, "name": "q\"1"}, {"n": 4, "x": 2e-300, "ok": True, "name": ""}]
    path = tmp_path / "out.jsonl"
    assert cli.emit(rows, "jsonl", path) == 2
    assert cli.read_jsonl(path) == rows


def test_vacuum_wigner_dump_peaks_at_two_over_pi():
    buf = io.StringIO()
    cli.wigner_dump(ConditionalState.gaussian(mech_initial_cm(MechInitState(0.0))), buf, 4.0, 101)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("#") and "2/pi" in lines[0]
    axis = np.array(lines[2].split(",")[1:], dtype=float)
    W = np.array([line.split(",")[1:] for line in lines[3:]], dtype=float)
    assert W.shape == (101, 101) and axis[0] == -4.0 and axis[-1] == 4.0
    assert np.unravel_index(W.argmax(), W.shape) == (50, 50)
    assert W[50, 50] == pytest.approx(2 / math.pi, abs=1e-12)


def run_cli(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exit_codes(tmp_path, capsys):
    code, _, err = run_cli(["herald", "--config", str(tmp_path / "missing.yaml")], capsys)
    assert code == cli.EXIT_CONFIG and "config error" in err
    code, _, err = run_cli(["herald", "--config", write(tmp_path, fast(system={"g": 0.0}))], capsys)
    assert code == cli.EXIT_NUMERICAL and "[herald]" in err
    code, _, err = run_cli(["herald", "--config", write(tmp_path, fast()), "--out", str(tmp_path / "no" / "x.csv")], capsys)
    assert code == cli.EXIT_IO and "no" in err


def test_cli_output_is_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, fast(sweep=[{"path": "initial.n0", "values": [0.0, 0.1]}]))
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli.main(["sweep", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["sweep", "--config", cfg, "--out", str(b), "--workers", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 2


def test_engine_override(tmp_path, capsys):
    cfg = write(tmp_path, fast(system={"omega_m": 30.0}))
    code, out, _ = run_cli(["herald", "--config", cfg, "--engine", "full"], capsys)
    row = json.loads(out)
    assert code == 0 and row["engine"] == "full"
    assert row["Q1"] >= 0.95


def test_rates_subcommand_ratios(capsys):
    code, out, _ = run_cli(["rates"], capsys)
    row = json.loads(out)
    assert code == 0
    assert row["omega_m/ref"] == pytest.approx(190 / 96, rel=1e-9)
    assert row["g/ref"] == pytest.approx(60 / 96, rel=1e-9)
    _, out, _ = run_cli(["rates", "--physical-preset", "freespace"], capsys)
    assert json.loads(out)["Gamma_ba/ref"] == pytest.approx(0.0683, abs=1e-4)


def test_threshold_and_depth_subcommands(capsys):
    code, out, _ = run_cli(["threshold", "--n", "1", "--starts", "16", "--format", "csv"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 2
    assert float(lines[1].split(",")[1]) == pytest.approx(0.4779, abs=2e-3)
    code, out, _ = run_cli(["depth", "--fock", "1", "--witness", "qng1"], capsys)
    assert code == 0 and json.loads(out)["d"] == pytest.approx(0.324, abs=0.01)


def test_sense_subcommand_vacuum(capsys):
    code, out, _ = run_cli(["sense", "--fock", "0", "--nc", "1.0", "--kmax", "0"], capsys)
    row = json.loads(out)
    assert code == 0
    assert row["F"] == pytest.approx(math.exp(-1) / (1 - math.exp(-1)), abs=1e-9)
