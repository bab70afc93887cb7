import json

import numpy as np
import pytest

from prodbmo import ExperimentConfig, Grid, GridFunction, Report, emit_report, run_experiment
from prodbmo import fileio
from prodbmo.cli import main
from prodbmo.experiments import Row, render_report


# ---------------------------------------------------------------- reports

def test_empty_report_csv():
    text = render_report(Report("x", "h"), "csv")
    assert text == "scenario,resolution,quantity,value,witness,tolerance,passed\n"


def test_one_row_csv():
    rep = Report("x", "h", [Row("x", "2,2", "q", 0.5, "w", 1e-12, True)])
    lines = render_report(rep, "csv").splitlines()
    assert len(lines) == 2 and lines[1] == 'x,"2,2",q,0.5,w,1e-12,pass'


def test_emit_identical_bytes(tmp_path):
    rep = Report("x", "h", [Row("x", "1", "q", 1 / 3)])
    emit_report(rep, tmp_path / "a.json")
    emit_report(rep, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"scenario": "round_trip", "schema": "other/9"})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"scenario": "round_trip", "bogus": 1})
    with pytest.raises(ValueError):
        run_experiment({"scenario": "nope"})
    a = ExperimentConfig.from_dict({"scenario": "round_trip", "seeds": 3, "workers": 4})
    b = ExperimentConfig.from_dict({"scenario": "round_trip", "seeds": [0, 1, 2], "output": {"path": "x"}})
    assert a.config_hash() == b.config_hash()


# ---------------------------------------------------------------- scenarios

def test_decomposition_scenario():
    rep = run_experiment({"scenario": "decomposition", "resolutions": [[4, 4]], "seeds": 20})
    assert len(rep.rows) == 20
    assert rep.ok and all(r.value <= 1e-10 for r in rep.rows)


def test_necessity_scenario():
    rep = run_experiment({"scenario": "necessity_probe"})
    ratios = [r.value for r in rep.rows if r.passed is None]
    assert len(ratios) == 5 and all(b > a for a, b in zip(ratios, ratios[1:]))
    assert rep.ok


def test_lmo_scaling_scenario():
    rep = run_experiment({"scenario": "lmo_scaling", "seeds": 5})
    assert rep.ok and all(r.value <= 1e-12 for r in rep.rows)


def test_parallel_matches_serial():
    cfg = {"scenario": "heuristic_soundness", "seeds": 6}
    a = render_report(run_experiment(cfg))
    b = render_report(run_experiment(dict(cfg, workers=2)))
    assert a == b


# ---------------------------------------------------------------- CLI

def run(capsys, *argv):
    code = main(list(map(str, argv)))
    return code, capsys.readouterr()


def test_cli_haar_round_trip(tmp_path, capsys):
    g = Grid((2, 2))
    f = GridFunction(g, np.random.default_rng(0).normal(size=g.shape))
    fileio.save_function(f, tmp_path / "f.pbmo")
    assert run(capsys, "haar", "fwd", tmp_path / "f.pbmo", "--out", tmp_path / "s.pbmo")[0] == 0
    assert run(capsys, "haar", "inv", tmp_path / "s.pbmo", "--out", tmp_path / "g.pbmo", "--binary")[0] == 0
    back = fileio.load_function(tmp_path / "g.pbmo")
    assert np.max(np.abs(back.values - f.values)) <= 1e-12


def test_cli_norm(tmp_path, capsys):
    g = Grid((2,))
    fileio.save_function(GridFunction(g, [1.0, 1.0, -1.0, -1.0]), tmp_path / "h.pbmo")
    code, out = run(capsys, "norm", "BMO", tmp_path / "h.pbmo", "--mode", "exact")
    assert code == 0 and json.loads(out.out)["value"] == pytest.approx(1.0)
    code, out = run(capsys, "norm", "LMO", tmp_path / "h.pbmo", "--lmo-mode", "carleson")
    assert json.loads(out.out)["value"] == pytest.approx(4.0)
    code, out = run(capsys, "norm", "bmo", tmp_path / "h.pbmo", "--alpha", "1/4")
    assert json.loads(out.out)["value"] == pytest.approx(1.0)
    code, out = run(capsys, "norm", "stegenga", tmp_path / "h.pbmo")
    assert json.loads(out.out)["value"] == pytest.approx(2.0)


def test_cli_random_input(capsys):
    code, out = run(capsys, "norm", "BMO", "random", "--grid", "2:2", "--seed", "3")
    assert code == 0 and json.loads(out.out)["method"] == "exact"
    code, out = run(capsys, "norm", "BMO", "random", "--grid", "2:2", "--exact-cap", "8")
    assert json.loads(out.out)["method"] == "heuristic"


def test_cli_op(tmp_path, capsys):
    g = Grid((1,))
    fileio.save_function(GridFunction(g, [1.0, -1.0]), tmp_path / "h.pbmo")
    code, out = run(capsys, "op", "matrix-norm", "PI", tmp_path / "h.pbmo", "--export", tmp_path / "m.txt")
    assert code == 0 and json.loads(out.out)["l2_norm"] == pytest.approx(1.0)
    assert np.allclose(fileio.load_matrix(tmp_path / "m.txt"), [[0, 0], [1, 0]])
    code, out = run(capsys, "op", "apply", "0:0:1", tmp_path / "h.pbmo", tmp_path / "h.pbmo",
                    "--out", tmp_path / "o.pbmo")
    assert np.allclose(fileio.load_function(tmp_path / "o.pbmo").values, 1.0)


def test_cli_decompose(tmp_path, capsys):
    code, out = run(capsys, "decompose-check", "random", "random", "--grid", "3:3")
    assert code == 0 and json.loads(out.out)["signatures"] == 27


def test_cli_probe(capsys):
    code, out = run(capsys, "probe", "lmo-scaling", "--seeds", "3", "--format", "csv")
    assert code == 0 and len(out.out.splitlines()) == 4


def test_cli_experiment(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "round_trip", "resolutions": [[3]], "seeds": 5,
                               "output": {"path": str(tmp_path / "r.csv"), "format": "csv"}}))
    code, out = run(capsys, "experiment", "run", cfg)
    assert code == 0 and (tmp_path / "r.csv").read_text().startswith("scenario,")
    code, out = run(capsys, "experiment", "run", cfg, "--out", tmp_path / "missing" / "r.csv")
    assert code == 2


def test_cli_cap_does_not_leak(capsys):
    import os
    before = os.environ.get("PBMO_EXACT_CAP")
    run(capsys, "norm", "BMO", "random", "--grid", "2:2", "--exact-cap", "8")
    assert os.environ.get("PBMO_EXACT_CAP") == before
