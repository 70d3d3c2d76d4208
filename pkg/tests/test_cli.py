import json

import pytest

from gamenorms import cli
from gamenorms.qre import BatchDiagnostics

GRID = {"grid": {"n_u": 9, "n_v": 9}}


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(p)


def test_landscape_outputs(tmp_path):
    cfg = _write(tmp_path, "c.json", GRID)
    assert cli.run(["landscape", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "1"]) == 0
    lines = (tmp_path / "o" / "landscape.csv").read_text().splitlines()
    assert lines[0] == "U,V,S,Phi,gradU,gradV" and len(lines) == 82
    att = json.loads((tmp_path / "o" / "attractors.json").read_text())
    assert att["attractors"] and {"U", "V", "phi", "class", "Z"} <= set(att["attractors"][0])
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["command"] == "landscape" and man["seed"] == 1
    assert man["outputs"] == ["landscape.csv", "attractors.json"]


def test_manifest_rerun_is_identical(tmp_path):
    cfg = _write(tmp_path, "c.json", {**GRID, "utility": {"type": "linex", "eta": 2.0}})
    cli.run(["landscape", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.run(["landscape", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")])
    for f in ("landscape.csv", "attractors.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_errors(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert cli.run(["landscape", "--config", str(tmp_path / "missing.json"), "--out", out]) == 2
    bad = _write(tmp_path, "bad.json", '{\n  "grid": {"n_u": 9},\n  "colour": 1\n}')
    assert cli.run(["landscape", "--config", bad, "--out", out]) == 2
    assert "bad.json:3" in capsys.readouterr().err
    nested = _write(tmp_path, "n.json", {"grid": {"n_u": 9, "width": 2}})
    assert cli.run(["landscape", "--config", nested, "--out", out]) == 2
    assert "grid.width" in capsys.readouterr().err
    syntax = _write(tmp_path, "s.json", '{"grid": }')
    assert cli.run(["landscape", "--config", syntax, "--out", out]) == 2
    wp = _write(tmp_path, "w.json", {**GRID, "loop": [[0.1, "x"]]})
    assert cli.run(["trajectory", "--config", wp, "--out", out]) == 2
    assert cli.run(["abm", "--config", _write(tmp_path, "a.json", {"sim": {"n_agents": "many"}}),
                    "--out", out]) == 2
    assert cli.run(["abm", "--config", _write(tmp_path, "b.json", {"sim": {"topology": "ring"}}),
                    "--out", out]) == 2


def test_numerical_budget_exit(tmp_path, monkeypatch):
    real = cli.landscape

    def broken(*a, **kw):
        L = real(*a, **kw)
        L.diagnostics = BatchDiagnostics(solves=100, failures=50)
        return L

    monkeypatch.setattr(cli, "landscape", broken)
    cfg = _write(tmp_path, "c.json", GRID)
    assert cli.run(["landscape", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_trajectory(tmp_path):
    cfg = _write(tmp_path, "t.json", {**GRID, "loop": [[0.1, 0.5], [2.0, 2.0]],
                                      "utility": {"type": "linex"}})
    assert cli.run(["trajectory", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    lines = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "mu_eta,mu_lambda,U,V,class,U_hat,V_hat" and len(lines) == 3


def test_abm_warmup_only_and_determinism(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "a.json", {"sim": {"n_agents": 20, "periods": 5, "replicates": 2}})
    assert cli.run(["abm", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "9"]) == 0
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    assert cli.run(["abm", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "9"]) == 0
    rows = (tmp_path / "a" / "metrics.csv").read_text().splitlines()
    assert len(rows) == 1 + 2 * 5
    for f in ("metrics.csv", "agents_rep0.csv", "agents_rep1.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    assert cli.run(["abm", "--config", cfg, "--out", str(tmp_path / "c"), "--seed", "10"]) == 0
    assert (tmp_path / "c" / "metrics.csv").read_bytes() != (tmp_path / "a" / "metrics.csv").read_bytes()


def test_threads_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "lots")
    cfg = _write(tmp_path, "c.json", GRID)
    assert cli.run(["landscape", "--config", cfg, "--out", str(tmp_path / "o")]) == 2


SWEEP = {"sim": {"n_agents": 16, "periods": 6, "track_clustering": False},
         "sweep": {"n_base": 4, "replicates": 1}, "bootstrap": 100}


def test_sweep_smoke_and_resume(tmp_path):
    cfg = _write(tmp_path, "s.json", SWEEP)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.run(["sweep", "--config", cfg, "--out", str(a)]) == 0
    lines = (a / "sweep_results.csv").read_text().splitlines()
    assert len(lines) == 29
    assert lines[0] == ("row,alpha,lambda_shift,normalization,eta_shift,omega_shift,"
                        "replicate,gini,recent_wealth,zerosumness")
    idx = json.loads((a / "sobol_indices.json").read_text())
    assert set(idx) == {"gini", "recent_wealth", "zerosumness"}
    assert {"parameter", "S1", "S1_CI", "ST", "ST_CI"} == set(idx["gini"][0])
    # interrupted, then resumed from the manifest it left behind
    assert cli.run(["sweep", "--config", cfg, "--out", str(b), "--max-jobs", "10"]) == 0
    assert not (b / "sobol_indices.json").exists()
    assert cli.run(["sweep", "--config", str(b / "manifest.json"), "--out", str(b)]) == 0
    for f in ("sweep_results.csv", "sobol_indices.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_sweep_refuses_foreign_partial(tmp_path):
    cfg = _write(tmp_path, "s.json", SWEEP)
    out = str(tmp_path / "o")
    assert cli.run(["sweep", "--config", cfg, "--out", out, "--max-jobs", "3"]) == 0
    assert cli.run(["sweep", "--config", cfg, "--out", out, "--seed", "4"]) == 2


def test_sweep_full_design_job_count():
    from gamenorms.config import parse_config
    cfg, _ = parse_config("sweep", {})
    assert cfg.spec.n_rows * cfg.spec.replicates == 10752


def test_main_exit_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["abm", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
    assert exc.value.code == 2
