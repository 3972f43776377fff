import json

import pytest

from mvtsg.cli import main, parse_betas, parse_env, parse_seeds, run_verify
from mvtsg.game_model import random_toy_game, save_model


def _files(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_seed_ranges():
    assert parse_seeds("1..4") == [1, 2, 3, 4]
    assert parse_seeds("3,7..8, 10") == [3, 7, 8, 10]
    with pytest.raises(ValueError):
        parse_seeds("5..2")
    assert parse_betas("0,0.1,2") == [0.0, 0.1, 2.0]


def test_environment_strings(tmp_path):
    kind, build = parse_env("toy:7:2:3:2")
    m = build(0.5)
    assert kind == "exact" and m.num_states == 3 and m.action_sizes == (2, 2) and m.beta == 0.5
    assert parse_env("scenario2")[0] == "sampled"
    path = tmp_path / "g.json"
    save_model(random_toy_game(3), path)
    assert parse_env(f"file:{path}")[1](2.0).beta == 2.0
    for bad in ("nope", "toy:", "toy:1:2:3:4:5", "file:"):
        with pytest.raises(ValueError):
            parse_env(bad)


def test_mapi_writes_runs_and_is_byte_identical(tmp_path, capsys):
    args = ["mapi", "--env", "toy:7:2:2:2", "--beta", "0,1", "--seed", "1..3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
    assert a == b and len(a) == 2 * 3 * 2 + 1
    summary = json.loads((tmp_path / "a" / "mapi" / "summary.json").read_text())
    assert all(r["monotone"] and r["stationary"] and r["converged"] for r in summary["runs"])
    header = (tmp_path / "a" / "mapi" / "beta=1.0_seed=2" / "trace.csv").read_text().splitlines()[0]
    assert header == "outer,inner,agent,eta,zeta,j,changed_states"


def test_all_starts_agree_with_enumeration(tmp_path, capsys):
    assert main(["mapi", "--env", "toy:7:2:2:2", "--beta", "1", "--seed", "1..3", "--all-starts",
                 "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "mapi" / "summary.json").read_text())
    assert summary["all_starts"][0]["agrees"]
    assert "agrees" in capsys.readouterr().out


def test_modified_runs_report_restart_values(tmp_path):
    assert main(["mapi-modified", "--env", "toy:5:2:3:2", "--beta", "1", "--seed", "1,2",
                 "--out", str(tmp_path)]) == 0
    runs = json.loads((tmp_path / "mapi-modified" / "summary.json").read_text())["runs"]
    for r in runs:
        js = r["restart_j"]
        assert all(b > a + 1e-12 for a, b in zip(js, js[1:]))


def test_enumerate_table(tmp_path):
    assert main(["enumerate", "--env", "toy:7:2:2:2", "--beta", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "enumerate" / "beta=1.0" / "table.csv").read_text().splitlines()
    assert len(lines) == 1 + 16
    summary = json.loads((tmp_path / "enumerate" / "summary.json").read_text())
    assert summary["runs"][0]["global_max_j"] == pytest.approx(0.7443390681663788, abs=1e-12)


def test_enumerate_rejects_sampled_env(tmp_path, capsys):
    assert main(["enumerate", "--env", "scenario2", "--beta", "0", "--out", str(tmp_path)]) == 2


def test_verify_passes_and_fault_injection_fails(tmp_path, capsys):
    assert main(["verify", "--games", "4", "--seed", "3", "--out", str(tmp_path / "ok")]) == 0
    assert main(["verify", "--games", "4", "--seed", "3", "--out", str(tmp_path / "bad"),
                 "--inject-fault", "mean-shift-sign"]) == 1
    rep = json.loads((tmp_path / "bad" / "verify" / "report.json").read_text())["results"]["3"]
    assert not rep["perf_difference"]["passed"]
    assert all(v["passed"] for k, v in rep.items() if k != "perf_difference")


def test_verify_counts_reproducible():
    a = run_verify(5, 3, suites=["perf_difference", "classification"])
    b = run_verify(5, 3, suites=["perf_difference", "classification"])
    assert a == b


def test_matrpo_with_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"env": "toy:7:2:2:2", "beta": [1.0], "seeds": "1..2",
                               "matrpo": {"total_steps": 16000, "kl_epsilon": 0.02}}))
    out = tmp_path / "out"
    assert main(["matrpo", "--config", str(cfg), "--out", str(out)]) == 0
    run = json.loads((out / "matrpo" / "beta=1.0_seed=2" / "summary.json").read_text())
    assert run["config"]["kl_epsilon"] == 0.02 and run["iterations"] == 20 and run["finite"]
    header = (out / "matrpo" / "beta=1.0_seed=1" / "trace.csv").read_text().splitlines()[0].split(",")
    assert header[:7] == ["iteration", "eta_hat", "zeta_hat", "j_hat", "eta_exact", "zeta_exact", "j_exact"]
    assert header[7:] == ["mean_kl_0", "mean_kl_1"]


def test_bad_inputs_exit_with_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["mapi", "--config", str(cfg)]) == 2
    assert main(["mapi", "--env", "toy:1", "--beta", "-1"]) == 2
    assert main(["mapi", "--env", "file:/does/not/exist.json"]) == 2
    assert main(["matrpo", "--env", "toy:1", "--config", str(tmp_path / "missing.json")]) == 2
