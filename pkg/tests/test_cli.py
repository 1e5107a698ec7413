import json

import pytest

from hexperc.cli import EXPERIMENT_NAMES, main


def lines_without_timestamp(path):
    out = []
    for line in path.read_text().splitlines():
        d = json.loads(line)
        d.pop("timestamp", None)
        out.append(json.dumps(d, sort_keys=True))
    return out


def test_verify_quick_ok(capsys):
    assert main(["verify", "--suite", "cube", "--n-max", "3", "--seed", "1"]) == 0
    assert "all checks passed" in capsys.readouterr().out


def test_verify_mutant_caught(capsys):
    code = main(
        ["verify", "--suite", "reimer", "--n-max", "3", "--seed", "1", "--mutate-dsign"]
    )
    assert code == 1
    # and the mutation hook is restored afterwards
    assert main(["verify", "--suite", "reimer", "--n-max", "3", "--seed", "1"]) == 0


def test_verify_bad_args():
    assert main(["verify", "--suite", "cube", "--n-max", "99"]) == 2
    assert main(["verify", "--suite", "nonsense"]) == 2


def test_experiment_unknown_name(capsys):
    assert main(["experiment", "pentagrams"]) == 2
    err = capsys.readouterr().err
    assert all(name in err for name in EXPERIMENT_NAMES)


def run_rsw(tmp_path, tag, seed=3):
    out = tmp_path / f"{tag}.jsonl"
    cfg = tmp_path / f"{tag}.json"
    cfg.write_text(json.dumps({"ns": [2, 3], "lams": [1], "samples": 300}))
    code = main(
        ["experiment", "rsw", "--config", str(cfg), "--seed", str(seed), "--out", str(out)]
    )
    return code, out


def test_experiment_writes_store_and_csv(tmp_path, capsys):
    code, out = run_rsw(tmp_path, "a")
    assert code == 0
    assert out.exists() and out.with_suffix(".csv").exists()
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    names = {r["name"] for r in rows}
    assert any(n.endswith("/plan") for n in names)
    assert "rsw/crossing" in names or any("rsw" in n for n in names)
    csv_lines = out.with_suffix(".csv").read_text().splitlines()
    assert len(csv_lines) == len(rows) + 1


def test_experiment_rerun_reproducible(tmp_path, capsys):
    _, out1 = run_rsw(tmp_path, "r1")
    _, out2 = run_rsw(tmp_path, "r2")
    assert lines_without_timestamp(out1) == lines_without_timestamp(out2)
    _, out3 = run_rsw(tmp_path, "r3", seed=4)
    assert lines_without_timestamp(out1) != lines_without_timestamp(out3)


def test_report_paths(tmp_path, capsys):
    _, out = run_rsw(tmp_path, "rep")
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "p=" in text
    assert main(["report", str(tmp_path / "missing.jsonl")]) == 2
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    capsys.readouterr()
    assert main(["report", str(empty)]) == 0
    assert "empty store" in capsys.readouterr().out


def test_report_bad_json(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert main(["report", str(bad)]) == 2


def test_oracle_command(capsys):
    spec = json.dumps({"kind": "one_arm", "sigma": 1, "n": 1})
    assert main(["oracle", "--lattice-n", "1", "--spec", spec]) == 0
    assert "63/64" in capsys.readouterr().out
    assert main(["oracle", "--spec", "{broken"]) == 2


def test_bad_subcommand_exit_code(capsys):
    assert main(["frobnicate"]) == 2
    assert main([]) == 2


def test_bad_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("[1, 2, 3]")
    assert main(["experiment", "rsw", "--config", str(cfg)]) == 2
