import csv
import json

import pytest

from dmst import graph as gm
from dmst.cli import OUT_ENV, loglog_slope, main


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_run_verified(tmp_path):
    out = tmp_path / "r.jsonl"
    code = main(["run", "--gen", "random", "--n", "64", "--m", "128", "--algo", "opt",
                 "--seeds", "1,2,3", "--verify", "--out", str(out)])
    assert code == 0
    recs = read_jsonl(out)
    assert len(recs) == 3 and all(r["verified"] for r in recs)
    assert {"schema_version", "instance", "rounds", "messages_by_tag", "wall_clock"} <= set(recs[0])


def test_unknown_algorithm(capsys):
    assert main(["run", "--gen", "path", "--n", "8", "--algo", "nosuch"]) == 2


def test_single_node_record(tmp_path):
    out = tmp_path / "one.jsonl"
    for algo in ("opt", "ghs"):
        assert main(["run", "--gen", "path", "--n", "1", "--algo", algo, "--out", str(out)]) == 0
        rec = read_jsonl(out)[0]
        assert (rec["rounds"], rec["messages_total"]) == (0, 0)


def test_round_limit_failure():
    assert main(["run", "--gen", "path", "--n", "32", "--algo", "ghs", "--round-limit", "3"]) == 1


def test_sweep_needs_sizes():
    assert main(["sweep", "--gen", "path", "--sizes", ""]) == 2
    assert main(["sweep", "--gen", "path", "--sizes", "8,16"]) == 2
    assert main(["sweep", "--gen", "random", "--ms", "20,30,40"]) == 2


def test_sweep_writes_to_env_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path))
    code = main(["sweep", "--gen", "random", "--n", "32", "--ms", "40,80,160", "--algo", "ghs",
                 "--seeds", "0,1", "--verify"])
    assert code == 0
    rows = list(csv.DictReader((tmp_path / "sweep-random-ghs.csv").open()))
    assert [int(float(r["m"])) for r in rows] == [40, 80, 160]
    tail = read_jsonl(tmp_path / "sweep-random-ghs.jsonl")[-1]
    assert tail["slopes"]["messages_vs_m"] is not None and tail["partial"] is None


def test_gen_roundtrip(tmp_path):
    out = tmp_path / "hard.txt"
    assert main(["gen", "--gen", "hard", "--p", "2", "--L", "3", "--D", "8", "--out", str(out)]) == 0
    g = gm.load(out)
    meta = json.loads(out.with_suffix(".json").read_text())
    assert (g.n, g.m) == (meta["n"], meta["m"])


def test_run_from_file(tmp_path):
    path = tmp_path / "g.txt"
    gm.save(gm.generate_grid(4, 4, 0), path)
    assert main(["run", "--input", str(path), "--algo", "opt", "--verify"]) == 0


def test_verify_cover(capsys):
    assert main(["verify-cover", "--gen", "grid", "--rows", "6", "--cols", "6", "--W", "2"]) == 0
    rec = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert rec["ok"] is True
    assert main(["verify-cover", "--gen", "path", "--n", "8", "--W", "0"]) == 2


def test_loglog_slope():
    assert loglog_slope([1, 2, 4], [3, 6, 12]) == pytest.approx(1.0)
    assert loglog_slope([1], [1]) is None
