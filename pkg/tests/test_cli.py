import csv
import os
import subprocess
import sys

import pytest

from idsrecon.cli import main


@pytest.fixture
def dataset(tmp_path):
    assert main(["simulate", "--n", "12", "--k", "3", "--trials", "4", "--seed", "3", "--out", str(tmp_path)]) == 0
    return tmp_path / "centers.txt", tmp_path / "clusters.txt"


def test_simulate_writes_pair(dataset):
    centers, clusters = dataset
    assert len(centers.read_text().split()) == 4
    assert clusters.read_text().count("=") > 0


def test_simulate_is_seeded(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        main(["simulate", "--n", "20", "--k", "2", "--trials", "3", "--seed", "11", "--out", str(d)])
    assert (a / "clusters.txt").read_bytes() == (b / "clusters.txt").read_bytes()


def test_decode_and_records(dataset, tmp_path):
    centers, clusters = dataset
    out, rec = tmp_path / "res.csv", tmp_path / "rec.tsv"
    code = main(["decode", "--centers", str(centers), "--clusters", str(clusters), "--k", "2,3",
                 "--decoder", "belief-combine,single-trace", "--out", str(out), "--records", str(rec)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert {(r["decoder"], r["K"]) for r in rows} == {(d, k) for d in ("belief-combine", "single-trace")
                                                      for k in ("2", "3")}
    assert len(rec.read_text().splitlines()) == 1 + 16


def test_decode_whole_clusters(dataset, capsys):
    centers, clusters = dataset
    assert main(["decode", "--centers", str(centers), "--clusters", str(clusters)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2 and lines[1].startswith("belief-combine,3,")


def test_oracle_and_verify(capsys):
    assert main(["oracle", "--n", "4", "--k", "2", "--trials", "1", "--pi", "0.05", "--pd", "0.05",
                 "--ps", "0.05"]) == 0
    out = capsys.readouterr().out
    assert "exact posterior" in out and "map agreement" in out
    assert main(["verify", "--n", "4", "--k", "2", "--trials", "3"]) == 0
    out = capsys.readouterr().out
    assert "map agreement" in out and "joint-vs-enum max" in out


def test_bench_plotdata(tmp_path, capsys):
    plots = tmp_path / "plots"
    assert main(["bench", "--n", "12", "--k", "1,2", "--trials", "2", "--rates", "0.02,0.05",
                 "--emit-plotdata", str(plots)]) == 0
    rows = list(csv.DictReader((plots / "k_sweep.csv").open()))
    assert len(rows) == 2 * 2 * 2


def test_bench_output_reproducible(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        main(["bench", "--n", "12", "--k", "2", "--trials", "2", "--decoder", "forward-soft", "--out", str(path)])
        outs.append([r[:-2] for r in csv.reader(path.open())])  # drop runtime and failures columns
    assert outs[0] == outs[1]


class TestExitCodes:
    def test_usage(self, capsys):
        assert main(["decode"]) == 2
        assert main(["simulate", "--n", "0", "--k", "2"]) == 2
        assert main(["bench", "--decoder", "nonsense", "--k", "2", "--trials", "1", "--n", "5"]) == 2
        assert main(["verify", "--n", "30", "--k", "2", "--trials", "1"]) == 2  # too large to enumerate

    def test_data(self, tmp_path, capsys):
        assert main(["decode", "--centers", str(tmp_path / "missing.txt"),
                     "--clusters", str(tmp_path / "missing2.txt")]) == 3
        (tmp_path / "c.txt").write_text("ACGT\nACGT\n")
        (tmp_path / "r.txt").write_text("==\nACGT\n")
        assert main(["decode", "--centers", str(tmp_path / "c.txt"), "--clusters", str(tmp_path / "r.txt")]) == 3

    def test_collapse(self, tmp_path, capsys):
        (tmp_path / "c.txt").write_text("ACGT\n")
        (tmp_path / "r.txt").write_text("==\nACGTTTT\n")
        # no insertions allowed, so a longer read has no alignment at all
        code = main(["decode", "--centers", str(tmp_path / "c.txt"), "--clusters", str(tmp_path / "r.txt"),
                     "--pi", "0"])
        assert code == 4
        assert "collapsed" in capsys.readouterr().err


def test_jobs_env_is_honoured(dataset, tmp_path):
    centers, clusters = dataset
    env = {**os.environ, "IDSRECON_JOBS": "2"}
    res = subprocess.run([sys.executable, "-m", "idsrecon", "decode", "--centers", str(centers),
                          "--clusters", str(clusters), "--k", "2"], capture_output=True, text=True, env=env)
    assert res.returncode == 0, res.stderr
    env["IDSRECON_JOBS"] = "zero"
    res = subprocess.run([sys.executable, "-m", "idsrecon", "decode", "--centers", str(centers),
                          "--clusters", str(clusters), "--k", "2"], capture_output=True, text=True, env=env)
    assert res.returncode == 2
