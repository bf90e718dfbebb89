import csv
import json
import re
import shutil
from pathlib import Path

import pytest

import gtsp_lk.cli as cli
import gtsp_lk.oracles as oracles
from gtsp_lk.instance import read_instance
from gtsp_lk.tour import Tour, format_tour

DATA = Path(__file__).parent / "data"
G5 = str(DATA / "g5.gtsp")
ATT48 = str(DATA / "tsplib" / "att48.tsp")


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def exit_code(capsys, *argv):
    with pytest.raises(SystemExit) as info:
        cli.main([str(a) for a in argv])
    return info.value.code, capsys.readouterr().err


# ---------------------------------------------------------------------------
# solve

def test_solve_exact_reaches_optimum(capsys):
    code, out, _ = run(capsys, "solve", "--instance", G5, "--heuristic", "lk", "--variation",
                       "exact", "--gain", 4, "--alpha", 2, "--start", 1)
    assert code == 0
    assert "weight: 1\n" in out
    assert re.search(r"elapsed_ms: \d+\.\d{3}", out)


def test_solve_nn(capsys):
    code, out, _ = run(capsys, "solve", "--instance", G5, "--heuristic", "nn", "--start", 1)
    assert code == 0
    assert out.startswith("1 3 4 5 2\nweight: 2\n")


def test_missing_instance_is_usage_error(capsys):
    code, err = exit_code(capsys, "solve", "--heuristic", "nn")
    assert code == 2
    assert "usage:" in err and "--instance" in err


@pytest.mark.parametrize("argv", [
    ["--gain", "6"], ["--alpha", "0"], ["--option", "0"], ["--start", "9"],
    ["--start", "1", "--seed-list", "1..2"], ["--seed-list", "3..1"], ["--heuristic", "4opt"],
])
def test_invalid_flags_exit_two(capsys, argv):
    code, err = exit_code(capsys, "solve", "--instance", G5, *argv)
    assert code == 2


def test_unreadable_instance_exits_three(capsys, tmp_path):
    bad = tmp_path / "bad.gtsp"
    bad.write_text("NAME: x\nTYPE: GTSP\nDIMENSION: 2\n")
    code, _, err = run(capsys, "solve", "--instance", bad)
    assert code == 3
    code, _, _ = run(capsys, "solve", "--instance", tmp_path / "missing.gtsp")
    assert code == 3


def test_asymmetric_needs_exact(capsys, tmp_path):
    src = tmp_path / "asym.gtsp"
    text = (DATA / "g5.gtsp").read_text().replace("0 1 0 0 0 1\n1 0 1 1 1 0",
                                                   "0 1 0 0 0 1\n2 0 1 1 1 0")
    src.write_text(text)
    assert not read_instance(src).symmetric
    code, _ = exit_code(capsys, "solve", "--instance", src, "--heuristic", "2opt")
    assert code == 2
    code, out, _ = run(capsys, "solve", "--instance", src, "--variation", "exact")
    assert code == 0


def test_infeasible_solver_output_exits_four(capsys, monkeypatch):
    monkeypatch.setattr(cli, "_solve_one", lambda args, inst, r: Tour((0, 1, 2, 3), 1))
    code, _, err = run(capsys, "solve", "--instance", G5)
    assert code == 4
    assert "invalid tour" in err


def test_stale_weight_exits_four(capsys, monkeypatch):
    monkeypatch.setattr(cli, "_solve_one", lambda args, inst, r: Tour((0, 1, 2, 3, 4), 7))
    code, _, err = run(capsys, "solve", "--instance", G5)
    assert code == 4
    assert "stale" in err


def test_json_output_round_trips(capsys):
    code, out, _ = run(capsys, "solve", "--instance", G5, "--heuristic", "3opt", "--option", 5,
                       "--seed-list", "1..5", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert doc["heuristic"] == "3opt-CO"
    assert [r["start"] for r in doc["runs"]] == [1, 2, 3, 4, 5]
    inst = read_instance(G5)
    for entry in doc["runs"]:
        tour = Tour.from_vertices(inst, [v - 1 for v in entry["tour"]])
        assert tour.weight == entry["weight"]
        assert format_tour(tour).startswith(" ".join(map(str, entry["tour"])))


def test_solve_is_deterministic(capsys):
    argv = ["solve", "--instance", G5, "--variation", "closest", "--co", "--seed-list", "1..5"]
    strip = lambda text: re.sub(r"elapsed_ms: .*", "", text)
    assert strip(run(capsys, *argv)[1]) == strip(run(capsys, *argv)[1])


# ---------------------------------------------------------------------------
# convert

def test_convert_names_file_after_cluster_count(capsys, tmp_path):
    code, out, _ = run(capsys, "convert", "--tsp", ATT48, "--sets", 10, "--out", f"{tmp_path}/")
    assert code == 0
    path = Path(out.strip())
    assert path.name == "10att48.gtsp"
    inst = read_instance(path)
    assert (inst.n, inst.m) == (48, 10)


def test_convert_default_sets_and_explicit_file(capsys, tmp_path):
    target = tmp_path / "x.gtsp"
    code, out, _ = run(capsys, "convert", "--tsp", ATT48, "--out", target)
    assert code == 0 and out.strip() == str(target)
    assert read_instance(target).m == 10


def test_convert_singletons(capsys, tmp_path):
    code, out, _ = run(capsys, "convert", "--tsp", ATT48, "--sets", 48, "--out", tmp_path)
    assert code == 0
    assert all(len(c) == 1 for c in read_instance(out.strip()).clusters)


def test_convert_one_cluster_is_an_error(capsys, tmp_path):
    code, err = exit_code(capsys, "convert", "--tsp", ATT48, "--sets", 1, "--out", tmp_path)
    assert code == 2
    assert "need ≥ 2 clusters" in err


# ---------------------------------------------------------------------------
# bench

def write_bench_manifest(tmp_path, **extra):
    shutil.copy(G5, tmp_path / "g5.gtsp")
    data = {"instances": ["g5.gtsp"], "heuristics": ["NN", "LK-E(4,2)"],
            "best_known": {"g5": 1}, "taus": [0.1, 1, 10], "baseline": "NN"}
    data.update(extra)
    p = tmp_path / "manifest.json"
    p.write_text(json.dumps(data))
    return p


def test_bench_writes_reports(capsys, tmp_path):
    manifest = write_bench_manifest(tmp_path)
    code, out, _ = run(capsys, "bench", "--manifest", manifest, "--out", tmp_path / "r1")
    assert code == 0
    names = {Path(p).name for p in out.split()}
    assert {"records.csv", "competition.md", "summary.md", "errors.md", "times.md"} <= names
    rows = (tmp_path / "r1" / "records.csv").read_text().splitlines()
    assert len(rows) == 1 + 20
    assert "g5: archived" in (tmp_path / "r1" / "instances.txt").read_text()

    run(capsys, "bench", "--manifest", manifest, "--out", tmp_path / "r2")
    drop_time = lambda p: [row[:3] + row[4:] for row in csv.reader(p.open())]
    assert drop_time(tmp_path / "r1" / "records.csv") == drop_time(tmp_path / "r2" / "records.csv")
    assert (tmp_path / "r1" / "errors.md").read_text() == (tmp_path / "r2" / "errors.md").read_text()


def test_bench_missing_best_known(capsys, tmp_path):
    manifest = write_bench_manifest(tmp_path, best_known={})
    code, _, err = run(capsys, "bench", "--manifest", manifest, "--out", tmp_path / "r")
    assert code == 2
    assert "instance g5: no best-known value" in err


def test_bench_missing_manifest(capsys, tmp_path):
    code, _, _ = run(capsys, "bench", "--manifest", tmp_path / "none.json", "--out", tmp_path)
    assert code == 3


# ---------------------------------------------------------------------------
# oracle-check

def test_oracle_check_co(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle-check", "--suite", "co", "--trials", 200,
                       "--dump-dir", tmp_path)
    assert code == 0
    assert out.strip() == "co: 200/200 equal"


def test_oracle_check_zero_trials(capsys, tmp_path):
    code, out, _ = run(capsys, "oracle-check", "--trials", 0, "--dump-dir", tmp_path)
    assert code == 0
    assert out.splitlines() == ["co: 0/0 equal", "exact: 0/0 equal", "2opt: 0/0 equal"]


def test_oracle_check_reports_injected_fault(capsys, tmp_path, monkeypatch):
    real = oracles.cluster_optimize

    def broken(instance, tour):
        out = real(instance, tour)
        return Tour(out.vertices, out.weight + 1)

    monkeypatch.setattr(oracles, "cluster_optimize", broken)
    code, out, _ = run(capsys, "oracle-check", "--suite", "co", "--trials", 5,
                       "--dump-dir", tmp_path)
    assert code == 1
    assert out.startswith("co: 0/5 equal")
    dumps = sorted(tmp_path.glob("co-trial*.gtsp"))
    assert dumps
    shrunk = read_instance(dumps[0])
    assert all(len(c) == 1 for c in shrunk.clusters)  # the fault survives any shrinking


def test_module_entry_point():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "gtsp_lk", "solve", "--instance", G5,
                           "--heuristic", "nn"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "weight: 2" in proc.stdout
