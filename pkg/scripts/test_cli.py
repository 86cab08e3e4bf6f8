# scripts/test_cli.py
import csv
import io
import json

import pytest

import main
from services import analysis_utils
from services.graph_store import load_graph

from scripts.helpers import app_path, sample_path

PATH4 = sample_path("path4.el")
BFS = app_path("bfs.gt")


def cli(capsys, *argv):
    code = main.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- run

def test_run_writes_the_result_tsv(capsys):
    code, out, err = cli(capsys, "run", BFS, "--graph", PATH4, "--source", 0)
    assert code == 0, err
    assert out == "0\t0\n1\t0\n2\t1\n3\t2\n"


def test_run_with_output_files(capsys, tmp_path):
    out_path, stats_path = tmp_path / "parent.tsv", tmp_path / "stats.json"
    code, out, err = cli(capsys, "run", BFS, "--graph", PATH4, "--out", out_path, "--stats", stats_path,
                         "--threads", 2)
    assert code == 0, err
    assert out == ""
    assert out_path.read_text().splitlines()[3] == "3\t2"
    stats = json.loads(stats_path.read_text())
    assert stats["schema_version"] == 1
    assert stats["program"] == "bfs"
    assert stats["graph"]["n"] == 4
    assert stats["totals"]["edges_applied"] == 3


def test_run_named_vector_and_weighted_graph(capsys):
    code, out, _ = cli(capsys, "run", app_path("sssp.gt"), "--graph", sample_path("small.wel"), "--vector", "SP")
    assert code == 0
    assert [line.split("\t")[1] for line in out.splitlines()] == ["0", "3", "1", "4", "7"]


def test_run_uploads_to_local_artifacts(capsys, tmp_path, monkeypatch):
    monkeypatch.setattr(analysis_utils, "BUCKET", None)
    monkeypatch.setattr(analysis_utils, "ARTIFACTS_DIR", str(tmp_path))
    code, _, err = cli(capsys, "run", BFS, "--graph", PATH4, "--upload")
    assert code == 0, err
    run_dir = tmp_path / "runs" / "bfs-path4"
    assert json.loads((run_dir / "stats.json").read_text())["program"] == "bfs"
    assert (run_dir / "parent.tsv").read_text().startswith("0\t0\n")


# ---------------------------------------------------------------- exit codes

def test_missing_graph_is_a_usage_error(capsys, tmp_path):
    missing = tmp_path / "nope.el"
    code, _, err = cli(capsys, "run", BFS, "--graph", missing)
    assert code == 1
    assert err.startswith("error: ") and str(missing) in err


def test_compile_error_exits_with_one(capsys, tmp_path):
    program = tmp_path / "broken.gt"
    program.write_text("element Vertex end\nfunc main(\n")
    code, _, err = cli(capsys, "run", program, "--graph", PATH4)
    assert code == 1
    assert err.startswith("error: ")


def test_bad_override_syntax(capsys):
    code, _, err = cli(capsys, "run", BFS, "--graph", PATH4, "--set", "source")
    assert code == 1
    assert "--set expects name=value" in err


def test_runtime_error_exits_with_two(capsys):
    code, _, err = cli(capsys, "run", BFS, "--graph", PATH4, "--source", 10)
    assert code == 2
    assert "out of range" in err


def test_verification_mismatch_exits_with_three(capsys, tmp_path):
    # an off-by-one relaxation under the sssp name is checked against the sssp oracle
    broken = tmp_path / "sssp.gt"
    broken.write_text(open(app_path("sssp.gt")).read().replace("prevSP[src] + weight)", "prevSP[src] + weight + 1)"))
    code, out, err = cli(capsys, "verify", broken, "--graph", sample_path("small.wel"))
    assert code == 3
    assert "FAIL" in out
    assert err.startswith("error: sssp under default: SP[")


# ---------------------------------------------------------------- verify, bench, tune

def test_verify_passes_the_standard_matrix(capsys, tmp_path):
    report_path = tmp_path / "report.json"
    code, out, err = cli(capsys, "verify", BFS, "--graph", sample_path("two_triangles.el"), "--threads", 2,
                         "--report", report_path)
    assert code == 0, err
    assert out.startswith("bfs: reference = oracle")
    report = json.loads(report_path.read_text())
    assert report["passed"] and len(report["checks"]) == 13


def test_verify_with_explicit_schedules(capsys):
    code, out, _ = cli(capsys, "verify", BFS, "--graph", PATH4,
                       "--schedule", app_path("bfs_hybrid.sched"), "--schedule", app_path("bfs_bitvec.sched"))
    assert code == 0
    assert "bfs_hybrid" in out and "bfs_bitvec" in out


def test_bench_csv_rows(capsys, tmp_path):
    csv_path = tmp_path / "bench.csv"
    code, _, err = cli(capsys, "bench",
                       "--program", BFS,
                       "--program", f"{BFS}:{app_path('bfs_hybrid.sched')}",
                       "--program", tmp_path / "missing.gt",
                       "--graph", f"p4={PATH4}",
                       "--repeats", 1, "--csv", csv_path, "--source", 1)
    assert code == 0, err
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    assert [(r["program"], r["schedule"], r["status"]) for r in rows] == [
        ("bfs", "default", "ok"),
        ("bfs", "bfs_hybrid", "ok"),
        ("missing", "default", "compile-error"),
    ]
    assert rows[0]["graph"] == "p4" and int(rows[0]["edges_applied"]) == 2


def test_bench_needs_a_repeat(capsys):
    code, _, err = cli(capsys, "bench", "--program", BFS, "--graph", PATH4, "--repeats", 0)
    assert code == 2
    assert "at least one repeat" in err


def test_tune_prints_the_best_schedule(capsys, tmp_path):
    history = tmp_path / "history.json"
    code, out, err = cli(capsys, "tune", BFS, "--graph", sample_path("two_triangles.el"), "--label", "s1",
                         "--trials", 3, "--seed", 4, "--space", sample_path("space.json"), "--out", history)
    assert code == 0, err
    assert out.startswith('program->configApplyDirection("s1",')
    assert "% median" in out
    doc = json.loads(history.read_text())
    assert doc["seed"] == 4 and len(doc["visited"]) == 3


@pytest.mark.parametrize("extra, code_expected", [
    (["--trials", "0"], 2),
    (["--label", "s7"], 1),
])
def test_tune_errors(capsys, extra, code_expected):
    argv = ["tune", BFS, "--graph", PATH4, "--label", "s1", *extra]
    code, _, err = cli(capsys, *argv)
    assert code == code_expected
    assert err.startswith("error: ")


# ---------------------------------------------------------------- dumps

def test_dump_ir_ascii(capsys):
    code, out, _ = cli(capsys, "dump-ir", BFS, "--ascii")
    assert code == 0
    assert out.startswith("s1: <") and out.endswith(">\n")


def test_dump_deps_and_plan(capsys):
    _, deps, _ = cli(capsys, "dump-deps", BFS, "--schedule", app_path("bfs_hybrid.sched"))
    assert "parent" in deps and "early_exit=" in deps
    _, plan, _ = cli(capsys, "dump-plan", BFS, "--schedule", app_path("bfs_hybrid.sched"))
    assert "for dst in vertices:" in plan


# ---------------------------------------------------------------- graph files

def test_convert_through_the_binary_cache(capsys, tmp_path):
    cache, back = tmp_path / "g.csr", tmp_path / "g.el"
    assert cli(capsys, "convert", PATH4, cache)[0] == 0
    code, _, err = cli(capsys, "convert", cache, back)
    assert code == 0
    assert err.strip() == f"{back}: n=4 m=3"
    assert sorted(load_graph(str(back)).edges()) == sorted(load_graph(PATH4).edges())


def test_gen_writes_a_graph(capsys, tmp_path):
    out = tmp_path / "p.wel"
    code, _, err = cli(capsys, "gen", "path", 5, out, "--weights", "1,9", "--seed", 2)
    assert code == 0
    assert err.strip() == f"{out}: n=5 m=8"
    graph = load_graph(str(out))
    assert graph.weighted and graph.m == 8


def test_gen_rejects_bad_weights(capsys, tmp_path):
    code, _, err = cli(capsys, "gen", "path", 5, tmp_path / "p.wel", "--weights", "heavy")
    assert code == 1
    assert "--weights expects lo,hi" in err


def test_dump_source_after_transforms(capsys):
    code, out, _ = cli(capsys, "dump-source", app_path("pr_ec.gt"), "--schedule", app_path("pr_ec_fused.sched"))
    assert code == 0
    assert "func fused_kernel(" in out
