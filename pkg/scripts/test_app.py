# scripts/test_app.py
import json

import pytest
from fastapi.testclient import TestClient

from app import app
from services import analysis_utils

from scripts.helpers import app_path, sample_path

client = TestClient(app)


def _file(field, path, name=None):
    with open(path, "rb") as f:
        return field, (name or path.rsplit("/", 1)[-1], f.read(), "text/plain")


def _files(program="bfs.gt", graph="path4.el", schedule=None):
    files = [_file("program", app_path(program)), _file("graph", sample_path(graph))]
    if schedule:
        files.append(_file("schedule", app_path(schedule)))
    return files


def test_health():
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_run_returns_vectors_and_stats():
    resp = client.post("/run", files=_files(), data={"threads": "2"})
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["vectors"]["parent"] == [0, 0, 1, 2]
    assert body["stats"]["program"] == "bfs"
    assert body["stats"]["schema_version"] == 1


def test_run_truncates_long_vectors():
    resp = client.post("/run", files=_files(), data={"max_vertices": "2"})
    assert resp.json()["vectors"]["parent"] == [0, 0]


def test_run_with_overrides_and_schedule():
    resp = client.post("/run", files=_files(schedule="bfs_hybrid.sched"), data={"overrides": json.dumps({"source": 2})})
    assert resp.status_code == 200, resp.text
    assert resp.json()["vectors"]["parent"] == [-1, -1, 2, 2]


@pytest.mark.parametrize("overrides", ["[1, 2]", "{not json"])
def test_malformed_overrides(overrides):
    resp = client.post("/run", files=_files(), data={"overrides": overrides})
    assert resp.status_code == 400
    assert "overrides must be a JSON object" in resp.json()["detail"]


def test_weighted_upload_keeps_its_suffix():
    resp = client.post("/run/tsv", files=_files("sssp.gt", "small.wel"), data={"vector": "SP"})
    assert resp.status_code == 200, resp.text
    assert resp.text == "0\t0\n1\t3\n2\t1\n3\t4\n4\t7\n"


def test_compile_errors_are_client_errors():
    files = [("program", ("broken.gt", b"func main(\n", "text/plain")), _file("graph", sample_path("path4.el"))]
    resp = client.post("/run", files=files)
    assert resp.status_code == 400


def test_unknown_vector_is_a_server_error():
    resp = client.post("/run/tsv", files=_files(), data={"vector": "rank"})
    assert resp.status_code == 500
    assert "no vertex vector named 'rank'" in resp.json()["detail"]


def test_dump_kinds():
    resp = client.post("/dump/ir", files=[_file("program", app_path("bfs.gt"))], data={"ascii_only": "true"})
    assert resp.status_code == 200
    assert resp.text.startswith("s1: <")
    resp = client.post("/dump/plan", files=[_file("program", app_path("bfs.gt")),
                                            _file("schedule", app_path("bfs_hybrid.sched"))])
    assert "for dst in vertices:" in resp.text


def test_unknown_dump_kind():
    resp = client.post("/dump/asm", files=[_file("program", app_path("bfs.gt"))])
    assert resp.status_code == 404


def test_verify_matrix(tmp_path, monkeypatch):
    monkeypatch.setattr(analysis_utils, "BUCKET", None)
    monkeypatch.setattr(analysis_utils, "ARTIFACTS_DIR", str(tmp_path))
    resp = client.post("/verify", files=_files(graph="two_triangles.el"), data={"save": "true"})
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert body["passed"] and len(body["checks"]) == 13
    assert body["stored_at"] == str(tmp_path / "verify" / "bfs.json")


def test_verify_single_schedule():
    resp = client.post("/verify", files=_files(schedule="bfs_bitvec.sched"))
    body = resp.json()
    assert [c["schedule"] for c in body["checks"]] == ["bfs_bitvec"]


def test_tune_stores_its_history(tmp_path, monkeypatch):
    monkeypatch.setattr(analysis_utils, "BUCKET", None)
    monkeypatch.setattr(analysis_utils, "ARTIFACTS_DIR", str(tmp_path))
    space = json.dumps({"direction": ["SparsePush", "DensePull"], "ssg": ["none"]})
    resp = client.post("/tune", files=_files(graph="two_triangles.el"),
                       data={"label": "s1", "trials": "2", "seed": "1", "strategy": "random", "space": space})
    assert resp.status_code == 200, resp.text
    body = resp.json()
    assert len(body["visited"]) == 2
    stored = tmp_path / "tune" / "bfs-1.json"
    assert body["stored_at"] == str(stored)
    assert json.loads(stored.read_text())["label"] == "s1"


@pytest.mark.parametrize("data", [
    {"label": "s1", "space": "{oops"},
    {"label": "s1", "space": json.dumps({"direction": ["Sideways"]})},
    {"label": "nowhere"},
])
def test_tune_rejects_bad_requests(data):
    resp = client.post("/tune", files=_files(), data=data)
    assert resp.status_code == 400
