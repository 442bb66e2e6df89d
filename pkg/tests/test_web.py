"""Tests for the report server and the run history index."""

import threading

import pytest

from src.primary import background, run_history
from src.primary.network.events import EventStats, LayerStats
from src.primary.routes import runs
from src.primary.stats_manager import (
    SequenceStatsCollector,
    save_frame_stats,
    write_json_atomic,
    write_text_atomic,
)
from src.primary.web_server import create_app


@pytest.fixture
def out_root(tmp_path):
    return tmp_path / "runs"


@pytest.fixture
def client(out_root):
    app = create_app(out_root)
    app.config["TESTING"] = True
    return app.test_client()


def _finished_run(out_root, run_id="r1"):
    run_history.add_run_entry(out_root, run_id, "static", out_root / run_id)
    run_history.update_run_entry(out_root, run_id, "ok")
    write_json_atomic(out_root / run_id / "summary.json", {"status": "ok", "frames": 2})
    write_text_atomic(out_root / run_id / "layers.csv",
                      "layer,neurons,events,synops,event_rate,dense_macs\ninput,10,4,0,0.200000,0\n")


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.get_json()["status"] == "ok"


def test_list_runs_newest_first(client, out_root):
    _finished_run(out_root, "first")
    _finished_run(out_root, "second")
    runs_list = client.get("/api/runs").get_json()["runs"]
    assert [entry["run_id"] for entry in runs_list] == ["second", "first"]
    assert runs_list[0]["status"] == "ok"
    assert runs_list[0]["finished"] is not None


def test_summary(client, out_root):
    _finished_run(out_root)
    assert client.get("/api/runs/r1").get_json() == {"status": "ok", "frames": 2}
    assert client.get("/api/runs/missing").status_code == 404
    assert client.get("/api/runs/bad%20id").status_code == 400


def test_layers_as_json_and_csv(client, out_root):
    _finished_run(out_root)
    body = client.get("/api/runs/r1/layers").get_json()
    assert body["layers"] == [
        {"layer": "input", "neurons": 10, "events": 4, "synops": 0, "event_rate": 0.2, "dense_macs": 0}
    ]
    raw = client.get("/api/runs/r1/layers?format=csv")
    assert raw.mimetype == "text/csv"
    assert raw.get_data(as_text=True).startswith("layer,neurons")
    assert client.get("/api/runs/missing/layers").status_code == 404


def _frame(input_events, conv_events, synops):
    return EventStats(layers=[
        LayerStats("input", neurons=48, events_out=input_events),
        LayerStats("conv0", neurons=32, events_in=input_events, events_out=conv_events, synops=synops, dense_macs=400),
    ])


def test_frames_per_sequence(client, out_root):
    _finished_run(out_root)
    collector = SequenceStatsCollector()
    collector.add(1, "seq-b", [_frame(3, 1, 27)])
    collector.add(0, "seq-a", [_frame(48, 20, 400), _frame(5, 2, 45)])
    assert save_frame_stats(out_root / "r1", collector)

    body = client.get("/api/runs/r1/frames").get_json()
    assert body["run_id"] == "r1"
    assert [seq["seq_id"] for seq in body["sequences"]] == ["seq-a", "seq-b"]
    first, second = body["sequences"][0]["frames"]
    assert first["position"] == 0 and second["position"] == 1
    assert (first["input_events"], first["events"], first["synops"]) == (48, 68, 400)
    assert (second["input_events"], second["events"], second["synops"]) == (5, 7, 45)
    assert second["layers"][1] == {
        "name": "conv0", "neurons": 32, "events_in": 5, "events_out": 2, "synops": 45, "dense_macs": 400,
    }

    only_b = client.get("/api/runs/r1/frames?seq=seq-b").get_json()["sequences"]
    assert [seq["seq_id"] for seq in only_b] == ["seq-b"]
    assert client.get("/api/runs/r1/frames?seq=seq-z").status_code == 404


def test_frames_missing_or_invalid(client, out_root):
    _finished_run(out_root)
    assert client.get("/api/runs/r1/frames").status_code == 404
    assert client.get("/api/runs/nobody/frames").status_code == 404
    assert client.get("/api/runs/bad%20id/frames").status_code == 400


def test_status_falls_back_to_history(client, out_root):
    _finished_run(out_root, "done-run")
    assert client.get("/api/runs/done-run/status").get_json()["status"] == "ok"
    assert client.get("/api/runs/nobody/status").status_code == 404


@pytest.mark.parametrize("body,status", [
    ({}, 400),
    ({"manifest": "m.jsonl", "run_id": "../up"}, 400),
    ({"manifest": "m.jsonl", "colour": "red"}, 400),
    ({"manifest": "m.jsonl", "mask": "everything"}, 400),
    ({"manifest": "m.jsonl", "mask": "static"}, 400),
])
def test_start_run_validation(client, body, status):
    assert client.post("/api/runs", json=body).status_code == status


def test_start_run_runs_in_the_background(client, out_root, monkeypatch):
    calls = []
    monkeypatch.setattr(runs, "run_and_report", lambda manifest, weights, config: calls.append((manifest, config)))

    response = client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "bg-1", "mask": "none", "ks": 0.3})
    assert response.status_code == 202
    assert response.get_json() == {"run_id": "bg-1", "status": "queued"}
    background.run_threads["bg-1"].join(timeout=10)

    manifest, config = calls[0]
    assert manifest == "m.jsonl"
    assert config.mask_mode == "none" and config.k_s == 0.3
    assert config.out_dir == str(out_root / "bg-1")
    assert client.get("/api/runs/bg-1/status").get_json()["status"] == "ok"
    assert run_history.get_run(out_root, "bg-1")["status"] == "ok"
    assert client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "bg-1", "mask": "none"}).status_code == 409


def test_failed_background_run_is_recorded(client, out_root, monkeypatch):
    def explode(manifest, weights, config):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(runs, "run_and_report", explode)
    assert client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "bg-2", "mask": "none"}).status_code == 202
    background.run_threads["bg-2"].join(timeout=10)
    status = client.get("/api/runs/bg-2/status").get_json()
    assert status["status"] == "failed"
    assert status["error"] == "disk on fire"
    assert run_history.get_run(out_root, "bg-2")["error"] == "disk on fire"


def test_unknown_route_is_json(client):
    response = client.get("/api/nothing-here")
    assert response.status_code == 404
    assert response.get_json() == {"error": "not found"}


def test_run_ids():
    assert run_history.is_valid_run_id("2024-01-01_a.b")
    for bad in ("", ".", "..", "a/b", "a b"):
        assert not run_history.is_valid_run_id(bad)


def test_corrupt_history_starts_over(out_root):
    write_text_atomic(run_history.get_history_file_path(out_root), "{\"not\": \"a list\"}")
    assert run_history.get_runs(out_root) == []
    assert run_history.add_run_entry(out_root, "fresh", "none", out_root / "fresh")["status"] == "running"
    assert [entry["run_id"] for entry in run_history.get_runs(out_root)] == ["fresh"]
    assert not run_history.update_run_entry(out_root, "ghost", "ok")


def test_second_run_is_refused_while_one_is_in_progress(client, out_root, monkeypatch):
    release = threading.Event()
    monkeypatch.setattr(runs, "run_and_report", lambda manifest, weights, config: release.wait(10))

    assert client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "busy-1", "mask": "none"}).status_code == 202
    try:
        refused = client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "busy-2", "mask": "none"})
        assert refused.status_code == 409
        assert "busy-1" in refused.get_json()["error"]
        assert run_history.get_run(out_root, "busy-2") is None
        with pytest.raises(background.RunInProgressError):
            background.start_background_run("busy-3", lambda: None)
        assert background.active_run() == "busy-1"
    finally:
        release.set()
        background.run_threads["busy-1"].join(timeout=10)

    assert background.active_run() is None
    assert client.post("/api/runs", json={"manifest": "m.jsonl", "run_id": "busy-2", "mask": "none"}).status_code == 202
    background.run_threads["busy-2"].join(timeout=10)
    assert run_history.get_run(out_root, "busy-2")["status"] == "ok"
