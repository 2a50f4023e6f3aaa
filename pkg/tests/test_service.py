"""HTTP service: routing, error statuses, the run queue, and recovery."""

import http.client
import json
import threading

import pytest

from pipeforge.runner import RunConfig
from pipeforge.service import Service, ServiceConfig, make_server

PIPE_DOC = {
    "id": "svc-test",
    "sample": [
        {"plugin": "pad_trim", "version": "^1", "instance_id": "pad"},
        {"plugin": "mfcc", "version": "^1", "instance_id": "feats"},
    ],
    "dataset": [],
    "batch": [],
}


def run_request(tone_root, **over) -> dict:
    doc = {
        "pipeline": PIPE_DOC,
        "params": {"pad": {"target_len": 16000}},
        "dataset": str(tone_root),
        "seed": 5,
        "probe": {"epochs": 4, "learning_rate": 0.1},
        "split": {"criterion": "random_split", "validation_pct": 25.0,
                  "test_pct": 0.0},
    }
    doc.update(over)
    return doc


@pytest.fixture()
def service(tmp_path, tone_root):
    config = ServiceConfig(store_root=str(tmp_path / "store"), workers=1,
                           dataset_roots=[str(tone_root)])
    svc = Service(config)
    svc.start_workers()
    yield svc
    svc.stop_workers()


def get(svc, path):
    return svc.handle("GET", path, b"")


def post(svc, path, doc):
    body = doc if isinstance(doc, bytes) else json.dumps(doc).encode()
    return svc.handle("POST", path, body)


# -- plugins and datasets ---------------------------------------------------------


def test_plugins_endpoint(service):
    status, doc = get(service, "/api/plugins")
    assert status == 200
    by_name = {p["name"]: p for p in doc["plugins"]}
    assert "mfcc" in by_name
    assert by_name["mfcc"]["scopes"] == ["sample"]
    assert by_name["mfcc"]["exec"] == {"builtin": "mfcc"}
    assert any(p["kind"] == "split" for p in doc["plugins"])


def test_datasets_endpoint(service, tone_root):
    status, doc = get(service, "/api/datasets")
    assert status == 200
    assert doc["datasets"] == [{"name": tone_root.name, "path": str(tone_root)}]


def test_unknown_endpoint_404(service):
    for method, path in (("GET", "/api/nonsense"), ("GET", "/nope"),
                         ("POST", "/api/plugins/rescan/extra")):
        status, doc = service.handle(method, path, b"")
        assert status == 404
        assert doc["error"]["kind"] == "NotFound"


def test_malformed_json_400(service):
    status, doc = post(service, "/api/runs", b"{not json")
    assert status == 400
    assert doc["error"]["kind"] == "SyntaxError"


# -- pipelines ------------------------------------------------------------------


def test_pipeline_store_is_content_addressed(service):
    status, doc = post(service, "/api/pipelines",
                       {"pipeline": PIPE_DOC,
                        "params": {"pad": {"target_len": 16000}}})
    assert status == 200
    fp = doc["fingerprint"]
    path = service.pipelines_dir / f"{fp}.json"
    original = path.read_bytes()

    status, again = post(service, "/api/pipelines",
                         {"pipeline": PIPE_DOC,
                          "params": {"pad": {"target_len": 16000}}})
    assert again["fingerprint"] == fp
    assert path.read_bytes() == original  # second save is a no-op

    status, fetched = get(service, f"/api/pipelines/{fp}")
    assert status == 200
    assert fetched["fingerprint"] == fp
    assert fetched["pipeline"]["id"] == "svc-test"
    assert fetched["params"]["feats"]["n_mfcc"] == 10  # defaults materialized

    status, listing = get(service, "/api/pipelines")
    assert status == 200 and len(listing["pipelines"]) == 1

    status, doc = get(service, "/api/pipelines/" + "0" * 64)
    assert status == 404


def test_pipeline_validation_maps_to_422(service):
    bad = dict(PIPE_DOC, id="bad",
               dataset=[{"plugin": "time_shift", "version": "^1",
                         "instance_id": "shift"}])
    status, doc = post(service, "/api/pipelines", {"pipeline": bad})
    assert status == 422
    assert doc["error"]["kind"] == "ScopeError"
    assert "dataset" in doc["error"]["message"]
    assert "time_shift" in doc["error"]["message"]


def test_pipeline_chain_break_maps_to_422(service):
    bad = dict(PIPE_DOC, id="chain",
               sample=[{"plugin": "mfcc", "version": "^1", "instance_id": "a"},
                       {"plugin": "pre_emphasis", "version": "^1",
                        "instance_id": "b"}])
    status, doc = post(service, "/api/pipelines", {"pipeline": bad})
    assert status == 422
    assert doc["error"]["kind"] == "ChainError"


# -- runs -----------------------------------------------------------------------


def test_run_lifecycle_over_api(service, tone_root):
    status, doc = post(service, "/api/runs", run_request(tone_root))
    assert status == 200
    run_id = doc["run_id"]
    service.wait_idle()

    status, record = get(service, f"/api/runs/{run_id}")
    assert status == 200
    assert record["status"] == "done"
    assert record["metrics"]["val_accuracy"] >= 0.9

    status, metrics = get(service, f"/api/runs/{run_id}/metrics")
    assert status == 200
    assert metrics["metrics"]["val_accuracy"] == record["metrics"]["val_accuracy"]

    status, listing = get(service, "/api/runs?status=done")
    assert status == 200
    assert [r["run_id"] for r in listing["runs"]] == [run_id]
    status, empty = get(service, "/api/runs?status=failed")
    assert empty["runs"] == []
    status, by_fp = get(service,
                        f"/api/runs?fingerprint={record['fingerprint']}")
    assert [r["run_id"] for r in by_fp["runs"]] == [run_id]


def test_run_by_stored_fingerprint_and_dataset_name(service, tone_root):
    _, stored = post(service, "/api/pipelines",
                     {"pipeline": PIPE_DOC,
                      "params": {"pad": {"target_len": 16000}}})
    request = run_request(tone_root, dataset=tone_root.name)  # by name
    del request["pipeline"]
    del request["params"]  # stored params kick in
    request["fingerprint"] = stored["fingerprint"]
    status, doc = post(service, "/api/runs", request)
    assert status == 200
    service.wait_idle()
    _, record = get(service, f"/api/runs/{doc['run_id']}")
    assert record["status"] == "done"
    assert record["fingerprint"] == stored["fingerprint"]
    assert record["params"]["pad"]["target_len"] == 16000


def test_run_request_shape_errors(service, tone_root):
    both = run_request(tone_root)
    both["fingerprint"] = "0" * 64
    status, doc = post(service, "/api/runs", both)
    assert status == 400
    assert "exactly one" in doc["error"]["message"]

    neither = run_request(tone_root)
    del neither["pipeline"]
    status, doc = post(service, "/api/runs", neither)
    assert status == 400

    missing = run_request(tone_root, dataset="atlantis")
    status, doc = post(service, "/api/runs", missing)
    assert status == 404
    assert "atlantis" in doc["error"]["message"]

    status, doc = get(service, "/api/runs?status=sideways")
    assert status == 400

    status, doc = get(service, "/api/runs/r-does-not-exist")
    assert status == 404
    assert doc["error"]["kind"] == "UnknownRun"


def test_api_and_cli_report_identical_violation(service, tmp_path, capsys):
    """The same broken spec is named the same way over both front doors."""
    from pipeforge.cli import main
    bad = dict(PIPE_DOC, id="bad",
               dataset=[{"plugin": "time_shift", "version": "^1",
                         "instance_id": "shift"}])
    status, doc = post(service, "/api/pipelines", {"pipeline": bad})
    spec_path = tmp_path / "bad.json"
    spec_path.write_text(json.dumps(bad))
    code = main(["pipeline", "validate", str(spec_path)])
    err = capsys.readouterr().err
    assert status == 422 and code == 1
    assert doc["error"]["message"] in err
    assert doc["error"]["kind"] == "ScopeError" and "ScopeError" in err


# -- sweeps ---------------------------------------------------------------------


def test_sweep_enqueues_every_point(service, tone_root):
    template = run_request(tone_root)
    status, doc = post(service, "/api/sweeps",
                       {"template": template,
                        "grid": {"feats.n_mfcc": [10, 13]}})
    assert status == 200
    assert len(doc["run_ids"]) == 2
    service.wait_idle()
    fps = set()
    for run_id in doc["run_ids"]:
        _, record = get(service, f"/api/runs/{run_id}")
        assert record["status"] == "done"
        fps.add(record["fingerprint"])
    assert len(fps) == 2


def test_sweep_validates_grid(service, tone_root):
    status, doc = post(service, "/api/sweeps",
                       {"template": run_request(tone_root),
                        "grid": {"feats.n_mfcc": [10, 999]}})
    assert status == 422
    assert "999" in doc["error"]["message"]
    status, doc = post(service, "/api/sweeps", {"template": {}})
    assert status == 400


# -- recovery ---------------------------------------------------------------------


def test_restart_requeues_queued_runs(tmp_path, tone_root):
    store_root = str(tmp_path / "store")
    first = Service(ServiceConfig(store_root=store_root, workers=1))
    # enqueue but never start workers: the process "dies" with work pending
    config = RunConfig.from_dict(run_request(tone_root))
    run_id = first._enqueue(config)
    assert first.store.get(run_id).status == "queued"

    second = Service(ServiceConfig(store_root=store_root, workers=1))
    second.start_workers()
    second.wait_idle()
    second.stop_workers()
    assert second.store.get(run_id).status == "done"


def test_restart_fails_interrupted_and_unrecoverable(tmp_path, tone_root):
    store_root = str(tmp_path / "store")
    first = Service(ServiceConfig(store_root=store_root, workers=1))
    config = RunConfig.from_dict(run_request(tone_root))
    running_id = first._enqueue(config)
    first.store.update_status(running_id, "running")
    # a queued record whose request.json never got written
    orphan = first.store.create_run(fingerprint="f" * 64, versions={},
                                    params={}, seed=0, dataset="x",
                                    run_id="orphan")

    second = Service(ServiceConfig(store_root=store_root, workers=1))
    interrupted = second.store.get(running_id)
    assert interrupted.status == "failed"
    assert interrupted.error == "interrupted"
    lost = second.store.get(orphan.run_id)
    assert lost.status == "failed"
    assert "request lost" in lost.error


# -- static UI and sockets ----------------------------------------------------------


def test_ui_file_traversal_guard(tmp_path):
    ui = tmp_path / "ui"
    ui.mkdir()
    (ui / "index.html").write_text("<h1>hello</h1>")
    (tmp_path / "secret.txt").write_text("keep out")
    svc = Service(ServiceConfig(store_root=str(tmp_path / "store"),
                                ui_dir=str(ui)))
    body, ctype = svc.ui_file("/ui/")
    assert b"hello" in body and ctype == "text/html"
    assert svc.ui_file("/ui/../secret.txt") is None
    assert svc.ui_file("/ui/missing.js") is None


def test_service_over_real_socket(tmp_path, tone_root):
    server, svc = make_server(ServiceConfig(
        store_root=str(tmp_path / "store"), port=0, workers=1,
        dataset_roots=[str(tone_root)]))
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        conn = http.client.HTTPConnection("127.0.0.1", port, timeout=10)
        conn.request("GET", "/api/plugins")
        resp = conn.getresponse()
        assert resp.status == 200
        doc = json.loads(resp.read())
        assert any(p["name"] == "mfcc" for p in doc["plugins"])

        conn.request("POST", "/api/runs",
                     body=json.dumps(run_request(tone_root)),
                     headers={"Content-Type": "application/json"})
        resp = conn.getresponse()
        assert resp.status == 200
        run_id = json.loads(resp.read())["run_id"]
        svc.wait_idle()
        conn.request("GET", f"/api/runs/{run_id}")
        resp = conn.getresponse()
        assert json.loads(resp.read())["status"] == "done"

        conn.request("GET", "/")
        resp = conn.getresponse()
        assert resp.status == 302
        assert resp.getheader("Location") == "/ui/"
        resp.read()

        conn.request("POST", "/api/pipelines", body=b"oops{")
        resp = conn.getresponse()
        assert resp.status == 400
        assert json.loads(resp.read())["error"]["kind"] == "SyntaxError"
        conn.close()
    finally:
        server.shutdown()
        svc.stop_workers()
        server.server_close()
