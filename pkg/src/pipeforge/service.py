"""HTTP control plane: registry, pipelines, runs, sweeps, datasets, and the
static UI, served single-node over plain HTTP.

All state lives in the run store directory; restarting the service loses
nothing. Run execution happens on a bounded worker pool; handlers only
enqueue and poll. Queued runs persist their full request (request.json) so
a restart re-queues them, and runs caught mid-flight by a crash are marked
failed on the next start.
"""

from __future__ import annotations

import json
import mimetypes
import queue
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .errors import (
    IllegalTransitionError,
    NotFoundError,
    PipeforgeError,
    SchemaError,
    UnknownRunError,
)
from .pipeline import (
    fingerprint,
    pipeline_from_dict,
    pipeline_to_dict,
    validate_pipeline,
)
from .registry import load_registry
from .runner import RunConfig, enqueue_run, execute_recorded
from .tracker import RunStore, expand_sweep

JSON_TYPE = "application/json; charset=utf-8"


@dataclass
class ServiceConfig:
    store_root: str
    port: int = 8765
    host: str = "127.0.0.1"
    plugin_dirs: list = field(default_factory=list)
    dataset_roots: list = field(default_factory=list)
    workers: int = 2
    ui_dir: str | None = None


class ApiError(Exception):
    def __init__(self, status: int, kind: str, message: str):
        super().__init__(message)
        self.status = status
        self.kind = kind

    def body(self) -> dict:
        return {"error": {"kind": self.kind, "message": str(self)}}


def _status_for(error: PipeforgeError) -> int:
    if isinstance(error, (NotFoundError, UnknownRunError)):
        return 404
    if isinstance(error, IllegalTransitionError):
        return 409
    return 422


class Service:
    """Route dispatch and run-worker pool, independent of the socket layer."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = RunStore(config.store_root)
        self.registry = load_registry(config.plugin_dirs)
        self.pipelines_dir = Path(config.store_root) / "pipelines"
        self.pipelines_dir.mkdir(parents=True, exist_ok=True)
        self._queue: queue.Queue = queue.Queue()
        self._workers: list[threading.Thread] = []
        self._stopping = threading.Event()
        self._recover()

    # -- lifecycle ----------------------------------------------------------

    def _recover(self) -> None:
        self.store.recover_interrupted()
        for record in reversed(self.store.query(status="queued")):
            request_path = self.store.runs_dir / record.run_id / "request.json"
            if request_path.is_file():
                self._queue.put(record.run_id)
            else:  # unrunnable without its request; close it out
                self.store.update_status(record.run_id, "failed",
                                         error="request lost across restart")

    def start_workers(self) -> None:
        for i in range(self.config.workers):
            t = threading.Thread(target=self._worker_loop,
                                 name=f"run-worker-{i}", daemon=True)
            t.start()
            self._workers.append(t)

    def stop_workers(self) -> None:
        self._stopping.set()
        for _ in self._workers:
            self._queue.put(None)
        for t in self._workers:
            t.join(timeout=10)
        self._workers.clear()

    def _worker_loop(self) -> None:
        while not self._stopping.is_set():
            run_id = self._queue.get()
            if run_id is None:
                return
            try:
                raw = (self.store.runs_dir / run_id / "request.json").read_text(
                    encoding="utf-8")
                config = RunConfig.from_dict(json.loads(raw))
                execute_recorded(config, self.registry, self.store, run_id)
            except Exception:
                pass  # execute_recorded already marked the record failed
            finally:
                self._queue.task_done()

    def wait_idle(self) -> None:
        """Block until every enqueued run has finished (test helper)."""
        self._queue.join()

    # -- helpers ------------------------------------------------------------

    def _resolve_dataset(self, name: str) -> str:
        for root in self.config.dataset_roots:
            if Path(root).name == name:
                return root
        if Path(name).is_dir():
            return name
        raise ApiError(404, "NotFound", f"unknown dataset {name!r}")

    def _load_stored_pipeline(self, fp: str) -> dict:
        path = self.pipelines_dir / f"{fp}.json"
        if not path.is_file():
            raise ApiError(404, "NotFound", f"no stored pipeline {fp!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def _run_config_from_request(self, doc: dict) -> RunConfig:
        if not isinstance(doc, dict):
            raise ApiError(400, "SchemaError", "request body must be a JSON object")
        has_fp = "fingerprint" in doc
        has_inline = "pipeline" in doc
        if has_fp == has_inline:
            raise ApiError(400, "SchemaError",
                           "provide exactly one of fingerprint or pipeline")
        doc = dict(doc)
        if has_fp:
            stored = self._load_stored_pipeline(doc.pop("fingerprint"))
            doc["pipeline"] = stored["pipeline"]
            doc.setdefault("params", stored.get("params") or {})
        doc["dataset"] = self._resolve_dataset(doc.get("dataset", ""))
        return RunConfig.from_dict(doc)

    def _enqueue(self, config: RunConfig) -> str:
        record = enqueue_run(config, self.registry, self.store)
        request_doc = {
            "pipeline": pipeline_to_dict(config.pipeline),
            "params": config.params, "dataset": config.dataset_root,
            "seed": config.seed, "keywords": config.keywords,
            "split": config.split, "probe": config.probe,
            "loss": config.loss, "accuracy": config.accuracy,
            "jobs": config.jobs,
        }
        (self.store.runs_dir / record.run_id / "request.json").write_text(
            json.dumps(request_doc, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        self._queue.put(record.run_id)
        return record.run_id

    # -- dispatch ------------------------------------------------------------

    def handle(self, method: str, path: str, body: bytes) -> tuple[int, dict]:
        """Dispatch one API request; returns (status, response document)."""
        url = urlparse(path)
        parts = [p for p in url.path.split("/") if p]
        query = {k: v[-1] for k, v in parse_qs(url.query).items()}
        try:
            doc = None
            if method == "POST":
                try:
                    doc = json.loads(body.decode("utf-8")) if body else {}
                except (json.JSONDecodeError, UnicodeDecodeError) as e:
                    raise ApiError(400, "SyntaxError", f"malformed JSON body: {e}")
            return self._route(method, parts, query, doc)
        except ApiError as e:
            return e.status, e.body()
        except PipeforgeError as e:
            return _status_for(e), {"error": e.to_dict()}

    def _route(self, method: str, parts: list[str], query: dict,
               doc) -> tuple[int, dict]:
        if len(parts) < 2 or parts[0] != "api":
            raise ApiError(404, "NotFound", "unknown endpoint")
        head = parts[1]

        if head == "plugins":
            if method == "GET" and len(parts) == 2:
                return 200, {"plugins": [m.to_dict() for m in self.registry.catalog()]}
            if method == "POST" and parts[2:] == ["rescan"]:
                self.registry = load_registry(self.config.plugin_dirs)
                return 200, {"count": len(self.registry.catalog())}

        elif head == "pipelines":
            if method == "GET" and len(parts) == 2:
                docs = [json.loads(p.read_text(encoding="utf-8"))
                        for p in sorted(self.pipelines_dir.glob("*.json"))]
                return 200, {"pipelines": docs}
            if method == "GET" and len(parts) == 3:
                return 200, self._load_stored_pipeline(parts[2])
            if method == "POST" and len(parts) == 2:
                return self._post_pipeline(doc)

        elif head == "runs":
            if method == "POST" and len(parts) == 2:
                config = self._run_config_from_request(doc)
                return 200, {"run_id": self._enqueue(config)}
            if method == "GET" and len(parts) == 2:
                status = query.get("status")
                if status is not None and status not in (
                        "queued", "running", "done", "failed"):
                    raise ApiError(400, "SchemaError",
                                   f"unknown status filter {status!r}")
                runs = self.store.query(status=status,
                                        fingerprint=query.get("fingerprint"),
                                        dataset=query.get("dataset"))
                return 200, {"runs": [r.to_dict() for r in runs]}
            if method == "GET" and len(parts) == 3:
                return 200, self.store.get(parts[2]).to_dict()
            if method == "GET" and len(parts) == 4 and parts[3] == "metrics":
                return 200, {"metrics": self.store.get(parts[2]).metrics}

        elif head == "sweeps":
            if method == "POST" and len(parts) == 2:
                return self._post_sweep(doc)

        elif head == "datasets":
            if method == "GET" and len(parts) == 2:
                roots = [{"name": Path(r).name, "path": r}
                         for r in self.config.dataset_roots]
                return 200, {"datasets": roots}

        raise ApiError(404, "NotFound", "unknown endpoint")

    def _post_pipeline(self, doc) -> tuple[int, dict]:
        if not isinstance(doc, dict) or "pipeline" not in doc:
            raise ApiError(400, "SchemaError",
                           'body must be {"pipeline": ..., "params": ...}')
        spec = pipeline_from_dict(doc["pipeline"])
        params = doc.get("params") or {}
        validated = validate_pipeline(spec, params, self.registry)
        fp = fingerprint(validated)
        path = self.pipelines_dir / f"{fp}.json"
        if not path.exists():  # content-addressed: saving again is a no-op
            stored = {"fingerprint": fp, "pipeline": pipeline_to_dict(spec),
                      "params": validated.normalized_params()}
            path.write_text(json.dumps(stored, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
        return 200, {"fingerprint": fp}

    def _post_sweep(self, doc) -> tuple[int, dict]:
        if not isinstance(doc, dict) or "template" not in doc or "grid" not in doc:
            raise ApiError(400, "SchemaError",
                           'body must be {"template": run config, "grid": {...}}')
        template = dict(doc["template"])
        grid = doc["grid"]
        if not isinstance(grid, dict):
            raise ApiError(400, "SchemaError", "grid must be an object of lists")
        base = self._run_config_from_request(template)
        points = expand_sweep(base.pipeline, base.params, grid, self.registry)
        run_ids = []
        for point in points:
            config = RunConfig(
                pipeline=base.pipeline, params=point.params,
                dataset_root=base.dataset_root, seed=base.seed,
                keywords=base.keywords, split=base.split, probe=base.probe,
                loss=base.loss, accuracy=base.accuracy, jobs=base.jobs)
            run_ids.append(self._enqueue(config))
        return 200, {"run_ids": run_ids}

    # -- static UI ------------------------------------------------------------

    def ui_file(self, path: str) -> tuple[bytes, str] | None:
        if not self.config.ui_dir:
            return None
        root = Path(self.config.ui_dir).resolve()
        rel = path[len("/ui/"):] or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            return None
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        return target.read_bytes(), ctype


class _Handler(BaseHTTPRequestHandler):
    service: Service  # set by make_server

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _respond(self, status: int, payload: bytes, ctype: str = JSON_TYPE):
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _api(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, doc = self.service.handle(self.command, self.path, body)
        self._respond(status, (json.dumps(doc) + "\n").encode("utf-8"))

    def do_GET(self):
        if self.path == "/" or self.path == "/ui":
            self.send_response(302)
            self.send_header("Location", "/ui/")
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        if self.path.startswith("/ui/"):
            found = self.service.ui_file(self.path)
            if found is None:
                self._respond(404, b"not found", "text/plain; charset=utf-8")
            else:
                self._respond(200, found[0], found[1])
            return
        self._api()

    def do_POST(self):
        self._api()


def make_server(config: ServiceConfig) -> tuple[ThreadingHTTPServer, Service]:
    service = Service(config)
    handler = type("BoundHandler", (_Handler,), {"service": service})
    server = ThreadingHTTPServer((config.host, config.port), handler)
    service.start_workers()
    return server, service


def serve(config: ServiceConfig) -> None:
    server, service = make_server(config)
    try:
        print(f"listening on http://{config.host}:{server.server_address[1]}",
              flush=True)
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop_workers()
        server.server_close()
