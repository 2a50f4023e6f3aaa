"""Run recording, sweep expansion, and comparison reports.

Store layout under one root directory:

    runs/<run_id>/config.json    immutable run configuration
    runs/<run_id>/status.json    current status + timestamps (atomic rewrite)
    runs/<run_id>/metrics.json   flat name -> float map, written once
    runs/<run_id>/log.txt        free-form append-only log
    index.jsonl                  one header line per run, appended when the
                                 run reaches a terminal status

The run directories are the source of truth; the index is the durable audit
trail. Reloading a store from disk reproduces every record.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    IllegalTransitionError,
    StoreError,
    UnknownMetricError,
    UnknownRunError,
)
from .pipeline import (
    ValidatedPipeline,
    bind_params,
    fingerprint,
    validate_pipeline,
)

STATUSES = ("queued", "running", "done", "failed")
_TRANSITIONS = {
    "queued": {"running", "failed"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def new_run_id() -> str:
    """Monotonic-by-creation id: hex nanosecond clock plus a random suffix."""
    return f"r{time.time_ns():016x}-{os.urandom(3).hex()}"


@dataclass
class RunRecord:
    run_id: str
    fingerprint: str
    versions: dict
    params: dict
    seed: int
    dataset: str
    created: str
    status: str = "queued"
    started: str | None = None
    finished: str | None = None
    error: str | None = None
    metrics: dict = field(default_factory=dict)

    def header(self) -> dict:
        """The index.jsonl line for this record."""
        doc = {"run_id": self.run_id, "fingerprint": self.fingerprint,
               "dataset": self.dataset, "status": self.status,
               "started": self.started}
        if self.metrics:
            doc["metrics"] = self.metrics
        if self.finished:
            doc["finished"] = self.finished
        return doc

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id, "fingerprint": self.fingerprint,
            "versions": self.versions, "params": self.params,
            "seed": self.seed, "dataset": self.dataset,
            "created": self.created, "status": self.status,
            "started": self.started, "finished": self.finished,
            "error": self.error, "metrics": self.metrics,
        }


class RunStore:
    """Durable, append-only store of run records under one directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.runs_dir = self.root / "runs"
        self.runs_dir.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.jsonl"
        self._lock = threading.Lock()

    # -- creation and lifecycle -------------------------------------------

    def create_run(self, *, fingerprint: str, versions: dict, params: dict,
                   seed: int, dataset: str, run_id: str | None = None) -> RunRecord:
        run_id = run_id or new_run_id()
        run_dir = self.runs_dir / run_id
        if run_dir.exists():
            raise StoreError(f"run directory {run_id} already exists")
        record = RunRecord(run_id=run_id, fingerprint=fingerprint,
                           versions=versions, params=params, seed=seed,
                           dataset=dataset, created=_now_iso())
        run_dir.mkdir(parents=True)
        config = {k: v for k, v in record.to_dict().items()
                  if k in ("run_id", "fingerprint", "versions", "params",
                           "seed", "dataset", "created")}
        (run_dir / "config.json").write_text(
            json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self._write_status(run_dir, record)
        return record

    def _write_status(self, run_dir: Path, record: RunRecord,
                      dataset: str | None = None) -> None:
        doc = {"status": record.status, "started": record.started,
               "finished": record.finished, "error": record.error}
        if dataset is not None:
            doc["dataset"] = dataset
        tmp = run_dir / "status.json.tmp"
        tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, run_dir / "status.json")

    def update_status(self, run_id: str, new_status: str,
                      error: str | None = None,
                      dataset: str | None = None) -> RunRecord:
        """Advance the status machine; terminal transitions append the index line.

        `dataset` lets the running transition pin the split-manifest digest,
        which is only computable once the dataset has been ingested.
        """
        if new_status not in STATUSES:
            raise IllegalTransitionError(f"unknown status {new_status!r}")
        with self._lock:
            record = self.get(run_id)
            if new_status not in _TRANSITIONS[record.status]:
                raise IllegalTransitionError(
                    f"run {run_id}: cannot move {record.status} -> {new_status}")
            if new_status == "done" and not record.metrics:
                raise IllegalTransitionError(
                    f"run {run_id}: cannot finish as done without metrics")
            record.status = new_status
            if new_status == "running":
                record.started = _now_iso()
            if new_status in ("done", "failed"):
                record.finished = _now_iso()
                record.error = error
            if dataset is not None:
                record.dataset = dataset
            self._write_status(self.runs_dir / run_id, record,
                               dataset=record.dataset)
            if new_status in ("done", "failed"):
                self._append_index(record)
            return record

    def set_metrics(self, run_id: str, metrics: dict) -> None:
        """Record the flat metric map; allowed once, before the terminal state."""
        record = self.get(run_id)
        if record.status in ("done", "failed"):
            raise IllegalTransitionError(
                f"run {run_id}: metrics cannot change after {record.status}")
        clean = {}
        for name, value in metrics.items():
            if not isinstance(name, str) or isinstance(value, bool) \
                    or not isinstance(value, (int, float)):
                raise StoreError(f"metric {name!r} must map a string to a number")
            clean[name] = float(value)
        path = self.runs_dir / run_id / "metrics.json"
        if path.exists():
            raise StoreError(f"run {run_id}: metrics already recorded")
        path.write_text(json.dumps(clean, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    def append_log(self, run_id: str, text: str) -> None:
        path = self.runs_dir / run_id / "log.txt"
        if not path.parent.is_dir():
            raise UnknownRunError(f"no run {run_id!r} in this store")
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")

    def _append_index(self, record: RunRecord) -> None:
        line = json.dumps(record.header(), sort_keys=True) + "\n"
        with open(self.index_path, "a", encoding="utf-8") as fh:
            fh.write(line)

    # -- reading -----------------------------------------------------------

    def get(self, run_id: str) -> RunRecord:
        run_dir = self.runs_dir / run_id
        config_path = run_dir / "config.json"
        if not config_path.is_file():
            raise UnknownRunError(f"no run {run_id!r} in this store")
        try:
            config = json.loads(config_path.read_text(encoding="utf-8"))
            status = json.loads((run_dir / "status.json").read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise StoreError(f"run {run_id}: unreadable record: {e}") from None
        metrics = {}
        metrics_path = run_dir / "metrics.json"
        if metrics_path.is_file():
            metrics = json.loads(metrics_path.read_text(encoding="utf-8"))
        return RunRecord(
            run_id=config["run_id"], fingerprint=config["fingerprint"],
            versions=config["versions"], params=config["params"],
            seed=config["seed"],
            dataset=status.get("dataset") or config["dataset"],
            created=config["created"], status=status["status"],
            started=status.get("started"), finished=status.get("finished"),
            error=status.get("error"), metrics=metrics)

    def list_runs(self) -> list[RunRecord]:
        """Every record, newest first (creation time, then id)."""
        records = []
        for run_dir in self.runs_dir.iterdir():
            if run_dir.is_dir() and (run_dir / "config.json").is_file():
                records.append(self.get(run_dir.name))
        records.sort(key=lambda r: (r.created, r.run_id), reverse=True)
        return records

    def query(self, *, fingerprint: str | None = None, status: str | None = None,
              dataset: str | None = None,
              metric_range: tuple[str, float, float] | None = None) -> list[RunRecord]:
        """Conjunctive filters over list_runs order."""
        out = []
        for r in self.list_runs():
            if fingerprint is not None and r.fingerprint != fingerprint:
                continue
            if status is not None and r.status != status:
                continue
            if dataset is not None and r.dataset != dataset:
                continue
            if metric_range is not None:
                name, lo, hi = metric_range
                value = r.metrics.get(name)
                if value is None or not (lo <= value <= hi):
                    continue
            out.append(r)
        return out

    def recover_interrupted(self) -> list[str]:
        """Mark every 'running' run as failed: a restart proves it died."""
        recovered = []
        for r in self.list_runs():
            if r.status == "running":
                self.update_status(r.run_id, "failed", error="interrupted")
                recovered.append(r.run_id)
        return recovered


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPoint:
    coords: dict            # grid key -> chosen value
    params: dict            # full params file for this point
    fingerprint: str
    validated: ValidatedPipeline


def expand_sweep(spec, base_params: dict, grid: dict, registry) -> list[SweepPoint]:
    """Cartesian product over the grid, keys sorted, values in given order.

    Every derived config is validated and fingerprinted; a validation error
    is re-raised naming the grid coordinates that produced it.
    """
    for key in grid:
        if "." not in key:
            raise StoreError(
                f"grid key {key!r} must be instance_id.param")
        if not isinstance(grid[key], list) or not grid[key]:
            raise StoreError(f"grid key {key!r} needs a non-empty value list")
    keys = sorted(grid)
    points = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        coords = dict(zip(keys, combo))
        params = json.loads(json.dumps(base_params))  # deep copy
        for key, value in coords.items():
            iid, _, pname = key.partition(".")
            params.setdefault(iid, {})[pname] = value
        try:
            bound = bind_params(spec, params, [])
            validated = validate_pipeline(spec, bound, registry)
        except Exception as e:
            raise type(e)(f"sweep point {coords}: {e}") from None
        points.append(SweepPoint(coords=coords, params=bound,
                                 fingerprint=fingerprint(validated),
                                 validated=validated))
    return points


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    metric: str
    param_columns: list[str]          # differing params only, sorted
    rows: list[dict]                  # run_id, fingerprint, seed, params, value, note
    warnings: list[str] = field(default_factory=list)

    def render_text(self) -> str:
        headers = (["run_id", self.metric, "seed"] + self.param_columns
                   + ["note"])
        table = [headers]
        for row in self.rows:
            value = row["value"]
            table.append(
                [row["run_id"],
                 "-" if value is None else f"{value:.6g}",
                 str(row["seed"])]
                + [_cell(row["params"].get(c)) for c in self.param_columns]
                + [row["note"]])
        widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
                 for r in table]
        lines[1:1] = ["  ".join("-" * w for w in widths)]
        return "\n".join(["# " + w for w in self.warnings] + lines) + "\n"

    def render_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["run_id", self.metric, "seed"] + self.param_columns
                        + ["note"])
        for row in self.rows:
            writer.writerow(
                [row["run_id"],
                 "" if row["value"] is None else row["value"],
                 row["seed"]]
                + [_cell(row["params"].get(c)) for c in self.param_columns]
                + [row["note"]])
        return buf.getvalue()


def _cell(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def _flat_params(record: RunRecord) -> dict:
    flat = {}
    for iid, kv in record.params.items():
        for pname, value in kv.items():
            flat[f"{iid}.{pname}"] = value
    return flat


def compare(records: list[RunRecord], metric: str) -> ComparisonReport:
    """Rows sorted by the metric descending (ties by run_id), with columns
    for exactly the params that differ across the selected runs."""
    if not records:
        raise UnknownRunError("compare needs at least one run")
    if not any(metric in r.metrics for r in records):
        known = sorted({m for r in records for m in r.metrics})
        raise UnknownMetricError(
            f"metric {metric!r} not recorded on any selected run "
            f"(known: {', '.join(known) if known else 'none'})")

    warnings = []
    if len({r.dataset for r in records}) > 1:
        warnings.append("selected runs use different datasets")
    if any(r.status != "done" for r in records):
        warnings.append("selected runs include non-done statuses")

    flats = {r.run_id: _flat_params(r) for r in records}
    all_keys = sorted({k for f in flats.values() for k in f})
    differing = [k for k in all_keys
                 if len({json.dumps(f.get(k), sort_keys=True)
                         for f in flats.values()}) > 1]

    rows = []
    for r in records:
        value = r.metrics.get(metric)
        note = ""
        if r.status == "failed":
            note = f"failed: {r.error or 'unknown'}"
        elif r.status != "done":
            note = r.status
        rows.append({"run_id": r.run_id, "fingerprint": r.fingerprint,
                     "seed": r.seed, "params": flats[r.run_id],
                     "value": value, "note": note})
    rows.sort(key=lambda row: (row["value"] is None,
                               -(row["value"] if row["value"] is not None else 0.0),
                               row["run_id"]))
    return ComparisonReport(metric=metric, param_columns=differing, rows=rows,
                            warnings=warnings)
