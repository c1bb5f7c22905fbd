"""HTTP service: experiment lifecycle, artifact retrieval, comparisons.

Run records persist in an append-only JSONL journal under the data directory;
execution happens on a bounded worker pool draining a FIFO queue. Versioned
under /v1; optional static bearer token via NEXTSENSE_TOKEN.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request, Response
from fastapi.responses import JSONResponse

from . import runner as run_mod
from . import scenario as scn
from . import validation as val

API_VERSION = 1

STATES = ("queued", "running", "completed", "failed")
ARTIFACT_NAMES = (
    "manifest",
    "iq",
    "kpis",
    "mobility",
    "stats",
    "waterfall",
    "preview_trajectory",
)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class RunRecord:
    run_id: str
    spec_doc: dict
    state: str = "queued"
    progress: float = 0.0
    created: str = field(default_factory=_utcnow)
    started: str | None = None
    finished: str | None = None
    dataset_path: str | None = None
    error: str | None = None
    idempotency_key: str | None = None

    def view(self, queue_position: int | None = None) -> dict:
        return {
            "format_version": API_VERSION,
            "run_id": self.run_id,
            "state": self.state,
            "progress": self.progress,
            "queue_position": queue_position,
            "created": self.created,
            "started": self.started,
            "finished": self.finished,
            "dataset_path": self.dataset_path,
            "error": self.error,
        }


class IdempotencyConflict(ValueError):
    pass


class RunRegistry:
    """Durable run records: replayed from the journal, serialized writes."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "runs").mkdir(exist_ok=True)
        self.journal_path = self.data_dir / "journal.jsonl"
        self._lock = threading.RLock()
        self._records: dict[str, RunRecord] = {}
        self._by_key: dict[str, str] = {}
        self._enqueue_seq: dict[str, int] = {}
        self._seq = 0
        self._replay()

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        for line in self.journal_path.read_text().splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            if entry["op"] == "create":
                rec = RunRecord(**entry["record"])
                self._records[rec.run_id] = rec
                if rec.idempotency_key:
                    self._by_key[rec.idempotency_key] = rec.run_id
            elif entry["op"] == "update":
                rec = self._records.get(entry["run_id"])
                if rec is not None:
                    for k, v in entry["fields"].items():
                        setattr(rec, k, v)
        # Runs caught mid-execution by a shutdown cannot resume.
        for rec in self._records.values():
            if rec.state == "running":
                rec.state = "failed"
                rec.error = "interrupted by service restart"
                rec.finished = _utcnow()
                self._append({"op": "update", "run_id": rec.run_id,
                              "fields": {"state": rec.state, "error": rec.error,
                                         "finished": rec.finished}})

    def _append(self, entry: dict) -> None:
        with open(self.journal_path, "a") as f:
            f.write(json.dumps(entry) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def create(self, spec_doc: dict, idempotency_key: str | None) -> tuple[RunRecord, bool]:
        """Returns (record, created). Honors the idempotency key."""
        canonical = json.dumps(spec_doc, sort_keys=True)
        with self._lock:
            if idempotency_key and idempotency_key in self._by_key:
                existing = self._records[self._by_key[idempotency_key]]
                if json.dumps(existing.spec_doc, sort_keys=True) != canonical:
                    raise IdempotencyConflict(
                        f"idempotency key {idempotency_key!r} already used with a different spec"
                    )
                return existing, False
            rec = RunRecord(
                run_id=uuid.uuid4().hex[:12],
                spec_doc=spec_doc,
                idempotency_key=idempotency_key,
            )
            self._records[rec.run_id] = rec
            if idempotency_key:
                self._by_key[idempotency_key] = rec.run_id
            self._append({"op": "create", "record": asdict(rec)})
            return rec, True

    def get(self, run_id: str) -> RunRecord | None:
        with self._lock:
            return self._records.get(run_id)

    def list(self) -> list[RunRecord]:
        with self._lock:
            return sorted(self._records.values(), key=lambda r: r.created)

    def update(self, run_id: str, **fields) -> RunRecord:
        with self._lock:
            rec = self._records[run_id]
            if "progress" in fields:
                fields["progress"] = max(rec.progress, float(fields["progress"]))
            for k, v in fields.items():
                setattr(rec, k, v)
            self._append({"op": "update", "run_id": run_id, "fields": fields})
            return rec

    def try_claim(self, run_id: str) -> bool:
        """Atomically move queued -> running; only one worker wins."""
        with self._lock:
            rec = self._records.get(run_id)
            if rec is None or rec.state != "queued":
                return False
            self.update(run_id, state="running", started=_utcnow())
            return True

    def mark_enqueued(self, run_id: str) -> None:
        with self._lock:
            if run_id not in self._enqueue_seq:
                self._seq += 1
                self._enqueue_seq[run_id] = self._seq

    def queue_position(self, run_id: str) -> int | None:
        with self._lock:
            rec = self._records.get(run_id)
            if rec is None or rec.state != "queued" or run_id not in self._enqueue_seq:
                return None
            my_seq = self._enqueue_seq[run_id]
            ahead = sum(
                1
                for other, seq in self._enqueue_seq.items()
                if seq < my_seq and self._records[other].state == "queued"
            )
            return ahead

    def run_dir(self, run_id: str) -> Path:
        return self.data_dir / "runs" / run_id


class Executor:
    """Bounded worker pool draining a FIFO run queue."""

    def __init__(self, registry: RunRegistry, workers: int):
        self.registry = registry
        self.queue: queue.Queue[str | None] = queue.Queue()
        self.threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"nextsense-worker-{i}")
            for i in range(max(1, workers))
        ]
        for t in self.threads:
            t.start()

    def submit(self, run_id: str) -> None:
        self.registry.mark_enqueued(run_id)
        self.queue.put(run_id)

    def shutdown(self) -> None:
        for _ in self.threads:
            self.queue.put(None)
        for t in self.threads:
            t.join(timeout=5)

    def _worker(self) -> None:
        while True:
            run_id = self.queue.get()
            if run_id is None:
                return
            if not self.registry.try_claim(run_id):
                continue
            rec = self.registry.get(run_id)
            try:
                spec = scn.spec_from_doc(rec.spec_doc)
                ds = run_mod.run_experiment(
                    spec, progress=lambda f: self.registry.update(run_id, progress=f)
                )
                out_dir = self.registry.run_dir(run_id)
                run_mod.write_dataset(ds, out_dir)
                run_mod.read_dataset(out_dir)  # integrity check before completion
                self.registry.update(
                    run_id,
                    state="completed",
                    progress=1.0,
                    finished=_utcnow(),
                    dataset_path=str(out_dir),
                )
            except Exception as e:  # noqa: BLE001 - failure state carries the message
                self.registry.update(
                    run_id, state="failed", error=str(e), finished=_utcnow()
                )


def create_app(
    data_dir: str | Path | None = None,
    workers: int | None = None,
    token: str | None = None,
) -> FastAPI:
    data_dir = Path(data_dir or os.environ.get("NEXTSENSE_DATA_DIR", "./nextsense-data"))
    if workers is None:
        workers = int(os.environ.get("NEXTSENSE_WORKERS", os.cpu_count() or 2))
    if token is None:
        token = os.environ.get("NEXTSENSE_TOKEN") or None

    registry = RunRegistry(data_dir)
    executor = Executor(registry, workers)

    @asynccontextmanager
    async def _lifespan(_: FastAPI):
        yield
        executor.shutdown()

    app = FastAPI(title="nextsense", version="0.1.0", lifespan=_lifespan)
    app.state.registry = registry
    app.state.executor = executor

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if token and request.url.path.startswith("/v1"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {token}":
                return JSONResponse({"detail": "missing or invalid bearer token"}, status_code=401)
        return await call_next(request)

    def _record_or_404(run_id: str) -> RunRecord:
        rec = registry.get(run_id)
        if rec is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return rec

    def _completed_or_409(rec: RunRecord) -> None:
        if rec.state != "completed":
            raise HTTPException(
                status_code=409, detail=f"run {rec.run_id} is {rec.state}, not completed"
            )

    @app.post("/v1/experiments", status_code=201)
    async def create_experiment(request: Request):
        try:
            spec_doc = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body is not valid JSON") from None
        if not isinstance(spec_doc, dict):
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        try:
            spec = scn.spec_from_doc(spec_doc)
        except (ValueError, TypeError, KeyError) as e:
            raise HTTPException(status_code=400, detail=f"unparseable spec: {e}") from None
        violations = scn.validate_spec(spec)
        if violations:
            return JSONResponse(
                {"detail": "spec validation failed",
                 "violations": [{"field": v.field, "reason": v.reason} for v in violations]},
                status_code=400,
            )
        idem = request.headers.get("idempotency-key")
        try:
            rec, created = registry.create(scn.spec_to_doc(spec), idem)
        except IdempotencyConflict as e:
            raise HTTPException(status_code=409, detail=str(e)) from None
        body = rec.view(registry.queue_position(rec.run_id))
        return JSONResponse(body, status_code=201 if created else 200)

    @app.get("/v1/experiments")
    def list_experiments():
        return {
            "format_version": API_VERSION,
            "runs": [r.view(registry.queue_position(r.run_id)) for r in registry.list()],
        }

    @app.get("/v1/experiments/{run_id}")
    def get_experiment(run_id: str):
        rec = _record_or_404(run_id)
        body = rec.view(registry.queue_position(run_id))
        body["spec"] = rec.spec_doc
        return body

    @app.post("/v1/experiments/{run_id}/run", status_code=202)
    def start_run(run_id: str):
        rec = _record_or_404(run_id)
        if rec.state == "queued":
            executor.submit(run_id)
        return rec.view(registry.queue_position(run_id))

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        rec = _record_or_404(run_id)
        return rec.view(registry.queue_position(run_id))

    @app.get("/v1/runs/{run_id}/preview")
    def preview(run_id: str):
        rec = _record_or_404(run_id)
        return _preview_doc(rec)

    def _preview_doc(rec: RunRecord) -> dict:
        spec = scn.spec_from_doc(rec.spec_doc)
        ues = []
        for ue in spec.ues:
            times, positions = scn.trajectory(ue, spec.duration_s, spec.snapshot_interval_s)
            ues.append(
                {
                    "id": ue.id,
                    "mobility_area": {
                        "lo": list(ue.mobility_area.lo),
                        "hi": list(ue.mobility_area.hi),
                    },
                    "times": [float(t) for t in times],
                    "positions": [[float(c) for c in p] for p in positions],
                }
            )
        return {"format_version": API_VERSION, "run_id": rec.run_id, "ues": ues}

    @app.get("/v1/runs/{run_id}/artifacts/{name}")
    def artifact(run_id: str, name: str, ue: int = Query(default=0, ge=0)):
        rec = _record_or_404(run_id)
        if name not in ARTIFACT_NAMES:
            raise HTTPException(status_code=404, detail=f"unknown artifact {name!r}")
        if name == "preview_trajectory":
            return _preview_doc(rec)
        _completed_or_409(rec)
        run_dir = Path(rec.dataset_path)
        if name == "manifest":
            return Response(
                (run_dir / "manifest.json").read_bytes(), media_type="application/json"
            )
        if name == "stats":
            stats_path = run_dir / "stats.json"
            if not stats_path.exists():
                raise HTTPException(status_code=404, detail="no comparison stored for this run")
            return Response(stats_path.read_bytes(), media_type="application/json")
        ue_dir = _ue_dir_or_404(run_dir, ue)
        if name == "iq":
            return Response(
                (ue_dir / "iq.bin").read_bytes(), media_type="application/octet-stream"
            )
        if name == "kpis":
            return Response((ue_dir / "kpis.csv").read_bytes(), media_type="text/csv")
        if name == "mobility":
            return Response((ue_dir / "mobility.csv").read_bytes(), media_type="text/csv")
        # waterfall: computed from the recorded tensor
        ds = run_mod.read_dataset(run_dir)
        if ue >= len(ds.ues):
            raise HTTPException(status_code=404, detail=f"no ue index {ue}")
        return Response(val.waterfall_csv(ds.ues[ue].iq), media_type="text/csv")

    def _ue_dir_or_404(run_dir: Path, ue: int) -> Path:
        manifest = json.loads((run_dir / "manifest.json").read_text())
        if ue >= len(manifest["ues"]):
            raise HTTPException(status_code=404, detail=f"no ue index {ue}")
        return run_dir / f"ue{ue}"

    @app.post("/v1/compare")
    def compare(a: str = Query(...), b: str = Query(...), ue: int = Query(default=0, ge=0)):
        rec_a = _record_or_404(a)
        rec_b = _record_or_404(b)
        _completed_or_409(rec_a)
        _completed_or_409(rec_b)
        ds_a = run_mod.read_dataset(rec_a.dataset_path)
        ds_b = run_mod.read_dataset(rec_b.dataset_path)
        if ue >= len(ds_a.ues) or ue >= len(ds_b.ues):
            raise HTTPException(status_code=404, detail=f"no ue index {ue}")
        iq_a, iq_b = ds_a.ues[ue].iq, ds_b.ues[ue].iq
        if iq_a.shape != iq_b.shape:
            raise HTTPException(
                status_code=409,
                detail={
                    "message": "tensor dimensions do not match",
                    "dims_a": list(iq_a.shape),
                    "dims_b": list(iq_b.shape),
                },
            )
        stats = val.ensemble_report(iq_a, iq_b)
        doc = stats.to_doc()
        doc["run_a"] = a
        doc["run_b"] = b
        doc["ue"] = ue
        (Path(rec_a.dataset_path) / "stats.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n"
        )
        return doc

    return app
