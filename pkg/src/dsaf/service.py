"""HTTP front end: submit, tear down, and inspect slices over REST.

Endpoints: POST /slices, DELETE /slices/{id}, GET /slices, GET /metrics.
Requests may arrive concurrently; admissions are serialized behind a lock
so the orchestrator keeps a single consistent residual picture.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .orchestrator import Orchestrator, OrchestratorError, RequestRecord
from .slices import SliceRequest


def record_summary(record: RequestRecord) -> dict:
    return {
        "request_id": record.request.id,
        "name": record.request.name,
        "allocator": record.allocator,
        "state": record.state,
        "reason": record.reason,
        "assignment": (list(record.placement.assignment)
                       if record.placement is not None else None),
        "total_delay_ms": (record.placement.total_delay_ms
                           if record.placement is not None else None),
        "processing_time_ms": record.processing_time_ms,
        "computation_time_ms": record.computation_time_ms,
    }


class _ServiceHandler(BaseHTTPRequestHandler):
    server_version = "dsaf"

    @property
    def orch(self) -> Orchestrator:
        return self.server.orchestrator  # type: ignore[attr-defined]

    @property
    def lock(self) -> threading.Lock:
        return self.server.admission_lock  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        pass

    def _reply(self, code: int, body: dict) -> None:
        data = json.dumps(body).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_POST(self):
        if self.path.rstrip("/") != "/slices":
            self._reply(404, {"error": f"no such path {self.path}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw)
            request = SliceRequest.from_dict(doc)
        except (ValueError, KeyError, TypeError) as exc:
            self._reply(400, {"error": f"bad slice request: {exc}"})
            return
        try:
            with self.lock:
                record = self.orch.submit(request)
        except OrchestratorError as exc:
            self._reply(409, {"error": str(exc)})
            return
        code = 201 if record.state == "Active" else 200
        self._reply(code, record_summary(record))

    def do_DELETE(self):
        parts = self.path.strip("/").split("/")
        if len(parts) != 2 or parts[0] != "slices":
            self._reply(404, {"error": f"no such path {self.path}"})
            return
        try:
            request_id = int(parts[1])
        except ValueError:
            self._reply(400, {"error": f"bad slice id {parts[1]!r}"})
            return
        try:
            with self.lock:
                record = self.orch.deallocate(request_id)
        except OrchestratorError as exc:
            self._reply(404, {"error": str(exc)})
            return
        self._reply(200, record_summary(record))

    def do_GET(self):
        path = self.path.rstrip("/")
        if path == "/slices":
            with self.lock:
                rows = [record_summary(r) for r in self.orch.records.values()]
            self._reply(200, {"slices": rows})
        elif path == "/metrics":
            self._reply(200, {"metrics": self.orch.store.metrics_rows()})
        else:
            self._reply(404, {"error": f"no such path {self.path}"})


class SliceService(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, orchestrator: Orchestrator, host: str = "127.0.0.1",
                 port: int = 0):
        super().__init__((host, port), _ServiceHandler)
        self.orchestrator = orchestrator
        self.admission_lock = threading.Lock()


def start_service(orchestrator: Orchestrator, host: str = "127.0.0.1",
                  port: int = 0) -> SliceService:
    """Serve the REST API in a daemon thread; returns the bound server."""
    service = SliceService(orchestrator, host, port)
    thread = threading.Thread(target=service.serve_forever, daemon=True)
    thread.start()
    return service
