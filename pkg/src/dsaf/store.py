"""Durable record of requests, schemes, and metrics.

One append-only JSON-lines event log (plus a sibling metrics file) per run.
State is never updated in place: the live residual picture is the fold of
the log, which makes crash recovery a replay and lets tests diff runs as
text.  Single writer; see the orchestrator's admission discipline.
"""

from __future__ import annotations

import json
import time
from pathlib import Path
from typing import TYPE_CHECKING

from .slices import Placement, SliceRequest
from .topology import Topology, apply_placement, revert_placement

if TYPE_CHECKING:
    from .orchestrator import RequestRecord

EVENT_KINDS = (
    "RequestReceived", "SchemeStored", "Placed", "Rejected", "Failed",
    "Deallocated",
)
TERMINAL_STATES = ("Active", "Rejected", "Failed", "Released")


class StoreError(Exception):
    pass


class EventStore:
    """Append-only event log under a directory (events.jsonl, metrics.jsonl)."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.events_path = self.dir / "events.jsonl"
        self.metrics_path = self.dir / "metrics.jsonl"
        self._next_seq = self._count_existing()
        self._live_schemes: set[int] = set()
        self._scheme_cache: dict[int, Placement] = {}
        if self.events_path.exists():
            self._warm_caches()

    def _count_existing(self) -> int:
        if not self.events_path.exists():
            return 0
        return sum(1 for line in self.events_path.read_text().splitlines()
                   if line.strip())

    def _warm_caches(self) -> None:
        for entry in self.events():
            self._fold_liveness(entry)

    def _fold_liveness(self, entry: dict) -> None:
        kind = entry["kind"]
        payload = entry["payload"]
        if kind == "SchemeStored":
            rid = payload["request_id"]
            self._live_schemes.add(rid)
            self._scheme_cache[rid] = Placement.from_dict(payload)
        elif kind in ("Deallocated", "Failed"):
            self._live_schemes.discard(payload["request_id"])

    # -- append side ---------------------------------------------------

    def append(self, kind: str, payload: dict) -> int:
        if kind not in EVENT_KINDS:
            raise StoreError(f"unknown event kind {kind!r}")
        seq = self._next_seq
        entry = {"seq": seq, "ts": time.time(), "kind": kind, "payload": payload}
        with open(self.events_path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")
        self._next_seq += 1
        self._fold_liveness(entry)
        return seq

    def record_request(self, request: SliceRequest) -> int:
        return self.append("RequestReceived", request.to_dict())

    def persist_scheme(self, p: Placement) -> int:
        """Write-ahead: the scheme is durable before any PLACE dispatch."""
        if p.request_id in self._live_schemes:
            raise StoreError(
                f"a live scheme for request {p.request_id} already exists")
        return self.append("SchemeStored", p.to_dict())

    def record_metrics(self, record: "RequestRecord") -> None:
        if record.state not in TERMINAL_STATES:
            raise StoreError(
                f"request {record.request.id} is in non-terminal state "
                f"{record.state}")
        row = {
            "request_id": record.request.id,
            "allocator": record.allocator,
            "outcome": record.state,
            "processing_time_ms": record.processing_time_ms,
            "computation_time_ms": record.computation_time_ms,
        }
        with open(self.metrics_path, "a") as fh:
            fh.write(json.dumps(row) + "\n")

    # -- read side -----------------------------------------------------

    def events(self) -> list[dict]:
        """Parse and validate the full log; errors name the bad sequence."""
        if not self.events_path.exists():
            return []
        entries = []
        expected = 0
        with open(self.events_path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(
                        f"corrupt event at sequence {expected}: {exc}") from exc
                if entry.get("seq") != expected:
                    raise StoreError(
                        f"sequence gap at {expected}: log has {entry.get('seq')}")
                if entry.get("kind") not in EVENT_KINDS:
                    raise StoreError(
                        f"unknown event kind at sequence {expected}")
                entries.append(entry)
                expected += 1
        return entries

    def scheme_for(self, request_id: int) -> Placement:
        if request_id not in self._scheme_cache:
            raise StoreError(f"no stored scheme for request {request_id}")
        return self._scheme_cache[request_id]

    def metrics_rows(self) -> list[dict]:
        if not self.metrics_path.exists():
            return []
        rows = []
        with open(self.metrics_path) as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
        return rows

    def load_state(self, base_topology: Topology) -> tuple[Topology, dict, list[dict]]:
        """Fold the event log onto a fresh copy of the base topology.

        Returns (topology with residuals, active {id: (placement, request)},
        metric rows).
        """
        topo = base_topology.copy()
        requests: dict[int, SliceRequest] = {}
        schemes: dict[int, Placement] = {}
        active: dict[int, tuple[Placement, SliceRequest]] = {}
        for entry in self.events():
            kind, payload = entry["kind"], entry["payload"]
            if kind == "RequestReceived":
                req = SliceRequest.from_dict(payload)
                requests[req.id] = req
            elif kind == "SchemeStored":
                p = Placement.from_dict(payload)
                schemes[p.request_id] = p
            elif kind == "Placed":
                rid = payload["request_id"]
                placement, request = schemes[rid], requests[rid]
                apply_placement(topo, placement, request)
                active[rid] = (placement, request)
            elif kind == "Deallocated":
                rid = payload["request_id"]
                placement, request = active.pop(rid)
                revert_placement(topo, placement, request)
        return topo, active, self.metrics_rows()

    def write_ahead_ok(self) -> bool:
        """No Placed event without a prior SchemeStored for the same id."""
        stored: set[int] = set()
        for entry in self.events():
            if entry["kind"] == "SchemeStored":
                stored.add(entry["payload"]["request_id"])
            elif entry["kind"] == "Placed":
                if entry["payload"]["request_id"] not in stored:
                    return False
        return True
