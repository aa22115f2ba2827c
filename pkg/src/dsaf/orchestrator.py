"""Admission pipeline: solve, persist, dispatch, then commit residuals.

One request at a time moves through
Received -> Solving -> {Rejected | Accepted -> Placing -> {Active | Failed}}
and an Active slice can later go Deallocating -> Released.  The scheme is
persisted before any PLACE goes out, and hypervisor residuals change only
after every container placement succeeded, so a deployment fault never
leaks partial allocations.
"""

from __future__ import annotations

import ipaddress
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .agents import (AgentError, AgentMessage, HAgent, InProcessTransport,
                     OAgent, new_correlation_id)
from .optimizer import Weights
from .slices import Placement, SliceRequest, validate_request
from .store import EventStore
from .topology import PathTable, Topology, apply_placement, compute_path_table, revert_placement

STATES = (
    "Received", "Solving", "Accepted", "Placing", "Active", "Rejected",
    "Failed", "Deallocating", "Released",
)
_TRANSITIONS = {
    "Received": {"Solving"},
    "Solving": {"Accepted", "Rejected"},
    "Accepted": {"Placing"},
    "Placing": {"Active", "Failed"},
    "Active": {"Deallocating"},
    "Deallocating": {"Released"},
    "Rejected": set(),
    "Failed": set(),
    "Released": set(),
}


class OrchestratorError(Exception):
    pass


@dataclass
class RequestRecord:
    """Lifecycle of one slice request as the orchestrator saw it."""

    request: SliceRequest
    allocator: str
    state: str = "Received"
    placement: Optional[Placement] = None
    reason: Optional[str] = None
    processing_time_ms: float = 0.0
    computation_time_ms: float = 0.0
    containers: dict[str, list[str]] = field(default_factory=dict)
    history: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.history.append(self.state)

    def transition(self, new_state: str) -> None:
        if new_state not in _TRANSITIONS.get(self.state, set()):
            raise OrchestratorError(
                f"invalid transition {self.state} -> {new_state} for request "
                f"{self.request.id}")
        self.state = new_state
        self.history.append(new_state)


class Orchestrator:
    """Owns the residual topology and drives the agents."""

    def __init__(self, topology: Topology, store: EventStore,
                 allocator: str = "dsaf",
                 weights: Optional[Weights] = None,
                 backend: Optional[str] = None,
                 transport: Optional[InProcessTransport] = None,
                 fault_hooks: Optional[dict] = None,
                 timeout_s: float = 5.0,
                 address_network: str = "10.0.0.0/16"):
        self.topology = topology
        self.path_table: PathTable = compute_path_table(topology)
        self.store = store
        self.o_agent = OAgent(allocator=allocator, weights=weights,
                              backend=backend)
        self.o_agent.bind_state(lambda: (self.topology, self.path_table))
        self.timeout_s = timeout_s
        self._network = ipaddress.ip_network(address_network)
        self._address_counter = 0
        self.records: dict[int, RequestRecord] = {}
        self.active: dict[int, tuple[Placement, SliceRequest]] = {}
        if transport is None:
            transport = InProcessTransport()
            hooks = fault_hooks or {}
            for hyp in topology.hypervisors:
                transport.register(HAgent(hyp.name,
                                          fault_hook=hooks.get(hyp.name)))
        self.transport = transport

    @property
    def allocator(self) -> str:
        return self.o_agent.allocator

    def _next_address(self) -> str:
        self._address_counter += 1
        host = self._network.network_address + self._address_counter
        if host >= self._network.broadcast_address:
            raise OrchestratorError("address pool exhausted")
        return str(host)

    # -- admission -------------------------------------------------------

    def submit(self, request: SliceRequest) -> RequestRecord:
        if request.id in self.records and \
                self.records[request.id].state not in ("Released", "Rejected", "Failed"):
            raise OrchestratorError(
                f"request {request.id} is already being handled")
        started = time.perf_counter()
        record = RequestRecord(request=request, allocator=self.allocator)
        self.records[request.id] = record
        self.store.record_request(request)

        record.transition("Solving")
        precheck = validate_request(request, self.topology)
        if precheck is not None:
            self._reject(record, precheck, started)
            return record

        ask = AgentMessage("SLICE_REQUEST", new_correlation_id(),
                           request.to_dict())
        result = self.o_agent.handle(ask)
        if result.kind != "SOLVE_RESULT" or \
                result.correlation_id != ask.correlation_id:
            raise OrchestratorError(
                f"unexpected solver reply {result.kind} for request {request.id}")
        record.computation_time_ms = result.payload["solver_time_ms"]
        if not result.payload["feasible"]:
            binding = result.payload["binding_constraint"]
            self._reject(record, f"no feasible placement ({binding})", started)
            return record

        placement = Placement.from_dict(result.payload["placement"])
        record.placement = placement
        record.transition("Accepted")
        self.store.persist_scheme(placement)

        record.transition("Placing")
        ok = self._dispatch_place(record, placement)
        if not ok:
            self.store.append("Failed",
                              {"request_id": request.id, "reason": record.reason})
            record.transition("Failed")
            self._finish(record, started)
            return record

        apply_placement(self.topology, placement, request)
        self.active[request.id] = (placement, request)
        self.store.append("Placed", {"request_id": request.id})
        record.transition("Active")
        self._finish(record, started)
        return record

    def _reject(self, record: RequestRecord, reason: str,
                started: float) -> None:
        record.reason = reason
        self.store.append("Rejected",
                          {"request_id": record.request.id, "reason": reason})
        record.transition("Rejected")
        self._finish(record, started)

    def _finish(self, record: RequestRecord, started: float) -> None:
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        record.processing_time_ms = max(
            elapsed_ms - record.computation_time_ms, 0.0)
        self.store.record_metrics(record)

    def _dispatch_place(self, record: RequestRecord,
                        placement: Placement) -> bool:
        """One PLACE per container; rollback already-placed ones on failure."""
        request = record.request
        placed: list[tuple[str, str]] = []
        hyp_names = self.path_table.hypervisor_names
        # claim every address first so pool exhaustion cannot strand a
        # half-dispatched slice
        addresses = [self._next_address() for _ in request.vnfs]
        for vnf, hyp_index, address in zip(request.vnfs, placement.assignment,
                                           addresses):
            host = hyp_names[hyp_index]
            container = f"{request.name}-vnf{vnf.index}"
            payload = {
                "slice": container,
                "address": address,
                "cpu_ghz": vnf.cpu_ghz,
                "hdd_gb": vnf.hdd_gb,
                "ram_gb": vnf.ram_gb,
                "bandwidth_mbps": request.bandwidth_mbps,
                "app": vnf.app_command,
            }
            msg = AgentMessage("PLACE", new_correlation_id(), payload)
            try:
                reply = self.transport.send(host, msg,
                                            timeout_s=self.timeout_s)
            except (AgentError, OSError) as exc:
                record.reason = f"agent {host} unreachable: {exc}"
                self._rollback_containers(placed)
                return False
            if reply.kind == "PLACE_FAIL":
                record.reason = (
                    f"placement failed on {host}: {reply.payload.get('error')}")
                self._rollback_containers(placed)
                return False
            if reply.kind != "PLACE_OK":
                record.reason = f"unexpected reply {reply.kind} from {host}"
                self._rollback_containers(placed)
                return False
            placed.append((host, container))
            record.containers.setdefault(host, []).append(container)
        return True

    def _rollback_containers(self, placed: list[tuple[str, str]]) -> None:
        by_host: dict[str, list[str]] = {}
        for host, container in placed:
            by_host.setdefault(host, []).append(container)
        for host, names in by_host.items():
            msg = AgentMessage("DEALLOCATE", new_correlation_id(),
                               {"containers": names})
            try:
                self.transport.send(host, msg, timeout_s=self.timeout_s)
            except (AgentError, OSError):
                # Best-effort cleanup: residuals were never applied, so a
                # dead agent only strands its own simulated containers.
                pass

    # -- teardown ----------------------------------------------------------

    def deallocate(self, request_id: int) -> RequestRecord:
        if request_id not in self.active:
            raise OrchestratorError(f"request {request_id} is not active")
        record = self.records[request_id]
        record.transition("Deallocating")
        placement, request = self.active[request_id]
        for host, names in record.containers.items():
            msg = AgentMessage("DEALLOCATE", new_correlation_id(),
                               {"containers": names})
            reply = self.transport.send(host, msg, timeout_s=self.timeout_s)
            if reply.kind != "DEALLOC_OK":
                raise OrchestratorError(
                    f"unexpected reply {reply.kind} from {host}")
        revert_placement(self.topology, placement, request)
        del self.active[request_id]
        self.store.append("Deallocated", {"request_id": request_id})
        record.transition("Released")
        return record

    # -- batch driving -------------------------------------------------------

    def run_stream(self, requests: Sequence[SliceRequest],
                   realtime: bool = False) -> list[RequestRecord]:
        """Submit requests in arrival order, optionally pacing in real time."""
        ordered = sorted(requests, key=lambda r: (r.arrival_time, r.id))
        records = []
        clock = 0.0
        for request in ordered:
            if realtime and request.arrival_time > clock:
                time.sleep(request.arrival_time - clock)
            clock = request.arrival_time
            records.append(self.submit(request))
        return records

    # -- recovery ------------------------------------------------------------

    @classmethod
    def from_store(cls, base_topology: Topology, store: EventStore,
                   **kwargs) -> "Orchestrator":
        """Rebuild the residual picture by replaying the event log."""
        topo, active, _ = store.load_state(base_topology)
        orch = cls(topo, store, **kwargs)
        for rid, (placement, request) in active.items():
            orch.active[rid] = (placement, request)
            record = RequestRecord(request=request, allocator=orch.allocator)
            record.placement = placement
            record.state = "Active"
            record.history = ["Active"]
            hyp_names = orch.path_table.hypervisor_names
            for vnf, h in zip(request.vnfs, placement.assignment):
                record.containers.setdefault(hyp_names[h], []).append(
                    f"{request.name}-vnf{vnf.index}")
            orch.records[rid] = record
        return orch
