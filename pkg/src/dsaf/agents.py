"""Control-plane agents and the message format between them.

The orchestrator talks to one solver agent (O-agent) and one agent per
hypervisor (H-agent).  Messages are small JSON documents tied together by
a correlation id; the default transport is a direct in-process call, with
a newline-delimited TCP transport for running agents out of process.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass
from typing import Callable, Optional

from .baseline import fcfsfa_allocate
from .optimizer import SolveOutcome, Weights, build_instance, solve
from .slices import Placement, SliceRequest
from .topology import PathTable, Topology

MESSAGE_KINDS = (
    "SLICE_REQUEST", "SOLVE_RESULT", "PLACE", "PLACE_OK", "PLACE_FAIL",
    "DEALLOCATE", "DEALLOC_OK", "STATS",
)
PLACE_FIELDS = (
    "slice", "address", "cpu_ghz", "hdd_gb", "ram_gb", "bandwidth_mbps", "app",
)

_correlation_counter = itertools.count(1)


def new_correlation_id() -> str:
    return f"c{next(_correlation_counter)}"


class AgentError(Exception):
    pass


@dataclass(frozen=True)
class AgentMessage:
    kind: str
    correlation_id: str
    payload: dict

    def __post_init__(self):
        if self.kind not in MESSAGE_KINDS:
            raise AgentError(f"unknown message kind {self.kind!r}")

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind,
                           "correlation_id": self.correlation_id,
                           "payload": self.payload})

    @classmethod
    def from_json(cls, line: str) -> "AgentMessage":
        doc = json.loads(line)
        return cls(kind=doc["kind"], correlation_id=doc["correlation_id"],
                   payload=doc["payload"])


class OAgent:
    """Solver agent: turns a SLICE_REQUEST into a SOLVE_RESULT.

    The current network state is read through ``state_provider`` at solve
    time rather than carried in the message, mirroring a solver that pulls
    state from the database.
    """

    def __init__(self, allocator: str = "dsaf",
                 weights: Optional[Weights] = None,
                 backend: Optional[str] = None):
        if allocator not in ("dsaf", "fcfsfa"):
            raise AgentError(f"unknown allocator {allocator!r}")
        self.name = "o-agent"
        self.allocator = allocator
        self.weights = weights if weights is not None else Weights()
        self.backend = backend
        self._state_provider: Optional[
            Callable[[], tuple[Topology, PathTable]]] = None

    def bind_state(self,
                   provider: Callable[[], tuple[Topology, PathTable]]) -> None:
        self._state_provider = provider

    def solve(self, request: SliceRequest, topology: Topology,
              path_table: PathTable) -> SolveOutcome:
        if self.allocator == "fcfsfa":
            return fcfsfa_allocate(request, topology, path_table, self.weights)
        # model construction is part of the exact solver's computation time,
        # exactly as building the integer program would be
        t0 = time.perf_counter()
        inst = build_instance(request, topology, path_table, self.weights)
        outcome = solve(inst, backend=self.backend)
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        placement = outcome.placement
        if placement is not None:
            placement = dataclasses.replace(placement,
                                            solver_time_ms=elapsed_ms)
        return SolveOutcome(placement=placement,
                            binding_constraint=outcome.binding_constraint,
                            solver_time_ms=elapsed_ms)

    def handle(self, msg: AgentMessage) -> AgentMessage:
        if msg.kind != "SLICE_REQUEST":
            raise AgentError(f"o-agent cannot handle {msg.kind}")
        if self._state_provider is None:
            raise AgentError("o-agent has no network state bound")
        topology, path_table = self._state_provider()
        request = SliceRequest.from_dict(msg.payload)
        outcome = self.solve(request, topology, path_table)
        payload = {
            "request_id": request.id,
            "feasible": outcome.feasible,
            "solver_time_ms": outcome.solver_time_ms,
        }
        if outcome.feasible:
            payload["placement"] = outcome.placement.to_dict()
        else:
            payload["binding_constraint"] = outcome.binding_constraint
        return AgentMessage("SOLVE_RESULT", msg.correlation_id, payload)


@dataclass
class Container:
    name: str
    address: str
    cpu_ghz: float
    ram_gb: float
    hdd_gb: float
    bandwidth_mbps: float
    app: Optional[str]


class HAgent:
    """Hypervisor agent: starts and stops containers on one host.

    ``fault_hook`` lets tests inject deployment failures; it receives the
    PLACE payload and returns an error string to fail with, or None.
    """

    def __init__(self, hypervisor_name: str,
                 fault_hook: Optional[Callable[[dict], Optional[str]]] = None):
        self.name = hypervisor_name
        self.fault_hook = fault_hook
        self.containers: dict[str, Container] = {}
        self._lock = threading.Lock()

    def h_agent_handle(self, msg: AgentMessage) -> AgentMessage:
        if msg.kind == "PLACE":
            return self._place(msg)
        if msg.kind == "DEALLOCATE":
            return self._deallocate(msg)
        if msg.kind == "STATS":
            return self._stats(msg)
        raise AgentError(f"h-agent cannot handle {msg.kind}")

    handle = h_agent_handle

    def _place(self, msg: AgentMessage) -> AgentMessage:
        payload = msg.payload

        def fail(error: str) -> AgentMessage:
            return AgentMessage("PLACE_FAIL", msg.correlation_id,
                                {"slice": payload.get("slice", "?"),
                                 "error": error})

        missing = [k for k in PLACE_FIELDS if k not in payload]
        extra = [k for k in payload if k not in PLACE_FIELDS]
        if missing or extra:
            return fail(f"bad PLACE payload (missing={missing}, extra={extra})")
        if self.fault_hook is not None:
            error = self.fault_hook(payload)
            if error is not None:
                return fail(error)
        container = Container(
            name=payload["slice"], address=payload["address"],
            cpu_ghz=payload["cpu_ghz"], ram_gb=payload["ram_gb"],
            hdd_gb=payload["hdd_gb"], bandwidth_mbps=payload["bandwidth_mbps"],
            app=payload["app"])
        with self._lock:
            if container.name in self.containers:
                return fail(f"duplicate container name {container.name!r}")
            self.containers[container.name] = container
        return AgentMessage("PLACE_OK", msg.correlation_id,
                            {"slice": container.name})

    def _deallocate(self, msg: AgentMessage) -> AgentMessage:
        names = msg.payload["containers"]
        with self._lock:
            removed = [n for n in names
                       if self.containers.pop(n, None) is not None]
        return AgentMessage("DEALLOC_OK", msg.correlation_id,
                            {"containers": removed})

    def _stats(self, msg: AgentMessage) -> AgentMessage:
        with self._lock:
            rows = [vars(c).copy() for c in self.containers.values()]
        return AgentMessage("STATS", msg.correlation_id, {"containers": rows})


class InProcessTransport:
    """Default transport: direct method calls on registered agents."""

    def __init__(self):
        self._agents: dict[str, HAgent] = {}

    def register(self, agent: HAgent) -> None:
        self._agents[agent.name] = agent

    def agent(self, name: str) -> HAgent:
        return self._agents[name]

    def send(self, target: str, msg: AgentMessage,
             timeout_s: float = 5.0) -> AgentMessage:
        if target not in self._agents:
            raise AgentError(f"no agent registered under {target!r}")
        return self._agents[target].handle(msg)


class TcpTransport:
    """Talks newline-delimited JSON to agents served by serve_agent()."""

    def __init__(self, endpoints: dict[str, tuple[str, int]]):
        self.endpoints = dict(endpoints)

    def send(self, target: str, msg: AgentMessage,
             timeout_s: float = 5.0) -> AgentMessage:
        if target not in self.endpoints:
            raise AgentError(f"no endpoint configured for {target!r}")
        host, port = self.endpoints[target]
        with socket.create_connection((host, port), timeout=timeout_s) as conn:
            conn.sendall((msg.to_json() + "\n").encode())
            with conn.makefile("r", encoding="utf-8") as fh:
                line = fh.readline()
        if not line:
            raise AgentError(f"agent {target!r} closed the connection")
        reply = AgentMessage.from_json(line)
        if reply.correlation_id != msg.correlation_id:
            raise AgentError(
                f"correlation mismatch from {target!r}: sent "
                f"{msg.correlation_id}, got {reply.correlation_id}")
        return reply


class _AgentHandler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            msg = AgentMessage.from_json(line)
            reply = self.server.agent.handle(msg)  # type: ignore[attr-defined]
            self.wfile.write((reply.to_json() + "\n").encode())


class AgentServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, agent: HAgent, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _AgentHandler)
        self.agent = agent


def serve_agent(agent: HAgent, host: str = "127.0.0.1",
                port: int = 0) -> AgentServer:
    """Start serving one agent over TCP in a daemon thread."""
    server = AgentServer(agent, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
