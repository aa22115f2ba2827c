"""Physical substrate: hypervisors, switches, links, and residual bookkeeping.

The topology document is JSON:

    {
      "hypervisors": [{"name": "P1", "cores": 4, "ghz_per_core": 2.67,
                       "ram_gb": 8, "hdd_gb": 200}, ...],
      "switches": ["S1", ...],
      "links": [{"a": "P1", "b": "S1", "bandwidth_mbps": 1000,
                 "delay_ms": 0.1}, ...]
    }

Residual state is single-writer: all mutations go through apply_placement /
revert_placement on the admission thread.  Counters are integer micro-units
(see dsaf.units) so apply followed by revert restores state exactly.
"""

from __future__ import annotations

import copy
import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .units import from_units, to_units

if TYPE_CHECKING:
    from .slices import Placement, SliceRequest

# Whole-testbed CPU (74.8 GHz) spread over its 28 cores.
DEFAULT_GHZ_PER_CORE = 74.8 / 28
DEFAULT_LINK_DELAY_MS = 0.1


class TopologyError(ValueError):
    """Raised for malformed documents or illegal residual mutations."""


@dataclass
class Hypervisor:
    id: int
    name: str
    cpu_capacity_u: int
    ram_capacity_u: int
    hdd_capacity_u: int
    cpu_allocated_u: int = 0
    ram_allocated_u: int = 0
    hdd_allocated_u: int = 0

    @property
    def cpu_capacity_ghz(self) -> float:
        return from_units(self.cpu_capacity_u)

    @property
    def ram_capacity_gb(self) -> float:
        return from_units(self.ram_capacity_u)

    @property
    def hdd_capacity_gb(self) -> float:
        return from_units(self.hdd_capacity_u)

    @property
    def cpu_allocated_ghz(self) -> float:
        return from_units(self.cpu_allocated_u)

    @property
    def ram_allocated_gb(self) -> float:
        return from_units(self.ram_allocated_u)

    @property
    def hdd_allocated_gb(self) -> float:
        return from_units(self.hdd_allocated_u)

    @property
    def cpu_free_u(self) -> int:
        return self.cpu_capacity_u - self.cpu_allocated_u

    @property
    def ram_free_u(self) -> int:
        return self.ram_capacity_u - self.ram_allocated_u

    @property
    def hdd_free_u(self) -> int:
        return self.hdd_capacity_u - self.hdd_allocated_u


@dataclass
class NetLink:
    id: int
    a: str
    b: str
    bandwidth_capacity_u: int
    delay_ms: float
    bandwidth_allocated_u: int = 0

    @property
    def bandwidth_capacity_mbps(self) -> float:
        return from_units(self.bandwidth_capacity_u)

    @property
    def bandwidth_allocated_mbps(self) -> float:
        return from_units(self.bandwidth_allocated_u)

    @property
    def bandwidth_free_u(self) -> int:
        return self.bandwidth_capacity_u - self.bandwidth_allocated_u

    def other_end(self, node: str) -> str:
        return self.b if node == self.a else self.a


@dataclass
class Topology:
    hypervisors: list[Hypervisor]
    switches: list[str]
    links: list[NetLink]
    adjacency: dict[str, list[int]] = field(default_factory=dict)
    _applied: set[int] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not self.adjacency:
            self.adjacency = {h.name: [] for h in self.hypervisors}
            self.adjacency.update({s: [] for s in self.switches})
            for link in self.links:
                self.adjacency[link.a].append(link.id)
                self.adjacency[link.b].append(link.id)

    def hypervisor_by_name(self, name: str) -> Hypervisor:
        for h in self.hypervisors:
            if h.name == name:
                return h
        raise TopologyError(f"unknown hypervisor {name!r}")

    @property
    def node_names(self) -> list[str]:
        return [h.name for h in self.hypervisors] + list(self.switches)

    @property
    def total_cpu_capacity_ghz(self) -> float:
        return from_units(sum(h.cpu_capacity_u for h in self.hypervisors))

    @property
    def total_ram_capacity_gb(self) -> float:
        return from_units(sum(h.ram_capacity_u for h in self.hypervisors))

    def residual_snapshot(self) -> dict:
        """Canonical, JSON-stable view of all allocation counters."""
        return {
            "hypervisors": [
                {
                    "name": h.name,
                    "cpu_allocated_u": h.cpu_allocated_u,
                    "ram_allocated_u": h.ram_allocated_u,
                    "hdd_allocated_u": h.hdd_allocated_u,
                }
                for h in self.hypervisors
            ],
            "links": [
                {"id": l.id, "bandwidth_allocated_u": l.bandwidth_allocated_u}
                for l in self.links
            ],
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.residual_snapshot(), sort_keys=True)

    def copy(self) -> "Topology":
        return copy.deepcopy(self)


def reference_testbed() -> dict:
    """Default five-server testbed document (single-switch star, 1 Gbps)."""
    return {
        "hypervisors": [
            {"name": "P1", "cores": 4, "ram_gb": 8, "hdd_gb": 200},
            {"name": "P2", "cores": 4, "ram_gb": 8, "hdd_gb": 200},
            {"name": "P3", "cores": 4, "ram_gb": 8, "hdd_gb": 200},
            {"name": "P4", "cores": 8, "ram_gb": 8, "hdd_gb": 200},
            {"name": "P5", "cores": 8, "ram_gb": 8, "hdd_gb": 200},
        ],
        "switches": ["S1"],
        "links": [
            {"a": name, "b": "S1", "bandwidth_mbps": 1000.0,
             "delay_ms": DEFAULT_LINK_DELAY_MS}
            for name in ("P1", "P2", "P3", "P4", "P5")
        ],
    }


def load_topology(source: dict | str | Path) -> Topology:
    """Parse and validate a topology document (dict, JSON string, or path)."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            is_file = path.exists()
        except OSError:  # e.g. a JSON string longer than a path can be
            is_file = False
        if is_file:
            doc = json.loads(path.read_text())
        else:
            try:
                doc = json.loads(str(source))
            except json.JSONDecodeError as exc:
                raise TopologyError(f"cannot read topology {source!r}: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise TopologyError("topology document must be a JSON object")

    hypervisors: list[Hypervisor] = []
    names: set[str] = set()
    for i, spec in enumerate(doc.get("hypervisors", [])):
        try:
            name = spec["name"]
            cores = spec["cores"]
            ram_gb = spec["ram_gb"]
            hdd_gb = spec["hdd_gb"]
        except (KeyError, TypeError) as exc:
            raise TopologyError(f"hypervisor #{i} is missing field {exc}") from exc
        ghz_per_core = spec.get("ghz_per_core", DEFAULT_GHZ_PER_CORE)
        if cores < 0 or ram_gb < 0 or hdd_gb < 0 or ghz_per_core < 0:
            raise TopologyError(f"hypervisor {name!r} has a negative capacity")
        if name in names:
            raise TopologyError(f"duplicate node name {name!r}")
        names.add(name)
        hypervisors.append(Hypervisor(
            id=i,
            name=name,
            cpu_capacity_u=to_units(cores * ghz_per_core),
            ram_capacity_u=to_units(ram_gb),
            hdd_capacity_u=to_units(hdd_gb),
        ))
    if not hypervisors:
        raise TopologyError("topology has no hypervisors")

    switches: list[str] = []
    for s in doc.get("switches", []):
        if s in names:
            raise TopologyError(f"duplicate node name {s!r}")
        names.add(s)
        switches.append(s)

    links: list[NetLink] = []
    for i, spec in enumerate(doc.get("links", [])):
        try:
            a, b = spec["a"], spec["b"]
            bw = spec["bandwidth_mbps"]
        except (KeyError, TypeError) as exc:
            raise TopologyError(f"link #{i} is missing field {exc}") from exc
        delay = spec.get("delay_ms", DEFAULT_LINK_DELAY_MS)
        for end in (a, b):
            if end not in names:
                raise TopologyError(f"link #{i} references unknown node {end!r}")
        if bw < 0:
            raise TopologyError(f"link #{i} ({a}-{b}) has negative bandwidth")
        if delay < 0:
            raise TopologyError(f"link #{i} ({a}-{b}) has negative delay")
        links.append(NetLink(
            id=i, a=a, b=b,
            bandwidth_capacity_u=to_units(bw),
            delay_ms=float(delay),
        ))

    topo = Topology(hypervisors=hypervisors, switches=switches, links=links)
    _check_connected(topo)
    return topo


def _check_connected(t: Topology) -> None:
    """Every hypervisor must be reachable from the first one."""
    if len(t.hypervisors) <= 1:
        return
    start = t.hypervisors[0].name
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for lid in t.adjacency[node]:
            nxt = t.links[lid].other_end(node)
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    for h in t.hypervisors:
        if h.name not in seen:
            raise TopologyError(f"hypervisor {h.name!r} is disconnected")


# ---------------------------------------------------------------------------
# Minimum-delay path table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathEntry:
    links: tuple[int, ...]
    delay_ms: float


class PathTable:
    """All-pairs minimum-delay paths between hypervisors.

    Ties between equal-delay paths go to the lexicographically smallest
    link-id sequence.  Dense delay/incidence arrays are cached for the
    solver kernels.
    """

    def __init__(self, topology: Topology):
        self._n = len(topology.hypervisors)
        self._n_links = len(topology.links)
        self.hypervisor_names = tuple(h.name for h in topology.hypervisors)
        self._entries: dict[tuple[int, int], PathEntry] = {}
        self._pair_delay: np.ndarray | None = None
        self._pair_links: np.ndarray | None = None
        self._build(topology)

    def path(self, a: int, b: int) -> PathEntry:
        return self._entries[(a, b)]

    def items(self) -> Iterable[tuple[tuple[int, int], PathEntry]]:
        return self._entries.items()

    def _build(self, t: Topology) -> None:
        targets = {h.name: h.id for h in t.hypervisors}
        for src in t.hypervisors:
            labels = _dijkstra_lex(t, src.name)
            for name, hid in targets.items():
                if name not in labels:
                    raise TopologyError(
                        f"no path from {src.name!r} to {name!r}")
                delay, link_seq = labels[name]
                self._entries[(src.id, hid)] = PathEntry(link_seq, delay)

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """(pair_delay[H,H] float64, pair_links[H,H,L] uint8) for kernels."""
        if self._pair_delay is None:
            n, m = self._n, self._n_links
            delay = np.zeros((n, n), dtype=np.float64)
            inc = np.zeros((n, n, max(m, 1)), dtype=np.uint8)
            for (a, b), entry in self._entries.items():
                delay[a, b] = entry.delay_ms
                for lid in entry.links:
                    inc[a, b, lid] = 1
            self._pair_delay = delay
            self._pair_links = inc
        return self._pair_delay, self._pair_links


def _dijkstra_lex(t: Topology, source: str) -> dict[str, tuple[float, tuple[int, ...]]]:
    """Single-source minimum-delay labels with lexicographic link-id tie-break."""
    settled: dict[str, tuple[float, tuple[int, ...]]] = {}
    heap: list[tuple[float, tuple[int, ...], str]] = [(0.0, (), source)]
    while heap:
        delay, seq, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled[node] = (delay, seq)
        for lid in t.adjacency[node]:
            link = t.links[lid]
            nxt = link.other_end(node)
            if nxt not in settled:
                heapq.heappush(heap, (delay + link.delay_ms, seq + (lid,), nxt))
    return settled


def compute_path_table(t: Topology) -> PathTable:
    return PathTable(t)


# ---------------------------------------------------------------------------
# Residual mutation (single-writer)
# ---------------------------------------------------------------------------

def _placement_deltas(t: Topology, placement: "Placement",
                      request: "SliceRequest") -> tuple[dict[int, list[int]], dict[int, int]]:
    """Per-hypervisor [cpu,ram,hdd] and per-link bandwidth demand in units."""
    node_add: dict[int, list[int]] = {}
    for vnf in request.vnfs:
        hid = placement.assignment[vnf.index]
        acc = node_add.setdefault(hid, [0, 0, 0])
        acc[0] += to_units(vnf.cpu_ghz)
        acc[1] += to_units(vnf.ram_gb)
        acc[2] += to_units(vnf.hdd_gb)
    bw_u = to_units(request.bandwidth_mbps)
    link_add: dict[int, int] = {}
    for link_seq in placement.paths:
        for lid in link_seq:
            link_add[lid] = link_add.get(lid, 0) + bw_u
    return node_add, link_add


def apply_placement(t: Topology, placement: "Placement",
                    request: "SliceRequest") -> None:
    """Reserve a placement's resources, all-or-nothing.

    Raises TopologyError (listing every violated constraint) without
    mutating anything if the placement no longer fits.
    """
    if placement.request_id in t._applied:
        raise TopologyError(
            f"placement for request {placement.request_id} already applied")
    if len(placement.assignment) != len(request.vnfs):
        raise TopologyError("placement does not cover every VNF exactly once")
    for hid in placement.assignment:
        if not 0 <= hid < len(t.hypervisors):
            raise TopologyError(f"assignment names unknown hypervisor {hid}")

    node_add, link_add = _placement_deltas(t, placement, request)
    violations = []
    for hid, (cpu_u, ram_u, hdd_u) in node_add.items():
        h = t.hypervisors[hid]
        if cpu_u > h.cpu_free_u:
            violations.append(f"cpu on {h.name}: need {from_units(cpu_u)} GHz, "
                              f"free {from_units(h.cpu_free_u)}")
        if ram_u > h.ram_free_u:
            violations.append(f"ram on {h.name}: need {from_units(ram_u)} GB, "
                              f"free {from_units(h.ram_free_u)}")
        if hdd_u > h.hdd_free_u:
            violations.append(f"hdd on {h.name}: need {from_units(hdd_u)} GB, "
                              f"free {from_units(h.hdd_free_u)}")
    for lid, bw_u in link_add.items():
        link = t.links[lid]
        if bw_u > link.bandwidth_free_u:
            violations.append(
                f"bandwidth on link {lid} ({link.a}-{link.b}): need "
                f"{from_units(bw_u)} Mbps, free {from_units(link.bandwidth_free_u)}")
    if violations:
        raise TopologyError("; ".join(violations))

    for hid, (cpu_u, ram_u, hdd_u) in node_add.items():
        h = t.hypervisors[hid]
        h.cpu_allocated_u += cpu_u
        h.ram_allocated_u += ram_u
        h.hdd_allocated_u += hdd_u
    for lid, bw_u in link_add.items():
        t.links[lid].bandwidth_allocated_u += bw_u
    t._applied.add(placement.request_id)


def revert_placement(t: Topology, placement: "Placement",
                     request: "SliceRequest") -> None:
    """Exact inverse of apply_placement."""
    if placement.request_id not in t._applied:
        raise TopologyError(
            f"placement for request {placement.request_id} is not applied")
    node_add, link_add = _placement_deltas(t, placement, request)
    for hid, (cpu_u, ram_u, hdd_u) in node_add.items():
        h = t.hypervisors[hid]
        h.cpu_allocated_u -= cpu_u
        h.ram_allocated_u -= ram_u
        h.hdd_allocated_u -= hdd_u
    for lid, bw_u in link_add.items():
        t.links[lid].bandwidth_allocated_u -= bw_u
    t._applied.discard(placement.request_id)


def conservation_holds(t: Topology, active: Iterable[tuple["Placement", "SliceRequest"]]) -> bool:
    """Sum of residuals plus active demand must equal capacity, exactly."""
    cpu = {h.id: 0 for h in t.hypervisors}
    ram = {h.id: 0 for h in t.hypervisors}
    hdd = {h.id: 0 for h in t.hypervisors}
    bw = {l.id: 0 for l in t.links}
    for placement, request in active:
        node_add, link_add = _placement_deltas(t, placement, request)
        for hid, (c, r, d) in node_add.items():
            cpu[hid] += c
            ram[hid] += r
            hdd[hid] += d
        for lid, b in link_add.items():
            bw[lid] += b
    for h in t.hypervisors:
        if (h.cpu_allocated_u != cpu[h.id] or h.ram_allocated_u != ram[h.id]
                or h.hdd_allocated_u != hdd[h.id]):
            return False
    return all(t.links[lid].bandwidth_allocated_u == b for lid, b in bw.items())
