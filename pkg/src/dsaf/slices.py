"""Slice requests, VNF specs, placements, and the seeded request generator.

All types are immutable value objects; the generator is deterministic for a
given seed.  Requests serialize to JSON lines so experiment streams can be
replayed byte-for-byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .units import from_units, to_units

if TYPE_CHECKING:
    from .topology import Topology


@dataclass(frozen=True)
class VnfSpec:
    index: int
    cpu_ghz: float
    ram_gb: float = 0.0
    hdd_gb: float = 0.0
    processing_delay_ms: float = 0.1
    app_command: str | None = None

    def __post_init__(self) -> None:
        if self.cpu_ghz <= 0:
            raise ValueError(f"vnf {self.index}: cpu_ghz must be > 0")
        if self.processing_delay_ms < 0:
            raise ValueError(f"vnf {self.index}: negative processing delay")


@dataclass(frozen=True)
class SliceRequest:
    id: int
    name: str
    vnfs: tuple[VnfSpec, ...]
    bandwidth_mbps: float
    isolation_limit: int
    max_delay_ms: float | None = 5.0
    arrival_time: float = 0.0

    def __post_init__(self) -> None:
        if not self.vnfs:
            raise ValueError(f"request {self.id}: empty VNF chain")
        if not 1 <= self.isolation_limit <= len(self.vnfs):
            raise ValueError(
                f"request {self.id}: isolation_limit {self.isolation_limit} "
                f"outside [1, {len(self.vnfs)}]")
        if self.bandwidth_mbps <= 0:
            raise ValueError(f"request {self.id}: bandwidth must be > 0")
        if self.max_delay_ms is not None and self.max_delay_ms <= 0:
            raise ValueError(f"request {self.id}: max_delay_ms must be > 0")

    @property
    def total_cpu_ghz(self) -> float:
        return from_units(sum(to_units(v.cpu_ghz) for v in self.vnfs))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["vnfs"] = [asdict(v) for v in self.vnfs]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SliceRequest":
        vnfs = tuple(VnfSpec(**v) for v in d["vnfs"])
        return cls(
            id=d["id"], name=d["name"], vnfs=vnfs,
            bandwidth_mbps=d["bandwidth_mbps"],
            isolation_limit=d["isolation_limit"],
            max_delay_ms=d.get("max_delay_ms"),
            arrival_time=d.get("arrival_time", 0.0),
        )


@dataclass(frozen=True)
class Placement:
    """A solved allocation: VNF -> hypervisor plus the routed chain paths."""

    request_id: int
    assignment: tuple[int, ...]
    paths: tuple[tuple[int, ...], ...]
    objective_value: float
    total_delay_ms: float
    solver_time_ms: float = 0.0

    def hypervisors_used(self) -> list[int]:
        return sorted(set(self.assignment))

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "assignment": list(self.assignment),
            "paths": [list(p) for p in self.paths],
            "objective_value": self.objective_value,
            "total_delay_ms": self.total_delay_ms,
            "solver_time_ms": self.solver_time_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Placement":
        return cls(
            request_id=d["request_id"],
            assignment=tuple(d["assignment"]),
            paths=tuple(tuple(p) for p in d["paths"]),
            objective_value=d["objective_value"],
            total_delay_ms=d["total_delay_ms"],
            solver_time_ms=d.get("solver_time_ms", 0.0),
        )


@dataclass(frozen=True)
class GeneratorParams:
    """Request distribution knobs; defaults reproduce the testbed workload."""

    vnfs_per_slice: int = 3
    cpu_range_ghz: tuple[float, float] = (0.75, 2.0)
    bandwidth_range_mbps: tuple[float, float] = (40.0, 60.0)
    isolation_limit: int = 3
    cpu_per_vnf: bool = False  # False: the CPU draw is per slice, split evenly
    ram_gb_per_vnf: float = 0.1
    hdd_gb_per_vnf: float = 1.0
    processing_delay_ms: float = 0.1
    max_delay_ms: float | None = 5.0
    arrival_spacing_s: float = 3.0
    app_command: str | None = None

    def validate(self) -> None:
        lo, hi = self.cpu_range_ghz
        if not (0 < lo <= hi):
            raise ValueError(f"bad cpu range {self.cpu_range_ghz}")
        blo, bhi = self.bandwidth_range_mbps
        if not (0 < blo <= bhi):
            raise ValueError(f"bad bandwidth range {self.bandwidth_range_mbps}")
        if self.vnfs_per_slice < 1:
            raise ValueError("vnfs_per_slice must be >= 1")
        if not 1 <= self.isolation_limit <= self.vnfs_per_slice:
            raise ValueError(
                f"isolation_limit {self.isolation_limit} outside "
                f"[1, {self.vnfs_per_slice}]")


def generate_requests(seed: int, n: int,
                      params: GeneratorParams | None = None) -> list[SliceRequest]:
    """Deterministic request stream: same (seed, n, params) => same list."""
    params = params or GeneratorParams()
    params.validate()
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    requests = []
    for i in range(n):
        cpu_draw = rng.uniform(*params.cpu_range_ghz)
        bw = from_units(to_units(rng.uniform(*params.bandwidth_range_mbps)))
        if params.cpu_per_vnf:
            draws = [cpu_draw] + [rng.uniform(*params.cpu_range_ghz)
                                  for _ in range(params.vnfs_per_slice - 1)]
            per_vnf_u = [to_units(c) for c in draws]
        else:
            per_vnf_u = [to_units(cpu_draw / params.vnfs_per_slice)
                         ] * params.vnfs_per_slice
        vnfs = tuple(
            VnfSpec(
                index=k,
                cpu_ghz=from_units(per_vnf_u[k]),
                ram_gb=params.ram_gb_per_vnf,
                hdd_gb=params.hdd_gb_per_vnf,
                processing_delay_ms=params.processing_delay_ms,
                app_command=params.app_command,
            )
            for k in range(params.vnfs_per_slice)
        )
        requests.append(SliceRequest(
            id=i,
            name=f"slice-{i:03d}",
            vnfs=vnfs,
            bandwidth_mbps=bw,
            isolation_limit=params.isolation_limit,
            max_delay_ms=params.max_delay_ms,
            arrival_time=i * params.arrival_spacing_s,
        ))
    return requests


def validate_request(r: SliceRequest, t: "Topology") -> str | None:
    """Structural screen before solving; returns a rejection reason or None."""
    n_vnfs = len(r.vnfs)
    if not 1 <= r.isolation_limit <= n_vnfs:
        return (f"isolation_limit {r.isolation_limit} outside [1, {n_vnfs}]")
    needed = math.ceil(n_vnfs / r.isolation_limit)
    if needed > len(t.hypervisors):
        return (f"needs {needed} distinct hypervisors, topology has "
                f"{len(t.hypervisors)}")
    max_cpu = max(h.cpu_capacity_u for h in t.hypervisors)
    max_ram = max(h.ram_capacity_u for h in t.hypervisors)
    max_hdd = max(h.hdd_capacity_u for h in t.hypervisors)
    for v in r.vnfs:
        if to_units(v.cpu_ghz) > max_cpu:
            return (f"vnf {v.index} cpu {v.cpu_ghz} GHz exceeds largest "
                    f"hypervisor capacity {from_units(max_cpu)} GHz")
        if to_units(v.ram_gb) > max_ram:
            return (f"vnf {v.index} ram {v.ram_gb} GB exceeds largest "
                    f"hypervisor capacity {from_units(max_ram)} GB")
        if to_units(v.hdd_gb) > max_hdd:
            return (f"vnf {v.index} hdd {v.hdd_gb} GB exceeds largest "
                    f"hypervisor capacity {from_units(max_hdd)} GB")
    return None


def emit_requests(requests: list[SliceRequest], path: str | Path) -> None:
    """Write a replayable JSON-lines request file."""
    with open(path, "w") as fh:
        for r in requests:
            fh.write(json.dumps(r.to_dict()) + "\n")


def load_requests(path: str | Path) -> list[SliceRequest]:
    requests = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                requests.append(SliceRequest.from_dict(json.loads(line)))
    return requests
