"""Immutable per-request problem snapshots handed to the solver kernels.

Everything a kernel needs is packed into dense numpy arrays: integer
micro-unit residuals, the chain's demands, and the precomputed pair
delay/link-incidence tables.  Once built, an instance is unaffected by
later topology mutation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..slices import SliceRequest
from ..topology import PathTable, Topology
from ..units import to_units

# Constraint classes in per-level evaluation order; an assignment's failure
# stage is level*4 + class index, and the reported binding class for an
# infeasible instance is the class of the furthest stage any assignment
# reached.
CONSTRAINT_CLASSES = ("isolation", "cpu", "bandwidth", "delay")


@dataclass(frozen=True)
class Weights:
    """Objective weights: alpha on max utilization, beta on normalized delay.

    The default beta makes one extra chain crossing (0.2 ms against a 5 ms
    bound, so 0.08 in the objective) outweigh the largest marginal U_max
    gain an extra split can buy on the default testbed (one VNF share on a
    4-core host, about 0.062).  Thinner spreading then only wins when it
    does not burn more link bandwidth, which keeps chains consolidated and
    access links unsaturated.
    """

    alpha: float = 1.0
    beta: float = 2.0

    def validate(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("weights must be >= 0")
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be > 0")


@dataclass(frozen=True)
class ProblemInstance:
    request: SliceRequest
    path_table: PathTable
    # residuals (micro-units)
    alloc_cpu_u: np.ndarray   # [H] int64, allocated CPU
    cap_cpu_u: np.ndarray     # [H] int64, CPU capacity
    free_cpu_u: np.ndarray    # [H] int64
    free_ram_u: np.ndarray    # [H] int64
    free_hdd_u: np.ndarray    # [H] int64
    free_bw_u: np.ndarray     # [L] int64
    # demands (micro-units)
    dem_cpu_u: np.ndarray     # [V] int64
    dem_ram_u: np.ndarray     # [V] int64
    dem_hdd_u: np.ndarray     # [V] int64
    bw_u: int
    # routing
    pair_delay: np.ndarray    # [H,H] float64 ms
    pair_links: np.ndarray    # [H,H,L] uint8 incidence
    # scalars
    isolation_limit: int
    max_delay_ms: float       # inf when the request carries no bound
    proc_total_ms: float
    alpha: float
    beta: float
    delay_norm: float

    @property
    def n_hypervisors(self) -> int:
        return int(self.cap_cpu_u.shape[0])

    @property
    def n_vnfs(self) -> int:
        return int(self.dem_cpu_u.shape[0])

    @property
    def search_space(self) -> int:
        return self.n_hypervisors ** self.n_vnfs


def build_instance(r: SliceRequest, t: Topology, pt: PathTable,
                   w: Weights | None = None) -> ProblemInstance:
    """Snapshot the residual state for one request."""
    w = w or Weights()
    w.validate()
    names = tuple(h.name for h in t.hypervisors)
    if pt.hypervisor_names != names:
        raise ValueError(
            f"path table was built for {pt.hypervisor_names}, topology has {names}")

    alloc = np.array([h.cpu_allocated_u for h in t.hypervisors], dtype=np.int64)
    cap = np.array([h.cpu_capacity_u for h in t.hypervisors], dtype=np.int64)
    free_ram = np.array([h.ram_free_u for h in t.hypervisors], dtype=np.int64)
    free_hdd = np.array([h.hdd_free_u for h in t.hypervisors], dtype=np.int64)
    free_bw = np.array([l.bandwidth_free_u for l in t.links], dtype=np.int64)
    if free_bw.size == 0:
        free_bw = np.zeros(1, dtype=np.int64)  # keep kernels shape-stable

    dem_cpu = np.array([to_units(v.cpu_ghz) for v in r.vnfs], dtype=np.int64)
    dem_ram = np.array([to_units(v.ram_gb) for v in r.vnfs], dtype=np.int64)
    dem_hdd = np.array([to_units(v.hdd_gb) for v in r.vnfs], dtype=np.int64)

    proc_total = 0.0
    for v in r.vnfs:
        proc_total += v.processing_delay_ms

    max_delay = math.inf if r.max_delay_ms is None else float(r.max_delay_ms)
    delay_norm = 1.0 if r.max_delay_ms is None else float(r.max_delay_ms)

    pair_delay, pair_links = pt.dense()
    return ProblemInstance(
        request=r,
        path_table=pt,
        alloc_cpu_u=alloc,
        cap_cpu_u=cap,
        free_cpu_u=cap - alloc,
        free_ram_u=free_ram,
        free_hdd_u=free_hdd,
        free_bw_u=free_bw,
        dem_cpu_u=dem_cpu,
        dem_ram_u=dem_ram,
        dem_hdd_u=dem_hdd,
        bw_u=to_units(r.bandwidth_mbps),
        pair_delay=pair_delay,
        pair_links=pair_links,
        isolation_limit=r.isolation_limit,
        max_delay_ms=max_delay,
        proc_total_ms=proc_total,
        alpha=w.alpha,
        beta=w.beta,
        delay_norm=delay_norm,
    )
