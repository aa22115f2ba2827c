"""Shared fixtures and random-case generation for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from dsaf.optimizer import Weights
from dsaf.slices import SliceRequest, VnfSpec
from dsaf.topology import (Topology, compute_path_table, load_topology,
                           reference_testbed)


@pytest.fixture
def reference_topology() -> Topology:
    return load_topology(reference_testbed())


@pytest.fixture
def reference_path_table(reference_topology):
    return compute_path_table(reference_topology)


def make_request(request_id=0, name=None, cpu=(1.0, 1.0, 1.0), bw=50.0,
                 isolation=3, max_delay=5.0, ram=0.1, hdd=1.0, proc=0.1):
    vnfs = tuple(
        VnfSpec(index=i, cpu_ghz=c, ram_gb=ram, hdd_gb=hdd,
                processing_delay_ms=proc, app_command=None)
        for i, c in enumerate(cpu))
    return SliceRequest(
        id=request_id, name=name or f"slice-{request_id:03d}", vnfs=vnfs,
        bandwidth_mbps=bw, isolation_limit=isolation, max_delay_ms=max_delay,
        arrival_time=0.0)


def random_case(rng: np.random.Generator, max_hyp=5, n_vnf=3):
    """One random solver case: (request, topology, path_table, weights).

    Mixes loose and tight draws so a healthy share of cases is infeasible
    for each constraint class.
    """
    n_hyp = int(rng.integers(2, max_hyp + 1))
    doc = {
        "hypervisors": [
            {"name": f"P{i + 1}",
             "cores": int(rng.integers(1, 9)),
             "ghz_per_core": float(rng.uniform(1.0, 3.0)),
             "ram_gb": float(rng.uniform(0.5, 8.0)),
             "hdd_gb": float(rng.uniform(5.0, 200.0))}
            for i in range(n_hyp)
        ],
        "switches": ["S1"],
        "links": [
            {"a": f"P{i + 1}", "b": "S1",
             "bandwidth_mbps": float(rng.uniform(60.0, 1000.0)),
             "delay_ms": float(rng.uniform(0.05, 0.4))}
            for i in range(n_hyp)
        ],
    }
    topology = load_topology(doc)
    # random residual load so alloc counters are exercised
    for h in topology.hypervisors:
        h.cpu_allocated_u = int(rng.integers(0, h.cpu_capacity_u // 2 + 1))
        h.ram_allocated_u = int(rng.integers(0, h.ram_capacity_u // 2 + 1))
        h.hdd_allocated_u = int(rng.integers(0, h.hdd_capacity_u // 2 + 1))
    for link in topology.links:
        link.bandwidth_allocated_u = int(
            rng.integers(0, link.bandwidth_capacity_u // 2 + 1))

    isolation = int(rng.integers(1, n_vnf + 1))
    tight_delay = rng.random() < 0.3
    max_delay = float(rng.uniform(0.2, 0.6)) if tight_delay \
        else float(rng.uniform(1.0, 5.0))
    request = make_request(
        request_id=int(rng.integers(0, 10_000)),
        cpu=tuple(float(rng.uniform(0.1, 3.0)) for _ in range(n_vnf)),
        bw=float(rng.uniform(20.0, 400.0)),
        isolation=isolation,
        max_delay=max_delay,
        ram=float(rng.uniform(0.01, 2.0)),
        hdd=float(rng.uniform(0.1, 30.0)),
        proc=float(rng.uniform(0.01, 0.2)),
    )
    weights = Weights(alpha=float(rng.uniform(0.1, 2.0)),
                      beta=float(rng.uniform(0.0, 3.0)))
    return request, topology, compute_path_table(topology), weights
