"""First Come First Serve, First Available: the greedy comparison allocator.

Each VNF lands on the lowest-id hypervisor with room (CPU/RAM/HDD, slice
isolation count, and path bandwidth).  No optimization, no end-to-end delay
check; capacity and isolation are still respected.  Deterministic for a
given state and request.

Unlike the exact solver, the scan works directly on the live topology
objects: it builds no mathematical model, so its computation time is just
the allocation scan plus the record update.
"""

from __future__ import annotations

import time
from typing import Optional

from .optimizer import SolveOutcome, Weights
from .slices import Placement, SliceRequest
from .topology import PathTable, Topology
from .units import to_units

# same ordering as the optimizer's infeasibility diagnosis
_STAGES = ("isolation", "cpu", "bandwidth")


def fcfsfa_allocate(r: SliceRequest, t: Topology, pt: PathTable,
                    weights: Optional[Weights] = None) -> SolveOutcome:
    """Greedy first-available scan in ascending hypervisor id order."""
    w = weights if weights is not None else Weights()
    w.validate()
    t0 = time.perf_counter()
    placement, binding = _scan(r, t, pt, w)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    if placement is not None:
        placement = Placement(
            request_id=placement.request_id, assignment=placement.assignment,
            paths=placement.paths, objective_value=placement.objective_value,
            total_delay_ms=placement.total_delay_ms,
            solver_time_ms=elapsed_ms)
        return SolveOutcome(placement=placement, binding_constraint=None,
                            solver_time_ms=elapsed_ms)
    return SolveOutcome(placement=None, binding_constraint=binding,
                        solver_time_ms=elapsed_ms)


def _scan(r: SliceRequest, t: Topology, pt: PathTable, w: Weights):
    hyps = t.hypervisors
    n_hyp = len(hyps)
    bw_u = to_units(r.bandwidth_mbps)
    counts = [0] * n_hyp
    added_cpu = [0] * n_hyp
    added_ram = [0] * n_hyp
    added_hdd = [0] * n_hyp
    link_use: dict[int, int] = {}
    assignment: list[int] = []
    paths: list[tuple[int, ...]] = []
    proc_total = 0.0
    for vnf in r.vnfs:
        proc_total += vnf.processing_delay_ms
    delay = proc_total
    furthest = -1

    for v, vnf in enumerate(r.vnfs):
        dem_cpu = to_units(vnf.cpu_ghz)
        dem_ram = to_units(vnf.ram_gb)
        dem_hdd = to_units(vnf.hdd_gb)
        placed = False
        for h, hyp in enumerate(hyps):
            if counts[h] + 1 > r.isolation_limit:
                furthest = max(furthest, 0)
                continue
            if (added_cpu[h] + dem_cpu > hyp.cpu_free_u
                    or added_ram[h] + dem_ram > hyp.ram_free_u
                    or added_hdd[h] + dem_hdd > hyp.hdd_free_u):
                furthest = max(furthest, 1)
                continue
            if v > 0:
                entry = pt.path(assignment[v - 1], h)
                if any(link_use.get(l, 0) + bw_u > t.links[l].bandwidth_free_u
                       for l in entry.links):
                    furthest = max(furthest, 2)
                    continue
                for l in entry.links:
                    link_use[l] = link_use.get(l, 0) + bw_u
                paths.append(entry.links)
                delay += entry.delay_ms
            counts[h] += 1
            added_cpu[h] += dem_cpu
            added_ram[h] += dem_ram
            added_hdd[h] += dem_hdd
            assignment.append(h)
            placed = True
            break
        if not placed:
            return None, _STAGES[max(furthest, 0)]

    u_max = 0.0
    for h, hyp in enumerate(hyps):
        u = (hyp.cpu_allocated_u + added_cpu[h]) / hyp.cpu_capacity_u
        if u > u_max:
            u_max = u
    norm = r.max_delay_ms if r.max_delay_ms is not None else 1.0
    # greedy placements may violate the delay bound by design, so the
    # objective is reported without a feasibility gate
    objective = w.alpha * u_max + w.beta * (delay / norm)
    return Placement(
        request_id=r.id,
        assignment=tuple(assignment),
        paths=tuple(paths),
        objective_value=objective,
        total_delay_ms=delay,
        solver_time_ms=0.0,
    ), None
