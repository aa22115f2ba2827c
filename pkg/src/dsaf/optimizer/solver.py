"""Exact per-request placement solver.

Two interchangeable kernels sit behind ``solve``: a numba branch-and-bound
(default when numba imports) and a pure-numpy exhaustive enumeration.  The
``DSAF_KERNEL`` environment variable pins one explicitly::

    DSAF_KERNEL=numpy   force the vectorized enumeration kernel
    DSAF_KERNEL=numba   force the JIT kernel (error if numba is missing)

Both return the same assignment, objective, and infeasibility class for the
same instance; the enumeration kernel refuses search spaces beyond
ENUMERATION_LIMIT assignments.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np

from ..slices import Placement
from .instance import CONSTRAINT_CLASSES, ProblemInstance
from . import kernel_numpy

try:
    from . import kernel_numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    kernel_numba = None
    HAS_NUMBA = False

ENV_KERNEL = "DSAF_KERNEL"
ENUMERATION_LIMIT = 10 ** 6


def active_backend() -> str:
    """Which kernel ``solve`` will use: 'numba' or 'numpy'."""
    choice = os.environ.get(ENV_KERNEL, "").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("DSAF_KERNEL=numba but numba is not importable")
        return "numba"
    if choice and choice not in ("auto",):
        raise ValueError(f"unknown {ENV_KERNEL} value {choice!r}")
    return "numba" if HAS_NUMBA else "numpy"


@dataclass(frozen=True)
class SolveOutcome:
    """Either a placement or the constraint class that blocked one."""

    placement: Placement | None
    binding_constraint: str | None
    solver_time_ms: float

    @property
    def feasible(self) -> bool:
        return self.placement is not None


def _run_kernel(inst: ProblemInstance, backend: str):
    mod = kernel_numba if backend == "numba" else kernel_numpy
    if backend == "numpy" and inst.search_space > ENUMERATION_LIMIT:
        raise ValueError(
            f"search space {inst.search_space} exceeds the enumeration "
            f"kernel limit ({ENUMERATION_LIMIT}); use the numba kernel")
    return mod.solve_kernel(
        inst.free_cpu_u, inst.free_ram_u, inst.free_hdd_u,
        inst.alloc_cpu_u, inst.cap_cpu_u,
        inst.dem_cpu_u, inst.dem_ram_u, inst.dem_hdd_u,
        np.int64(inst.bw_u), inst.free_bw_u,
        inst.pair_delay, inst.pair_links,
        inst.isolation_limit, inst.max_delay_ms, inst.proc_total_ms,
        inst.alpha, inst.beta, inst.delay_norm,
    )


def placement_for_assignment(inst: ProblemInstance, assignment, objective: float,
                             solver_time_ms: float = 0.0) -> Placement:
    """Build the Placement record (paths, canonical delay) for an assignment."""
    assignment = tuple(int(a) for a in assignment)
    paths = []
    delay = inst.proc_total_ms
    for e in range(len(assignment) - 1):
        a, b = assignment[e], assignment[e + 1]
        paths.append(inst.path_table.path(a, b).links)
        delay += inst.pair_delay[a, b]
    return Placement(
        request_id=inst.request.id,
        assignment=assignment,
        paths=tuple(paths),
        objective_value=float(objective),
        total_delay_ms=float(delay),
        solver_time_ms=solver_time_ms,
    )


def solve(inst: ProblemInstance, backend: str | None = None) -> SolveOutcome:
    """Exactly minimize alpha*U_max + beta*(delay/delay_norm) for one request."""
    backend = backend or active_backend()
    t0 = time.perf_counter()
    status, assign, obj, max_stage = _run_kernel(inst, backend)
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    if status == kernel_numpy.FEASIBLE:
        placement = placement_for_assignment(inst, assign, obj, elapsed_ms)
        return SolveOutcome(placement=placement, binding_constraint=None,
                            solver_time_ms=elapsed_ms)
    binding = CONSTRAINT_CLASSES[int(max_stage) % 4] if max_stage >= 0 else "isolation"
    return SolveOutcome(placement=None, binding_constraint=binding,
                        solver_time_ms=elapsed_ms)


def check_feasible(p: Placement, inst: ProblemInstance) -> list[str]:
    """Evaluate every constraint independently of the solver; empty = ok."""
    violations: list[str] = []
    n_vnf = inst.n_vnfs
    n_hyp = inst.n_hypervisors
    if len(p.assignment) != n_vnf:
        violations.append("assignment does not cover every VNF exactly once")
        return violations
    if any(not 0 <= a < n_hyp for a in p.assignment):
        violations.append("assignment references an unknown hypervisor")
        return violations

    counts = [0] * n_hyp
    added_cpu = [0] * n_hyp
    added_ram = [0] * n_hyp
    added_hdd = [0] * n_hyp
    for v, h in enumerate(p.assignment):
        counts[h] += 1
        added_cpu[h] += int(inst.dem_cpu_u[v])
        added_ram[h] += int(inst.dem_ram_u[v])
        added_hdd[h] += int(inst.dem_hdd_u[v])
    for h in range(n_hyp):
        if counts[h] > inst.isolation_limit:
            violations.append(
                f"isolation: {counts[h]} VNFs on hypervisor {h} exceeds "
                f"limit {inst.isolation_limit}")
        if added_cpu[h] > inst.free_cpu_u[h]:
            violations.append(f"cpu: demand on hypervisor {h} exceeds residual")
        if added_ram[h] > inst.free_ram_u[h]:
            violations.append(f"ram: demand on hypervisor {h} exceeds residual")
        if added_hdd[h] > inst.free_hdd_u[h]:
            violations.append(f"hdd: demand on hypervisor {h} exceeds residual")

    link_use: dict[int, int] = {}
    for e in range(n_vnf - 1):
        a, b = p.assignment[e], p.assignment[e + 1]
        for lid in inst.path_table.path(a, b).links:
            link_use[lid] = link_use.get(lid, 0) + inst.bw_u
    for lid, use in sorted(link_use.items()):
        if use > inst.free_bw_u[lid]:
            violations.append(f"bandwidth: link {lid} over residual capacity")

    delay = inst.proc_total_ms
    for e in range(n_vnf - 1):
        delay += inst.pair_delay[p.assignment[e], p.assignment[e + 1]]
    if delay > inst.max_delay_ms:
        violations.append(
            f"delay: {delay:.6f} ms exceeds bound {inst.max_delay_ms:.6f} ms")
    return violations


def evaluate_objective(p: Placement, inst: ProblemInstance) -> float:
    """The exact objective the solver minimized, for a feasible placement."""
    violations = check_feasible(p, inst)
    if violations:
        raise ValueError("placement is infeasible: " + "; ".join(violations))
    added = [0] * inst.n_hypervisors
    for v, h in enumerate(p.assignment):
        added[h] += int(inst.dem_cpu_u[v])
    u_max = 0.0
    for h in range(inst.n_hypervisors):
        u = (int(inst.alloc_cpu_u[h]) + added[h]) / int(inst.cap_cpu_u[h])
        if u > u_max:
            u_max = u
    delay = inst.proc_total_ms
    for e in range(inst.n_vnfs - 1):
        delay += inst.pair_delay[p.assignment[e], p.assignment[e + 1]]
    return inst.alpha * u_max + inst.beta * (delay / inst.delay_norm)
