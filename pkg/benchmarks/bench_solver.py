"""Benchmark the two solver kernels on growing instance sizes.

Usage: python3 benchmarks/bench_solver.py [--repeats N]

Solves the same seeded instances with the compiled branch-and-bound kernel
and the vectorized enumeration kernel, checks they agree, and prints the
per-instance timings side by side.  The first numba call includes JIT
compilation; it is warmed up outside the timed region.
"""

from __future__ import annotations

import argparse
import statistics
import time

from dsaf.optimizer import HAS_NUMBA, Weights, build_instance, solve
from dsaf.slices import GeneratorParams, generate_requests
from dsaf.topology import compute_path_table, load_topology


def make_topology(n_hypervisors: int) -> dict:
    return {
        "hypervisors": [
            {"name": f"P{i + 1}", "cores": 4 + 4 * (i % 2), "ram_gb": 8,
             "hdd_gb": 200}
            for i in range(n_hypervisors)
        ],
        "switches": ["S1"],
        "links": [
            {"a": f"P{i + 1}", "b": "S1", "bandwidth_mbps": 1000.0,
             "delay_ms": 0.1}
            for i in range(n_hypervisors)
        ],
    }


def bench(n_hyp: int, n_vnf: int, repeats: int) -> dict:
    topology = load_topology(make_topology(n_hyp))
    pt = compute_path_table(topology)
    params = GeneratorParams(vnfs_per_slice=n_vnf,
                             isolation_limit=min(3, n_vnf))
    requests = generate_requests(seed=42, n=repeats, params=params)
    instances = [build_instance(r, topology, pt, Weights()) for r in requests]

    times: dict[str, list[float]] = {"numpy": [], "numba": []}
    results: dict[str, list] = {"numpy": [], "numba": []}
    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    for backend in backends:
        solve(instances[0], backend=backend)  # warm-up (JIT, allocator)
        for inst in instances:
            t0 = time.perf_counter()
            outcome = solve(inst, backend=backend)
            times[backend].append((time.perf_counter() - t0) * 1000.0)
            results[backend].append(
                None if outcome.placement is None
                else (outcome.placement.assignment,
                      outcome.placement.objective_value))

    if HAS_NUMBA and results["numpy"] != results["numba"]:
        raise SystemExit(f"kernel disagreement at {n_hyp}x{n_vnf}")

    row = {"hypervisors": n_hyp, "vnfs": n_vnf,
           "space": n_hyp ** n_vnf,
           "numpy_ms": statistics.median(times["numpy"])}
    if HAS_NUMBA:
        row["numba_ms"] = statistics.median(times["numba"])
        row["speedup"] = row["numpy_ms"] / row["numba_ms"] \
            if row["numba_ms"] > 0 else float("inf")
    return row


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=20,
                        help="instances per size (median reported)")
    args = parser.parse_args()

    sizes = [(5, 3), (5, 5), (8, 5), (8, 6), (10, 6)]
    print(f"numba available: {HAS_NUMBA}")
    header = None
    for n_hyp, n_vnf in sizes:
        row = bench(n_hyp, n_vnf, args.repeats)
        if header is None:
            header = list(row)
            print("  ".join(f"{h:>12}" for h in header))
        print("  ".join(
            f"{row[h]:>12.4f}" if isinstance(row[h], float) else f"{row[h]:>12}"
            for h in header))


if __name__ == "__main__":
    main()
