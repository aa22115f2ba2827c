"""Vectorized exhaustive-enumeration kernel (pure numpy).

Walks every one of the H^V assignment vectors in lexicographic order, in
chunks, evaluating constraints level by level exactly as the branch-and-
bound kernel does.  First index achieving the minimum objective wins, which
is the documented lexicographic tie-break.

Both kernels share the same canonical arithmetic (integer residual checks,
int/int division for utilization ratios, edge-by-edge delay accumulation)
so they return bit-identical objectives.
"""

from __future__ import annotations

import numpy as np

CHUNK = 1 << 14

# status codes shared by the kernels
FEASIBLE = 0
INFEASIBLE = 1


def _decode(indices: np.ndarray, n_hyp: int, n_vnf: int) -> np.ndarray:
    """Assignment rows for lexicographic indices (VNF 0 most significant)."""
    out = np.empty((indices.shape[0], n_vnf), dtype=np.int64)
    rem = indices.copy()
    for v in range(n_vnf - 1, -1, -1):
        out[:, v] = rem % n_hyp
        rem //= n_hyp
    return out


def solve_kernel(free_cpu, free_ram, free_hdd, alloc_cpu, cap_cpu,
                 dem_cpu, dem_ram, dem_hdd, bw, free_bw,
                 pair_delay, pair_links, iso_limit, max_delay, proc_total,
                 alpha, beta, delay_norm):
    """Returns (status, assignment[V], objective, max_stage)."""
    n_hyp = cap_cpu.shape[0]
    n_vnf = dem_cpu.shape[0]
    total = n_hyp ** n_vnf

    best_obj = np.inf
    best_assign = np.full(n_vnf, -1, dtype=np.int64)
    found = False
    max_stage = -1

    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        assign = _decode(idx, n_hyp, n_vnf)
        n = assign.shape[0]
        rows = np.arange(n)

        alive = np.ones(n, dtype=bool)
        stage = np.full(n, -1, dtype=np.int64)
        counts = np.zeros((n, n_hyp), dtype=np.int64)
        added_cpu = np.zeros((n, n_hyp), dtype=np.int64)
        added_ram = np.zeros((n, n_hyp), dtype=np.int64)
        added_hdd = np.zeros((n, n_hyp), dtype=np.int64)
        link_use = np.zeros((n, free_bw.shape[0]), dtype=np.int64)
        delay = np.full(n, proc_total, dtype=np.float64)

        def kill(mask, s):
            nonlocal max_stage
            newly = alive & mask
            if newly.any():
                stage[newly] = s
                alive[newly] = False
                max_stage = max(max_stage, s)

        for v in range(n_vnf):
            h = assign[:, v]
            counts[rows, h] += 1
            kill(counts[rows, h] > iso_limit, v * 4 + 0)

            added_cpu[rows, h] += dem_cpu[v]
            added_ram[rows, h] += dem_ram[v]
            added_hdd[rows, h] += dem_hdd[v]
            over = ((added_cpu[rows, h] > free_cpu[h])
                    | (added_ram[rows, h] > free_ram[h])
                    | (added_hdd[rows, h] > free_hdd[h]))
            kill(over, v * 4 + 1)

            if v > 0:
                prev = assign[:, v - 1]
                link_use += bw * pair_links[prev, h].astype(np.int64)
                kill((link_use > free_bw[None, :]).any(axis=1), v * 4 + 2)
                delay = delay + pair_delay[prev, h]
            kill(delay > max_delay, v * 4 + 3)

        if alive.any():
            util = (alloc_cpu[None, :] + added_cpu) / cap_cpu[None, :]
            obj = alpha * util.max(axis=1) + beta * (delay / delay_norm)
            obj[~alive] = np.inf
            i = int(np.argmin(obj))
            if obj[i] < best_obj:
                best_obj = float(obj[i])
                best_assign = assign[i].copy()
                found = True

    if found:
        return FEASIBLE, best_assign, best_obj, -1
    return INFEASIBLE, best_assign, np.inf, max_stage
