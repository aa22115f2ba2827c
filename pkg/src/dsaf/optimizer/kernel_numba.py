"""Branch-and-bound kernel, JIT-compiled with numba.

Depth-first search over VNF->hypervisor assignments.  Candidates at each
level are tried in ascending order of the utilization the hypervisor would
reach, which finds balanced incumbents early; the bound (current max
utilization plus delay so far, with a zero-delay remainder) is admissible,
so pruning never discards a strictly better leaf.  Leaf objectives are
recomputed with the same canonical arithmetic as the numpy kernel, and ties
are resolved to the lexicographically smallest assignment vector.
"""

from __future__ import annotations

import numpy as np
from numba import njit

FEASIBLE = 0
INFEASIBLE = 1


@njit(cache=True)
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] != b[i]:
            return a[i] < b[i]
    return False


@njit(cache=True)
def _fill_order(order_row, alloc_cpu, added_cpu, cap_cpu, dem):
    """Hypervisor ids sorted by (utilization if this VNF lands there, id)."""
    n_hyp = cap_cpu.shape[0]
    keys = np.empty(n_hyp, dtype=np.float64)
    for h in range(n_hyp):
        keys[h] = (alloc_cpu[h] + added_cpu[h] + dem) / cap_cpu[h]
        order_row[h] = h
    for i in range(1, n_hyp):
        k = keys[i]
        o = order_row[i]
        j = i - 1
        while j >= 0 and (keys[j] > k or (keys[j] == k and order_row[j] > o)):
            keys[j + 1] = keys[j]
            order_row[j + 1] = order_row[j]
            j -= 1
        keys[j + 1] = k
        order_row[j + 1] = o
    return order_row


@njit(cache=True)
def solve_kernel(free_cpu, free_ram, free_hdd, alloc_cpu, cap_cpu,
                 dem_cpu, dem_ram, dem_hdd, bw, free_bw,
                 pair_delay, pair_links, iso_limit, max_delay, proc_total,
                 alpha, beta, delay_norm):
    """Returns (status, assignment[V], objective, max_stage)."""
    n_hyp = cap_cpu.shape[0]
    n_vnf = dem_cpu.shape[0]
    n_links = free_bw.shape[0]

    assign = np.full(n_vnf, -1, dtype=np.int64)
    best_assign = np.full(n_vnf, -1, dtype=np.int64)
    order = np.empty((n_vnf, n_hyp), dtype=np.int64)
    ptr = np.zeros(n_vnf, dtype=np.int64)
    counts = np.zeros(n_hyp, dtype=np.int64)
    added_cpu = np.zeros(n_hyp, dtype=np.int64)
    added_ram = np.zeros(n_hyp, dtype=np.int64)
    added_hdd = np.zeros(n_hyp, dtype=np.int64)
    link_use = np.zeros(n_links, dtype=np.int64)
    cum_delay = np.zeros(n_vnf + 1, dtype=np.float64)
    cum_delay[0] = proc_total

    best_obj = np.inf
    found = False
    max_stage = np.int64(-1)

    v = 0
    _fill_order(order[0], alloc_cpu, added_cpu, cap_cpu, dem_cpu[0])
    ptr[0] = 0

    while v >= 0:
        if ptr[v] >= n_hyp:
            # level exhausted: undo the placement one level up and resume there
            v -= 1
            if v >= 0:
                h = assign[v]
                counts[h] -= 1
                added_cpu[h] -= dem_cpu[v]
                added_ram[h] -= dem_ram[v]
                added_hdd[h] -= dem_hdd[v]
                if v > 0:
                    prev = assign[v - 1]
                    for l in range(n_links):
                        if pair_links[prev, h, l]:
                            link_use[l] -= bw
                assign[v] = -1
            continue

        h = order[v, ptr[v]]
        ptr[v] += 1

        if counts[h] + 1 > iso_limit:
            s = v * 4 + 0
            if s > max_stage:
                max_stage = s
            continue
        if (added_cpu[h] + dem_cpu[v] > free_cpu[h]
                or added_ram[h] + dem_ram[v] > free_ram[h]
                or added_hdd[h] + dem_hdd[v] > free_hdd[h]):
            s = v * 4 + 1
            if s > max_stage:
                max_stage = s
            continue
        if v > 0:
            prev = assign[v - 1]
            bw_ok = True
            for l in range(n_links):
                if pair_links[prev, h, l] and link_use[l] + bw > free_bw[l]:
                    bw_ok = False
                    break
            if not bw_ok:
                s = v * 4 + 2
                if s > max_stage:
                    max_stage = s
                continue
            d = cum_delay[v] + pair_delay[prev, h]
        else:
            d = cum_delay[0]
        if d > max_delay:
            s = v * 4 + 3
            if s > max_stage:
                max_stage = s
            continue

        # feasible so far: commit this level
        counts[h] += 1
        added_cpu[h] += dem_cpu[v]
        added_ram[h] += dem_ram[v]
        added_hdd[h] += dem_hdd[v]
        if v > 0:
            prev = assign[v - 1]
            for l in range(n_links):
                if pair_links[prev, h, l]:
                    link_use[l] += bw
        assign[v] = h
        cum_delay[v + 1] = d

        u_max = 0.0
        for hh in range(n_hyp):
            u = (alloc_cpu[hh] + added_cpu[hh]) / cap_cpu[hh]
            if u > u_max:
                u_max = u
        val = alpha * u_max + beta * (d / delay_norm)

        prune = False
        if v == n_vnf - 1:
            if (not found) or val < best_obj or (
                    val == best_obj and _lex_less(assign, best_assign)):
                best_obj = val
                best_assign[:] = assign
                found = True
            prune = True  # leaf: nothing below, undo and try next candidate
        elif found and val > best_obj:
            prune = True

        if prune:
            counts[h] -= 1
            added_cpu[h] -= dem_cpu[v]
            added_ram[h] -= dem_ram[v]
            added_hdd[h] -= dem_hdd[v]
            if v > 0:
                prev = assign[v - 1]
                for l in range(n_links):
                    if pair_links[prev, h, l]:
                        link_use[l] -= bw
            assign[v] = -1
            continue

        v += 1
        _fill_order(order[v], alloc_cpu, added_cpu, cap_cpu, dem_cpu[v])
        ptr[v] = 0

    if found:
        return FEASIBLE, best_assign, best_obj, np.int64(-1)
    return INFEASIBLE, best_assign, np.inf, max_stage
