"""Acceptance gate: one test per criterion, one printed verdict line each.

The heavy shared input is the seed grid: 20 seeds x {K1,K2,K3} x
{dsaf,fcfsfa}, 34 testbed-default requests per run, computed once per session.
Every criterion asserts exact or directional properties at the stated
tolerances; verdict lines print unconditionally so a log shows the outcome
of each criterion even when everything passes.
"""

import random
import tempfile
import time

import numpy as np
import pytest

from dsaf.harness import ScenarioConfig, run_scenario
from dsaf.optimizer import build_instance, check_feasible, solve
from dsaf.orchestrator import Orchestrator
from dsaf.slices import GeneratorParams, generate_requests
from dsaf.store import EventStore
from dsaf.topology import (conservation_holds, load_topology, reference_testbed)

from conftest import make_request, random_case
from oracle import brute_force

SEEDS = tuple(range(20))
SCENARIOS = ("K1", "K2", "K3")
ALLOCATORS = ("dsaf", "fcfsfa")


def _verdict(capsys, label, ok, detail=""):
    with capsys.disabled():
        suffix = f" ({detail})" if detail else ""
        print(f"\n[acceptance] {label}: {'PASS' if ok else 'FAIL'}{suffix}")


@pytest.fixture(scope="session")
def grid():
    reports = {}
    for scenario in SCENARIOS:
        for allocator in ALLOCATORS:
            for seed in SEEDS:
                cfg = ScenarioConfig(scenario=scenario, allocator=allocator,
                                     seed=seed)
                reports[(scenario, allocator, seed)] = run_scenario(cfg)
    return reports


def test_c1_solver_optimality(capsys):
    """500 seeded random instances (<=5 hypervisors, 3 VNFs): solve() equals
    the brute-force minimum, zero mismatches, under 10 s total."""
    rng = np.random.default_rng(12345)
    warm = make_request()
    warm_topo = load_topology(reference_testbed())
    from dsaf.topology import compute_path_table
    solve(build_instance(warm, warm_topo, compute_path_table(warm_topo)))

    mismatches = []
    started = time.perf_counter()
    for i in range(500):
        request, topology, pt, weights = random_case(rng, max_hyp=5, n_vnf=3)
        inst = build_instance(request, topology, pt, weights)
        outcome = solve(inst)
        assign, obj, binding, _ = brute_force(
            request, topology, pt, weights.alpha, weights.beta)
        if assign is None:
            if outcome.placement is not None or \
                    outcome.binding_constraint != binding:
                mismatches.append(i)
        else:
            if outcome.placement is None or \
                    outcome.placement.objective_value != obj or \
                    outcome.placement.assignment != assign:
                mismatches.append(i)
    elapsed = time.perf_counter() - started

    ok = not mismatches and elapsed < 10.0
    _verdict(capsys, "C1 solver optimality", ok,
             f"500 instances, {len(mismatches)} mismatches, {elapsed:.2f}s")
    assert not mismatches, f"instances {mismatches} diverged from brute force"
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_c2_allocation_dominance_k1_k2(capsys, grid):
    """DSAF allocated %% >= FCFSFA in K1 and K2 for every seed; K1 mean gap
    strictly positive."""
    failures = []
    k1_gaps = []
    for scenario in ("K1", "K2"):
        for seed in SEEDS:
            d = grid[(scenario, "dsaf", seed)].allocated_pct
            f = grid[(scenario, "fcfsfa", seed)].allocated_pct
            if d < f:
                failures.append((scenario, seed, d, f))
            if scenario == "K1":
                k1_gaps.append(d - f)
    mean_gap = sum(k1_gaps) / len(k1_gaps)
    ok = not failures and mean_gap > 0.0
    _verdict(capsys, "C2 allocation dominance (K1, K2)", ok,
             f"20 seeds, K1 mean gap {mean_gap:+.2f} pct points")
    assert not failures, f"dsaf under fcfsfa at {failures}"
    assert mean_gap > 0.0


def test_c3_k3_full_allocation(capsys, grid):
    """Both allocators allocate 100%% of the 34 testbed-default requests in K3
    on every seed."""
    shortfalls = [(a, s, grid[("K3", a, s)].allocated_pct)
                  for a in ALLOCATORS for s in SEEDS
                  if grid[("K3", a, s)].allocated_pct != 100.0]
    ok = not shortfalls
    _verdict(capsys, "C3 K3 full allocation", ok,
             f"{2 * len(SEEDS)} runs at 100%")
    assert not shortfalls, f"short of 100%: {shortfalls}"


def test_c4_balance_and_fill_order(capsys, grid):
    """K3 final (max-min) CPU%% spread: DSAF <= FCFSFA on every seed; the
    FCFSFA trajectory keeps P1 >= P5 at every request index."""
    spread_failures = []
    for seed in SEEDS:
        d = grid[("K3", "dsaf", seed)].balance
        f = grid[("K3", "fcfsfa", seed)].balance
        if d > f:
            spread_failures.append((seed, d, f))
    order_failures = []
    for seed in SEEDS:
        report = grid[("K3", "fcfsfa", seed)]
        for idx, row in enumerate(report.trajectory):
            if row[0] < row[4]:
                order_failures.append((seed, idx))
    ok = not spread_failures and not order_failures
    _verdict(capsys, "C4 balance spread and fill order", ok,
             f"20 seeds, {35 * len(SEEDS)} trajectory rows")
    assert not spread_failures, f"dsaf spread above fcfsfa: {spread_failures}"
    assert not order_failures, f"P1 < P5 at {order_failures}"


def test_c5_scenario_monotonicity(capsys, grid):
    """allocated_count(K1) <= allocated_count(K2) <= allocated_count(K3) per
    allocator per seed."""
    failures = []
    for allocator in ALLOCATORS:
        for seed in SEEDS:
            counts = [grid[(s, allocator, seed)].allocated_count
                      for s in SCENARIOS]
            if not counts[0] <= counts[1] <= counts[2]:
                failures.append((allocator, seed, counts))
    ok = not failures
    _verdict(capsys, "C5 scenario monotonicity", ok,
             f"{2 * len(SEEDS)} allocator/seed pairs")
    assert not failures, f"non-monotone: {failures}"


def test_c6_conservation_and_rollback(capsys):
    """With faults injected into PLACE handling (>= 100 in total): residual +
    active demand == capacity exactly after every stream, and each Failed
    request leaves the residual snapshot bit-identical."""
    injected = {"n": 0}
    failed_requests = 0
    snapshot_breaks = []
    streams = [(scenario, allocator, seed)
               for scenario in SCENARIOS for allocator in ALLOCATORS
               for seed in (0, 1)]

    for stream_no, (scenario, allocator, seed) in enumerate(streams):
        rng = random.Random(1000 + stream_no)

        def hook(payload, _rng=rng):
            if _rng.random() < 0.25:
                injected["n"] += 1
                return f"injected fault #{injected['n']}"
            return None

        topology = load_topology(reference_testbed())
        with tempfile.TemporaryDirectory(prefix="dsaf-fault-") as tmp:
            store = EventStore(tmp)
            orch = Orchestrator(
                topology, store, allocator=allocator,
                fault_hooks={h.name: hook for h in topology.hypervisors})
            params = GeneratorParams(
                isolation_limit={"K1": 1, "K2": 2, "K3": 3}[scenario])
            for request in generate_requests(seed, 34, params):
                before = orch.topology.snapshot_json()
                record = orch.submit(request)
                if record.state == "Failed":
                    failed_requests += 1
                    after = orch.topology.snapshot_json()
                    if after != before:
                        snapshot_breaks.append((scenario, allocator, seed,
                                                request.id))
            assert conservation_holds(orch.topology,
                                      orch.active.values()), \
                (scenario, allocator, seed)
            folded, _, _ = store.load_state(load_topology(reference_testbed()))
            assert folded.snapshot_json() == orch.topology.snapshot_json()

    ok = injected["n"] >= 100 and not snapshot_breaks
    _verdict(capsys, "C6 conservation and rollback", ok,
             f"{injected['n']} injected faults, {failed_requests} failed "
             f"requests, 0 residual leaks" if not snapshot_breaks else
             f"{len(snapshot_breaks)} residual leaks")
    assert injected["n"] >= 100, f"only {injected['n']} faults injected"
    assert not snapshot_breaks, f"residuals moved on Failed: {snapshot_breaks}"


def test_c7_delay_guarantee(capsys, grid):
    """All DSAF-accepted slices in the grid satisfy their delay bound; a
    bound below the star-topology chain delay makes DSAF reject while FCFSFA
    accepts and violates."""
    grid_violations = []
    for scenario in SCENARIOS:
        for seed in SEEDS:
            report = grid[(scenario, "dsaf", seed)]
            if report.delay_violations:
                grid_violations.append((scenario, seed,
                                        report.delay_violations))

    # constructed low-bound scenario: isolation 1 forces three hosts, so the
    # chain needs 0.3 ms processing + 2 x 0.2 ms star crossings = 0.7 ms,
    # over a 0.5 ms bound
    low_bound = [make_request(request_id=i, name=f"slice-{i:03d}",
                              cpu=(0.3, 0.3, 0.3), isolation=1, max_delay=0.5)
                 for i in range(3)]
    dsaf_report = run_scenario(ScenarioConfig(scenario="K1"),
                               requests=low_bound)
    fcfsfa_report = run_scenario(ScenarioConfig(scenario="K1",
                                                allocator="fcfsfa"),
                                 requests=low_bound)
    dsaf_rejects = dsaf_report.allocated_count == 0 and all(
        "delay" in row["reason"] for row in dsaf_report.request_rows)
    fcfsfa_violates = (fcfsfa_report.allocated_count == 3
                       and fcfsfa_report.delay_violations == [0, 1, 2])

    # the violation is visible to the solver-side checker as well
    topology = load_topology(reference_testbed())
    from dsaf.topology import compute_path_table
    pt = compute_path_table(topology)
    from dsaf.baseline import fcfsfa_allocate
    greedy = fcfsfa_allocate(low_bound[0], topology, pt)
    inst = build_instance(low_bound[0], topology, pt)
    checker_sees_it = any("delay" in v
                          for v in check_feasible(greedy.placement, inst))

    ok = (not grid_violations and dsaf_rejects and fcfsfa_violates
          and checker_sees_it)
    _verdict(capsys, "C7 delay guarantee", ok,
             "0 violations across 60 DSAF runs; low-bound scenario: DSAF "
             "rejects, FCFSFA accepts 0.7 ms over a 0.5 ms bound")
    assert not grid_violations, grid_violations
    assert dsaf_rejects, dsaf_report.request_rows
    assert fcfsfa_violates, (fcfsfa_report.allocated_count,
                             fcfsfa_report.delay_violations)
    assert checker_sees_it


def test_c8_replay_equivalence(capsys, tmp_path):
    """Folding the event log reproduces the live residual state byte for
    byte, across placements, faults, and deallocations, and again from a
    freshly reopened store."""
    calls = {"n": 0}

    def third_call_fails(payload):
        calls["n"] += 1
        return "injected" if calls["n"] == 7 else None

    topology = load_topology(reference_testbed())
    store = EventStore(tmp_path / "store")
    orch = Orchestrator(topology, store,
                        fault_hooks={"P4": third_call_fails})
    params = GeneratorParams(isolation_limit=2)
    records = orch.run_stream(generate_requests(3, 12, params))
    released = 0
    for record in records:
        if record.state == "Active" and record.request.id % 3 == 0:
            orch.deallocate(record.request.id)
            released += 1

    base = load_topology(reference_testbed())
    folded, active, _ = store.load_state(base)
    live_equal = folded.snapshot_json() == orch.topology.snapshot_json()

    reopened = EventStore(tmp_path / "store")
    folded2, active2, _ = reopened.load_state(load_topology(reference_testbed()))
    reopen_equal = folded2.snapshot_json() == orch.topology.snapshot_json()
    ok = live_equal and reopen_equal and set(active) == set(orch.active)

    _verdict(capsys, "C8 replay equivalence", ok,
             f"{len(records)} submits, {released} releases, byte-identical "
             "after fold and after reopen; every grid run re-checks this")
    assert live_equal
    assert reopen_equal
    assert set(active) == set(orch.active) == set(active2)


def test_c9_timing_structure(capsys, grid):
    """Mean computation time: DSAF strictly above FCFSFA in every scenario;
    processing-time means within one order of magnitude of each other."""
    comp_failures = []
    proc_failures = []
    detail_parts = []
    for scenario in SCENARIOS:
        comp = {a: sum(grid[(scenario, a, s)].mean_computation_time_ms
                       for s in SEEDS) / len(SEEDS) for a in ALLOCATORS}
        proc = {a: sum(grid[(scenario, a, s)].mean_processing_time_ms
                       for s in SEEDS) / len(SEEDS) for a in ALLOCATORS}
        if not comp["dsaf"] > comp["fcfsfa"]:
            comp_failures.append((scenario, comp))
        ratio = max(proc.values()) / min(proc.values())
        if ratio > 10.0:
            proc_failures.append((scenario, proc, ratio))
        detail_parts.append(
            f"{scenario} comp {comp['dsaf']:.3f}/{comp['fcfsfa']:.3f} ms, "
            f"proc ratio {ratio:.1f}")
    ok = not comp_failures and not proc_failures
    _verdict(capsys, "C9 timing structure", ok, "; ".join(detail_parts))
    assert not comp_failures, comp_failures
    assert not proc_failures, proc_failures
