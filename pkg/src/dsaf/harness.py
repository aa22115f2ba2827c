"""Scenario runner: K1/K2/K3 under either allocator, with CSV outputs.

A scenario is one seeded request stream driven through the orchestrator's
public submit path.  The report carries the allocation ratio, timing means,
the per-hypervisor CPU trajectory after every request, and the final
balance spread, which together cover the comparison figures.
"""

from __future__ import annotations

import json
import statistics
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .optimizer import Weights
from .orchestrator import Orchestrator
from .slices import GeneratorParams, SliceRequest, generate_requests
from .store import EventStore
from .topology import Topology, load_topology, reference_testbed

SCENARIOS = {"K1": 1, "K2": 2, "K3": 3}
ALLOCATORS = ("dsaf", "fcfsfa")


class HarnessError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    allocator: str = "dsaf"
    seed: int = 0
    n_requests: int = 34
    topology_path: Optional[str] = None
    weights: Weights = Weights()
    pacing: str = "instant"
    out_dir: Optional[str] = None
    backend: Optional[str] = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise HarnessError(f"unknown scenario {self.scenario!r}; "
                               f"expected one of {sorted(SCENARIOS)}")
        if self.allocator not in ALLOCATORS:
            raise HarnessError(f"unknown allocator {self.allocator!r}")
        if self.pacing not in ("instant", "realtime"):
            raise HarnessError(f"unknown pacing {self.pacing!r}")
        if self.n_requests < 0:
            raise HarnessError("n_requests must be non-negative")

    @property
    def isolation_limit(self) -> int:
        return SCENARIOS[self.scenario]


@dataclass
class ScenarioReport:
    scenario: str
    allocator: str
    seed: int
    n_requests: int
    allocated_count: int
    allocated_pct: float
    mean_processing_time_ms: float
    mean_computation_time_ms: float
    balance: float
    hypervisor_names: tuple
    trajectory: list = field(default_factory=list)
    request_rows: list = field(default_factory=list)
    delay_violations: list = field(default_factory=list)
    mean_delay_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "allocator": self.allocator,
            "seed": self.seed,
            "n_requests": self.n_requests,
            "allocated_count": self.allocated_count,
            "allocated_pct": self.allocated_pct,
            "mean_processing_time_ms": self.mean_processing_time_ms,
            "mean_computation_time_ms": self.mean_computation_time_ms,
            "balance": self.balance,
            "hypervisor_names": list(self.hypervisor_names),
            "trajectory": self.trajectory,
            "request_rows": self.request_rows,
            "delay_violations": self.delay_violations,
            "mean_delay_ms": self.mean_delay_ms,
        }

    def summary_row(self) -> dict:
        return {
            "scenario": self.scenario,
            "allocator": self.allocator,
            "seed": self.seed,
            "allocated_count": self.allocated_count,
            "allocated_pct": self.allocated_pct,
            "mean_processing_time_ms": self.mean_processing_time_ms,
            "mean_computation_time_ms": self.mean_computation_time_ms,
            "balance": self.balance,
        }


def _load_base_topology(cfg: ScenarioConfig) -> Topology:
    source = reference_testbed() if cfg.topology_path is None else cfg.topology_path
    return load_topology(source)


def _cpu_pct_row(topology: Topology) -> list[float]:
    return [100.0 * h.cpu_allocated_u / h.cpu_capacity_u
            for h in topology.hypervisors]


def run_scenario(cfg: ScenarioConfig,
                 requests: Optional[Sequence[SliceRequest]] = None
                 ) -> ScenarioReport:
    """Run one scenario end to end and return its report.

    ``requests`` overrides the seeded stream (same scenario isolation limit
    is still applied via the generator when omitted).
    """
    topology = _load_base_topology(cfg)
    if requests is None:
        params = GeneratorParams(isolation_limit=cfg.isolation_limit)
        requests = generate_requests(cfg.seed, cfg.n_requests, params)
    requests = sorted(requests, key=lambda r: (r.arrival_time, r.id))

    if cfg.out_dir is not None:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = _run_in_dir(cfg, topology, requests, out_dir)
        _write_artifacts(report, out_dir)
        return report
    with tempfile.TemporaryDirectory(prefix="dsaf-") as tmp:
        return _run_in_dir(cfg, topology, requests, Path(tmp))


def _run_in_dir(cfg: ScenarioConfig, topology: Topology,
                requests: Sequence[SliceRequest],
                out_dir: Path) -> ScenarioReport:
    store = EventStore(out_dir / "store")
    orch = Orchestrator(topology, store, allocator=cfg.allocator,
                        weights=cfg.weights, backend=cfg.backend)

    trajectory = [_cpu_pct_row(orch.topology)]
    request_rows = []
    # Submit one by one so the trajectory can be sampled between requests.
    clock = 0.0
    records = []
    for request in requests:
        if cfg.pacing == "realtime" and request.arrival_time > clock:
            time.sleep(request.arrival_time - clock)
        clock = request.arrival_time
        record = orch.submit(request)
        records.append(record)
        trajectory.append(_cpu_pct_row(orch.topology))
        row = {
            "request_id": request.id,
            "name": request.name,
            "outcome": record.state,
            "reason": record.reason,
            "total_delay_ms": (record.placement.total_delay_ms
                               if record.placement is not None else None),
            "max_delay_ms": request.max_delay_ms,
            "assignment": (list(record.placement.assignment)
                           if record.placement is not None else None),
            "objective": (record.placement.objective_value
                          if record.placement is not None else None),
            "processing_time_ms": record.processing_time_ms,
            "computation_time_ms": record.computation_time_ms,
        }
        request_rows.append(row)

    # Replay equivalence is an invariant of every run, not just a test.
    base = _load_base_topology(cfg)
    folded, _, _ = store.load_state(base)
    if folded.snapshot_json() != orch.topology.snapshot_json():
        raise RuntimeError("event-log replay diverged from live state")

    allocated = [r for r in records if r.state == "Active"]
    metrics = store.metrics_rows()
    mean_proc = statistics.fmean(m["processing_time_ms"] for m in metrics) \
        if metrics else 0.0
    mean_comp = statistics.fmean(m["computation_time_ms"] for m in metrics) \
        if metrics else 0.0
    final = trajectory[-1]
    delays = [r.placement.total_delay_ms for r in allocated]
    violations = [r.request.id for r in allocated
                  if r.request.max_delay_ms is not None
                  and r.placement.total_delay_ms > r.request.max_delay_ms]

    return ScenarioReport(
        scenario=cfg.scenario,
        allocator=cfg.allocator,
        seed=cfg.seed,
        n_requests=len(requests),
        allocated_count=len(allocated),
        allocated_pct=(100.0 * len(allocated) / len(requests)
                       if requests else 0.0),
        mean_processing_time_ms=mean_proc,
        mean_computation_time_ms=mean_comp,
        balance=(max(final) - min(final)) if final else 0.0,
        hypervisor_names=tuple(h.name for h in orch.topology.hypervisors),
        trajectory=trajectory,
        request_rows=request_rows,
        delay_violations=violations,
        mean_delay_ms=statistics.fmean(delays) if delays else None,
    )


def compare(cfgs: Sequence[ScenarioConfig]) -> dict:
    """Run several configs sharing a seed and tabulate metrics plus deltas."""
    if len(cfgs) < 2:
        raise HarnessError("compare needs at least two configs")
    seeds = {c.seed for c in cfgs}
    if len(seeds) != 1:
        raise HarnessError(f"configs use different seeds {sorted(seeds)}; "
                           "runs are not comparable")
    topologies = {c.topology_path for c in cfgs}
    if len(topologies) != 1:
        raise HarnessError("configs use different topologies")

    reports = [run_scenario(c) for c in cfgs]
    rows = [r.summary_row() for r in reports]

    numeric = ("allocated_count", "allocated_pct", "mean_processing_time_ms",
               "mean_computation_time_ms", "balance")
    by_scenario: dict[str, list[dict]] = {}
    for row in rows:
        by_scenario.setdefault(row["scenario"], []).append(row)
    deltas = []
    for scenario, group in by_scenario.items():
        base = group[0]
        for other in group[1:]:
            delta = {"scenario": scenario,
                     "pair": f"{other['allocator']}-{base['allocator']}"}
            for key in numeric:
                delta[key] = other[key] - base[key]
            deltas.append(delta)
    return {"rows": rows, "deltas": deltas, "reports": reports}


# -- CSV emission --------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str],
               rows: Sequence[Sequence]) -> Path:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def emit_plot_data(report: ScenarioReport, out_dir: str | Path) -> list[Path]:
    """Write the three figure-style CSVs for one report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = f"{report.scenario}_{report.allocator}".lower()

    trajectory = _write_csv(
        out / f"{prefix}_trajectory.csv",
        ["Request#", *report.hypervisor_names],
        [[i, *row] for i, row in enumerate(report.trajectory)])
    allocated = _write_csv(
        out / f"{prefix}_allocated.csv",
        ["scenario", "allocator", "allocated_count", "allocated_pct"],
        [[report.scenario, report.allocator, report.allocated_count,
          report.allocated_pct]])
    times = _write_csv(
        out / f"{prefix}_times.csv",
        ["scenario", "allocator", "mean_processing_time_ms",
         "mean_computation_time_ms"],
        [[report.scenario, report.allocator, report.mean_processing_time_ms,
          report.mean_computation_time_ms]])
    return [trajectory, allocated, times]


def _write_artifacts(report: ScenarioReport, out_dir: Path) -> None:
    summary = report.summary_row()
    _write_csv(out_dir / "report.csv", list(summary), [list(summary.values())])
    request_fields = ["request_id", "name", "outcome", "reason",
                      "total_delay_ms", "max_delay_ms", "processing_time_ms",
                      "computation_time_ms"]
    _write_csv(out_dir / "requests.csv", request_fields,
               [[row[k] for k in request_fields]
                for row in report.request_rows])
    emit_plot_data(report, out_dir)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
