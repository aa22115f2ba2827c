"""Command line entry point: run scenarios, compare allocators, serve HTTP."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .harness import (ALLOCATORS, HarnessError, ScenarioConfig, compare,
                      run_scenario)
from .optimizer import Weights
from .orchestrator import Orchestrator
from .slices import GeneratorParams, emit_requests, generate_requests
from .store import EventStore
from .topology import TopologyError, load_topology, reference_testbed


def _weights(args) -> Weights:
    return Weights(alpha=args.alpha, beta=args.beta)


def _scenario_name(value: str) -> str:
    name = value.upper()
    if name not in ("K1", "K2", "K3"):
        raise argparse.ArgumentTypeError(
            f"scenario must be k1, k2 or k3, not {value!r}")
    return name


def _seed_range(value: str) -> list[int]:
    # "7" or "0..19", inclusive on both ends
    if ".." in value:
        lo, _, hi = value.partition("..")
        try:
            start, end = int(lo), int(hi)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad seed range {value!r}")
        if end < start:
            raise argparse.ArgumentTypeError(f"empty seed range {value!r}")
        return list(range(start, end + 1))
    try:
        return [int(value)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed {value!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsaf",
        description="Dynamic slice allocation framework harness")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    run_p.add_argument("--scenario", type=_scenario_name, required=True)
    run_p.add_argument("--allocator", choices=ALLOCATORS, default="dsaf")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--requests", type=int, default=34)
    run_p.add_argument("--topology", default=None, metavar="FILE")
    run_p.add_argument("--out", default=None, metavar="DIR")
    run_p.add_argument("--realtime", action="store_true")
    run_p.add_argument("--emit-requests", default=None, metavar="FILE")
    run_p.add_argument("--alpha", type=float, default=1.0)
    run_p.add_argument("--beta", type=float, default=2.0)
    run_p.add_argument("--backend", choices=("numpy", "numba"), default=None)

    cmp_p = sub.add_parser("compare", help="run scenario/allocator grid")
    cmp_p.add_argument("--seeds", type=_seed_range, default=[0],
                       metavar="A..B")
    cmp_p.add_argument("--scenarios", default="k1,k2,k3",
                       help="comma-separated subset of k1,k2,k3")
    cmp_p.add_argument("--allocators", default="dsaf,fcfsfa",
                       help="comma-separated subset of dsaf,fcfsfa")
    cmp_p.add_argument("--requests", type=int, default=34)
    cmp_p.add_argument("--topology", default=None, metavar="FILE")
    cmp_p.add_argument("--out", default=None, metavar="DIR")
    cmp_p.add_argument("--alpha", type=float, default=1.0)
    cmp_p.add_argument("--beta", type=float, default=2.0)
    cmp_p.add_argument("--backend", choices=("numpy", "numba"), default=None)

    srv_p = sub.add_parser("serve", help="serve the HTTP endpoint")
    srv_p.add_argument("--port", type=int, required=True)
    srv_p.add_argument("--host", default="127.0.0.1")
    srv_p.add_argument("--allocator", choices=ALLOCATORS, default="dsaf")
    srv_p.add_argument("--topology", default=None, metavar="FILE")
    srv_p.add_argument("--store", default="dsaf-store", metavar="DIR")
    srv_p.add_argument("--alpha", type=float, default=1.0)
    srv_p.add_argument("--beta", type=float, default=2.0)
    srv_p.add_argument("--backend", choices=("numpy", "numba"), default=None)
    return parser


def _print_rows(rows: list[dict]) -> None:
    if not rows:
        return
    header = list(rows[0])
    widths = [max(len(h), *(len(_cell(r.get(h))) for r in rows))
              for h in header]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(_cell(row.get(h)).ljust(w)
                        for h, w in zip(header, widths)))


def _cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def cmd_run(args) -> int:
    cfg = ScenarioConfig(
        scenario=args.scenario, allocator=args.allocator, seed=args.seed,
        n_requests=args.requests, topology_path=args.topology,
        weights=_weights(args), pacing="realtime" if args.realtime else "instant",
        out_dir=args.out, backend=args.backend)
    requests = generate_requests(
        args.seed, args.requests,
        GeneratorParams(isolation_limit=cfg.isolation_limit))
    if args.emit_requests:
        emit_requests(requests, args.emit_requests)
    report = run_scenario(cfg, requests=requests)
    _print_rows([report.summary_row()])
    if report.delay_violations:
        print(f"delay violations: {report.delay_violations}")
    return 0


def cmd_compare(args) -> int:
    scenarios = [_scenario_name(s) for s in args.scenarios.split(",") if s]
    allocators = [a.strip() for a in args.allocators.split(",") if a.strip()]
    for allocator in allocators:
        if allocator not in ALLOCATORS:
            raise HarnessError(f"unknown allocator {allocator!r}")
    all_rows, all_deltas = [], []
    for seed in args.seeds:
        cfgs = [ScenarioConfig(scenario=s, allocator=a, seed=seed,
                               n_requests=args.requests,
                               topology_path=args.topology,
                               weights=_weights(args), backend=args.backend)
                for s in scenarios for a in allocators]
        result = compare(cfgs)
        all_rows.extend(result["rows"])
        all_deltas.extend({"seed": seed, **d} for d in result["deltas"])
    _print_rows(all_rows)
    if all_deltas:
        print()
        _print_rows(all_deltas)
    if args.out:
        from .harness import _write_csv
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        header = list(all_rows[0])
        _write_csv(out / "compare.csv", header,
                   [[r[k] for k in header] for r in all_rows])
        if all_deltas:
            dheader = list(all_deltas[0])
            _write_csv(out / "deltas.csv", dheader,
                       [[d[k] for k in dheader] for d in all_deltas])
    return 0


def cmd_serve(args) -> int:
    from .service import SliceService
    source = reference_testbed() if args.topology is None else args.topology
    topology = load_topology(source)
    store = EventStore(args.store)
    orch = Orchestrator(topology, store, allocator=args.allocator,
                        weights=_weights(args), backend=args.backend)
    service = SliceService(orch, host=args.host, port=args.port)
    host, port = service.server_address[:2]
    # flush so wrappers reading a pipe see the bound address immediately
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.server_close()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "compare":
            return cmd_compare(args)
        if args.command == "serve":
            return cmd_serve(args)
    except (HarnessError, TopologyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
