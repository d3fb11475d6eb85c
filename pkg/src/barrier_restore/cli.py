"""Command-line entry point.

Subcommands:
  generate  write a deployment JSON
  run       replay one failure scenario against a deployment (debugger)
  sweep     full experiment grid, CSV on stdout

Exit codes: 2 usage error, 3 no initial barrier, 4 unsupported multi-id
failure for the chosen scheme. Stdout carries only data; diagnostics go to
stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from .baselines import restore_rmove
from .central import restore_cmove, restore_nmove
from .core import EnergyModel, Region, World, seeded_rng, world_from_json, world_to_json
from .distributed import MessageBus, handle_failure_dmove, init_recovery_nodes
from .graph import build_intersection_graph, find_barrier
from .harness import (
    SCHEMES,
    ExperimentConfig,
    generate_deployment,
    rows_to_csv,
    run_experiment,
)

EXIT_USAGE = 2
EXIT_NO_BARRIER = 3
EXIT_MULTI_FAILURE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="barrier-restore",
        description="Simulate and evaluate barrier-coverage restoration schemes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a deployment JSON")
    gen.add_argument("--n", type=int, required=True, help="number of sensors")
    gen.add_argument("--length", type=float, default=4000.0, help="belt length (default 4000)")
    gen.add_argument("--width", type=float, default=60.0, help="belt width (default 60)")
    gen.add_argument("--rho", type=float, default=30.0, help="sensing radius (default 30)")
    gen.add_argument("--comm", type=float, default=None, help="communication radius (default 2*rho)")
    gen.add_argument("--sigma", type=float, default=6.0, help="placement error stddev (default 6)")
    gen.add_argument("--energy", type=float, default=100.0, help="initial energy (default 100)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, default=None, help="output file (default stdout)")

    run = sub.add_parser("run", help="run one failure scenario against a deployment")
    run.add_argument("--deployment", type=Path, required=True)
    run.add_argument("--scheme", choices=SCHEMES, required=True)
    run.add_argument("--fail", required=True, help="failed sensor id(s), comma separated")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--k", type=int, default=None, help="hop budget for detour search")
    run.add_argument("--cost-per-unit", type=float, default=1.0)
    run.add_argument("--static-threshold", type=float, default=10.0)
    run.add_argument("--trace", action="store_true", help="print protocol trace to stderr")

    sweep = sub.add_parser("sweep", help="experiment grid, CSV output")
    sweep.add_argument("--schemes", default=None, help="comma list (default all four)")
    sweep.add_argument("--n-list", default=None, help="comma list of deployment sizes")
    sweep.add_argument("--trials", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--length", type=float, default=None)
    sweep.add_argument("--width", type=float, default=None)
    sweep.add_argument("--rho", type=float, default=None)
    sweep.add_argument("--sigma", type=float, default=None)
    sweep.add_argument("--jobs", type=int, default=1, help="trial-level parallelism")
    sweep.add_argument("--config", type=Path, default=None, help="JSON config file; flags override")
    sweep.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    sweep.add_argument("--detail-log", type=Path, default=None,
                       help="write one JSON line per failure episode")
    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        n=args.n,
        length=args.length,
        width=args.width,
        rho=args.rho,
        comm=args.comm,
        sigma=args.sigma,
        initial_energy=args.energy,
        seed=args.seed,
        trials=1,
    )
    sensors = generate_deployment(config, seeded_rng(args.seed))
    world = World(Region(config.length, config.width), sensors)
    text = world_to_json(world)
    if args.out is None:
        print(text)
    else:
        args.out.write_text(text + "\n")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    try:
        failed_ids = [int(tok) for tok in args.fail.split(",") if tok != ""]
    except ValueError:
        print(f"error: --fail expects integer ids, got {args.fail!r}", file=sys.stderr)
        return EXIT_USAGE
    if not failed_ids:
        print("error: --fail lists no ids", file=sys.stderr)
        return EXIT_USAGE
    if args.scheme == "dmove" and len(failed_ids) > 1:
        print("error: dmove handles failures one at a time", file=sys.stderr)
        return EXIT_MULTI_FAILURE
    if args.scheme == "rmove" and len(failed_ids) > 1:
        print("error: rmove handles a single failure", file=sys.stderr)
        return EXIT_USAGE

    model = EnergyModel(args.cost_per_unit, args.static_threshold)
    world = world_from_json(args.deployment.read_text(), energy_model=model)
    for sid in failed_ids:
        if sid not in world.sensors:
            print(f"error: sensor {sid} not in deployment", file=sys.stderr)
            return EXIT_USAGE

    graph = build_intersection_graph(world.active_sensors(), world.region)
    barrier = find_barrier(graph)
    if barrier is None:
        print("error: deployment forms no initial barrier", file=sys.stderr)
        return EXIT_NO_BARRIER
    world.barrier = barrier

    bus = MessageBus(keep_log=args.trace)
    states = None
    if args.scheme == "dmove":
        states = init_recovery_nodes(world, bus=bus)
    for sid in failed_ids:
        world.sensor(sid).failed = True

    if args.scheme == "nmove":
        outcome = restore_nmove(world, failed_ids)
    elif args.scheme == "cmove":
        outcome = restore_cmove(world, failed_ids)
    elif args.scheme == "rmove":
        outcome = restore_rmove(world, failed_ids[0], seeded_rng(args.seed))
    else:
        outcome = handle_failure_dmove(
            world, states, failed_ids[0], k=args.k, bus=bus
        )

    doc = outcome.to_dict()
    doc["scheme"] = args.scheme
    doc["failed"] = failed_ids
    print(json.dumps(doc, indent=2))
    if args.trace:
        sys.stderr.write(bus.log_csv())
    return 0


def _sweep_config(args: argparse.Namespace, n: int) -> ExperimentConfig:
    base: dict = {}
    if args.config is not None:
        base = json.loads(args.config.read_text())
        base.pop("n", None)
    overrides = {
        "schemes": tuple(args.schemes.split(",")) if args.schemes else None,
        "trials": args.trials,
        "seed": args.seed,
        "length": args.length,
        "width": args.width,
        "rho": args.rho,
        "sigma": args.sigma,
    }
    for key, value in overrides.items():
        if value is not None:
            base[key] = value
    if "schemes" in base:
        base["schemes"] = tuple(base["schemes"])
    if "report_points" in base:
        base["report_points"] = tuple(base["report_points"])
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(base) - known
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    return ExperimentConfig(n=n, **base)


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.n_list:
        print("error: --n-list is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        n_values = [int(tok) for tok in args.n_list.split(",") if tok != ""]
    except ValueError:
        print(f"error: --n-list expects integers, got {args.n_list!r}", file=sys.stderr)
        return EXIT_USAGE

    try:
        configs = [_sweep_config(args, n) for n in n_values]
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE

    detail = args.detail_log.open("w") if args.detail_log is not None else None
    sink = sys.stdout if args.out is None else args.out.open("w")
    try:
        sink.write(rows_to_csv([]))
        for config in configs:
            rows = run_experiment(config, jobs=args.jobs, detail_sink=detail)
            sink.write(rows_to_csv(rows, header=False))
            sink.flush()
    finally:
        if detail is not None:
            detail.close()
        if sink is not sys.stdout:
            sink.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "generate":
        return cmd_generate(args)
    if args.command == "run":
        return cmd_run(args)
    return cmd_sweep(args)


if __name__ == "__main__":
    sys.exit(main())
