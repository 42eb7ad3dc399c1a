"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 requirement check failed under
``--strict``.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import analytic, engine, experiments
from .analytic import Span
from .errors import UoLatencyError
from .model import DeploymentSpec, build_topology
from .procedures import (
    PROCEDURES,
    data_uplink_procedure,
    extract_coefficients,
    get_procedure,
    uses_server,
)
from .scenario import ScenarioConfig, load_scenario

OUT_ENV = "UOLATENCY_OUT_DIR"
EXIT_OK, EXIT_INVALID, EXIT_REQUIREMENT = 0, 1, 2


def _ms(x: float) -> str:
    return f"{x:.3f} ms"


def _header(cfg: ScenarioConfig) -> str:
    d = cfg.deployment
    return (f"procedure: {cfg.procedure}  operator: {d.operator_kind.value}  "
            f"core distance: {d.core_distance:.2f} km  t_nf: {_ms(cfg.params.t_nf)}")


def _print_parts(parts: dict[str, float]) -> None:
    for name in ("access", "backhaul", "core_internal", "processing", "server"):
        print(f"  {name + ':':<15}{_ms(parts[name])}")


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    proc = get_procedure(cfg.procedure)
    trace = engine.run(proc, build_topology(cfg.deployment), cfg.params)
    print(_header(cfg))
    print(f"e2e: {_ms(trace.e2e_latency)}")
    _print_parts(trace.per_component)
    if args.trace:
        sys.stdout.write(trace.to_csv())
    return EXIT_OK


def _bounds(args, cfg: ScenarioConfig) -> tuple[float, float]:
    req = cfg.experiment.requirements if cfg.experiment else None
    one_way = args.one_way_bound or (req.one_way_bound if req else 10.0)
    round_trip = args.round_trip_bound or (req.round_trip_bound if req else 50.0)
    return one_way, round_trip


def cmd_analyze(args) -> int:
    cfg = load_scenario(args.scenario)
    proc = get_procedure(cfg.procedure)
    topo = build_topology(cfg.deployment)
    budget = analytic.latency(extract_coefficients(proc, topo), cfg.params, uses_server(proc))
    one_way, round_trip = _bounds(args, cfg)

    print(_header(cfg))
    print(f"e2e: {_ms(budget.l_total)}")
    _print_parts(budget.terms)
    verdicts = [("round trip", analytic.check_requirements(budget, one_way, round_trip))]
    if uses_server(proc):
        up = analytic.latency(extract_coefficients(data_uplink_procedure(), topo), cfg.params, False, Span.ONE_WAY)
        verdicts.append(("one way (uplink)", analytic.check_requirements(up, one_way, round_trip)))
    for label, verdict in verdicts:
        print(f"requirement {label}: {verdict}")
    if args.strict and not all(v.passed for _, v in verdicts):
        return EXIT_REQUIREMENT
    return EXIT_OK


def cmd_breakeven(args) -> int:
    cfg = load_scenario(args.scenario)
    proc = get_procedure(cfg.procedure)
    c = extract_coefficients(proc, build_topology(cfg.deployment))
    result = analytic.breakeven_distance(c, args.target, cfg.params, uses_server(proc))
    print(_header(cfg))
    print(f"target: {_ms(args.target)}")
    print(f"break-even distance: {result}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    block = cfg.experiment.sweep if cfg.experiment else None
    if block is None:
        print("error: scenario has no experiment.sweep block", file=sys.stderr)
        return EXIT_INVALID
    proc = get_procedure(cfg.procedure)
    n_factories = cfg.deployment.n_factories if cfg.deployment.n_factories > 1 else 10
    if block.axis == "distance":
        uo_reference = dataclasses.replace(cfg.params, t_nf=block.uo_t_nf, d_backhaul=block.uo_distance)
        result = experiments.sweep_distance(
            proc, block.d_min, block.d_max, block.step, block.mno_t_nf,
            uo_reference=uo_reference, n_factories=n_factories, threshold=block.threshold,
        )
    else:
        result = experiments.sweep_nf_delay(
            proc, block.t_min, block.t_max, block.n_points,
            uo_distance=block.uo_distance, mno_distance=block.mno_distance,
            base=cfg.params, n_factories=n_factories,
        )
    text = result.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for op, slope in result.fitted_slope.items():
        print(f"slope {op}: {slope:.4f}", file=sys.stderr)
    if "threshold" in result.reference_lines:
        x = result.crossing(result.reference_lines["threshold"])
        where = "not reached" if x is None else f"{x:.2f} km"
        print(f"threshold {_ms(result.reference_lines['threshold'])} crossed at {where}", file=sys.stderr)
    return EXIT_OK


def cmd_cases(args) -> int:
    cfg = load_scenario(args.scenario)
    block = cfg.experiment.table if cfg.experiment else None
    if block is None:
        print("error: scenario has no experiment.table block", file=sys.stderr)
        return EXIT_INVALID
    table = experiments.resource_case_table(
        get_procedure(cfg.procedure), block.uo_t_nf, block.uo_distance, block.n_factories, cfg.params,
    )
    print(f"uO latency: {_ms(table.uo_latency)}")
    for row in table.rows:
        dist = "--" if row.display_km is None else f"{row.display_km:.2f} km"
        print(f"case {row.case}  x{row.resource_ratio:g}  MNO t_nf {_ms(row.mno_t_nf)}  distance {dist}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = args.out or os.environ.get(OUT_ENV) or "out"
    report = experiments.reproduce_all(out)
    for path in report.files:
        print(path)
    bad = [e.id for e in report.entries if not e.consistent]
    print(f"{len(report.entries)} comparisons, {len(bad)} flagged: {', '.join(bad) or 'none'}")
    return EXIT_OK


def cmd_coeffs(args) -> int:
    proc = get_procedure(args.procedure)
    c = extract_coefficients(proc, build_topology(DeploymentSpec.uo()))
    print(f"{c.k1},{c.k2},{c.k3}")
    if args.verbose:
        print(f"k1 (access) = {c.k1}")
        print(f"k2 (backhaul) = {c.k2}")
        print(f"k3 (NF processing, critical path) = {c.k3}")
        print(f"k3_total (all NF processing) = {c.k3_total}")
        print(f"k_core (core-internal hops) = {c.k_core}")
    return EXIT_OK


def cmd_steps(args) -> int:
    sys.stdout.write(get_procedure(args.procedure).to_table())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uolatency",
        description="Latency of local micro-operator vs remote MNO 5G cores for an AR workload",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the event simulator on a scenario")
    p.add_argument("scenario")
    p.add_argument("--trace", action="store_true", help="also print the event log as CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="closed-form budget and requirement check")
    p.add_argument("scenario")
    p.add_argument("--one-way-bound", type=float, default=None, help="ms (default 10)")
    p.add_argument("--round-trip-bound", type=float, default=None, help="ms (default 50)")
    p.add_argument("--strict", action="store_true", help="exit 2 when a requirement fails")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("breakeven", help="core distance at which latency equals a target")
    p.add_argument("scenario")
    p.add_argument("--target", type=float, required=True, help="target latency in ms")
    p.set_defaults(func=cmd_breakeven)

    p = sub.add_parser("sweep", help="run the scenario's experiment.sweep block")
    p.add_argument("scenario")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cases", help="run the scenario's experiment.table block")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_cases)

    p = sub.add_parser("reproduce", help="regenerate every sweep, table and the report")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("coeffs", help="print k1,k2,k3 for a procedure")
    p.add_argument("procedure", help=", ".join(sorted(PROCEDURES)))
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("steps", help="print a procedure's message sequence as CSV")
    p.add_argument("procedure", help=", ".join(sorted(PROCEDURES)))
    p.set_defaults(func=cmd_steps)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; 2 is reserved for requirement failures here
        return EXIT_INVALID if exc.code == 2 else exc.code
    try:
        return args.func(args)
    except (UoLatencyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
