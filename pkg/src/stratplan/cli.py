"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 round limit reached, 3 planning
failure, 4 validation failure.  When ``--seed`` is omitted the seed comes
from ``STRATPLAN_SEED`` (default 0).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .engine import (BACKENDS, MODES, EngineConfig, InvestigationLog, PlanningFailed, RoundEngine,
                     RoundLimitExceeded, CorruptLog, initial_world, sim_roots)
from .errors import ConfigError, StratPlanError
from .grounding import ground
from .netadmin import DomainConfig, generate_domain, generate_problem, sensing_manifest
from .pddl import PDDLError, emit_domain, emit_problem, parse_domain, parse_problem
from .planner import (PlanInvalid, PlanningError, plan_from_json, plan_metric, plan_optimal,
                      plan_to_json, schedule_temporal, validate_plan)
from .report import build_report, report_csv, report_json
from .traces import GroundTruth, TraceConfig, TraceSet, generate_traces, trace_roots
from .world import SnapshotError, restore, snapshot, validate_world

EXIT_OK, EXIT_USAGE, EXIT_ROUND_LIMIT, EXIT_PLANNING, EXIT_INVALID = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("STRATPLAN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"STRATPLAN_SEED is not an integer: {env!r}") from None


def _domain_config(args) -> DomainConfig:
    return DomainConfig(
        protocols=args.protocols.split(",") if args.protocols else ["http", "tcp", "smtp"],
        setup_chain_length=args.setup_length,
        branch_length=args.branch_length,
    )


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_gen_domain(args) -> int:
    config = _domain_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for variant in ("metric", "temporal"):
        (out / f"{args.name}-{variant}.pddl").write_text(emit_domain(generate_domain(config, variant)))
    (out / f"{args.name}-sensing.json").write_text(sensing_manifest(config).dumps())
    return EXIT_OK


def cmd_gen_problem(args) -> int:
    config = _domain_config(args)
    problem = generate_problem(config, args.hostsets, args.goals or args.hostsets, _seed(args), args.variant)
    _write(args.out, emit_problem(problem))
    return EXIT_OK


def cmd_gen_traces(args) -> int:
    config = TraceConfig(n_hosts=args.hosts, duration_hours=args.hours, n_anomalies=args.anomalies,
                         noise=args.noise)
    traces, truth = generate_traces(config, _seed(args))
    traces.save(args.out, compress=args.gzip)
    (Path(args.out) / "ground-truth.json").write_text(truth.dumps())
    return EXIT_OK


def cmd_plan(args) -> int:
    domain = parse_domain(_read(args.domain))
    problem = parse_problem(_read(args.problem), domain)
    task = ground(domain, problem)
    try:
        if args.mode == "optimal":
            plan = plan_optimal(task, args.time_budget)
        elif args.mode == "temporal":
            plan = plan_metric(task, args.time_budget, weight="duration")
        else:
            plan = plan_metric(task, args.time_budget)
    except PlanningError as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    schedule = schedule_temporal(plan, task) if args.mode == "temporal" else None
    _write(args.out, json.dumps(plan_to_json(plan, task, schedule), indent=1) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    seed = _seed(args)
    config = EngineConfig(domain=_domain_config(args), mode=args.mode, backend=args.backend, seed=seed,
                          rounds_max=args.rounds_max, time_budget=args.time_budget,
                          wall_clock=args.wall_clock)
    traces = None
    if args.backend == "traces":
        if args.traces:
            traces = TraceSet.load(args.traces)
        else:
            traces, _ = generate_traces(TraceConfig(), seed)
        roots = trace_roots(traces.hosts, args.roots or 10)
    else:
        roots = sim_roots(args.roots or 20, args.hosts_per_root)
    world = initial_world(config.domain, roots)
    engine = RoundEngine(config, world, traces=traces)
    log_path = Path(args.out)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    snap_dir = Path(args.snapshot_dir) if args.snapshot_dir else log_path.parent / "snapshots"

    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        def on_round(eng, record):
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
            if args.snapshot_every and record["round"] % args.snapshot_every == 0:
                snap_dir.mkdir(parents=True, exist_ok=True)
                (snap_dir / f"round-{record['round']:06d}.json").write_text(snapshot(eng.world))

        status = EXIT_OK
        try:
            engine.run(on_round)
        except RoundLimitExceeded as exc:
            print(str(exc), file=sys.stderr)
            status = EXIT_ROUND_LIMIT
        except PlanningFailed as exc:
            print(f"planning failed: {exc}", file=sys.stderr)
            status = EXIT_PLANNING
    if args.registry:
        engine.registry.dump(args.registry)
    return status


def cmd_report(args) -> int:
    try:
        log = InvestigationLog.loads(_read(args.log))
    except CorruptLog as exc:
        print(f"corrupt log: {exc}", file=sys.stderr)
        return EXIT_INVALID
    truth = GroundTruth.loads(_read(args.ground_truth)).labels if args.ground_truth else None
    report = build_report(log, truth)
    if args.json:
        _write(args.json, report_json(report))
    if args.csv:
        _write(args.csv, report_csv(report))
    if not args.json and not args.csv:
        sys.stdout.write(report_json(report))
    return EXIT_OK


def cmd_validate(args) -> int:
    problems: list[str] = []
    if args.snapshot:
        try:
            world = restore(_read(args.snapshot))
        except SnapshotError as exc:
            problems.append(str(exc))
        else:
            problems.extend(validate_world(world))
    if args.plan:
        if not (args.domain and args.problem):
            raise UsageError("validating a plan needs --domain and --problem")
        domain = parse_domain(_read(args.domain))
        problem = parse_problem(_read(args.problem), domain)
        task = ground(domain, problem)
        try:
            plan = plan_from_json(json.loads(_read(args.plan)), task)
            validate_plan(plan, task)
        except (PlanInvalid, KeyError, ValueError) as exc:
            problems.append(f"plan: {exc}")
    if not args.snapshot and not args.plan:
        raise UsageError("nothing to validate: pass --plan and/or --snapshot")
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return EXIT_INVALID
    print("ok")
    return EXIT_OK


# --------------------------------------------------------------------------


def _domain_flags(p) -> None:
    p.add_argument("--protocols", help="comma-separated protocol list (default http,tcp,smtp)")
    p.add_argument("--setup-length", type=int, default=8)
    p.add_argument("--branch-length", type=int, default=4)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stratplan", description="Plan, sense and replan network drill-downs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-domain", help="write metric/temporal domains and the sensing manifest")
    p.add_argument("--out", default=".")
    p.add_argument("--name", default="netadmin")
    _domain_flags(p)
    p.set_defaults(func=cmd_gen_domain)

    p = sub.add_parser("gen-problem", help="write a problem instance")
    p.add_argument("--hostsets", type=int, default=1)
    p.add_argument("--goals", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--variant", choices=("metric", "temporal"), default="metric")
    p.add_argument("--out")
    _domain_flags(p)
    p.set_defaults(func=cmd_gen_problem)

    p = sub.add_parser("gen-traces", help="write synthetic traces and ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--hosts", type=int, default=100)
    p.add_argument("--anomalies", type=int, default=5)
    p.add_argument("--hours", type=float, default=24.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--gzip", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_gen_traces)

    p = sub.add_parser("plan", help="plan one problem and print the plan as JSON")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--mode", choices=MODES, default="metric")
    p.add_argument("--time-budget", type=float, default=10.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="run a full investigation and write its log")
    p.add_argument("--backend", choices=BACKENDS, default="sim")
    p.add_argument("--mode", choices=MODES, default="metric")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounds-max", type=int, default=10_000)
    p.add_argument("--snapshot-every", type=int, default=0)
    p.add_argument("--snapshot-dir")
    p.add_argument("--roots", type=int, help="root hostsets (default 20 sim, 10 traces)")
    p.add_argument("--hosts-per-root", type=int, default=8)
    p.add_argument("--traces", help="trace directory for --backend traces")
    p.add_argument("--time-budget", type=float, default=10.0)
    p.add_argument("--wall-clock", action="store_true", help="record measured instead of simulated timings")
    p.add_argument("--registry", help="write the deployment registry here")
    p.add_argument("--out", default="investigation.jsonl")
    _domain_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="summarize an investigation log")
    p.add_argument("--log", required=True)
    p.add_argument("--json")
    p.add_argument("--csv")
    p.add_argument("--ground-truth")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("validate", help="check a plan or a snapshot")
    p.add_argument("--plan")
    p.add_argument("--domain")
    p.add_argument("--problem")
    p.add_argument("--snapshot")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"stratplan: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PDDLError, StratPlanError, ValueError) as exc:
        print(f"stratplan: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
