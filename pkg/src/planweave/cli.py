"""Command line interface.

Three command families: `bench` generates and runs benchmark datasets and
rebuilds report tables, `plan` inspects single plan files, and `serve`
starts the session service. Plan-shaped results print as JSON documents on
stdout. The exit code is nonzero only for infrastructure problems (missing
files, malformed documents, unusable backend specs); revision failures and
invalid plans are ordinary results.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .backends import BackendError, build_backend
from .benchgen import (
    BreakOpKind,
    DatasetError,
    GenerationConfig,
    generate_dataset,
    load_dataset,
    store_dataset,
)
from .diff import plan_diff
from .execution import (
    DependencyError,
    InvalidPlanError,
    UnboundVariableError,
    build_executors,
    execute_all,
    execute_node,
)
from .goldplans import gold_plan_set
from .harness import ExperimentConfig, run_experiment, write_reports
from .model import NodeStatus
from .revision import RevisionCondition
from .serialize import ParseError, parse_plan
from .service import CorruptStoreError, build_app, serve
from .validate import ValidationLevel, validate_plan

_INFRASTRUCTURE_ERRORS = (
    OSError,
    ParseError,
    DatasetError,
    BackendError,
    CorruptStoreError,
    json.JSONDecodeError,
)


def _parse_conditions(text: str) -> tuple[RevisionCondition, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    try:
        return tuple(RevisionCondition(name) for name in names)
    except ValueError:
        known = ", ".join(c.value for c in RevisionCondition)
        raise DatasetError("bad-condition", f"conditions must be among: {known}")


def _parse_kinds(text: str) -> tuple[BreakOpKind, ...]:
    names = [part.strip() for part in text.split(",") if part.strip()]
    try:
        return tuple(BreakOpKind(name) for name in names)
    except ValueError:
        known = ", ".join(k.value for k in BreakOpKind)
        raise DatasetError("bad-kind", f"kinds must be among: {known}")


def _load_fixtures(path: str | None) -> dict | None:
    if path is None:
        return None
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _read_plan(path: str):
    return parse_plan(Path(path).read_text(encoding="utf-8"))


def _emit(doc: object) -> None:
    print(json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True))


def _cmd_bench_generate(args: argparse.Namespace) -> int:
    config = GenerationConfig(
        kinds=_parse_kinds(args.kinds) if args.kinds else tuple(BreakOpKind),
        items_per_kind=args.items_per_kind,
        seed=args.seed,
    )
    items = generate_dataset(gold_plan_set(), config)
    store_dataset(items, args.out)
    print(f"wrote {len(items)} items to {args.out}")
    return 0


def _cmd_bench_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        dataset=Path(args.dataset),
        out_dir=Path(args.out),
        conditions=(
            _parse_conditions(args.conditions)
            if args.conditions
            else tuple(RevisionCondition)
        ),
        backend_spec=args.backend,
        seed=args.seed,
        execute_math=args.execute_math,
        jobs=args.jobs,
    )
    records = run_experiment(config)
    statuses: dict[str, int] = {}
    for record in records:
        statuses[record["status"]] = statuses.get(record["status"], 0) + 1
    summary = ", ".join(f"{k}={v}" for k, v in sorted(statuses.items())) or "none"
    print(f"{len(records)} records in {args.out} ({summary})")
    return 0


def _cmd_bench_report(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    records_path = out_dir / "records.jsonl"
    docs = [
        json.loads(line)
        for line in records_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    items = load_dataset(args.dataset)
    write_reports(docs, items, out_dir, args.execute_math)
    print(f"rebuilt reports in {args.out} from {len(docs)} records")
    return 0


def _cmd_plan_validate(args: argparse.Namespace) -> int:
    plan = _read_plan(args.path)
    report = validate_plan(plan, ValidationLevel(args.level))
    _emit(
        {
            "level": report.level.value,
            "ok": report.ok,
            "violations": [
                {
                    "code": v.code,
                    "detail": v.detail,
                    "node_ids": list(v.node_ids),
                    "variable": v.variable,
                }
                for v in report.violations
            ],
        }
    )
    return 0


def _cmd_plan_exec(args: argparse.Namespace) -> int:
    plan = _read_plan(args.path)
    executors = build_executors(_load_fixtures(args.fixtures))
    if args.node is not None:
        try:
            executed = execute_node(plan, args.node, executors)
        except (DependencyError, UnboundVariableError) as exc:
            _emit({"ok": False, "error": "execution-failure", "detail": str(exc)})
            return 0
        node = executed.nodes[args.node]
        _emit(
            {
                "ok": node.status is NodeStatus.SUCCEEDED,
                "node_id": args.node,
                "status": node.status.value,
                "values": dict(node.trace.values) if node.trace else {},
            }
        )
        return 0
    try:
        executed, bundle = execute_all(plan, executors)
    except InvalidPlanError as exc:
        _emit(
            {
                "ok": False,
                "error": "validation-failure",
                "violations": [
                    {"code": v.code, "detail": v.detail}
                    for v in exc.report.violations
                ],
            }
        )
        return 0
    _emit(
        {
            "ok": bundle is not None,
            "statuses": {str(i): n.status.value for i, n in executed.nodes.items()},
            "sink": None
            if bundle is None
            else {"node_id": bundle.sink_id, "values": dict(bundle.values)},
        }
    )
    return 0


def _cmd_plan_diff(args: argparse.Namespace) -> int:
    before = _read_plan(args.before)
    after = _read_plan(args.after)
    diff = plan_diff(before, after)
    _emit(
        {
            "nodes_added": list(diff.nodes_added),
            "nodes_removed": list(diff.nodes_removed),
            "nodes_modified": list(diff.nodes_modified),
            "edges_added": diff.edges_added,
            "edges_removed": diff.edges_removed,
            "text": diff.text,
        }
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    app = build_app(
        backend=build_backend(args.backend, seed=args.seed),
        data_dir=args.data_dir,
        fixtures=_load_fixtures(args.fixtures),
    )
    serve(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planweave")
    commands = parser.add_subparsers(dest="command", required=True)

    bench = commands.add_parser("bench", help="benchmark datasets and experiments")
    bench_commands = bench.add_subparsers(dest="bench_command", required=True)

    generate = bench_commands.add_parser("generate", help="write a benchmark dataset")
    generate.add_argument("--out", required=True, help="dataset JSONL path")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--items-per-kind", type=int, default=25)
    generate.add_argument("--kinds", help="comma-separated break kinds (default all)")
    generate.set_defaults(func=_cmd_bench_generate)

    run = bench_commands.add_parser("run", help="run revision conditions")
    run.add_argument("--dataset", required=True)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument(
        "--conditions",
        help="comma-separated conditions: "
        + ",".join(c.value for c in RevisionCondition),
    )
    run.add_argument("--backend", default="oracle", help="oracle | inject:... | live")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--execute-math", action="store_true")
    run.set_defaults(func=_cmd_bench_run)

    report = bench_commands.add_parser("report", help="rebuild report tables")
    report.add_argument("--dataset", required=True)
    report.add_argument("--out", required=True, help="directory with records.jsonl")
    report.add_argument("--execute-math", action="store_true")
    report.set_defaults(func=_cmd_bench_report)

    plan = commands.add_parser("plan", help="inspect single plan files")
    plan_commands = plan.add_subparsers(dest="plan_command", required=True)

    validate = plan_commands.add_parser("validate", help="validate a plan file")
    validate.add_argument("path")
    validate.add_argument(
        "--level", choices=[l.value for l in ValidationLevel], default="draft"
    )
    validate.set_defaults(func=_cmd_plan_validate)

    execute = plan_commands.add_parser("exec", help="execute a plan file")
    execute.add_argument("path")
    execute.add_argument("--fixtures", help="JSON fixture file for non-math agents")
    execute.add_argument("--node", type=int, help="execute one node instead of all")
    execute.set_defaults(func=_cmd_plan_exec)

    diff = plan_commands.add_parser("diff", help="diff two plan files")
    diff.add_argument("before")
    diff.add_argument("after")
    diff.set_defaults(func=_cmd_plan_diff)

    server = commands.add_parser("serve", help="start the session service")
    server.add_argument("--host", default="127.0.0.1")
    server.add_argument("--port", type=int, default=None)
    server.add_argument("--data-dir", default=None)
    server.add_argument("--backend", default="oracle")
    server.add_argument("--seed", type=int, default=0)
    server.add_argument("--fixtures", help="JSON fixture file for non-math agents")
    server.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INFRASTRUCTURE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
