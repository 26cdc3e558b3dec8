"""Command-line driver wiring models, suites, and charts into the pipeline.

Exit codes: 0 success, 1 model/suite/chart errors, 2 no failing test,
3 no passing test, 4 multiple failing tests without --failing.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import depgraph, localizer, runner, statechart
from .exprs import ExprSyntaxError, UndefinedVariable
from .model import (
    DuplicateId,
    ModelSyntaxError,
    ProgramModel,
    UnknownClass,
    UnknownNode,
    load_model,
    validate_model,
)

ENV_BUDGET = "STATEDIFF_BUDGET"
ENV_FORMAT = "STATEDIFF_FORMAT"

DEFAULT_EXPECT = "(== floor req)"

_USAGE_ERRORS = (
    FileNotFoundError,
    IsADirectoryError,
    ModelSyntaxError,
    UnknownNode,
    UnknownClass,
    DuplicateId,
    ExprSyntaxError,
    UndefinedVariable,
    statechart.ChartSyntaxError,
    runner.DomainTooLarge,
    runner.InputExhausted,
    runner.ExecutionError,
    localizer.EmptySuite,
    ValueError,
)


@dataclass
class RunConfig:
    model_path: str | None = None
    chart_path: str | None = None
    suite_path: str | None = None
    enumerate_spec: str | None = None
    expect: str = DEFAULT_EXPECT
    restrict_class: str | None = None
    budget: int = runner.DEFAULT_BUDGET
    fmt: str = "text"
    output: str | None = None
    failing: str | None = None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statediff",
        description="Localize bugs by diffing state-annotated execution traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, suite=True):
        p.add_argument("--model", required=True, help="program model JSON file")
        p.add_argument("--class", dest="restrict_class", default=None,
                       help="restrict analysis to one class group (e.g. Control)")
        p.add_argument("--budget", type=int, default=None,
                       help=f"step budget per test (default {runner.DEFAULT_BUDGET}, env {ENV_BUDGET})")
        p.add_argument("--format", "-f", choices=("text", "json"), default=None,
                       help=f"output format (default text, env {ENV_FORMAT})")
        p.add_argument("--output", "-o", default=None, help="write output to a file instead of stdout")
        if suite:
            src = p.add_mutually_exclusive_group(required=True)
            src.add_argument("--suite", help="test suite JSON file")
            src.add_argument("--enumerate", dest="enumerate_spec",
                             help="enumerate inputs, e.g. floor=0..2,req=0..2")
            p.add_argument("--expect", default=DEFAULT_EXPECT,
                           help="verdict predicate for enumerated suites "
                                f"(default {DEFAULT_EXPECT!r})")

    p = sub.add_parser("localize", help="run the suite and report divergent source lines")
    common(p)
    p.add_argument("--failing", default=None,
                   help="case id to localize when several tests fail")

    common(sub.add_parser("table", help="print the coverage decision table"))
    common(sub.add_parser("matrix", help="print the pass/fail state comparison matrix"))
    common(sub.add_parser("trace", help="print per-case execution traces"))

    p = sub.add_parser("graph", help="export the class dependence graph as DOT")
    common(p, suite=False)

    p = sub.add_parser("transitions", help="print the statechart transition table")
    p.add_argument("--chart", required=True, help="statechart JSON file")
    p.add_argument("--format", "-f", choices=("text", "json"), default=None)
    p.add_argument("--output", "-o", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    cfg.model_path = getattr(args, "model", None)
    cfg.chart_path = getattr(args, "chart", None)
    cfg.suite_path = getattr(args, "suite", None)
    cfg.enumerate_spec = getattr(args, "enumerate_spec", None)
    cfg.expect = getattr(args, "expect", DEFAULT_EXPECT)
    cfg.restrict_class = getattr(args, "restrict_class", None)
    cfg.failing = getattr(args, "failing", None)
    budget = getattr(args, "budget", None)
    if budget is None:
        budget = int(os.environ.get(ENV_BUDGET, runner.DEFAULT_BUDGET))
    cfg.budget = budget
    fmt = getattr(args, "format", None)
    if fmt is None:
        fmt = os.environ.get(ENV_FORMAT, "text")
    if fmt not in ("text", "json"):
        raise ValueError(f"bad format {fmt!r} (use text or json)")
    cfg.fmt = fmt
    cfg.output = getattr(args, "output", None)
    return cfg


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_model(cfg: RunConfig) -> ProgramModel:
    m = load_model(cfg.model_path)
    diagnostics = validate_model(m)
    if diagnostics:
        details = "; ".join(f"{d.node_id or '<model>'}: {d.message}" for d in diagnostics)
        raise ValueError(f"model is not well formed: {details}")
    return m


def parse_enumerate_spec(spec: str) -> list[tuple[str, range]]:
    """'floor=0..2,req=0..2' -> [(floor, range(0, 3)), (req, range(0, 3))]."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if "=" not in part or ".." not in part:
            raise ValueError(f"bad enumerate spec {part!r} (want name=lo..hi)")
        name, bounds = part.split("=", 1)
        lo, hi = bounds.split("..", 1)
        out.append((name.strip(), range(int(lo), int(hi) + 1)))
    return out


def _build_suite(cfg: RunConfig) -> runner.TestSuite:
    if cfg.suite_path:
        return runner.load_suite(cfg.suite_path)
    return runner.enumerate_inputs(parse_enumerate_spec(cfg.enumerate_spec), cfg.expect)


def _analysis(cfg: RunConfig):
    m = _load_model(cfg)
    suite = _build_suite(cfg)
    traces = runner.run_suite(m, suite, cfg.budget)
    cidg = depgraph.assemble_cidg(m, cfg.restrict_class)
    restricted = [runner.restrict_trace(t, cidg.all_nodes) for t in traces]
    return m, cidg, restricted


def _pick_failing(cfg: RunConfig, traces):
    if cfg.failing is None:
        return traces
    known = {t.case_id: t for t in traces}
    if cfg.failing not in known:
        raise ValueError(f"--failing {cfg.failing!r} is not a case in the suite")
    if known[cfg.failing].verdict is not runner.Verdict.FAIL:
        raise ValueError(f"--failing {cfg.failing!r} did not fail")
    return [t for t in traces if t.verdict is runner.Verdict.PASS or t.case_id == cfg.failing]


def cmd_localize(cfg: RunConfig) -> int:
    m, _, traces = _analysis(cfg)
    report, _, _ = localizer.localize_traces(m, _pick_failing(cfg, traces))
    if cfg.fmt == "json":
        _emit(cfg, localizer.report_to_json(report))
    else:
        _emit(cfg, localizer.render_report_text(report, m))
    return 0


def cmd_table(cfg: RunConfig) -> int:
    _, cidg, traces = _analysis(cfg)
    table = localizer.build_decision_table(cidg, traces)
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(localizer.decision_table_to_dict(table), indent=2) + "\n")
    else:
        _emit(cfg, localizer.render_decision_table_text(table))
    return 0


def cmd_matrix(cfg: RunConfig) -> int:
    m, _, traces = _analysis(cfg)
    _, _, matrix = localizer.localize_traces(m, _pick_failing(cfg, traces))
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(localizer.matrix_to_dict(matrix), indent=2) + "\n")
    else:
        _emit(cfg, localizer.render_matrix_text(matrix))
    return 0


def cmd_trace(cfg: RunConfig) -> int:
    _, cidg, traces = _analysis(cfg)
    if cfg.fmt == "json":
        _emit(cfg, json.dumps([runner.trace_to_dict(t) for t in traces], indent=2) + "\n")
    else:
        _emit(cfg, runner.render_state_rows(traces, cidg.all_nodes))
    return 0


def cmd_graph(cfg: RunConfig) -> int:
    m = _load_model(cfg)
    cidg = depgraph.assemble_cidg(m, cfg.restrict_class)
    if cfg.fmt == "json":
        payload = {
            "nodes": [
                {"id": i, "state": cidg.annotation_map[i].token} for i in cidg.all_nodes
            ],
            "cd_edges": [
                {"from": e.governing, "to": e.dependent, "branch": e.branch.value}
                for e in cidg.cd_edges
            ],
            "dd_edges": [
                {"from": e.def_node, "to": e.use_node, "var": e.var} for e in cidg.dd_edges
            ],
        }
        _emit(cfg, json.dumps(payload, indent=2) + "\n")
    else:
        _emit(cfg, depgraph.to_dot(cidg))
    return 0


def cmd_transitions(cfg: RunConfig) -> int:
    chart = statechart.load_chart(cfg.chart_path)
    table = statechart.build_transition_table(chart)
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(statechart.table_to_rows(table), indent=2) + "\n")
    else:
        _emit(cfg, statechart.render_table_text(table))
    return 0


_COMMANDS = {
    "localize": cmd_localize,
    "table": cmd_table,
    "matrix": cmd_matrix,
    "trace": cmd_trace,
    "graph": cmd_graph,
    "transitions": cmd_transitions,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _COMMANDS[args.command](cfg)
    except localizer.NoFailingTest:
        print("no failing test: nothing to localize", file=sys.stderr)
        return 2
    except localizer.NoPassingTest:
        print("no passing test: no witness to compare against", file=sys.stderr)
        return 3
    except localizer.MultipleFailures as exc:
        print(f"{exc}; rerun with --failing <case id>", file=sys.stderr)
        return 4
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
