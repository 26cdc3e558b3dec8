"""Failing-vs-passing trace comparison and the source-level bug report.

Pipeline: build the per-class decision table from the suite's traces, pick
the passing run whose coverage vector sits at minimal Hamming distance from
the failing one, align the two per-node state sequences with a longest
common subsequence walk, and report the off-path nodes (the divergence)
mapped back to source lines.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .depgraph import ClassDependenceGraph
from .model import ProgramModel, StateLabel, sort_ids
from .runner import ExecutionTrace, Verdict


class EmptySuite(Exception):
    """No traces to tabulate."""


class LengthMismatch(Exception):
    """Coverage vectors of different lengths cannot be compared."""


class NoFailingTest(Exception):
    """Every test passed; there is nothing to localize."""


class NoPassingTest(Exception):
    """Every test failed; there is no witness to compare against."""


class MultipleFailures(Exception):
    """More than one failing test; the caller must pick one to localize."""

    def __init__(self, case_ids: list[str]):
        super().__init__(f"multiple failing tests: {', '.join(case_ids)}")
        self.case_ids = case_ids


@dataclass(frozen=True)
class DecisionRow:
    case_id: str
    input_summary: str
    marks: tuple[bool, ...]
    verdict: Verdict


@dataclass(frozen=True)
class DecisionTable:
    node_order: tuple[str, ...]
    rows: tuple[DecisionRow, ...]


@dataclass(frozen=True)
class SelectionResult:
    failing: str
    witnesses: tuple[tuple[str, int], ...]
    chosen: str

    @property
    def distance(self) -> int:
        return self.witnesses[0][1]


@dataclass(frozen=True)
class ComparisonMatrix:
    row_nodes: tuple[str, ...]  # executed nodes of the passing trace, node order
    col_nodes: tuple[str, ...]  # executed nodes of the failing trace, node order
    row_states: tuple[StateLabel, ...]
    col_states: tuple[StateLabel, ...]
    match: tuple[tuple[bool, ...], ...]
    path: tuple[tuple[int | None, int | None], ...]

    @property
    def matched_cells(self) -> list[tuple[int, int]]:
        return [(r, c) for r, c in self.path if r is not None and c is not None]


@dataclass(frozen=True)
class BugReport:
    failing_case: str
    witness_case: str
    distance: int
    fail_only: tuple[tuple[str, StateLabel, int], ...]
    pass_only: tuple[tuple[str, StateLabel, int], ...]
    narrative: str


def build_decision_table(cidg: ClassDependenceGraph, traces: list[ExecutionTrace]) -> DecisionTable:
    """One row per trace over the graph's nodes; marks outside the class are dropped."""
    if not traces:
        raise EmptySuite("no traces to tabulate")
    node_order = tuple(cidg.all_nodes)
    rows = []
    for trace in traces:
        coverage = trace.coverage_map
        summary = _summary_of(trace)
        rows.append(
            DecisionRow(
                case_id=trace.case_id,
                input_summary=summary,
                marks=tuple(bool(coverage.get(i, False)) for i in node_order),
                verdict=trace.verdict,
            )
        )
    return DecisionTable(node_order, tuple(rows))


def _summary_of(trace: ExecutionTrace) -> str:
    return trace.case_id


def coverage_distance(a, b) -> int:
    """Hamming distance between two mark vectors."""
    a = tuple(a)
    b = tuple(b)
    if len(a) != len(b):
        raise LengthMismatch(f"vector lengths differ: {len(a)} vs {len(b)}")
    return sum(1 for x, y in zip(a, b) if bool(x) != bool(y))


def _vector(trace: ExecutionTrace, node_order: list[str]) -> tuple[bool, ...]:
    coverage = trace.coverage_map
    return tuple(bool(coverage.get(i, False)) for i in node_order)


def _state_difference(a: ExecutionTrace, b: ExecutionTrace, node_order: list[str]) -> int:
    sa, sb = a.state_map, b.state_map
    return sum(1 for i in node_order if sa.get(i) != sb.get(i))


def select_nearest_pass(traces: list[ExecutionTrace]) -> SelectionResult:
    """Witnesses are the passing traces at minimal coverage distance from the
    failing one; the chosen witness minimizes the state-vector difference,
    ties falling to suite order."""
    failing = [t for t in traces if t.verdict is Verdict.FAIL]
    passing = [t for t in traces if t.verdict is Verdict.PASS]
    if not failing:
        raise NoFailingTest("all tests pass")
    if len(failing) > 1:
        raise MultipleFailures([t.case_id for t in failing])
    if not passing:
        raise NoPassingTest("all tests fail")

    fail = failing[0]
    node_order = sort_ids(i for i, _ in fail.coverage)
    fail_vec = _vector(fail, node_order)
    distances = [(t, coverage_distance(_vector(t, node_order), fail_vec)) for t in passing]
    best = min(d for _, d in distances)
    witnesses = [(t, d) for t, d in distances if d == best]
    chosen = min(
        range(len(witnesses)),
        key=lambda i: (_state_difference(witnesses[i][0], fail, node_order), i),
    )
    return SelectionResult(
        failing=fail.case_id,
        witnesses=tuple((t.case_id, d) for t, d in witnesses),
        chosen=witnesses[chosen][0].case_id,
    )


def build_comparison_matrix(pass_trace: ExecutionTrace, fail_trace: ExecutionTrace) -> ComparisonMatrix:
    """Grid of (node, state) agreement with an LCS alignment path through it."""
    row_nodes = sort_ids(pass_trace.executed_set)
    col_nodes = sort_ids(fail_trace.executed_set)
    row_states = [pass_trace.state_map[i] for i in row_nodes]
    col_states = [fail_trace.state_map[i] for i in col_nodes]
    rows = list(zip(row_nodes, row_states))
    cols = list(zip(col_nodes, col_states))

    match = tuple(
        tuple(rows[i] == cols[j] for j in range(len(cols))) for i in range(len(rows))
    )
    path = _lcs_path(rows, cols)
    return ComparisonMatrix(
        row_nodes=tuple(row_nodes),
        col_nodes=tuple(col_nodes),
        row_states=tuple(row_states),
        col_states=tuple(col_states),
        match=match,
        path=path,
    )


def _lcs_path(rows: list, cols: list) -> tuple[tuple[int | None, int | None], ...]:
    # Suffix-length table; L[i][j] = LCS length of rows[i:] vs cols[j:].
    nr, nc = len(rows), len(cols)
    length = [[0] * (nc + 1) for _ in range(nr + 1)]
    for i in range(nr - 1, -1, -1):
        for j in range(nc - 1, -1, -1):
            if rows[i] == cols[j]:
                length[i][j] = length[i + 1][j + 1] + 1
            else:
                length[i][j] = max(length[i][j + 1], length[i + 1][j])

    path: list[tuple[int | None, int | None]] = []
    i = j = 0
    while i < nr or j < nc:
        if i < nr and j < nc and rows[i] == cols[j] and length[i][j] == length[i + 1][j + 1] + 1:
            path.append((i, j))
            i += 1
            j += 1
        elif j < nc and (i == nr or length[i][j + 1] >= length[i + 1][j]):
            path.append((None, j))  # node only in the failing run
            j += 1
        else:
            path.append((i, None))  # node only in the passing run
            i += 1
    return tuple(path)


def find_divergence(matrix: ComparisonMatrix) -> tuple[list[str], list[str]]:
    """(fail_only, pass_only): nodes off the alignment path, in node order."""
    fail_only = [matrix.col_nodes[j] for r, j in matrix.path if r is None]
    pass_only = [matrix.row_nodes[i] for i, c in matrix.path if c is None]
    return fail_only, pass_only


def generate_bug_report(
    m: ProgramModel,
    sel: SelectionResult,
    divergence: tuple[list[str], list[str]],
    traces: list[ExecutionTrace],
) -> BugReport:
    fail_only_ids, pass_only_ids = divergence
    by_id = {t.case_id: t for t in traces}
    fail_states = by_id[sel.failing].state_map
    pass_states = by_id[sel.chosen].state_map

    fail_only = tuple(
        (i, fail_states[i], m.node(i).line) for i in fail_only_ids
    )
    pass_only = tuple(
        (i, pass_states[i], m.node(i).line) for i in pass_only_ids
    )
    return BugReport(
        failing_case=sel.failing,
        witness_case=sel.chosen,
        distance=sel.distance,
        fail_only=fail_only,
        pass_only=pass_only,
        narrative=_narrative(fail_only, pass_only),
    )


def _narrative(fail_only, pass_only) -> str:
    if not fail_only and not pass_only:
        return "no state-flow divergence found"
    parts = []
    if fail_only:
        flow = " -> ".join(f"{state.token} at {node}" for node, state, _ in fail_only)
        lines = ", ".join(str(line) for _, _, line in fail_only)
        parts.append(f"failing run diverges through {flow} (line {lines})")
    if pass_only:
        alt = ", ".join(f"{node} ({state.token}, line {line})" for node, state, line in pass_only)
        parts.append(f"passing run instead executes {alt}")
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# rendering

def render_decision_table_text(table: DecisionTable) -> str:
    header = ["input", *table.node_order, "verdict"]
    body = []
    for row in table.rows:
        body.append(
            [row.input_summary]
            + ["+" if mark else "-" for mark in row.marks]
            + [row.verdict.value]
        )
    widths = [max(len(str(r[i])) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(str(r[i]).ljust(widths[i]) for i in range(len(header))).rstrip()
             for r in [header, *body]]
    return "\n".join(lines) + "\n"


def decision_table_to_dict(table: DecisionTable) -> dict:
    return {
        "node_order": list(table.node_order),
        "rows": [
            {
                "case_id": row.case_id,
                "input": row.input_summary,
                "marks": ["+" if m else "-" for m in row.marks],
                "verdict": row.verdict.value,
            }
            for row in table.rows
        ],
    }


def render_matrix_text(matrix: ComparisonMatrix) -> str:
    """Path cells marked '*', everything else '.'; rows = pass, cols = fail."""
    on_path = set(matrix.matched_cells)
    col_header = ["" ] + [f"{n}:{s.token}" for n, s in zip(matrix.col_nodes, matrix.col_states)]
    body = []
    for i, (node, state) in enumerate(zip(matrix.row_nodes, matrix.row_states)):
        cells = ["*" if (i, j) in on_path else "." for j in range(len(matrix.col_nodes))]
        body.append([f"{node}:{state.token}", *cells])
    widths = [max(len(str(r[i])) for r in [col_header, *body]) for i in range(len(col_header))]
    lines = ["  ".join(str(r[i]).ljust(widths[i]) for i in range(len(col_header))).rstrip()
             for r in [col_header, *body]]
    return "\n".join(lines) + "\n"


def matrix_to_dict(matrix: ComparisonMatrix) -> dict:
    return {
        "row_nodes": list(matrix.row_nodes),
        "col_nodes": list(matrix.col_nodes),
        "row_states": [s.token for s in matrix.row_states],
        "col_states": [s.token for s in matrix.col_states],
        "match": [list(row) for row in matrix.match],
        "path": [{"row": r, "col": c} for r, c in matrix.path],
    }


def render_report_text(report: BugReport, m: ProgramModel) -> str:
    suspects = {node_id for node_id, _, _ in report.fail_only}
    lines = [
        f"failing case:  {report.failing_case}",
        f"witness case:  {report.witness_case} (coverage distance {report.distance})",
        f"divergence:    {report.narrative}",
        "",
    ]
    width = max((len(node.text) for node in m.nodes), default=0)
    for node in m.nodes:
        row = f"{node.id:>4}  {node.text}"
        if node.id in suspects:
            row = f"{node.id:>4}  {node.text.ljust(width)}  ← Error detected at line {node.line}"
        lines.append(row.rstrip())
    return "\n".join(lines) + "\n"


def report_to_dict(report: BugReport) -> dict:
    return {
        "failing": report.failing_case,
        "witness": report.witness_case,
        "distance": report.distance,
        "fail_only": [
            {"node": n, "state": s.token, "line": line} for n, s, line in report.fail_only
        ],
        "pass_only": [
            {"node": n, "state": s.token, "line": line} for n, s, line in report.pass_only
        ],
        "narrative": report.narrative,
    }


def report_to_json(report: BugReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def localize_traces(
    m: ProgramModel,
    traces: list[ExecutionTrace],
) -> tuple[BugReport, SelectionResult, ComparisonMatrix]:
    """Selection, alignment, and report for one suite's (already restricted) traces."""
    sel = select_nearest_pass(traces)
    by_id = {t.case_id: t for t in traces}
    matrix = build_comparison_matrix(by_id[sel.chosen], by_id[sel.failing])
    divergence = find_divergence(matrix)
    report = generate_bug_report(m, sel, divergence, traces)
    return report, sel, matrix
