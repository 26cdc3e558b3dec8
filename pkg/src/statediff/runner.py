"""Deterministic interpreter for program models plus the test harness types.

A run starts at the model entry with the declared initial values overridden
by the test case, then steps node by node until a halt flag fires or the
step budget runs out. Coverage follows the decision-table convention: a
condition node counts as executed only when its guard evaluates true at
least once; every other node counts whenever it is visited.
"""
from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .exprs import Expr, ExprSyntaxError, UndefinedVariable, evaluate, parse_expr, to_text
from .model import (
    Assign,
    Cond,
    DuplicateId,
    EdgeLabel,
    Input,
    Nop,
    ProgramModel,
    StateLabel,
    sort_ids,
)

DEFAULT_BUDGET = 100_000
DEFAULT_DOMAIN_CAP = 10_000


class InputExhausted(Exception):
    """An input node executed with nothing left in the input queue."""


class DomainTooLarge(Exception):
    """Input enumeration would exceed the configured cap."""


class ExecutionError(Exception):
    """The model broke an executable invariant mid-run (validate first)."""


class Verdict(Enum):
    PASS = "Pass"
    FAIL = "Fail"


class HaltReason(Enum):
    HALT_FLAG = "halt_flag"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class TestCase:
    id: str
    assignments: tuple[tuple[str, int], ...]
    expect: Expr

    @property
    def assignment_map(self) -> dict[str, int]:
        return dict(self.assignments)

    @property
    def input_summary(self) -> str:
        if not self.assignments:
            return self.id
        return "<" + ",".join(str(v) for _, v in self.assignments) + ">"


@dataclass(frozen=True)
class TestSuite:
    cases: tuple[TestCase, ...]

    def __post_init__(self):
        seen = set()
        for case in self.cases:
            if case.id in seen:
                raise DuplicateId(f"test case id {case.id!r} declared twice")
            seen.add(case.id)


@dataclass(frozen=True)
class ExecutionTrace:
    case_id: str
    executed: tuple[str, ...]
    coverage: tuple[tuple[str, bool], ...]
    state_vector: tuple[tuple[str, StateLabel], ...]
    final_valuation: tuple[tuple[str, int], ...]
    verdict: Verdict
    halt_reason: HaltReason

    @property
    def coverage_map(self) -> dict[str, bool]:
        return dict(self.coverage)

    @property
    def state_map(self) -> dict[str, StateLabel]:
        return dict(self.state_vector)

    @property
    def executed_set(self) -> frozenset[str]:
        return frozenset(self.executed)


def run_test(
    m: ProgramModel,
    tc: TestCase,
    budget: int = DEFAULT_BUDGET,
    *,
    inputs: tuple[int, ...] = (),
) -> ExecutionTrace:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    valuation = m.initial_valuation
    declared = set(valuation)
    for name, value in tc.assignments:
        if name not in declared:
            raise UndefinedVariable(name, context=f"case {tc.id} assigns undeclared variable")
        valuation[name] = value

    successors: dict[str, dict[EdgeLabel, str]] = {n.id: {} for n in m.nodes}
    for e in m.cfg_edges:
        successors[e.src][e.label] = e.dst

    queue = deque(inputs)
    executed: list[str] = []
    steps = 0
    current = m.entry
    halt_reason = HaltReason.BUDGET_EXHAUSTED
    while True:
        steps += 1
        if steps > budget:
            break
        node = m.node(current)
        sem = node.semantics
        if isinstance(sem, Cond):
            try:
                taken = evaluate(sem.expr, valuation) != 0
            except UndefinedVariable as exc:
                raise UndefinedVariable(exc.name, context=f"case {tc.id} at {node.id}") from exc
            if taken:
                # Conditions enter the trace only on true evaluations.
                executed.append(node.id)
                if sem.halt_when_true:
                    halt_reason = HaltReason.HALT_FLAG
                    break
            current = _follow(successors, node.id, EdgeLabel.TRUE if taken else EdgeLabel.FALSE)
            continue

        executed.append(node.id)
        if isinstance(sem, Assign):
            if sem.var not in declared:
                raise UndefinedVariable(sem.var, context=f"case {tc.id} at {node.id}")
            try:
                valuation[sem.var] = evaluate(sem.expr, valuation)
            except UndefinedVariable as exc:
                raise UndefinedVariable(exc.name, context=f"case {tc.id} at {node.id}") from exc
        elif isinstance(sem, Input):
            if not queue:
                raise InputExhausted(f"case {tc.id}: input node {node.id} with empty queue")
            if sem.var not in declared:
                raise UndefinedVariable(sem.var, context=f"case {tc.id} at {node.id}")
            valuation[sem.var] = queue.popleft()
        if isinstance(sem, (Assign, Input, Nop)) and sem.halt_after:
            halt_reason = HaltReason.HALT_FLAG
            break
        current = _follow(successors, node.id, EdgeLabel.UNCOND)

    if halt_reason is HaltReason.HALT_FLAG:
        verdict = Verdict.PASS if evaluate(tc.expect, valuation) != 0 else Verdict.FAIL
    else:
        verdict = Verdict.FAIL

    executed_set = set(executed)
    order = [n.id for n in m.nodes]
    return ExecutionTrace(
        case_id=tc.id,
        executed=tuple(executed),
        coverage=tuple((i, i in executed_set) for i in order),
        state_vector=tuple(
            (n.id, n.state_annotation) for n in m.nodes if n.id in executed_set
        ),
        final_valuation=tuple(sorted(valuation.items())),
        verdict=verdict,
        halt_reason=halt_reason,
    )


def _follow(successors, node_id: str, label: EdgeLabel) -> str:
    try:
        return successors[node_id][label]
    except KeyError:
        raise ExecutionError(f"node {node_id} has no {label.value} successor") from None


def run_suite(
    m: ProgramModel,
    suite: TestSuite,
    budget: int = DEFAULT_BUDGET,
) -> list[ExecutionTrace]:
    traces = []
    for case in suite.cases:
        try:
            traces.append(run_test(m, case, budget))
        except (UndefinedVariable, InputExhausted, ExecutionError) as exc:
            exc.case_id = case.id
            raise
    return traces


def enumerate_inputs(
    variables: list[tuple[str, range]],
    expect: Expr | str,
    cap: int = DEFAULT_DOMAIN_CAP,
) -> TestSuite:
    """Cartesian product of the domains, lexicographic, ids like '<0,1>'."""
    expect_expr = parse_expr(expect) if isinstance(expect, str) else expect
    total = 1
    for _, domain in variables:
        total *= len(domain)
    if total > cap:
        raise DomainTooLarge(f"{total} combinations exceed cap {cap}")
    names = [name for name, _ in variables]
    cases = []
    for values in itertools.product(*(list(d) for _, d in variables)):
        case_id = "<" + ",".join(str(v) for v in values) + ">"
        cases.append(TestCase(case_id, tuple(zip(names, values)), expect_expr))
    return TestSuite(tuple(cases))


def restrict_trace(trace: ExecutionTrace, node_ids) -> ExecutionTrace:
    """Trace filtered to one class's nodes; verdict and valuation are untouched."""
    keep = set(node_ids)
    return replace(
        trace,
        executed=tuple(i for i in trace.executed if i in keep),
        coverage=tuple((i, c) for i, c in trace.coverage if i in keep),
        state_vector=tuple((i, s) for i, s in trace.state_vector if i in keep),
    )


# ---------------------------------------------------------------------------
# suite files and trace dumps

def parse_suite(text: str) -> TestSuite:
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ValueError("suite file must hold a JSON array of cases")
    cases = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or not {"id", "expect"} <= set(item):
            raise ValueError(f"cases[{i}] needs 'id' and 'expect'")
        assign = item.get("assign", {})
        try:
            expect = parse_expr(str(item["expect"]))
        except ExprSyntaxError as exc:
            raise ValueError(f"cases[{i}]: {exc}") from exc
        cases.append(
            TestCase(str(item["id"]), tuple((str(k), int(v)) for k, v in assign.items()), expect)
        )
    return TestSuite(tuple(cases))


def load_suite(path: str | Path) -> TestSuite:
    return parse_suite(Path(path).read_text(encoding="utf-8"))


def suite_to_text(suite: TestSuite) -> str:
    rows = [
        {"id": c.id, "assign": dict(c.assignments), "expect": to_text(c.expect)}
        for c in suite.cases
    ]
    return json.dumps(rows, indent=2) + "\n"


def trace_to_dict(trace: ExecutionTrace) -> dict:
    return {
        "case_id": trace.case_id,
        "executed": list(trace.executed),
        "coverage": {i: v for i, v in trace.coverage},
        "state_vector": {i: s.token for i, s in trace.state_vector},
        "final_valuation": {k: v for k, v in trace.final_valuation},
        "verdict": trace.verdict.value,
        "halt_reason": trace.halt_reason.value,
    }


def trace_to_text(trace: ExecutionTrace) -> str:
    return json.dumps(trace_to_dict(trace), indent=2) + "\n"


def render_state_rows(traces: list[ExecutionTrace], node_order: list[str]) -> str:
    """Aligned per-case state grid: one column per node, '-' where unexecuted."""
    header = ["case", *node_order, "verdict"]
    body = []
    for t in traces:
        states = t.state_map
        body.append(
            [t.case_id]
            + [states[i].token if i in states else "-" for i in node_order]
            + [t.verdict.value]
        )
    widths = [max(len(str(r[i])) for r in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(str(r[i]).ljust(widths[i]) for i in range(len(header))).rstrip()
             for r in [header, *body]]
    return "\n".join(lines) + "\n"


def suite_node_order(traces: list[ExecutionTrace]) -> list[str]:
    ids = {i for t in traces for i, _ in t.coverage}
    return sort_ids(ids)
