"""Finite-state chart of the subject system and its transition table.

The chart drives two things: a flat transition table (initial state,
guard condition, four-bit action, final state) and an optional decoder
that maps a variable valuation to the next state. Node annotations in the
program model are static and are NOT produced by the decoder; the decoder
exists for sanity-checking models against their chart.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .exprs import Expr, ExprSyntaxError, evaluate, parse_expr, to_infix, to_text, variables
from .model import StateLabel


class ChartSyntaxError(Exception):
    """Malformed or inconsistent chart file."""


class AmbiguousState(Exception):
    """More than one transition row matches a valuation: the chart is nondeterministic."""


@dataclass(frozen=True)
class ActionTuple:
    """Actuator bits asserted on a transition: up, down, open, timer_start."""

    u: int
    d: int
    o: int
    t: int

    def __post_init__(self):
        for bit in (self.u, self.d, self.o, self.t):
            if bit not in (0, 1):
                raise ChartSyntaxError(f"action bits must be 0 or 1, got {bit!r}")

    def as_list(self) -> list[int]:
        return [self.u, self.d, self.o, self.t]


@dataclass(frozen=True)
class TransitionRow:
    initial: StateLabel
    condition: Expr
    action: ActionTuple
    final: StateLabel


@dataclass(frozen=True)
class StateChart:
    states: tuple[StateLabel, ...]
    initial_state: StateLabel
    rows: tuple[TransitionRow, ...]

    @property
    def chart_variables(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for row in self.rows:
            out |= variables(row.condition)
        return out


_STATES = {s.token: s for s in StateLabel}


def parse_chart(text: str) -> StateChart:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChartSyntaxError(f"{exc.msg} (line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(raw, dict) or not {"states", "initial", "rows"} <= set(raw):
        raise ChartSyntaxError("chart file needs 'states', 'initial', and 'rows'")

    states = []
    for token in raw["states"]:
        states.append(_state(token))
        if states[-1] is StateLabel.ND:
            raise ChartSyntaxError("Nd is the fallback label and cannot be a chart state")
    declared = set(states)
    initial = _state(raw["initial"])
    if initial not in declared:
        raise ChartSyntaxError(f"initial state {raw['initial']!r} is not declared")

    rows = []
    for i, item in enumerate(raw["rows"]):
        if not isinstance(item, dict) or not {"from", "cond", "action", "to"} <= set(item):
            raise ChartSyntaxError(f"rows[{i}] needs 'from', 'cond', 'action', 'to'")
        src, dst = _state(item["from"]), _state(item["to"])
        for state in (src, dst):
            if state not in declared:
                raise ChartSyntaxError(f"rows[{i}] references undeclared state {state.token}")
        action = item["action"]
        if not isinstance(action, list) or len(action) != 4:
            raise ChartSyntaxError(f"rows[{i}].action must be a 4-element list")
        try:
            cond = parse_expr(str(item["cond"]))
        except ExprSyntaxError as exc:
            raise ChartSyntaxError(f"rows[{i}]: {exc}") from exc
        rows.append(TransitionRow(src, cond, ActionTuple(*action), dst))

    return StateChart(tuple(states), initial, tuple(rows))


def _state(token) -> StateLabel:
    if token not in _STATES:
        raise ChartSyntaxError(f"unknown state label {token!r}")
    return _STATES[token]


def load_chart(path: str | Path) -> StateChart:
    return parse_chart(Path(path).read_text(encoding="utf-8"))


def build_transition_table(chart: StateChart) -> list[TransitionRow]:
    """Rows grouped by initial state (declaration order), otherwise stable."""
    rank = {state: i for i, state in enumerate(chart.states)}
    return sorted(chart.rows, key=lambda r: rank[r.initial])


def decode_state(
    valuation: dict[str, int],
    table: list[TransitionRow],
    current: StateLabel,
) -> StateLabel:
    """Next state per the unique matching row; Nd when nothing matches."""
    matches = [
        row
        for row in table
        if row.initial is current and evaluate(row.condition, valuation) != 0
    ]
    if len(matches) > 1:
        conds = ", ".join(to_text(r.condition) for r in matches)
        raise AmbiguousState(f"{len(matches)} rows match from {current.token}: {conds}")
    return matches[0].final if matches else StateLabel.ND


def table_to_rows(table: list[TransitionRow]) -> list[dict]:
    return [
        {
            "initial": row.initial.token,
            "condition": to_text(row.condition),
            "action": row.action.as_list(),
            "final": row.final.token,
        }
        for row in table
    ]


def render_table_text(table: list[TransitionRow]) -> str:
    """Aligned four-column text table."""
    header = ("initial", "condition", "action (u,d,o,t)", "final")
    body = [
        (
            row.initial.token,
            to_infix(row.condition),
            ",".join(str(b) for b in row.action.as_list()),
            row.final.token,
        )
        for row in table
    ]
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(4)]
    lines = []
    for r in [header, *body]:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(4)).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"
