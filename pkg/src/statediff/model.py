"""Statement-level program model.

A subject program is encoded as numbered nodes (class entries, method
entries, statements, call sites) connected by labeled control-flow edges,
with integer variables and an optional statechart-state annotation per
node. Models load from a small JSON format and are immutable after load;
the whole pipeline downstream operates on this IR rather than on real
source code.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .exprs import (
    Expr,
    ExprSyntaxError,
    parse_expr,
    to_text,
    variables,
)


class ModelSyntaxError(Exception):
    """Malformed model file. Carries line/column when the JSON itself is bad."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownNode(Exception):
    """An edge, class group, or entry references a node id that is not declared."""


class DuplicateId(Exception):
    """Two nodes (or two test cases) share an id."""


class UnknownClass(Exception):
    """A class name does not match any node group in the model."""


class NodeKind(Enum):
    CLASS_ENTRY = "class_entry"
    METHOD_ENTRY = "method_entry"
    STATEMENT = "statement"
    CALL = "call"

    @property
    def prefix(self) -> str:
        return _PREFIXES[self]


_PREFIXES = {
    NodeKind.CLASS_ENTRY: "CE",
    NodeKind.METHOD_ENTRY: "E",
    NodeKind.STATEMENT: "S",
    NodeKind.CALL: "C",
}


class StateLabel(Enum):
    """Statechart states attachable to nodes; ND marks 'no state defined'."""

    IDLE = "Id"
    GOING_UP = "Gu"
    GOING_DOWN = "Gd"
    DOOR_OPEN = "Do"
    ND = "Nd"

    @property
    def token(self) -> str:
        return self.value


class EdgeLabel(Enum):
    UNCOND = "uncond"
    TRUE = "true"
    FALSE = "false"


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Expr
    halt_after: bool = False


@dataclass(frozen=True)
class Cond:
    expr: Expr
    halt_when_true: bool = False


@dataclass(frozen=True)
class Input:
    var: str
    halt_after: bool = False


@dataclass(frozen=True)
class Nop:
    halt_after: bool = False


Semantics = Assign | Cond | Input | Nop


def halts(sem: Semantics) -> bool:
    """True when the node can terminate the run (and thus feeds the virtual exit)."""
    if isinstance(sem, Cond):
        return sem.halt_when_true
    return sem.halt_after


@dataclass(frozen=True)
class CfgEdge:
    src: str
    dst: str
    label: EdgeLabel


@dataclass(frozen=True)
class ProgramNode:
    id: str
    kind: NodeKind
    line: int
    text: str
    semantics: Semantics
    state_annotation: StateLabel = StateLabel.ND


@dataclass(frozen=True, eq=True)
class ProgramModel:
    variables: tuple[tuple[str, int], ...]
    nodes: tuple[ProgramNode, ...]
    cfg_edges: tuple[CfgEdge, ...]
    entry: str
    classes: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def node(self, node_id: str) -> ProgramNode:
        try:
            return self.node_map[node_id]
        except KeyError:
            raise UnknownNode(f"no node {node_id!r} in model") from None

    @property
    def node_map(self) -> dict[str, ProgramNode]:
        return {n.id: n for n in self.nodes}

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def initial_valuation(self) -> dict[str, int]:
        return dict(self.variables)

    @property
    def class_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self.classes)

    def successors(self, node_id: str) -> list[CfgEdge]:
        return [e for e in self.cfg_edges if e.src == node_id]


def node_number(node_id: str) -> int:
    """Ordinal of a node id, e.g. 13 for S13; used for stable node ordering."""
    digits = "".join(ch for ch in node_id if ch.isdigit())
    return int(digits) if digits else 0


def sort_ids(ids) -> list[str]:
    return sorted(ids, key=lambda i: (node_number(i), i))


@dataclass(frozen=True)
class Diagnostic:
    node_id: str | None
    rule: str
    message: str


# ---------------------------------------------------------------------------
# parsing

_KINDS = {k.value: k for k in NodeKind}
_STATES = {s.token: s for s in StateLabel}
_LABELS = {l.value: l for l in EdgeLabel}


def parse_model(text: str) -> ProgramModel:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise ModelSyntaxError("model file must hold a JSON object")
    for key in ("variables", "nodes", "edges", "entry"):
        if key not in raw:
            raise ModelSyntaxError(f"missing top-level key {key!r}")

    variables = []
    for i, item in enumerate(_expect_list(raw, "variables")):
        if not isinstance(item, dict) or set(item) != {"name", "init"}:
            raise ModelSyntaxError(f"variables[{i}] must be {{'name','init'}}")
        if not isinstance(item["init"], int) or isinstance(item["init"], bool):
            raise ModelSyntaxError(f"variables[{i}].init must be an integer")
        variables.append((str(item["name"]), item["init"]))

    nodes = []
    seen: set[str] = set()
    for i, item in enumerate(_expect_list(raw, "nodes")):
        node = _parse_node(item, i)
        if node.id in seen:
            raise DuplicateId(f"node id {node.id!r} declared twice")
        seen.add(node.id)
        nodes.append(node)

    edges = []
    for i, item in enumerate(_expect_list(raw, "edges")):
        if not isinstance(item, dict) or not {"from", "to"} <= set(item):
            raise ModelSyntaxError(f"edges[{i}] must carry 'from' and 'to'")
        src, dst = str(item["from"]), str(item["to"])
        label = str(item.get("label", "uncond"))
        if label not in _LABELS:
            raise ModelSyntaxError(f"edges[{i}]: bad label {label!r}")
        for end in (src, dst):
            if end not in seen:
                raise UnknownNode(f"edge {src}->{dst} references undeclared node {end!r}")
        edges.append(CfgEdge(src, dst, _LABELS[label]))

    entry = str(raw["entry"])
    if entry not in seen:
        raise UnknownNode(f"entry references undeclared node {entry!r}")

    classes = []
    for name, ids in dict(raw.get("classes", {})).items():
        ids = [str(i) for i in ids]
        for node_id in ids:
            if node_id not in seen:
                raise UnknownNode(f"class {name!r} lists undeclared node {node_id!r}")
        classes.append((str(name), tuple(ids)))

    return ProgramModel(
        variables=tuple(variables),
        nodes=tuple(nodes),
        cfg_edges=tuple(edges),
        entry=entry,
        classes=tuple(classes),
    )


def _expect_list(raw: dict, key: str) -> list:
    value = raw.get(key, [])
    if not isinstance(value, list):
        raise ModelSyntaxError(f"{key!r} must be an array")
    return value


def _parse_node(item, index: int) -> ProgramNode:
    if not isinstance(item, dict):
        raise ModelSyntaxError(f"nodes[{index}] must be an object")
    for key in ("id", "kind", "line", "semantics"):
        if key not in item:
            raise ModelSyntaxError(f"nodes[{index}] missing {key!r}")
    kind = item["kind"]
    if kind not in _KINDS:
        raise ModelSyntaxError(f"nodes[{index}]: unknown kind {kind!r}")
    state = item.get("state", "Nd")
    if state not in _STATES:
        raise ModelSyntaxError(f"nodes[{index}]: unknown state {state!r}")
    line = item["line"]
    if not isinstance(line, int) or isinstance(line, bool):
        raise ModelSyntaxError(f"nodes[{index}]: line must be an integer")
    return ProgramNode(
        id=str(item["id"]),
        kind=_KINDS[kind],
        line=line,
        text=str(item.get("text", "")),
        semantics=_parse_semantics(item["semantics"], index),
        state_annotation=_STATES[state],
    )


def _parse_semantics(raw, index: int) -> Semantics:
    if not isinstance(raw, dict) or "op" not in raw:
        raise ModelSyntaxError(f"nodes[{index}]: semantics must be an object with 'op'")
    op = raw["op"]
    halt_after = bool(raw.get("halt_after", False))
    try:
        if op == "assign":
            return Assign(str(raw["var"]), parse_expr(str(raw["expr"])), halt_after)
        if op == "cond":
            if "halt_after" in raw:
                raise ModelSyntaxError(f"nodes[{index}]: cond uses halt_when_true, not halt_after")
            return Cond(parse_expr(str(raw["expr"])), bool(raw.get("halt_when_true", False)))
        if op == "input":
            return Input(str(raw["var"]), halt_after)
        if op == "nop":
            return Nop(halt_after)
    except KeyError as exc:
        raise ModelSyntaxError(f"nodes[{index}]: semantics missing {exc.args[0]!r}") from exc
    except ExprSyntaxError as exc:
        raise ModelSyntaxError(f"nodes[{index}]: {exc}") from exc
    raise ModelSyntaxError(f"nodes[{index}]: unknown semantics op {op!r}")


def load_model(path: str | Path) -> ProgramModel:
    return parse_model(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# serialization (inverse of parse_model up to structural equality)

def model_to_dict(m: ProgramModel) -> dict:
    out: dict = {
        "variables": [{"name": n, "init": v} for n, v in m.variables],
        "nodes": [_node_to_dict(n) for n in m.nodes],
        "edges": [{"from": e.src, "to": e.dst, "label": e.label.value} for e in m.cfg_edges],
        "entry": m.entry,
    }
    if m.classes:
        out["classes"] = {name: list(ids) for name, ids in m.classes}
    return out


def _node_to_dict(n: ProgramNode) -> dict:
    out: dict = {"id": n.id, "kind": n.kind.value, "line": n.line, "text": n.text}
    sem = n.semantics
    if isinstance(sem, Assign):
        s: dict = {"op": "assign", "var": sem.var, "expr": to_text(sem.expr)}
        if sem.halt_after:
            s["halt_after"] = True
    elif isinstance(sem, Cond):
        s = {"op": "cond", "expr": to_text(sem.expr)}
        if sem.halt_when_true:
            s["halt_when_true"] = True
    elif isinstance(sem, Input):
        s = {"op": "input", "var": sem.var}
        if sem.halt_after:
            s["halt_after"] = True
    else:
        s = {"op": "nop"}
        if sem.halt_after:
            s["halt_after"] = True
    out["semantics"] = s
    if n.state_annotation is not StateLabel.ND:
        out["state"] = n.state_annotation.token
    return out


def model_to_text(m: ProgramModel) -> str:
    return json.dumps(model_to_dict(m), indent=2) + "\n"


# ---------------------------------------------------------------------------
# validation

def validate_model(m: ProgramModel) -> list[Diagnostic]:
    """Check every structural invariant; an empty list means the model is sound."""
    out: list[Diagnostic] = []
    ids = set()
    declared = {name for name, _ in m.variables}

    for node in m.nodes:
        if node.id in ids:
            out.append(Diagnostic(node.id, "duplicate-id", f"node id {node.id} declared twice"))
        ids.add(node.id)
        expected = node.kind.prefix
        suffix = node.id[len(expected):]
        if not node.id.startswith(expected) or not suffix.isdigit():
            out.append(Diagnostic(node.id, "id-format",
                                  f"id {node.id} does not match prefix {expected} + number"))
        if node.line < 1:
            out.append(Diagnostic(node.id, "line-number", f"line {node.line} must be >= 1"))
        out.extend(_check_variables(node, declared))

    if m.entry not in ids:
        out.append(Diagnostic(None, "entry-missing", f"entry {m.entry} is not a declared node"))

    seen_edges = set()
    by_src: dict[str, list[CfgEdge]] = {}
    for edge in m.cfg_edges:
        key = (edge.src, edge.dst, edge.label)
        if key in seen_edges:
            out.append(Diagnostic(edge.src, "duplicate-edge",
                                  f"edge {edge.src}->{edge.dst} ({edge.label.value}) repeated"))
        seen_edges.add(key)
        for end in (edge.src, edge.dst):
            if end not in ids:
                out.append(Diagnostic(end, "unknown-node", f"edge references undeclared {end}"))
        by_src.setdefault(edge.src, []).append(edge)

    for node in m.nodes:
        labels = sorted(e.label.value for e in by_src.get(node.id, []))
        if isinstance(node.semantics, Cond):
            if labels != ["false", "true"]:
                out.append(Diagnostic(node.id, "cond-branch-arity",
                                      "cond requires true and false edges"))
        else:
            if len(labels) > 1:
                out.append(Diagnostic(node.id, "straight-arity",
                                      "non-cond node has more than one successor"))
            if any(l != "uncond" for l in labels):
                out.append(Diagnostic(node.id, "edge-label",
                                      "non-cond successor edges must be uncond"))

    grouped: set[str] = set()
    for name, members in m.classes:
        for node_id in members:
            if node_id not in ids:
                out.append(Diagnostic(node_id, "unknown-node",
                                      f"class {name} lists undeclared {node_id}"))
            elif node_id in grouped:
                out.append(Diagnostic(node_id, "class-overlap",
                                      f"node {node_id} appears in more than one class"))
            grouped.add(node_id)

    if m.entry in ids:
        reachable = _reachable_from(m, m.entry)
        for node in m.nodes:
            if node.id not in reachable:
                out.append(Diagnostic(node.id, "unreachable", "unreachable from entry"))
        can_exit = _reaches_halt(m)
        for node in m.nodes:
            if node.id not in can_exit:
                out.append(Diagnostic(node.id, "no-exit-path", "no path to a halting node"))
    return out


def _check_variables(node: ProgramNode, declared: set[str]) -> list[Diagnostic]:
    out = []
    sem = node.semantics
    read: frozenset[str] = frozenset()
    written: list[str] = []
    if isinstance(sem, Assign):
        read = variables(sem.expr)
        written = [sem.var]
    elif isinstance(sem, Cond):
        read = variables(sem.expr)
    elif isinstance(sem, Input):
        written = [sem.var]
    for name in sorted(read) + written:
        if name not in declared:
            out.append(Diagnostic(node.id, "undeclared-variable",
                                  f"node {node.id} references undeclared variable {name!r}"))
    return out


def _reachable_from(m: ProgramModel, start: str) -> set[str]:
    succ: dict[str, list[str]] = {}
    for e in m.cfg_edges:
        succ.setdefault(e.src, []).append(e.dst)
    seen = {start}
    stack = [start]
    while stack:
        for nxt in succ.get(stack.pop(), []):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _reaches_halt(m: ProgramModel) -> set[str]:
    pred: dict[str, list[str]] = {}
    for e in m.cfg_edges:
        pred.setdefault(e.dst, []).append(e.src)
    seen = {n.id for n in m.nodes if halts(n.semantics)}
    stack = list(seen)
    while stack:
        for prv in pred.get(stack.pop(), []):
            if prv not in seen:
                seen.add(prv)
                stack.append(prv)
    return seen


def with_annotations(m: ProgramModel, annotations: dict[str, StateLabel]) -> ProgramModel:
    """Copy of the model with some node annotations replaced (testing aid)."""
    nodes = tuple(
        replace(n, state_annotation=annotations.get(n.id, n.state_annotation)) for n in m.nodes
    )
    return replace(m, nodes=nodes)
