"""Control- and data-dependence graph construction over a program model.

The class dependence graph groups nodes by class and carries three edge
families: branch control-dependence edges derived from the post-dominator
tree (Ferrante/Ottenstein/Warren criterion), unconditional hierarchy edges
anchoring members under their class/method entries, and data-dependence
edges from reaching definitions.
"""
from __future__ import annotations

from dataclasses import dataclass

from .exprs import variables
from .model import (
    Assign,
    Cond,
    EdgeLabel,
    Input,
    NodeKind,
    ProgramModel,
    StateLabel,
    UnknownClass,
    halts,
    node_number,
    sort_ids,
)

VIRTUAL_EXIT = "EXIT"


class NoExitPath(Exception):
    """Some node cannot reach the virtual exit, so post-dominance is undefined."""


@dataclass(frozen=True)
class CdEdge:
    governing: str
    dependent: str
    branch: EdgeLabel


@dataclass(frozen=True)
class DdEdge:
    def_node: str
    use_node: str
    var: str


@dataclass(frozen=True)
class PostDominatorTree:
    """Immediate post-dominators; every chain of parents ends at the virtual exit."""

    parent: tuple[tuple[str, str], ...]

    @property
    def parent_map(self) -> dict[str, str]:
        return dict(self.parent)

    def strict_postdominators(self, node_id: str) -> list[str]:
        parents = self.parent_map
        out = []
        cur = parents.get(node_id)
        while cur is not None:
            out.append(cur)
            cur = parents.get(cur)
        return out

    def postdominates(self, a: str, b: str) -> bool:
        """True when a post-dominates b (reflexively)."""
        return a == b or a in self.strict_postdominators(b)


def _augmented_successors(m: ProgramModel) -> dict[str, list[str]]:
    # Halt-flagged nodes gain a synthetic edge to the virtual exit; that is
    # the only way any node reaches it.
    succ: dict[str, list[str]] = {n.id: [] for n in m.nodes}
    succ[VIRTUAL_EXIT] = []
    for e in m.cfg_edges:
        succ[e.src].append(e.dst)
    for n in m.nodes:
        if halts(n.semantics):
            succ[n.id].append(VIRTUAL_EXIT)
    return succ


def compute_postdominators(m: ProgramModel) -> PostDominatorTree:
    succ = _augmented_successors(m)
    pred: dict[str, list[str]] = {k: [] for k in succ}
    for src, dsts in succ.items():
        for dst in dsts:
            pred[dst].append(src)

    # Reverse-graph reachability from the exit = nodes that can reach it.
    reaches = {VIRTUAL_EXIT}
    stack = [VIRTUAL_EXIT]
    while stack:
        for p in pred[stack.pop()]:
            if p not in reaches:
                reaches.add(p)
                stack.append(p)
    stranded = [n.id for n in m.nodes if n.id not in reaches]
    if stranded:
        raise NoExitPath(f"nodes cannot reach exit: {', '.join(sort_ids(stranded))}")

    # Iterative dominator solve on the reversed graph, rooted at the exit.
    order = [n.id for n in m.nodes] + [VIRTUAL_EXIT]
    pdom: dict[str, set[str]] = {VIRTUAL_EXIT: {VIRTUAL_EXIT}}
    universe = set(order)
    for node in order[:-1]:
        pdom[node] = set(universe)
    changed = True
    while changed:
        changed = False
        for node in order:
            if node == VIRTUAL_EXIT:
                continue
            new = set.intersection(*(pdom[s] for s in succ[node]))
            new.add(node)
            if new != pdom[node]:
                pdom[node] = new
                changed = True

    parent = {}
    for node in order[:-1]:
        strict = pdom[node] - {node}
        # Strict post-dominators nest; the immediate one is the largest set.
        parent[node] = max(strict, key=lambda d: len(pdom[d]))
    return PostDominatorTree(tuple(sorted(parent.items(), key=lambda kv: _order_key(kv[0]))))


def _order_key(node_id: str) -> tuple[int, str]:
    return (node_number(node_id), node_id)


def derive_control_dependences(m: ProgramModel, pdt: PostDominatorTree) -> list[CdEdge]:
    """Branch edges: n depends on cond c via branch b iff c's b-successor is
    post-dominated by n while n does not strictly post-dominate c.

    Implemented as the classic walk from each branch target up the
    post-dominator tree, stopping at the branch node's own parent.
    """
    parents = pdt.parent_map
    conds = {n.id for n in m.nodes if isinstance(n.semantics, Cond)}
    out: set[CdEdge] = set()
    for edge in m.cfg_edges:
        if edge.src not in conds or edge.label is EdgeLabel.UNCOND:
            continue
        stop = parents[edge.src]
        cur = edge.dst
        while cur != stop and cur != VIRTUAL_EXIT:
            out.add(CdEdge(edge.src, cur, edge.label))
            cur = parents[cur]
    return sorted(out, key=lambda e: (_order_key(e.governing), _order_key(e.dependent), e.branch.value))


def derive_data_dependences(m: ProgramModel) -> list[DdEdge]:
    """Reaching definitions: (d, u, v) when d's definition of v survives to u's read."""
    defs: dict[str, str | None] = {}
    uses: dict[str, frozenset[str]] = {}
    for n in m.nodes:
        defs[n.id] = None
        reads: frozenset[str] = frozenset()
        if isinstance(n.semantics, Assign):
            defs[n.id] = n.semantics.var
            reads = variables(n.semantics.expr)
        elif isinstance(n.semantics, Input):
            defs[n.id] = n.semantics.var
        elif isinstance(n.semantics, Cond):
            reads = variables(n.semantics.expr)
        uses[n.id] = reads

    succ: dict[str, list[str]] = {n.id: [] for n in m.nodes}
    pred: dict[str, list[str]] = {n.id: [] for n in m.nodes}
    for e in m.cfg_edges:
        succ[e.src].append(e.dst)
        pred[e.dst].append(e.src)

    reach_in: dict[str, set[tuple[str, str]]] = {n.id: set() for n in m.nodes}
    worklist = [n.id for n in m.nodes]
    out_sets: dict[str, set[tuple[str, str]]] = {n.id: set() for n in m.nodes}
    while worklist:
        node = worklist.pop(0)
        new_in: set[tuple[str, str]] = set()
        for p in pred[node]:
            new_in |= out_sets[p]
        reach_in[node] = new_in
        var = defs[node]
        new_out = {(d, v) for d, v in new_in if v != var} if var else set(new_in)
        if var:
            new_out.add((node, var))
        if new_out != out_sets[node]:
            out_sets[node] = new_out
            for s in succ[node]:
                if s not in worklist:
                    worklist.append(s)

    edges = {
        DdEdge(d, node, v)
        for node in [n.id for n in m.nodes]
        for d, v in reach_in[node]
        if v in uses[node]
    }
    return sorted(edges, key=lambda e: (_order_key(e.def_node), _order_key(e.use_node), e.var))


@dataclass(frozen=True)
class ClassDependenceGraph:
    nodes: tuple[tuple[str, tuple[str, ...]], ...]  # (class name, member ids)
    cd_edges: tuple[CdEdge, ...]
    dd_edges: tuple[DdEdge, ...]
    annotations: tuple[tuple[str, StateLabel], ...]

    @property
    def node_groups(self) -> dict[str, tuple[str, ...]]:
        return dict(self.nodes)

    @property
    def all_nodes(self) -> list[str]:
        return sort_ids(i for _, ids in self.nodes for i in ids)

    @property
    def annotation_map(self) -> dict[str, StateLabel]:
        return dict(self.annotations)

    def restricted_to(self, class_name: str) -> "ClassDependenceGraph":
        groups = self.node_groups
        if class_name not in groups:
            raise UnknownClass(f"no class {class_name!r} in model")
        keep = set(groups[class_name])
        return ClassDependenceGraph(
            nodes=((class_name, groups[class_name]),),
            cd_edges=tuple(e for e in self.cd_edges if e.governing in keep and e.dependent in keep),
            dd_edges=tuple(e for e in self.dd_edges if e.def_node in keep and e.use_node in keep),
            annotations=tuple((n, s) for n, s in self.annotations if n in keep),
        )


def assemble_cidg(m: ProgramModel, restrict_to_class: str | None = None) -> ClassDependenceGraph:
    """Full dependence graph of the model, optionally filtered to one class."""
    pdt = compute_postdominators(m)
    cd = derive_control_dependences(m, pdt)
    dd = derive_data_dependences(m)
    hierarchy = _hierarchy_edges(m, cd)

    groups = list(m.classes)
    grouped = {i for _, ids in groups for i in ids}
    loose = [n.id for n in m.nodes if n.id not in grouped]
    if loose:
        groups.append(("", tuple(sort_ids(loose))))

    graph = ClassDependenceGraph(
        nodes=tuple(groups),
        cd_edges=tuple(sorted(set(cd) | set(hierarchy),
                              key=lambda e: (_order_key(e.governing), _order_key(e.dependent),
                                             e.branch.value))),
        dd_edges=tuple(dd),
        annotations=tuple((n.id, n.state_annotation) for n in m.nodes),
    )
    if restrict_to_class is None:
        return graph
    return graph.restricted_to(restrict_to_class)


def _hierarchy_edges(m: ProgramModel, cd: list[CdEdge]) -> list[CdEdge]:
    """Unconditional anchors: class entries own their method entries, method
    entries own member statements that no branch governs, call sites own the
    entry node they jump to. Leftover orphans hang off the model entry so the
    graph stays rooted."""
    out: list[CdEdge] = []
    dependents = {e.dependent for e in cd if e.dependent != e.governing}
    nodes = m.node_map

    for _, members in m.classes:
        member_list = list(members)
        entries = [i for i in member_list if nodes[i].kind is NodeKind.METHOD_ENTRY]
        for class_entry in (i for i in member_list if nodes[i].kind is NodeKind.CLASS_ENTRY):
            for e in entries:
                out.append(CdEdge(class_entry, e, EdgeLabel.UNCOND))
        for node_id in member_list:
            kind = nodes[node_id].kind
            if kind not in (NodeKind.STATEMENT, NodeKind.CALL):
                continue
            if node_id in dependents or node_id == m.entry:
                continue
            anchor = _nearest_entry(node_id, member_list, nodes)
            if anchor and anchor != node_id:
                out.append(CdEdge(anchor, node_id, EdgeLabel.UNCOND))

    for edge in m.cfg_edges:
        if nodes[edge.src].kind is NodeKind.CALL and nodes[edge.dst].kind in (
            NodeKind.CLASS_ENTRY,
            NodeKind.METHOD_ENTRY,
        ):
            out.append(CdEdge(edge.src, edge.dst, EdgeLabel.UNCOND))

    anchored = {e.dependent for e in out} | dependents | {m.entry}
    for n in m.nodes:
        if n.id not in anchored and n.id != m.entry:
            out.append(CdEdge(m.entry, n.id, EdgeLabel.UNCOND))
    return out


def _nearest_entry(node_id: str, members: list[str], nodes) -> str | None:
    best = None
    for candidate in members:
        if nodes[candidate].kind is not NodeKind.METHOD_ENTRY:
            continue
        if node_number(candidate) <= node_number(node_id):
            if best is None or node_number(candidate) > node_number(best):
                best = candidate
    if best is not None:
        return best
    for candidate in members:
        if nodes[candidate].kind is NodeKind.CLASS_ENTRY:
            return candidate
    return None


def to_dot(graph: ClassDependenceGraph) -> str:
    """Graphviz text: state-labeled nodes, solid control edges, dashed data edges."""
    lines = ["digraph dependence {"]
    annotations = graph.annotation_map
    for node_id in graph.all_nodes:
        state = annotations.get(node_id, StateLabel.ND).token
        lines.append(f'  "{node_id}" [label="{node_id}\\n{state}"];')
    for e in graph.cd_edges:
        label = "" if e.branch is EdgeLabel.UNCOND else f' [label="{e.branch.value}"]'
        lines.append(f'  "{e.governing}" -> "{e.dependent}"{label};')
    for e in graph.dd_edges:
        lines.append(f'  "{e.def_node}" -> "{e.use_node}" [style=dashed, label="{e.var}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
