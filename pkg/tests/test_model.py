import json
from random import Random

import pytest

from statediff.model import (
    DuplicateId,
    ModelSyntaxError,
    NodeKind,
    StateLabel,
    UnknownNode,
    model_to_text,
    parse_model,
    validate_model,
)

from oracles import random_model


def mk(nodes, edges, entry, variables=(), classes=None):
    doc = {
        "variables": [{"name": n, "init": v} for n, v in variables],
        "nodes": nodes,
        "edges": [{"from": a, "to": b, "label": l} for a, b, l in edges],
        "entry": entry,
    }
    if classes:
        doc["classes"] = classes
    return json.dumps(doc)


def node(node_id, kind="statement", line=1, text="", **sem):
    sem.setdefault("op", "nop")
    return {"id": node_id, "kind": kind, "line": line, "text": text, "semantics": sem}


def test_elevator_parses(elevator):
    assert len(elevator.nodes) == 26
    assert elevator.entry == "E21"
    control = elevator.class_map["Control"]
    assert control[0] == "CE5" and control[-1] == "S20" and len(control) == 16
    assert elevator.class_map.keys() == {"RequestResolver", "Control", "main"}


def test_elevator_is_clean(elevator):
    assert validate_model(elevator) == []


def test_unannotated_nodes_default_to_nd(elevator):
    assert elevator.node("E21").state_annotation is StateLabel.ND
    assert elevator.node("S13").state_annotation is StateLabel.GOING_UP


def test_minimal_one_node_program():
    m = parse_model(mk([node("E1", kind="method_entry", op="nop", halt_after=True)], [], "E1"))
    assert validate_model(m) == []
    assert m.node("E1").kind is NodeKind.METHOD_ENTRY


def test_edge_to_undeclared_node():
    with pytest.raises(UnknownNode):
        parse_model(mk([node("S2", halt_after=True)], [("S2", "S9", "uncond")], "S2"))


def test_undeclared_entry():
    with pytest.raises(UnknownNode):
        parse_model(mk([node("S1", halt_after=True)], [], "S9"))


def test_duplicate_node_id():
    with pytest.raises(DuplicateId):
        parse_model(mk([node("S1", halt_after=True), node("S1")], [], "S1"))


def test_class_with_undeclared_node():
    with pytest.raises(UnknownNode):
        parse_model(mk([node("S1", halt_after=True)], [], "S1", classes={"A": ["S9"]}))


def test_malformed_json_reports_position():
    with pytest.raises(ModelSyntaxError) as err:
        parse_model("{\n  bad\n}")
    assert err.value.line == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("entry"),
        lambda d: d["nodes"][0].pop("kind"),
        lambda d: d["nodes"][0].update(kind="enum"),
        lambda d: d["nodes"][0].update(state="Zz"),
        lambda d: d["nodes"][0].update(line="one"),
        lambda d: d["nodes"][0].update(semantics={"op": "jump"}),
        lambda d: d["nodes"][0].update(semantics={"op": "assign", "var": "x"}),
        lambda d: d["nodes"][0].update(semantics={"op": "assign", "var": "x", "expr": "(+"}),
        lambda d: d["edges"].append({"from": "S1"}),
        lambda d: d["edges"].append({"from": "S1", "to": "S1", "label": "maybe"}),
    ],
)
def test_shape_errors(mutate):
    doc = json.loads(mk([node("S1", halt_after=True)], [], "S1", variables=[("x", 0)]))
    mutate(doc)
    with pytest.raises(ModelSyntaxError):
        parse_model(json.dumps(doc))


def test_halt_after_rejected_on_cond():
    bad = node("S1", op="cond", expr="(== x 0)", halt_after=True)
    with pytest.raises(ModelSyntaxError):
        parse_model(mk([bad], [], "S1", variables=[("x", 0)]))


def test_cond_with_single_successor_flagged():
    doc = mk(
        [node("S1", op="cond", expr="(== x 0)"), node("S2", halt_after=True)],
        [("S1", "S2", "true")],
        "S1",
        variables=[("x", 0)],
    )
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "cond-branch-arity" in rules


def test_straight_node_with_two_successors_flagged():
    doc = mk(
        [node("S1"), node("S2", halt_after=True), node("S3", halt_after=True)],
        [("S1", "S2", "uncond"), ("S1", "S3", "uncond")],
        "S1",
    )
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "straight-arity" in rules


def test_straight_node_with_branch_label_flagged():
    doc = mk([node("S1"), node("S2", halt_after=True)], [("S1", "S2", "true")], "S1")
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "edge-label" in rules


def test_unreachable_node_flagged():
    doc = mk([node("S1", halt_after=True), node("S99", halt_after=True)], [], "S1")
    diagnostics = validate_model(parse_model(doc))
    assert any(d.rule == "unreachable" and d.node_id == "S99" for d in diagnostics)


def test_node_without_exit_path_flagged():
    doc = mk(
        [node("S1", halt_after=True), node("S2"), node("S3")],
        [("S2", "S3", "uncond"), ("S3", "S2", "uncond")],
        "S1",
    )
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "no-exit-path" in rules  # S2/S3 spin forever
    assert "unreachable" in rules


def test_undeclared_variable_flagged():
    doc = mk([node("S1", op="assign", var="ghost", expr="1", halt_after=True)], [], "S1")
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "undeclared-variable" in rules


def test_id_prefix_must_match_kind():
    doc = mk([node("E1", kind="statement", halt_after=True)], [], "E1")
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "id-format" in rules


def test_line_must_be_positive():
    doc = mk([node("S1", line=0, halt_after=True)], [], "S1")
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "line-number" in rules


def test_duplicate_edge_flagged():
    doc = mk(
        [node("S1"), node("S2", halt_after=True)],
        [("S1", "S2", "uncond"), ("S1", "S2", "uncond")],
        "S1",
    )
    rules = {d.rule for d in validate_model(parse_model(doc))}
    assert "duplicate-edge" in rules


def test_roundtrip_elevator(elevator):
    assert parse_model(model_to_text(elevator)) == elevator


def test_roundtrip_random_models():
    rng = Random(7)
    for _ in range(25):
        m = random_model(rng, max_nodes=20, with_assigns=True)
        assert parse_model(model_to_text(m)) == m


def test_node_lookup_is_unique(elevator, elevator_traces):
    for trace in elevator_traces:
        for node_id in trace.executed:
            assert elevator.node(node_id).id == node_id
