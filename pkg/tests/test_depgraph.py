from random import Random

import pytest

from statediff.depgraph import (
    VIRTUAL_EXIT,
    NoExitPath,
    assemble_cidg,
    compute_postdominators,
    derive_control_dependences,
    derive_data_dependences,
    to_dot,
)
from statediff.exprs import parse_expr
from statediff.model import (
    Assign,
    CfgEdge,
    Cond,
    EdgeLabel,
    NodeKind,
    Nop,
    ProgramModel,
    ProgramNode,
    UnknownClass,
    validate_model,
)

import golden
from oracles import (
    augmented_successors,
    oracle_control_dependences,
    oracle_data_dependences,
    oracle_postdominance_sets,
    oracle_postdominates,
    oracle_postdominates_by_paths,
    random_model,
)


def stmt(node_id, sem, line=None):
    from statediff.model import node_number

    return ProgramNode(node_id, NodeKind.STATEMENT, line or node_number(node_id), node_id, sem)


def model_of(nodes, edges, entry, variables=(("x", 0),)):
    m = ProgramModel(tuple(variables), tuple(nodes), tuple(edges), entry)
    assert validate_model(m) == []
    return m


def chain():
    return model_of(
        [stmt("S1", Nop()), stmt("S2", Nop()), stmt("S3", Nop(halt_after=True))],
        [CfgEdge("S1", "S2", EdgeLabel.UNCOND), CfgEdge("S2", "S3", EdgeLabel.UNCOND)],
        "S1",
    )


def diamond():
    cond = parse_expr("(== x 0)")
    return model_of(
        [
            stmt("S1", Cond(cond)),
            stmt("S2", Assign("x", parse_expr("1"))),
            stmt("S3", Assign("x", parse_expr("2"))),
            stmt("S4", Nop(halt_after=True)),
        ],
        [
            CfgEdge("S1", "S2", EdgeLabel.TRUE),
            CfgEdge("S1", "S3", EdgeLabel.FALSE),
            CfgEdge("S2", "S4", EdgeLabel.UNCOND),
            CfgEdge("S3", "S4", EdgeLabel.UNCOND),
        ],
        "S1",
    )


# ---------------------------------------------------------------------------
# post-dominators

def test_elevator_if_joins_at_label(elevator):
    pdt = compute_postdominators(elevator)
    assert pdt.parent_map["S11"] == "S19"


def test_single_node_parent_is_exit():
    m = model_of([stmt("S1", Nop(halt_after=True))], [], "S1")
    assert compute_postdominators(m).parent_map == {"S1": VIRTUAL_EXIT}


def test_chain_postdominance():
    parent = compute_postdominators(chain()).parent_map
    assert parent["S1"] == "S2"
    assert parent["S2"] == "S3"
    assert parent["S3"] == VIRTUAL_EXIT


def test_no_exit_path_raises():
    m = ProgramModel(
        (("x", 0),),
        (stmt("S1", Nop()), stmt("S2", Nop())),
        (CfgEdge("S1", "S2", EdgeLabel.UNCOND), CfgEdge("S2", "S1", EdgeLabel.UNCOND)),
        "S1",
    )
    with pytest.raises(NoExitPath):
        compute_postdominators(m)


def test_postdominators_match_oracle_on_elevator(elevator):
    pdt = compute_postdominators(elevator)
    succ = augmented_successors(elevator)
    ids = [n.id for n in elevator.nodes]
    for node in ids:
        for candidate in ids:
            assert pdt.postdominates(candidate, node) == oracle_postdominates(
                succ, candidate, node
            ), (candidate, node)


def test_oracle_agrees_with_path_enumeration_on_tiny_graphs():
    # triple confirmation: per-pair deletion, batched deletion, literal paths
    rng = Random(11)
    for _ in range(30):
        m = random_model(rng, max_nodes=8)
        succ = augmented_successors(m)
        sets = oracle_postdominance_sets(m)
        ids = [n.id for n in m.nodes]
        for node in ids:
            for candidate in ids:
                expected = oracle_postdominates_by_paths(succ, candidate, node)
                assert oracle_postdominates(succ, candidate, node) == expected
                assert (node in sets[candidate]) == expected


# ---------------------------------------------------------------------------
# control dependence

def as_triples(edges):
    return {(e.governing, e.dependent, e.branch.value) for e in edges}


def test_elevator_control_dependences_frozen(elevator):
    pdt = compute_postdominators(elevator)
    assert as_triples(derive_control_dependences(elevator, pdt)) == golden.CONTROL_DEPENDENCES


def test_elevator_control_dependences_match_oracle(elevator):
    pdt = compute_postdominators(elevator)
    assert as_triples(derive_control_dependences(elevator, pdt)) == \
        oracle_control_dependences(elevator)


def test_going_up_branch_governs_loop_header(elevator):
    deps = golden.CONTROL_DEPENDENCES
    assert ("S11", "S12", "true") in deps
    # the rest of the loop body hangs off the header transitively
    region = _region(deps, "S11", "true")
    assert {"S12", "S13", "S15"} <= region


def test_going_down_branch_governs_its_statements(elevator):
    deps = golden.CONTROL_DEPENDENCES
    assert ("S11", "S16", "false") in deps
    assert ("S11", "S17", "false") in deps


def _region(deps, root, branch):
    out = {d for g, d, b in deps if g == root and b == branch}
    changed = True
    while changed:
        changed = False
        for g, d, _ in deps:
            if g in out and d not in out and d != g:
                out.add(d)
                changed = True
    return out


def test_no_cond_no_branch_dependences():
    pdt = compute_postdominators(chain())
    assert derive_control_dependences(chain(), pdt) == []


def test_diamond_arms_depend_join_does_not():
    m = diamond()
    triples = as_triples(derive_control_dependences(m, compute_postdominators(m)))
    assert triples == {("S1", "S2", "true"), ("S1", "S3", "false")}


def test_random_cfgs_match_oracle():
    rng = Random(23)
    for _ in range(40):
        m = random_model(rng, max_nodes=30)
        pdt = compute_postdominators(m)
        assert as_triples(derive_control_dependences(m, pdt)) == oracle_control_dependences(m)


def test_dependent_never_strictly_postdominates_governing():
    rng = Random(5)
    models = [random_model(rng, max_nodes=25) for _ in range(20)]
    for m in models:
        pdt = compute_postdominators(m)
        for e in derive_control_dependences(m, pdt):
            assert not (
                e.dependent != e.governing and pdt.postdominates(e.dependent, e.governing)
            )


# ---------------------------------------------------------------------------
# data dependence

def as_dd_triples(edges):
    return {(e.def_node, e.use_node, e.var) for e in edges}


def test_elevator_data_dependences_frozen(elevator):
    assert as_dd_triples(derive_data_dependences(elevator)) == golden.DATA_DEPENDENCES


def test_loop_increment_reaches_loop_test(elevator):
    assert ("S15", "S12", "floor") in as_dd_triples(derive_data_dependences(elevator))


def test_straight_line_def_use():
    m = model_of(
        [
            stmt("S1", Assign("x", parse_expr("1"))),
            stmt("S2", Assign("y", parse_expr("x"), halt_after=True)),
        ],
        [CfgEdge("S1", "S2", EdgeLabel.UNCOND)],
        "S1",
        variables=(("x", 0), ("y", 0)),
    )
    assert as_dd_triples(derive_data_dependences(m)) == {("S1", "S2", "x")}


def test_second_definition_kills_first():
    m = model_of(
        [
            stmt("S1", Assign("x", parse_expr("1"))),
            stmt("S2", Assign("x", parse_expr("2"))),
            stmt("S3", Assign("y", parse_expr("x"), halt_after=True)),
        ],
        [CfgEdge("S1", "S2", EdgeLabel.UNCOND), CfgEdge("S2", "S3", EdgeLabel.UNCOND)],
        "S1",
        variables=(("x", 0), ("y", 0)),
    )
    assert as_dd_triples(derive_data_dependences(m)) == {("S2", "S3", "x")}


def test_random_models_match_dd_oracle():
    rng = Random(31)
    for _ in range(40):
        m = random_model(rng, max_nodes=25, with_assigns=True)
        assert as_dd_triples(derive_data_dependences(m)) == oracle_data_dependences(m)


# ---------------------------------------------------------------------------
# assembly, restriction, export

def test_unrestricted_assembly_covers_all_nodes(elevator):
    cidg = assemble_cidg(elevator)
    assert len(cidg.all_nodes) == len(elevator.nodes)


def test_restricted_to_control(control_cidg):
    assert control_cidg.all_nodes == golden.CONTROL_NODES
    annotations = {i: s.token for i, s in control_cidg.annotations}
    assert annotations == golden.ANNOTATIONS


def test_unknown_class(elevator):
    with pytest.raises(UnknownClass):
        assemble_cidg(elevator, "NoSuchClass")


def test_restriction_commutes_with_filtering(elevator, control_cidg):
    assert assemble_cidg(elevator).restricted_to("Control") == control_cidg


def test_every_non_entry_node_is_anchored(elevator):
    cidg = assemble_cidg(elevator)
    incoming = {e.dependent for e in cidg.cd_edges}
    for node_id in cidg.all_nodes:
        assert node_id == elevator.entry or node_id in incoming, node_id


def test_hierarchy_edges_present(elevator):
    cidg = assemble_cidg(elevator)
    uncond = {(e.governing, e.dependent) for e in cidg.cd_edges
              if e.branch is EdgeLabel.UNCOND}
    assert ("CE5", "E6") in uncond
    assert ("E6", "S7") in uncond
    assert ("C26", "CE5") in uncond
    assert ("E21", "S22") in uncond


def test_dot_export(control_cidg):
    dot = to_dot(control_cidg)
    assert dot.count('[label="') >= 16
    assert '"S13" [label="S13\\nGu"];' in dot
    assert '"S12" -> "S13" [label="true"];' in dot
    assert '"S15" -> "S12" [style=dashed, label="floor"];' in dot
    assert dot == to_dot(control_cidg)  # reproducible


def test_dd_edges_reference_model_nodes(elevator):
    cidg = assemble_cidg(elevator)
    ids = set(elevator.node_ids)
    for e in cidg.dd_edges:
        assert e.def_node in ids and e.use_node in ids
    for e in cidg.cd_edges:
        assert e.governing in ids and e.dependent in ids
