from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgescan.errors import DimensionError, NoCoreNode
from cgescan.frontend import load_function
from cgescan.graph import (
    AccFlag,
    CallerClass,
    ContractGraph,
    EdgeType,
    GraphEdge,
    GraphNode,
    NodeRole,
    Role,
    SubRole,
    build_graph,
    node_feature,
)
from cgescan.normalize import AggregatedFeature, model_row, nearest_core_nodes, normalize_graph
from cgescan.patterns import VulnerabilityKind
from graphs import normalization_violations, random_graph

RE = VulnerabilityKind.REENTRANCY
ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden" / "fig3_withdraw.json"


def node(i, core, var=True):
    role = NodeRole(Role.CORE if core else Role.NORMAL, SubRole.VARIABLE if var else SubRole.INVOCATION)
    acc = AccFlag.NOT_APPLICABLE if var else AccFlag.NO_LIMITED
    caller = CallerClass.NOT_APPLICABLE if var else CallerClass.MSG_SENDER
    return GraphNode(i, f"x{i}", f"name{i}", role, acc, caller, i)


def graph(nodes, pairs):
    edges = tuple(GraphEdge(a, b, k + 1, EdgeType.FW) for k, (a, b) in enumerate(pairs))
    return ContractGraph(RE, tuple(nodes), edges, "g")


def fig3():
    return build_graph(load_function((ROOT / "corpus/figures/Vulnerable.sol").read_text(), "withdraw"), RE)


def test_fig3_nearest_for_amount():
    g = fig3()
    assert nearest_core_nodes(g, g.node("N1").id) == {g.node("C2").id, g.node("C3").id}


def test_single_adjacent_core():
    g = graph([node(0, True), node(1, False), node(2, True)], [(1, 0), (2, 2)])
    assert nearest_core_nodes(g, 1) == {0}


def test_chain_distance_two():
    g = graph([node(0, False), node(1, False), node(2, True)], [(0, 1), (1, 2)])
    assert nearest_core_nodes(g, 0) == {2}


def test_no_core_raises():
    g = graph([node(0, False)], [])
    with pytest.raises(NoCoreNode):
        nearest_core_nodes(g, 0)
    with pytest.raises(NoCoreNode):
        normalize_graph(g)


def test_fig3_normalization():
    g = fig3()
    ng = normalize_graph(g)
    c2, c3, n1, f = (g.node(x).id for x in ("C2", "C3", "N1", "F"))
    assert [n.label for n, _ in ng.nodes] == ["C1", "C2", "C3"]
    assert ng.merge_log == {n1: {c2, c3}, f: {g.node("C1").id, c3}}
    amount = node_feature(g.node("N1"))
    for _, agg in ng.nodes[1:]:
        assert np.array_equal(agg.in_var + agg.out_var, amount)
    assert not normalization_violations(g, ng)


def test_fig3_matches_golden():
    g = fig3()
    golden = json.loads(GOLDEN.read_text())
    assert golden["graph"] == json.loads(json.dumps(g.to_json()))
    assert golden["normalized"] == json.loads(json.dumps(normalize_graph(g).to_json()))


def test_all_core_is_identity():
    g = graph([node(0, True), node(1, True, var=False)], [(0, 1), (1, 1)])
    ng = normalize_graph(g)
    assert [n for n, _ in ng.nodes] == list(g.nodes) and ng.edges == g.edges
    assert all(not p.any() for _, a in ng.nodes for p in a.parts()[1:])


def test_star_in_var():
    nodes = [node(0, True)] + [node(i, False) for i in (1, 2, 3)]
    g = graph(nodes, [(1, 0), (2, 0), (3, 0)])
    (_, agg), = normalize_graph(g).nodes
    assert np.array_equal(agg.in_var, sum(node_feature(n) for n in nodes[1:]))
    assert not agg.in_inv.any() and not agg.out_var.any() and not agg.out_inv.any()


def test_edge_away_counts_as_out():
    g = graph([node(0, True), node(1, False, var=False)], [(0, 1)])
    (_, agg), = normalize_graph(g).nodes
    assert np.array_equal(agg.out_inv, node_feature(g.nodes[1]))
    assert not agg.in_inv.any()


def test_unreachable_goes_to_lowest_core():
    g = graph([node(0, False), node(1, True), node(2, True)], [(1, 2)])
    assert nearest_core_nodes(g, 0) == {1}


def test_model_row_layout():
    own, inward, outward = np.arange(3.0), np.ones(3), np.full(3, 2.0)
    row = model_row(own, inward, outward, 10)
    assert row.tolist() == [0, 1, 2, 1, 1, 1, 2, 2, 2, 0]
    with pytest.raises(DimensionError):
        model_row(own, inward, outward, 8)
    agg = AggregatedFeature.of(own)
    assert np.array_equal(agg.row(9), model_row(own, np.zeros(3), np.zeros(3), 9))


def test_json_extension():
    out = normalize_graph(fig3()).to_json()
    assert {"aggregate", "merge_log"} <= set(out)
    assert set(out["aggregate"][0]) == {"id", "self", "in_var", "in_inv", "out_var", "out_inv"}


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_graph_invariants(seed):
    g = random_graph(np.random.default_rng(seed))
    assert normalization_violations(g, normalize_graph(g)) == []


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_all_core_random_graphs_unchanged(seed):
    g = random_graph(np.random.default_rng(seed), all_core=True)
    assert normalization_violations(g, normalize_graph(g)) == []
