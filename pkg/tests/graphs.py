"""Random contract graphs and a Floyd-Warshall distance oracle for the normalization tests."""

from __future__ import annotations

import numpy as np

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
    node_feature,
)
from cgescan.patterns import VulnerabilityKind


def random_graph(rng: np.random.Generator, max_nodes: int = 9, all_core: bool = False,
                 min_core: int = 1) -> ContractGraph:
    n = int(rng.integers(1, max_nodes + 1))
    roles = []
    for i in range(n):
        r = rng.random()
        if all_core or r < 0.35:
            roles.append(NodeRole(Role.CORE, SubRole.INVOCATION if rng.random() < 0.5 else SubRole.VARIABLE))
        elif r < 0.9:
            roles.append(NodeRole(Role.NORMAL, SubRole.INVOCATION if rng.random() < 0.5 else SubRole.VARIABLE))
        else:
            roles.append(NodeRole(Role.FALLBACK, SubRole.FALLBACK_FN))
    for i in rng.permutation(n)[:min_core]:
        if roles[i].value is not Role.CORE:
            roles[i] = NodeRole(Role.CORE, SubRole.VARIABLE)
    nodes = []
    for i, role in enumerate(roles):
        inv = role.sub_role is SubRole.INVOCATION
        nodes.append(GraphNode(
            i, f"n{i}", f"name{int(rng.integers(0, 50))}", role,
            AccFlag.LIMITED if inv and rng.random() < 0.3 else (AccFlag.NO_LIMITED if inv else AccFlag.NOT_APPLICABLE),
            CallerClass.MSG_SENDER if inv else CallerClass.NOT_APPLICABLE, i))
    m = int(rng.integers(0, 2 * n + 1))
    edges = tuple(
        GraphEdge(int(rng.integers(0, n)), int(rng.integers(0, n)), k + 1,
                  EdgeType(int(rng.integers(0, 13))))
        for k in range(m))
    return ContractGraph(VulnerabilityKind.REENTRANCY, tuple(nodes), edges, "g")


def distances(graph: ContractGraph, directed: bool) -> np.ndarray:
    n = len(graph.nodes)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for e in graph.edges:
        d[e.start, e.end] = min(d[e.start, e.end], 1 if e.start != e.end else 0)
        if not directed:
            d[e.end, e.start] = d[e.start, e.end]
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return d


def oracle_nearest(graph: ContractGraph, node_id: int) -> frozenset[int]:
    d = distances(graph, directed=False)
    cores = [n.id for n in graph.nodes if n.is_core]
    best = min(d[node_id, c] for c in cores)
    if np.isinf(best):
        return frozenset({min(cores)})
    return frozenset(c for c in cores if d[node_id, c] == best)


def normalization_violations(graph: ContractGraph, normalized) -> list[str]:
    """Every broken normalization invariant, as messages; empty when all hold."""
    bad = []
    if len(normalized.edges) != len(graph.edges):
        bad.append("edge count changed")
    if sorted(e.order for e in normalized.edges) != sorted(e.order for e in graph.edges):
        bad.append("temporal orders changed")
    removed = [n.id for n in graph.nodes if not n.is_core]
    if set(normalized.merge_log) != set(removed):
        bad.append("merge_log keys differ from removed nodes")
    target = {n.id: n.id for n in graph.nodes if n.is_core}
    for r in removed:
        want = oracle_nearest(graph, r)
        if normalized.merge_log.get(r) != want:
            bad.append(f"node {r}: receivers {normalized.merge_log.get(r)} != {want}")
        target[r] = min(want)
    if any(not n.is_core for n, _ in normalized.nodes):
        bad.append("non-core node survived")
    for old, new in zip(sorted(graph.edges, key=lambda e: e.order),
                        sorted(normalized.edges, key=lambda e: e.order)):
        if (new.start, new.end, new.etype) != (target[old.start], target[old.end], old.etype):
            bad.append(f"edge {old.order} rerouted wrongly")
    loops = sum(e.start == e.end for e in normalized.edges)
    if loops != sum(target[e.start] == target[e.end] for e in graph.edges):
        bad.append("self-loop count mismatch")
    # rebuild every aggregate from merge_log alone
    feats = {n.id: node_feature(n) for n in graph.nodes}
    for node, agg in normalized.nodes:
        var = sum((feats[r] for r, cs in normalized.merge_log.items()
                   if node.id in cs and graph.nodes[r].role.sub_role is SubRole.VARIABLE),
                  np.zeros_like(feats[node.id]))
        inv = sum((feats[r] for r, cs in normalized.merge_log.items()
                   if node.id in cs and graph.nodes[r].role.sub_role is not SubRole.VARIABLE),
                  np.zeros_like(feats[node.id]))
        if not np.array_equal(agg.self_part, feats[node.id]):
            bad.append(f"core {node.id}: self part changed")
        if not np.array_equal(agg.in_var + agg.out_var, var):
            bad.append(f"core {node.id}: variable aggregate mismatch")
        if not np.array_equal(agg.in_inv + agg.out_inv, inv):
            bad.append(f"core {node.id}: invocation aggregate mismatch")
    if not removed:
        same_nodes = [n for n, _ in normalized.nodes] == list(graph.nodes)
        zero = all(not p.any() for _, a in normalized.nodes for p in a.parts()[1:])
        if not (same_nodes and zero and normalized.edges == graph.edges):
            bad.append("all-core graph not left unchanged")
    return bad
