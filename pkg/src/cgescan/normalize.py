"""Node elimination: fold Normal and Fallback nodes into their nearest Core nodes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from cgescan.errors import DimensionError, NoCoreNode
from cgescan.graph import (
    DEFAULT_BUCKETS,
    FLAG_WIDTH,
    ContractGraph,
    GraphEdge,
    GraphNode,
    SubRole,
    node_feature,
)
from cgescan.patterns import VulnerabilityKind


@dataclass(frozen=True)
class AggregatedFeature:
    self_part: np.ndarray
    in_var: np.ndarray
    in_inv: np.ndarray
    out_var: np.ndarray
    out_inv: np.ndarray

    @classmethod
    def of(cls, own: np.ndarray) -> "AggregatedFeature":
        z = np.zeros_like(own)
        return cls(own.copy(), z, z.copy(), z.copy(), z.copy())

    def parts(self) -> tuple[np.ndarray, ...]:
        return (self.self_part, self.in_var, self.in_inv, self.out_var, self.out_inv)

    def row(self, dim: int) -> np.ndarray:
        """Model input row ``[self | in_var+in_inv | out_var+out_inv]`` padded to ``dim``."""
        return model_row(self.self_part, self.in_var + self.in_inv,
                         self.out_var + self.out_inv, dim)


def model_row(own: np.ndarray, inward: np.ndarray, outward: np.ndarray, dim: int) -> np.ndarray:
    w = own.shape[0]
    if dim < 3 * w:
        raise DimensionError(f"dim {dim} cannot hold three feature blocks of width {w}")
    out = np.zeros(dim)
    out[:w], out[w:2 * w], out[2 * w:3 * w] = own, inward, outward
    return out


@dataclass(frozen=True)
class NormalizedGraph:
    kind: VulnerabilityKind
    nodes: tuple[tuple[GraphNode, AggregatedFeature], ...]
    edges: tuple[GraphEdge, ...]
    merge_log: dict[int, frozenset[int]]
    function_name: str = ""

    def node_ids(self) -> list[int]:
        return [n.id for n, _ in self.nodes]

    def dense_edges(self) -> list[tuple[int, int, int]]:
        """``(start row, end row, edge type)`` in temporal order."""
        pos = {nid: i for i, nid in enumerate(self.node_ids())}
        return [(pos[e.start], pos[e.end], int(e.etype)) for e in sorted(self.edges, key=lambda e: e.order)]

    def features(self, dim: int) -> np.ndarray:
        return np.array([agg.row(dim) for _, agg in self.nodes]).reshape(len(self.nodes), dim)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "function": self.function_name,
            "nodes": [n.to_json() for n, _ in self.nodes],
            "edges": [e.to_json() for e in self.edges],
            "aggregate": [
                {
                    "id": n.id,
                    "self": agg.self_part.tolist(),
                    "in_var": agg.in_var.tolist(),
                    "in_inv": agg.in_inv.tolist(),
                    "out_var": agg.out_var.tolist(),
                    "out_inv": agg.out_inv.tolist(),
                }
                for n, agg in self.nodes
            ],
            "merge_log": {str(k): sorted(v) for k, v in sorted(self.merge_log.items())},
        }


def _adjacency(n: int, edges, directed: bool) -> list[set[int]]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for e in edges:
        if e.start == e.end:
            continue
        adj[e.start].add(e.end)
        if not directed:
            adj[e.end].add(e.start)
    return adj


def _bfs(adj: list[set[int]], source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def nearest_core_nodes(graph: ContractGraph, node_id: int) -> frozenset[int]:
    """Core nodes at minimal undirected hop distance from ``node_id``.

    A node with no path to any core node is credited to the lowest-id core
    node so that nothing is silently dropped.
    """
    cores = graph.core_ids()
    if not cores:
        raise NoCoreNode(f"graph of {graph.function_name!r} has no core node")
    dist = _bfs(_adjacency(len(graph.nodes), graph.edges, directed=False), node_id)
    reachable = [c for c in cores if dist[c] >= 0]
    if not reachable:
        return frozenset({min(cores)})
    best = min(dist[c] for c in reachable)
    return frozenset(c for c in reachable if dist[c] == best)


def normalize_graph(graph: ContractGraph, buckets: int = DEFAULT_BUCKETS,
                    seed: int = 0) -> NormalizedGraph:
    """Remove non-core nodes, aggregating their features and rerouting edges.

    A removed node r is credited to each of its nearest cores C exactly
    once: to the in-part when some shortest path runs from r to C along edge
    directions, otherwise to the out-part.  Edges touching r move to the
    lowest-id nearest core.
    """
    cores = graph.core_ids()
    if not cores:
        raise NoCoreNode(f"graph of {graph.function_name!r} has no core node")
    n = len(graph.nodes)
    undirected = _adjacency(n, graph.edges, directed=False)
    directed = _adjacency(n, graph.edges, directed=True)
    feats = {node.id: node_feature(node, buckets, seed) for node in graph.nodes}
    agg = {c: AggregatedFeature.of(feats[c]) for c in cores}

    merge_log: dict[int, frozenset[int]] = {}
    reroute: dict[int, int] = {c: c for c in cores}
    for node in graph.nodes:
        if node.is_core:
            continue
        receivers = nearest_core_nodes(graph, node.id)
        merge_log[node.id] = receivers
        reroute[node.id] = min(receivers)
        und = _bfs(undirected, node.id)
        fwd = _bfs(directed, node.id)
        is_var = node.role.sub_role is SubRole.VARIABLE
        for c in sorted(receivers):
            inward = und[c] >= 0 and fwd[c] == und[c]
            a = agg[c]
            if inward:
                (a.in_var if is_var else a.in_inv)[:] += feats[node.id]
            else:
                (a.out_var if is_var else a.out_inv)[:] += feats[node.id]

    edges = tuple(
        GraphEdge(reroute[e.start], reroute[e.end], e.order, e.etype) for e in graph.edges
    )
    nodes = tuple((graph.nodes[c], agg[c]) for c in cores)
    return NormalizedGraph(graph.kind, nodes, edges, merge_log, graph.function_name)


def unnormalized(graph: ContractGraph, buckets: int = DEFAULT_BUCKETS,
                 seed: int = 0) -> NormalizedGraph:
    """Every node kept with an empty aggregate; used by the no-normalization variant."""
    nodes = tuple(
        (node, AggregatedFeature.of(node_feature(node, buckets, seed))) for node in graph.nodes
    )
    return NormalizedGraph(graph.kind, nodes, graph.edges, {}, graph.function_name)


def feature_width(buckets: int = DEFAULT_BUCKETS) -> int:
    return buckets + FLAG_WIDTH
