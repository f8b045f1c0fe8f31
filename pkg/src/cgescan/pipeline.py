"""Turn a resolved function into a model sample for one vulnerability kind."""

from __future__ import annotations

from cgescan.frontend.ast import FunctionAst
from cgescan.graph import DEFAULT_BUCKETS, build_graph
from cgescan.model.network import Sample
from cgescan.normalize import normalize_graph, unnormalized
from cgescan.patterns import VulnerabilityKind, encode_patterns, extract


def prepare_sample(fn: FunctionAst, kind: VulnerabilityKind, label: int = 0,
                   buckets: int = DEFAULT_BUCKETS, seed: int = 0, name: str = "") -> Sample:
    report = extract(fn, kind)
    graph = build_graph(fn, kind)
    normalized = normalize_graph(graph, buckets, seed) if graph.core_ids() else None
    return Sample(
        patterns=encode_patterns(report),
        graph=normalized,
        raw=unnormalized(graph, buckets, seed),
        label=int(label),
        name=name or f"{fn.contract}.{fn.name or 'fallback'}",
        meta={"report": report, "graph": graph},
    )
