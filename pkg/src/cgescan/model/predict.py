"""End-to-end detection for one function and vulnerability kind."""

from __future__ import annotations

from dataclasses import dataclass

from cgescan.errors import CheckpointMismatch
from cgescan.frontend import load_function
from cgescan.frontend.ast import FunctionAst
from cgescan.model.network import CgeModel
from cgescan.numerics import ParameterStore
from cgescan.patterns import PatternReport, VulnerabilityKind

NO_TRIGGER = "no trigger construct"


@dataclass(frozen=True)
class DetectionResult:
    function: str
    kind: VulnerabilityKind
    score: float
    label: bool
    pattern_report: PatternReport
    explanation: dict
    contract: str = ""

    def to_json(self) -> dict:
        return {
            "contract": self.contract,
            "function": self.function,
            "kind": self.kind.value,
            "score": self.score,
            "label": self.label,
            "patterns": self.pattern_report.to_json(),
            "explanation": self.explanation,
        }


def checkpoint_kind(store: ParameterStore) -> VulnerabilityKind:
    return VulnerabilityKind.parse(store.hyperparameters.get("kind", ""))


def detect_function(fn: FunctionAst, kind: VulnerabilityKind, checkpoint: ParameterStore,
                    threshold: float | None = None) -> DetectionResult:
    # imported here to keep the model package free of an import cycle
    from cgescan.pipeline import prepare_sample

    if checkpoint_kind(checkpoint) is not kind:
        raise CheckpointMismatch(
            f"checkpoint was trained for {checkpoint_kind(checkpoint).value}, not {kind.value}")
    model = CgeModel.from_store(checkpoint)
    threshold = model.config.threshold if threshold is None else threshold
    sample = prepare_sample(fn, kind, 0, model.config.buckets)
    report, graph = sample.meta["report"], sample.meta["graph"]
    explanation: dict = {"evidence": report.to_json()["evidence"]}
    if sample.graph is None:
        score = 0.0
        explanation["reason"] = NO_TRIGGER
    else:
        score = model.score(sample)
    cores = [n for n in graph.nodes if n.is_core]
    explanation["graph"] = {
        "nodes": len(graph.nodes),
        "edges": len(graph.edges),
        "core": [{"label": n.label, "name": n.name} for n in cores],
    }
    return DetectionResult(fn.name or "fallback", kind, score, score >= threshold, report,
                           explanation, fn.contract)


def predict(source: str, function: str, kind: VulnerabilityKind, checkpoint: ParameterStore,
            contract: str | None = None, threshold: float | None = None) -> DetectionResult:
    fn = load_function(source, "" if function == "fallback" else function, contract)
    return detect_function(fn, kind, checkpoint, threshold)
