"""Neural detector: pattern encoder, temporal message propagation, fusion head."""

from cgescan.model.layers import (
    TmpOptions,
    fusion_forward,
    pattern_forward,
    tmp_message_phase,
    tmp_readout,
)
from cgescan.model.network import (
    VARIANT_NAMES,
    VARIANTS,
    CgeModel,
    ModelConfig,
    Sample,
    init_store,
    loss,
    parse_variant,
)
from cgescan.model.predict import DetectionResult, detect_function, predict
from cgescan.model.train import TrainResult, evaluate_split, train

__all__ = [
    "CgeModel",
    "DetectionResult",
    "ModelConfig",
    "Sample",
    "TmpOptions",
    "TrainResult",
    "VARIANTS",
    "VARIANT_NAMES",
    "detect_function",
    "evaluate_split",
    "fusion_forward",
    "init_store",
    "loss",
    "parse_variant",
    "pattern_forward",
    "predict",
    "tmp_message_phase",
    "tmp_readout",
    "train",
]
