"""The fused detector: pattern encoder, temporal message propagation and the fusion head."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from cgescan.errors import ConfigError, DataError
from cgescan.graph import N_EDGE_TYPES
from cgescan.model import layers as L
from cgescan.normalize import NormalizedGraph
from cgescan.numerics import ParameterStore, glorot_uniform, make_rng, sigmoid
from cgescan.patterns import PATTERN_VECTOR_LENGTH, VulnerabilityKind

VARIANTS = ("cge", "wog", "woe", "won")
VARIANT_NAMES = {"cge": "CGE", "wog": "CGE-WOG", "woe": "CGE-WOE", "won": "CGE-WON"}


def parse_variant(text: str) -> str:
    key = text.strip().lower().removeprefix("cge-").removeprefix("cge_")
    if key in ("", "cge"):
        return "cge"
    if key not in VARIANTS:
        raise ConfigError(f"unknown variant {text!r}; expected one of {', '.join(VARIANTS)}")
    return key


@dataclass(frozen=True)
class ModelConfig:
    kind: str = VulnerabilityKind.REENTRANCY.value
    variant: str = "cge"
    d: int = 64
    d_h: int = 64
    d_out: int = 64
    pattern_hidden: int = 64
    conv_kernel: int = 3
    conv_channels: int = 4
    pool: int = 2
    fc_sizes: tuple[int, ...] = (64, 32, 16)
    lr: float = 0.002
    dropout: float = 0.2
    batch: int = 32
    l2: float = 1e-4
    epochs: int = 50
    patience: int = 10
    threshold: float = 0.5
    seed: int = 0
    buckets: int = 8
    activation: str = "softmax"
    per_type_messages: bool = False
    share_psi: bool = False

    def validate(self) -> "ModelConfig":
        problems = []
        try:
            VulnerabilityKind.parse(self.kind)
        except ValueError:
            problems.append(f"unknown kind {self.kind!r}")
        if self.variant not in VARIANTS:
            problems.append(f"unknown variant {self.variant!r}")
        for name in ("d", "d_h", "d_out", "pattern_hidden", "conv_kernel", "conv_channels",
                     "pool", "batch", "buckets"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be positive")
        if len(self.fc_sizes) != 3 or min(self.fc_sizes, default=0) < 1:
            problems.append("fc_sizes must list three positive widths")
        if not self.lr > 0:
            problems.append("lr must be positive")
        if not 0 <= self.dropout < 1:
            problems.append("dropout must lie in [0, 1)")
        if self.l2 < 0:
            problems.append("l2 must be non-negative")
        if self.epochs < 0 or self.patience < 1:
            problems.append("epochs must be >= 0 and patience >= 1")
        if not 0 < self.threshold < 1:
            problems.append("threshold must lie in (0, 1)")
        if self.activation not in ("softmax", "sigmoid"):
            problems.append("activation must be softmax or sigmoid")
        if self.d - self.conv_kernel + 1 < self.pool:
            problems.append("d too small for the convolution and pooling windows")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @property
    def vkind(self) -> VulnerabilityKind:
        return VulnerabilityKind.parse(self.kind)

    @property
    def tmp_options(self) -> L.TmpOptions:
        return L.TmpOptions(self.activation, self.per_type_messages)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["fc_sizes"] = list(self.fc_sizes)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        values = {k: v for k, v in data.items() if k in known}
        if "fc_sizes" in values:
            values["fc_sizes"] = tuple(values["fc_sizes"])
        return cls(**values)


@dataclass(frozen=True)
class Sample:
    """One labeled (function, kind) pair ready for the network.

    ``graph`` is None when the contract graph has no core node; such
    samples are scored 0 without running the network.
    """

    patterns: np.ndarray
    graph: NormalizedGraph | None
    raw: NormalizedGraph | None
    label: int
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)


def init_store(config: ModelConfig, rng: np.random.Generator | None = None) -> ParameterStore:
    config.validate()
    rng = rng if rng is not None else make_rng(config.seed)
    d, dh, do = config.d, config.d_h, config.d_out
    store = ParameterStore(l2=config.l2, hyperparameters=config.to_json(), seed=config.seed)

    store.add("phi.W1", glorot_uniform(rng, (config.pattern_hidden, PATTERN_VECTOR_LENGTH)))
    store.add("phi.b1", np.zeros(config.pattern_hidden))
    store.add("phi.W2", glorot_uniform(rng, (d, config.pattern_hidden)))
    store.add("phi.b2", np.zeros(d))
    if config.per_type_messages:
        store.add("tmp.W_msg", glorot_uniform(rng, (N_EDGE_TYPES, d, d + N_EDGE_TYPES)))
        store.add("tmp.b_msg", np.zeros((N_EDGE_TYPES, d)))
    else:
        store.add("tmp.W_msg", glorot_uniform(rng, (d, d + N_EDGE_TYPES)))
        store.add("tmp.b_msg", np.zeros(d))
    for name in ("U", "Z", "R"):
        store.add(f"tmp.{name}", glorot_uniform(rng, (d, d)))
    store.add("tmp.b1", np.zeros(d))
    store.add("tmp.b2", np.zeros(d))
    for j in ("g", "o"):
        store.add(f"read.W_{j}1", glorot_uniform(rng, (dh, 2 * d)))
        store.add(f"read.b_{j}1", np.zeros(dh))
        store.add(f"read.W_{j}2", glorot_uniform(rng, (do, dh)))
        store.add(f"read.b_{j}2", np.zeros(do))
    store.add("read.W_fc", glorot_uniform(rng, (d, do)))
    store.add("read.b_fc", np.zeros(d))
    c, k = config.conv_channels, config.conv_kernel
    branches = ("p",) if config.share_psi else ("p", "g")
    for br in branches:
        store.add(f"fuse.K_{br}", glorot_uniform(rng, (c, k)))
        store.add(f"fuse.bk_{br}", np.zeros(c))
    width = c * ((d - k + 1) // config.pool)
    fan_in = 2 * width
    for name, size in zip(L.FC_LAYERS, config.fc_sizes):
        store.add(name + ".W", glorot_uniform(rng, (size, fan_in)))
        store.add(name + ".b", np.zeros(size))
        fan_in = size
    store.add("fuse.out.W", glorot_uniform(rng, (1, fan_in))[0])
    store.add("fuse.out.b", np.zeros(1))
    return store


class CgeModel:
    """Forward/backward over single samples for one configuration and variant."""

    def __init__(self, config: ModelConfig, store: ParameterStore | None = None):
        self.config = config.validate()
        self.store = store if store is not None else init_store(config)

    @classmethod
    def from_store(cls, store: ParameterStore) -> "CgeModel":
        return cls(ModelConfig.from_json(store.hyperparameters), store)

    def graph_of(self, sample: Sample) -> NormalizedGraph | None:
        return sample.raw if self.config.variant == "won" else sample.graph

    def check(self, sample: Sample) -> None:
        if np.shape(sample.patterns) != (PATTERN_VECTOR_LENGTH,):
            raise DataError(f"{sample.name}: pattern vector has shape {np.shape(sample.patterns)}")
        if sample.label not in (0, 1):
            raise DataError(f"{sample.name}: label must be 0 or 1")
        g = self.graph_of(sample)
        if sample.graph is not None and (g is None or not g.nodes):
            raise DataError(f"{sample.name}: graph input missing for variant {self.config.variant}")

    def forward(self, sample: Sample, rng: np.random.Generator | None = None):
        """Return ``(score, logit, cache)``; ``rng`` enables training-time dropout."""
        cfg, p = self.config, self.store.params
        rate = cfg.dropout
        if cfg.variant == "woe":
            P, pcache = np.zeros(cfg.d), None
        else:
            mask = L.dropout_mask(rng, cfg.pattern_hidden, rate)
            P, pcache = L.pattern_forward(sample.patterns, p, mask)
        if cfg.variant == "wog":
            G, gcache = np.zeros(cfg.d), None
        else:
            ng = self.graph_of(sample)
            feats = ng.features(cfg.d)
            hT, mcache = L.tmp_message_phase(feats, ng.dense_edges(), p, cfg.tmp_options)
            G, rcache = L.tmp_readout(feats, hT, p, cfg.tmp_options)
            gcache = (mcache, rcache)
        masks = [L.dropout_mask(rng, size, rate) for size in cfg.fc_sizes]
        score, logit, fcache = L.fusion_forward(P, G, p, cfg.pool, cfg.share_psi, masks)
        return score, logit, (pcache, gcache, fcache)

    def backward(self, cache, dlogit: float) -> dict[str, np.ndarray]:
        p = self.store.params
        pcache, gcache, fcache = cache
        grads: dict[str, np.ndarray] = {}
        dP, dG = L.fusion_backward(fcache, dlogit, p, grads)
        if pcache is not None:
            L.pattern_backward(pcache, dP, p, grads)
        if gcache is not None:
            mcache, rcache = gcache
            _, dhT = L.tmp_readout_backward(rcache, dG, p, grads)
            L.tmp_message_backward(mcache, dhT, p, grads)
        return grads

    def logit(self, sample: Sample) -> float | None:
        """Eval-mode logit, or None for short-circuited samples."""
        if sample.graph is None:
            return None
        return self.forward(sample)[1]

    def score(self, sample: Sample) -> float:
        z = self.logit(sample)
        return 0.0 if z is None else float(sigmoid(z))


def loss(score: float, label: int, store: ParameterStore | None = None) -> float:
    """Binary cross-entropy plus the store's L2 penalty."""
    if not 0.0 < score < 1.0:
        raise ValueError(f"score {score!r} must lie strictly between 0 and 1")
    data = -np.log(score) if label else -np.log1p(-score)
    return float(data) + (store.l2_penalty() if store is not None else 0.0)
