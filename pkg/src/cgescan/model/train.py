"""Mini-batch Adam training with early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cgescan.errors import DataError
from cgescan.model.layers import bce
from cgescan.model.network import CgeModel, ModelConfig, Sample, init_store
from cgescan.numerics import ParameterStore, make_rng


@dataclass
class TrainResult:
    store: ParameterStore
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0


def evaluate_split(model: CgeModel, samples: Sequence[Sample]) -> tuple[float, float]:
    """Mean data loss over network-scored samples and accuracy over all samples."""
    losses, correct = [], 0
    threshold = model.config.threshold
    for s in samples:
        z = model.logit(s)
        if z is None:
            correct += s.label == 0
            continue
        losses.append(bce(z, s.label))
        score = 1.0 / (1.0 + np.exp(-z))
        correct += int(score >= threshold) == s.label
    loss = float(np.mean(losses)) if losses else 0.0
    return loss, correct / len(samples) if samples else 0.0


def train(samples: Sequence[Sample], config: ModelConfig,
          validation: Sequence[Sample] | None = None) -> TrainResult:
    """Train one model; deterministic for a fixed ``config.seed``.

    Samples without a core node are scored 0 by construction and do not
    contribute gradients.  Early stopping watches validation loss when a
    validation set is given, training loss otherwise, and restores the best
    parameters seen.
    """
    config.validate()
    if not samples:
        raise DataError("training set is empty")
    rng = make_rng(config.seed)
    store = init_store(config, rng)
    model = CgeModel(config, store)
    for s in list(samples) + list(validation or ()):
        model.check(s)
    active = [s for s in samples if s.graph is not None]
    result = TrainResult(store)
    if config.epochs == 0 or not active:
        return result

    best_loss, best_params, stale = np.inf, store.snapshot(), 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(active))
        for start in range(0, len(order), config.batch):
            batch = [active[i] for i in order[start:start + config.batch]]
            total: dict[str, np.ndarray] = {}
            for s in batch:
                score, logit, cache = model.forward(s, rng)
                grads = model.backward(cache, score - s.label)
                for k, g in grads.items():
                    total[k] = total[k] + g if k in total else g
            store.apply_gradients({k: g / len(batch) for k, g in total.items()}, config.lr)

        train_loss, train_acc = evaluate_split(model, samples)
        result.log.append({"epoch": epoch, "split": "train", "loss": train_loss,
                           "accuracy": train_acc})
        watched = train_loss
        if validation:
            val_loss, val_acc = evaluate_split(model, validation)
            result.log.append({"epoch": epoch, "split": "validation", "loss": val_loss,
                               "accuracy": val_acc})
            watched = val_loss
        if watched < best_loss:
            best_loss, best_params, stale = watched, store.snapshot(), 0
            result.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    store.restore(best_params)
    return result
