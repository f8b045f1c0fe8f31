"""Dense float64 helpers, seeded randomness, Adam and a versioned parameter store.

Arrays are plain numpy float64.  Random streams come from numpy's PCG64
bit generator, which is portable and reproducible for a given seed.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from cgescan.errors import CgeError, ShapeError

CHECKPOINT_VERSION = 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def affine(W: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    W, x, b = np.asarray(W, float), np.asarray(x, float), np.asarray(b, float)
    if W.ndim != 2 or x.shape != (W.shape[1],) or b.shape != (W.shape[0],):
        raise ShapeError(f"affine: W{W.shape} x{x.shape} b{b.shape}")
    return W @ x + b


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, float)
    z = np.exp(x - np.max(x, axis=axis, keepdims=True))
    return z / np.sum(z, axis=axis, keepdims=True)


def softmax_backward(y: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Gradient through softmax along the last axis given its output ``y``."""
    return y * (dy - np.sum(dy * y, axis=-1, keepdims=True))


def sigmoid(x):
    x = np.asarray(x, float)
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                    np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def log_sigmoid(x: float) -> float:
    return -float(np.logaddexp(0.0, -x))


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Uniform in ±sqrt(6 / (fan_in + fan_out)) over the last two axes."""
    fan_out, fan_in = shape[-2] if len(shape) > 1 else 1, shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def finite_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray,
                     eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.array(x, dtype=float)
    flat = x.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        hi = f(x)
        flat[i] = old - eps
        lo = f(x)
        flat[i] = old
        grad[i] = (hi - lo) / (2 * eps)
    return grad.reshape(x.shape)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, param: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(param, dtype=float), np.zeros_like(param, dtype=float))


def adam_step(param: np.ndarray, grad: np.ndarray, state: AdamState, lr: float,
              lam: float = 0.0) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update with ``lam * param`` added to the gradient."""
    if param.shape != grad.shape or state.m.shape != param.shape:
        raise ShapeError(f"adam_step: param{param.shape} grad{grad.shape} m{state.m.shape}")
    g = grad + lam * param
    step = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * g
    v = state.beta2 * state.v + (1 - state.beta2) * g * g
    m_hat = m / (1 - state.beta1 ** step)
    v_hat = v / (1 - state.beta2 ** step)
    new = param - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new, AdamState(m, v, step, state.beta1, state.beta2, state.eps)


@dataclass
class ParameterStore:
    """Named float64 parameters with per-parameter Adam state and an L2 coefficient."""

    l2: float = 1e-4
    params: dict[str, np.ndarray] = field(default_factory=dict)
    adam: dict[str, AdamState] = field(default_factory=dict)
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.params:
            raise CgeError(f"duplicate parameter {name!r}")
        self.params[name] = np.asarray(value, dtype=float).copy()
        self.adam[name] = AdamState.like(self.params[name])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> list[str]:
        return list(self.params)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def l2_penalty(self) -> float:
        return 0.5 * self.l2 * sum(float(np.sum(v * v)) for v in self.params.values())

    def apply_gradients(self, grads: Mapping[str, np.ndarray], lr: float) -> None:
        for name, g in grads.items():
            if name not in self.params:
                raise CgeError(f"gradient for unknown parameter {name!r}")
            self.params[name], self.adam[name] = adam_step(
                self.params[name], g, self.adam[name], lr, self.l2)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def restore(self, values: Mapping[str, np.ndarray]) -> None:
        for k, v in values.items():
            self.params[k] = v.copy()

    # checkpoint --------------------------------------------------------

    def to_bytes(self) -> bytes:
        names = self.names()
        header = {
            "version": CHECKPOINT_VERSION,
            "names": names,
            "shapes": [list(self.params[n].shape) for n in names],
            "hyperparameters": self.hyperparameters,
            "seed": self.seed,
            "l2": self.l2,
        }
        lines = [json.dumps(header, sort_keys=True)]
        for n in names:
            raw = np.ascontiguousarray(self.params[n], dtype="<f8").tobytes()
            lines.append(base64.b64encode(raw).decode("ascii"))
        return ("\n".join(lines) + "\n").encode("ascii")

    @classmethod
    def from_bytes(cls, data: bytes) -> "ParameterStore":
        lines = data.decode("ascii").splitlines()
        try:
            header = json.loads(lines[0])
        except (IndexError, json.JSONDecodeError) as exc:
            raise CgeError(f"malformed checkpoint header: {exc}") from None
        if header.get("version") != CHECKPOINT_VERSION:
            raise CgeError(f"unsupported checkpoint version {header.get('version')!r}")
        names, shapes = header["names"], header["shapes"]
        if len(lines) - 1 != len(names):
            raise CgeError("checkpoint parameter count does not match its header")
        store = cls(l2=header.get("l2", 0.0), hyperparameters=header["hyperparameters"],
                    seed=header["seed"])
        for name, shape, line in zip(names, shapes, lines[1:]):
            arr = np.frombuffer(base64.b64decode(line), dtype="<f8").astype(float)
            store.add(name, arr.reshape(shape))
        return store

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ParameterStore":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def flatten(arrays: Iterable[np.ndarray]) -> np.ndarray:
    return np.concatenate([np.ravel(a) for a in arrays])
