"""Forward and backward passes of every network block.

Each ``*_forward`` returns its output and a cache; the matching
``*_backward`` takes the cache and the upstream gradient, accumulates
parameter gradients into ``grads`` and returns the gradient of its inputs.
Parameters are read from any mapping of name to array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from cgescan.errors import EmptyGraph, ShapeError
from cgescan.graph import N_EDGE_TYPES
from cgescan.numerics import sigmoid, softmax, softmax_backward

Params = Mapping[str, np.ndarray]
Grads = dict[str, np.ndarray]


def _acc(grads: Grads, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = np.array(value, dtype=float)


def activate(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "softmax":
        return softmax(x)
    if kind == "sigmoid":
        return sigmoid(x)
    raise ValueError(f"unknown activation {kind!r}")


def activate_backward(y: np.ndarray, dy: np.ndarray, kind: str) -> np.ndarray:
    if kind == "softmax":
        return softmax_backward(y, dy)
    return dy * y * (1.0 - y)


def dropout_mask(rng: np.random.Generator | None, shape, rate: float) -> np.ndarray | None:
    """Inverted-dropout mask, or None when not training."""
    if rng is None or rate <= 0.0:
        return None
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


# pattern encoder --------------------------------------------------------

def pattern_forward(x: np.ndarray, p: Params, mask: np.ndarray | None = None):
    """Two tanh layers mapping the 30-value pattern vector to ``P_r``."""
    x = np.asarray(x, float)
    if x.shape != (p["phi.W1"].shape[1],):
        raise ShapeError(f"pattern vector has shape {x.shape}")
    h = np.tanh(p["phi.W1"] @ x + p["phi.b1"])
    hd = h * mask if mask is not None else h
    out = np.tanh(p["phi.W2"] @ hd + p["phi.b2"])
    return out, (x, h, hd, mask, out)


def pattern_backward(cache, dout: np.ndarray, p: Params, grads: Grads) -> np.ndarray:
    x, h, hd, mask, out = cache
    dz2 = dout * (1.0 - out * out)
    _acc(grads, "phi.W2", np.outer(dz2, hd))
    _acc(grads, "phi.b2", dz2)
    dhd = p["phi.W2"].T @ dz2
    dh = dhd * mask if mask is not None else dhd
    dz1 = dh * (1.0 - h * h)
    _acc(grads, "phi.W1", np.outer(dz1, x))
    _acc(grads, "phi.b1", dz1)
    return p["phi.W1"].T @ dz1


# temporal message propagation ------------------------------------------

@dataclass(frozen=True)
class TmpOptions:
    activation: str = "softmax"
    per_type_messages: bool = False


def _msg_weight(p: Params, t: int, opts: TmpOptions):
    if opts.per_type_messages:
        return p["tmp.W_msg"][t], p["tmp.b_msg"][t]
    return p["tmp.W_msg"], p["tmp.b_msg"]


def tmp_message_phase(feats: np.ndarray, edges, p: Params, opts: TmpOptions = TmpOptions()):
    """Propagate along ``edges`` (start row, end row, type) one edge per step.

    The end node's state becomes act(R tanh(U m + Z h_e + b1) + b2) with
    message m = W_msg [h_s ; onehot(type)] + b_msg.
    """
    H = np.array(feats, dtype=float)
    if H.ndim != 2 or H.shape[0] == 0:
        raise EmptyGraph("message phase needs at least one node")
    d = H.shape[1]
    if p["tmp.U"].shape != (d, d):
        raise ShapeError(f"hidden width {d} does not match parameters {p['tmp.U'].shape}")
    steps = []
    for s, e, t in edges:
        x = np.zeros(d + N_EDGE_TYPES)
        x[:d] = H[s]
        x[d + t] = 1.0
        W, b = _msg_weight(p, t, opts)
        m = W @ x + b
        h_prev = H[e].copy()
        hh = np.tanh(p["tmp.U"] @ m + p["tmp.Z"] @ h_prev + p["tmp.b1"])
        new = activate(p["tmp.R"] @ hh + p["tmp.b2"], opts.activation)
        H[e] = new
        steps.append((s, e, t, x, m, h_prev, hh, new))
    return H, (d, steps, opts)


def tmp_message_backward(cache, dH: np.ndarray, p: Params, grads: Grads) -> np.ndarray:
    """Gradient w.r.t. the initial features given the gradient of the final states."""
    d, steps, opts = cache
    dH = np.array(dH, dtype=float)
    for s, e, t, x, m, h_prev, hh, new in reversed(steps):
        dnew = dH[e].copy()
        dH[e] = 0.0
        dpre2 = activate_backward(new, dnew, opts.activation)
        _acc(grads, "tmp.R", np.outer(dpre2, hh))
        _acc(grads, "tmp.b2", dpre2)
        dpre1 = (p["tmp.R"].T @ dpre2) * (1.0 - hh * hh)
        _acc(grads, "tmp.U", np.outer(dpre1, m))
        _acc(grads, "tmp.Z", np.outer(dpre1, h_prev))
        _acc(grads, "tmp.b1", dpre1)
        dm = p["tmp.U"].T @ dpre1
        W, _ = _msg_weight(p, t, opts)
        if opts.per_type_messages:
            gW = np.zeros_like(p["tmp.W_msg"])
            gW[t] = np.outer(dm, x)
            gb = np.zeros_like(p["tmp.b_msg"])
            gb[t] = dm
            _acc(grads, "tmp.W_msg", gW)
            _acc(grads, "tmp.b_msg", gb)
        else:
            _acc(grads, "tmp.W_msg", np.outer(dm, x))
            _acc(grads, "tmp.b_msg", dm)
        dx = W.T @ dm
        dH[e] += p["tmp.Z"].T @ dpre1
        dH[s] += dx[:d]
    return dH


def _gate_forward(S: np.ndarray, p: Params, j: str, act: str):
    A1 = np.tanh(S @ p[f"read.W_{j}1"].T + p[f"read.b_{j}1"])
    out = activate(A1 @ p[f"read.W_{j}2"].T + p[f"read.b_{j}2"], act)
    return out, A1


def _gate_backward(S, A1, out, dout, p: Params, grads: Grads, j: str, act: str):
    dz2 = activate_backward(out, dout, act)
    _acc(grads, f"read.W_{j}2", dz2.T @ A1)
    _acc(grads, f"read.b_{j}2", dz2.sum(axis=0))
    dz1 = (dz2 @ p[f"read.W_{j}2"]) * (1.0 - A1 * A1)
    _acc(grads, f"read.W_{j}1", dz1.T @ S)
    _acc(grads, f"read.b_{j}1", dz1.sum(axis=0))
    return dz1 @ p[f"read.W_{j}1"]


def tmp_readout(h0: np.ndarray, hT: np.ndarray, p: Params, opts: TmpOptions = TmpOptions()):
    """G_r = FC(sum_i o_i * g_i) with g_i, o_i computed from [hT_i ; h0_i]."""
    h0, hT = np.asarray(h0, float), np.asarray(hT, float)
    if h0.shape != hT.shape:
        raise ShapeError(f"readout states differ in shape: {h0.shape} vs {hT.shape}")
    S = np.concatenate([hT, h0], axis=1)
    G, Ag = _gate_forward(S, p, "g", opts.activation)
    O, Ao = _gate_forward(S, p, "o", opts.activation)
    pooled = np.sum(O * G, axis=0)
    out = p["read.W_fc"] @ pooled + p["read.b_fc"]
    return out, (S, G, Ag, O, Ao, pooled, opts)


def tmp_readout_backward(cache, dout: np.ndarray, p: Params, grads: Grads):
    """Returns gradients w.r.t. (h0, hT)."""
    S, G, Ag, O, Ao, pooled, opts = cache
    _acc(grads, "read.W_fc", np.outer(dout, pooled))
    _acc(grads, "read.b_fc", dout)
    dpooled = p["read.W_fc"].T @ dout
    dG = O * dpooled
    dO = G * dpooled
    dS = _gate_backward(S, Ag, G, dG, p, grads, "g", opts.activation)
    dS += _gate_backward(S, Ao, O, dO, p, grads, "o", opts.activation)
    d = S.shape[1] // 2
    return dS[:, d:], dS[:, :d]


# fusion head -------------------------------------------------------------

def conv_pool_forward(v: np.ndarray, K: np.ndarray, bk: np.ndarray, pool: int):
    """Valid 1-D convolution (channels x width) then non-overlapping max pooling."""
    c, k = K.shape
    n = v.shape[0] - k + 1
    if n < pool:
        raise ShapeError(f"input of width {v.shape[0]} too short for kernel {k} and pool {pool}")
    windows = np.lib.stride_tricks.sliding_window_view(v, k)  # (n, k)
    Y = K @ windows.T + bk[:, None]  # (c, n)
    q = n // pool
    blocks = Y[:, : q * pool].reshape(c, q, pool)
    arg = np.argmax(blocks, axis=2)
    out = np.take_along_axis(blocks, arg[..., None], axis=2)[..., 0]
    return out.reshape(-1), (windows, arg, Y.shape, q, pool)


def conv_pool_backward(cache, dout: np.ndarray, K: np.ndarray, gK: str, gb: str,
                       grads: Grads) -> np.ndarray:
    windows, arg, (c, n), q, pool = cache
    dY = np.zeros((c, n))
    rows = np.repeat(np.arange(c), q)
    cols = (np.tile(np.arange(q), c) * pool + arg.reshape(-1))
    dY[rows, cols] = dout
    _acc(grads, gK, dY @ windows)
    _acc(grads, gb, dY.sum(axis=1))
    dwin = K.T @ dY  # (k, n)
    k = K.shape[1]
    dv = np.zeros(n + k - 1)
    for t in range(k):
        dv[t:t + n] += dwin[t]
    return dv


FC_LAYERS = ("fuse.fc1", "fuse.fc2", "fuse.fc3")


def fusion_forward(P: np.ndarray, G: np.ndarray, p: Params, pool: int = 2,
                   share_psi: bool = False, masks=None):
    """Score in (0, 1) plus the pre-sigmoid logit."""
    P, G = np.asarray(P, float), np.asarray(G, float)
    if P.shape != G.shape:
        raise ShapeError(f"fusion inputs differ in shape: {P.shape} vs {G.shape}")
    kg = "fuse.K_p" if share_psi else "fuse.K_g"
    bg = "fuse.bk_p" if share_psi else "fuse.bk_g"
    xp, cp = conv_pool_forward(P, p["fuse.K_p"], p["fuse.bk_p"], pool)
    xg, cg = conv_pool_forward(G, p[kg], p[bg], pool)
    h = np.concatenate([xp, xg])
    layers = []
    for i, name in enumerate(FC_LAYERS):
        a = np.tanh(p[name + ".W"] @ h + p[name + ".b"])
        mask = masks[i] if masks is not None else None
        hd = a * mask if mask is not None else a
        layers.append((h, a, mask))
        h = hd
    logit = float(p["fuse.out.W"] @ h + p["fuse.out.b"][0])
    score = float(sigmoid(logit))
    return score, logit, (cp, cg, xp.shape[0], layers, h, share_psi)


def fusion_backward(cache, dlogit: float, p: Params, grads: Grads):
    """Returns gradients w.r.t. (P, G) given d loss / d logit."""
    cp, cg, np_, layers, h_last, share_psi = cache
    _acc(grads, "fuse.out.W", dlogit * h_last)
    _acc(grads, "fuse.out.b", np.array([dlogit]))
    dh = dlogit * p["fuse.out.W"]
    for name, (h_in, a, mask) in zip(reversed(FC_LAYERS), reversed(layers)):
        da = dh * mask if mask is not None else dh
        dz = da * (1.0 - a * a)
        _acc(grads, name + ".W", np.outer(dz, h_in))
        _acc(grads, name + ".b", dz)
        dh = p[name + ".W"].T @ dz
    kg = "fuse.K_p" if share_psi else "fuse.K_g"
    bg = "fuse.bk_p" if share_psi else "fuse.bk_g"
    dP = conv_pool_backward(cp, dh[:np_], p["fuse.K_p"], "fuse.K_p", "fuse.bk_p", grads)
    dG = conv_pool_backward(cg, dh[np_:], p[kg], kg, bg, grads)
    return dP, dG


def bce(score_logit: float, label: int) -> float:
    """Binary cross-entropy evaluated stably from the logit."""
    z = score_logit
    return float(np.logaddexp(0.0, -z) if label else np.logaddexp(0.0, z))
