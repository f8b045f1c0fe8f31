from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from cgescan.errors import CheckpointMismatch, ConfigError, DataError, EmptyGraph, ShapeError
from cgescan.frontend import load_function
from cgescan.graph import EdgeType, Role, build_graph
from cgescan.model import CgeModel, ModelConfig, Sample, init_store, loss, predict, train
from cgescan.model import layers as L
from cgescan.model.network import parse_variant
from cgescan.numerics import ParameterStore, make_rng, softmax
from cgescan.patterns import VulnerabilityKind
from conftest import CORPUS
from gradcheck import check_instance, random_edges, small_config
from synth import make_samples

RE = VulnerabilityKind.REENTRANCY
BANK = (CORPUS / "figures" / "Bank.sol").read_text()
SHARING = (CORPUS / "figures" / "SharingVariable.sol").read_text()


def params(config=None, seed=0):
    return dict(init_store(config or ModelConfig(d=8, d_h=6, d_out=5, pattern_hidden=7,
                                                  fc_sizes=(6, 5, 4)), make_rng(seed)).params)


# pattern encoder --------------------------------------------------------

def test_pattern_zero_params_give_bias_activation():
    p = {k: np.zeros_like(v) for k, v in params().items()}
    p["phi.b2"] = np.linspace(-1, 1, 8)
    out, _ = L.pattern_forward(np.zeros(30), p)
    assert np.array_equal(out, np.tanh(p["phi.b2"]))


def test_pattern_forward_deterministic_and_shape_checked():
    p, x = params(), make_rng(1).integers(0, 2, 30).astype(float)
    assert L.pattern_forward(x, p)[0].tobytes() == L.pattern_forward(x, params())[0].tobytes()
    with pytest.raises(ShapeError):
        L.pattern_forward(np.zeros(29), p)


@pytest.mark.parametrize("seed", range(4))
def test_gradients_per_layer(seed):
    errors = check_instance(np.random.default_rng(100 + seed))
    assert max(errors.values()) < 1e-4, errors


@pytest.mark.parametrize("activation", ["softmax", "sigmoid"])
@pytest.mark.parametrize("per_type", [False, True])
def test_gradients_both_switches(activation, per_type):
    rng = np.random.default_rng(7)
    cfg = small_config(rng, activation=activation, per_type_messages=per_type)
    assert max(check_instance(rng, cfg).values()) < 1e-4


# message phase ----------------------------------------------------------

def test_no_edges_is_identity():
    feats = make_rng(2).normal(size=(3, 8))
    H, _ = L.tmp_message_phase(feats, [], params())
    assert np.array_equal(H, feats)


def test_two_node_step_by_hand():
    d = 2
    rng = make_rng(3)
    p = {
        "tmp.W_msg": rng.normal(0, 0.5, (d, d + 13)), "tmp.b_msg": rng.normal(0, 0.1, d),
        "tmp.U": rng.normal(0, 0.5, (d, d)), "tmp.Z": rng.normal(0, 0.5, (d, d)),
        "tmp.R": rng.normal(0, 0.5, (d, d)), "tmp.b1": rng.normal(0, 0.1, d),
        "tmp.b2": rng.normal(0, 0.1, d),
    }
    feats = np.array([[0.3, -0.2], [0.5, 0.1]])
    t = int(EdgeType.AG)
    H, _ = L.tmp_message_phase(feats, [(0, 1, t)], p)
    # scalar-by-scalar evaluation of the update
    x = [0.3, -0.2] + [1.0 if i == t else 0.0 for i in range(13)]
    m = [sum(p["tmp.W_msg"][r][c] * x[c] for c in range(15)) + p["tmp.b_msg"][r] for r in range(2)]
    hh = [math.tanh(sum(p["tmp.U"][r][c] * m[c] for c in range(2))
                    + sum(p["tmp.Z"][r][c] * feats[1][c] for c in range(2)) + p["tmp.b1"][r])
          for r in range(2)]
    z = [sum(p["tmp.R"][r][c] * hh[c] for c in range(2)) + p["tmp.b2"][r] for r in range(2)]
    e = [math.exp(v - max(z)) for v in z]
    expect = [v / sum(e) for v in e]
    assert H[1] == pytest.approx(expect, abs=1e-14)
    assert np.array_equal(H[0], feats[0])


def test_node_permutation_equivariance():
    rng = make_rng(4)
    p, feats = params(), rng.normal(size=(5, 8))
    edges = random_edges(rng, 5, 8)
    perm = rng.permutation(5)
    inv = np.argsort(perm)
    H, _ = L.tmp_message_phase(feats, edges, p)
    moved = [(int(inv[s]), int(inv[e]), t) for s, e, t in edges]
    Hp, _ = L.tmp_message_phase(feats[perm], moved, p)
    assert np.allclose(Hp, H[perm], atol=1e-15)


def test_edge_order_matters():
    rng = make_rng(5)
    p, feats = params(), rng.normal(size=(3, 8))
    edges = [(0, 1, 9), (1, 2, 9)]
    a, _ = L.tmp_message_phase(feats, edges, p)
    b, _ = L.tmp_message_phase(feats, edges[::-1], p)
    assert not np.allclose(a, b)


def test_message_phase_errors():
    with pytest.raises(EmptyGraph):
        L.tmp_message_phase(np.zeros((0, 8)), [], params())
    with pytest.raises(ShapeError):
        L.tmp_message_phase(np.zeros((2, 7)), [], params())


# readout ----------------------------------------------------------------

def test_single_node_readout_by_hand():
    p, rng = params(), make_rng(6)
    h0, hT = rng.normal(size=(1, 8)), rng.normal(size=(1, 8))
    s = np.concatenate([hT[0], h0[0]])
    g = softmax(p["read.W_g2"] @ np.tanh(p["read.W_g1"] @ s + p["read.b_g1"]) + p["read.b_g2"])
    o = softmax(p["read.W_o2"] @ np.tanh(p["read.W_o1"] @ s + p["read.b_o1"]) + p["read.b_o2"])
    out, _ = L.tmp_readout(h0, hT, p)
    assert np.allclose(out, p["read.W_fc"] @ (o * g) + p["read.b_fc"], atol=1e-15)


def test_duplicate_node_doubles_pooled_sum():
    p, rng = params(), make_rng(7)
    h0, hT = rng.normal(size=(1, 8)), rng.normal(size=(1, 8))
    _, one = L.tmp_readout(h0, hT, p)
    _, two = L.tmp_readout(np.repeat(h0, 2, 0), np.repeat(hT, 2, 0), p)
    assert np.allclose(two[5], 2 * one[5], rtol=1e-14, atol=1e-15)


def test_readout_shape_error():
    with pytest.raises(ShapeError):
        L.tmp_readout(np.zeros((2, 8)), np.zeros((3, 8)), params())


# fusion -----------------------------------------------------------------

def test_fusion_score_range_and_branch_asymmetry():
    rng = make_rng(8)
    changed = 0
    for i in range(20):
        p = params(seed=i)
        P, G = rng.normal(0, 3, 8), rng.normal(0, 3, 8)
        s, z, _ = L.fusion_forward(P, G, p)
        assert 0 < s < 1 and math.isfinite(z)
        changed += L.fusion_forward(G, P, p)[0] != s
    assert changed == 20


def test_fusion_shape_error():
    with pytest.raises(ShapeError):
        L.fusion_forward(np.zeros(8), np.zeros(7), params())


# loss -------------------------------------------------------------------

def test_loss_examples():
    assert loss(0.5, 0) == pytest.approx(math.log(2))
    assert loss(0.5, 1) == pytest.approx(math.log(2))
    assert loss(1 - 1e-12, 1) < 1e-11 and loss(1e-12, 0) < 1e-11
    assert loss(0.8, 1) == pytest.approx(0.2231435513, abs=1e-9)
    store = ParameterStore(l2=0.1)
    store.add("w", np.array([1.0, 2.0]))
    assert loss(0.8, 1, store) == pytest.approx(-math.log(0.8) + 0.05 * 5)
    with pytest.raises(ValueError):
        loss(1.0, 1)


def test_bce_matches_loss():
    for z in (-3.0, 0.2, 4.0):
        s = 1 / (1 + math.exp(-z))
        assert L.bce(z, 1) == pytest.approx(loss(s, 1)) and L.bce(z, 0) == pytest.approx(loss(s, 0))


# config -----------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(lr=0).validate()
    with pytest.raises(ConfigError):
        ModelConfig(dropout=1.0).validate()
    with pytest.raises(ConfigError):
        ModelConfig(activation="relu").validate()
    cfg = ModelConfig(variant="won", seed=3)
    assert ModelConfig.from_json(cfg.to_json()) == cfg
    assert parse_variant("CGE-WOG") == "wog"
    with pytest.raises(ConfigError):
        parse_variant("woz")


# training ---------------------------------------------------------------

def separable(n=20):
    return [s for s in make_samples(3, n, 0)]


def small(**kw) -> ModelConfig:
    return ModelConfig(**{"d": 64, "epochs": 50, **kw})


def test_training_fits_separable_set():
    samples = separable()
    result = train(samples, small())
    model = CgeModel(small(), result.store)
    acc = np.mean([(model.score(s) >= 0.5) == s.label for s in samples])
    assert acc == 1.0
    assert {"epoch", "split", "loss", "accuracy"} == set(result.log[0])


def test_zero_epochs_returns_initialization():
    cfg = small(epochs=0)
    got = train(separable(), cfg).store
    want = init_store(cfg, make_rng(cfg.seed))
    assert got.to_bytes() == want.to_bytes()


def test_training_is_deterministic():
    cfg = small(epochs=3)
    a = train(separable(), cfg).store.to_bytes()
    b = train(separable(), cfg).store.to_bytes()
    assert a == b


def test_training_errors():
    with pytest.raises(DataError):
        train([], small())
    bad = replace(separable()[0], patterns=np.zeros(12))
    with pytest.raises(DataError):
        train([bad], small())
    with pytest.raises(ConfigError):
        train(separable(), small(batch=0))


def test_short_circuit_samples_are_skipped():
    s = separable(2)
    empty = Sample(s[0].patterns, None, None, 0, "empty")
    model = CgeModel(small())
    assert model.score(empty) == 0.0 and model.logit(empty) is None
    train([empty] + s, small(epochs=1))


# variants ---------------------------------------------------------------

def test_wog_ignores_graph_and_woe_ignores_patterns():
    a, b = make_samples(11, 2, 2)[0], make_samples(12, 2, 2)[3]
    mixed_graph = replace(a, graph=b.graph, raw=b.raw)
    mixed_pattern = replace(a, patterns=b.patterns)
    wog = CgeModel(small(variant="wog"))
    woe = CgeModel(small(variant="woe"))
    cge = CgeModel(small())
    assert wog.score(a) == wog.score(mixed_graph)
    assert woe.score(a) == woe.score(mixed_pattern)
    assert cge.score(a) != cge.score(mixed_graph) and cge.score(a) != cge.score(mixed_pattern)


def test_won_reads_unnormalized_graph():
    sample = make_samples(13, 0, 2)[1]
    won, cge = CgeModel(small(variant="won")), CgeModel(small())
    assert won.graph_of(sample) is sample.raw and cge.graph_of(sample) is sample.graph
    assert len(sample.raw.nodes) > len(sample.graph.nodes) or sample.raw.merge_log == {}


# prediction -------------------------------------------------------------

def test_predict_bank_withdraw(reentrancy_checkpoint):
    store = ParameterStore.load(reentrancy_checkpoint)
    result = predict(BANK, "withdraw", RE, store)
    assert result.label and result.score >= 0.5
    assert result.pattern_report.flags and all(result.pattern_report.flags.values())
    out = result.to_json()
    assert list(out) == ["contract", "function", "kind", "score", "label", "patterns", "explanation"]


def test_predict_short_circuit(reentrancy_checkpoint):
    store = ParameterStore.load(reentrancy_checkpoint)
    src = "contract C { uint s; function f() public { s = 1; } }"
    result = predict(src, "f", RE, store)
    assert result.score == 0.0 and result.label is False
    assert result.explanation["reason"] == "no trigger construct"


def test_predict_kind_mismatch(reentrancy_checkpoint):
    store = ParameterStore.load(reentrancy_checkpoint)
    with pytest.raises(CheckpointMismatch):
        predict(BANK, "withdraw", VulnerabilityKind.TIMESTAMP, store)


def test_checkpoint_round_trip_scores(reentrancy_checkpoint, tmp_path):
    store = ParameterStore.load(reentrancy_checkpoint)
    again = tmp_path / "copy.ckpt"
    store.save(again)
    a = predict(BANK, "withdraw", RE, store).score
    b = predict(BANK, "withdraw", RE, ParameterStore.load(again)).score
    assert a.hex() == b.hex()


def test_sharing_variable_reward_is_core():
    g = build_graph(load_function(SHARING, "getBonusWithdraw"), RE)
    reward = [n for n in g.nodes if n.name.startswith("Reward")]
    assert reward and all(n.role.value is Role.CORE for n in reward)
    ids = {n.id for n in reward}
    touching = {e.etype for e in g.edges if e.start in ids or e.end in ids}
    # the += with a literal right-hand side is a self update, not a flow from another node
    assert EdgeType.AC in touching
