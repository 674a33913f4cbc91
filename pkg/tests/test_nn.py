"""Dense network: initialization, forward, losses, gradients, optimizers,
and the binary checkpoint format."""

import struct

import numpy as np
import pytest

from learn2mix.errors import DimensionMismatch, InvalidSize, NonFiniteLoss
from learn2mix.nn import (
    AdamState,
    DenseNet,
    Layer,
    LossKind,
    adam_step,
    classification_net,
    forward,
    init_dense,
    load_checkpoint,
    loss_and_grad,
    per_sample_losses,
    regression_net,
    save_checkpoint,
    sgd_step,
    true_class_probabilities,
)

from _util import ReferenceAdam, gradcheck, min_relu_margin, tiny_blobs


def _zero_net(dims, activations):
    layers = tuple(
        Layer(np.zeros((o, i)), np.zeros(o), act)
        for i, o, act in zip(dims, dims[1:], activations)
    )
    return DenseNet(layers)


# ---------------------------------------------------------------------------
# structure and initialization


def test_layer_and_net_validation():
    with pytest.raises(DimensionMismatch):
        Layer(np.zeros((2, 3)), np.zeros(3), "relu")
    with pytest.raises(InvalidSize):
        Layer(np.zeros((2, 3)), np.zeros(2), "tanh")
    with pytest.raises(NonFiniteLoss):
        Layer(np.full((1, 1), np.inf), np.zeros(1), "identity")
    with pytest.raises(InvalidSize):
        DenseNet(())
    l1 = Layer(np.zeros((4, 2)), np.zeros(4), "relu")
    l2 = Layer(np.zeros((1, 3)), np.zeros(1), "identity")
    with pytest.raises(DimensionMismatch):
        DenseNet((l1, l2))
    sm = Layer(np.zeros((4, 2)), np.zeros(4), "softmax")
    with pytest.raises(InvalidSize):
        DenseNet((sm, Layer(np.zeros((1, 4)), np.zeros(1), "identity")))


def test_net_properties():
    net = _zero_net([3, 5, 2], ["relu", "identity"])
    assert net.input_dim == 3 and net.output_dim == 2
    assert net.num_params == (5 * 3 + 5) + (2 * 5 + 2)


def test_init_dense_bounds_and_determinism():
    net = init_dense([9, 16, 4], ["relu", "softmax"], seed=3)
    for layer, fan_in in zip(net.layers, [9, 16]):
        bound = 1.0 / np.sqrt(fan_in)
        assert np.abs(layer.weights).max() <= bound
        assert np.abs(layer.bias).max() <= bound
        # a uniform draw this wide almost surely uses most of the range
        assert np.abs(layer.weights).max() > 0.8 * bound
    again = init_dense([9, 16, 4], ["relu", "softmax"], seed=3)
    for a, b in zip(net.layers, again.layers):
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)
    other = init_dense([9, 16, 4], ["relu", "softmax"], seed=4)
    assert not np.array_equal(net.layers[0].weights, other.layers[0].weights)


def test_init_dense_validation():
    with pytest.raises(InvalidSize):
        init_dense([4], [], seed=0)
    with pytest.raises(InvalidSize):
        init_dense([4, 2], ["relu", "identity"], seed=0)


def test_architecture_helpers():
    reg = regression_net(7, seed=1, hidden=16)
    assert [l.weights.shape for l in reg.layers] == [(16, 7), (1, 16)]
    assert [l.activation for l in reg.layers] == ["relu", "identity"]
    clf = classification_net(5, 3, seed=1, hidden=8)
    assert [l.weights.shape for l in clf.layers] == [(8, 5), (3, 8)]
    assert clf.layers[-1].activation == "softmax"


# ---------------------------------------------------------------------------
# forward


def test_forward_single_and_batch_agree():
    net = init_dense([4, 6, 2], ["relu", "identity"], seed=5)
    X = np.random.default_rng(0).normal(size=(3, 4))
    batch_out = forward(net, X)
    for i in range(3):
        np.testing.assert_allclose(forward(net, X[i]), batch_out[i], atol=1e-15)
    with pytest.raises(DimensionMismatch):
        forward(net, np.zeros(5))


def test_forward_zero_net_outputs_bias():
    layers = (Layer(np.zeros((2, 3)), np.array([1.5, -2.0]), "identity"),)
    net = DenseNet(layers)
    np.testing.assert_array_equal(forward(net, np.ones(3)), [1.5, -2.0])


def test_forward_softmax_rows_normalized():
    net = classification_net(4, 3, seed=2, hidden=6)
    out = forward(net, np.random.default_rng(1).normal(size=(10, 4)))
    np.testing.assert_allclose(out.sum(axis=1), np.ones(10), atol=1e-12)
    assert out.min() > 0.0


# ---------------------------------------------------------------------------
# loss values


def test_mse_value_on_zero_net():
    net = _zero_net([2, 1], ["identity"])
    Y = np.array([[1.0], [3.0]])
    loss, _ = loss_and_grad(net, (np.zeros((2, 2)), Y), LossKind.mse())
    assert loss == pytest.approx(np.mean(Y**2))


def test_cross_entropy_uniform_is_log_k():
    net = _zero_net([2, 4], ["softmax"])
    Y = np.eye(4)
    loss, _ = loss_and_grad(net, (np.zeros((4, 2)), Y), LossKind.cross_entropy())
    assert loss == pytest.approx(np.log(4.0), abs=1e-12)


def test_loss_head_pairing_enforced():
    clf = _zero_net([2, 3], ["softmax"])
    reg = _zero_net([2, 3], ["identity"])
    with pytest.raises(InvalidSize):
        loss_and_grad(clf, (np.zeros((1, 2)), np.eye(3)[:1]), LossKind.mse())
    with pytest.raises(InvalidSize):
        loss_and_grad(reg, (np.zeros((1, 2)), np.eye(3)[:1]), LossKind.cross_entropy())
    with pytest.raises(DimensionMismatch):
        loss_and_grad(clf, (np.zeros((1, 3)), np.eye(3)[:1]), LossKind.cross_entropy())
    with pytest.raises(DimensionMismatch):
        loss_and_grad(clf, (np.zeros((0, 2)), np.zeros((0, 3))), LossKind.cross_entropy())


def test_loss_kind_validation():
    with pytest.raises(InvalidSize):
        LossKind("hinge")
    with pytest.raises(InvalidSize):
        LossKind("focal")  # omega required
    with pytest.raises(InvalidSize):
        LossKind.focal(np.array([1.0, 0.0]))
    with pytest.raises(InvalidSize):
        LossKind.focal(np.array([1.0, 1.0]), focus=-1.0)


def test_focal_focus_zero_is_weighted_classwise_ce():
    # with focus 0, the loss is (1/k) * sum_i omega_i * mean CE of class i
    net = classification_net(2, 2, seed=9, hidden=4)
    ds = tiny_blobs(3, counts=(6, 3), d=2)
    X, Y, _ = ds.pooled()
    omega = np.array([0.5, 1.5])
    loss, _ = loss_and_grad(net, (X, Y), LossKind.focal(omega, focus=0.0))
    ce = per_sample_losses(net, (X, Y), LossKind.cross_entropy())
    by_class = [ce[:6].mean(), ce[6:].mean()]
    assert loss == pytest.approx((omega[0] * by_class[0] + omega[1] * by_class[1]) / 2)


def test_focal_value_matches_hand_formula():
    net = classification_net(2, 2, seed=9, hidden=4)
    ds = tiny_blobs(3, counts=(6, 3), d=2)
    X, Y, _ = ds.pooled()
    omega = np.array([0.5, 1.5])
    focus = 2.0
    ce = per_sample_losses(net, (X, Y), LossKind.cross_entropy())
    z = np.array([ce[:6].mean(), ce[6:].mean()])
    g = (1.0 - np.exp(-z)) ** focus * z
    loss, _ = loss_and_grad(net, (X, Y), LossKind.focal(omega, focus))
    assert loss == pytest.approx((omega * g).sum() / 2, abs=1e-12)


def test_focal_omega_length_checked():
    net = classification_net(2, 3, seed=0, hidden=4)
    batch = (np.zeros((1, 2)), np.eye(3)[:1])
    with pytest.raises(DimensionMismatch):
        loss_and_grad(net, batch, LossKind.focal(np.array([1.0, 1.0])))


def test_missing_class_contributes_nothing_to_focal():
    net = classification_net(2, 3, seed=4, hidden=4)
    X = np.random.default_rng(2).normal(size=(4, 2))
    Y = np.eye(3)[[0, 0, 1, 1]]  # class 2 absent
    omega = np.array([1.0, 1.0, 100.0])
    loss, _ = loss_and_grad(net, (X, Y), LossKind.focal(omega, 2.0))
    small = loss_and_grad(net, (X, Y), LossKind.focal(np.array([1.0, 1.0, 1e-6]), 2.0))[0]
    assert loss == pytest.approx(small)


# ---------------------------------------------------------------------------
# per-sample losses


def test_per_sample_mean_matches_batch_loss():
    reg = regression_net(3, seed=6, hidden=8)
    Xr = np.random.default_rng(3).normal(size=(7, 3))
    Yr = np.random.default_rng(4).normal(size=(7, 1))
    loss, _ = loss_and_grad(reg, (Xr, Yr), LossKind.mse())
    assert per_sample_losses(reg, (Xr, Yr), LossKind.mse()).mean() == pytest.approx(loss)

    clf = classification_net(3, 2, seed=6, hidden=8)
    Yc = np.eye(2)[np.random.default_rng(5).integers(0, 2, size=7)]
    loss_c, _ = loss_and_grad(clf, (Xr, Yc), LossKind.cross_entropy())
    ps = per_sample_losses(clf, (Xr, Yc), LossKind.cross_entropy())
    assert ps.mean() == pytest.approx(loss_c)
    # focal reporting falls back to the cross-entropy core
    ps_f = per_sample_losses(clf, (Xr, Yc), LossKind.focal(np.array([1.0, 1.0]), 2.0))
    np.testing.assert_array_equal(ps_f, ps)


def test_true_class_probabilities():
    net = _zero_net([2, 3], ["softmax"])
    X = np.zeros((2, 2))
    Y = np.eye(3)[[0, 2]]
    np.testing.assert_allclose(true_class_probabilities(net, X, Y), [1 / 3, 1 / 3])


# ---------------------------------------------------------------------------
# analytic gradients vs central differences


@pytest.mark.parametrize(
    "kind_name,focus", [("mse", None), ("ce", None), ("focal", 0.0), ("focal", 2.0)]
)
def test_gradcheck_small_nets(kind_name, focus):
    rng = np.random.default_rng(hash(kind_name) % 2**32 + int(focus or 0))
    checked = 0
    seed = 0
    while checked < 3:
        seed += 1
        if kind_name == "mse":
            net = init_dense([3, 5, 1], ["relu", "identity"], seed=seed)
            X = rng.normal(size=(6, 3))
            Y = rng.normal(size=(6, 1))
            kind = LossKind.mse()
        else:
            net = init_dense([3, 5, 2], ["relu", "softmax"], seed=seed)
            X = rng.normal(size=(6, 3))
            Y = np.eye(2)[rng.integers(0, 2, size=6)]
            if kind_name == "ce":
                kind = LossKind.cross_entropy()
            else:
                kind = LossKind.focal(np.array([0.7, 1.3]), focus)
        if min_relu_margin(net, X) < 1e-3:
            continue  # finite differences are unreliable at a relu kink
        assert gradcheck(net, (X, Y), kind) < 1e-5
        checked += 1


# ---------------------------------------------------------------------------
# optimizers


def test_adam_matches_reference_implementation():
    net = init_dense([3, 4, 2], ["relu", "softmax"], seed=11)
    state = AdamState.init(net, learning_rate=0.01)
    shapes = []
    for l in net.layers:
        shapes.extend([l.weights.shape, l.bias.shape])
    ref = ReferenceAdam(shapes, lr=0.01)
    rng = np.random.default_rng(8)
    X = rng.normal(size=(10, 3))
    Y = np.eye(2)[rng.integers(0, 2, size=10)]
    for _ in range(5):
        _, grads = loss_and_grad(net, (X, Y), LossKind.cross_entropy())
        params = []
        flat_grads = []
        for l, (gw, gb) in zip(net.layers, grads):
            params.extend([l.weights, l.bias])
            flat_grads.extend([gw, gb])
        want = ref.step(params, flat_grads)
        net, state = adam_step(net, grads, state)
        got = []
        for l in net.layers:
            got.extend([l.weights, l.bias])
        for g, w in zip(got, want):
            np.testing.assert_allclose(g, w, rtol=0, atol=1e-16)
    assert state.step == 5


def test_adam_state_validation():
    net = _zero_net([2, 1], ["identity"])
    with pytest.raises(InvalidSize):
        AdamState.init(net, learning_rate=0.0)


def test_sgd_step_exact():
    net = _zero_net([2, 2], ["identity"])
    grads = [(np.ones((2, 2)), np.full(2, 2.0))]
    out = sgd_step(net, grads, eta=0.5)
    np.testing.assert_array_equal(out.layers[0].weights, -0.5 * np.ones((2, 2)))
    np.testing.assert_array_equal(out.layers[0].bias, [-1.0, -1.0])


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_roundtrip_all_kinds(tmp_path):
    net = init_dense([4, 6, 3], ["relu", "softmax"], seed=17)
    kinds = [
        None,
        LossKind.mse(),
        LossKind.cross_entropy(),
        LossKind.focal(np.array([0.2, 1.0, 1.8]), 2.5),
    ]
    for i, kind in enumerate(kinds):
        path = tmp_path / f"net{i}.ckpt"
        save_checkpoint(net, path, kind)
        back, back_kind = load_checkpoint(path)
        for a, b in zip(net.layers, back.layers):
            np.testing.assert_array_equal(a.weights, b.weights)
            np.testing.assert_array_equal(a.bias, b.bias)
            assert a.activation == b.activation
        if kind is None:
            assert back_kind is None
        else:
            assert back_kind.name == kind.name
            if kind.name == "focal":
                np.testing.assert_array_equal(back_kind.omega, kind.omega)
                assert back_kind.focus == kind.focus


def test_checkpoint_binary_layout(tmp_path):
    net = _zero_net([2, 3], ["softmax"])
    path = tmp_path / "n.ckpt"
    save_checkpoint(net, path, LossKind.cross_entropy())
    blob = path.read_bytes()
    assert blob[:4] == b"L2MX"
    version, n_layers = struct.unpack_from("<II", blob, 4)
    assert version == 1 and n_layers == 1
    fan_in, fan_out, act = struct.unpack_from("<IIB", blob, 12)
    assert (fan_in, fan_out, act) == (2, 3, 2)  # softmax encodes as 2
    (loss_code,) = struct.unpack_from("<B", blob, 21)
    assert loss_code == 1  # cross_entropy
    # 3x2 weights + 3 bias as little-endian f8
    assert len(blob) == 22 + 8 * (6 + 3)


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(InvalidSize):
        load_checkpoint(path)


def test_checkpoint_rejects_unknown_version(tmp_path):
    net = _zero_net([2, 1], ["identity"])
    path = tmp_path / "v.ckpt"
    save_checkpoint(net, path)
    blob = bytearray(path.read_bytes())
    blob[4:8] = struct.pack("<I", 9)
    path.write_bytes(bytes(blob))
    with pytest.raises(InvalidSize):
        load_checkpoint(path)
