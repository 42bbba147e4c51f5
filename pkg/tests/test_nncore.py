from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cleas import nncore
from cleas.errors import ConfigError, InvariantError, NumericError, ParseError
from cleas.nncore import functional as F
from cleas.nncore.network import Conv, Dense, Flatten
from cleas.nncore.params import ParamStore

from conftest import numeric_grad, rel_error


def naive_conv(x, w, b):
    n, c, h, wd = x.shape
    o, _, k, _ = w.shape
    out = np.zeros((n, o, h - k + 1, wd - k + 1))
    for a in range(n):
        for q in range(o):
            for i in range(h - k + 1):
                for j in range(wd - k + 1):
                    out[a, q, i, j] = np.sum(x[a, :, i:i + k, j:j + k] * w[q]) + b[q]
    return out


def test_conv_matches_loop_oracle(rng):
    x = rng.standard_normal((2, 3, 6, 6))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    np.testing.assert_allclose(F.conv2d_forward(x, w, b), naive_conv(x, w, b), rtol=1e-12, atol=1e-12)


def test_conv_rejects_bad_shapes(rng):
    with pytest.raises(ConfigError):
        F.conv2d_forward(rng.standard_normal((1, 2, 4, 4)), rng.standard_normal((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(ConfigError):
        F.conv2d_forward(rng.standard_normal((1, 1, 2, 2)), rng.standard_normal((1, 1, 3, 3)), np.zeros(1))


def test_softmax_cross_entropy_known_value():
    loss, d = F.softmax_cross_entropy(np.zeros((2, 4)), np.array([0, 3]))
    assert loss == pytest.approx(np.log(4.0), abs=1e-15)
    np.testing.assert_allclose(d.sum(axis=1), 0.0, atol=1e-15)


def _check_layout(layout, x, labels, rng, n_coords=100):
    params = nncore.init_params(layout, rng)
    for name in params:  # non-zero biases so every coordinate is exercised
        params.values[name] = params[name] + 0.05 * rng.standard_normal(params[name].shape)

    def loss():
        return nncore.loss_and_grad(params, layout, x, labels)[0]

    _, grads = nncore.loss_and_grad(params, layout, x, labels)
    names = list(params)
    worst = 0.0
    for _ in range(n_coords):
        name = names[rng.integers(len(names))]
        idx = tuple(rng.integers(s) for s in params[name].shape)
        num = numeric_grad(loss, params.values[name], idx)
        worst = max(worst, rel_error(grads[name][idx], num))
    return worst


def test_dense_gradients(rng):
    layout = [Dense("a", 7, 5), Dense("b", 5, 3, relu=False)]
    assert _check_layout(layout, rng.standard_normal((6, 7)), rng.integers(0, 3, 6), rng) < 1e-4


def test_conv_gradients(rng):
    layout = [Conv("c", 2, 3, 3), Flatten(), Dense("d", 3 * 4 * 4, 4, relu=False)]
    assert _check_layout(layout, rng.standard_normal((3, 2, 6, 6)), rng.integers(0, 4, 3), rng) < 1e-4


def test_frozen_entries_get_zero_gradient(rng):
    layout = [Dense("a", 4, 3), Dense("b", 3, 2, relu=False)]
    params = nncore.init_params(layout, rng)
    params.masks["a.w"][0, :] = False
    _, grads = nncore.loss_and_grad(params, layout, rng.standard_normal((5, 4)), rng.integers(0, 2, 5))
    assert np.all(grads["a.w"][0] == 0.0)


def test_forward_names_bad_layer(rng):
    layout = [Dense("first", 4, 3), Dense("second", 5, 2)]
    params = nncore.init_params([Dense("first", 4, 3), Dense("second", 3, 2)], rng)
    params.values["second.w"] = np.zeros((5, 2))
    with pytest.raises(ConfigError, match="second"):
        nncore.forward(params, layout, np.zeros((1, 4)))


def test_non_finite_loss_raises(rng):
    layout = [Dense("a", 2, 2, relu=False)]
    params = nncore.init_params(layout, rng)
    params.values["a.w"][0, 0] = np.inf
    with pytest.raises(NumericError) as info:
        nncore.loss_and_grad(params, layout, np.ones((2, 2)), np.array([0, 1]), batch_index=7)
    assert info.value.batch_index == 7


def test_labels_out_of_range(rng):
    layout = [Dense("a", 2, 2, relu=False)]
    with pytest.raises(ConfigError):
        nncore.loss_and_grad(nncore.init_params(layout, rng), layout, np.ones((1, 2)), np.array([2]))


@pytest.mark.parametrize("kind", ["sgd", "adam", "rmsprop"])
def test_optimizer_never_touches_frozen(kind, rng):
    layout = [Dense("a", 6, 4), Dense("b", 4, 3, relu=False)]
    params = nncore.init_params(layout, rng)
    params.masks["a.w"][:3] = False
    params.masks["b.b"][:] = False
    before = params.frozen_digest()
    opt = nncore.make_optimizer(kind, params, 0.1)
    x, y = rng.standard_normal((10, 6)), rng.integers(0, 3, 10)
    for _ in range(5):
        _, g = nncore.loss_and_grad(params, layout, x, y)
        nncore.step(opt, params, g)
    assert params.frozen_digest() == before
    assert "b.b" not in opt.slots


def test_adam_first_step_is_lr_sign():
    params = ParamStore()
    params.add("w", np.array([1.0, -2.0, 3.0]))
    grads = params.zeros_like()
    grads.values["w"] = np.array([0.5, -4.0, 0.0])
    opt = nncore.make_optimizer("adam", params, 0.01)
    nncore.step(opt, params, grads)
    # bias-corrected first Adam step is lr * g / (|g| + eps)
    np.testing.assert_allclose(params["w"], [0.99, -1.99, 3.0], atol=1e-9)


def test_missing_accumulator_is_an_invariant_error():
    params = ParamStore()
    params.add("w", np.zeros(2), False)
    opt = nncore.make_optimizer("sgd", params, 0.1)
    params.masks["w"][:] = True
    with pytest.raises(InvariantError):
        nncore.step(opt, params, params.zeros_like())


def test_unknown_optimizer():
    with pytest.raises(ConfigError):
        nncore.make_optimizer("lbfgs", ParamStore(), 0.1)


def test_container_round_trip(rng):
    store = ParamStore()
    store.add("layer.w", rng.standard_normal((3, 2, 2)), rng.random((3, 2, 2)) < 0.5)
    store.add("ü", np.array(7.0))
    back = nncore.from_bytes(nncore.to_bytes(store))
    assert list(back) == list(store)
    for name in store:
        assert np.array_equal(back[name], store[name])
        assert np.array_equal(back.masks[name], store.masks[name])
    assert back.digest() == store.digest()


def test_container_layout_is_little_endian():
    store = ParamStore()
    store.add("a", np.array([1.0]), np.array([True]))
    raw = nncore.to_bytes(store)
    assert raw == (b"\x01\x00\x00\x00" b"a" b"\x01\x00\x00\x00" b"\x01\x00\x00\x00"
                   + np.float64(1.0).astype("<f8").tobytes() + b"\x01")


def test_truncated_container_reports_offset(rng):
    store = ParamStore()
    store.add("w", rng.standard_normal(4))
    raw = nncore.to_bytes(store)
    with pytest.raises(ParseError) as info:
        nncore.from_bytes(raw[:-3])
    assert 0 < info.value.offset <= len(raw)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(1, 4)), min_size=1, max_size=4), st.integers(0, 2**31))
def test_container_round_trip_property(shapes, seed):
    rng = np.random.default_rng(seed)
    store = ParamStore()
    for i, shape in enumerate(shapes):
        store.add(f"p{i}", rng.standard_normal(shape), rng.random(shape) < 0.3)
    assert nncore.to_bytes(nncore.from_bytes(nncore.to_bytes(store))) == nncore.to_bytes(store)


def test_predict_batches_agree(rng):
    layout = [Dense("a", 5, 4), Dense("b", 4, 3, relu=False)]
    params = nncore.init_params(layout, rng)
    x = rng.standard_normal((11, 5))
    np.testing.assert_array_equal(nncore.predict(params, layout, x, batch_size=3), nncore.forward(params, layout, x)[0])
