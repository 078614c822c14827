import numpy as np
import pytest
from loguru import logger

from vbnet.autodiff.checkpoint import load_checkpoint, save_checkpoint
from vbnet.autodiff.engine import (
    Value,
    clamp,
    concat,
    conv1d,
    embed_lookup,
    maxpool1d,
    mse,
    relu,
    sigmoid,
)
from vbnet.autodiff.gradcheck import check_primitives, grad_check, relative_error
from vbnet.autodiff.layers import MLP, Conv1d, Dense, LSTMCell, MaxPool1d
from vbnet.autodiff.optim import Adam, AdamState, adam_step
from vbnet.errors import IngestionError, ShapeError, TrainingError, UnitLookupError


def test_sigmoid_slope_at_zero():
    x = Value(0.0)
    sigmoid(x).backward()
    assert x.grad == pytest.approx(0.25)


def test_relu_of_negative():
    x = Value(-1.0)
    y = relu(x)
    y.backward()
    assert y.data == 0.0
    assert x.grad == 0.0


def test_clamp_subgradient():
    x = Value([-0.5, 0.0, 0.5, 1.0, 1.5])
    y = clamp(x)
    y.sum().backward()
    np.testing.assert_array_equal(y.data, [0.0, 0.0, 0.5, 1.0, 1.0])
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 1.0, 1.0, 0.0])


def test_conv_and_pool_shapes(rng):
    conv = Conv1d(1, 16, 3, rng, padding=1)
    x = Value(rng.normal(size=(2, 1, 24)))
    h = conv(x)
    assert h.shape == (2, 16, 24)
    assert MaxPool1d(2)(h).shape == (2, 16, 12)


def test_conv1d_matches_direct_sum(rng):
    x = rng.normal(size=(1, 2, 5))
    w = rng.normal(size=(3, 2, 3))
    b = rng.normal(size=3)
    out = conv1d(Value(x), Value(w), Value(b), padding=1).data
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1)))
    for o in range(3):
        for t in range(5):
            assert out[0, o, t] == pytest.approx(np.sum(xp[0, :, t : t + 3] * w[o]) + b[o])


def test_maxpool_drops_remainder():
    x = Value(np.arange(7.0).reshape(1, 1, 7))
    y = maxpool1d(x, 2)
    np.testing.assert_array_equal(y.data, [[[1.0, 3.0, 5.0]]])
    y.sum().backward()
    np.testing.assert_array_equal(x.grad, [[[0, 1, 0, 1, 0, 1, 0]]])


def test_shape_errors(rng):
    with pytest.raises(ShapeError):
        Value(np.ones((2, 3))) @ Value(np.ones((2, 3)))
    with pytest.raises(ShapeError):
        Value(np.ones((2, 3))) + Value(np.ones((4, 5)))
    with pytest.raises(ShapeError):
        concat([Value(np.ones((2, 3))), Value(np.ones((3, 3)))], axis=1)
    with pytest.raises(ShapeError):
        mse(Value(np.ones(3)), np.ones(4))
    with pytest.raises(ShapeError):
        conv1d(Value(np.ones((1, 2, 5))), Value(np.ones((3, 1, 3))), Value(np.zeros(3)))


def test_embedding_lookup_and_unknown_id():
    table = Value(np.arange(6.0).reshape(3, 2))
    rows = embed_lookup(table, [2, 0, 2])
    np.testing.assert_array_equal(rows.data, [[4, 5], [0, 1], [4, 5]])
    rows.sum().backward()
    np.testing.assert_array_equal(table.grad, [[1, 1], [0, 0], [2, 2]])
    with pytest.raises(UnitLookupError, match="unknown unit id 3"):
        embed_lookup(table, [3])


def test_shared_node_is_visited_once():
    x = Value(2.0)
    y = x * x
    z = y + y
    z.backward()
    assert x.grad == pytest.approx(8.0)


def test_numpy_operands_defer_to_values():
    x = Value(np.ones((2, 1)))
    y = np.full((2, 1), 3.0) - x
    assert isinstance(y, Value)
    y.sum().backward()
    np.testing.assert_array_equal(x.grad, [[-1.0], [-1.0]])


def test_grad_check_of_a_square():
    x = Value(3.0)
    assert grad_check(lambda: x * x, {"x": x}) < 1e-8


def test_grad_check_reports_the_fixed_step_error_near_a_kink():
    x = Value(1e-6)
    messages = []
    sink = logger.add(messages.append, level="INFO", format="{message}")
    try:
        err = grad_check(lambda: relu(x), {"x": x})
    finally:
        logger.remove(sink)
    # the step-1e-5 difference straddles the kink: 0.55 against 1
    assert err == pytest.approx(0.45 / 1.55)
    assert any("at step 1e-07" in m for m in messages)


def test_grad_check_dense_relu_mse(rng):
    layer = Dense(4, 3, rng)
    x = rng.normal(size=(5, 4))
    target = rng.normal(size=(5, 3))
    err = grad_check(lambda: mse(relu(layer(x)), target), layer.named_parameters())
    assert err < 1e-4


def test_grad_check_lstm_cell(rng):
    cell = LSTMCell(3, 4, rng)
    x = rng.normal(size=(2, 3))

    def loss():
        state = cell.initial_state(2)
        for _ in range(3):
            state = cell(Value(x), state)
        return state[0].sum()

    assert grad_check(loss, cell.named_parameters()) < 1e-4


def test_every_primitive_passes_the_gradient_check():
    errors = check_primitives(seed=1)
    assert {"add", "mul", "matmul", "conv1d", "maxpool1d", "relu", "sigmoid", "embed_lookup", "clamp", "concat", "mse"} <= set(errors)
    assert max(errors.values()) < 1e-4


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1.0, 1.0) == 0.0
    assert relative_error(1.0, -1.0) == pytest.approx(1.0)


def test_module_parameter_names_are_stable(rng):
    mlp = MLP([3, 5, 1], rng)
    assert list(mlp.named_parameters()) == [
        "layers.0.weight",
        "layers.0.bias",
        "layers.1.weight",
        "layers.1.bias",
    ]
    assert mlp.num_parameters() == 3 * 5 + 5 + 5 + 1


def test_state_dict_round_trip(rng):
    a, b = MLP([3, 4, 2], rng), MLP([3, 4, 2], rng)
    b.load_state_dict(a.state_dict())
    x = rng.normal(size=(2, 3))
    np.testing.assert_array_equal(a(x).data, b(x).data)
    with pytest.raises(ValueError):
        MLP([3, 5, 2], rng).load_state_dict(a.state_dict())


def test_adam_zero_gradient_keeps_params():
    params = {"w": np.array([1.0, -2.0])}
    state = AdamState(m={"w": np.array([0.5, 0.5])}, v={"w": np.array([1.0, 1.0])}, t=3)
    new, state2 = adam_step(params, {"w": np.zeros(2)}, state, lr=0.1)
    assert state2.t == 4
    np.testing.assert_allclose(state2.m["w"], 0.45)
    np.testing.assert_allclose(state2.v["w"], 0.999)
    # decayed first moment still moves the parameters
    assert not np.array_equal(new["w"], params["w"])
    fresh, _ = adam_step(params, {"w": np.zeros(2)}, AdamState(), lr=0.1)
    np.testing.assert_array_equal(fresh["w"], params["w"])


def test_adam_constant_gradient_step_tends_to_lr():
    params = {"w": np.array([0.0, 0.0])}
    grads = {"w": np.array([0.3, -5.0])}
    state = AdamState()
    for _ in range(200):
        before = params["w"]
        params, state = adam_step(params, grads, state, lr=0.01)
    np.testing.assert_allclose(params["w"] - before, [-0.01, 0.01], rtol=1e-6)


def test_adam_zero_lr_is_identity():
    params = {"w": np.array([1.0, 2.0])}
    new, _ = adam_step(params, {"w": np.array([3.0, -1.0])}, AdamState(), lr=0.0)
    np.testing.assert_array_equal(new["w"], params["w"])


def test_adam_rejects_non_finite_gradient():
    with pytest.raises(TrainingError, match="'w'"):
        adam_step({"w": np.zeros(2)}, {"w": np.array([np.nan, 0.0])}, AdamState(), lr=0.1)


def test_adam_optimizer_fits_a_line(rng):
    layer = Dense(1, 1, rng)
    x = np.linspace(-1, 1, 20)[:, None]
    y = 2.0 * x - 0.5
    opt = Adam(layer.named_parameters(), lr=0.05)
    for _ in range(1500):
        opt.zero_grad()
        loss = mse(layer(x), y)
        loss.backward()
        opt.step()
    assert float(loss.data) < 1e-4
    assert layer.weight.data[0, 0] == pytest.approx(2.0, abs=0.02)


@pytest.mark.parametrize("suffix", [".msgpack", ".json"])
def test_checkpoint_formats(tmp_path, rng, suffix):
    params = {"a.weight": rng.normal(size=(3, 2)), "a.bias": rng.normal(size=(2,))}
    path = save_checkpoint(tmp_path / f"model{suffix}", params, {"kind": "dense"})
    loaded, meta = load_checkpoint(path)
    assert meta == {"kind": "dense"}
    for name, value in params.items():
        np.testing.assert_array_equal(loaded[name], value)


def test_checkpoint_errors(tmp_path):
    with pytest.raises(IngestionError):
        load_checkpoint(tmp_path / "missing.msgpack")
    bad = tmp_path / "bad.json"
    bad.write_text('{"meta": {}}')
    with pytest.raises(IngestionError):
        load_checkpoint(bad)
