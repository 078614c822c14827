import attrs
import numpy as np
import pytest

from vbnet.autodiff.optim import Adam
from vbnet.data.dataset import make_batch
from vbnet.errors import ConfigurationError, ShapeError
from vbnet.model.baselines import BASELINE_KINDS, baseline_forward, build_baseline
from vbnet.model.vbnet import VbNet, composite_loss


@pytest.fixture(scope="module")
def batch(small_split):
    _, split = small_split
    return make_batch(split.train_samples()[:4], split.stats)


@pytest.mark.parametrize("kind", BASELINE_KINDS)
def test_output_is_a_clipped_horizon(kind, batch, small_config):
    model = build_baseline(kind, 4, small_config, seed=0)
    pred = baseline_forward(batch, model)
    assert pred.shape == (4, 24)
    assert np.all((pred >= 0) & (pred <= 1))


@pytest.mark.parametrize("kind", BASELINE_KINDS)
def test_parameter_count_close_to_vbnet(kind, small_config):
    reference = VbNet(4, small_config).num_parameters()
    n = build_baseline(kind, 4, small_config).num_parameters()
    assert reference / 2 <= n <= 2 * reference


@pytest.mark.parametrize("kind", BASELINE_KINDS)
def test_horizon_indoor_temperature_is_not_read(kind, batch, small_config):
    model = build_baseline(kind, 4, small_config, seed=0)
    shifted = attrs.evolve(batch, S_true=batch.S_true + 0.3)
    np.testing.assert_array_equal(model.soc(batch).data, model.soc(shifted).data)


def test_wrong_window_is_rejected(batch, small_config):
    model = build_baseline("dense", 4, small_config)
    short = attrs.evolve(batch, x_env=batch.x_env[:, :-1])
    with pytest.raises(ShapeError):
        model.soc(short)


def test_unknown_kind(small_config):
    with pytest.raises(ConfigurationError, match="baseline"):
        build_baseline("transformer", 4, small_config)


@pytest.mark.parametrize("kind", ["dense", "conv"])
def test_fits_a_constant_target(kind, batch, small_config):
    model = build_baseline(kind, 4, small_config, seed=3)
    target = attrs.evolve(batch, S_true=np.full_like(batch.S_true, 0.4))
    opt = Adam(model.named_parameters(), lr=3e-3)
    for _ in range(600):
        opt.zero_grad()
        loss = composite_loss(model.soc(target), target.S_true, 0.0)
        loss.backward()
        opt.step()
    assert float(loss.data) < 1e-4
    np.testing.assert_allclose(baseline_forward(target, model), 0.4, atol=0.03)
