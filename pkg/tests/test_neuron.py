"""LIF step semantics and surrogate derivative values."""

import numpy as np
import pytest

from conftest import layer_from_dense
from sparsespike import LifState, SurrogateSpec, lif_step, surrogate_grad


def _single(w, threshold=1.0, decay=0.5):
    return layer_from_dense([[w]], threshold=threshold, decay=decay)


def test_subthreshold_decay_and_integrate():
    layer = _single(0.1)
    z, state = lif_step(layer, [1.0], LifState(np.array([0.6]), np.array([0.0])))
    assert state.v[0] == pytest.approx(0.4)
    assert z[0] == 0.0


def test_fires_when_accumulation_crosses_threshold():
    layer = _single(0.8)
    z, state = lif_step(layer, [1.0], LifState(np.array([0.6]), np.array([0.0])))
    assert state.v[0] == pytest.approx(1.1)
    assert z[0] == 1.0
    assert state.z_prev[0] == 1.0


def test_reset_via_one_minus_z_factor():
    layer = _single(1.0)
    z, state = lif_step(layer, [0.0], LifState(np.array([1.1]), np.array([1.0])))
    assert state.v[0] == 0.0
    assert z[0] == 0.0


def test_fires_exactly_at_threshold():
    layer = _single(1.0, threshold=1.0, decay=0.0)
    z, _ = lif_step(layer, [1.0], LifState(np.zeros(1), np.zeros(1)))
    assert z[0] == 1.0


def test_zero_input_decays_geometrically():
    layer = _single(1.0, decay=0.8, threshold=10.0)
    state = LifState(np.array([1.0]), np.array([0.0]))
    for t in range(1, 11):
        _, state = lif_step(layer, [0.0], state)
        assert state.v[0] == pytest.approx(0.8 ** t)


def test_spike_iff_threshold_crossed_randomized():
    rng = np.random.default_rng(5)
    layer = layer_from_dense(rng.normal(size=(6, 4)), threshold=0.3, decay=0.6)
    state = LifState(rng.normal(size=6), np.zeros(6))
    for _ in range(50):
        x = (rng.random(4) < 0.5).astype(float)
        z, state = lif_step(layer, x, state)
        assert np.array_equal(z, (state.v >= layer.threshold).astype(float))
        assert set(np.unique(z)).issubset({0.0, 1.0})


def test_dimension_mismatch_errors():
    layer = _single(1.0)
    with pytest.raises(ValueError, match="input width"):
        lif_step(layer, [1.0, 2.0], LifState(np.zeros(1), np.zeros(1)))
    with pytest.raises(ValueError, match="state width"):
        lif_step(layer, [1.0], LifState(np.zeros(2), np.zeros(2)))


def test_batched_step():
    layer = layer_from_dense(np.eye(3), threshold=0.5, decay=0.0)
    x = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    z, state = lif_step(layer, x, LifState(np.zeros((2, 3)), np.zeros((2, 3))))
    assert z.shape == (2, 3)
    assert np.array_equal(z, x)


def test_rectangular_surrogate_values():
    spec = SurrogateSpec("rectangular", 0.5)
    assert surrogate_grad(1.0, 1.0, spec) == pytest.approx(1.0)
    assert surrogate_grad(2.0, 1.0, spec) == 0.0
    assert surrogate_grad(1.5, 1.0, spec) == pytest.approx(1.0)  # window edge
    assert surrogate_grad(1.5000001, 1.0, spec) == 0.0


def test_smooth_surrogate_is_sigmoid_derivative():
    spec = SurrogateSpec("smooth-test", 1.0)
    assert surrogate_grad(1.0, 1.0, spec) == pytest.approx(0.25)
    narrow = SurrogateSpec("smooth-test", 0.25)
    assert surrogate_grad(1.0, 1.0, narrow) == pytest.approx(1.0)


def test_surrogate_spec_validation():
    with pytest.raises(ValueError):
        SurrogateSpec("rectangular", 0.0)
    with pytest.raises(ValueError):
        SurrogateSpec("triangle", 1.0)
    assert SurrogateSpec.rectangular_for(2.0).width == 1.0
