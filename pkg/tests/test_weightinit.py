"""Variance formulas, samplers, and the variance-propagation property."""

import math

import numpy as np
import pytest

from conftest import layer_from_dense
from sparsespike import (SparseLayer, SparseMask, WeightInitParams,
                         balanced_random_mask, init_layer_weights,
                         kaiming_init, temporal_sparsity, weight_variance)


def _params(st=0.5, threshold=1.0, sparsities=(0.9, 0.9, 0.0), fans=(100, 100, 100)):
    return WeightInitParams(st, list(sparsities), list(fans), threshold)


def test_first_layer_variance_direct_substitution():
    p = _params(st=0.5, sparsities=[0.99, 0.9, 0.0], fans=[100, 100, 100])
    assert weight_variance(1, p) == pytest.approx(0.5 / (100 * 0.01))


def test_middle_layer_variance_numeric():
    p = _params()
    expected = (1.0 * math.sqrt(math.pi)
                / (math.sqrt(2.0) * math.exp(-0.5) * 100 * 0.1))
    got = weight_variance(2, p)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.20663, abs=1e-4)


def test_output_layer_variance_drops_sparsity_term():
    p = _params()
    assert weight_variance(3, p) == pytest.approx(weight_variance(2, p) / 10.0)
    assert weight_variance(3, p) == pytest.approx(0.020663, abs=1e-5)


def test_variance_halves_when_fan_doubles():
    p1 = _params(fans=[100, 100, 100])
    p2 = _params(fans=[200, 200, 200])
    for l in (1, 2, 3):
        assert weight_variance(l, p2) == pytest.approx(weight_variance(l, p1) / 2)


def test_full_sparsity_rejected_below_output():
    p = _params(sparsities=[1.0, 0.9, 0.0])
    with pytest.raises(ValueError, match="division by zero"):
        weight_variance(1, p)
    # the output layer never divides by (1 - sparsity)
    p_out = _params(sparsities=[0.9, 0.9, 1.0])
    assert weight_variance(3, p_out) > 0


def test_layer_index_range_checked():
    with pytest.raises(ValueError, match="outside"):
        weight_variance(0, _params())
    with pytest.raises(ValueError, match="outside"):
        weight_variance(4, _params())


def test_init_empty_mask_is_noop():
    layer = SparseLayer(SparseMask.empty(3, 3), np.zeros((3, 3)), 1.0, 0.5)
    init_layer_weights(layer, 1, _params(), seed=0)
    assert not layer.weights.any()


def test_sampler_statistics():
    mask = SparseMask.full(500, 400)        # 2e5 draws
    layer = SparseLayer(mask, np.zeros(mask.shape), 1.0, 0.5)
    p = _params(st=0.5, sparsities=[0.99, 0.9, 0.0], fans=[100, 100, 100])
    init_layer_weights(layer, 1, p, seed=123)
    w = layer.link_weights()
    assert abs(w.mean()) < 0.01
    assert w.var() == pytest.approx(0.5, rel=0.02)


def test_fixed_seed_reproduces_weight_stream():
    mask = balanced_random_mask(40, 60, 0.8, seed=2)
    a = SparseLayer(mask.copy(), np.zeros(mask.shape), 1.0, 0.5)
    b = SparseLayer(mask.copy(), np.zeros(mask.shape), 1.0, 0.5)
    init_layer_weights(a, 2, _params(fans=[60, 60, 60]), seed=77)
    init_layer_weights(b, 2, _params(fans=[60, 60, 60]), seed=77)
    assert np.array_equal(a.weights, b.weights)


def test_absent_links_untouched_by_init():
    mask = balanced_random_mask(10, 10, 0.5, seed=1)
    layer = SparseLayer(mask, np.zeros(mask.shape), 1.0, 0.5)
    init_layer_weights(layer, 1, _params(fans=[10, 10, 10], sparsities=[0.5, 0.5, 0]), seed=3)
    assert not layer.weights[~mask.dense].any()
    assert layer.weights[mask.dense].all()


def test_kaiming_fallback_variance():
    mask = SparseMask.full(400, 256)
    layer = SparseLayer(mask, np.zeros(mask.shape), 1.0, 0.5)
    kaiming_init(layer, seed=5)
    assert layer.link_weights().var() == pytest.approx(2.0 / 256, rel=0.05)


def test_variance_propagation_through_a_sparse_layer():
    # empirical Var[drive] vs n * (1 - S_s) * Var[W] * E[x^2] within 25%
    n, m, s_s, s_t = 512, 256, 0.9, 0.3
    threshold = 1.0
    p = WeightInitParams(s_t, [s_s, 0.0], [n, m], threshold)
    sigma2 = weight_variance(1, p)
    rng = np.random.default_rng(8)
    mask = balanced_random_mask(m, n, s_s, seed=9)
    layer = SparseLayer(mask, np.zeros(mask.shape), threshold, 0.5)
    init_layer_weights(layer, 1, p, seed=10)
    x = (rng.random((4000, n)) < s_t).astype(float)
    drive = x @ layer.weights.T
    predicted = n * (1 - s_s) * sigma2 * s_t
    assert drive.var() == pytest.approx(predicted, rel=0.25)


def test_temporal_sparsity_values():
    assert temporal_sparsity(np.zeros((2, 3, 4), dtype=np.uint8)) == 1e-4
    assert temporal_sparsity(np.ones((2, 3, 4), dtype=np.uint8)) == 1.0
    half = np.zeros((1, 2, 4), dtype=np.uint8)
    half[0, 0] = 1
    assert temporal_sparsity(half) == 0.5
    with pytest.raises(ValueError, match="empty"):
        temporal_sparsity(np.zeros((0, 1, 1)))


def test_params_validation():
    with pytest.raises(ValueError):
        WeightInitParams(0.0, [0.5], [10], 1.0)
    with pytest.raises(ValueError):
        WeightInitParams(0.5, [0.5], [10], 0.0)
    with pytest.raises(ValueError):
        WeightInitParams(0.5, [0.5, 0.5], [10], 1.0)
