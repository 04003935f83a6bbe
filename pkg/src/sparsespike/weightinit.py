"""Sparsity-aware Gaussian weight initialization.

Initial weights are zero-mean normals whose variance folds in the temporal
activation sparsity of the input spikes (the fraction of neuron-timestep
slots carrying a spike, written "activity" below), the structural sparsity
of the layer, and the firing threshold, chosen so the drive variance is
carried across layers instead of collapsing at high sparsity:

    first layer:   sigma^2 = activity / (n * (1 - sparsity))
    middle layers: sigma^2 = threshold^2 * sqrt(pi) / (sqrt(2) * e^{-1/2} * n * (1 - sparsity))
    output layer:  sigma^2 = threshold^2 * sqrt(pi) / (sqrt(2) * e^{-1/2} * n)

with n the layer's input width.  The output layer drops the sparsity factor
because it stays fully connected.  A plain Kaiming-style fallback exists for
ablation runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masks import SparseLayer

# sqrt(pi) / (sqrt(2) * e^{-1/2}), the middle/output layer constant
_GAIN = math.sqrt(math.pi) / (math.sqrt(2.0) * math.exp(-0.5))


@dataclass
class WeightInitParams:
    """Everything the per-layer variance formula needs, for a whole network.

    temporal_sparsity is the fraction of input neuron-timestep slots carrying
    a spike; layer_sparsity and fan_in hold one value per layer (1-based
    layer indices elsewhere map to position l - 1 here).
    """

    temporal_sparsity: float
    layer_sparsity: list
    fan_in: list
    threshold: float

    def __post_init__(self):
        if not 0.0 < self.temporal_sparsity <= 1.0:
            raise ValueError(
                f"temporal sparsity must lie in (0, 1], got {self.temporal_sparsity}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if len(self.layer_sparsity) != len(self.fan_in):
            raise ValueError("layer_sparsity and fan_in must have equal length")
        if not self.fan_in:
            raise ValueError("need at least one layer")
        for n in self.fan_in:
            if n < 1:
                raise ValueError(f"fan-in must be >= 1, got {n}")
        for s in self.layer_sparsity:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"sparsity must lie in [0, 1], got {s}")

    @property
    def n_layers(self) -> int:
        return len(self.fan_in)


def weight_variance(layer_index: int, p: WeightInitParams) -> float:
    """Gaussian variance for 1-based layer_index under the scheme above."""
    if not 1 <= layer_index <= p.n_layers:
        raise ValueError(
            f"layer index {layer_index} outside 1..{p.n_layers}")
    n = p.fan_in[layer_index - 1]
    s_s = p.layer_sparsity[layer_index - 1]
    if layer_index == p.n_layers:
        return _GAIN * p.threshold ** 2 / n
    if s_s >= 1.0:
        raise ValueError(
            f"layer {layer_index} sparsity 1.0 leaves no links (division by zero)")
    if layer_index == 1:
        return p.temporal_sparsity / (n * (1.0 - s_s))
    return _GAIN * p.threshold ** 2 / (n * (1.0 - s_s))


def init_layer_weights(layer: SparseLayer, layer_index: int, p: WeightInitParams,
                       seed) -> SparseLayer:
    """Draw i.i.d. N(0, sigma^2) weights for every present link, in place.

    Absent links stay nonexistent.  The draw order is the row-major entry
    order, so a fixed seed reproduces the weight stream bit for bit.
    """
    sigma = math.sqrt(weight_variance(layer_index, p))
    rng = np.random.default_rng(seed)
    k = layer.mask.n_links
    if k:
        layer.weights[layer.mask.dense] = rng.normal(0.0, sigma, size=k)
    return layer


def kaiming_init(layer: SparseLayer, seed) -> SparseLayer:
    """Ablation fallback: N(0, 2 / fan_in) on present links, in place."""
    sigma = math.sqrt(2.0 / layer.n_inputs)
    rng = np.random.default_rng(seed)
    k = layer.mask.n_links
    if k:
        layer.weights[layer.mask.dense] = rng.normal(0.0, sigma, size=k)
    return layer


def temporal_sparsity(spikes) -> float:
    """Fraction of 1s in an encoded spike tensor, clamped to [1e-4, 1]."""
    spikes = np.asarray(spikes)
    if spikes.size == 0:
        raise ValueError("cannot estimate temporal sparsity of an empty tensor")
    return float(min(1.0, max(1e-4, spikes.mean())))
