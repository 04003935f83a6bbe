"""Leaky integrate-and-fire dynamics and the surrogate spike derivative.

The membrane update is

    v'[j] = (1 - z_prev[j]) * decay * v[j] + (masked W x)[j]
    z[j]  = 1  iff  v'[j] >= threshold

so the post-spike reset to zero is realized by the (1 - z) factor on the
next step.  The step function has no usable derivative, so training
substitutes a surrogate: a rectangular window by default, or a sigmoid
derivative ("smooth-test") that exists solely so finite-difference gradient
checks are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .masks import SparseLayer

SURROGATE_KINDS = ("rectangular", "smooth-test")


@dataclass
class SurrogateSpec:
    """Which spike derivative to use and how wide it is."""

    kind: str = "rectangular"
    width: float = 0.5

    def __post_init__(self):
        if self.kind not in SURROGATE_KINDS:
            raise ValueError(f"unknown surrogate kind {self.kind!r}")
        if self.width <= 0:
            raise ValueError(f"surrogate width must be positive, got {self.width}")

    @classmethod
    def rectangular_for(cls, threshold: float) -> "SurrogateSpec":
        """Default window: half the firing threshold."""
        return cls("rectangular", 0.5 * threshold)


@dataclass
class LifState:
    """Membrane potentials and the previously emitted spikes of one layer."""

    v: np.ndarray
    z_prev: np.ndarray

    @classmethod
    def zeros(cls, width: int, batch: int | None = None) -> "LifState":
        shape = (width,) if batch is None else (batch, width)
        return cls(np.zeros(shape), np.zeros(shape))


def lif_step(layer: SparseLayer, x_t, state: LifState):
    """Advance one layer by one time step; returns (spikes, new state).

    Accepts a single input vector of length n or a batch (B, n); state
    shapes must match the corresponding output layout.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != layer.n_inputs:
        raise ValueError(
            f"input width {x_t.shape[-1]} does not match layer input width "
            f"{layer.n_inputs}")
    if state.v.shape[-1] != layer.n_outputs:
        raise ValueError(
            f"state width {state.v.shape[-1]} does not match layer output width "
            f"{layer.n_outputs}")
    drive = x_t @ layer.weights.T
    v_new = (1.0 - state.z_prev) * layer.decay * state.v + drive
    z = (v_new >= layer.threshold).astype(np.float64)
    return z, LifState(v_new, z)


def surrogate_grad(v, threshold: float, spec: SurrogateSpec):
    """Surrogate derivative of the spike nonlinearity at membrane value v.

    rectangular: 1 / (2 * width) inside |v - threshold| <= width, else 0.
    smooth-test: derivative of a sigmoid with slope 1/width centered at threshold.
    """
    v = np.asarray(v, dtype=np.float64)
    if spec.kind == "rectangular":
        out = np.where(np.abs(v - threshold) <= spec.width, 1.0 / (2.0 * spec.width), 0.0)
    else:
        s = soft_spike(v, threshold, spec.width)
        out = s * (1.0 - s) / spec.width
    return out if out.ndim else float(out)


def soft_spike(v, threshold: float, width: float):
    """Sigmoid relaxation of the step function, used by gradient checks."""
    return 1.0 / (1.0 + np.exp(-(np.asarray(v, dtype=np.float64) - threshold) / width))
