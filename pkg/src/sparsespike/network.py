"""Feed-forward spiking networks: temporal forward pass and BPTT training.

Hidden layers run LIF dynamics over T discrete steps.  The output layer is
a non-spiking readout: its logits are the time-mean of the masked synaptic
drive, which keeps the classification head differentiable without choosing
a decoding threshold.  Gradients are backpropagated through time with a
surrogate spike derivative and are masked so sparsity is preserved in both
the forward and the backward pass.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO

import numpy as np

from .errors import CheckpointError, PercolationError
from .masks import SparseLayer, load_layer, save_layer
from .neuron import SurrogateSpec, soft_spike, surrogate_grad

NETWORK_MAGIC = b"SSNC"
NETWORK_VERSION = 1


@dataclass
class SnnNetwork:
    """Ordered sparse layers plus the temporal horizon T.

    betas records the hidden-width expansion factor per hidden layer, purely
    as bookkeeping for reports and checkpoints.
    """

    layers: list
    T: int
    betas: list = field(default_factory=list)

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"time steps must be >= 1, got {self.T}")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if not self.betas:
            self.betas = [1] * (len(self.layers) - 1)
        if len(self.betas) != len(self.layers) - 1:
            raise ValueError("need one expansion factor per hidden layer")
        if any(b < 1 for b in self.betas):
            raise ValueError("expansion factors must be >= 1")
        for l, (a, b) in enumerate(zip(self.layers[:-1], self.layers[1:])):
            if a.n_outputs != b.n_inputs:
                raise ValueError(
                    f"layer {l} output width {a.n_outputs} does not chain into "
                    f"layer {l + 1} input width {b.n_inputs}")
        if not self.layers[-1].is_output_layer:
            raise ValueError("last layer must be flagged as the output layer")
        if any(l.is_output_layer for l in self.layers[:-1]):
            raise ValueError("only the last layer may be the output layer")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_inputs

    @property
    def n_classes(self) -> int:
        return self.layers[-1].n_outputs

    @property
    def hidden_layers(self) -> list:
        return self.layers[:-1]

    def copy(self) -> "SnnNetwork":
        return SnnNetwork([l.copy() for l in self.layers], self.T, list(self.betas))

    def validate(self) -> None:
        for l in self.layers:
            l.validate()
        for a, b in zip(self.layers[:-1], self.layers[1:]):
            assert np.array_equal(a.row_active, b.col_active), \
                "active flags out of sync between adjacent layers"


@dataclass
class ForwardTrace:
    """Spike and membrane records of one forward pass.

    input_spikes is the network input (T, B, n0); hidden_spikes and
    potentials hold one (T, B, width) array per hidden layer.  active_counts
    lists the live neuron count of every recorded layer (input first), the
    denominator basis for firing rates.
    """

    input_spikes: np.ndarray
    hidden_spikes: list
    potentials: list | None
    active_counts: np.ndarray
    T: int
    batch: int

    @property
    def spike_counts(self) -> np.ndarray:
        counts = [int(self.input_spikes.sum())]
        counts += [int(s.sum()) for s in self.hidden_spikes]
        return np.asarray(counts, dtype=np.int64)


def _as_batched(spikes: np.ndarray):
    spikes = np.asarray(spikes)
    if spikes.ndim == 2:
        return spikes[:, None, :], True
    if spikes.ndim == 3:
        return spikes, False
    raise ValueError(f"spike tensor must be (T, features) or (T, batch, features), "
                     f"got shape {spikes.shape}")


def _check_input(net: SnnNetwork, spikes: np.ndarray) -> None:
    if spikes.shape[0] == 0:
        raise ValueError("spike tensor has zero time steps")
    if spikes.shape[0] != net.T:
        raise ValueError(
            f"input time dimension {spikes.shape[0]} does not match network T={net.T}")
    if spikes.shape[2] != net.n_inputs:
        raise ValueError(
            f"input feature dimension {spikes.shape[2]} does not match first layer "
            f"input width {net.n_inputs}")


def _run(net: SnnNetwork, x: np.ndarray, soft_width: float | None,
         keep_potentials: bool):
    """Unrolled pass shared by inference and training.

    Returns (logits, per-hidden-layer potentials, per-hidden-layer spikes,
    per-layer inputs).  When soft_width is set, spikes are the sigmoid
    relaxation instead of hard thresholds (gradient-check mode).
    """
    T, B, _ = x.shape
    layer_inputs = [x]
    potentials, spikes_out = [], []
    for layer in net.hidden_layers:
        m = layer.n_outputs
        v = np.zeros((B, m))
        z = np.zeros((B, m))
        vs = np.empty((T, B, m)) if keep_potentials else None
        zs = np.empty((T, B, m))
        xs = layer_inputs[-1]
        for t in range(T):
            v = (1.0 - z) * layer.decay * v + xs[t] @ layer.weights.T
            if soft_width is None:
                z = (v >= layer.threshold).astype(np.float64)
            else:
                z = soft_spike(v, layer.threshold, soft_width)
            if keep_potentials:
                vs[t] = v
            zs[t] = z
        potentials.append(vs)
        spikes_out.append(zs)
        layer_inputs.append(zs)
    out = net.layers[-1]
    drive_sum = layer_inputs[-1].sum(axis=0) @ out.weights.T
    logits = drive_sum / T
    return logits, potentials, spikes_out, layer_inputs


def forward(net: SnnNetwork, spikes, record_potentials: bool = True):
    """Run the T-step temporal pass; returns (logits, ForwardTrace)."""
    x, single = _as_batched(spikes)
    _check_input(net, x)
    xf = x.astype(np.float64)
    logits, potentials, zs, _ = _run(net, xf, None, record_potentials)
    trace = ForwardTrace(
        input_spikes=np.asarray(x, dtype=np.uint8),
        hidden_spikes=[z.astype(np.uint8) for z in zs],
        potentials=potentials if record_potentials else None,
        active_counts=np.asarray(
            [net.n_inputs] + [int(l.row_active.sum()) for l in net.hidden_layers],
            dtype=np.int64),
        T=net.T,
        batch=x.shape[1],
    )
    return (logits[0] if single else logits), trace


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _check_trainable(net: SnnNetwork) -> None:
    for l, layer in enumerate(net.layers[:-1]):
        if layer.mask.n_links == 0:
            raise PercolationError("percolated network: no trainable path")
    if net.layers[-1].mask.n_links == 0:
        raise PercolationError("percolated network: no trainable path")


def loss_and_grads(net: SnnNetwork, spikes, labels, spec: SurrogateSpec):
    """Cross-entropy loss and masked weight gradients for one batch.

    With spec.kind == "smooth-test" the forward pass itself uses the soft
    spike, so the analytic gradient is the exact derivative of the returned
    loss (finite-difference checkable); with "rectangular" the forward is
    the true binary dynamics and the window surrogate stands in for the
    step derivative.
    """
    x, _ = _as_batched(spikes)
    _check_input(net, x)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != x.shape[1]:
        raise ValueError(
            f"batch has {x.shape[1]} samples but {labels.shape[0]} labels")
    _check_trainable(net)

    soft_width = spec.width if spec.kind == "smooth-test" else None
    xf = x.astype(np.float64)
    logits, potentials, zs, layer_inputs = _run(net, xf, soft_width, True)
    T, B, _ = xf.shape

    probs = _softmax(logits)
    loss = float(-np.log(probs[np.arange(B), labels] + 1e-300).mean())

    dlogits = probs.copy()
    dlogits[np.arange(B), labels] -= 1.0
    dlogits /= B

    out = net.layers[-1]
    grads = [None] * len(net.layers)
    x_sum = layer_inputs[-1].sum(axis=0)
    grads[-1] = (dlogits.T @ x_sum) / T * out.mask.dense
    # same per-step credit flows to the readout input at every t
    dz_above_const = (dlogits @ out.weights) / T

    for l in range(len(net.hidden_layers) - 1, -1, -1):
        layer = net.layers[l]
        vs, zl, xs = potentials[l], zs[l], layer_inputs[l]
        dz_above = None if l == len(net.hidden_layers) - 1 else dz_next
        gW = np.zeros_like(layer.weights)
        dv_next = np.zeros((B, layer.n_outputs))
        dz_next = np.zeros((T, B, layer.n_inputs))
        for t in range(T - 1, -1, -1):
            g = surrogate_grad(vs[t], layer.threshold, spec)
            upstream = dz_above_const if dz_above is None else dz_above[t]
            # reset path: v_{t+1} depends on z_t through the (1 - z) factor
            dz_total = upstream - dv_next * layer.decay * vs[t]
            dv = dz_total * g + dv_next * (1.0 - zl[t]) * layer.decay
            gW += dv.T @ xs[t]
            dz_next[t] = dv @ layer.weights
            dv_next = dv
        grads[l] = gW * layer.mask.dense
    return loss, grads


def train_step(net: SnnNetwork, batch, lr: float, spec: SurrogateSpec) -> float:
    """One SGD step on a batch (spikes, labels); returns the batch loss.

    Only weights on present mask links are updated, so the topology is
    untouched and absent links stay exactly zero.
    """
    spikes, labels = batch
    loss, grads = loss_and_grads(net, spikes, labels, spec)
    if lr != 0.0:
        for layer, g in zip(net.layers, grads):
            layer.weights -= lr * g
    return loss


def evaluate(net: SnnNetwork, spikes, labels, chunk: int = 256) -> float:
    """Argmax accuracy over a spike tensor; deterministic given the encoding."""
    x, _ = _as_batched(spikes)
    _check_input(net, x)
    labels = np.asarray(labels, dtype=np.int64)
    n = x.shape[1]
    if n == 0:
        raise ValueError("cannot evaluate an empty dataset")
    if labels.shape[0] != n:
        raise ValueError(f"{n} samples but {labels.shape[0]} labels")
    correct = 0
    for start in range(0, n, chunk):
        part = x[:, start:start + chunk].astype(np.float64)
        logits, _, _, _ = _run(net, part, None, False)
        correct += int((logits.argmax(axis=1) == labels[start:start + chunk]).sum())
    return correct / n


def save_network(net: SnnNetwork, path) -> None:
    """Write the full network checkpoint: header + one block per layer."""
    with open(path, "wb") as f:
        f.write(NETWORK_MAGIC)
        f.write(struct.pack("<III", NETWORK_VERSION, net.T, len(net.layers)))
        f.write(struct.pack("<I", len(net.betas)))
        for b in net.betas:
            f.write(struct.pack("<I", b))
        for layer in net.layers:
            save_layer(layer, f)


def load_network(path) -> SnnNetwork:
    """Read a checkpoint written by save_network."""
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != NETWORK_MAGIC:
            raise CheckpointError(
                f"corrupt checkpoint: bad magic {magic!r}, expected {NETWORK_MAGIC!r}")
        header = f.read(16)
        if len(header) != 16:
            raise CheckpointError("corrupt checkpoint: truncated header")
        version, T, n_layers, n_betas = struct.unpack("<IIII", header)
        if version != NETWORK_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        raw = f.read(4 * n_betas)
        if len(raw) != 4 * n_betas:
            raise CheckpointError("corrupt checkpoint: truncated header")
        betas = list(struct.unpack(f"<{n_betas}I", raw)) if n_betas else []
        layers = [load_layer(f) for _ in range(n_layers)]
        trailing = f.read(1)
        if trailing:
            raise CheckpointError("corrupt checkpoint: trailing bytes")
    try:
        return SnnNetwork(layers, T, betas)
    except ValueError as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
