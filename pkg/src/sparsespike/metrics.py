"""Spike, synaptic-operation, firing-rate, sparsity, and energy accounting.

A synaptic operation (SOP) is one presynaptic spike delivered across one
active outgoing synapse, so every spike costs the emitting neuron's
out-degree in the next layer's mask.  Energy is SOPs times a per-SOP cost,
1.5 pJ by default.  Link sparsity is reported over the sparsified
(non-output) layers, matching the training target; node sparsity is the
fraction of originally allocated hidden neurons now inactive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import ForwardTrace, SnnNetwork

DEFAULT_PJ_PER_SOP = 1.5


def count_sops(trace: ForwardTrace, net: SnnNetwork):
    """Total spikes and synaptic operations of one traced forward pass.

    Spike count covers the input tensor plus every hidden layer; SOPs charge
    each spike with the emitting neuron's out-degree in the mask it feeds.
    The non-spiking readout emits nothing.
    """
    if trace.input_spikes.shape[2] != net.n_inputs:
        raise ValueError(
            f"trace input width {trace.input_spikes.shape[2]} does not match "
            f"network input width {net.n_inputs}")
    if len(trace.hidden_spikes) != len(net.hidden_layers):
        raise ValueError(
            f"trace has {len(trace.hidden_spikes)} hidden layers, network has "
            f"{len(net.hidden_layers)}")
    feeds = [trace.input_spikes] + list(trace.hidden_spikes)
    spike_count = 0
    sops = 0
    for spikes, layer in zip(feeds, net.layers):
        if spikes.shape[2] != layer.n_inputs:
            raise ValueError(
                f"trace layer width {spikes.shape[2]} does not match mask input "
                f"width {layer.n_inputs}")
        per_source = spikes.sum(axis=(0, 1), dtype=np.int64)
        _, out_deg = layer.mask.degrees()
        spike_count += int(per_source.sum())
        sops += int(per_source @ out_deg)
    return spike_count, sops


def energy(sops: int, pj_per_sop: float = DEFAULT_PJ_PER_SOP) -> float:
    """Joules for a SOP count under a per-SOP picojoule cost."""
    if sops < 0:
        raise ValueError(f"SOP count must be non-negative, got {sops}")
    if pj_per_sop < 0:
        raise ValueError(f"per-SOP cost must be non-negative, got {pj_per_sop}")
    return sops * pj_per_sop * 1e-12


def firing_rate(trace: ForwardTrace) -> float:
    """Spikes per active neuron-timestep slot over all recorded layers."""
    slots = trace.T * trace.batch * int(trace.active_counts.sum())
    if slots == 0:
        raise ValueError("cannot compute the firing rate of an empty trace")
    return float(trace.spike_counts.sum()) / slots


def node_sparsity(net: SnnNetwork) -> float:
    """Fraction of originally allocated hidden neurons now inactive."""
    total = sum(l.n_outputs for l in net.hidden_layers)
    if total == 0:
        return 0.0
    active = sum(int(l.row_active.sum()) for l in net.hidden_layers)
    return 1.0 - active / total


def link_sparsity(net: SnnNetwork) -> float:
    """Absent-link fraction over the sparsified (non-output) layers."""
    layers = net.hidden_layers
    if not layers:
        return 0.0
    allocated = sum(l.n_outputs * l.n_inputs for l in layers)
    present = sum(l.mask.n_links for l in layers)
    return 1.0 - present / allocated


@dataclass
class EnergyReport:
    """Aggregate activity and energy record for one evaluation."""

    spike_count: int
    sops: int
    firing_rate: float
    link_sparsity: float
    node_sparsity: float
    energy_joules: float

    CSV_HEADER = "spike_count,sops,firing_rate,link_sparsity,node_sparsity,energy_joules"

    def csv_row(self) -> str:
        return (f"{self.spike_count},{self.sops},{self.firing_rate:.10g},"
                f"{self.link_sparsity:.10g},{self.node_sparsity:.10g},"
                f"{self.energy_joules:.10g}")

    def to_text(self) -> str:
        return "\n".join(f"{k}={v:.10g}" if isinstance(v, float) else f"{k}={v}"
                         for k, v in self.__dict__.items())


class MetricsAccumulator:
    """Sums spike/SOP/slot counts over chunked forward passes."""

    def __init__(self, net: SnnNetwork):
        self.net = net
        self.spike_count = 0
        self.sops = 0
        self.slots = 0

    def add_trace(self, trace: ForwardTrace) -> None:
        spikes, sops = count_sops(trace, self.net)
        self.spike_count += spikes
        self.sops += sops
        self.slots += trace.T * trace.batch * int(trace.active_counts.sum())

    def report(self, pj_per_sop: float = DEFAULT_PJ_PER_SOP) -> EnergyReport:
        if self.slots == 0:
            raise ValueError("no traces accumulated")
        return EnergyReport(
            spike_count=self.spike_count,
            sops=self.sops,
            firing_rate=self.spike_count / self.slots,
            link_sparsity=link_sparsity(self.net),
            node_sparsity=node_sparsity(self.net),
            energy_joules=energy(self.sops, pj_per_sop),
        )
