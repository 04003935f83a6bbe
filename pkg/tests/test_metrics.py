"""Spike/SOP counting, the energy model, firing rate, and sparsity metrics."""

import numpy as np
import pytest

from conftest import layer_from_dense, random_net, sops_replay
from sparsespike import (SnnNetwork, count_sops, energy, firing_rate, forward,
                         link_sparsity, node_sparsity)
from sparsespike.metrics import MetricsAccumulator


def test_zero_spike_trace_counts_zero():
    net = random_net([4, 6, 2], sparsity=0.5, seed=0)
    _, trace = forward(net, np.zeros((4, 2, 4), dtype=np.uint8))
    for z in trace.hidden_spikes:
        z[:] = 0
    assert count_sops(trace, net) == (0, 0)


def test_one_spike_costs_its_fanout():
    # input neuron 0 fans out to 7 hidden units; weights tiny so nothing fires
    dense = np.zeros((8, 3))
    dense[:7, 0] = 1e-6
    dense[7, 1] = 1e-6
    hidden = layer_from_dense(dense, threshold=1.0)
    out = layer_from_dense(np.full((2, 8), 1e-6), threshold=1.0, is_output=True)
    net = SnnNetwork([hidden, out], 1)
    spikes = np.zeros((1, 1, 3), dtype=np.uint8)
    spikes[0, 0, 0] = 1
    _, trace = forward(net, spikes)
    spike_count, sops = count_sops(trace, net)
    assert spike_count == 1
    assert sops == 7


def test_full_mask_closed_form():
    # every input spikes every step through a full m x n mask: T * n * m SOPs
    hidden = layer_from_dense(np.full((5, 3), 1e-9), threshold=1.0)
    out = layer_from_dense(np.full((2, 5), 1e-9), threshold=1.0, is_output=True)
    net = SnnNetwork([hidden, out], 4)
    spikes = np.ones((4, 1, 3), dtype=np.uint8)
    _, trace = forward(net, spikes)
    spike_count, sops = count_sops(trace, net)
    assert spike_count == 4 * 3
    assert sops == 4 * 3 * 5


def test_sops_match_event_replay_oracle_small():
    rng = np.random.default_rng(1)
    for seed in range(10):
        net = random_net([5, 9, 3], sparsity=0.5, seed=seed, threshold=0.2)
        spikes = (rng.random((3, 2, 5)) < 0.5).astype(np.uint8)
        net2 = SnnNetwork(net.layers, 3)
        _, trace = forward(net2, spikes)
        assert count_sops(trace, net2) == sops_replay(trace, net2)


def test_removing_links_never_increases_sops():
    rng = np.random.default_rng(2)
    net = random_net([6, 12, 3], sparsity=0.3, seed=3, threshold=0.2)
    spikes = (rng.random((4, 3, 6)) < 0.5).astype(np.uint8)
    _, trace = forward(net, spikes)
    _, sops_before = count_sops(trace, net)
    entries = net.layers[0].mask.entries()
    drop = entries[rng.permutation(len(entries))[:10]]
    net.layers[0].remove_links(drop[:, 0], drop[:, 1])
    _, sops_after = count_sops(trace, net)
    assert sops_after <= sops_before


def test_trace_net_mismatch_rejected():
    net_a = random_net([4, 6, 2], sparsity=0.0, seed=4)
    net_b = random_net([5, 6, 2], sparsity=0.0, seed=4)
    _, trace = forward(net_a, np.zeros((4, 1, 4), dtype=np.uint8))
    with pytest.raises(ValueError, match="input width"):
        count_sops(trace, net_b)


def test_energy_model_values():
    assert energy(0) == 0.0
    assert energy(int(6.3e11)) == pytest.approx(0.945, rel=1e-9)
    assert energy(int(5.0e8)) == pytest.approx(0.75e-3, rel=1e-9)
    assert energy(100, pj_per_sop=2.0) == pytest.approx(2e-10)
    with pytest.raises(ValueError, match="non-negative"):
        energy(-1)
    with pytest.raises(ValueError, match="non-negative"):
        energy(10, pj_per_sop=-0.5)


def test_firing_rate_extremes_and_half():
    net = random_net([4, 4, 2], sparsity=0.0, seed=5)
    _, trace = forward(net, np.zeros((4, 2, 4), dtype=np.uint8))
    for z in trace.hidden_spikes:
        z[:] = 0
    assert firing_rate(trace) == 0.0
    trace.input_spikes[:] = 1
    for z in trace.hidden_spikes:
        z[:] = 1
    assert firing_rate(trace) == 1.0
    trace.input_spikes[:] = 0
    trace.input_spikes[:2] = 1          # half of the input slots
    for z in trace.hidden_spikes:
        z[:] = 0
        z[:2] = 1
    assert firing_rate(trace) == 0.5


def test_node_sparsity_counts_inactive_hidden():
    net = random_net([10, 100, 4], sparsity=0.0, seed=6)
    assert node_sparsity(net) == 0.0
    net.layers[0].deactivate_rows(range(10))
    net.layers[1].deactivate_cols(range(10))
    assert node_sparsity(net) == pytest.approx(0.10)


def test_node_sparsity_forced_percolation_magnitude():
    net = random_net([10, 1568, 10], sparsity=0.0, seed=7)
    dead = range(1200, 1568)
    net.layers[0].deactivate_rows(dead)
    net.layers[1].deactivate_cols(dead)
    assert node_sparsity(net) == pytest.approx(368 / 1568, abs=1e-9)
    assert node_sparsity(net) == pytest.approx(0.2347, abs=1e-4)


def test_link_sparsity_covers_non_output_layers():
    net = random_net([10, 20, 4], sparsity=0.9, seed=8)
    expected = net.layers[0].mask.link_sparsity()
    assert link_sparsity(net) == pytest.approx(expected)


def test_energy_report_text_and_csv_forms():
    from sparsespike import EnergyReport
    report = EnergyReport(spike_count=12, sops=340, firing_rate=0.25,
                          link_sparsity=0.9, node_sparsity=0.1,
                          energy_joules=5.1e-10)
    text = report.to_text()
    assert "spike_count=12" in text and "sops=340" in text
    assert "energy_joules=5.1e-10" in text
    row = report.csv_row()
    assert row.split(",")[0] == "12"
    assert len(row.split(",")) == len(EnergyReport.CSV_HEADER.split(","))


def test_accumulator_matches_single_pass():
    net = random_net([6, 12, 3], sparsity=0.4, seed=9, threshold=0.2)
    rng = np.random.default_rng(10)
    spikes = (rng.random((4, 10, 6)) < 0.4).astype(np.uint8)
    _, trace = forward(net, spikes)
    whole = MetricsAccumulator(net)
    whole.add_trace(trace)
    parts = MetricsAccumulator(net)
    for s in range(0, 10, 3):
        _, tr = forward(net, spikes[:, s:s + 3])
        parts.add_trace(tr)
    a, b = whole.report(), parts.report()
    assert (a.spike_count, a.sops) == (b.spike_count, b.sops)
    assert a.firing_rate == pytest.approx(b.firing_rate)
    assert a.energy_joules == pytest.approx(b.energy_joules)
