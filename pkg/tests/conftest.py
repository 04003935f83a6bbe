"""Shared builders and independent oracles for the test suite.

The oracles here deliberately take the dumb road (explicit path enumeration,
event-by-event replay, finite differences) so they share no code with the
implementations they check.
"""

import math

import numpy as np

from sparsespike import (LabeledDataset, SnnNetwork, SparseLayer, SparseMask,
                         balanced_random_mask)


# ---------------------------------------------------------------- builders

def layer_from_dense(weights, threshold=1.0, decay=0.5, is_output=False,
                     row_active=None, col_active=None):
    weights = np.asarray(weights, dtype=np.float64)
    mask = SparseMask(weights != 0)
    return SparseLayer(mask, weights, threshold, decay, row_active, col_active,
                       is_output_layer=is_output)


def random_net(widths, sparsity, seed, T=4, threshold=0.3, decay=0.5):
    """Balanced-random hidden masks, dense output, N(0, 1/sqrt(fan)) weights."""
    rng = np.random.default_rng(seed)
    layers = []
    for l in range(len(widths) - 1):
        n, m = widths[l], widths[l + 1]
        is_out = l == len(widths) - 2
        mask = (SparseMask.full(m, n) if is_out
                else balanced_random_mask(m, n, sparsity, rng.integers(2**32)))
        w = rng.normal(0.0, 1.0 / math.sqrt(max(1, n)), (m, n)) * mask.dense
        layers.append(SparseLayer(mask, w, threshold, decay, is_output_layer=is_out))
    return SnnNetwork(layers, T)


def random_bipartite(m, n, density, rng):
    a = rng.random((m, n)) < density
    return SparseMask(a)


def synthetic_digits(n_samples, side, n_classes, seed, fg=0.85, bg=0.06):
    """Class-prototype images: each class lights a distinct pixel patch."""
    rng = np.random.default_rng(seed)
    f = side * side
    protos = np.full((n_classes, f), bg)
    block = max(1, f // n_classes)
    for c in range(n_classes):
        protos[c, c * block:(c + 1) * block] = fg
    labels = rng.integers(0, n_classes, n_samples)
    jitter = rng.uniform(-0.04, 0.04, (n_samples, f))
    images = np.clip(protos[labels] + jitter, 0.0, 1.0)
    return LabeledDataset(images, labels)


# ---------------------------------------------------------------- oracles

def l3_scores_brute(mask, row_active=None, col_active=None):
    """Path-enumeration oracle for the length-3 regrowth scores.

    Walks every absent active pair, lists its length-3 paths explicitly,
    builds the local community as a node set, and counts each
    intermediary's links leaving that set.
    """
    a = mask.dense
    m, n = a.shape
    if row_active is None:
        row_active = np.ones(m, dtype=bool)
    if col_active is None:
        col_active = np.ones(n, dtype=bool)
    col_neighbors = [set(np.flatnonzero(a[:, u]).tolist()) for u in range(n)]
    row_neighbors = [set(np.flatnonzero(a[v]).tolist()) for v in range(m)]
    scores = np.zeros((m, n))
    for v in range(m):
        if not row_active[v]:
            continue
        for u in range(n):
            if not col_active[u] or a[v, u]:
                continue
            paths = [(z1, z2)
                     for z1 in col_neighbors[u]
                     for z2 in row_neighbors[z1]
                     if z2 in row_neighbors[v]]
            if not paths:
                continue
            lc_rows = {v} | {z1 for z1, _ in paths}
            lc_cols = {u} | {z2 for _, z2 in paths}
            total = 0.0
            for z1, z2 in paths:
                de1 = len(row_neighbors[z1] - lc_cols)
                de2 = len(col_neighbors[z2] - lc_rows)
                total += 1.0 / math.sqrt((1 + de1) * (1 + de2))
            scores[v, u] = total
    return scores


def sops_replay(trace, net):
    """Event-by-event SOP oracle: every spike pays its emitter's fan-out."""
    feeds = [trace.input_spikes] + list(trace.hidden_spikes)
    spike_count = 0
    sops = 0
    for spikes, layer in zip(feeds, net.layers):
        out_deg = [len(layer.mask.col_links(i)) for i in range(layer.n_inputs)]
        T, B, width = spikes.shape
        for t in range(T):
            for b in range(B):
                for i in range(width):
                    if spikes[t, b, i]:
                        spike_count += 1
                        sops += out_deg[i]
    return spike_count, sops


def finite_diff_grad(net, spikes, labels, spec, layer_idx, row, col, h=1e-6):
    """Central finite difference of the batch loss w.r.t. a single weight."""
    from sparsespike import loss_and_grads

    layer = net.layers[layer_idx]
    orig = layer.weights[row, col]
    layer.weights[row, col] = orig + h
    lp, _ = loss_and_grads(net, spikes, labels, spec)
    layer.weights[row, col] = orig - h
    lm, _ = loss_and_grads(net, spikes, labels, spec)
    layer.weights[row, col] = orig
    return (lp - lm) / (2.0 * h)
