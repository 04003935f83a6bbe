"""Topology evolution: scored pruning, cascade neuron removal, L3 regrowth.

Each epoch every non-output layer drops a cosine-scheduled fraction of its
links, sampled so low-importance links go first; hidden neurons left without
input or output links are removed together with all their remaining links
(cascading until a fixed point); and exactly as many links as were pruned
are regrown at absent positions, sampled proportionally to a length-3 path
score that favors pairs whose intermediaries keep few connections outside
the pair's local community.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .masks import SparseLayer, SparseMask
from .topology import round_half_up
from .weightinit import WeightInitParams, weight_variance

REMOVAL_MODES = ("inverse", "reciprocal")
_EPS = 1e-8


def prune_schedule(prune_rate: float, epoch: int, total_epochs: int) -> float:
    """Cosine-annealed pruning ratio: (prune_rate / 2) * (1 + cos(pi * epoch / total))."""
    if not 0.0 < prune_rate < 1.0:
        raise ValueError(f"initial pruning ratio must lie in (0, 1), got {prune_rate}")
    if total_epochs < 1:
        raise ValueError(f"total epochs must be >= 1, got {total_epochs}")
    if not 0 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} outside 0..{total_epochs}")
    return (prune_rate / 2.0) * (1.0 + math.cos(math.pi * epoch / total_epochs))


@dataclass
class LinkScoreTable:
    """Removal score per present link, aligned with row-major entry order."""

    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.scores)


@dataclass
class RegrowthScoreTable:
    """Regrowth score per absent link between active neurons."""

    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return len(self.scores)

    def without_pairs(self, shape, rows, cols) -> "RegrowthScoreTable":
        """Drop the given (row, col) pairs from the candidate set."""
        banned = np.zeros(shape, dtype=bool)
        banned[rows, cols] = True
        keep = ~banned[self.rows, self.cols]
        return RegrowthScoreTable(self.rows[keep], self.cols[keep], self.scores[keep])


def link_removal_scores(layer: SparseLayer) -> LinkScoreTable:
    """Hybrid magnitude / relative-importance score per present link.

    score(j, i) = |W[j,i]| / (1 + sum of |W| into output j)
                + |W[j,i]| / (1 + sum of |W| out of input i)
    """
    if layer.mask.n_links == 0:
        raise ValueError("cannot score an empty layer")
    aw = np.abs(layer.weights)
    into_output = aw.sum(axis=1, keepdims=True)
    out_of_input = aw.sum(axis=0, keepdims=True)
    table = aw / (1.0 + into_output) + aw / (1.0 + out_of_input)
    entries = layer.mask.entries()
    rows, cols = entries[:, 0], entries[:, 1]
    return LinkScoreTable(rows, cols, table[rows, cols])


def _weighted_sample_without_replacement(weights: np.ndarray, k: int, rng):
    """Indices of k draws without replacement, per-draw P proportional to weight.

    Uses the exponential-race form of weighted reservoir sampling: taking the
    k smallest Exp(1)/w_i keys is distributionally identical to sequential
    proportional draws without replacement.
    """
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k >= len(weights):
        return np.arange(len(weights), dtype=np.int64)
    keys = rng.exponential(1.0, size=len(weights)) / weights
    picked = np.argpartition(keys, k)[:k]
    return np.sort(picked)


def sample_removals(table: LinkScoreTable, rate: float, seed,
                    mode: str = "inverse"):
    """Sample round(rate * |links|) links for removal, low scores first.

    mode "inverse" draws proportionally to (max_score - score + eps); mode
    "reciprocal" draws proportionally to 1 / (score + eps).
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"pruning ratio must lie in [0, 1], got {rate}")
    if mode not in REMOVAL_MODES:
        raise ValueError(f"unknown removal mode {mode!r}")
    rng = np.random.default_rng(seed)
    k = round_half_up(rate * len(table))
    if mode == "inverse":
        weights = table.scores.max() - table.scores + _EPS
    else:
        weights = 1.0 / (table.scores + _EPS)
    idx = _weighted_sample_without_replacement(weights, k, rng)
    return table.rows[idx], table.cols[idx]


def chain_removal(net):
    """Deactivate hidden neurons without incoming or outgoing links.

    Removing a neuron removes all its remaining links, which can disconnect
    neighbors, so the sweep repeats until a fixed point.  Input features and
    output classes are never removed.  Mutates the network; returns
    (net, removed) where removed lists the neuron indices deactivated per
    hidden layer.
    """
    hidden = len(net.layers) - 1
    removed = [[] for _ in range(hidden)]
    changed = True
    while changed:
        changed = False
        for h in range(hidden):
            lay, nxt = net.layers[h], net.layers[h + 1]
            in_deg = lay.mask.dense.sum(axis=1)
            out_deg = nxt.mask.dense.sum(axis=0)
            dead = lay.row_active & ((in_deg == 0) | (out_deg == 0))
            if dead.any():
                idx = np.flatnonzero(dead)
                lay.deactivate_rows(idx)
                nxt.deactivate_cols(idx)
                removed[h].extend(idx.tolist())
                changed = True
    return net, [np.asarray(r, dtype=np.int64) for r in removed]


def l3_scores(mask: SparseMask, row_active=None, col_active=None) -> RegrowthScoreTable:
    """Length-3 path regrowth scores for absent pairs between active neurons.

    For an absent (output v, input u) pair, every path u - z1 - z2 - v inside
    the layer's bipartite graph contributes 1 / sqrt((1 + de_z1) * (1 + de_z2)),
    where de_z counts z's links leaving the pair's local community (the pair
    plus all intermediaries on any of its length-3 paths).  In a bipartite
    layer that community membership reduces to common-neighbor counts, which
    the closed form below exploits:

        1 + de_z1 = deg(z1) - |N(z1) ∩ N(v)|
        1 + de_z2 = deg(z2) - |N(z2) ∩ N(u)|

    valid wherever a path exists for an absent pair.
    """
    a = mask.dense
    m, n = a.shape
    if row_active is None:
        row_active = np.ones(m, dtype=bool)
    if col_active is None:
        col_active = np.ones(n, dtype=bool)
    af = a.astype(np.float64)
    deg_row = af.sum(axis=1)
    deg_col = af.sum(axis=0)
    common_rows = af @ af.T          # |N(r1) ∩ N(r2)| over columns
    common_cols = af.T @ af          # |N(c1) ∩ N(c2)| over rows

    scores = np.zeros((m, n))
    for u in np.flatnonzero(col_active):
        rows_u = np.flatnonzero(a[:, u])
        if rows_u.size == 0:
            continue
        d2 = deg_col - common_cols[:, u]
        w2 = np.zeros(n)
        pos = d2 > 0
        w2[pos] = 1.0 / np.sqrt(d2[pos])
        q = (af[rows_u] * w2) @ af.T
        d1 = deg_row[rows_u, None] - common_rows[rows_u]
        w1 = np.zeros_like(d1)
        pos = d1 > 0
        w1[pos] = 1.0 / np.sqrt(d1[pos])
        scores[:, u] = (w1 * q).sum(axis=0)

    candidates = ~a & row_active[:, None] & col_active[None, :]
    rows, cols = np.nonzero(candidates)
    return RegrowthScoreTable(rows.astype(np.int64), cols.astype(np.int64),
                              scores[rows, cols])


def sample_regrowth(table: RegrowthScoreTable, k: int, seed):
    """Sample k absent pairs proportionally to score + eps, without replacement.

    The epsilon keeps zero-score pairs reachable once high-score pairs run out.
    """
    if k > len(table):
        raise ValueError(
            f"cannot regrow {k} links: only {len(table)} absent pairs between "
            f"active neurons")
    rng = np.random.default_rng(seed)
    idx = _weighted_sample_without_replacement(table.scores + _EPS, k, rng)
    return table.rows[idx], table.cols[idx]


@dataclass
class LayerEvolution:
    """Per-layer bookkeeping of one evolution epoch."""

    layer: int
    links_pruned: int = 0
    links_regrown: int = 0
    rows_removed: int = 0
    cols_removed: int = 0
    links_lost_chain: int = 0
    links_after: int = 0
    sparsity_after: float = 0.0


@dataclass
class EvolutionReport:
    """What one evolution epoch did to each layer."""

    rate: float
    layers: list = field(default_factory=list)
    removed_neurons: list = field(default_factory=list)

    CSV_HEADER = "epoch,layer,pruned,regrown,neurons_removed,sparsity"

    def csv_rows(self, epoch: int):
        for st in self.layers:
            yield (f"{epoch},{st.layer},{st.links_pruned},{st.links_regrown},"
                   f"{st.rows_removed},{st.sparsity_after:.10g}")


def evolve_epoch(net, rate: float, seed, weight_params: WeightInitParams,
                 removal_mode: str = "inverse") -> EvolutionReport:
    """One prune / chain-removal / regrowth cycle over all non-output layers.

    Mutates the network.  Regrowth per layer draws exactly as many links as
    were pruned there (chain-removal losses are not compensated), never
    re-proposes a link removed in the same epoch, and weights new links with
    fresh draws from the layer's initialization distribution.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"pruning ratio must lie in [0, 1], got {rate}")
    rng = np.random.default_rng(seed)
    evolved = range(len(net.layers) - 1)
    report = EvolutionReport(rate=rate)

    pruned_pairs = {}
    for l in evolved:
        layer = net.layers[l]
        table = link_removal_scores(layer)
        rows, cols = sample_removals(table, rate, rng, removal_mode)
        layer.remove_links(rows, cols)
        pruned_pairs[l] = (rows, cols)

    post_prune = [lay.mask.n_links for lay in net.layers]
    _, removed = chain_removal(net)
    report.removed_neurons = removed

    for l, layer in enumerate(net.layers):
        stats = LayerEvolution(layer=l)
        stats.links_lost_chain = post_prune[l] - layer.mask.n_links
        if l in pruned_pairs:
            stats.links_pruned = len(pruned_pairs[l][0])
        report.layers.append(stats)

    hidden = len(net.layers) - 1
    for l in evolved:
        layer = net.layers[l]
        stats = report.layers[l]
        k = stats.links_pruned
        if k:
            table = l3_scores(layer.mask, layer.row_active, layer.col_active)
            table = table.without_pairs(layer.mask.shape, *pruned_pairs[l])
            rows, cols = sample_regrowth(table, k, rng)
            sigma = math.sqrt(weight_variance(l + 1, weight_params))
            layer.add_links(rows, cols, rng.normal(0.0, sigma, size=k))
            stats.links_regrown = k

    for l, layer in enumerate(net.layers):
        stats = report.layers[l]
        stats.rows_removed = len(removed[l]) if l < hidden else 0
        stats.cols_removed = len(removed[l - 1]) if l >= 1 else 0
        stats.links_after = layer.mask.n_links
        stats.sparsity_after = layer.mask.link_sparsity()
        assert stats.links_regrown == stats.links_pruned
    return report
