"""Sparse topology construction from input correlations or balanced chance.

The first layer's mask is seeded from pairwise association between binary
input features: ordered feature pairs are ranked by their correlation and
the strongest (1 - sparsity) fraction survives, each surviving pair fanned
out across the hidden copies of its target feature.  Layers whose input
distribution is unknown fall back to a degree-balanced random mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .masks import SparseMask

CORRELATION_MODES = ("pearson-phi", "chi2-means")


@dataclass
class CorrelationMatrix:
    """Symmetric feature-by-feature association matrix."""

    phi: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.phi.ndim != 2 or self.phi.shape[0] != self.phi.shape[1]:
            raise ValueError(f"correlation matrix must be square, got {self.phi.shape}")
        if not np.isfinite(self.phi).all():
            raise ValueError("correlation matrix contains non-finite values")
        if not np.allclose(self.phi, self.phi.T):
            raise ValueError("correlation matrix must be symmetric")

    @property
    def n_features(self) -> int:
        return self.phi.shape[0]


def _observation_matrix(data) -> np.ndarray:
    data = np.asarray(data)
    if data.ndim == 3:          # (T, samples, features) -> (T * samples, features)
        data = data.reshape(-1, data.shape[2])
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D or 3-D binary tensor, got shape {data.shape}")
    x = data.astype(np.float64)
    if not np.isin(x, (0.0, 1.0)).all():
        raise ValueError("correlation input must be binary")
    return x


def phi_matrix(data, mode: str = "pearson-phi") -> CorrelationMatrix:
    """Pairwise association between binary feature columns.

    pearson-phi: the 2x2 contingency-table phi coefficient
        (n11*n00 - n10*n01) / sqrt(r1*r0*c1*c0), zero when a marginal is zero.
    chi2-means: sqrt((s_i + s_j) / (2*NT)) with s_i the per-feature
        chi-square sum over observations of (x_i - mean_i)^2 / mean_i, an
        alternative that depends only on the two feature means; a feature
        with zero mean contributes zero.
    """
    if mode not in CORRELATION_MODES:
        raise ValueError(f"unknown correlation mode {mode!r}")
    x = _observation_matrix(data)
    nt, m = x.shape
    if nt < 2:
        raise ValueError(f"need at least 2 observations, got {nt}")
    if m < 2:
        raise ValueError(f"need at least 2 features, got {m}")

    if mode == "chi2-means":
        e = x.mean(axis=0)
        ss = ((x - e) ** 2).sum(axis=0)
        s = np.divide(ss, e, out=np.zeros(m), where=e > 0)
        phi = np.sqrt((s[:, None] + s[None, :]) / (2.0 * nt))
        return CorrelationMatrix(phi)

    ones = x.sum(axis=0)
    n11 = x.T @ x
    n10 = ones[:, None] - n11
    n01 = ones[None, :] - n11
    n00 = nt - n11 - n10 - n01
    denom_sq = ones[:, None] * (nt - ones[:, None]) * ones[None, :] * (nt - ones[None, :])
    num = n11 * n00 - n10 * n01
    phi = np.divide(num, np.sqrt(denom_sq),
                    out=np.zeros((m, m)), where=denom_sq > 0)
    return CorrelationMatrix(phi)


def correlation_mask(corr: CorrelationMatrix, beta: int, sparsity: float) -> SparseMask:
    """First-layer mask from correlation ranking (rows = beta * M, cols = M).

    Ordered pairs (i, j), i != j, are ranked by phi[i, j] descending with
    lexicographic (i, j) tie-breaking, and the top floor((1 - sparsity) * M^2)
    survive; a kept pair (i, j) links input i to every hidden copy
    h = j * beta + k of feature j.  Self pairs are excluded from the ranking
    and only fill in after every off-diagonal pair, so sparsity 0 still
    yields the full mask.
    """
    if beta < 1:
        raise ValueError(f"expansion factor must be >= 1, got {beta}")
    if not 0.0 <= sparsity < 1.0:
        raise ValueError(f"sparsity must lie in [0, 1), got {sparsity}")
    m = corr.n_features
    keep = math.floor((1.0 - sparsity) * m * m)
    if keep < 1:
        raise ValueError(f"sparsity {sparsity} keeps no links")

    ii, jj = np.divmod(np.arange(m * m), m)
    off = ii != jj
    oi, oj = ii[off], jj[off]
    scores = corr.phi[oi, oj]
    order = np.lexsort((oj, oi, -scores))
    ranked_i = oi[order]
    ranked_j = oj[order]
    if keep > ranked_i.size:
        diag = np.arange(m)
        ranked_i = np.concatenate([ranked_i, diag])
        ranked_j = np.concatenate([ranked_j, diag])
    src = ranked_i[:keep]
    dst = ranked_j[:keep]

    dense = np.zeros((beta * m, m), dtype=bool)
    copies = np.arange(beta)
    rows = (dst[:, None] * beta + copies[None, :]).ravel()
    cols = np.repeat(src, beta)
    dense[rows, cols] = True
    return SparseMask(dense)


def balanced_random_mask(m: int, n: int, sparsity: float, seed) -> SparseMask:
    """Random mask with exactly round((1 - sparsity) * n) links per row.

    Rows are filled greedily against the current column loads (ties broken
    by the seeded stream), which keeps the column degree spread at most 1.
    """
    if not 0.0 <= sparsity < 1.0:
        raise ValueError(f"sparsity must lie in [0, 1), got {sparsity}")
    k = min(n, round_half_up((1.0 - sparsity) * n))
    if k == 0:
        raise ValueError(f"sparsity {sparsity} leaves nodes isolated")
    rng = np.random.default_rng(seed)
    dense = np.zeros((m, n), dtype=bool)
    col_deg = np.zeros(n, dtype=np.int64)
    for row in range(m):
        tie = rng.random(n)
        chosen = np.lexsort((tie, col_deg))[:k]
        dense[row, chosen] = True
        col_deg[chosen] += 1
    return SparseMask(dense)


def round_half_up(x: float) -> int:
    """Deterministic rounding used wherever the pipeline turns ratios into counts."""
    return int(math.floor(x + 0.5))
