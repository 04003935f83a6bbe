"""Connectivity masks, masked weight matrices, and masked linear algebra.

A mask is stored as a dense boolean matrix (rows = output neurons, cols =
input neurons) and the weights as a dense float matrix that is identically
zero off-mask.  Pruning and regrowth rewrite the topology every epoch, so
both structures must be cheap to mutate and to feed into vectorized matrix
products; row-major and column-major link iteration fall out of numpy's
nonzero machinery.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import CheckpointError

LAYER_MAGIC = b"SLYR"

# one checkpoint record per link, little-endian, row-major order
_ENTRY_DTYPE = np.dtype([("row", "<u4"), ("col", "<u4"), ("weight", "<f8")])


class SparseMask:
    """Binary connectivity matrix for one linear layer.

    Entry (j, i) present means output neuron j receives input neuron i.
    """

    __slots__ = ("dense",)

    def __init__(self, dense):
        dense = np.ascontiguousarray(dense, dtype=bool)
        if dense.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {dense.shape}")
        self.dense = dense

    @classmethod
    def empty(cls, rows: int, cols: int) -> "SparseMask":
        return cls(np.zeros((rows, cols), dtype=bool))

    @classmethod
    def full(cls, rows: int, cols: int) -> "SparseMask":
        return cls(np.ones((rows, cols), dtype=bool))

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "SparseMask":
        """Build a mask from an iterable of (row, col) pairs."""
        dense = np.zeros((rows, cols), dtype=bool)
        entries = np.atleast_2d(np.asarray(list(entries), dtype=np.int64))
        if entries.size:
            r, c = entries[:, 0], entries[:, 1]
            if r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols:
                raise ValueError("mask entry index out of range")
            dense[r, c] = True
        return cls(dense)

    @property
    def rows(self) -> int:
        return self.dense.shape[0]

    @property
    def cols(self) -> int:
        return self.dense.shape[1]

    @property
    def shape(self):
        return self.dense.shape

    @property
    def n_links(self) -> int:
        return int(self.dense.sum())

    def entries(self) -> np.ndarray:
        """All present (row, col) pairs in row-major order, shape (k, 2)."""
        return np.argwhere(self.dense)

    def row_links(self, j: int) -> np.ndarray:
        """Column indices linked to output neuron j."""
        return np.flatnonzero(self.dense[j])

    def col_links(self, i: int) -> np.ndarray:
        """Row indices linked to input neuron i."""
        return np.flatnonzero(self.dense[:, i])

    def degrees(self):
        """Per-row and per-column link counts; both sum to n_links."""
        return (
            self.dense.sum(axis=1).astype(np.int64),
            self.dense.sum(axis=0).astype(np.int64),
        )

    def link_sparsity(self) -> float:
        """Fraction of absent links: 1 - |entries| / (rows * cols)."""
        return 1.0 - self.n_links / (self.rows * self.cols)

    def copy(self) -> "SparseMask":
        return SparseMask(self.dense.copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseMask) and np.array_equal(self.dense, other.dense)

    def __repr__(self) -> str:
        return f"SparseMask({self.rows}x{self.cols}, links={self.n_links})"

    def write_edge_list(self, fileobj) -> None:
        """Dump "row col" lines in sorted (row-major) order."""
        for r, c in self.entries():
            fileobj.write(f"{r} {c}\n")


class SparseLayer:
    """Mask + weights + LIF parameters + per-neuron active flags.

    Weights exist exactly on mask entries; off-mask positions are forced to
    zero at construction and kept zero by every mutation path.  Inactive
    neurons (flag False) carry no incident links.
    """

    __slots__ = ("mask", "weights", "threshold", "decay", "row_active", "col_active",
                 "is_output_layer")

    def __init__(self, mask: SparseMask, weights, threshold: float, decay: float,
                 row_active=None, col_active=None, is_output_layer: bool = False):
        if threshold <= 0:
            raise ValueError(f"threshold must be positive, got {threshold}")
        if not 0.0 <= decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {decay}")
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != mask.shape:
            raise ValueError(
                f"weights shape {weights.shape} does not match mask {mask.shape}")
        self.mask = mask
        self.weights = np.where(mask.dense, weights, 0.0)
        self.threshold = float(threshold)
        self.decay = float(decay)
        self.row_active = (np.ones(mask.rows, dtype=bool) if row_active is None
                           else np.asarray(row_active, dtype=bool).copy())
        self.col_active = (np.ones(mask.cols, dtype=bool) if col_active is None
                           else np.asarray(col_active, dtype=bool).copy())
        self.is_output_layer = bool(is_output_layer)

    @property
    def n_outputs(self) -> int:
        return self.mask.rows

    @property
    def n_inputs(self) -> int:
        return self.mask.cols

    def link_weights(self) -> np.ndarray:
        """Weight values aligned with mask.entries() order."""
        return self.weights[self.mask.dense]

    def copy(self) -> "SparseLayer":
        return SparseLayer(self.mask.copy(), self.weights.copy(), self.threshold,
                           self.decay, self.row_active, self.col_active,
                           self.is_output_layer)

    def remove_links(self, rows, cols) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and not self.mask.dense[rows, cols].all():
            raise ValueError("attempted to remove an absent link")
        self.mask.dense[rows, cols] = False
        self.weights[rows, cols] = 0.0

    def add_links(self, rows, cols, values) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and self.mask.dense[rows, cols].any():
            raise ValueError("attempted to add a present link")
        self.mask.dense[rows, cols] = True
        self.weights[rows, cols] = values

    def deactivate_rows(self, rows) -> None:
        rows = np.asarray(rows, dtype=np.int64)
        self.mask.dense[rows, :] = False
        self.weights[rows, :] = 0.0
        self.row_active[rows] = False

    def deactivate_cols(self, cols) -> None:
        cols = np.asarray(cols, dtype=np.int64)
        self.mask.dense[:, cols] = False
        self.weights[:, cols] = 0.0
        self.col_active[cols] = False

    def validate(self) -> None:
        """Check the structural invariants; raises AssertionError on breach."""
        assert not self.weights[~self.mask.dense].any(), "weight off mask"
        row_deg, col_deg = self.mask.degrees()
        assert not row_deg[~self.row_active].any(), "inactive row has links"
        assert not col_deg[~self.col_active].any(), "inactive col has links"
        if self.is_output_layer:
            sub = self.mask.dense[np.ix_(self.row_active, self.col_active)]
            assert sub.all(), "output layer not fully connected over active neurons"


def masked_matvec(layer: SparseLayer, x) -> np.ndarray:
    """Matrix-vector product restricted to present links.

    y[j] = sum over links (j, i) of W[j, i] * x[i].  Off-mask weights are
    structurally zero, so the dense product is exact.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.n_inputs,):
        raise ValueError(
            f"input length {x.shape} does not match layer input width "
            f"({layer.n_inputs},)")
    return layer.weights @ x


def save_layer(layer: SparseLayer, f: BinaryIO) -> None:
    """Write one layer checkpoint block.

    Layout (little-endian): magic "SLYR"; u32 m; u32 n; f64 threshold; f64 decay;
    u8 flags (bit0 = output layer); m bytes row_active; n bytes col_active;
    u64 entry count; then (u32 row, u32 col, f64 weight) triples in row-major
    order.  Round-trips are bit-exact.
    """
    m, n = layer.mask.shape
    flags = 1 if layer.is_output_layer else 0
    f.write(LAYER_MAGIC)
    f.write(struct.pack("<IIddB", m, n, layer.threshold, layer.decay, flags))
    f.write(layer.row_active.astype(np.uint8).tobytes())
    f.write(layer.col_active.astype(np.uint8).tobytes())
    entries = layer.mask.entries()
    record = np.empty(len(entries), dtype=_ENTRY_DTYPE)
    record["row"] = entries[:, 0]
    record["col"] = entries[:, 1]
    record["weight"] = layer.link_weights()
    f.write(struct.pack("<Q", len(record)))
    f.write(record.tobytes())


def _read_exact(f: BinaryIO, size: int, what: str) -> bytes:
    buf = f.read(size)
    if len(buf) != size:
        raise CheckpointError(f"corrupt checkpoint: truncated {what}")
    return buf


def load_layer(f: BinaryIO) -> SparseLayer:
    """Read one layer checkpoint block written by save_layer."""
    magic = _read_exact(f, 4, "layer magic")
    if magic != LAYER_MAGIC:
        raise CheckpointError(
            f"corrupt checkpoint: bad layer magic {magic!r}, expected {LAYER_MAGIC!r}")
    m, n, threshold, decay, flags = struct.unpack("<IIddB", _read_exact(f, 25, "layer header"))
    row_active = np.frombuffer(_read_exact(f, m, "row flags"), dtype=np.uint8).astype(bool)
    col_active = np.frombuffer(_read_exact(f, n, "col flags"), dtype=np.uint8).astype(bool)
    (count,) = struct.unpack("<Q", _read_exact(f, 8, "entry count"))
    raw = _read_exact(f, count * _ENTRY_DTYPE.itemsize, "entries")
    record = np.frombuffer(raw, dtype=_ENTRY_DTYPE)
    if count and (record["row"].max() >= m or record["col"].max() >= n):
        raise CheckpointError("corrupt checkpoint: entry index out of range")
    weights = np.zeros((m, n), dtype=np.float64)
    dense = np.zeros((m, n), dtype=bool)
    dense[record["row"], record["col"]] = True
    if dense.sum() != count:
        raise CheckpointError("corrupt checkpoint: duplicate entries")
    weights[record["row"], record["col"]] = record["weight"]
    return SparseLayer(SparseMask(dense), weights, threshold, decay,
                       row_active, col_active, bool(flags & 1))
