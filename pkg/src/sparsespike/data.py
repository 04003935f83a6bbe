"""Dataset ingestion, spike encoding, and synthetic spike generators.

Images arrive as IDX files (the classic big-endian ubyte layout), are
scaled to [0, 1], and become spike trains by Bernoulli rate coding: each
pixel spikes independently at every time step with probability equal to its
intensity.  Spike tensors are (T, samples, features) uint8 arrays and can
round-trip through a bit-packed portable file format.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
SPIKE_MAGIC = b"SPKT"
SPIKE_VERSION = 1

_ENCODE_CHUNK = 2048


@dataclass
class LabeledDataset:
    """Flattened images in [0, 1] with integer class labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2:
            raise ValueError(f"images must be 2-D, got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError(
                f"{len(self.images)} images but {len(self.labels)} labels")
        if self.images.size and (self.images.min() < 0 or self.images.max() > 1):
            raise ValueError("pixel values must lie in [0, 1]")

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return self.images.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def subset(self, n: int) -> "LabeledDataset":
        return LabeledDataset(self.images[:n], self.labels[:n])


def _open_maybe_gzip(path):
    return gzip.open(path, "rb") if str(path).endswith(".gz") else open(path, "rb")


def _read_exact(f, size: int, path, what: str) -> bytes:
    buf = f.read(size)
    if len(buf) != size:
        raise DataFormatError(f"truncated IDX file {path}: short {what}")
    return buf


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load an IDX image/label file pair, scaling pixels to [0, 1].

    Raises DataFormatError with distinct messages for a bad magic number, a
    truncated file, and an image/label count mismatch.
    """
    with _open_maybe_gzip(images_path) as f:
        magic, count, rows, cols = struct.unpack(
            ">IIII", _read_exact(f, 16, images_path, "header"))
        if magic != IMAGES_MAGIC:
            raise DataFormatError(
                f"bad magic in images file {images_path}: expected "
                f"0x{IMAGES_MAGIC:08x}, got 0x{magic:08x}")
        raw = _read_exact(f, count * rows * cols, images_path, "pixel data")
    images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)

    with _open_maybe_gzip(labels_path) as f:
        magic, label_count = struct.unpack(
            ">II", _read_exact(f, 8, labels_path, "header"))
        if magic != LABELS_MAGIC:
            raise DataFormatError(
                f"bad magic in labels file {labels_path}: expected "
                f"0x{LABELS_MAGIC:08x}, got 0x{magic:08x}")
        raw = _read_exact(f, label_count, labels_path, "label data")
    labels = np.frombuffer(raw, dtype=np.uint8)

    if count != label_count:
        raise DataFormatError(
            f"count mismatch: {count} images in {images_path} but "
            f"{label_count} labels in {labels_path}")
    return LabeledDataset(images / 255.0, labels)


def save_idx(dataset: LabeledDataset, images_path, labels_path,
             rows: int, cols: int) -> None:
    """Write a dataset back out as an IDX pair (mainly for fixtures)."""
    if rows * cols != dataset.n_features:
        raise ValueError(f"{rows}x{cols} does not match {dataset.n_features} features")
    pixels = np.round(dataset.images * 255.0).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGES_MAGIC, dataset.n_samples, rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABELS_MAGIC, dataset.n_samples))
        f.write(dataset.labels.astype(np.uint8).tobytes())


def bernoulli_encode(dataset: LabeledDataset, T: int, seed) -> np.ndarray:
    """Rate-code pixel intensities into a (T, samples, features) spike tensor.

    spike[t, s, i] ~ Bernoulli(pixel[s, i]) independently over t, generated
    sample-major in fixed-size chunks so the result depends only on the seed.
    """
    if T < 1:
        raise ValueError(f"time steps must be >= 1, got {T}")
    pix = dataset.images
    n, f = pix.shape
    rng = np.random.default_rng(seed)
    out = np.empty((n, T, f), dtype=np.uint8)
    for start in range(0, n, _ENCODE_CHUNK):
        stop = min(start + _ENCODE_CHUNK, n)
        u = rng.random((stop - start, T, f))
        out[start:stop] = u < pix[start:stop, None, :]
    return np.ascontiguousarray(out.transpose(1, 0, 2))


def save_spike_tensor(path, spikes) -> None:
    """Write the portable spike-tensor format.

    Header: magic "SPKT", u32 version, u32 T, u32 samples, u32 features (all
    little-endian), then the flattened (t, sample, feature) bit stream packed
    eight spikes per byte, least-significant bit first.
    """
    spikes = np.asarray(spikes, dtype=np.uint8)
    if spikes.ndim != 3:
        raise ValueError(f"spike tensor must be 3-D, got shape {spikes.shape}")
    t, n, f = spikes.shape
    packed = np.packbits(spikes.reshape(-1), bitorder="little")
    with open(path, "wb") as fh:
        fh.write(SPIKE_MAGIC)
        fh.write(struct.pack("<IIII", SPIKE_VERSION, t, n, f))
        fh.write(packed.tobytes())


def load_spike_tensor(path) -> np.ndarray:
    """Read a spike tensor written by save_spike_tensor."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SPIKE_MAGIC:
            raise DataFormatError(
                f"bad magic in spike file {path}: expected {SPIKE_MAGIC!r}, "
                f"got {magic!r}")
        header = fh.read(16)
        if len(header) != 16:
            raise DataFormatError(f"truncated spike file {path}: short header")
        version, t, n, f = struct.unpack("<IIII", header)
        if version != SPIKE_VERSION:
            raise DataFormatError(f"unsupported spike file version {version}")
        total = t * n * f
        need = (total + 7) // 8
        raw = fh.read(need)
        if len(raw) != need:
            raise DataFormatError(f"truncated spike file {path}: short bit stream")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8),
                         count=total, bitorder="little")
    return bits.reshape(t, n, f)


def synthetic_correlated_spikes(M: int, N: int, T: int, blocks, rho: float,
                                seed, rate: float = 0.5) -> np.ndarray:
    """Block-correlated binary spikes for exercising correlation-based init.

    blocks must partition range(M).  Features inside a block copy a shared
    Bernoulli(rate) driver with probability rho per observation and fall back
    to independent noise otherwise, so intra-block association exceeds
    inter-block association in expectation (rho = 1 makes block columns
    identical, rho = 0 makes all columns independent).
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"correlation strength must lie in [0, 1], got {rho}")
    flat = sorted(i for b in blocks for i in b)
    if flat != list(range(M)):
        raise ValueError("blocks must partition the feature range exactly once")
    rng = np.random.default_rng(seed)
    obs = N * T
    block_of = np.empty(M, dtype=np.int64)
    for bi, b in enumerate(blocks):
        block_of[np.asarray(list(b), dtype=np.int64)] = bi
    drivers = (rng.random((obs, len(blocks))) < rate).astype(np.uint8)
    noise = (rng.random((obs, M)) < rate).astype(np.uint8)
    copy_driver = rng.random((obs, M)) < rho
    x = np.where(copy_driver, drivers[:, block_of], noise).astype(np.uint8)
    return x.reshape(T, N, M)
