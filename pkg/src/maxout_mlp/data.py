"""MNIST IDX ingestion, train/validation splitting, minibatching, toy sets.

IDX files are big-endian: a 4-byte magic (``0x00000803`` for images,
``0x00000801`` for labels), one 4-byte count per dimension, then raw
unsigned bytes. Files ending in ``.gz`` are decompressed transparently.

Shuffling uses ``numpy.random.Generator`` with the PCG64 bit generator
seeded by an integer, so a given seed always yields the same batch order
for the same numpy major version.
"""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataError, FormatError, LengthError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
N_PIXELS = 784

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray
    labels: np.ndarray
    split: str = "train"

    def __post_init__(self):
        if self.images.ndim != 2:
            raise DataError(f"images must be 2-D, got shape {self.images.shape}")
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, start, stop, split=None):
        return Dataset(self.images[start:stop], self.labels[start:stop],
                       split or self.split)


def _read_bytes(path):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _parse_header(raw, expected_magic, ndim, path):
    header_len = 4 + 4 * ndim
    if len(raw) < 4:
        raise LengthError(f"{path}: file too short for a header", 4, len(raw))
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            f"{path}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    if len(raw) < header_len:
        raise LengthError(f"{path}: truncated header", header_len, len(raw))
    dims = struct.unpack(f">{ndim}I", raw[4:header_len])
    expected = header_len + int(np.prod(dims, dtype=np.int64))
    if len(raw) != expected:
        raise LengthError(
            f"{path}: expected {expected} bytes, found {len(raw)}", expected, len(raw)
        )
    return dims, np.frombuffer(raw, dtype=np.uint8, offset=header_len)


def load_idx_images(path, dtype=np.float32):
    """Read an IDX image file into an ``n x 784`` array scaled to [0, 1]."""
    (n, rows, cols), payload = _parse_header(_read_bytes(path), IMAGE_MAGIC, 3, path)
    if rows * cols != N_PIXELS:
        raise FormatError(f"{path}: images are {rows}x{cols}, expected 28x28")
    dtype = np.dtype(dtype)
    return payload.reshape(n, N_PIXELS).astype(dtype) / dtype.type(255)


def load_idx_labels(path):
    (n,), payload = _parse_header(_read_bytes(path), LABEL_MAGIC, 1, path)
    if n and payload.max() > 9:
        bad = int(np.argmax(payload > 9))
        raise DataError(f"{path}: label {payload[bad]} at index {bad} is not a digit")
    return payload.astype(np.int64)


def write_idx_images(path, images):
    """Write an ``n x 784`` array of bytes (or [0,1] floats) as an IDX file."""
    images = np.asarray(images)
    if images.dtype != np.uint8:
        images = np.rint(images * 255).astype(np.uint8)
    n = images.shape[0]
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, 28, 28))
        fh.write(images.reshape(n, N_PIXELS).tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        fh.write(labels.tobytes())


def load_dataset(images_path, labels_path, split="train", dtype=np.float32):
    return Dataset(load_idx_images(images_path, dtype), load_idx_labels(labels_path),
                   split)


def mnist_paths(directory):
    """Canonical file names inside ``directory``, preferring uncompressed files."""
    directory = Path(directory)
    paths = {}
    for key, name in MNIST_FILES.items():
        plain = directory / name
        paths[key] = plain if plain.exists() or not (directory / f"{name}.gz").exists() \
            else directory / f"{name}.gz"
    return paths


def split_train_valid(full, n_train=50000, n_valid=10000):
    """First ``n_train`` examples train, the following ``n_valid`` validate."""
    if len(full) != n_train + n_valid:
        raise DataError(
            f"expected {n_train + n_valid} examples to split, got {len(full)}"
        )
    return full.subset(0, n_train, "train"), full.subset(n_train, None, "valid")


def concatenate(a, b, split="full"):
    return Dataset(np.concatenate([a.images, b.images]),
                   np.concatenate([a.labels, b.labels]), split)


def minibatches(ds, batch_size, rng):
    """Yield ``(X, y)`` over one shuffled epoch; the last batch may be short."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    order = rng.permutation(len(ds))
    for start in range(0, len(ds), batch_size):
        idx = order[start:start + batch_size]
        yield ds.images[idx], ds.labels[idx]


def make_toy(kind, n, rng=None, separation=10.0, noise=0.0, dtype=np.float64):
    """Small synthetic classification sets for fast tests.

    ``"xor"`` cycles through the corners (0,0), (0,1), (1,0), (1,1) with
    labels 0, 1, 1, 0, optionally jittered by Gaussian ``noise``.
    ``"gaussian_blobs"`` draws unit-variance 2-D clusters centred at
    ``(-separation/2, 0)`` and ``(separation/2, 0)`` with alternating labels.
    """
    rng = np.random.default_rng(rng)
    idx = np.arange(n)
    if kind == "xor":
        corners = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=dtype)
        X = corners[idx % 4]
        y = np.array([0, 1, 1, 0])[idx % 4]
        if noise:
            X = X + noise * rng.standard_normal(X.shape)
    elif kind in ("gaussian_blobs", "blobs"):
        y = idx % 2
        X = rng.standard_normal((n, 2))
        X[:, 0] += np.where(y == 1, separation / 2, -separation / 2)
    else:
        raise ValueError(f"unknown toy dataset {kind!r}")
    return Dataset(X.astype(dtype).reshape(n, 2), y.astype(np.int64), kind)
