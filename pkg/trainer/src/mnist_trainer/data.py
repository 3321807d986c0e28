"""MNIST loading from local IDX files (gzipped or plain).

There is no download step: place the four standard files under a directory
(`train-images-idx3-ubyte`, `train-labels-idx1-ubyte`, `t10k-images-idx3-ubyte`,
`t10k-labels-idx1-ubyte`, optionally with a `.gz` suffix, also found when
nested under `MNIST/raw/` as torchvision lays them out) and point `--data-dir`
or the `MNIST_DIR` environment variable at it.
"""

from __future__ import annotations

import gzip
import os
import struct
from pathlib import Path

import numpy as np

__all__ = ["MnistSplit", "find_mnist_dir", "load_mnist", "load_idx_file"]

_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


class MnistSplit:
    def __init__(self, images: np.ndarray, labels: np.ndarray):
        assert images.shape[0] == labels.shape[0]
        self.images = images  # float64 in [0, 1], shape (n, 784)
        self.labels = labels  # int64

    def __len__(self) -> int:
        return self.images.shape[0]


def _locate(base: Path, stem: str) -> Path | None:
    for root in (base, base / "MNIST" / "raw", base / "raw"):
        for name in (stem, stem + ".gz"):
            p = root / name
            if p.is_file():
                return p
    return None


def find_mnist_dir(data_dir=None) -> Path | None:
    """First directory containing all four IDX files, else None."""
    candidates = []
    if data_dir:
        candidates.append(Path(data_dir))
    env = os.environ.get("MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path("data") / "mnist")
    for base in candidates:
        if all(_locate(base, stem) for stem in _FILES.values()):
            return base
    return None


def load_idx_file(path) -> np.ndarray:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX file")
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype_code != 0x08:
        raise ValueError(f"{path}: expected unsigned-byte IDX data")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise ValueError(f"{path}: size mismatch against header {dims}")
    return data.reshape(dims)


def load_mnist(data_dir=None) -> tuple[MnistSplit, MnistSplit]:
    base = find_mnist_dir(data_dir)
    if base is None:
        raise FileNotFoundError(
            "MNIST IDX files not found; set --data-dir/MNIST_DIR to a directory "
            "holding train-images-idx3-ubyte(.gz) and friends"
        )
    arrays = {key: load_idx_file(_locate(base, stem)) for key, stem in _FILES.items()}
    train = MnistSplit(
        arrays["train_images"].reshape(-1, 784).astype(np.float64) / 255.0,
        arrays["train_labels"].astype(np.int64),
    )
    test = MnistSplit(
        arrays["test_images"].reshape(-1, 784).astype(np.float64) / 255.0,
        arrays["test_labels"].astype(np.int64),
    )
    return train, test
