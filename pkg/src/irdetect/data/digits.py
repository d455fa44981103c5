"""Sources of 28x28 handwritten-style digit images.

Two providers: a self-contained synthetic bank rendered from 5x7 dot-matrix
glyphs with random affine jitter (no downloads needed), and a loader for the
standard IDX-format MNIST files for anyone who has them on disk.
"""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..errors import ConfigurationError, DataLoadError

DIGIT_SIZE = 28

# 5x7 dot-matrix glyphs, one row string per scanline, '1' = ink.
_GLYPH_ROWS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}


@dataclass(frozen=True)
class DigitBank:
    """Digit exemplars: images uint8 (N, 28, 28), labels int (N,)."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 3 or self.images.shape[1:] != (DIGIT_SIZE, DIGIT_SIZE):
            raise ConfigurationError(f"digit images must be (N, 28, 28), got {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ConfigurationError(
                f"{len(self.images)} images but {len(self.labels)} labels")

    def classes(self):
        return set(int(c) for c in np.unique(self.labels))

    def by_class(self, digit):
        return np.flatnonzero(self.labels == digit)


def _glyph_array(digit):
    rows = _GLYPH_ROWS[digit]
    return np.array([[float(ch) for ch in row] for row in rows], dtype=np.float64)


def _render_digit(digit, rng):
    # Blow the 7x5 glyph up to 21x15 and center it on a 28x28 canvas.
    block = np.kron(_glyph_array(digit), np.ones((3, 3)))
    canvas = np.zeros((DIGIT_SIZE, DIGIT_SIZE))
    canvas[3:24, 6:21] = block

    # Random similarity transform about the canvas center plus a small shift.
    angle = rng.uniform(-0.22, 0.22)
    scale = rng.uniform(0.85, 1.15)
    shift = rng.uniform(-2.0, 2.0, size=2)
    c, s = np.cos(angle) / scale, np.sin(angle) / scale
    matrix = np.array([[c, -s], [s, c]])
    center = np.array([(DIGIT_SIZE - 1) / 2.0] * 2)
    offset = center - matrix @ (center + shift)
    warped = ndimage.affine_transform(canvas, matrix, offset=offset, order=1, mode="constant")

    warped = ndimage.gaussian_filter(warped, sigma=rng.uniform(0.5, 0.9))
    warped = warped * rng.uniform(0.75, 1.0) / max(warped.max(), 1e-6)
    return np.round(np.clip(warped, 0.0, 1.0) * 255.0).astype(np.uint8)


def synthetic_digit_bank(per_class=200, seed=0) -> DigitBank:
    """Render a reproducible bank with ``per_class`` jittered exemplars per digit."""
    if per_class < 1:
        raise ConfigurationError(f"per_class must be >= 1, got {per_class}")
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for digit in range(10):
        for _ in range(per_class):
            images.append(_render_digit(digit, rng))
            labels.append(digit)
    return DigitBank(np.stack(images), np.array(labels, dtype=np.int64))


def _read_idx(path: Path):
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        magic, = struct.unpack(">i", f.read(4))
        if magic == 2051:
            n, rows, cols = struct.unpack(">iii", f.read(12))
            data = np.frombuffer(f.read(n * rows * cols), dtype=np.uint8)
            return data.reshape(n, rows, cols)
        if magic == 2049:
            n, = struct.unpack(">i", f.read(4))
            return np.frombuffer(f.read(n), dtype=np.uint8).astype(np.int64)
        raise DataLoadError(f"{path}: unrecognized IDX magic {magic}")


def _find_idx(root: Path, stem):
    for name in (stem, stem + ".gz"):
        p = root / name
        if p.exists():
            return p
    raise DataLoadError(f"missing IDX file {root / stem}[.gz]")


def load_mnist_idx(root) -> DigitBank:
    """Load a digit bank from the four standard IDX files under ``root``."""
    root = Path(root)
    images = _read_idx(_find_idx(root, "train-images-idx3-ubyte"))
    labels = _read_idx(_find_idx(root, "train-labels-idx1-ubyte"))
    if len(images) != len(labels):
        raise DataLoadError(f"{root}: image/label count mismatch ({len(images)} vs {len(labels)})")
    return DigitBank(images, labels)
