"""Irregularity benchmark built from digit tiles.

Each image is a grid_side x grid_side puzzle of 28x28 digit tiles. One digit
class is declared irregular: it never appears in training images, and test
images plant it in a random subset of tiles. Ground truth marks those tiles.

On-disk layout::

    <root>/train/IMG_<idx>.png
    <root>/test/IMG_<idx>.png
    <root>/test/labels.csv          image_index,tile_row,tile_col,is_irregular
    <root>/test/masks/IMG_<idx>.png 0/255 irregular-pixel mask
"""

import csv
import re
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, DataLoadError
from .dataset import Dataset
from .digits import DIGIT_SIZE, DigitBank
from .imageio import load_gray_u8, load_mask, save_gray_u8, save_mask

TILE = DIGIT_SIZE


def _tile_masks_to_pixels(tile_labels):
    return np.kron(tile_labels, np.ones((TILE, TILE), dtype=bool))


def composite_dataset(split, images, tile_labels=None, tile_digits=None) -> Dataset:
    """Wrap single-channel uint8 composites as a Dataset.

    The model input replicates the grayscale image across three channels.
    Frame labels and pixel masks derive from ``tile_labels`` when present.
    """
    images = [np.asarray(im, dtype=np.uint8) for im in images]
    size = len(images)
    if size and any(im.shape != images[0].shape for im in images):
        raise ConfigurationError("composite images must share one shape")
    input_size = images[0].shape if size else (0, 0)

    def input_fn(i):
        chan = images[i].astype(np.float32) / 255.0
        return np.repeat(chan[None], 3, axis=0)

    frame_labels = None
    mask_fn = None
    if tile_labels is not None:
        tile_labels = np.asarray(tile_labels, dtype=bool)
        frame_labels = tile_labels.any(axis=(1, 2))
        mask_fn = lambda i: _tile_masks_to_pixels(tile_labels[i])
    return Dataset(split, input_fn, size, input_size, frame_labels=frame_labels,
                   mask_fn=mask_fn, tile_labels=tile_labels, tile_digits=tile_digits,
                   images=images)


def generate_ir_mnist(digit_source: DigitBank, n_train, n_test, grid_side=11,
                      excluded_digit=3, irregular_rate_test=0.1, seed=0,
                      normal_rate_test=0.5):
    """Build (train, test) datasets of digit-tile composites.

    Training tiles draw uniformly from the nine regular classes. A test image
    is fully regular with probability ``normal_rate_test``; otherwise each of
    its tiles independently receives the excluded digit with probability
    ``irregular_rate_test`` (redrawn until at least one tile is irregular, so
    labeled-irregular images are never accidentally clean).
    """
    if n_train <= 0 or n_test <= 0:
        raise ConfigurationError(
            f"n_train and n_test must be > 0, got {n_train}, {n_test}")
    if grid_side < 1:
        raise ConfigurationError(f"grid_side must be >= 1, got {grid_side}")
    if not 0 <= excluded_digit <= 9:
        raise ConfigurationError(f"excluded_digit must be a digit, got {excluded_digit}")
    if not 0 < irregular_rate_test <= 1:
        raise ConfigurationError(
            f"irregular_rate_test must be in (0, 1], got {irregular_rate_test}")
    if not 0 <= normal_rate_test < 1:
        raise ConfigurationError(
            f"normal_rate_test must be in [0, 1), got {normal_rate_test}")
    missing = set(range(10)) - digit_source.classes()
    if missing:
        raise ConfigurationError(f"digit source is missing classes {sorted(missing)}")

    rng = np.random.default_rng(seed)
    regular = [d for d in range(10) if d != excluded_digit]
    pool = {d: digit_source.by_class(d) for d in range(10)}

    def compose(tile_digits):
        canvas = np.empty((grid_side * TILE, grid_side * TILE), dtype=np.uint8)
        for r in range(grid_side):
            for c in range(grid_side):
                d = int(tile_digits[r, c])
                exemplar = digit_source.images[rng.choice(pool[d])]
                canvas[r * TILE:(r + 1) * TILE, c * TILE:(c + 1) * TILE] = exemplar
        return canvas

    train_images, train_digits = [], []
    for _ in range(n_train):
        digits = rng.choice(regular, size=(grid_side, grid_side))
        train_images.append(compose(digits))
        train_digits.append(digits)

    test_images, test_digits, test_tiles = [], [], []
    for _ in range(n_test):
        if rng.random() < normal_rate_test:
            digits = rng.choice(regular, size=(grid_side, grid_side))
        else:
            while True:
                irregular = rng.random((grid_side, grid_side)) < irregular_rate_test
                if irregular.any():
                    break
            digits = rng.choice(regular, size=(grid_side, grid_side))
            digits[irregular] = excluded_digit
        test_images.append(compose(digits))
        test_digits.append(digits)
        test_tiles.append(digits == excluded_digit)

    train = composite_dataset("train", train_images,
                              tile_digits=np.stack(train_digits).astype(np.int8))
    test = composite_dataset("test", test_images, tile_labels=np.stack(test_tiles),
                             tile_digits=np.stack(test_digits).astype(np.int8))
    return train, test


def write_ir_mnist(train: Dataset, test: Dataset, root):
    """Write both splits in the on-disk layout above."""
    root = Path(root)
    for split, ds in (("train", train), ("test", test)):
        if ds.images is None:
            raise ConfigurationError(f"{split} dataset carries no raw composites to write")
        d = root / split
        d.mkdir(parents=True, exist_ok=True)
        for i, im in enumerate(ds.images):
            save_gray_u8(d / f"IMG_{i}.png", im)

    if test.tile_labels is None:
        raise ConfigurationError("test dataset carries no tile labels to write")
    (root / "test" / "masks").mkdir(exist_ok=True)
    with open(root / "test" / "labels.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["image_index", "tile_row", "tile_col", "is_irregular"])
        for i, tiles in enumerate(test.tile_labels):
            for r in range(tiles.shape[0]):
                for c in range(tiles.shape[1]):
                    writer.writerow([i, r, c, int(tiles[r, c])])
            save_mask(root / "test" / "masks" / f"IMG_{i}.png", _tile_masks_to_pixels(tiles))


def _indexed_pngs(directory: Path):
    found = {}
    for p in directory.glob("IMG_*.png"):
        m = re.fullmatch(r"IMG_(\d+)\.png", p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise DataLoadError(f"no IMG_<idx>.png files under {directory}")
    paths = []
    for i in range(len(found)):
        if i not in found:
            raise DataLoadError(f"missing image {directory / f'IMG_{i}.png'}")
        paths.append(found[i])
    return paths


def load_ir_mnist(root, split) -> Dataset:
    """Load one split. The test split picks up labels.csv and masks/ when present."""
    root = Path(root)
    if split not in ("train", "test"):
        raise ConfigurationError(f"split must be train or test, got {split!r}")
    directory = root / split
    if not directory.is_dir():
        raise DataLoadError(f"missing split directory {directory}")
    images = [load_gray_u8(p) for p in _indexed_pngs(directory)]
    h, w = images[0].shape
    if any(im.shape != (h, w) for im in images):
        raise DataLoadError(f"{directory}: images disagree on size")
    if h % TILE or w % TILE:
        raise DataLoadError(f"{directory}: image size {h}x{w} is not a multiple of {TILE}")

    tile_labels = None
    labels_path = directory / "labels.csv"
    if labels_path.exists():
        grid = (h // TILE, w // TILE)
        tile_labels = np.zeros((len(images),) + grid, dtype=bool)
        seen = np.zeros_like(tile_labels)
        with open(labels_path, newline="") as f:
            for row_no, row in enumerate(csv.DictReader(f), start=2):
                try:
                    i, r, c = int(row["image_index"]), int(row["tile_row"]), int(row["tile_col"])
                    flag = int(row["is_irregular"])
                except (KeyError, TypeError, ValueError):
                    raise DataLoadError(f"{labels_path}: bad row {row_no}") from None
                if not (0 <= i < len(images) and 0 <= r < grid[0] and 0 <= c < grid[1]):
                    raise DataLoadError(f"{labels_path}: row {row_no} out of range")
                tile_labels[i, r, c] = bool(flag)
                seen[i, r, c] = True
        if not seen.all():
            raise DataLoadError(f"{labels_path}: not every tile is labeled")

    mask_dir = directory / "masks"
    if mask_dir.is_dir():
        if tile_labels is None:
            raise DataLoadError(f"{mask_dir} present but {labels_path} is missing")
        for i in range(len(images)):
            p = mask_dir / f"IMG_{i}.png"
            if not p.exists():
                raise DataLoadError(f"missing mask {p}")
            mask = load_mask(p)
            if mask.shape != (h, w):
                raise DataLoadError(f"{p}: mask shape {mask.shape} does not match image {h}x{w}")
            if not np.array_equal(mask, _tile_masks_to_pixels(tile_labels[i])):
                raise DataLoadError(f"{p}: mask disagrees with labels.csv")

    return composite_dataset(split, images, tile_labels=tile_labels)
