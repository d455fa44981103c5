"""Dataset container: an ordered collection of 3-channel model inputs plus
whatever ground truth the source provides (frame labels, pixel masks,
per-tile labels)."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError


class Dataset:
    """Samples are indexed 0..len-1. ``input(i)`` returns a float32 array of
    shape (3, H, W) with values in [0, 1].

    Optional ground truth:
      frame_labels  bool array (N,), True = irregular frame
      pixel_mask(i) bool array (H, W) or None
      tile_labels   bool array (N, g, g) for tiled sources, else None
      tile_digits   int array (N, g, g), the digit planted in each tile
                    (generator provenance only, not persisted on disk)
      images        list of raw single-channel uint8 frames for tiled sources
                    (used when writing the dataset back to disk)
    """

    def __init__(self, split, input_fn, size, input_size, *, frame_labels=None,
                 mask_fn=None, tile_labels=None, tile_digits=None, images=None):
        if size < 0:
            raise ConfigurationError(f"dataset size must be >= 0, got {size}")
        if frame_labels is not None and len(frame_labels) != size:
            raise ConfigurationError(
                f"frame_labels has {len(frame_labels)} entries for {size} samples")
        if tile_labels is not None and len(tile_labels) != size:
            raise ConfigurationError(
                f"tile_labels has {len(tile_labels)} entries for {size} samples")
        self.split = split
        self._input_fn = input_fn
        self._size = size
        self.input_size = tuple(input_size)
        self.frame_labels = None if frame_labels is None else np.asarray(frame_labels, dtype=bool)
        self._mask_fn = mask_fn
        self.tile_labels = None if tile_labels is None else np.asarray(tile_labels, dtype=bool)
        self.tile_digits = tile_digits
        self.images = images

    def __len__(self):
        return self._size

    def _check_index(self, i):
        if not 0 <= i < self._size:
            raise IndexError(f"sample index {i} out of range for {self._size} samples")

    def input(self, i) -> np.ndarray:
        self._check_index(i)
        x = self._input_fn(i)
        return np.asarray(x, dtype=np.float32)

    def pixel_mask(self, i):
        self._check_index(i)
        if self._mask_fn is None:
            return None
        return self._mask_fn(i)

    def frame_label(self, i) -> bool:
        self._check_index(i)
        if self.frame_labels is None:
            raise ConfigurationError(f"dataset split {self.split!r} carries no frame labels")
        return bool(self.frame_labels[i])

    @property
    def has_frame_labels(self):
        return self.frame_labels is not None

    @property
    def has_pixel_masks(self):
        return self._mask_fn is not None

    @property
    def has_tile_labels(self):
        return self.tile_labels is not None

    def subset(self, indices) -> "Dataset":
        """A view over the given sample indices (ground truth remapped)."""
        indices = [int(i) for i in indices]
        for i in indices:
            self._check_index(i)
        return Dataset(
            self.split,
            lambda j, idx=indices: self._input_fn(idx[j]),
            len(indices),
            self.input_size,
            frame_labels=None if self.frame_labels is None else self.frame_labels[indices],
            mask_fn=None if self._mask_fn is None else (lambda j, idx=indices: self._mask_fn(idx[j])),
            tile_labels=None if self.tile_labels is None else self.tile_labels[indices],
            tile_digits=None if self.tile_digits is None else self.tile_digits[indices],
            images=None if self.images is None else [self.images[i] for i in indices],
        )


def split_validation(dataset: Dataset, fraction=0.1, seed=0):
    """Deterministically carve a held-out slice off a training dataset.

    Returns (train, validation). The validation slice is a random ``fraction``
    of the samples (at least 1 when the dataset is non-empty and fraction > 0).
    """
    if not 0 <= fraction < 1:
        raise ConfigurationError(f"validation fraction must be in [0, 1), got {fraction}")
    n = len(dataset)
    n_val = min(n, max(1, round(n * fraction))) if (n > 0 and fraction > 0) else 0
    order = np.random.default_rng(seed).permutation(n)
    val_idx = np.sort(order[:n_val])
    train_idx = np.sort(order[n_val:])
    return dataset.subset(train_idx), dataset.subset(val_idx)
