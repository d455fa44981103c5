"""Mapping between detector output cells and input-pixel blocks.

With every convolution padded to kernel//2, each layer maps height H to
ceil(H / stride), so an input whose sides are divisible by the product of
strides yields an exact n1 x n2 grid of non-overlapping stride x stride
pixel blocks, one per output cell.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError


def layer_output_hw(hw, kernel, stride):
    h, w = hw
    pad = kernel // 2
    out = lambda n: (n + 2 * pad - kernel) // stride + 1
    return out(h), out(w)


def output_grid(layer_spec, input_size):
    """Detector output (n1, n2) for a given input, by the conv arithmetic above."""
    hw = tuple(input_size)
    for (_, _), kernel, stride in layer_spec:
        hw = layer_output_hw(hw, kernel, stride)
        if hw[0] < 1 or hw[1] < 1:
            raise ConfigurationError(
                f"input {input_size} collapses below 1x1 inside the detector")
    return hw


def total_stride(layer_spec):
    s = 1
    for (_, _), _, stride in layer_spec:
        s *= stride
    return s


@dataclass(frozen=True)
class RegionGrid:
    """Partition of an (n_rows*block_h) x (n_cols*block_w) frame into blocks.

    Cells are addressed by 0-based (row, col); flat indices run 1..n_blocks
    column-major, i = row + col * n_rows + 1.
    """

    n_rows: int
    n_cols: int
    block_h: int
    block_w: int

    @property
    def n_blocks(self):
        return self.n_rows * self.n_cols

    @property
    def frame_shape(self):
        return self.n_rows * self.block_h, self.n_cols * self.block_w

    def block(self, row, col):
        """(top, left, height, width) of the block at cell (row, col)."""
        if not (0 <= row < self.n_rows and 0 <= col < self.n_cols):
            raise IndexError(f"cell ({row}, {col}) outside {self.n_rows}x{self.n_cols} grid")
        return row * self.block_h, col * self.block_w, self.block_h, self.block_w

    def flat_index(self, row, col):
        self.block(row, col)
        return row + col * self.n_rows + 1

    def cell_of_flat(self, i):
        if not 1 <= i <= self.n_blocks:
            raise IndexError(f"flat index {i} outside 1..{self.n_blocks}")
        return (i - 1) % self.n_rows, (i - 1) // self.n_rows

    def cell_containing(self, r, c):
        h, w = self.frame_shape
        if not (0 <= r < h and 0 <= c < w):
            raise IndexError(f"pixel ({r}, {c}) outside {h}x{w} frame")
        return r // self.block_h, c // self.block_w

    def pixel_mask(self, cell_mask) -> np.ndarray:
        """Expand a boolean (n_rows, n_cols) cell mask to frame resolution."""
        cell_mask = np.asarray(cell_mask, dtype=bool)
        if cell_mask.shape != (self.n_rows, self.n_cols):
            raise ValueError(
                f"cell mask shape {cell_mask.shape} does not match grid "
                f"{self.n_rows}x{self.n_cols}")
        return np.kron(cell_mask, np.ones((self.block_h, self.block_w), dtype=bool))


def region_map(layer_spec, input_size) -> RegionGrid:
    """The grid of pixel blocks scored by a detector on inputs of ``input_size``.

    Both sides must be divisible by the detector's total stride so that cells
    correspond to whole blocks.
    """
    h, w = input_size
    stride = total_stride(layer_spec)
    if h % stride or w % stride:
        raise ConfigurationError(
            f"input size {h}x{w} is not divisible by the detector stride {stride}")
    n1, n2 = h // stride, w // stride
    if (n1, n2) != output_grid(layer_spec, input_size):
        raise ConfigurationError(
            f"layer spec maps {h}x{w} to {output_grid(layer_spec, input_size)}, "
            f"expected {n1}x{n2}")
    return RegionGrid(n1, n2, stride, stride)
