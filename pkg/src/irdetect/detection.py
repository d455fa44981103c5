"""Pixel-level irregularity masks from the trained pair.

Two coarse masks intersect: pixels whose channel-mean reconstruction
residual reaches alpha, and pixels lying in blocks the detector scores at
or below zeta. The residual mask finds where the inpainter disagreed with
the input; the detector mask keeps only blocks it distrusts, which strips
residual noise from regions the detector still accepts.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .models.detector import score_grid
from .models.geometry import RegionGrid, region_map
from .models.inpainter import inpaint


@dataclass(frozen=True)
class Thresholds:
    alpha: float  # residual threshold, >= 0
    zeta: float   # detector score threshold, in (0, 1)

    def __post_init__(self):
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 < self.zeta < 1:
            raise ConfigurationError(f"zeta must be in (0, 1), got {self.zeta}")


@dataclass(frozen=True)
class IrregularityMask:
    pixels: np.ndarray          # final bool (H, W)
    residual_pixels: np.ndarray  # bool (H, W), residual branch alone
    region_pixels: np.ndarray    # bool (H, W), detector branch alone
    thresholds: Thresholds

    @property
    def is_empty(self):
        return not self.pixels.any()


def residual_map(x, x_inpainted) -> np.ndarray:
    """Channel-mean absolute difference, shape (H, W)."""
    x = np.asarray(x, dtype=np.float32)
    y = np.asarray(x_inpainted, dtype=np.float32)
    if x.shape != y.shape or x.ndim != 3:
        raise ValueError(f"inputs must share a (C, H, W) shape, got {x.shape} vs {y.shape}")
    return np.abs(x - y).mean(axis=0)


def residual_mask(resid, alpha) -> np.ndarray:
    """Pixels whose residual reaches alpha."""
    resid = np.asarray(resid)
    if alpha < 0:
        raise ConfigurationError(f"alpha must be >= 0, got {alpha}")
    return resid >= alpha


def region_mask(scores, grid: RegionGrid, zeta) -> np.ndarray:
    """Pixels of every block whose detector score is at most zeta."""
    scores = np.asarray(scores)
    if not 0 < zeta < 1:
        raise ConfigurationError(f"zeta must be in (0, 1), got {zeta}")
    if scores.shape != (grid.n_rows, grid.n_cols):
        raise ValueError(
            f"score grid {scores.shape} does not match region grid "
            f"{grid.n_rows}x{grid.n_cols}")
    return grid.pixel_mask(scores <= zeta)


def fuse_maps(resid, scores, grid: RegionGrid, thresholds: Thresholds) -> IrregularityMask:
    """Intersect the two branch masks. Empty in either branch means empty out."""
    resid = np.asarray(resid)
    if resid.shape != grid.frame_shape:
        raise ValueError(
            f"residual map {resid.shape} does not match frame {grid.frame_shape}")
    a = residual_mask(resid, thresholds.alpha)
    b = region_mask(scores, grid, thresholds.zeta)
    return IrregularityMask(a & b, a, b, thresholds)


def fuse(x, inpainter, detector, thresholds: Thresholds) -> IrregularityMask:
    """End-to-end mask for one clean input."""
    resid = residual_map(x, inpaint(inpainter, x))
    scores = score_grid(detector, x)
    grid = region_map(detector.layer_spec, resid.shape)
    return fuse_maps(resid, scores, grid, thresholds)


def frame_score_maps(resid, scores, grid: RegionGrid) -> float:
    """max over pixels of min(residual, 1 - block score).

    A frame scores high only where some pixel both reconstructs badly and
    sits in a block the detector dislikes; thresholding this scalar at 1 - q
    flags exactly the frames whose fused mask under (alpha=1-q, zeta=q) is
    non-empty, for any q in (0, 1) and residuals scaled to [0, 1].
    """
    resid = np.asarray(resid, dtype=np.float64)
    if resid.shape != grid.frame_shape:
        raise ValueError(
            f"residual map {resid.shape} does not match frame {grid.frame_shape}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (grid.n_rows, grid.n_cols):
        raise ValueError(
            f"score grid {scores.shape} does not match region grid "
            f"{grid.n_rows}x{grid.n_cols}")
    inverted = np.kron(1.0 - scores, np.ones((grid.block_h, grid.block_w)))
    return float(np.minimum(resid, inverted).max())


def frame_score(x, inpainter, detector) -> float:
    """Scalar irregularity score of one clean input."""
    resid = residual_map(x, inpaint(inpainter, x))
    scores = score_grid(detector, x)
    grid = region_map(detector.layer_spec, resid.shape)
    return frame_score_maps(resid, scores, grid)
