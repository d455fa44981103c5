"""ROC evaluation of a trained pair against labeled datasets.

The two thresholds sweep jointly: a coupled path zeta = q,
alpha = (1 - q) * alpha_max for q in (0, 1) (so both branches loosen
together), unioned with a coarse independent grid. Each threshold pair
yields one (FPR, TPR) operating point at the chosen protocol level; the
reported curve is the upper envelope of those points.

Protocol levels
  frame   a frame counts as flagged when its fused mask is non-empty
  pixel   a positive frame counts as hit when the fused mask covers at
          least 40% of its ground-truth pixels; false positives are
          counted per frame, as any flagged negative frame
  region  each detector block counts separately; a block is detected when
          its score is at most zeta and it holds a residual pixel >= alpha
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .detection import Thresholds, residual_map
from .errors import ConfigurationError
from .models.detector import score_grid
from .models.geometry import region_map
from .models.inpainter import inpaint

LEVELS = ("frame", "pixel", "region")
PIXEL_OVERLAP = 0.4


def _mask_pixels(mask):
    return mask.pixels if hasattr(mask, "pixels") else np.asarray(mask, dtype=bool)


def frame_flagged(mask) -> bool:
    """Frame-level verdict: irregular iff at least one pixel is flagged."""
    return bool(_mask_pixels(mask).any())


def pixel_match(mask, gt) -> bool:
    """Pixel-level verdict for a positive frame: the flagged pixels must
    cover at least 40% of the ground truth. False when the ground truth is
    empty (nothing there to localize)."""
    pixels = _mask_pixels(mask)
    gt = np.asarray(gt, dtype=bool)
    if pixels.shape != gt.shape:
        raise ValueError(f"mask shape {pixels.shape} != ground truth {gt.shape}")
    if not gt.any():
        return False
    return bool((pixels & gt).sum() / gt.sum() >= PIXEL_OVERLAP)


@dataclass(frozen=True)
class RocPoint:
    fpr: float
    tpr: float
    alpha: float = None
    zeta: float = None


@dataclass(frozen=True)
class EvalCurve:
    points: tuple       # upper-envelope RocPoints, sorted by (fpr, tpr)
    auc: float
    eer: float
    level: str
    n_sweep: int


def default_sweep(alpha_max=1.0, path_points=101, grid_points=21):
    """Coupled path plus coarse independent grid, deduplicated."""
    if alpha_max <= 0:
        raise ConfigurationError(f"alpha_max must be > 0, got {alpha_max}")
    pairs = []
    for q in (np.arange(path_points) + 0.5) / path_points:
        pairs.append(((1.0 - q) * alpha_max, q))
    for alpha in np.linspace(0.0, alpha_max, grid_points):
        for zeta in (np.arange(grid_points) + 0.5) / grid_points:
            pairs.append((float(alpha), float(zeta)))
    seen, sweep = set(), []
    for alpha, zeta in pairs:
        key = (round(alpha, 12), round(zeta, 12))
        if key not in seen:
            seen.add(key)
            sweep.append(Thresholds(float(alpha), float(zeta)))
    return sweep


def _coords(points):
    pts = []
    for p in points:
        fpr, tpr = (p.fpr, p.tpr) if isinstance(p, RocPoint) else (p[0], p[1])
        if not (np.isfinite(fpr) and np.isfinite(tpr)):
            raise ValueError(f"non-finite ROC point ({fpr}, {tpr})")
        if not (0 <= fpr <= 1 and 0 <= tpr <= 1):
            raise ValueError(f"ROC point ({fpr}, {tpr}) outside the unit square")
        pts.append((float(fpr), float(tpr)))
    pts.sort()
    if not pts or pts[0] != (0.0, 0.0):
        pts.insert(0, (0.0, 0.0))
    if pts[-1] != (1.0, 1.0):
        pts.append((1.0, 1.0))
    return pts


def auc_of(points) -> float:
    """Trapezoidal area under the polyline through the points (sorted by
    FPR, endpoints (0,0) and (1,1) added when absent)."""
    pts = _coords(points)
    fpr, tpr = zip(*pts)
    return float(np.trapezoid(tpr, fpr))


def eer_of(points) -> float:
    """FPR where the polyline crosses TPR = 1 - FPR, linearly interpolated."""
    pts = _coords(points)
    for (f0, t0), (f1, t1) in zip(pts, pts[1:]):
        h0, h1 = f0 + t0 - 1.0, f1 + t1 - 1.0
        if h0 <= 0.0 <= h1:
            lam = 0.0 if h1 == h0 else h0 / (h0 - h1)
            return float(f0 + lam * (f1 - f0))
    raise ValueError("curve never crosses TPR = 1 - FPR")


def upper_envelope(points):
    """Non-dominated subset: for each FPR the best TPR, strictly increasing."""
    ordered = sorted(points, key=lambda p: (p.fpr, -p.tpr))
    kept, best = [], -1.0
    for p in ordered:
        if p.tpr > best:
            kept.append(p)
            best = p.tpr
    if not kept or (kept[0].fpr, kept[0].tpr) != (0.0, 0.0):
        kept.insert(0, RocPoint(0.0, 0.0))
    if (kept[-1].fpr, kept[-1].tpr) != (1.0, 1.0):
        kept.append(RocPoint(1.0, 1.0))
    return kept


@dataclass
class SampleMaps:
    """Per-sample precomputation shared by every threshold pair."""
    scores: np.ndarray          # (n1, n2) detector grid
    block_max: np.ndarray       # (n1, n2) max residual inside each block
    frame_label: bool = None
    gt_count: int = 0           # pixels in the ground-truth mask
    gt_block_resid: list = None  # per flat block, sorted residuals under gt
    tile_labels: np.ndarray = None


def compute_maps(dataset, inpainter, detector, level="frame"):
    """Residual/score summaries for each sample, plus the region grid."""
    if level not in LEVELS:
        raise ConfigurationError(f"level must be one of {LEVELS}, got {level!r}")
    if level in ("frame", "pixel") and not dataset.has_frame_labels:
        raise ConfigurationError(f"{level}-level evaluation needs frame labels")
    if level == "pixel" and not dataset.has_pixel_masks:
        raise ConfigurationError("pixel-level evaluation needs ground-truth masks")
    if level == "region" and not dataset.has_tile_labels:
        raise ConfigurationError("region-level evaluation needs tile labels")

    grid = region_map(detector.layer_spec, dataset.input_size)
    maps = []
    for i in range(len(dataset)):
        x = dataset.input(i)
        resid = residual_map(x, inpaint(inpainter, x))
        scores = score_grid(detector, x)
        blocks = resid.reshape(grid.n_rows, grid.block_h, grid.n_cols, grid.block_w)
        m = SampleMaps(scores=scores, block_max=blocks.max(axis=(1, 3)))
        if level in ("frame", "pixel"):
            m.frame_label = dataset.frame_label(i)
        if level == "pixel" and m.frame_label:
            gt = dataset.pixel_mask(i)
            if gt is None or not gt.any():
                raise ConfigurationError(
                    f"sample {i} is labeled irregular but has no ground-truth pixels")
            m.gt_count = int(gt.sum())
            m.gt_block_resid = []
            for r in range(grid.n_rows):
                for c in range(grid.n_cols):
                    top, left, bh, bw = grid.block(r, c)
                    sel = gt[top:top + bh, left:left + bw]
                    vals = resid[top:top + bh, left:left + bw][sel]
                    m.gt_block_resid.append(np.sort(vals))
        if level == "region":
            if dataset.tile_labels[i].shape != scores.shape:
                raise ConfigurationError(
                    f"tile labels {dataset.tile_labels[i].shape} do not match the "
                    f"detector grid {scores.shape}")
            m.tile_labels = dataset.tile_labels[i]
        maps.append(m)
    return maps, grid


def rates_at(maps, grid, thr: Thresholds, level):
    """One (FPR, TPR) operating point for a threshold pair."""
    low = [(m.scores <= thr.zeta) for m in maps]
    hit = [(m.block_max >= thr.alpha) for m in maps]
    flagged = np.array([(lo & hi).any() for lo, hi in zip(low, hit)])

    if level == "frame":
        labels = np.array([m.frame_label for m in maps])
        tpr = flagged[labels].mean()
        fpr = flagged[~labels].mean()
        return float(fpr), float(tpr)

    if level == "pixel":
        labels = np.array([m.frame_label for m in maps])
        hits = []
        for m, lo in zip(maps, low):
            if not m.frame_label:
                continue
            covered = sum(
                len(vals) - np.searchsorted(vals, thr.alpha, side="left")
                for vals, passed in zip(m.gt_block_resid, lo.ravel()) if passed)
            hits.append(covered / m.gt_count >= PIXEL_OVERLAP)
        tpr = np.mean(hits)
        fpr = flagged[~labels].mean()
        return float(fpr), float(tpr)

    # region level: every block is a unit
    tp = fp = pos = neg = 0
    for m, lo, hi in zip(maps, low, hit):
        detected = lo & hi
        pos += int(m.tile_labels.sum())
        neg += int((~m.tile_labels).sum())
        tp += int((detected & m.tile_labels).sum())
        fp += int((detected & ~m.tile_labels).sum())
    return fp / neg, tp / pos


def roc_from_maps(maps, grid, level, sweep=None) -> EvalCurve:
    """Sweep thresholds over precomputed maps and envelope the points."""
    if sweep is None:
        sweep = default_sweep()
    if level in ("frame", "pixel"):
        labels = [m.frame_label for m in maps]
        if not any(labels) or all(labels):
            raise ConfigurationError(
                f"{level}-level ROC needs both regular and irregular frames")
    if level == "region":
        pos = sum(int(m.tile_labels.sum()) for m in maps)
        neg = sum(int((~m.tile_labels).sum()) for m in maps)
        if pos == 0 or neg == 0:
            raise ConfigurationError("region-level ROC needs both tile classes")
    raw = []
    for thr in sweep:
        fpr, tpr = rates_at(maps, grid, thr, level)
        raw.append(RocPoint(fpr, tpr, thr.alpha, thr.zeta))
    envelope = tuple(upper_envelope(raw))
    return EvalCurve(envelope, auc_of(envelope), eer_of(envelope), level, len(sweep))


def roc(dataset, inpainter, detector, level="frame", sweep=None) -> EvalCurve:
    maps, grid = compute_maps(dataset, inpainter, detector, level)
    return roc_from_maps(maps, grid, level, sweep)


def write_metrics(path, curve: EvalCurve):
    Path(path).write_text(
        f"level={curve.level}\n"
        f"eer={curve.eer:.6f}\n"
        f"auc={curve.auc:.6f}\n"
        f"sweep_points={curve.n_sweep}\n")


def read_metrics(path):
    out = {}
    for line in Path(path).read_text().splitlines():
        key, value = line.split("=", 1)
        out[key] = value if key == "level" else float(value)
    return out


def write_roc_csv(path, curve: EvalCurve):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["alpha", "zeta", "fpr", "tpr"])
        for p in curve.points:
            writer.writerow([
                "" if p.alpha is None else f"{p.alpha:.6f}",
                "" if p.zeta is None else f"{p.zeta:.6f}",
                f"{p.fpr:.6f}", f"{p.tpr:.6f}"])


def plot_roc(path, curve: EvalCurve):
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([p.fpr for p in curve.points], [p.tpr for p in curve.points],
            marker="o", markersize=3, label=f"AUC={curve.auc:.3f}, EER={curve.eer:.3f}")
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"{curve.level}-level ROC")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
