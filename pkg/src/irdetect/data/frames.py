"""Video-frame handling: temporal averaging into 3-channel inputs, the
frame-directory layout, and a synthetic moving-texture clip for smoke tests.

Layout::

    <root>/<clip>/frame_<t>.png       t = 0, 1, ... contiguous
    <root>/<clip>/gt/frame_<t>.png    optional 0/255 anomaly masks
    <root>/<clip>/labels.csv          frame_index,is_irregular (one row per frame)

A single clip may also sit directly under <root>.
"""

import csv
import re
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, DataLoadError
from .dataset import Dataset
from .imageio import load_gray, load_mask, save_gray, save_mask

FIRST_VALID_T = 5


def preprocess_temporal(clip, t) -> np.ndarray:
    """Stack of pairwise-averaged frames at t-4, t-2, t.

    Channel k holds 0.5 * (I_j + I_{j-1}) for j = t-4, t-2, t, which folds a
    short motion history into a single 3-channel input. Frames are indexed
    from 0, so the earliest usable t is 5.
    """
    clip = np.asarray(clip, dtype=np.float32)
    if clip.ndim != 3:
        raise ValueError(f"clip must be (T, H, W), got shape {clip.shape}")
    if t < FIRST_VALID_T:
        raise ValueError(f"t must be >= {FIRST_VALID_T}, got {t}")
    if t >= clip.shape[0]:
        raise ValueError(f"t={t} out of range for clip of {clip.shape[0]} frames")
    channels = [0.5 * (clip[j] + clip[j - 1]) for j in (t - 4, t - 2, t)]
    return np.stack(channels).astype(np.float32)


def valid_times(n_frames):
    return range(FIRST_VALID_T, n_frames)


def clip_dataset(clips, split="test") -> Dataset:
    """Dataset over every usable (clip, t) pair.

    ``clips`` is a list of (frames, labels, masks) with frames float32
    (T, H, W) in [0, 1]; labels and masks may be None.
    """
    index = []
    for ci, (frames, labels, masks) in enumerate(clips):
        frames = np.asarray(frames, dtype=np.float32)
        if labels is not None and len(labels) != len(frames):
            raise ConfigurationError(
                f"clip {ci}: {len(labels)} labels for {len(frames)} frames")
        if masks is not None and len(masks) != len(frames):
            raise ConfigurationError(
                f"clip {ci}: {len(masks)} masks for {len(frames)} frames")
        for t in valid_times(len(frames)):
            index.append((ci, t))
    if not index:
        raise ConfigurationError(
            f"no clip has more than {FIRST_VALID_T} frames; nothing to sample")
    shapes = {np.asarray(c[0]).shape[1:] for c in clips}
    if len(shapes) > 1:
        raise ConfigurationError(f"clips disagree on frame size: {sorted(shapes)}")

    arrs = [np.asarray(c[0], dtype=np.float32) for c in clips]
    all_labeled = all(c[1] is not None for c in clips)
    any_masked = any(c[2] is not None for c in clips)

    frame_labels = None
    if all_labeled:
        frame_labels = np.array([bool(clips[ci][1][t]) for ci, t in index])

    def input_fn(i):
        ci, t = index[i]
        return preprocess_temporal(arrs[ci], t)

    def mask_fn(i):
        ci, t = index[i]
        masks = clips[ci][2]
        h, w = arrs[ci].shape[1:]
        if masks is None:
            return np.zeros((h, w), dtype=bool)
        return np.asarray(masks[t], dtype=bool)

    return Dataset(split, input_fn, len(index), shapes.pop(),
                   frame_labels=frame_labels, mask_fn=mask_fn if any_masked else None)


def make_texture_clip(n_frames=50, size=56, anomaly_times=(), patch=14, seed=0):
    """A drifting two-sinusoid texture, optionally with a static checkerboard
    patch planted in the listed frames. Returns (frames, labels, masks)."""
    anomaly_times = sorted(set(int(t) for t in anomaly_times))
    if anomaly_times and (anomaly_times[0] < 0 or anomaly_times[-1] >= n_frames):
        raise ConfigurationError(f"anomaly_times out of range for {n_frames} frames")
    rng = np.random.default_rng(seed)
    r = np.arange(size)[:, None]
    c = np.arange(size)[None, :]
    frames = np.empty((n_frames, size, size), dtype=np.float32)
    for t in range(n_frames):
        frames[t] = (0.5 + 0.22 * np.sin(2 * np.pi * (c + 2.0 * t) / 14.0)
                     + 0.22 * np.sin(2 * np.pi * (r + 1.0 * t) / 17.0))
    labels = np.zeros(n_frames, dtype=bool)
    masks = np.zeros((n_frames, size, size), dtype=bool)
    checker = 0.5 + 0.45 * ((np.indices((patch, patch)).sum(axis=0) % 2) * 2.0 - 1.0)
    for t in anomaly_times:
        r0 = int(rng.integers(0, size - patch + 1))
        c0 = int(rng.integers(0, size - patch + 1))
        frames[t, r0:r0 + patch, c0:c0 + patch] = checker
        masks[t, r0:r0 + patch, c0:c0 + patch] = True
        labels[t] = True
    return np.clip(frames, 0.0, 1.0), labels, masks


def write_frame_directory(root, clips):
    """Write ``clips`` (name -> (frames, labels, masks)) in the layout above."""
    root = Path(root)
    for name, (frames, labels, masks) in clips.items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        frames = np.asarray(frames)
        for t in range(len(frames)):
            save_gray(d / f"frame_{t}.png", frames[t])
        if masks is not None:
            (d / "gt").mkdir(exist_ok=True)
            for t in range(len(frames)):
                save_mask(d / "gt" / f"frame_{t}.png", np.asarray(masks[t], dtype=bool))
        if labels is not None:
            with open(d / "labels.csv", "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["frame_index", "is_irregular"])
                for t in range(len(frames)):
                    writer.writerow([t, int(labels[t])])


def _load_clip(d: Path):
    found = {}
    for p in d.glob("frame_*.png"):
        m = re.fullmatch(r"frame_(\d+)\.png", p.name)
        if m:
            found[int(m.group(1))] = p
    if not found:
        raise DataLoadError(f"no frame_<t>.png files under {d}")
    frames = []
    for t in range(len(found)):
        if t not in found:
            raise DataLoadError(f"missing frame {d / f'frame_{t}.png'}")
        frames.append(load_gray(found[t]))
    frames = np.stack(frames)
    h, w = frames.shape[1:]

    labels = None
    labels_path = d / "labels.csv"
    if labels_path.exists():
        labels = np.zeros(len(frames), dtype=bool)
        seen = np.zeros(len(frames), dtype=bool)
        with open(labels_path, newline="") as f:
            for row_no, row in enumerate(csv.DictReader(f), start=2):
                try:
                    t, flag = int(row["frame_index"]), int(row["is_irregular"])
                except (KeyError, TypeError, ValueError):
                    raise DataLoadError(f"{labels_path}: bad row {row_no}") from None
                if not 0 <= t < len(frames):
                    raise DataLoadError(
                        f"{labels_path}: row {row_no} names frame {t}, not on disk")
                labels[t], seen[t] = bool(flag), True
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise DataLoadError(f"{labels_path}: no row for frame {missing}")

    masks = None
    gt_dir = d / "gt"
    if gt_dir.is_dir():
        masks = np.zeros((len(frames), h, w), dtype=bool)
        for t in range(len(frames)):
            p = gt_dir / f"frame_{t}.png"
            if p.exists():
                mask = load_mask(p)
                if mask.shape != (h, w):
                    raise DataLoadError(
                        f"{p}: mask shape {mask.shape} does not match frames {h}x{w}")
                masks[t] = mask
    return frames, labels, masks


def load_frame_directory(root, split="test") -> Dataset:
    """Load every clip under ``root`` into one dataset of temporal inputs."""
    root = Path(root)
    if not root.is_dir():
        raise DataLoadError(f"missing directory {root}")
    if list(root.glob("frame_*.png")):
        clip_dirs = [root]
    else:
        clip_dirs = sorted(p for p in root.iterdir() if p.is_dir())
        if not clip_dirs:
            raise DataLoadError(f"no clips under {root}")
    clips = [_load_clip(d) for d in clip_dirs]
    return clip_dataset(clips, split=split)
