import numpy as np
import pytest
import torch

from irdetect.data.digits import synthetic_digit_bank
from irdetect.models.detector import PatchScorer
from irdetect.models.factory import ArchConfig, init_models
from irdetect.models.inpainter import InpainterNet

# small detector: stride 4, so 16x16 inputs give a 4x4 grid
MINI_DETECTOR_SPEC = (((3, 4), 3, 2), ((4, 6), 3, 2), ((6, 1), 1, 1))
MINI_WIDTHS = (4, 6)


@pytest.fixture(scope="session")
def digit_bank():
    return synthetic_digit_bank(per_class=12, seed=7)


@pytest.fixture(scope="session")
def mini_arch():
    return ArchConfig((16, 16), MINI_WIDTHS, MINI_DETECTOR_SPEC)


@pytest.fixture
def mini_models(mini_arch):
    return init_models(mini_arch, seed=5)


def mini_pair(seed=5, input_size=(16, 16)):
    return init_models(ArchConfig(input_size, MINI_WIDTHS, MINI_DETECTOR_SPEC), seed)


def zeroed_pair(input_size, widths=(2, 3), spec=None):
    """Models with every parameter zero: both nets emit 0.5 everywhere."""
    inpainter = InpainterNet(widths)
    detector = PatchScorer(spec) if spec is not None else PatchScorer()
    with torch.no_grad():
        for net in (inpainter, detector):
            for p in net.parameters():
                p.zero_()
    inpainter.input_size = tuple(input_size)
    detector.input_size = tuple(input_size)
    return inpainter, detector


def random_inputs(n, hw, seed=0):
    rng = np.random.default_rng(seed)
    return rng.random((n, 3) + tuple(hw), dtype=np.float32)


# ------------------------------------------------ score-set metric references

def staircase_points(scores, labels):
    """ROC points from brute-force threshold enumeration (flag when
    score >= threshold)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    points = [(0.0, 0.0)]
    for thr in np.unique(scores)[::-1]:
        flags = scores >= thr
        points.append(((flags & ~labels).sum() / (~labels).sum(),
                       (flags & labels).sum() / labels.sum()))
    return points


def auc_pairwise(scores, labels):
    """Probability a random positive outscores a random negative, ties at half."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[np.asarray(labels, dtype=bool)]
    neg = scores[~np.asarray(labels, dtype=bool)]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (len(pos) * len(neg))


def eer_bisection(points):
    """Root of interp(tpr)(f) + f - 1 on a dense grid, independent of eer_of."""
    pts = sorted(points)
    fpr = np.array([p[0] for p in pts])
    tpr = np.array([p[1] for p in pts])
    lo, hi = 0.0, 1.0
    h = lambda f: np.interp(f, fpr, tpr) + f - 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if h(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
