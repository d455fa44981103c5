"""Adversarial losses over detector score grids.

The detector pushes scores on real inputs toward 1 and scores on inpainted
inputs toward 0; the inpainter pushes its outputs' scores back toward 1.
Two interchangeable forms:

  literal        log of the squared distance between the grid and its target,
                 summed per sample:  -log(|o_real|^2 + eps) - log(|1 - o_fake|^2 + eps)
  per_cell_bce   mean binary cross entropy per grid cell, the numerically
                 tamer reformulation with the same fixed points (default)

Grids are (n1, n2) or batched (B, n1, n2); batch entries average.
"""

import torch
from torch.nn import functional as F

LOG_EPS = 1e-8
LOSS_FORMS = ("literal", "per_cell_bce")


def adversarial_targets(shape):
    """The all-ones target grid for real inputs."""
    return torch.ones(shape)


def _as_grid(x, name):
    t = torch.as_tensor(x)
    if t.ndim == 2:
        t = t.unsqueeze(0)
    if t.ndim != 3:
        raise ValueError(f"{name} must be (n1, n2) or (B, n1, n2), got {tuple(t.shape)}")
    return t


def _check(o_real, o_fake, targets):
    if o_real is not None and o_fake is not None and o_real.shape[1:] != o_fake.shape[1:]:
        raise ValueError(
            f"grid shapes disagree: {tuple(o_real.shape[1:])} vs {tuple(o_fake.shape[1:])}")
    if targets is not None:
        t = torch.as_tensor(targets)
        ref = o_fake if o_fake is not None else o_real
        if tuple(t.shape[-2:]) != tuple(ref.shape[-2:]):
            raise ValueError(
                f"targets shape {tuple(t.shape)} does not match grids {tuple(ref.shape[-2:])}")
        if not torch.all(t == 1):
            raise ValueError("targets must be the all-ones grid")


def _sq_norm(g):
    return g.pow(2).sum(dim=(-2, -1))


def detector_loss(o_real, o_fake, targets=None, form="per_cell_bce"):
    """Loss the detector descends: low when real scores sit near 1 and
    inpainted scores near 0."""
    o_real, o_fake = _as_grid(o_real, "o_real"), _as_grid(o_fake, "o_fake")
    _check(o_real, o_fake, targets)
    if form == "literal":
        real_term = torch.log(_sq_norm(o_real) + LOG_EPS)
        fake_term = torch.log(_sq_norm(1.0 - o_fake) + LOG_EPS)
        return (-real_term - fake_term).mean()
    if form == "per_cell_bce":
        return (F.binary_cross_entropy(o_real, torch.ones_like(o_real))
                + F.binary_cross_entropy(o_fake, torch.zeros_like(o_fake)))
    raise ValueError(f"unknown loss form {form!r}")


def inpainter_loss(o_fake, targets=None, form="per_cell_bce"):
    """Loss the inpainter descends: low when its outputs score near 1."""
    o_fake = _as_grid(o_fake, "o_fake")
    _check(None, o_fake, targets)
    if form == "literal":
        return torch.log(_sq_norm(1.0 - o_fake) + LOG_EPS).mean()
    if form == "per_cell_bce":
        return F.binary_cross_entropy(o_fake, torch.ones_like(o_fake))
    raise ValueError(f"unknown loss form {form!r}")
