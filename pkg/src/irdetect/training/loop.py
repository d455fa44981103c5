"""Alternating adversarial training of the inpainter/detector pair.

Each step draws a batch, corrupts it with freshly seeded Gaussian noise,
updates the detector (real scores up, inpainted scores down), then updates
the inpainter through the refreshed detector. Both networks use plain
momentum SGD: v <- mu v - lr g, theta <- theta + v.

Every ``eval_interval`` steps a held-out slice is scored. The detector is
remembered at its widest real-vs-inpainted score gap, the inpainter at its
lowest clean-reconstruction error; the two bests need not come from the
same step. All randomness is keyed on the run seed, so identical
(data, config) runs are bit-identical.
"""

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch.nn import functional as F

from ..data.noise import NoiseConfig, derive_seed, inject_noise
from ..errors import ConfigurationError, TrainingDivergedError
from ..models.checkpoint import save_checkpoint
from ..models.factory import ArchConfig, init_models
from .losses import LOSS_FORMS, detector_loss, inpainter_loss


@dataclass
class TrainConfig:
    learning_rate: float = 0.002
    momentum: float = 0.9
    batch_size: int = 16
    gamma: float = 0.4
    sigma: float = 1.0
    max_steps: int = 20000
    eval_interval: int = 500
    seed: int = 0
    loss_form: str = "per_cell_bce"
    recon_weight: float = 0.0
    device: str = "cpu"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_steps < 0:
            raise ConfigurationError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.eval_interval < 1:
            raise ConfigurationError(f"eval_interval must be >= 1, got {self.eval_interval}")
        if self.loss_form not in LOSS_FORMS:
            raise ConfigurationError(f"loss_form must be one of {LOSS_FORMS}")
        if self.recon_weight < 0:
            raise ConfigurationError(f"recon_weight must be >= 0, got {self.recon_weight}")


@dataclass
class EvalPoint:
    step: int
    d_loss: float
    i_loss: float
    val_gap: float
    val_recon: float


@dataclass
class TrainState:
    inpainter: object
    detector: object
    opt_inpainter: object
    opt_detector: object
    step: int = 0
    last_d_loss: float = float("nan")
    last_i_loss: float = float("nan")


@dataclass
class FitResult:
    best_inpainter: object
    best_detector: object
    last_inpainter: object
    last_detector: object
    history: list = field(default_factory=list)
    best_recon: float = float("inf")
    best_gap: float = float("-inf")
    best_inpainter_step: int = 0
    best_detector_step: int = 0


def make_state(arch: ArchConfig, cfg: TrainConfig) -> TrainState:
    inpainter, detector = init_models(arch, cfg.seed)
    inpainter.to(cfg.device)
    detector.to(cfg.device)
    opt_i = torch.optim.SGD(inpainter.parameters(), lr=cfg.learning_rate,
                            momentum=cfg.momentum)
    opt_d = torch.optim.SGD(detector.parameters(), lr=cfg.learning_rate,
                            momentum=cfg.momentum)
    return TrainState(inpainter, detector, opt_i, opt_d)


def train_step(state: TrainState, batch, cfg: TrainConfig):
    """One detector update followed by one inpainter update on ``batch``
    (numpy, (B, 3, H, W) in [0, 1]). Noise is seeded per step."""
    noise_cfg = NoiseConfig(cfg.gamma, cfg.sigma, derive_seed(cfg.seed, "noise", state.step))
    x = torch.as_tensor(np.asarray(batch, dtype=np.float32), device=cfg.device)
    x_noisy = torch.as_tensor(inject_noise(batch, noise_cfg), device=cfg.device)

    fake = state.inpainter(x_noisy)
    o_real = state.detector(x)
    if not (torch.isfinite(fake).all() and torch.isfinite(o_real).all()):
        raise TrainingDivergedError(state.step + 1, "non-finite network activations")

    d_loss = detector_loss(o_real, state.detector(fake.detach()), form=cfg.loss_form)
    state.opt_detector.zero_grad()
    d_loss.backward()
    state.opt_detector.step()

    i_loss = inpainter_loss(state.detector(fake), form=cfg.loss_form)
    if cfg.recon_weight > 0:
        i_loss = i_loss + cfg.recon_weight * F.mse_loss(fake, x)
    state.opt_inpainter.zero_grad()
    i_loss.backward()
    state.opt_inpainter.step()

    state.step += 1
    state.last_d_loss = float(d_loss.detach())
    state.last_i_loss = float(i_loss.detach())
    if not (np.isfinite(state.last_d_loss) and np.isfinite(state.last_i_loss)):
        raise TrainingDivergedError(
            state.step, f"non-finite loss (d={state.last_d_loss}, i={state.last_i_loss})")
    return state


def _batches(n, batch_size, rng):
    order = rng.permutation(n)
    size = min(batch_size, n)
    for start in range(0, n - size + 1, size):
        yield order[start:start + size]


def _stack(dataset, indices):
    return np.stack([dataset.input(int(i)) for i in indices])


def validation_metrics(state: TrainState, validation, cfg: TrainConfig):
    """(score gap, clean reconstruction error) on the held-out slice.

    Gap is mean detector score on clean inputs minus mean score on inpainted
    noisy inputs; reconstruction error is the mean squared pixel error of the
    inpainter on clean inputs. Validation noise is seeded per sample index,
    so the corruption is frozen across evaluations within a run.
    """
    real_scores, fake_scores, recons = [], [], []
    with torch.no_grad():
        for start in range(0, len(validation), cfg.batch_size):
            idx = range(start, min(start + cfg.batch_size, len(validation)))
            batch = _stack(validation, idx)
            noisy = np.stack([
                inject_noise(batch[j], NoiseConfig(
                    cfg.gamma, cfg.sigma, derive_seed(cfg.seed, "val-noise", int(i))))
                for j, i in enumerate(idx)])
            x = torch.as_tensor(batch, device=cfg.device)
            x_noisy = torch.as_tensor(noisy, device=cfg.device)
            real_scores.append(state.detector(x).mean().item() * len(batch))
            fake_scores.append(state.detector(state.inpainter(x_noisy)).mean().item() * len(batch))
            recons.append((state.inpainter(x) - x).pow(2).mean().item() * len(batch))
    n = len(validation)
    gap = (sum(real_scores) - sum(fake_scores)) / n
    recon = sum(recons) / n
    if not (np.isfinite(gap) and np.isfinite(recon)):
        raise TrainingDivergedError(state.step, f"non-finite validation metrics "
                                                f"(gap={gap}, recon={recon})")
    return gap, recon


def _snapshot(module):
    return copy.deepcopy({k: v.cpu() for k, v in module.state_dict().items()})


def fit(train, validation, cfg: TrainConfig, arch: ArchConfig,
        out_dir=None, log=None) -> FitResult:
    """Run the adversarial loop for ``cfg.max_steps`` steps.

    Returns the best-validation snapshots of both networks alongside the
    final ones. When ``out_dir`` is given, writes inpainter_best.ckpt,
    detector_best.ckpt, last.ckpt and train_log.txt there.
    """
    if len(train) == 0:
        raise ConfigurationError("training dataset is empty")
    if len(validation) == 0:
        raise ConfigurationError("validation dataset is empty")

    state = make_state(arch, cfg)
    result = FitResult(None, None, None, None)
    best_i = _snapshot(state.inpainter)
    best_d = _snapshot(state.detector)
    lines = []

    epoch = 0
    while state.step < cfg.max_steps:
        rng = np.random.default_rng(derive_seed(cfg.seed, "shuffle", epoch))
        for idx in _batches(len(train), cfg.batch_size, rng):
            train_step(state, _stack(train, idx), cfg)
            if state.step % cfg.eval_interval == 0:
                gap, recon = validation_metrics(state, validation, cfg)
                result.history.append(EvalPoint(
                    state.step, state.last_d_loss, state.last_i_loss, gap, recon))
                if gap > result.best_gap:
                    result.best_gap, result.best_detector_step = gap, state.step
                    best_d = _snapshot(state.detector)
                if recon < result.best_recon:
                    result.best_recon, result.best_inpainter_step = recon, state.step
                    best_i = _snapshot(state.inpainter)
                line = (f"step={state.step} d_loss={state.last_d_loss:.6f} "
                        f"i_loss={state.last_i_loss:.6f} val_gap={gap:.6f} "
                        f"val_recon={recon:.6f}")
                lines.append(line)
                if log is not None:
                    log(line)
            if state.step >= cfg.max_steps:
                break
        epoch += 1

    best_inpainter, best_detector = init_models(arch, cfg.seed)
    best_inpainter.load_state_dict(best_i)
    best_detector.load_state_dict(best_d)
    result.best_inpainter, result.best_detector = best_inpainter, best_detector
    result.last_inpainter, result.last_detector = state.inpainter, state.detector

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        save_checkpoint(out_dir / "inpainter_best.ckpt", arch,
                        inpainter=best_inpainter,
                        step=result.best_inpainter_step, seed=cfg.seed)
        save_checkpoint(out_dir / "detector_best.ckpt", arch,
                        detector=best_detector,
                        step=result.best_detector_step, seed=cfg.seed)
        save_checkpoint(out_dir / "last.ckpt", arch,
                        inpainter=state.inpainter, detector=state.detector,
                        step=state.step, seed=cfg.seed)
        (out_dir / "train_log.txt").write_text("".join(line + "\n" for line in lines))
    return result
