"""Gaussian corruption of model inputs: x_noisy = clip(x + gamma * eta, 0, 1).

eta is drawn i.i.d. from N(0, sigma^2) per element. gamma around 0.4 and above
produces corruption heavy enough that the inpainter must rely on context
rather than copying its input.
"""

from dataclasses import dataclass

import numpy as np


def derive_seed(*parts) -> int:
    """Mix integers (and short strings) into a single reproducible seed."""
    entropy = [p if isinstance(p, int) else int.from_bytes(str(p).encode(), "little") for p in parts]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


@dataclass(frozen=True)
class NoiseConfig:
    gamma: float = 0.4
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")


def sample_noise(shape, cfg: NoiseConfig) -> np.ndarray:
    """The additive term gamma * eta as float32, before any clipping."""
    rng = np.random.default_rng(cfg.seed)
    return (cfg.gamma * rng.normal(0.0, cfg.sigma, size=shape)).astype(np.float32)


def inject_noise(x, cfg: NoiseConfig) -> np.ndarray:
    """Corrupt an input (or batch) with seeded Gaussian noise, clipped to [0, 1]."""
    x = np.asarray(x, dtype=np.float32)
    return np.clip(x + sample_noise(x.shape, cfg), 0.0, 1.0)
