"""Model construction with seeded, framework-independent initialization.

Weights draw from N(0, sqrt(2 / fan_in)) with fan_in = in_channels * k * k;
biases start at zero. Draws come from numpy generators keyed on the run
seed, so the same (config, seed) pair always yields bit-identical parameters.
"""

from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ConfigurationError
from .detector import DEFAULT_DETECTOR_SPEC, PatchScorer, validate_layer_spec
from .inpainter import DEFAULT_INPAINTER_WIDTHS, InpainterNet


@dataclass(frozen=True)
class ArchConfig:
    input_size: tuple
    inpainter_widths: tuple = DEFAULT_INPAINTER_WIDTHS
    detector_spec: tuple = field(default_factory=lambda: DEFAULT_DETECTOR_SPEC)

    def __post_init__(self):
        h, w = self.input_size
        if h < 1 or w < 1:
            raise ConfigurationError(f"input size must be positive, got {self.input_size}")
        validate_layer_spec(self.detector_spec)


def _seed_parameters(module, seed):
    rng = np.random.default_rng(seed)
    with torch.no_grad():
        for name, p in module.named_parameters():
            if name.endswith("bias"):
                p.zero_()
            else:
                fan_in = int(np.prod(p.shape[1:]))
                std = np.sqrt(2.0 / fan_in)
                values = rng.normal(0.0, std, size=tuple(p.shape)).astype(np.float32)
                p.copy_(torch.from_numpy(values))


def init_models(arch: ArchConfig, seed=0):
    """Freshly initialized (inpainter, detector) for the given architecture."""
    s_inpaint, s_detect = np.random.SeedSequence(seed).spawn(2)
    inpainter = InpainterNet(arch.inpainter_widths)
    detector = PatchScorer(arch.detector_spec)
    _seed_parameters(inpainter, s_inpaint)
    _seed_parameters(detector, s_detect)
    inpainter.input_size = tuple(arch.input_size)
    detector.input_size = tuple(arch.input_size)
    return inpainter, detector


def parameter_count(module) -> int:
    return sum(p.numel() for p in module.parameters())
