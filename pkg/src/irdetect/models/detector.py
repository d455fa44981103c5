"""Fully convolutional patch scorer.

Five convolutions, no pooling and no fully connected layers, so the output
stays a spatial grid: one sigmoid score per stride x stride input block,
near 1 where a patch looks like training data and near 0 where it does not.
"""

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigurationError
from .geometry import output_grid

# ((in_channels, out_channels), kernel, stride) per layer.
DEFAULT_DETECTOR_SPEC = (
    ((3, 32), 5, 2),
    ((32, 64), 5, 2),
    ((64, 128), 3, 7),
    ((128, 64), 1, 1),
    ((64, 1), 1, 1),
)

SCORE_EPS = 1e-6  # keep sigmoid outputs strictly inside (0, 1) in float32
LEAKY_SLOPE = 0.2


def detector_spec_from_channels(hidden, kernels=(5, 5, 3, 1, 1), strides=(2, 2, 7, 1, 1)):
    """Build a layer spec from hidden channel widths, keeping the standard
    kernel/stride pattern. ``hidden`` has one entry per layer but the last."""
    if len(hidden) != len(kernels) - 1:
        raise ConfigurationError(
            f"need {len(kernels) - 1} hidden widths for {len(kernels)} layers, got {len(hidden)}")
    chain = (3,) + tuple(int(c) for c in hidden) + (1,)
    return tuple(((chain[i], chain[i + 1]), kernels[i], strides[i])
                 for i in range(len(kernels)))


def validate_layer_spec(layer_spec):
    if not layer_spec:
        raise ConfigurationError("layer spec is empty")
    for li, ((cin, cout), kernel, stride) in enumerate(layer_spec):
        if cin < 1 or cout < 1:
            raise ConfigurationError(f"layer {li}: channels must be >= 1")
        if kernel < 1 or kernel % 2 == 0:
            raise ConfigurationError(f"layer {li}: kernel must be odd and >= 1, got {kernel}")
        if stride < 1:
            raise ConfigurationError(f"layer {li}: stride must be >= 1, got {stride}")
        if li > 0 and cin != layer_spec[li - 1][0][1]:
            raise ConfigurationError(
                f"layer {li}: in_channels {cin} does not chain from previous "
                f"out_channels {layer_spec[li - 1][0][1]}")
    if layer_spec[0][0][0] != 3:
        raise ConfigurationError("first layer must take 3 input channels")
    if layer_spec[-1][0][1] != 1:
        raise ConfigurationError("last layer must emit 1 channel")


class PatchScorer(nn.Module):
    def __init__(self, layer_spec=DEFAULT_DETECTOR_SPEC):
        super().__init__()
        layer_spec = tuple((tuple(ch), int(k), int(s)) for ch, k, s in layer_spec)
        validate_layer_spec(layer_spec)
        self.layer_spec = layer_spec
        self.convs = nn.ModuleList(
            nn.Conv2d(cin, cout, kernel, stride=stride, padding=kernel // 2)
            for (cin, cout), kernel, stride in layer_spec)
        self.input_size = None  # set by the factory; None = size-agnostic

    def output_grid(self, input_size):
        return output_grid(self.layer_spec, input_size)

    def forward(self, x):
        for conv in self.convs[:-1]:
            x = F.leaky_relu(conv(x), LEAKY_SLOPE)
        x = torch.sigmoid(self.convs[-1](x))
        return x.clamp(SCORE_EPS, 1.0 - SCORE_EPS).squeeze(1)


def score_grid(model: PatchScorer, x) -> np.ndarray:
    """Score a single (3, H, W) input; returns the float32 (n1, n2) grid."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3 or x.shape[0] != 3:
        raise ValueError(f"expected input of shape (3, H, W), got {x.shape}")
    if model.input_size is not None and x.shape[1:] != tuple(model.input_size):
        raise ValueError(
            f"input is {x.shape[1:]}, model expects {tuple(model.input_size)}")
    p = next(model.parameters())
    with torch.no_grad():
        out = model(torch.from_numpy(x).unsqueeze(0).to(device=p.device, dtype=p.dtype))
    return out.squeeze(0).cpu().float().numpy()
