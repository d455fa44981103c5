"""Encoder-decoder inpainting network.

The encoder halves resolution at each level; the decoder upsamples back,
concatenating the matching encoder activation (and finally the raw input)
before each convolution, so fine structure survives the bottleneck. The
sigmoid head keeps outputs in [0, 1] and the output size always equals the
input size, even when the sides are not divisible by 2**levels.
"""

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigurationError

DEFAULT_INPAINTER_WIDTHS = (64, 128, 256, 512)
LEAKY_SLOPE = 0.2


class InpainterNet(nn.Module):
    def __init__(self, widths=DEFAULT_INPAINTER_WIDTHS, in_channels=3):
        super().__init__()
        widths = tuple(int(w) for w in widths)
        if not widths or any(w < 1 for w in widths):
            raise ConfigurationError(f"widths must be positive, got {widths}")
        self.widths = widths
        self.in_channels = in_channels
        self.enc = nn.ModuleList()
        c = in_channels
        for w in widths:
            self.enc.append(nn.Conv2d(c, w, 3, stride=2, padding=1))
            c = w
        self.dec = nn.ModuleList()
        for skip in reversed(widths[:-1]):
            self.dec.append(nn.Conv2d(c + skip, skip, 3, padding=1))
            c = skip
        self.head = nn.Conv2d(c + in_channels, c, 3, padding=1)
        self.out = nn.Conv2d(c, in_channels, 1)
        self.input_size = None  # set by the factory; None = size-agnostic

    def forward(self, x):
        skips = [x]
        h = x
        for conv in self.enc:
            h = F.leaky_relu(conv(h), LEAKY_SLOPE)
            skips.append(h)
        skips.pop()  # deepest activation is h itself
        for conv in self.dec:
            skip = skips.pop()
            h = F.interpolate(h, size=skip.shape[-2:], mode="nearest")
            h = F.leaky_relu(conv(torch.cat([h, skip], dim=1)), LEAKY_SLOPE)
        x0 = skips.pop()
        h = F.interpolate(h, size=x0.shape[-2:], mode="nearest")
        h = F.leaky_relu(self.head(torch.cat([h, x0], dim=1)), LEAKY_SLOPE)
        return torch.sigmoid(self.out(h))


def inpaint(model: InpainterNet, x) -> np.ndarray:
    """Reconstruct a single (3, H, W) input; returns float32 of the same shape."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3 or x.shape[0] != model.in_channels:
        raise ValueError(f"expected input of shape ({model.in_channels}, H, W), got {x.shape}")
    if model.input_size is not None and x.shape[1:] != tuple(model.input_size):
        raise ValueError(
            f"input is {x.shape[1:]}, model expects {tuple(model.input_size)}")
    p = next(model.parameters())
    with torch.no_grad():
        out = model(torch.from_numpy(x).unsqueeze(0).to(device=p.device, dtype=p.dtype))
    return out.squeeze(0).cpu().float().numpy()
