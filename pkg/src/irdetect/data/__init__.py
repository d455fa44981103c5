from .dataset import Dataset, split_validation
from .digits import DigitBank, load_mnist_idx, synthetic_digit_bank
from .frames import (clip_dataset, load_frame_directory, make_texture_clip,
                     preprocess_temporal, valid_times, write_frame_directory)
from .irmnist import (composite_dataset, generate_ir_mnist, load_ir_mnist,
                      write_ir_mnist)
from .noise import NoiseConfig, derive_seed, inject_noise, sample_noise


def load_dataset(root, layout, split="test"):
    """Load a dataset by layout name: ``ir_mnist`` or ``frame_directory``."""
    if layout == "ir_mnist":
        return load_ir_mnist(root, split)
    if layout == "frame_directory":
        return load_frame_directory(root, split=split)
    from ..errors import ConfigurationError
    raise ConfigurationError(f"unknown layout {layout!r}")
