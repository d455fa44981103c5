"""8-bit grayscale PNG helpers.

Intensities map linearly between [0, 1] floats and the 0..255 byte range.
Binary masks use 0 for background and 255 for foreground.
"""

import numpy as np
from PIL import Image


def load_gray(path):
    """Read a PNG as a float32 array in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.uint8)
    return arr.astype(np.float32) / 255.0


def load_gray_u8(path):
    """Read a PNG as a uint8 array, no rescaling."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_gray(path, values):
    """Write a float array in [0, 1] as an 8-bit grayscale PNG."""
    arr = np.asarray(values, dtype=np.float64)
    data = np.round(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="L").save(path, format="PNG")


def save_gray_u8(path, values):
    """Write a uint8 array as an 8-bit grayscale PNG, no rescaling."""
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {arr.dtype}")
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def load_mask(path):
    """Read a 0/255 PNG as a boolean array."""
    return load_gray_u8(path) >= 128


def save_mask(path, mask):
    """Write a boolean array as a 0/255 PNG."""
    mask = np.asarray(mask)
    if mask.dtype != np.bool_:
        raise ValueError(f"expected boolean mask, got {mask.dtype}")
    save_gray_u8(path, np.where(mask, 255, 0).astype(np.uint8))
