"""Adversarially trained inpainter/detector pair for finding and localizing
irregularities in images and video frames."""

from . import config, data, detection, evaluation, models, training
from .errors import ConfigurationError, DataLoadError, TrainingDivergedError

__version__ = "0.1.0"
