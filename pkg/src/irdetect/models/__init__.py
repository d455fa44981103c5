from .checkpoint import FORMAT_TAG, Checkpoint, load_checkpoint, save_checkpoint
from .detector import (DEFAULT_DETECTOR_SPEC, PatchScorer,
                       detector_spec_from_channels, score_grid,
                       validate_layer_spec)
from .factory import ArchConfig, init_models, parameter_count
from .geometry import RegionGrid, output_grid, region_map, total_stride
from .inpainter import DEFAULT_INPAINTER_WIDTHS, InpainterNet, inpaint
