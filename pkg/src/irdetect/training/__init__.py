from .loop import (EvalPoint, FitResult, TrainConfig, TrainState, fit,
                   make_state, train_step, validation_metrics)
from .losses import (LOG_EPS, LOSS_FORMS, adversarial_targets, detector_loss,
                     inpainter_loss)
