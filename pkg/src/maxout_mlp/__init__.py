"""Maxout multilayer perceptrons trained with dropout and two-phase early stopping."""

from .data import Dataset, load_idx_images, load_idx_labels, make_toy, split_train_valid
from .estimator import MaxoutMLPClassifier
from .exceptions import (ConfigError, DataError, DimensionError, DivergenceError,
                         FormatError, LengthError, StateError)
from .gradcheck import central_difference, check_network
from .layers import (AffineLayer, DropoutState, MaxoutConfig, maxout_backward,
                     maxout_forward, softmax_cross_entropy)
from .network import MaxoutNetwork
from .protocol import (EvalReport, ProtocolConfig, Trainer, evaluate, phase1, phase2,
                       run_two_phase)

__version__ = "0.1.0"

__all__ = [
    "AffineLayer", "ConfigError", "DataError", "Dataset", "DimensionError",
    "DivergenceError", "DropoutState", "EvalReport", "FormatError", "LengthError",
    "MaxoutConfig", "MaxoutMLPClassifier", "MaxoutNetwork", "ProtocolConfig",
    "StateError", "Trainer", "central_difference", "check_network", "evaluate", "load_idx_images", "load_idx_labels",
    "make_toy", "maxout_backward", "maxout_forward", "phase1", "phase2", "run_two_phase",
    "softmax_cross_entropy", "split_train_valid",
]
