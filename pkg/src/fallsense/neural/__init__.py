"""From-scratch numpy networks for both detection stages."""

from .base import Model
from .cnn import CnnModel, cnn_forward
from .functional import cross_entropy, softmax
from .mlp import MlpModel, mlp_forward
from .training import TrainConfig, evaluate, gradient_check, stratified_split, train
from .weights import load_weights, save_weights

__all__ = [
    "Model", "CnnModel", "MlpModel", "TrainConfig", "cnn_forward", "mlp_forward",
    "cross_entropy", "softmax", "evaluate", "gradient_check", "stratified_split",
    "train", "load_weights", "save_weights",
]
