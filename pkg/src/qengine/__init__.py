# Numpy training engine with approximate-multiplier convolutions
from .quant import QuantTensor, quantize, quantize_activations, quantize_per_sample
from .ops import conv_forward_approx
from .engine import backward, cross_entropy, forward, run_forward
from .weights import WeightStore, load_checkpoint, save_checkpoint
from .trainer import Adam, TrainConfig, TrainHistory, augment, evaluate_accuracy, train

__all__ = [
    "QuantTensor", "quantize", "quantize_activations", "quantize_per_sample",
    "conv_forward_approx", "backward", "cross_entropy", "forward", "run_forward",
    "WeightStore", "load_checkpoint", "save_checkpoint", "Adam", "TrainConfig",
    "TrainHistory", "augment", "evaluate_accuracy", "train",
]
