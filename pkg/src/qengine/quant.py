"""
Symmetric 8-bit quantization into magnitudes and signs
"""
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..utils.errors import NumericError, ParameterError

MAX_MAGNITUDE = 255


@dataclass(frozen=True)
class QuantTensor:
    """real value ~= sign * magnitude * scale; signs None means all positive.

    `scale` is a float for one scale per tensor, or an array broadcastable
    against the magnitudes (one scale per sample).
    """
    magnitudes: np.ndarray  # uint8
    signs: Optional[np.ndarray]  # int8 of +1/-1
    scale: Union[float, np.ndarray]

    def __post_init__(self):
        if not np.all(np.asarray(self.scale) > 0):
            raise ParameterError(f"quantization scale must be positive, got {self.scale}")
        if self.signs is not None and self.signs.shape != self.magnitudes.shape:
            raise ParameterError("signs and magnitudes must have the same shape")

    @property
    def shape(self):
        return self.magnitudes.shape

    def dequantize(self) -> np.ndarray:
        values = self.magnitudes.astype(np.float64) * self.scale
        if self.signs is not None:
            values *= self.signs
        return values


def _check(x: np.ndarray, non_negative: bool) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericError("cannot quantize a tensor holding non-finite values")
    if non_negative and np.any(x < 0):
        raise ParameterError("non_negative quantization got negative values")


def _encode(x: np.ndarray, scale, non_negative: bool) -> QuantTensor:
    magnitudes = np.clip(np.rint(np.abs(x) / scale), 0, MAX_MAGNITUDE).astype(np.uint8)
    signs = None if non_negative else np.where(x < 0, -1, 1).astype(np.int8)
    return QuantTensor(magnitudes=magnitudes, signs=signs, scale=scale)


def quantize(x, non_negative: bool = False) -> QuantTensor:
    """One scale for the whole tensor: max|x| / 255, or 1 for an all-zero tensor"""
    x = np.asarray(x, dtype=np.float64)
    _check(x, non_negative)
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    return _encode(x, peak / MAX_MAGNITUDE if peak > 0 else 1.0, non_negative)


def quantize_per_sample(x, non_negative: bool = False) -> QuantTensor:
    """One scale per leading-axis sample, so a sample's codes do not depend on its batch"""
    x = np.asarray(x, dtype=np.float64)
    _check(x, non_negative)
    axes = tuple(range(1, x.ndim))
    peak = np.max(np.abs(x), axis=axes, keepdims=True) if x.size else np.zeros((0,) + (1,) * (x.ndim - 1))
    scale = np.where(peak > 0, peak / MAX_MAGNITUDE, 1.0)
    return _encode(x, scale, non_negative)


def quantize_activations(x: np.ndarray) -> QuantTensor:
    """Per-sample codes; unsigned when the tensor is non-negative (post-ReLU)"""
    return quantize_per_sample(x, non_negative=not np.any(x < 0))
