"""
Tensor shape algebra for the layer graph. Batch is implicit; shapes are (h, w, c).
"""
import math
from enum import Enum
from typing import Any, Dict, NamedTuple, Sequence

from ..utils.errors import ShapeError


class TensorShape(NamedTuple):
    height: int
    width: int
    channels: int

    @property
    def size(self) -> int:
        return self.height * self.width * self.channels


class LayerOp(Enum):
    INPUT = "input"
    CONV = "conv"
    BATCH_NORM = "batch_norm"
    RELU = "relu"
    MAX_POOL = "max_pool"
    AVG_POOL = "avg_pool"
    DENSE = "dense"
    SOFTMAX = "softmax"
    ADD = "add"
    CONCAT = "concat"


def checked_shape(height: int, width: int, channels: int) -> TensorShape:
    if height < 1 or width < 1 or channels < 1:
        raise ShapeError(f"shape underflow: ({height}, {width}, {channels})")
    return TensorShape(int(height), int(width), int(channels))


def sum_output_shape(s1: TensorShape, s2: TensorShape) -> TensorShape:
    """Summation output: smaller spatial extent, larger channel count"""
    return TensorShape(min(s1.height, s2.height), min(s1.width, s2.width),
                       max(s1.channels, s2.channels))


def same_output_extent(extent: int, stride: int) -> int:
    return math.ceil(extent / stride)


def valid_output_extent(extent: int, kernel: int, stride: int) -> int:
    if extent < kernel:
        return 0
    return (extent - kernel) // stride + 1


def infer_shape(op: LayerOp, params: Dict[str, Any], in_shapes: Sequence[TensorShape]) -> TensorShape:
    """Output shape of one primitive layer; raises ShapeError on inconsistent inputs"""
    if op is LayerOp.INPUT:
        return checked_shape(*params["shape"])

    expected_inputs = 2 if op is LayerOp.ADD else (None if op is LayerOp.CONCAT else 1)
    if expected_inputs is not None and len(in_shapes) != expected_inputs:
        raise ShapeError(f"{op.value} expects {expected_inputs} inputs, got {len(in_shapes)}")
    if op is LayerOp.CONCAT and len(in_shapes) < 2:
        raise ShapeError("concat expects at least two inputs")

    first = in_shapes[0]
    if op is LayerOp.CONV:
        stride = params["stride"]
        return checked_shape(same_output_extent(first.height, stride),
                             same_output_extent(first.width, stride), params["filters"])
    if op in (LayerOp.MAX_POOL, LayerOp.AVG_POOL):
        (kh, kw), (sh, sw) = params["kernel"], params["stride"]
        if params.get("padding", "valid") == "same":
            return checked_shape(same_output_extent(first.height, sh),
                                 same_output_extent(first.width, sw), first.channels)
        return checked_shape(valid_output_extent(first.height, kh, sh),
                             valid_output_extent(first.width, kw, sw), first.channels)
    if op is LayerOp.DENSE:
        return checked_shape(1, 1, params["units"])
    if op in (LayerOp.BATCH_NORM, LayerOp.RELU, LayerOp.SOFTMAX):
        return first
    if op is LayerOp.ADD:
        second = in_shapes[1]
        if (first.height, first.width) != (second.height, second.width):
            raise ShapeError(f"add needs equal spatial extents, got {tuple(first)} and {tuple(second)}")
        return TensorShape(first.height, first.width, max(first.channels, second.channels))
    if op is LayerOp.CONCAT:
        if len({(s.height, s.width) for s in in_shapes}) != 1:
            raise ShapeError(f"concat needs equal spatial extents, got {[tuple(s) for s in in_shapes]}")
        return TensorShape(first.height, first.width, sum(s.channels for s in in_shapes))
    raise ShapeError(f"unknown layer op {op}")


def layer_param_count(op: LayerOp, params: Dict[str, Any], in_shapes: Sequence[TensorShape],
                      out_shape: TensorShape) -> int:
    """Weights plus biases (BN counts its scale and shift)"""
    if op is LayerOp.CONV:
        k = params["kernel"]
        return k * k * in_shapes[0].channels * out_shape.channels + out_shape.channels
    if op is LayerOp.DENSE:
        return in_shapes[0].size * out_shape.channels + out_shape.channels
    if op is LayerOp.BATCH_NORM:
        return 2 * out_shape.channels
    return 0


def layer_mult_count(op: LayerOp, params: Dict[str, Any], in_shapes: Sequence[TensorShape],
                     out_shape: TensorShape) -> int:
    """Multiplications per image; only convolutions are counted"""
    if op is not LayerOp.CONV:
        return 0
    k = params["kernel"]
    return out_shape.height * out_shape.width * k * k * in_shapes[0].channels * out_shape.channels
