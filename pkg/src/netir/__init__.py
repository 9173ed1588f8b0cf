# Layer graph intermediate representation: lowering, shape inference and counts
from .shapes import LayerOp, TensorShape, infer_shape, sum_output_shape
from .graph import GraphBuilder, Layer, LayerGraph, count_mults, count_params, verify_shapes
from .lowering import compile, lower_bottleneck, lower_inception, lower_residual
from .printer import format_graph

__all__ = [
    "LayerOp", "TensorShape", "infer_shape", "sum_output_shape", "GraphBuilder", "Layer",
    "LayerGraph", "count_mults", "count_params", "verify_shapes", "compile",
    "lower_bottleneck", "lower_inception", "lower_residual", "format_graph",
]
