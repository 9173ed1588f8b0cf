"""
Layer graph: flat, topologically ordered list of primitive layers with inferred shapes
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from .shapes import (LayerOp, TensorShape, infer_shape, layer_mult_count,
                     layer_param_count)
from ..cgpnet.genotype import Coord
from ..utils.errors import ShapeError

TRAINABLE_OPS = (LayerOp.CONV, LayerOp.DENSE, LayerOp.BATCH_NORM)


@dataclass(frozen=True)
class Layer:
    name: str
    op: LayerOp
    params: Dict[str, Any]
    inputs: Tuple[int, ...]
    in_shapes: Tuple[TensorShape, ...]
    out_shape: TensorShape
    param_count: int
    mult_count: int
    origin: Optional[Coord] = None

    @property
    def trainable(self) -> bool:
        return self.op in TRAINABLE_OPS


@dataclass(frozen=True)
class LayerGraph:
    layers: Tuple[Layer, ...]
    input_shape: TensorShape
    num_classes: Optional[int] = None

    @property
    def output_shape(self) -> TensorShape:
        return self.layers[-1].out_shape

    def trainable_layers(self) -> List[Layer]:
        return [layer for layer in self.layers if layer.trainable]

    def __len__(self) -> int:
        return len(self.layers)


def count_params(graph: LayerGraph) -> int:
    return sum(layer.param_count for layer in graph.layers)


def count_mults(graph: LayerGraph) -> int:
    return sum(layer.mult_count for layer in graph.layers if layer.op is LayerOp.CONV)


def verify_shapes(graph: LayerGraph) -> List[str]:
    """Re-derive every shape from the producers' outputs and report disagreements"""
    problems = []
    for index, layer in enumerate(graph.layers):
        if any(source >= index for source in layer.inputs):
            problems.append(f"{layer.name}: reads a later layer")
            continue
        producers = tuple(graph.layers[source].out_shape for source in layer.inputs)
        if layer.op is not LayerOp.INPUT and producers != layer.in_shapes:
            problems.append(f"{layer.name}: recorded inputs {layer.in_shapes} != producers {producers}")
        try:
            derived = infer_shape(layer.op, layer.params, producers)
        except ShapeError as e:
            problems.append(f"{layer.name}: {e}")
            continue
        if derived != layer.out_shape:
            problems.append(f"{layer.name}: recorded output {tuple(layer.out_shape)} != derived {tuple(derived)}")
    return problems


@dataclass
class GraphBuilder:
    """Appends layers while inferring shapes and counts"""
    input_shape: TensorShape
    layers: List[Layer] = field(default_factory=list)

    def __post_init__(self):
        self.add(LayerOp.INPUT, (), None, "input", shape=tuple(self.input_shape))

    def add(self, op: LayerOp, inputs, origin: Optional[Coord], suffix: str, **params) -> int:
        inputs = tuple(inputs)
        in_shapes = tuple(self.layers[i].out_shape for i in inputs)
        out_shape = infer_shape(op, params, in_shapes)
        prefix = f"n{origin.column}_{origin.row}" if origin is not None else "graph"
        name = f"{prefix}.{suffix}"
        if any(layer.name == name for layer in self.layers):
            raise ShapeError(f"duplicate layer name {name}")
        self.layers.append(Layer(
            name=name, op=op, params=params, inputs=inputs, in_shapes=in_shapes,
            out_shape=out_shape,
            param_count=layer_param_count(op, params, in_shapes, out_shape),
            mult_count=layer_mult_count(op, params, in_shapes, out_shape),
            origin=origin,
        ))
        return len(self.layers) - 1

    def shape(self, index: int) -> TensorShape:
        return self.layers[index].out_shape

    def build(self, num_classes: Optional[int] = None) -> LayerGraph:
        return LayerGraph(layers=tuple(self.layers), input_shape=self.input_shape,
                          num_classes=num_classes)
