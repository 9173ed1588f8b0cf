"""
Lowering of active CGP nodes into primitive layers
"""
from typing import Dict, Optional

from .graph import GraphBuilder, LayerGraph
from .shapes import LayerOp, TensorShape, checked_shape
from ..cgpnet.genotype import INPUT_COORD, ActiveSubgraph, Coord, NodeGene, NodeKind
from ..utils.errors import CompileError, ShapeError
from ..utils.logger import setup_logger

logger = setup_logger(__name__)


def _conv(b: GraphBuilder, src: int, origin, suffix: str, filters: int, kernel: int,
          stride: int = 1) -> int:
    return b.add(LayerOp.CONV, (src,), origin, suffix, filters=int(filters),
                 kernel=int(kernel), stride=int(stride))


def _conv_relu(b: GraphBuilder, src: int, origin, suffix: str, filters: int, kernel: int,
               stride: int = 1) -> int:
    conv = _conv(b, src, origin, suffix, filters, kernel, stride)
    return b.add(LayerOp.RELU, (conv,), origin, f"{suffix}_relu")


def _conv_bn(b: GraphBuilder, src: int, origin, suffix: str, filters: int, kernel: int,
             stride: int = 1) -> int:
    conv = _conv(b, src, origin, suffix, filters, kernel, stride)
    return b.add(LayerOp.BATCH_NORM, (conv,), origin, f"{suffix}_bn")


def _relu(b: GraphBuilder, src: int, origin, suffix: str) -> int:
    return b.add(LayerOp.RELU, (src,), origin, suffix)


def emit_inception(b: GraphBuilder, src: int, origin, params: Dict[str, int]) -> int:
    branch_5 = _conv_relu(b, _conv_relu(b, src, origin, "reduce5", params["r1"], 1),
                          origin, "conv5", params["c1"], 5)
    branch_3 = _conv_relu(b, _conv_relu(b, src, origin, "reduce3", params["r2"], 1),
                          origin, "conv3", params["c2"], 3)
    branch_1 = _conv_relu(b, src, origin, "conv1", params["c3"], 1)
    pooled = b.add(LayerOp.MAX_POOL, (src,), origin, "pool", kernel=(3, 3), stride=(1, 1),
                   padding="same")
    branch_p = _conv_relu(b, pooled, origin, "pool_proj", params["r3"], 1)
    return b.add(LayerOp.CONCAT, (branch_5, branch_3, branch_1, branch_p), origin, "concat")


def emit_residual(b: GraphBuilder, src: int, origin, params: Dict[str, int]) -> int:
    filters, stride = params["filters"], params["stride"]
    main = _conv_bn(b, src, origin, "conv_a", filters, params["n_kernel"], stride)
    main = _relu(b, main, origin, "relu_a")
    main = _conv_bn(b, main, origin, "conv_b", filters, params["m_kernel"])
    skip = _conv_bn(b, src, origin, "skip", filters, 1, stride)
    added = b.add(LayerOp.ADD, (main, skip), origin, "add")
    return _relu(b, added, origin, "out")


def emit_bottleneck(b: GraphBuilder, src: int, origin, params: Dict[str, int]) -> int:
    filters, stride = params["filters"], params["stride"]
    main = _relu(b, _conv_bn(b, src, origin, "reduce", params["reduce"], 1, stride), origin, "relu_a")
    main = _relu(b, _conv_bn(b, main, origin, "conv", params["reduce"], params["kernel"]), origin, "relu_b")
    main = _conv_bn(b, main, origin, "expand", filters, 1)
    skip = _conv_bn(b, src, origin, "skip", filters, 1, stride)
    added = b.add(LayerOp.ADD, (main, skip), origin, "add")
    return _relu(b, added, origin, "out")


def _match_extent(b: GraphBuilder, src: int, target: TensorShape, origin, suffix: str) -> int:
    shape = b.shape(src)
    if (shape.height, shape.width) == (target.height, target.width):
        return src
    ratios = []
    for have, want in ((shape.height, target.height), (shape.width, target.width)):
        if have % want:
            raise ShapeError(f"summation inputs differ by a non-integer ratio {have}/{want}")
        ratios.append(have // want)
    return b.add(LayerOp.MAX_POOL, (src,), origin, suffix, kernel=tuple(ratios),
                 stride=tuple(ratios), padding="valid")


def emit_sum(b: GraphBuilder, first: int, second: int, origin) -> int:
    """Pool the spatially larger input down; ADD zero-pads the channel-smaller one"""
    s1, s2 = b.shape(first), b.shape(second)
    target = checked_shape(min(s1.height, s2.height), min(s1.width, s2.width), 1)
    left = _match_extent(b, first, target, origin, "pool_a")
    right = _match_extent(b, second, target, origin, "pool_b")
    return b.add(LayerOp.ADD, (left, right), origin, "add")


def _emit_node(b: GraphBuilder, coord: Coord, node: NodeGene, sources, final: bool,
               num_classes: int) -> int:
    kind, params = node.kind, node.params
    if kind is NodeKind.CONV:
        return _conv_relu(b, sources[0], coord, "conv", params["filters"], params["kernel"],
                          params["stride"])
    if kind in (NodeKind.MAX, NodeKind.AVG):
        size = int(params["size"])
        op = LayerOp.MAX_POOL if kind is NodeKind.MAX else LayerOp.AVG_POOL
        return b.add(op, (sources[0],), coord, "pool", kernel=(size, size), stride=(size, size),
                     padding="valid")
    if kind is NodeKind.FC:
        if final:
            dense = b.add(LayerOp.DENSE, (sources[0],), coord, "dense", units=int(num_classes))
            return b.add(LayerOp.SOFTMAX, (dense,), coord, "softmax")
        dense = b.add(LayerOp.DENSE, (sources[0],), coord, "dense", units=int(params["units"]))
        return _relu(b, dense, coord, "relu")
    if kind is NodeKind.SUM:
        return emit_sum(b, sources[0], sources[1], coord)
    if kind is NodeKind.INC:
        return emit_inception(b, sources[0], coord, params)
    if kind is NodeKind.RES:
        return emit_residual(b, sources[0], coord, params)
    if kind is NodeKind.RES_B:
        return emit_bottleneck(b, sources[0], coord, params)
    raise CompileError(f"cannot lower node kind {kind.value}", coord)


def compile(active: ActiveSubgraph, input_shape, num_classes: int) -> LayerGraph:
    """Lower an active subgraph to a layer graph with inferred shapes.

    Dense layers flatten their input implicitly. The node feeding OUTPUT must be
    an FC node and becomes dense(num_classes) followed by softmax.
    """
    input_shape = checked_shape(*input_shape)
    output_gene = Coord(*active.output_gene)
    genes = dict(active.nodes)
    if genes.get(output_gene) is None or genes[output_gene].kind is not NodeKind.FC:
        raise CompileError("output must be fed by an FC node", output_gene)

    builder = GraphBuilder(input_shape)
    produced: Dict[Coord, int] = {INPUT_COORD: 0}
    for coord, node in active.nodes:
        if node.kind in (NodeKind.INPUT, NodeKind.OUTPUT):
            continue
        try:
            sources = [produced[Coord(*source)] for source in node.inputs]
        except KeyError as e:
            raise CompileError(f"input {tuple(e.args[0])} is not lowered before its consumer", coord)
        try:
            produced[coord] = _emit_node(builder, coord, node, sources, coord == output_gene,
                                         num_classes)
        except CompileError:
            raise
        except ShapeError as e:
            raise CompileError(str(e), coord) from e

    graph = builder.build(num_classes=num_classes)
    if produced[output_gene] != len(graph.layers) - 1:
        raise CompileError("output node is not the last lowered layer", output_gene)
    logger.debug(f"Compiled {len(active)} active nodes into {len(graph)} layers")
    return graph


def _lower_module(emit, params: Dict[str, int], in_shape, origin: Optional[Coord]) -> LayerGraph:
    builder = GraphBuilder(checked_shape(*in_shape))
    emit(builder, 0, origin, params)
    return builder.build()


def lower_inception(params: Dict[str, int], in_shape, origin: Optional[Coord] = None) -> LayerGraph:
    return _lower_module(emit_inception, params, in_shape, origin)


def lower_residual(params: Dict[str, int], in_shape, origin: Optional[Coord] = None) -> LayerGraph:
    return _lower_module(emit_residual, params, in_shape, origin)


def lower_bottleneck(params: Dict[str, int], in_shape, origin: Optional[Coord] = None) -> LayerGraph:
    return _lower_module(emit_bottleneck, params, in_shape, origin)
