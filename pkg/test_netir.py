"""
Tests for lowering, shape inference and parameter/multiplication counting
"""
import itertools

import numpy as np
import pytest

from conftest import tiny_template
from src.cgpnet.genotype import (INPUT_COORD, INPUT_NODE, ActiveSubgraph, Coord, Genotype, NodeGene,
                                 NodeKind, extract_active)
from src.cgpnet.template import seed_from_template
from src.netir import (GraphBuilder, LayerOp, TensorShape, compile, count_mults, count_params,
                       format_graph, infer_shape, lower_bottleneck, lower_inception, lower_residual,
                       sum_output_shape, verify_shapes)
from src.utils.errors import CompileError, ShapeError

CONV_3X3_16 = {"filters": 16, "kernel": 3, "stride": 1}


def chain_genotype(*nodes) -> Genotype:
    """One-row genotype whose nodes each read the previous column; the last must be FC"""
    cells = []
    for column, (kind, params) in enumerate(nodes, start=1):
        source = INPUT_COORD if column == 1 else Coord(column - 1, 0)
        cells.append((NodeGene(kind, params, (source,)),))
    return Genotype(rows=1, columns=len(nodes), levels_back=1, grid=tuple(cells),
                    output_gene=Coord(len(nodes), 0), mult_index=0, library_size=1)


def test_single_conv_shape_and_counts():
    builder = GraphBuilder(TensorShape(32, 32, 3))
    conv = builder.add(LayerOp.CONV, (0,), None, "conv", **CONV_3X3_16)
    layer = builder.build().layers[conv]
    assert layer.out_shape == (32, 32, 16)
    assert layer.param_count == 448
    assert layer.mult_count == 442368


def test_pool_and_dense_shapes():
    assert infer_shape(LayerOp.MAX_POOL, {"kernel": (2, 2), "stride": (2, 2)},
                       [TensorShape(32, 32, 3)]) == (16, 16, 3)
    builder = GraphBuilder(TensorShape(1, 1, 128))
    dense = builder.add(LayerOp.DENSE, (0,), None, "dense", units=10)
    graph = builder.build()
    assert graph.layers[dense].param_count == 1290
    assert count_mults(graph) == 0


def test_sum_output_shape_examples():
    assert sum_output_shape(TensorShape(32, 32, 16), TensorShape(32, 32, 16)) == (32, 32, 16)
    assert sum_output_shape(TensorShape(32, 32, 16), TensorShape(16, 16, 32)) == (16, 16, 32)
    assert sum_output_shape(TensorShape(8, 16, 4), TensorShape(16, 8, 8)) == (8, 8, 8)


def test_sum_output_shape_exhaustive_grid():
    extents = range(1, 9)
    for first in itertools.product(extents, repeat=3):
        for second in itertools.product(extents, repeat=3):
            result = sum_output_shape(TensorShape(*first), TensorShape(*second))
            assert result == (min(first[0], second[0]), min(first[1], second[1]),
                              max(first[2], second[2]))


def test_inception_module():
    params = {"c1": 8, "c2": 8, "c3": 8, "r1": 4, "r2": 4, "r3": 4}
    graph = lower_inception(params, (16, 16, 32))
    assert graph.output_shape == (16, 16, 28)
    convs = [layer for layer in graph.layers if layer.op is LayerOp.CONV]
    assert len(convs) == 6
    oracle = sum(l.out_shape.height * l.out_shape.width * l.params["kernel"] ** 2
                 * l.in_shapes[0].channels * l.out_shape.channels for l in convs)
    assert count_mults(graph) == oracle == 442368

    for height in (3, 7, 10):
        assert lower_inception(params, (height, height + 1, 5)).output_shape[:2] == (height, height + 1)


def test_residual_module():
    same = lower_residual({"n_kernel": 3, "m_kernel": 5, "stride": 1, "filters": 32}, (16, 16, 32))
    assert same.output_shape == (16, 16, 32)
    strided = lower_residual({"n_kernel": 3, "m_kernel": 3, "stride": 2, "filters": 32}, (32, 32, 16))
    assert strided.output_shape == (16, 16, 32)
    for graph in (same, strided):
        add = next(layer for layer in graph.layers if layer.op is LayerOp.ADD)
        assert add.in_shapes[0] == add.in_shapes[1]


def test_bottleneck_module():
    graph = lower_bottleneck({"kernel": 3, "stride": 1, "filters": 32, "reduce": 8}, (16, 16, 64))
    by_name = {layer.name: layer for layer in graph.layers}
    trace = [by_name[f"graph.{name}"].out_shape.channels for name in ("reduce", "conv", "expand")]
    assert [64] + trace == [64, 8, 8, 32]
    assert graph.output_shape == (16, 16, 32)
    assert lower_bottleneck({"kernel": 5, "stride": 2, "filters": 16, "reduce": 4},
                            (9, 9, 3)).output_shape == (5, 5, 16)


def test_compile_three_node_chain():
    g = chain_genotype((NodeKind.CONV, CONV_3X3_16), (NodeKind.MAX, {"size": 2}),
                       (NodeKind.FC, {"units": 64}))
    graph = compile(extract_active(g), (32, 32, 3), 10)
    assert [layer.name for layer in graph.layers] == [
        "graph.input", "n1_0.conv", "n1_0.conv_relu", "n2_0.pool", "n3_0.dense", "n3_0.softmax"]
    assert [layer.op for layer in graph.layers] == [
        LayerOp.INPUT, LayerOp.CONV, LayerOp.RELU, LayerOp.MAX_POOL, LayerOp.DENSE, LayerOp.SOFTMAX]
    assert graph.output_shape == (1, 1, 10)
    assert count_params(graph) == 448 + 16 * 16 * 16 * 10 + 10
    assert count_mults(graph) == 442368
    assert verify_shapes(graph) == []


def test_compile_input_to_fc_has_no_mults():
    g = chain_genotype((NodeKind.FC, {"units": 128}))
    graph = compile(extract_active(g), (8, 8, 1), 4)
    assert count_mults(graph) == 0
    assert count_params(graph) == 64 * 4 + 4


def test_compile_random_genotypes_is_shape_sound():
    template = tiny_template()
    rng = np.random.default_rng(17)
    compiled = 0
    for _ in range(300):
        g = seed_from_template(template, rng, 1)
        try:
            graph = compile(extract_active(g), (8, 8, 1), template.num_classes)
        except CompileError as e:
            assert e.node is not None
            continue
        compiled += 1
        assert verify_shapes(graph) == []
        assert graph.output_shape == (1, 1, template.num_classes)
        assert count_mults(graph) == sum(l.mult_count for l in graph.layers)
    assert compiled > 0


def test_compile_requires_fc_output():
    conv = NodeGene(NodeKind.CONV, CONV_3X3_16, (INPUT_COORD,))
    output = NodeGene(NodeKind.OUTPUT, {}, (Coord(1, 0),))
    active = ActiveSubgraph(nodes=((INPUT_COORD, INPUT_NODE), (Coord(1, 0), conv), (Coord(2, 0), output)),
                            output_gene=Coord(1, 0))
    with pytest.raises(CompileError) as excinfo:
        compile(active, (8, 8, 1), 10)
    assert excinfo.value.node == Coord(1, 0)


def test_shape_underflow_names_the_node():
    g = chain_genotype((NodeKind.MAX, {"size": 2}), (NodeKind.MAX, {"size": 2}),
                       (NodeKind.FC, {"units": 8}))
    with pytest.raises(CompileError) as excinfo:
        compile(extract_active(g), (2, 2, 1), 10)
    assert tuple(excinfo.value.node) == (2, 0)
    assert isinstance(excinfo.value, ShapeError)


def test_sum_with_non_integer_ratio_fails():
    pool = NodeGene(NodeKind.MAX, {"size": 2}, (INPUT_COORD,))
    add = NodeGene(NodeKind.SUM, {}, (INPUT_COORD, Coord(1, 0)))
    fc = NodeGene(NodeKind.FC, {"units": 8}, (Coord(2, 0),))
    g = Genotype(rows=1, columns=3, levels_back=2, grid=((pool,), (add,), (fc,)),
                 output_gene=Coord(3, 0), mult_index=0, library_size=1)
    with pytest.raises(CompileError):
        compile(extract_active(g), (5, 5, 1), 4)
    graph = compile(extract_active(g), (6, 6, 2), 4)
    add_layer = next(layer for layer in graph.layers if layer.op is LayerOp.ADD)
    assert add_layer.out_shape == (3, 3, 2)


def test_verify_shapes_detects_tampering():
    g = chain_genotype((NodeKind.CONV, CONV_3X3_16), (NodeKind.FC, {"units": 8}))
    graph = compile(extract_active(g), (8, 8, 3), 4)
    layers = list(graph.layers)
    conv = layers[1]
    layers[1] = type(conv)(conv.name, conv.op, conv.params, conv.inputs, conv.in_shapes,
                           TensorShape(4, 4, 16), conv.param_count, conv.mult_count, conv.origin)
    tampered = type(graph)(tuple(layers), graph.input_shape, graph.num_classes)
    assert any("n1_0.conv" in problem for problem in verify_shapes(tampered))


def test_format_graph_lists_every_layer():
    g = chain_genotype((NodeKind.CONV, CONV_3X3_16), (NodeKind.FC, {"units": 8}))
    graph = compile(extract_active(g), (32, 32, 3), 10)
    text = format_graph(graph)
    assert len(text.splitlines()) == len(graph) + 2
    assert text.splitlines()[-1] == f"total params={count_params(graph)} mults=442368"


def test_sum_output_shape_is_commutative():
    rng = np.random.default_rng(3)
    for _ in range(500):
        first, second = (TensorShape(*(int(v) for v in rng.integers(1, 33, size=3))) for _ in range(2))
        assert sum_output_shape(first, second) == sum_output_shape(second, first)


def test_lowering_is_pure():
    params = {"c1": 8, "c2": 4, "c3": 2, "r1": 2, "r2": 2, "r3": 2}
    assert lower_inception(params, (9, 9, 3)) == lower_inception(params, (9, 9, 3))
    g = chain_genotype((NodeKind.CONV, CONV_3X3_16), (NodeKind.RES, {"n_kernel": 3, "m_kernel": 5,
                                                                     "stride": 2, "filters": 8}),
                       (NodeKind.FC, {"units": 8}))
    active = extract_active(g)
    assert compile(active, (8, 8, 3), 4) == compile(active, (8, 8, 3), 4)
