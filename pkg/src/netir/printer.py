"""
Plain-text rendering of a layer graph for logs and archives
"""
from typing import List

from .graph import LayerGraph, count_mults, count_params


def _format_params(params) -> str:
    return ", ".join(f"{key}={value}" for key, value in sorted(params.items()) if key != "shape")


def format_graph(graph: LayerGraph) -> str:
    lines: List[str] = [f"{'#':>3}  {'layer':<22} {'op':<10} {'in':<16} {'out':<14} "
                        f"{'params':>9} {'mults':>11}"]
    for index, layer in enumerate(graph.layers):
        sources = ",".join(str(i) for i in layer.inputs) or "-"
        out = "x".join(str(d) for d in layer.out_shape)
        lines.append(f"{index:>3}  {layer.name:<22} {layer.op.value:<10} {sources:<16} {out:<14} "
                     f"{layer.param_count:>9} {layer.mult_count:>11}  {_format_params(layer.params)}".rstrip())
    lines.append(f"total params={count_params(graph)} mults={count_mults(graph)}")
    return "\n".join(lines)
