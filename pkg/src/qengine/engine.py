"""
Executes a layer graph: approximate quantized convolutions forward, float
straight-through gradients backward
"""
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from . import ops
from .quant import quantize, quantize_activations
from .weights import WeightStore
from ..multsim.models import MultiplierModel
from ..netir.graph import Layer, LayerGraph
from ..netir.shapes import LayerOp
from ..utils.config import config
from ..utils.errors import ShapeError, StateError

# Floor inside log() so a zero probability yields a large finite loss
PROBABILITY_FLOOR = 1e-12


@dataclass
class ForwardTrace:
    values: List[np.ndarray]
    caches: List[object]
    training: bool

    @property
    def output(self) -> np.ndarray:
        return self.values[-1]


def conv_layer_forward(x: np.ndarray, entry: Dict[str, np.ndarray], stride: int,
                       model: Optional[MultiplierModel]):
    """Convolution through `model`; None runs the float path without quantization"""
    if model is None:
        out = ops.conv_forward_float(x, entry["kernel"], stride, entry["bias"])
        return out, (x, entry["kernel"])
    xq = quantize_activations(x)
    wq = quantize(entry["kernel"])
    out = ops.conv_forward_approx(xq, wq, model, stride, entry["bias"])
    # Gradients treat the convolution as exact over the dequantized operands
    return out, (xq.dequantize(), wq.dequantize())


def conv_layer_backward(dout: np.ndarray, cache, stride: int):
    x, kernel = cache
    return ops.conv_backward(dout, x, kernel, stride)


def _entry(store: WeightStore, layer: Layer) -> Dict[str, np.ndarray]:
    if layer.name not in store:
        raise StateError(f"no weights for layer {layer.name}; call WeightStore.prepare first")
    return store[layer.name]


def run_forward(graph: LayerGraph, store: WeightStore, batch: np.ndarray,
                model: Optional[MultiplierModel], training: bool = False) -> ForwardTrace:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.shape[1:] != tuple(graph.input_shape):
        raise ShapeError(f"batch shape {batch.shape[1:]} does not match graph input {tuple(graph.input_shape)}")

    values: List[np.ndarray] = []
    caches: List[object] = []
    for layer in graph.layers:
        inputs = [values[i] for i in layer.inputs]
        cache = None
        op, params = layer.op, layer.params
        if op is LayerOp.INPUT:
            out = batch
        elif op is LayerOp.CONV:
            out, cache = conv_layer_forward(inputs[0], _entry(store, layer), params["stride"], model)
        elif op is LayerOp.BATCH_NORM:
            entry = _entry(store, layer)
            out, cache, entry["mean"], entry["var"] = ops.batch_norm_forward(
                inputs[0], entry["gamma"], entry["beta"], entry["mean"], entry["var"],
                training, config.BN_MOMENTUM, config.BN_EPSILON)
        elif op is LayerOp.RELU:
            out = np.maximum(inputs[0], 0.0)
            cache = inputs[0] > 0
        elif op in (LayerOp.MAX_POOL, LayerOp.AVG_POOL):
            mode = "max" if op is LayerOp.MAX_POOL else "avg"
            out, cache = ops.pool_forward(inputs[0], params["kernel"], params["stride"],
                                          params.get("padding", "valid"), mode)
        elif op is LayerOp.DENSE:
            entry = _entry(store, layer)
            out = ops.dense_forward(inputs[0], entry["kernel"], entry["bias"])
            cache = entry["kernel"]
        elif op is LayerOp.SOFTMAX:
            out = ops.softmax(inputs[0])
        elif op is LayerOp.ADD:
            channels = layer.out_shape.channels
            out = ops.pad_channels(inputs[0], channels) + ops.pad_channels(inputs[1], channels)
        elif op is LayerOp.CONCAT:
            out = np.concatenate(inputs, axis=3)
        else:
            raise ShapeError(f"engine cannot execute {op.value}")
        values.append(out)
        caches.append(cache)
    return ForwardTrace(values=values, caches=caches, training=training)


def forward(graph: LayerGraph, store: WeightStore, batch: np.ndarray,
            model: Optional[MultiplierModel]) -> np.ndarray:
    """Class probabilities of shape (n, num_classes) in inference mode"""
    probs = run_forward(graph, store, batch, model, training=False).output
    return probs.reshape(probs.shape[0], -1)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    flat = probs.reshape(probs.shape[0], -1)
    picked = flat[np.arange(flat.shape[0]), labels]
    return float(-np.mean(np.log(np.maximum(picked, PROBABILITY_FLOOR))))


def backward(graph: LayerGraph, trace: ForwardTrace, labels: Optional[np.ndarray] = None,
             output_grad: Optional[np.ndarray] = None) -> Dict[str, Dict[str, np.ndarray]]:
    """Parameter gradients of the mean cross-entropy (or of a given output gradient).

    A trailing softmax is differentiated together with the cross-entropy.
    """
    layers = graph.layers
    grads: List[Optional[np.ndarray]] = [None] * len(layers)
    last = len(layers) - 1
    if layers[last].op is LayerOp.SOFTMAX and output_grad is None:
        if labels is None:
            raise StateError("labels are required to differentiate the softmax output")
        probs = trace.values[last]
        n = probs.shape[0]
        dlogits = probs.copy()
        dlogits.reshape(n, -1)[np.arange(n), labels] -= 1.0
        grads[layers[last].inputs[0]] = dlogits / n
        start = last - 1
    else:
        if output_grad is None:
            raise StateError("output_grad is required when the graph does not end in softmax")
        grads[last] = np.asarray(output_grad, dtype=np.float64)
        start = last

    def accumulate(index: int, value: np.ndarray) -> None:
        grads[index] = value if grads[index] is None else grads[index] + value

    param_grads: Dict[str, Dict[str, np.ndarray]] = {}
    for index in range(start, 0, -1):
        dout = grads[index]
        if dout is None:
            continue
        layer, cache = layers[index], trace.caches[index]
        op, inputs = layer.op, layer.inputs
        if op is LayerOp.CONV:
            dx, dkernel, dbias = conv_layer_backward(dout, cache, layer.params["stride"])
            param_grads[layer.name] = {"kernel": dkernel, "bias": dbias}
            accumulate(inputs[0], dx)
        elif op is LayerOp.BATCH_NORM:
            dx, dgamma, dbeta = ops.batch_norm_backward(dout, cache)
            param_grads[layer.name] = {"gamma": dgamma, "beta": dbeta}
            accumulate(inputs[0], dx)
        elif op is LayerOp.RELU:
            accumulate(inputs[0], dout * cache)
        elif op in (LayerOp.MAX_POOL, LayerOp.AVG_POOL):
            mode = "max" if op is LayerOp.MAX_POOL else "avg"
            accumulate(inputs[0], ops.pool_backward(dout, cache, mode))
        elif op is LayerOp.DENSE:
            x = trace.values[inputs[0]]
            dx, dkernel, dbias = ops.dense_backward(dout, x, cache)
            param_grads[layer.name] = {"kernel": dkernel, "bias": dbias}
            accumulate(inputs[0], dx)
        elif op is LayerOp.SOFTMAX:
            probs = trace.values[index]
            accumulate(inputs[0], probs * (dout - (dout * probs).sum(axis=-1, keepdims=True)))
        elif op is LayerOp.ADD:
            for source in inputs:
                accumulate(source, dout[..., :trace.values[source].shape[3]])
        elif op is LayerOp.CONCAT:
            offset = 0
            for source in inputs:
                width = trace.values[source].shape[3]
                accumulate(source, dout[..., offset:offset + width])
                offset += width
    return param_grads

