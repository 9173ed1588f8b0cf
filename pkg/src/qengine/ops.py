"""
NHWC numpy kernels. Convolutions run through a multiplier lookup table in the
forward pass; every backward kernel is plain floating point.
"""
import math
from typing import Optional, Tuple

import numpy as np

from .quant import QuantTensor
from ..multsim.models import OPERAND_VALUES, MultiplierModel
from ..utils.errors import ShapeError

# Upper bound on gathered products held in memory at once
CHUNK_ELEMENTS = 1 << 21


def same_padding(extent: int, kernel: int, stride: int) -> Tuple[int, int, int]:
    """(output extent, pad before, pad after) for "same" padding"""
    out = math.ceil(extent / stride)
    total = max((out - 1) * stride + kernel - extent, 0)
    return out, total // 2, total - total // 2


def im2col(x: np.ndarray, kernel: Tuple[int, int], stride: Tuple[int, int], padding: str,
           fill: float = 0.0) -> Tuple[np.ndarray, Tuple]:
    """Patches of shape (n, oh, ow, kh, kw, c) plus the geometry needed by col2im"""
    n, h, w, c = x.shape
    (kh, kw), (sh, sw) = kernel, stride
    if padding == "same":
        oh, top, bottom = same_padding(h, kh, sh)
        ow, left, right = same_padding(w, kw, sw)
    else:
        oh, ow = (h - kh) // sh + 1, (w - kw) // sw + 1
        top = bottom = left = right = 0
    if oh < 1 or ow < 1:
        raise ShapeError(f"window {kh}x{kw} does not fit input {h}x{w}")

    xp = np.pad(x, ((0, 0), (top, bottom), (left, right), (0, 0)), constant_values=fill)
    cols = np.empty((n, oh, ow, kh, kw, c), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i:i + sh * (oh - 1) + 1:sh, j:j + sw * (ow - 1) + 1:sw, :]
    return cols, (x.shape, xp.shape, top, left, kernel, stride)


def col2im(dcols: np.ndarray, geometry) -> np.ndarray:
    x_shape, padded_shape, top, left, (kh, kw), (sh, sw) = geometry
    _, oh, ow = dcols.shape[:3]
    dxp = np.zeros(padded_shape, dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + sh * (oh - 1) + 1:sh, j:j + sw * (ow - 1) + 1:sw, :] += dcols[:, :, :, i, j, :]
    return dxp[:, top:top + x_shape[1], left:left + x_shape[2], :]


def _approx_matmul(a_mag: np.ndarray, a_sign: Optional[np.ndarray], w_mag: np.ndarray,
                   w_sign: Optional[np.ndarray], table: np.ndarray) -> np.ndarray:
    """Integer (P, K) x (K, O) product with every scalar product read from the table"""
    rows, depth = a_mag.shape
    outputs = w_mag.shape[1]
    acc = np.empty((rows, outputs), dtype=np.int64)
    a_index = a_mag.astype(np.int64) * OPERAND_VALUES
    w_index = w_mag.astype(np.int64)
    step = max(1, CHUNK_ELEMENTS // max(depth, 1))
    for start in range(0, rows, step):
        block = a_index[start:start + step]
        block_sign = a_sign[start:start + step] if a_sign is not None else None
        for o in range(outputs):
            products = table[block + w_index[:, o]].astype(np.int64)
            if block_sign is not None and w_sign is not None:
                products *= block_sign * w_sign[:, o]
            elif block_sign is not None:
                products *= block_sign
            elif w_sign is not None:
                products *= w_sign[:, o]
            acc[start:start + step, o] = products.sum(axis=1)
    return acc


def _signed(q: QuantTensor) -> np.ndarray:
    values = q.magnitudes.astype(np.float64)
    return values * q.signs if q.signs is not None else values


def conv_forward_approx(inputs: QuantTensor, weights: QuantTensor, model: MultiplierModel,
                        stride: int, bias: Optional[np.ndarray] = None) -> np.ndarray:
    """Same-padded convolution of quantized NHWC inputs with (k, k, cin, cout) weights.

    Products accumulate as wide integers and are dequantized with both scales.
    """
    if inputs.magnitudes.ndim != 4 or weights.magnitudes.ndim != 4:
        raise ShapeError("convolution expects NHWC inputs and (k, k, cin, cout) weights")
    kh, kw, cin, cout = weights.shape
    if inputs.shape[3] != cin:
        raise ShapeError(f"input has {inputs.shape[3]} channels, weights expect {cin}")

    a_mag, geometry = im2col(inputs.magnitudes, (kh, kw), (stride, stride), "same")
    n, oh, ow = a_mag.shape[:3]
    a_mag = a_mag.reshape(n * oh * ow, -1)
    w_mag = weights.magnitudes.reshape(-1, cout)

    if model.is_exact:
        # Integer values stay below 2**53 so the float matmul is exact
        a_signed = a_mag.astype(np.float64)
        if inputs.signs is not None:
            a_signed *= im2col(inputs.signs, (kh, kw), (stride, stride), "same", fill=1)[0].reshape(a_mag.shape)
        acc = np.rint(a_signed @ _signed(weights).reshape(-1, cout)).astype(np.int64)
    else:
        a_sign = None
        if inputs.signs is not None:
            a_sign = im2col(inputs.signs, (kh, kw), (stride, stride), "same", fill=1)[0].reshape(a_mag.shape)
        w_sign = weights.signs.reshape(-1, cout) if weights.signs is not None else None
        acc = _approx_matmul(a_mag, a_sign, w_mag, w_sign, model.table)

    # Input scale is a float or one value per sample, shape (n, 1, 1, 1)
    out = acc.astype(np.float64).reshape(n, oh, ow, cout) * (np.asarray(inputs.scale) * weights.scale)
    if bias is not None:
        out += bias
    return out


def conv_forward_float(x: np.ndarray, kernel: np.ndarray, stride: int,
                       bias: Optional[np.ndarray] = None) -> np.ndarray:
    kh, kw, cin, cout = kernel.shape
    if x.shape[3] != cin:
        raise ShapeError(f"input has {x.shape[3]} channels, weights expect {cin}")
    cols, _ = im2col(x, (kh, kw), (stride, stride), "same")
    n, oh, ow = cols.shape[:3]
    out = (cols.reshape(n * oh * ow, -1) @ kernel.reshape(-1, cout)).reshape(n, oh, ow, cout)
    if bias is not None:
        out += bias
    return out


def conv_backward(dout: np.ndarray, x: np.ndarray, kernel: np.ndarray,
                  stride: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Float gradients (dx, dkernel, dbias) of a same-padded convolution"""
    kh, kw, cin, cout = kernel.shape
    cols, geometry = im2col(x, (kh, kw), (stride, stride), "same")
    n, oh, ow = cols.shape[:3]
    flat_out = dout.reshape(-1, cout)
    dkernel = (cols.reshape(n * oh * ow, -1).T @ flat_out).reshape(kernel.shape)
    dbias = flat_out.sum(axis=0)
    dcols = (flat_out @ kernel.reshape(-1, cout).T).reshape(cols.shape)
    return col2im(dcols, geometry), dkernel, dbias


def pool_forward(x: np.ndarray, kernel, stride, padding: str, mode: str):
    fill = -np.inf if mode == "max" else 0.0
    cols, geometry = im2col(x, tuple(kernel), tuple(stride), padding, fill=fill)
    n, oh, ow, kh, kw, c = cols.shape
    windows = cols.reshape(n, oh, ow, kh * kw, c)
    if mode == "max":
        arg = windows.argmax(axis=3)
        out = np.take_along_axis(windows, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
        return out, (geometry, arg, windows.shape)
    return windows.mean(axis=3), (geometry, None, windows.shape)


def pool_backward(dout: np.ndarray, cache, mode: str) -> np.ndarray:
    geometry, arg, window_shape = cache
    n, oh, ow, area, c = window_shape
    dwindows = np.zeros(window_shape, dtype=dout.dtype)
    if mode == "max":
        np.put_along_axis(dwindows, arg[:, :, :, None, :], dout[:, :, :, None, :], axis=3)
    else:
        dwindows[:] = dout[:, :, :, None, :] / area
    kh, kw = geometry[4]
    return col2im(dwindows.reshape(n, oh, ow, kh, kw, c), geometry)


def dense_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    flat = x.reshape(x.shape[0], -1)
    return (flat @ kernel + bias).reshape(x.shape[0], 1, 1, -1)


def dense_backward(dout: np.ndarray, x: np.ndarray, kernel: np.ndarray):
    flat = x.reshape(x.shape[0], -1)
    g = dout.reshape(dout.shape[0], -1)
    return (g @ kernel.T).reshape(x.shape), flat.T @ g, g.sum(axis=0)


def batch_norm_forward(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, mean: np.ndarray,
                       var: np.ndarray, training: bool, momentum: float, epsilon: float):
    """Returns (output, cache, updated running mean, updated running var)"""
    if training:
        batch_mean = x.mean(axis=(0, 1, 2))
        batch_var = x.var(axis=(0, 1, 2))
        mean = momentum * mean + (1 - momentum) * batch_mean
        var = momentum * var + (1 - momentum) * batch_var
        use_mean, use_var = batch_mean, batch_var
    else:
        use_mean, use_var = mean, var
    inv_std = 1.0 / np.sqrt(use_var + epsilon)
    normed = (x - use_mean) * inv_std
    return gamma * normed + beta, (normed, inv_std, gamma, training), mean, var


def batch_norm_backward(dout: np.ndarray, cache):
    normed, inv_std, gamma, training = cache
    dgamma = (dout * normed).sum(axis=(0, 1, 2))
    dbeta = dout.sum(axis=(0, 1, 2))
    dnormed = dout * gamma
    if not training:
        return dnormed * inv_std, dgamma, dbeta
    count = dout.shape[0] * dout.shape[1] * dout.shape[2]
    dx = (inv_std / count) * (count * dnormed - dnormed.sum(axis=(0, 1, 2))
                              - normed * (dnormed * normed).sum(axis=(0, 1, 2)))
    return dx, dgamma, dbeta


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def pad_channels(x: np.ndarray, channels: int) -> np.ndarray:
    extra = channels - x.shape[3]
    if extra <= 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (0, 0), (0, extra)))
