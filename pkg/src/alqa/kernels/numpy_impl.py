"""Pure-numpy fallback kernels.

Convolutions run as im2col + one BLAS matmul; pooling and the bilinear
resample are expressed as slice-stacked vector ops. Slower than the numba
path on large feature maps but dependency-free beyond numpy.

All tensors are NCHW float32. Strides and zero padding are symmetric.
"""

import numpy as np


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def _im2col(xp: np.ndarray, k: int, stride: int, ho: int, wo: int) -> np.ndarray:
    """(B,C,Hp,Wp) padded input -> (C*k*k, B*ho*wo) patch matrix."""
    b, c = xp.shape[:2]
    cols = np.empty((c * k * k, b, ho, wo), dtype=xp.dtype)
    idx = 0
    for ci in range(c):
        for ki in range(k):
            for kj in range(k):
                cols[idx] = xp[
                    :, ci, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride
                ]
                idx += 1
    return cols.reshape(c * k * k, b * ho * wo)


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Cross-correlate x (B,C,H,W) with w (CO,C,k,k) -> (B,CO,Ho,Wo)."""
    b, c, h, wd = x.shape
    co, _, k, _ = w.shape
    ho, wo = _out_size(h, k, stride, pad), _out_size(wd, k, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride, ho, wo)
    y = w.reshape(co, -1) @ cols
    return np.ascontiguousarray(y.reshape(co, b, ho, wo).transpose(1, 0, 2, 3))


def conv2d_backward_input(
    dout: np.ndarray, w: np.ndarray, x_shape: tuple, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """Gradient w.r.t. the conv input; dout is (B,CO,Ho,Wo)."""
    b, c, h, wd = x_shape
    co, _, k, _ = w.shape
    ho, wo = dout.shape[2], dout.shape[3]
    dcols = w.reshape(co, -1).T @ dout.transpose(1, 0, 2, 3).reshape(co, -1)
    dcols = dcols.reshape(c, k, k, b, ho, wo)
    dxp = np.zeros((b, c, h + 2 * pad, wd + 2 * pad), dtype=dout.dtype)
    for ci in range(c):
        for ki in range(k):
            for kj in range(k):
                dxp[
                    :, ci, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride
                ] += dcols[ci, ki, kj]
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wd])
    return dxp


def conv2d_backward_weights(
    x: np.ndarray, dout: np.ndarray, w_shape: tuple, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """Gradient w.r.t. the conv weights."""
    co, c, k, _ = w_shape
    ho, wo = dout.shape[2], dout.shape[3]
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride, ho, wo)
    dw = dout.transpose(1, 0, 2, 3).reshape(co, -1) @ cols.T
    return dw.reshape(w_shape)


def maxpool2d_forward(x: np.ndarray, k: int = 2, stride: int = 2, pad: int = 0):
    """Max pooling; returns (y, argmax) with argmax in window-relative uint8."""
    b, c, h, wd = x.shape
    ho, wo = _out_size(h, k, stride, pad), _out_size(wd, k, stride, pad)
    if pad:
        xp = np.full((b, c, h + 2 * pad, wd + 2 * pad), -np.inf, dtype=x.dtype)
        xp[:, :, pad : pad + h, pad : pad + wd] = x
    else:
        xp = x
    windows = np.empty((k * k, b, c, ho, wo), dtype=x.dtype)
    for ki in range(k):
        for kj in range(k):
            windows[ki * k + kj] = xp[
                :, :, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride
            ]
    idx = windows.argmax(axis=0).astype(np.uint8)
    y = np.take_along_axis(windows, idx[None].astype(np.intp), axis=0)[0]
    return y, idx


def maxpool2d_backward(
    dout: np.ndarray, idx: np.ndarray, x_shape: tuple, k: int = 2, stride: int = 2, pad: int = 0
) -> np.ndarray:
    """Scatter pooled gradients back to the argmax positions."""
    b, c, h, wd = x_shape
    ho, wo = dout.shape[2], dout.shape[3]
    dxp = np.zeros((b, c, h + 2 * pad, wd + 2 * pad), dtype=dout.dtype)
    for ki in range(k):
        for kj in range(k):
            mask = idx == (ki * k + kj)
            dxp[
                :, :, ki : ki + ho * stride : stride, kj : kj + wo * stride : stride
            ] += dout * mask
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wd])
    return dxp


def resize_bilinear(img: np.ndarray, oh: int, ow: int) -> np.ndarray:
    """Bilinear resample of an HWC float image to (oh, ow).

    Samples at pixel centers (no antialias filter): output (i, j) reads the
    source at ((i+0.5)*h/oh - 0.5, (j+0.5)*w/ow - 0.5), clamped to the edge.
    """
    h, w = img.shape[:2]
    src = img.astype(np.float32, copy=False)
    ys = (np.arange(oh, dtype=np.float64) + 0.5) * (h / oh) - 0.5
    xs = (np.arange(ow, dtype=np.float64) + 0.5) * (w / ow) - 0.5
    y0 = np.clip(np.floor(ys), 0, h - 1).astype(np.intp)
    x0 = np.clip(np.floor(xs), 0, w - 1).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0).astype(np.float32)[:, None, None]
    fx = np.clip(xs - x0, 0.0, 1.0).astype(np.float32)[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return top * (1 - fy) + bot * fy
