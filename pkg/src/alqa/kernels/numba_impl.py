"""Numba-JIT hot kernels.

Same contracts as :mod:`alqa.kernels.numpy_impl`. Inner loops sweep the
contiguous width axis so LLVM can vectorize them; parallelism is over
independent output slices (batch for forward/input-grad, out-channel for
the weight grad), which keeps every output element single-writer and the
results run-to-run deterministic for any thread count.
"""

import numpy as np
from numba import njit, prange


def _pad_nchw(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


@njit(parallel=True, fastmath=True, cache=True)
def _conv_fwd(xp, w, stride, ho, wo):
    b, c = xp.shape[0], xp.shape[1]
    co, k = w.shape[0], w.shape[2]
    out = np.zeros((b, co, ho, wo), dtype=xp.dtype)
    for bi in prange(b):
        for o in range(co):
            obuf = out[bi, o]
            for ci in range(c):
                xc = xp[bi, ci]
                for ki in range(k):
                    for kj in range(k):
                        wv = w[o, ci, ki, kj]
                        for i in range(ho):
                            xr = xc[i * stride + ki]
                            orow = obuf[i]
                            for j in range(wo):
                                orow[j] += wv * xr[j * stride + kj]
    return out


@njit(parallel=True, fastmath=True, cache=True)
def _conv_bwd_input(dout, w, stride, hp, wp):
    b, co, ho, wo = dout.shape
    c, k = w.shape[1], w.shape[2]
    dxp = np.zeros((b, c, hp, wp), dtype=dout.dtype)
    for bi in prange(b):
        for o in range(co):
            dob = dout[bi, o]
            for ci in range(c):
                dxc = dxp[bi, ci]
                for ki in range(k):
                    for kj in range(k):
                        wv = w[o, ci, ki, kj]
                        for i in range(ho):
                            drow = dob[i]
                            xrow = dxc[i * stride + ki]
                            for j in range(wo):
                                xrow[j * stride + kj] += wv * drow[j]
    return dxp


@njit(parallel=True, fastmath=True, cache=True)
def _conv_bwd_weights(xp, dout, stride, c, k):
    b, co, ho, wo = dout.shape
    dw = np.zeros((co, c, k, k), dtype=dout.dtype)
    for o in prange(co):
        for bi in range(b):
            dob = dout[bi, o]
            for ci in range(c):
                xc = xp[bi, ci]
                for ki in range(k):
                    for kj in range(k):
                        acc = np.float32(0.0)
                        for i in range(ho):
                            xr = xc[i * stride + ki]
                            drow = dob[i]
                            for j in range(wo):
                                acc += xr[j * stride + kj] * drow[j]
                        dw[o, ci, ki, kj] += acc
    return dw


def conv2d_forward(x: np.ndarray, w: np.ndarray, stride: int = 1, pad: int = 0) -> np.ndarray:
    """Cross-correlate x (B,C,H,W) with w (CO,C,k,k) -> (B,CO,Ho,Wo)."""
    k = w.shape[2]
    ho = (x.shape[2] + 2 * pad - k) // stride + 1
    wo = (x.shape[3] + 2 * pad - k) // stride + 1
    return _conv_fwd(_pad_nchw(x, pad), w, stride, ho, wo)


def conv2d_backward_input(
    dout: np.ndarray, w: np.ndarray, x_shape: tuple, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """Gradient w.r.t. the conv input; dout is (B,CO,Ho,Wo)."""
    _, _, h, wd = x_shape
    dxp = _conv_bwd_input(dout, w, stride, h + 2 * pad, wd + 2 * pad)
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wd])
    return dxp


def conv2d_backward_weights(
    x: np.ndarray, dout: np.ndarray, w_shape: tuple, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """Gradient w.r.t. the conv weights."""
    return _conv_bwd_weights(_pad_nchw(x, pad), dout, stride, w_shape[1], w_shape[2])


@njit(parallel=True, fastmath=True, cache=True)
def _maxpool_fwd(xp, k, stride, ho, wo):
    b, c = xp.shape[0], xp.shape[1]
    y = np.empty((b, c, ho, wo), dtype=xp.dtype)
    idx = np.empty((b, c, ho, wo), dtype=np.uint8)
    for bi in prange(b):
        for ci in range(c):
            xc = xp[bi, ci]
            for i in range(ho):
                for j in range(wo):
                    best = xc[i * stride, j * stride]
                    arg = np.uint8(0)
                    for ki in range(k):
                        for kj in range(k):
                            v = xc[i * stride + ki, j * stride + kj]
                            if v > best:
                                best = v
                                arg = np.uint8(ki * k + kj)
                    y[bi, ci, i, j] = best
                    idx[bi, ci, i, j] = arg
    return y, idx


def maxpool2d_forward(x: np.ndarray, k: int = 2, stride: int = 2, pad: int = 0):
    """Max pooling; returns (y, argmax) with argmax in window-relative uint8."""
    b, c, h, wd = x.shape
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    if pad:
        xp = np.full((b, c, h + 2 * pad, wd + 2 * pad), -np.inf, dtype=x.dtype)
        xp[:, :, pad : pad + h, pad : pad + wd] = x
    else:
        xp = x
    return _maxpool_fwd(xp, k, stride, ho, wo)


@njit(parallel=True, fastmath=True, cache=True)
def _maxpool_bwd(dout, idx, k, stride, hp, wp):
    b, c, ho, wo = dout.shape
    dxp = np.zeros((b, c, hp, wp), dtype=dout.dtype)
    for bi in prange(b):
        for ci in range(c):
            for i in range(ho):
                for j in range(wo):
                    a = idx[bi, ci, i, j]
                    ki = a // k
                    kj = a % k
                    dxp[bi, ci, i * stride + ki, j * stride + kj] += dout[bi, ci, i, j]
    return dxp


def maxpool2d_backward(
    dout: np.ndarray, idx: np.ndarray, x_shape: tuple, k: int = 2, stride: int = 2, pad: int = 0
) -> np.ndarray:
    """Scatter pooled gradients back to the argmax positions."""
    b, c, h, wd = x_shape
    dxp = _maxpool_bwd(dout, idx, k, stride, h + 2 * pad, wd + 2 * pad)
    if pad:
        return np.ascontiguousarray(dxp[:, :, pad : pad + h, pad : pad + wd])
    return dxp


@njit(parallel=True, fastmath=True, cache=True)
def _resize_bilinear(src, oh, ow):
    h, w, c = src.shape
    out = np.empty((oh, ow, c), dtype=np.float32)
    sy = h / oh
    sx = w / ow
    for i in prange(oh):
        y = (i + 0.5) * sy - 0.5
        y0 = int(np.floor(y))
        if y0 < 0:
            y0 = 0
        if y0 > h - 1:
            y0 = h - 1
        y1 = min(y0 + 1, h - 1)
        fy = min(max(y - y0, 0.0), 1.0)
        for j in range(ow):
            x = (j + 0.5) * sx - 0.5
            x0 = int(np.floor(x))
            if x0 < 0:
                x0 = 0
            if x0 > w - 1:
                x0 = w - 1
            x1 = min(x0 + 1, w - 1)
            fx = min(max(x - x0, 0.0), 1.0)
            for ci in range(c):
                top = src[y0, x0, ci] * (1 - fx) + src[y0, x1, ci] * fx
                bot = src[y1, x0, ci] * (1 - fx) + src[y1, x1, ci] * fx
                out[i, j, ci] = top * (1 - fy) + bot * fy
    return out


def resize_bilinear(img: np.ndarray, oh: int, ow: int) -> np.ndarray:
    """Bilinear resample of an HWC float image to (oh, ow); see numpy_impl."""
    return _resize_bilinear(np.ascontiguousarray(img, dtype=np.float32), oh, ow)
