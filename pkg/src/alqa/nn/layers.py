"""Layers with explicit forward/backward passes (NCHW, float32).

No autograd: each layer caches what its backward pass needs. Construction
order fixes the RNG draw order, so a given seed always yields the same
initial weights.
"""

from __future__ import annotations

import numpy as np

from alqa import kernels


class Param:
    """A trainable tensor plus its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)


class Layer:
    def params(self) -> list[Param]:
        return []

    def state(self) -> dict[str, np.ndarray]:
        """Non-trainable buffers that still belong in a checkpoint."""
        return {}

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Conv2d(Layer):
    def __init__(self, cin: int, cout: int, k: int, stride: int, pad: int,
                 rng: np.random.Generator):
        std = np.sqrt(2.0 / (cin * k * k))
        self.w = Param(rng.normal(0.0, std, size=(cout, cin, k, k)).astype(np.float32))
        self.b = Param(np.zeros(cout, dtype=np.float32))
        self.stride, self.pad = stride, pad
        self._x = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x, training):
        self._x = x
        y = kernels.conv2d_forward(x, self.w.value, self.stride, self.pad)
        y += self.b.value[None, :, None, None]
        return y

    def backward(self, dout):
        self.b.grad += dout.sum(axis=(0, 2, 3))
        self.w.grad += kernels.conv2d_backward_weights(
            self._x, dout, self.w.value.shape, self.stride, self.pad
        )
        return kernels.conv2d_backward_input(
            dout, self.w.value, self._x.shape, self.stride, self.pad
        )


class BatchNorm2d(Layer):
    def __init__(self, c: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Param(np.ones(c, dtype=np.float32))
        self.beta = Param(np.zeros(c, dtype=np.float32))
        self.running_mean = np.zeros(c, dtype=np.float32)
        self.running_var = np.ones(c, dtype=np.float32)
        self.momentum, self.eps = momentum, eps
        self._cache = None

    def params(self):
        return [self.gamma, self.beta]

    def state(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def forward(self, x, training):
        if training:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            self.running_mean += self.momentum * (mean - self.running_mean)
            self.running_var += self.momentum * (var - self.running_var)
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        if training:
            self._cache = (xhat, inv_std)
        return self.gamma.value[None, :, None, None] * xhat + self.beta.value[None, :, None, None]

    def backward(self, dout):
        xhat, inv_std = self._cache
        n = dout.shape[0] * dout.shape[2] * dout.shape[3]
        sum_d = dout.sum(axis=(0, 2, 3))
        sum_dx = (dout * xhat).sum(axis=(0, 2, 3))
        self.beta.grad += sum_d
        self.gamma.grad += sum_dx
        g = self.gamma.value * inv_std
        dx = (
            dout * n - sum_d[None, :, None, None] - xhat * sum_dx[None, :, None, None]
        ) * (g / n)[None, :, None, None]
        return dx.astype(dout.dtype, copy=False)


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x, training):
        self._mask = x > 0
        return np.where(self._mask, x, 0)

    def backward(self, dout):
        return np.where(self._mask, dout, 0)


class MaxPool2d(Layer):
    def __init__(self, k: int = 2, stride: int = 2, pad: int = 0):
        self.k, self.stride, self.pad = k, stride, pad
        self._idx = None
        self._shape = None

    def forward(self, x, training):
        y, idx = kernels.maxpool2d_forward(x, self.k, self.stride, self.pad)
        self._idx, self._shape = idx, x.shape
        return y

    def backward(self, dout):
        return kernels.maxpool2d_backward(
            dout, self._idx, self._shape, self.k, self.stride, self.pad
        )


class GlobalAvgPool(Layer):
    """(B,C,H,W) -> (B,C)."""

    def __init__(self):
        self._shape = None

    def forward(self, x, training):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, dout):
        b, c, h, w = self._shape
        scale = np.asarray(1.0 / (h * w), dtype=dout.dtype)
        return np.broadcast_to((dout * scale)[:, :, None, None], self._shape).copy()


class Linear(Layer):
    def __init__(self, cin: int, cout: int, rng: np.random.Generator):
        std = np.sqrt(2.0 / cin)
        self.w = Param(rng.normal(0.0, std, size=(cin, cout)).astype(np.float32))
        self.b = Param(np.zeros(cout, dtype=np.float32))
        self._x = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x, training):
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dout):
        self.w.grad += self._x.T @ dout
        self.b.grad += dout.sum(axis=0)
        return dout @ self.w.value.T


class Sequential(Layer):
    def __init__(self, layers: list[Layer]):
        self.layers = layers

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def state(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for key, buf in layer.state().items():
                out[f"{i}.{key}"] = buf
        return out

    def forward(self, x, training):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        return dout


class BasicBlock(Layer):
    """Two 3x3 convs with identity (or 1x1-projected) skip connection."""

    def __init__(self, cin: int, cout: int, stride: int, rng: np.random.Generator):
        self.conv1 = Conv2d(cin, cout, 3, stride, 1, rng)
        self.bn1 = BatchNorm2d(cout)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(cout, cout, 3, 1, 1, rng)
        self.bn2 = BatchNorm2d(cout)
        if stride != 1 or cin != cout:
            self.proj_conv = Conv2d(cin, cout, 1, stride, 0, rng)
            self.proj_bn = BatchNorm2d(cout)
        else:
            self.proj_conv = None
            self.proj_bn = None
        self._out_mask = None

    def _sublayers(self):
        out = [self.conv1, self.bn1, self.relu1, self.conv2, self.bn2]
        if self.proj_conv is not None:
            out += [self.proj_conv, self.proj_bn]
        return out

    def params(self):
        return [p for layer in self._sublayers() for p in layer.params()]

    def state(self):
        out = {}
        for i, layer in enumerate(self._sublayers()):
            for key, buf in layer.state().items():
                out[f"{i}.{key}"] = buf
        return out

    def forward(self, x, training):
        main = self.bn2.forward(
            self.conv2.forward(
                self.relu1.forward(self.bn1.forward(self.conv1.forward(x, training), training), training),
                training,
            ),
            training,
        )
        if self.proj_conv is not None:
            skip = self.proj_bn.forward(self.proj_conv.forward(x, training), training)
        else:
            skip = x
        y = main + skip
        self._out_mask = y > 0
        return np.where(self._out_mask, y, 0)

    def backward(self, dout):
        dy = np.where(self._out_mask, dout, 0)
        dmain = self.conv1.backward(
            self.bn1.backward(self.relu1.backward(self.conv2.backward(self.bn2.backward(dy))))
        )
        if self.proj_conv is not None:
            dskip = self.proj_conv.backward(self.proj_bn.backward(dy))
        else:
            dskip = dy
        return dmain + dskip
