"""Both kernel backends must agree with each other and with finite differences."""

import numpy as np
import pytest

from alqa.kernels import numba_impl, numpy_impl

BACKENDS = [numpy_impl, numba_impl]
CONV_CASES = [
    # (B, C, H, W, CO, k, stride, pad)
    (2, 3, 12, 12, 4, 3, 1, 1),
    (2, 3, 13, 13, 4, 3, 2, 1),
    (1, 2, 9, 9, 3, 1, 1, 0),
    (2, 2, 16, 16, 3, 7, 2, 3),
]


def _rand(shape, rng, dtype=np.float32):
    return rng.standard_normal(shape).astype(dtype)


@pytest.mark.parametrize("case", CONV_CASES)
def test_conv_backends_agree(case):
    b, c, h, w, co, k, stride, pad = case
    rng = np.random.default_rng(0)
    x = _rand((b, c, h, w), rng)
    wt = _rand((co, c, k, k), rng)
    y_np = numpy_impl.conv2d_forward(x, wt, stride, pad)
    y_nb = numba_impl.conv2d_forward(x, wt, stride, pad)
    np.testing.assert_allclose(y_np, y_nb, rtol=1e-5, atol=1e-6)

    dout = _rand(y_np.shape, rng)
    np.testing.assert_allclose(
        numpy_impl.conv2d_backward_input(dout, wt, x.shape, stride, pad),
        numba_impl.conv2d_backward_input(dout, wt, x.shape, stride, pad),
        rtol=1e-5, atol=1e-6,
    )
    np.testing.assert_allclose(
        numpy_impl.conv2d_backward_weights(x, dout, wt.shape, stride, pad),
        numba_impl.conv2d_backward_weights(x, dout, wt.shape, stride, pad),
        rtol=1e-4, atol=1e-5,
    )


@pytest.mark.parametrize("impl", BACKENDS, ids=["numpy", "numba"])
@pytest.mark.parametrize("case", CONV_CASES[:2])
def test_conv_gradients_match_finite_differences(impl, case):
    b, c, h, w, co, k, stride, pad = case
    rng = np.random.default_rng(1)
    x = rng.standard_normal((b, c, h, w))
    wt = rng.standard_normal((co, c, k, k))
    dout = rng.standard_normal(impl.conv2d_forward(x, wt, stride, pad).shape)

    def loss(xx, ww):
        return float((impl.conv2d_forward(xx, ww, stride, pad) * dout).sum())

    dx = impl.conv2d_backward_input(dout, wt, x.shape, stride, pad)
    dw = impl.conv2d_backward_weights(x, dout, wt.shape, stride, pad)
    eps = 1e-6
    for _ in range(10):
        idx = tuple(rng.integers(0, s) for s in x.shape)
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        num = (loss(xp, wt) - loss(xm, wt)) / (2 * eps)
        assert abs(num - dx[idx]) < 1e-4 * max(1.0, abs(num))
    for _ in range(10):
        idx = tuple(rng.integers(0, s) for s in wt.shape)
        wp, wm = wt.copy(), wt.copy()
        wp[idx] += eps
        wm[idx] -= eps
        num = (loss(x, wp) - loss(x, wm)) / (2 * eps)
        assert abs(num - dw[idx]) < 1e-4 * max(1.0, abs(num))


@pytest.mark.parametrize("pool", [(2, 2, 0, 8), (3, 2, 1, 9), (2, 2, 0, 10)])
def test_maxpool_backends_agree_and_invert(pool):
    k, stride, pad, size = pool
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 3, size, size)).astype(np.float32)
    y_np, idx_np = numpy_impl.maxpool2d_forward(x, k, stride, pad)
    y_nb, idx_nb = numba_impl.maxpool2d_forward(x, k, stride, pad)
    np.testing.assert_array_equal(y_np, y_nb)

    dout = rng.standard_normal(y_np.shape).astype(np.float32)
    dx_np = numpy_impl.maxpool2d_backward(dout, idx_np, x.shape, k, stride, pad)
    dx_nb = numba_impl.maxpool2d_backward(dout, idx_nb, x.shape, k, stride, pad)
    np.testing.assert_allclose(dx_np, dx_nb, rtol=1e-6, atol=1e-7)
    # gradient mass is conserved
    assert abs(dx_np.sum() - dout.sum()) < 1e-3


def test_maxpool_matches_reshape_trick():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((2, 4, 8, 8)).astype(np.float32)
    y, _ = numpy_impl.maxpool2d_forward(x, 2, 2, 0)
    expected = x.reshape(2, 4, 4, 2, 4, 2).max(axis=(3, 5))
    np.testing.assert_array_equal(y, expected)


@pytest.mark.parametrize("impl", BACKENDS, ids=["numpy", "numba"])
def test_resize_identity_and_block_average(impl):
    rng = np.random.default_rng(4)
    img = rng.random((16, 16, 3)).astype(np.float32)
    np.testing.assert_array_equal(impl.resize_bilinear(img, 16, 16), img)

    # exact 2:1 downscale samples halfway between pixel pairs -> 2x2 means
    small = impl.resize_bilinear(img, 8, 8)
    expected = img.reshape(8, 2, 8, 2, 3).mean(axis=(1, 3))
    np.testing.assert_allclose(small, expected, rtol=1e-5, atol=1e-6)


def test_resize_backends_agree():
    rng = np.random.default_rng(5)
    img = rng.random((37, 53, 3)).astype(np.float32)
    a = numpy_impl.resize_bilinear(img, 128, 128)
    b = numba_impl.resize_bilinear(img, 128, 128)
    np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-6)
    assert a.min() >= 0.0 and a.max() <= 1.0
