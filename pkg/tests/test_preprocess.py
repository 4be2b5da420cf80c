import numpy as np
import pytest

from alqa.errors import InvalidImageError
from alqa.preprocess import preprocess
from alqa.types import ImageRecord, Perspective


def _rec(pixels):
    return ImageRecord(id="r0", perspective=Perspective.EXTERIOR_FRONT, pixels=pixels)


def test_contract_shape_and_range():
    rng = np.random.default_rng(0)
    out = preprocess(_rec((rng.random((512, 512, 3)) * 255).astype(np.uint8)))
    assert out.pixels.shape == (128, 128, 3)
    assert out.pixels.dtype == np.float32
    assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0


def test_idempotent_on_preprocessed_input():
    rng = np.random.default_rng(1)
    once = preprocess(_rec(rng.random((256, 256, 3)).astype(np.float32)))
    twice = preprocess(once)
    np.testing.assert_array_equal(once.pixels, twice.pixels)


def test_watermark_region_maps_through_downscale():
    # all-white 256x256 with a zeroed overlay covering input rows/cols [0, 32):
    # 2:1 sampling averages disjoint 2x2 blocks, so outputs [0, 16) are exactly
    # zero and output 16 draws from inputs 32/33, which are untouched.
    white = np.ones((256, 256, 3), dtype=np.float32)
    out = preprocess(_rec(white), watermark_region=(0.0, 0.0, 0.125, 0.125))
    assert np.all(out.pixels[:16, :16] == 0.0)
    assert np.all(out.pixels[16:, :, :] > 0.0)
    assert np.all(out.pixels[:, 16:, :] > 0.0)


def test_uint8_and_float_agree():
    rng = np.random.default_rng(2)
    u8 = (rng.random((64, 64, 3)) * 255).astype(np.uint8)
    a = preprocess(_rec(u8))
    b = preprocess(_rec(u8.astype(np.float32) / 255.0))
    np.testing.assert_allclose(a.pixels, b.pixels, atol=1e-6)


def test_invalid_rasters_rejected():
    with pytest.raises(InvalidImageError):
        preprocess(_rec(None))
    with pytest.raises(InvalidImageError):
        preprocess(_rec(np.zeros((0, 4, 3), dtype=np.uint8)))
    with pytest.raises(InvalidImageError):
        preprocess(_rec(np.zeros((4, 4), dtype=np.uint8)))
