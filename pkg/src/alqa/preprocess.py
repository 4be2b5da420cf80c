"""Image preprocessing: overlay removal and downscaling to the model size."""

from __future__ import annotations

import numpy as np

from alqa import kernels
from alqa.errors import InvalidImageError
from alqa.types import TARGET_SIZE, ImageRecord


def preprocess(
    record: ImageRecord,
    watermark_region: tuple[float, float, float, float] | None = None,
) -> ImageRecord:
    """Return a copy of ``record`` with a 128x128x3 float raster in [0,1].

    ``watermark_region`` is an optional (x0, y0, x1, y1) rectangle in
    normalized [0,1] coordinates that is zeroed before resizing; it defaults
    to disabled because synthetic renders carry no copyright overlay.
    Idempotent: running twice produces the same raster.
    """
    px = record.pixels
    if px is None:
        raise InvalidImageError(f"record {record.id} has no pixel data")
    px = np.asarray(px)
    if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
        raise InvalidImageError(f"record {record.id}: expected HxWx3 raster, got {px.shape}")

    if px.dtype == np.uint8:
        img = px.astype(np.float32) / np.float32(255.0)
    else:
        img = px.astype(np.float32, copy=True)

    if watermark_region is not None:
        h, w = img.shape[:2]
        x0, y0, x1, y1 = watermark_region
        r0, r1 = int(np.floor(y0 * h)), int(np.ceil(y1 * h))
        c0, c1 = int(np.floor(x0 * w)), int(np.ceil(x1 * w))
        img[max(r0, 0) : min(r1, h), max(c0, 0) : min(c1, w), :] = 0.0

    if img.shape[0] != TARGET_SIZE or img.shape[1] != TARGET_SIZE:
        img = kernels.resize_bilinear(img, TARGET_SIZE, TARGET_SIZE)

    np.clip(img, 0.0, 1.0, out=img)
    return record.with_pixels(img)
