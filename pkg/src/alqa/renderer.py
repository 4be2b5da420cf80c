"""Procedural generator of stylized vehicle renders with injectable defects.

Stands in for a production rendering engine: each configuration draws a
fixed scene layout whose part colors and positions vary slightly per
config, and every part listed in the config's defect set is painted as an
exactly-black region, which is what a missing part looks like downstream.

Rendering is a pure function of (config, perspective): per-config RNG
streams are derived from the config's gen_seed, so datasets can be
generated in parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from alqa.catalog import PartCatalog, PartSpec, load_catalog
from alqa.errors import CatalogMismatchError, ContractError
from alqa.types import ImageRecord, Label, Perspective

DEFAULT_RESOLUTION = 256
POSITION_JITTER = 0.02  # of image extent; cap is 0.05
SHADE_JITTER = 0.03
NOISE_SIGMA = 0.012
MIN_CHANNEL = 10  # correct imagery never reaches exact black

_PERSP_INDEX = {p: i for i, p in enumerate(Perspective)}


@dataclass
class VehicleConfig:
    """One orderable configuration: styling choices plus injected defects."""

    config_id: str
    option_vector: dict[str, int]
    defect_set: frozenset[str] = field(default_factory=frozenset)
    gen_seed: int = 0

    @property
    def is_defective(self) -> bool:
        return bool(self.defect_set)


def generate_dataset(
    n: int, defect_fraction: float, seed: int, catalog: PartCatalog | None = None
) -> list[VehicleConfig]:
    """Sample n configurations with exactly round(defect_fraction*n) defective.

    Defective configs receive one or two blacked-out parts in every
    perspective (weighted by each part's defect_weight), so the per-view
    positive rate equals defect_fraction for all four views.
    """
    if n < 1:
        raise ContractError(f"n must be >= 1, got {n}")
    if not 0 <= defect_fraction <= 1:
        raise ContractError(f"defect_fraction must be in [0, 1], got {defect_fraction}")
    catalog = catalog or load_catalog()

    rng = np.random.Generator(np.random.PCG64(seed))
    n_def = int(np.floor(defect_fraction * n + 0.5))
    defective = np.zeros(n, dtype=bool)
    defective[rng.permutation(n)[:n_def]] = True

    weights = {
        persp: np.array([p.defect_weight for p in catalog.parts_of(persp)], dtype=np.float64)
        for persp in Perspective
    }
    for persp in weights:
        weights[persp] /= weights[persp].sum()

    configs = []
    for i in range(n):
        options: dict[str, int] = {}
        for persp in Perspective:
            options[f"background:{persp.value}"] = int(
                rng.integers(0, len(catalog.backgrounds[persp]))
            )
            for part in catalog.parts_of(persp):
                options[part.name] = int(rng.integers(0, len(part.palette)))
        defect_parts: set[str] = set()
        if defective[i]:
            for persp in Perspective:
                parts = catalog.parts_of(persp)
                count = 2 if rng.random() < 0.3 else 1
                picked = rng.choice(len(parts), size=count, replace=False, p=weights[persp])
                defect_parts.update(parts[int(j)].name for j in picked)
        configs.append(
            VehicleConfig(
                config_id=f"cfg{i:05d}",
                option_vector=options,
                defect_set=frozenset(defect_parts),
                gen_seed=int(rng.integers(0, 2**62)),
            )
        )
    return configs


def _part_mask(part: PartSpec, jitter: tuple[float, float], res: int) -> np.ndarray:
    x0, y0, x1, y1 = part.box
    dx, dy = jitter
    x0, x1 = np.clip([x0 + dx, x1 + dx], 0.0, 1.0)
    y0, y1 = np.clip([y0 + dy, y1 + dy], 0.0, 1.0)
    if part.shape == "rect":
        mask = np.zeros((res, res), dtype=bool)
        mask[int(y0 * res) : int(y1 * res), int(x0 * res) : int(x1 * res)] = True
        return mask
    cy, cx = (y0 + y1) / 2 * res, (x0 + x1) / 2 * res
    ry, rx = (y1 - y0) / 2 * res, (x1 - x0) / 2 * res
    yy, xx = np.ogrid[:res, :res]
    return ((yy + 0.5 - cy) / ry) ** 2 + ((xx + 0.5 - cx) / rx) ** 2 <= 1.0


def _render_rng(config: VehicleConfig, perspective: Perspective) -> np.random.Generator:
    ss = np.random.SeedSequence([config.gen_seed, _PERSP_INDEX[perspective]])
    return np.random.Generator(np.random.PCG64(ss))


def _jitters_and_rng(
    config: VehicleConfig, perspective: Perspective, catalog: PartCatalog
) -> tuple[dict[str, tuple[float, float]], np.random.Generator]:
    rng = _render_rng(config, perspective)
    out = {}
    for part in catalog.parts_of(perspective):
        dx, dy = rng.uniform(-POSITION_JITTER, POSITION_JITTER, size=2)
        out[part.name] = (float(dx), float(dy))
    return out, rng


def part_jitters(
    config: VehicleConfig, perspective: Perspective, catalog: PartCatalog
) -> dict[str, tuple[float, float]]:
    """Per-part position offsets for this render, in normalized units."""
    return _jitters_and_rng(config, perspective, catalog)[0]


def render(
    config: VehicleConfig,
    perspective: Perspective,
    catalog: PartCatalog | None = None,
    resolution: int = DEFAULT_RESOLUTION,
) -> ImageRecord:
    """Draw one configuration from one perspective.

    Non-defective parts appear in their styled colors; every visible part in
    the defect set is painted exactly black, after everything else, so the
    defect always wins overlaps. Ground truth is DEFECTIVE iff the defect
    set intersects this perspective's parts.
    """
    catalog = catalog or load_catalog()
    known = catalog.part_names()
    unknown = set(config.defect_set) - known
    if unknown:
        raise CatalogMismatchError(f"defect_set names unknown to catalog: {sorted(unknown)}")

    res = resolution
    parts = catalog.parts_of(perspective)
    jitters, rng = _jitters_and_rng(config, perspective, catalog)

    bg_styles = catalog.backgrounds[perspective]
    bg = bg_styles[config.option_vector.get(f"background:{perspective.value}", 0) % len(bg_styles)]
    shade = rng.uniform(-SHADE_JITTER, SHADE_JITTER)
    t = np.linspace(0.0, 1.0, res, dtype=np.float32)[:, None, None]
    top = np.asarray(bg.top, dtype=np.float32) / 255.0
    bottom = np.asarray(bg.bottom, dtype=np.float32) / 255.0
    rows = (1 - t) * top + t * bottom + np.float32(shade)  # (res, 1, 3)
    img = np.broadcast_to(rows, (res, res, 3)).copy()

    for part in parts:
        style = config.option_vector.get(part.name, 0) % len(part.palette)
        color = np.asarray(part.palette[style], dtype=np.float32) / 255.0
        img[_part_mask(part, jitters[part.name], res)] = color

    img += rng.normal(0.0, NOISE_SIGMA, size=(res, res, 1)).astype(np.float32)
    np.clip(img, MIN_CHANNEL / 255.0, 1.0, out=img)
    pixels = (img * 255.0 + 0.5).astype(np.uint8)

    visible_defects = set(config.defect_set) & {p.name for p in parts}
    for part in parts:
        if part.name in visible_defects:
            pixels[_part_mask(part, jitters[part.name], res)] = 0

    return ImageRecord(
        id=config.config_id,
        perspective=perspective,
        pixels=pixels,
        ground_truth=Label.DEFECTIVE if visible_defects else Label.CORRECT,
        gen_seed=config.gen_seed,
    )


def render_dataset(
    configs: list[VehicleConfig],
    perspectives: list[Perspective] | None = None,
    catalog: PartCatalog | None = None,
    resolution: int = DEFAULT_RESOLUTION,
) -> list[ImageRecord]:
    """Render every config from every requested perspective."""
    catalog = catalog or load_catalog()
    perspectives = perspectives or list(Perspective)
    return [render(c, p, catalog, resolution) for p in perspectives for c in configs]
