"""Part catalog: which drawable parts each camera perspective shows.

The default catalog ships as JSON inside the package so renders are
reproducible from a checked-in document. Part names are globally unique,
every region lies inside the unit square, and each region covers at least
1% of the image area so a blacked-out part is always a visible defect.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from alqa.errors import ContractError
from alqa.types import Perspective

MIN_REGION_AREA = 0.01

# One analog per example defect named in the problem domain.
_REQUIRED_PARTS = {
    Perspective.EXTERIOR_FRONT: "wheel_arch_lining_left",
    Perspective.EXTERIOR_REAR: "taillight_left",
    Perspective.INTERIOR_FRONT: "gear_stick",
    Perspective.INTERIOR_REAR: "seat_belt_left",
}


@dataclass(frozen=True)
class PartSpec:
    """A drawable vehicle part within one perspective."""

    name: str
    shape: str  # "rect" | "ellipse"
    box: tuple[float, float, float, float]  # normalized (x0, y0, x1, y1)
    palette: tuple[tuple[int, int, int], ...]
    defect_weight: float

    @property
    def area(self) -> float:
        w = self.box[2] - self.box[0]
        h = self.box[3] - self.box[1]
        raw = w * h
        return raw * 0.785398163 if self.shape == "ellipse" else raw


@dataclass(frozen=True)
class Background:
    top: tuple[int, int, int]
    bottom: tuple[int, int, int]


@dataclass(frozen=True)
class PartCatalog:
    parts: dict[Perspective, tuple[PartSpec, ...]]
    backgrounds: dict[Perspective, tuple[Background, ...]]

    def __post_init__(self):
        seen: set[str] = set()
        for persp in Perspective:
            plist = self.parts.get(persp, ())
            if len(plist) < 4:
                raise ContractError(f"{persp.value}: catalog needs >= 4 parts")
            required = _REQUIRED_PARTS[persp]
            if required not in {p.name for p in plist}:
                raise ContractError(f"{persp.value}: missing required part {required}")
            for p in plist:
                if p.name in seen:
                    raise ContractError(f"duplicate part name {p.name}")
                seen.add(p.name)
                x0, y0, x1, y1 = p.box
                if not (0 <= x0 < x1 <= 1 and 0 <= y0 < y1 <= 1):
                    raise ContractError(f"part {p.name}: region outside unit square")
                if p.shape not in ("rect", "ellipse"):
                    raise ContractError(f"part {p.name}: unknown shape {p.shape}")
                if p.area < MIN_REGION_AREA:
                    raise ContractError(
                        f"part {p.name}: area {p.area:.4f} below {MIN_REGION_AREA}"
                    )
                if p.defect_weight <= 0:
                    raise ContractError(f"part {p.name}: defect_weight must be > 0")

    def parts_of(self, perspective: Perspective) -> tuple[PartSpec, ...]:
        return self.parts[perspective]

    def part_names(self, perspective: Perspective | None = None) -> set[str]:
        if perspective is not None:
            return {p.name for p in self.parts[perspective]}
        return {p.name for plist in self.parts.values() for p in plist}

    def find_part(self, perspective: Perspective, name: str) -> PartSpec:
        for p in self.parts[perspective]:
            if p.name == name:
                return p
        raise ContractError(f"{name} is not a part of {perspective.value}")


def catalog_from_dict(doc: dict) -> PartCatalog:
    parts: dict[Perspective, tuple[PartSpec, ...]] = {}
    backgrounds: dict[Perspective, tuple[Background, ...]] = {}
    for key, section in doc["perspectives"].items():
        persp = Perspective(key)
        parts[persp] = tuple(
            PartSpec(
                name=p["name"],
                shape=p["shape"],
                box=tuple(p["box"]),
                palette=tuple(tuple(c) for c in p["palette"]),
                defect_weight=float(p["defect_weight"]),
            )
            for p in section["parts"]
        )
        backgrounds[persp] = tuple(
            Background(top=tuple(b["top"]), bottom=tuple(b["bottom"]))
            for b in section["backgrounds"]
        )
    return PartCatalog(parts=parts, backgrounds=backgrounds)


def load_catalog(path: Path | None = None) -> PartCatalog:
    """Load a catalog JSON; defaults to the one bundled with the package."""
    if path is None:
        text = resources.files("alqa.data").joinpath("part_catalog.json").read_text()
    else:
        text = Path(path).read_text()
    return catalog_from_dict(json.loads(text))
