"""Dataset directory layout: images/<perspective>/<id>.png + manifest.jsonl."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
from PIL import Image

from alqa.errors import ContractError, NotFoundError
from alqa.types import ImageRecord, Label, Perspective

MANIFEST_NAME = "manifest.jsonl"


def image_path(root: Path, perspective: Perspective, image_id: str) -> Path:
    return Path(root) / "images" / perspective.value / f"{image_id}.png"


def write_dataset(records: list[ImageRecord], out_dir: Path) -> Path:
    """Write PNGs and the manifest; rows sorted by (perspective, id)."""
    out = Path(out_dir)
    rows = []
    for rec in sorted(records, key=lambda r: (r.perspective.value, r.id)):
        if rec.pixels is None:
            raise ContractError(f"record {rec.id} has no pixels to write")
        px = rec.pixels
        if px.dtype != np.uint8:
            px = np.clip(np.asarray(px, dtype=np.float64) * 255.0 + 0.5, 0, 255).astype(np.uint8)
        path = image_path(out, rec.perspective, rec.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(px, mode="RGB").save(path, format="PNG")
        rows.append(
            {
                "id": rec.id,
                "perspective": rec.perspective.value,
                "ground_truth": rec.ground_truth.value if rec.ground_truth else None,
                "gen_seed": rec.gen_seed,
            }
        )
    manifest = out / MANIFEST_NAME
    with open(manifest, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")
    return manifest


def read_manifest(root: Path) -> list[dict]:
    manifest = Path(root) / MANIFEST_NAME
    if not manifest.exists():
        raise NotFoundError(f"no {MANIFEST_NAME} under {root}")
    rows = []
    with open(manifest) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def dataset_hash(root: Path) -> str:
    """Content hash of the manifest; identifies the dataset for run manifests."""
    manifest = Path(root) / MANIFEST_NAME
    if not manifest.exists():
        raise NotFoundError(f"no {MANIFEST_NAME} under {root}")
    return hashlib.sha256(manifest.read_bytes()).hexdigest()


def load_records(
    root: Path, perspective: Perspective | None = None, with_pixels: bool = True
) -> list[ImageRecord]:
    """Materialize ImageRecords from a dataset directory."""
    root = Path(root)
    records = []
    for row in read_manifest(root):
        persp = Perspective(row["perspective"])
        if perspective is not None and persp is not perspective:
            continue
        pixels = None
        if with_pixels:
            path = image_path(root, persp, row["id"])
            if not path.exists():
                raise NotFoundError(f"missing image file {path}")
            pixels = np.asarray(Image.open(path).convert("RGB"), dtype=np.uint8)
        gt = Label(row["ground_truth"]) if row.get("ground_truth") else None
        records.append(
            ImageRecord(
                id=row["id"],
                perspective=persp,
                pixels=pixels,
                ground_truth=gt,
                gen_seed=int(row.get("gen_seed", 0)),
            )
        )
    return records
