"""Core domain types shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum

import numpy as np

from alqa.errors import ContractError

# Every classifier input raster is square RGB at this edge length.
TARGET_SIZE = 128


class Perspective(Enum):
    """The four fixed camera viewpoints a configuration is rendered from."""

    EXTERIOR_FRONT = "exterior_front"
    EXTERIOR_REAR = "exterior_rear"
    INTERIOR_FRONT = "interior_front"
    INTERIOR_REAR = "interior_rear"


class Label(Enum):
    """Binary image label; DEFECTIVE is the positive class everywhere."""

    CORRECT = "correct"
    DEFECTIVE = "defective"


class AnnotationLabel(Enum):
    """What an annotator may answer; AMBIGUOUS never enters the labeled pool."""

    CORRECT = "correct"
    DEFECTIVE = "defective"
    AMBIGUOUS = "ambiguous"

    def to_label(self) -> Label:
        if self is AnnotationLabel.AMBIGUOUS:
            raise ContractError("ambiguous annotations carry no training label")
        return Label(self.value)


@dataclass
class ImageRecord:
    """One rendered configuration view.

    ``pixels`` is an HWC array: uint8 in [0,255] straight from the renderer
    or float32 in [0,1] after preprocessing. It may be None for
    metadata-only handling; operations that need the raster say so.
    """

    id: str
    perspective: Perspective
    pixels: np.ndarray | None = None
    ground_truth: Label | None = None
    gen_seed: int = 0

    def with_pixels(self, pixels: np.ndarray) -> "ImageRecord":
        return replace(self, pixels=pixels)


@dataclass(frozen=True)
class AnnotationEvent:
    """A single resolved labeling action by an annotator."""

    image_id: str
    annotator: str
    label: AnnotationLabel
    duration_s: float
    timestamp: datetime

    def __post_init__(self):
        if self.duration_s < 0:
            raise ContractError(f"duration_s must be >= 0, got {self.duration_s}")

    @staticmethod
    def now(image_id: str, annotator: str, label: AnnotationLabel, duration_s: float):
        return AnnotationEvent(image_id, annotator, label, duration_s, datetime.now(timezone.utc))


@dataclass
class DataPool:
    """Per-perspective dataset state across acquisition rounds.

    The train universe (labeled + unlabeled + discarded), validation and
    test id sets are pairwise disjoint and fixed at split time; only the
    partition of the train universe moves as labels arrive or ambiguous
    instances get discarded.
    """

    perspective: Perspective
    records: dict[str, ImageRecord]
    train_ids: frozenset[str]
    validation_ids: frozenset[str]
    test_ids: frozenset[str]
    labeled: dict[str, Label] = field(default_factory=dict)
    discarded: set[str] = field(default_factory=set)

    def __post_init__(self):
        if self.train_ids & self.validation_ids or self.train_ids & self.test_ids or (
            self.validation_ids & self.test_ids
        ):
            raise ContractError("train/validation/test id sets overlap")

    @property
    def unlabeled_ids(self) -> set[str]:
        return set(self.train_ids) - self.labeled.keys() - self.discarded

    @property
    def labeled_count(self) -> int:
        return len(self.labeled)

    def mark_labeled(self, image_id: str, label: Label) -> None:
        if image_id not in self.train_ids:
            raise ContractError(f"{image_id} is not in the train universe")
        if image_id in self.discarded:
            raise ContractError(f"{image_id} was discarded and cannot be labeled")
        self.labeled[image_id] = label

    def discard(self, image_id: str) -> None:
        """Drop an ambiguous instance from the pool permanently."""
        if image_id not in self.train_ids:
            raise ContractError(f"{image_id} is not in the train universe")
        if image_id in self.labeled:
            raise ContractError(f"{image_id} is already labeled")
        self.discarded.add(image_id)

    def check_conservation(self) -> None:
        """labeled + unlabeled + discarded must exactly cover the universe."""
        union = set(self.labeled) | self.unlabeled_ids | self.discarded
        if union != set(self.train_ids):
            raise ContractError("train universe conservation violated")
        if self.labeled.keys() & self.discarded:
            raise ContractError("labeled and discarded sets overlap")

    def labeled_records(self) -> list[tuple[ImageRecord, Label]]:
        return [(self.records[i], lab) for i, lab in sorted(self.labeled.items())]

    def record_list(self, ids) -> list[ImageRecord]:
        return [self.records[i] for i in sorted(ids)]
