"""Deterministic dataset splitting.

Order of assignment: the validation reserve is drawn first from the full
per-perspective set, then the train universe, and whatever remains becomes
the test set. The PRNG is numpy's PCG64 so splits reproduce bit-for-bit
across platforms for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from alqa.errors import ContractError, SizingError
from alqa.types import DataPool, ImageRecord


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_dataset(
    records: list[ImageRecord], train_count: int, val_fraction: float, seed: int
) -> DataPool:
    """Partition one perspective's records into validation/train/test."""
    if not records:
        raise ContractError("records must be non-empty")
    perspectives = {r.perspective for r in records}
    if len(perspectives) != 1:
        raise ContractError(f"records span multiple perspectives: {perspectives}")
    if not 0 <= val_fraction < 1:
        raise ContractError(f"val_fraction must be in [0, 1), got {val_fraction}")
    if train_count < 1:
        raise ContractError(f"train_count must be >= 1, got {train_count}")

    ids = sorted(r.id for r in records)
    if len(ids) != len(set(ids)):
        raise ContractError("duplicate record ids within one perspective")

    n = len(ids)
    n_val = _round_half_up(val_fraction * n)
    available = n - n_val
    if available < train_count:
        raise SizingError(
            f"need {train_count} train records after a validation reserve of "
            f"{n_val}, but only {available} of {n} remain"
        )

    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    shuffled = [ids[i] for i in order]
    val_ids = frozenset(shuffled[:n_val])
    train_ids = frozenset(shuffled[n_val : n_val + train_count])
    test_ids = frozenset(shuffled[n_val + train_count :])

    return DataPool(
        perspective=next(iter(perspectives)),
        records={r.id: r for r in records},
        train_ids=train_ids,
        validation_ids=val_ids,
        test_ids=test_ids,
    )
