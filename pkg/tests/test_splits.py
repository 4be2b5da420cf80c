import numpy as np
import pytest

from alqa.errors import ContractError, SizingError
from alqa.splits import split_dataset
from alqa.types import DataPool, ImageRecord, Label, Perspective


def _records(n, perspective=Perspective.EXTERIOR_FRONT):
    return [ImageRecord(id=f"cfg{i:05d}", perspective=perspective) for i in range(n)]


def test_sizes_match_reference_scenario():
    pool = split_dataset(_records(4000), train_count=2000, val_fraction=0.10, seed=1)
    assert len(pool.validation_ids) == 400
    assert len(pool.train_ids) == 2000
    assert len(pool.test_ids) == 1600


def test_zero_validation_fraction():
    pool = split_dataset(_records(100), train_count=60, val_fraction=0.0, seed=1)
    assert len(pool.validation_ids) == 0
    assert len(pool.train_ids) == 60
    assert len(pool.test_ids) == 40


def test_determinism_and_disjointness():
    a = split_dataset(_records(500), 300, 0.1, seed=9)
    b = split_dataset(_records(500), 300, 0.1, seed=9)
    assert a.train_ids == b.train_ids
    assert a.validation_ids == b.validation_ids
    assert a.test_ids == b.test_ids
    assert not (a.train_ids & a.validation_ids)
    assert not (a.train_ids & a.test_ids)
    assert not (a.validation_ids & a.test_ids)
    assert len(a.train_ids | a.validation_ids | a.test_ids) == 500

    c = split_dataset(_records(500), 300, 0.1, seed=10)
    assert c.train_ids != a.train_ids  # different seed shuffles differently


def test_sizing_error_names_counts():
    with pytest.raises(SizingError, match="need 95"):
        split_dataset(_records(100), train_count=95, val_fraction=0.10, seed=0)


def test_mixed_perspectives_rejected():
    records = _records(10) + _records(5, Perspective.EXTERIOR_REAR)
    # make ids unique across the mix
    for i, r in enumerate(records):
        records[i] = ImageRecord(id=f"x{i}", perspective=r.perspective)
    with pytest.raises(ContractError, match="perspectives"):
        split_dataset(records, 5, 0.1, seed=0)


def test_pool_mutation_and_conservation():
    pool = split_dataset(_records(50), 30, 0.1, seed=2)
    some = sorted(pool.unlabeled_ids)[:5]
    for i in some[:4]:
        pool.mark_labeled(i, Label.DEFECTIVE)
    pool.discard(some[4])
    pool.check_conservation()
    assert pool.labeled_count == 4
    assert len(pool.unlabeled_ids) == 25
    with pytest.raises(ContractError):
        pool.discard(some[0])  # already labeled
    with pytest.raises(ContractError):
        pool.mark_labeled(sorted(pool.test_ids)[0], Label.CORRECT)  # not in universe


def test_overlapping_splits_rejected():
    records = {r.id: r for r in _records(4)}
    with pytest.raises(ContractError):
        DataPool(
            perspective=Perspective.EXTERIOR_FRONT,
            records=records,
            train_ids=frozenset({"cfg00000", "cfg00001"}),
            validation_ids=frozenset({"cfg00001"}),
            test_ids=frozenset({"cfg00002"}),
        )
