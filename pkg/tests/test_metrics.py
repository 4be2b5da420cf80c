import numpy as np
import pytest

from alqa.errors import ContractError, UndefinedMetricError
from alqa.metrics import confusion_counts, evaluate_labels, f2_from_counts, fbeta
from alqa.types import Label


def test_perfect_classifier():
    r = f2_from_counts(tp=10, fp=0, fn=0, tn=10)
    assert r.precision == 1.0 and r.recall == 1.0
    assert abs(r.f2 - 1.0) < 1e-9


def test_hand_values():
    # P=0.5, R=1.0 -> 5*0.5/(4*0.5+1) = 2.5/3
    r = f2_from_counts(tp=10, fp=10, fn=0)
    assert abs(r.f2 - 2.5 / 3.0) < 1e-9
    # P=1.0, R=0.5 -> 2.5/4.5
    r = f2_from_counts(tp=10, fp=0, fn=10)
    assert abs(r.f2 - 2.5 / 4.5) < 1e-9


def test_recall_dominates_precision():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        a, b = sorted(rng.uniform(0.01, 1.0, size=2))
        if b - a < 1e-12:
            continue
        # recall=b beats recall=a for the same swapped precision
        assert fbeta(a, b, 2.0) > fbeta(b, a, 2.0)


def test_f2_equals_generic_fbeta_at_two():
    rng = np.random.default_rng(7)
    for _ in range(500):
        tp = int(rng.integers(1, 50))
        fp = int(rng.integers(0, 50))
        fn = int(rng.integers(0, 50))
        r = f2_from_counts(tp, fp, fn)
        assert abs(r.f2 - fbeta(r.precision, r.recall, 2.0)) < 1e-12


def test_undefined_and_zero_conventions():
    with pytest.raises(UndefinedMetricError):
        f2_from_counts(0, 0, 0)
    r = f2_from_counts(0, 3, 0)
    assert r.f2 == 0.0 and r.recall is None and r.precision == 0.0
    r = f2_from_counts(0, 0, 3)
    assert r.f2 == 0.0 and r.precision is None and r.recall == 0.0
    with pytest.raises(ContractError):
        f2_from_counts(-1, 0, 0)


def test_confusion_counting():
    truth = [Label.DEFECTIVE, Label.DEFECTIVE, Label.CORRECT, Label.CORRECT]
    pred = [Label.DEFECTIVE, Label.CORRECT, Label.DEFECTIVE, Label.CORRECT]
    assert confusion_counts(truth, pred) == (1, 1, 1, 1)
    r = evaluate_labels(truth, pred)
    assert r.precision == 0.5 and r.recall == 0.5
