"""Batch acquisition: uncertainty ranking versus the uniform-random baseline."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from alqa.classifier import TrainedModel, evidential_outputs
from alqa.errors import ConfigurationError, ContractError, EmptyPoolError
from alqa.types import ImageRecord


class AcquisitionKind(Enum):
    UNCERTAINTY = "uncertainty"  # highest Dirichlet uncertainty first
    RANDOM = "random"  # uniform without replacement


class ScoreKind(Enum):
    DIRICHLET = "dirichlet"  # u = K / S, the default
    ENTROPY = "entropy"  # entropy of the expected probabilities


@dataclass(frozen=True)
class AcquisitionStrategy:
    kind: AcquisitionKind
    batch_size: int = 100
    seed: int = 0
    score: ScoreKind = ScoreKind.DIRICHLET

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "score": self.score.value,
        }

    @staticmethod
    def from_dict(d: dict) -> "AcquisitionStrategy":
        return AcquisitionStrategy(
            kind=AcquisitionKind(d["kind"]),
            batch_size=int(d.get("batch_size", 100)),
            seed=int(d.get("seed", 0)),
            score=ScoreKind(d.get("score", "dirichlet")),
        )


def score_pool(
    model: TrainedModel,
    unlabeled: list[ImageRecord],
    score: ScoreKind = ScoreKind.DIRICHLET,
) -> dict[str, float]:
    """Uncertainty per pool instance, one forward pass each."""
    if not unlabeled:
        raise EmptyPoolError("cannot score an empty pool")
    outs = evidential_outputs(model, unlabeled)
    scores: dict[str, float] = {}
    for rec, out in zip(unlabeled, outs):
        if score is ScoreKind.DIRICHLET:
            scores[rec.id] = out.uncertainty
        else:
            p = np.clip(out.probabilities, 1e-12, 1.0)
            scores[rec.id] = float(-(p * np.log(p)).sum())
    return scores


def select_batch(scores_or_pool, strategy: AcquisitionStrategy) -> list[str]:
    """Pick up to batch_size ids; drains the whole pool when it is smaller.

    Uncertainty ranking is by descending score with ascending-id tie break;
    the random baseline samples without replacement from strategy.seed.
    Input is never mutated.
    """
    if isinstance(scores_or_pool, dict):
        ids = sorted(scores_or_pool)
        scores = scores_or_pool
    else:
        ids = sorted(scores_or_pool)
        scores = None
    if not ids:
        raise EmptyPoolError("cannot select from an empty pool")

    b = min(strategy.batch_size, len(ids))
    if strategy.kind is AcquisitionKind.UNCERTAINTY:
        if scores is None:
            raise ContractError("uncertainty selection needs a score map")
        return sorted(ids, key=lambda i: (-scores[i], i))[:b]
    rng = np.random.Generator(np.random.PCG64(strategy.seed))
    picked = rng.choice(len(ids), size=b, replace=False)
    return [ids[int(i)] for i in picked]
