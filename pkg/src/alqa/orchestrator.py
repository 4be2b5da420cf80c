"""The acquisition-labeling-retraining protocol plus curve analysis.

One experiment repeat per seed: draw an initial labeled set, then for each
round train from scratch, evaluate on the held-out test split, and (until
the round budget is spent) acquire a batch, have the oracle label it, and
fold the answers into the pool, discarding ambiguous ones. Checkpoints
persist incrementally so interrupted runs resume at the last completed
round.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from alqa.acquisition import AcquisitionKind, AcquisitionStrategy, score_pool, select_batch
from alqa.classifier import ModelConfig, derive_config, evaluate, train
from alqa.errors import ConfigurationError, ContractError, LeakageError
from alqa.types import AnnotationLabel, DataPool, ImageRecord, Label, Perspective

# Stream tags keep the per-seed RNG draws for the initial pool and each
# round's random acquisition independent and resumable.
_TAG_INITIAL = 101
_TAG_ACQUIRE = 202


@dataclass
class ExperimentConfig:
    perspective: Perspective
    strategy: AcquisitionStrategy
    model: ModelConfig
    rounds: int
    initial_size: int = 100
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    oracle: dict = field(default_factory=lambda: {"kind": "simulated"})
    # dataset split parameters applied before the experiment starts
    train_count: int = 2000
    val_fraction: float = 0.10
    split_seed: int = 0

    def __post_init__(self):
        if self.initial_size < 1:
            raise ConfigurationError("initial_size must be >= 1")
        if self.rounds < 0:
            raise ConfigurationError("rounds must be >= 0")
        if not self.seeds:
            raise ConfigurationError("need at least one seed")

    def to_dict(self) -> dict:
        return {
            "perspective": self.perspective.value,
            "strategy": self.strategy.to_dict(),
            "model": self.model.to_dict(),
            "rounds": self.rounds,
            "initial_size": self.initial_size,
            "seeds": list(self.seeds),
            "oracle": dict(self.oracle),
            "train_count": self.train_count,
            "val_fraction": self.val_fraction,
            "split_seed": self.split_seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        return ExperimentConfig(
            perspective=Perspective(d["perspective"]),
            strategy=AcquisitionStrategy.from_dict(d["strategy"]),
            model=ModelConfig.from_dict(d["model"]),
            rounds=int(d["rounds"]),
            initial_size=int(d.get("initial_size", 100)),
            seeds=[int(s) for s in d.get("seeds", [0, 1, 2, 3, 4])],
            oracle=dict(d.get("oracle", {"kind": "simulated"})),
            train_count=int(d.get("train_count", 2000)),
            val_fraction=float(d.get("val_fraction", 0.10)),
            split_seed=int(d.get("split_seed", 0)),
        )


@dataclass(frozen=True)
class RoundResult:
    round: int
    labeled_count: int
    f2: float
    precision: float | None
    recall: float | None


@dataclass
class LearningCurve:
    strategy: str
    seed: int
    checkpoints: list[RoundResult]
    drained: bool = False


class Oracle:
    """Blocking label source: returns only when every id is resolved."""

    def label(self, ids: list[str]) -> dict[str, AnnotationLabel]:
        raise NotImplementedError


class SimulatedOracle(Oracle):
    """Answers from ground truth; never ambiguous."""

    def __init__(self, records: dict[str, ImageRecord]):
        self._records = records

    def label(self, ids: list[str]) -> dict[str, AnnotationLabel]:
        out = {}
        for i in ids:
            gt = self._records[i].ground_truth
            if gt is None:
                raise ContractError(f"simulated oracle has no ground truth for {i}")
            out[i] = AnnotationLabel(gt.value)
        return out


def _stream_seed(seed: int, tag: int, extra: int = 0) -> int:
    return int(np.random.SeedSequence([seed, tag, extra]).generate_state(1)[0])


def _curve_path(run_dir: Path, seed: int) -> Path:
    return Path(run_dir) / f"curve_seed{seed}.csv"


def _state_path(run_dir: Path, seed: int) -> Path:
    return Path(run_dir) / f"state_seed{seed}.json"


def _fmt(v) -> str:
    return "" if v is None else f"{v:.6f}"


def append_curve_row(path: Path, strategy: str, seed: int, r: RoundResult) -> None:
    new = not Path(path).exists()
    with open(path, "a") as f:
        if new:
            f.write("strategy,seed,round,labeled_count,f2,precision,recall\n")
        f.write(
            f"{strategy},{seed},{r.round},{r.labeled_count},"
            f"{r.f2:.6f},{_fmt(r.precision)},{_fmt(r.recall)}\n"
        )


def read_curve_rows(path: Path) -> list[dict]:
    rows = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            parts = line.rstrip("\n").split(",")
            if len(parts) != len(header):
                continue  # torn tail write; the round will be redone
            row = dict(zip(header, parts))
            rows.append(
                {
                    "strategy": row["strategy"],
                    "seed": int(row["seed"]),
                    "round": int(row["round"]),
                    "labeled_count": int(row["labeled_count"]),
                    "f2": float(row["f2"]),
                    "precision": float(row["precision"]) if row["precision"] else None,
                    "recall": float(row["recall"]) if row["recall"] else None,
                }
            )
    return rows


def _save_state(path: Path, pool: DataPool, completed_rounds: int, drained: bool) -> None:
    doc = {
        "labeled": {i: lab.value for i, lab in sorted(pool.labeled.items())},
        "discarded": sorted(pool.discarded),
        "completed_rounds": completed_rounds,
        "drained": drained,
    }
    tmp = Path(str(path) + ".tmp")
    tmp.write_text(json.dumps(doc))
    tmp.replace(path)


def _apply_oracle_answers(pool: DataPool, answers: dict[str, AnnotationLabel]) -> None:
    for image_id, ann in sorted(answers.items()):
        if ann is AnnotationLabel.AMBIGUOUS:
            pool.discard(image_id)
        else:
            pool.mark_labeled(image_id, ann.to_label())


def _labeled_records(pool: DataPool) -> list[ImageRecord]:
    return [replace(pool.records[i], ground_truth=lab) for i, lab in sorted(pool.labeled.items())]


def _acquire_ids(
    model, pool: DataPool, strategy: AcquisitionStrategy, seed: int, round_idx: int
) -> list[str]:
    unlabeled_ids = pool.unlabeled_ids
    if strategy.kind is AcquisitionKind.RANDOM:
        per_round = replace(strategy, seed=_stream_seed(seed, _TAG_ACQUIRE, round_idx))
        picked = select_batch(sorted(unlabeled_ids), per_round)
    else:
        scores = score_pool(model, pool.record_list(unlabeled_ids), strategy.score)
        picked = select_batch(scores, strategy)
    held_out = (set(picked) & pool.validation_ids) | (set(picked) & pool.test_ids)
    if held_out or not set(picked) <= unlabeled_ids:
        raise LeakageError(f"acquisition selected ids outside the unlabeled pool: {held_out}")
    return picked


def run_seed_experiment(
    config: ExperimentConfig,
    pool: DataPool,
    seed: int,
    oracle: Oracle,
    run_dir: Path | None = None,
    on_checkpoint=None,
) -> LearningCurve:
    """One experiment repeat; resumes from run_dir state when present."""
    pool = DataPool(
        perspective=pool.perspective,
        records=pool.records,
        train_ids=pool.train_ids,
        validation_ids=pool.validation_ids,
        test_ids=pool.test_ids,
        labeled=dict(pool.labeled),
        discarded=set(pool.discarded),
    )
    strategy_name = config.strategy.kind.value
    checkpoints: list[RoundResult] = []
    completed = 0
    drained = False

    if run_dir is not None and _state_path(run_dir, seed).exists():
        state = json.loads(_state_path(run_dir, seed).read_text())
        for i, lab in state["labeled"].items():
            pool.mark_labeled(i, Label(lab))
        for i in state["discarded"]:
            pool.discard(i)
        completed = int(state["completed_rounds"])
        drained = bool(state.get("drained", False))
        rows = [
            r for r in read_curve_rows(_curve_path(run_dir, seed)) if r["round"] < completed
        ]
        checkpoints = [
            RoundResult(r["round"], r["labeled_count"], r["f2"], r["precision"], r["recall"])
            for r in sorted(rows, key=lambda r: r["round"])
        ]
        completed = len(checkpoints)
    else:
        rng = np.random.Generator(np.random.PCG64(_stream_seed(seed, _TAG_INITIAL)))
        universe = sorted(pool.unlabeled_ids)
        if len(universe) < config.initial_size:
            raise ConfigurationError(
                f"initial_size {config.initial_size} exceeds pool of {len(universe)}"
            )
        initial = [universe[int(i)] for i in rng.choice(len(universe), config.initial_size, replace=False)]
        _apply_oracle_answers(pool, oracle.label(initial))
        if run_dir is not None:
            _save_state(_state_path(run_dir, seed), pool, 0, False)

    validation = pool.record_list(pool.validation_ids)
    test = pool.record_list(pool.test_ids)
    model_config = derive_config(config.model, seed)

    for round_idx in range(completed, config.rounds + 1):
        model = train(_labeled_records(pool), validation, model_config)
        report = evaluate(model, test)
        result = RoundResult(
            round=round_idx,
            labeled_count=pool.labeled_count,
            f2=report.f2,
            precision=report.precision,
            recall=report.recall,
        )
        checkpoints.append(result)
        pool.check_conservation()
        if on_checkpoint is not None:
            on_checkpoint(seed, result)

        if round_idx < config.rounds:
            if not pool.unlabeled_ids:
                drained = True
            else:
                picked = _acquire_ids(model, pool, config.strategy, seed, round_idx)
                _apply_oracle_answers(pool, oracle.label(picked))

        if run_dir is not None:
            append_curve_row(_curve_path(run_dir, seed), strategy_name, seed, result)
            _save_state(_state_path(run_dir, seed), pool, round_idx + 1, drained)
        if drained:
            break

    return LearningCurve(strategy=strategy_name, seed=seed, checkpoints=checkpoints, drained=drained)


def make_oracle(binding: dict, pool: DataPool) -> Oracle:
    kind = binding.get("kind", "simulated")
    if kind == "simulated":
        return SimulatedOracle(pool.records)
    if kind == "http":
        from alqa.service.client import HumanOracle

        return HumanOracle(
            base_url=binding["base_url"],
            run_id=binding["run_id"],
            poll_interval_s=float(binding.get("poll_interval_s", 2.0)),
            timeout_s=binding.get("timeout_s"),
        )
    raise ConfigurationError(f"unknown oracle kind {kind!r}")


def run_experiment(
    config: ExperimentConfig,
    pool: DataPool,
    run_dir: Path | None = None,
    oracle: Oracle | None = None,
    on_checkpoint=None,
) -> list[LearningCurve]:
    """All seed repeats, sequentially; one LearningCurve per seed."""
    if run_dir is not None:
        Path(run_dir).mkdir(parents=True, exist_ok=True)
    oracle = oracle or make_oracle(config.oracle, pool)
    return [
        run_seed_experiment(config, pool, s, oracle, run_dir, on_checkpoint)
        for s in config.seeds
    ]


@dataclass(frozen=True)
class Touchpoint:
    labeled_count: int
    f2: float
    reached: bool


def touchpoint(mean_curve: list[tuple[int, float]], target_f2: float) -> Touchpoint:
    """Smallest labeled count whose F2 meets the target."""
    if not mean_curve:
        raise ContractError("empty curve")
    for count, f2 in sorted(mean_curve):
        if f2 >= target_f2:
            return Touchpoint(labeled_count=count, f2=f2, reached=True)
    count, f2 = sorted(mean_curve)[-1]
    return Touchpoint(labeled_count=count, f2=f2, reached=False)


@dataclass(frozen=True)
class BaselineRounds:
    rounds: int
    reached: bool


def shared_round_grid(curves: list[LearningCurve]) -> list[int]:
    if not curves:
        raise ContractError("no curves given")
    grids = [tuple(c.round for c in curve.checkpoints) for curve in curves]
    if len(set(grids)) != 1:
        raise ContractError("curves do not share a checkpoint grid")
    return list(grids[0])


def seed_mean_curve(curves: list[LearningCurve]) -> list[tuple[int, int, float, float]]:
    """(round, labeled_count, mean F2, std F2) across seeds per round."""
    rounds = shared_round_grid(curves)
    out = []
    for i, r in enumerate(rounds):
        f2s = np.array([c.checkpoints[i].f2 for c in curves])
        counts = [c.checkpoints[i].labeled_count for c in curves]
        out.append((r, int(round(float(np.mean(counts)))), float(f2s.mean()), float(f2s.std())))
    return out


def determine_baseline_rounds(
    random_curves: list[LearningCurve], full_data_f2: float, epsilon: float
) -> BaselineRounds:
    """Smallest round whose seed-mean F2 is within epsilon of the bound."""
    if not 0.0 <= full_data_f2 <= 1.0:
        raise ContractError(f"full_data_f2 must be in [0,1], got {full_data_f2}")
    mean = seed_mean_curve(random_curves)
    for r, _, f2, _ in mean:
        if f2 >= full_data_f2 - epsilon:
            return BaselineRounds(rounds=r, reached=True)
    return BaselineRounds(rounds=mean[-1][0], reached=False)
