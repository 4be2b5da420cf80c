"""Binary defect classifier with an evidential head.

Training always starts from fresh weights seeded by the config, monitors
validation F2 every epoch, stops after `patience` epochs without strict
improvement (compared at 1e-6 resolution), and keeps the best-validation
checkpoint. A fixed (labeled set, config) pair reproduces the identical
training history and final weights.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from alqa import evidential
from alqa.errors import ConfigurationError, ContractError, ShapeError
from alqa.metrics import MetricReport, confusion_counts, f2_from_counts
from alqa.nn import Adam, Sequential, build_net
from alqa.types import TARGET_SIZE, ImageRecord, Label

# Class order everywhere: column 0 = CORRECT, column 1 = DEFECTIVE.
CLASS_ORDER = (Label.CORRECT, Label.DEFECTIVE)
DEFECTIVE_COL = 1

IMPROVE_RESOLUTION = 1e-6
EVAL_BATCH = 256


@dataclass(frozen=True)
class ModelConfig:
    architecture: str = "small_cnn"
    input_size: int = TARGET_SIZE
    num_classes: int = 2
    learning_rate: float = 5e-4
    batch_size: int = 50
    max_epochs: int = 100
    patience: int = 20
    kl_anneal_epochs: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigurationError("num_classes must be >= 2")
        if not 0 < self.patience < self.max_epochs:
            raise ConfigurationError("need 0 < patience < max_epochs")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "ModelConfig":
        return ModelConfig(**d)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_f2: float


@dataclass
class TrainedModel:
    net: Sequential
    config: ModelConfig
    history: list[EpochStats]
    best_epoch: int

    def weights_hash(self) -> str:
        h = hashlib.sha256()
        for p in self.net.params():
            h.update(np.ascontiguousarray(p.value).tobytes())
        for key in sorted(self.net.state()):
            h.update(np.ascontiguousarray(self.net.state()[key]).tobytes())
        return h.hexdigest()


def records_to_batch(records: list[ImageRecord], input_size: int = TARGET_SIZE) -> np.ndarray:
    """Stack preprocessed records into an NCHW float32 batch."""
    if not records:
        raise ContractError("empty record batch")
    arrays = []
    for rec in records:
        px = rec.pixels
        if px is None or px.shape != (input_size, input_size, 3) or px.dtype.kind != "f":
            got = None if px is None else (px.shape, px.dtype)
            raise ShapeError(
                f"record {rec.id}: expected preprocessed ({input_size},{input_size},3) "
                f"float raster, got {got}"
            )
        arrays.append(px)
    return np.ascontiguousarray(np.stack(arrays).transpose(0, 3, 1, 2), dtype=np.float32)


def _labels_to_onehot(labels: list[Label], k: int) -> np.ndarray:
    y = np.zeros((len(labels), k), dtype=np.float64)
    for i, lab in enumerate(labels):
        y[i, CLASS_ORDER.index(lab)] = 1.0
    return y


def _forward_eval(net: Sequential, x: np.ndarray) -> np.ndarray:
    outs = [net.forward(x[i : i + EVAL_BATCH], training=False) for i in range(0, len(x), EVAL_BATCH)]
    return np.concatenate(outs, axis=0)


def _snapshot(net: Sequential) -> tuple[list[np.ndarray], dict[str, np.ndarray]]:
    return (
        [p.value.copy() for p in net.params()],
        {k: v.copy() for k, v in net.state().items()},
    )


def _restore(net: Sequential, snap) -> None:
    values, state = snap
    for p, v in zip(net.params(), values):
        p.value[...] = v
    live = net.state()
    for k, v in state.items():
        live[k][...] = v


def evaluate(model_or_net, records: list[ImageRecord]) -> MetricReport:
    """Confusion metrics of the model's predictions against ground truth."""
    net = model_or_net.net if isinstance(model_or_net, TrainedModel) else model_or_net
    truths = []
    for rec in records:
        if rec.ground_truth is None:
            raise ContractError(f"record {rec.id} has no ground truth to evaluate against")
        truths.append(rec.ground_truth)
    x = records_to_batch(records)
    logits = _forward_eval(net, x)
    preds = _labels_from_logits(logits)
    return f2_from_counts(*confusion_counts(truths, preds))


def _labels_from_logits(logits: np.ndarray) -> list[Label]:
    ev = evidential.evidence_from_logits(np.asarray(logits, dtype=np.float64))
    alpha = ev + 1.0
    p_def = alpha[:, DEFECTIVE_COL] / alpha.sum(axis=1)
    return [Label.DEFECTIVE if p >= 0.5 else Label.CORRECT for p in p_def]


def train(
    labeled: list[ImageRecord], validation: list[ImageRecord], config: ModelConfig
) -> TrainedModel:
    """Train from scratch on oracle-labeled records.

    Records carry their label in ground_truth; any record without one is a
    contract violation, as is an empty validation set.
    """
    if not validation:
        raise ConfigurationError("validation set must be non-empty")
    if not labeled:
        raise ContractError("labeled set must be non-empty")
    for rec in labeled:
        if rec.ground_truth is None:
            raise ContractError(f"labeled set contains unlabeled record {rec.id}")
    for rec in validation:
        if rec.ground_truth is None:
            raise ContractError(f"validation record {rec.id} has no label")

    labeled = sorted(labeled, key=lambda r: r.id)
    x = records_to_batch(labeled, config.input_size)
    y = _labels_to_onehot([r.ground_truth for r in labeled], config.num_classes)
    val_sorted = sorted(validation, key=lambda r: r.id)
    x_val = records_to_batch(val_sorted, config.input_size)
    val_truth = [r.ground_truth for r in val_sorted]

    rng = np.random.Generator(np.random.PCG64(config.seed))
    net = build_net(config.architecture, config.num_classes, rng)
    opt = Adam(net.params(), config.learning_rate)

    history: list[EpochStats] = []
    best_f2 = -np.inf
    best_snap = None
    best_epoch = -1
    stagnant = 0
    n = len(labeled)

    for epoch in range(1, config.max_epochs + 1):
        lam = evidential.anneal_coefficient(epoch - 1, config.kl_anneal_epochs)
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            logits = net.forward(x[idx], training=True)
            loss, dlogits = evidential.logits_loss_and_grad(logits, y[idx], lam)
            opt.zero_grad()
            net.backward(dlogits.astype(np.float32))
            opt.step()
            total += loss * len(idx)

        val_logits = _forward_eval(net, x_val)
        val_pred = _labels_from_logits(val_logits)
        try:
            val_f2 = f2_from_counts(*confusion_counts(val_truth, val_pred)).f2
        except Exception:
            val_f2 = 0.0
        history.append(EpochStats(epoch=epoch, train_loss=total / n, val_f2=val_f2))

        if val_f2 > best_f2 + IMPROVE_RESOLUTION:
            best_f2, best_snap, best_epoch = val_f2, _snapshot(net), epoch
            stagnant = 0
        else:
            stagnant += 1
            if stagnant >= config.patience:
                break

    _restore(net, best_snap)
    return TrainedModel(net=net, config=config, history=history, best_epoch=best_epoch)


def evidential_outputs(
    model: TrainedModel, batch: list[ImageRecord]
) -> list[evidential.EvidentialOutput]:
    """One EvidentialOutput per record from a single forward pass each."""
    x = records_to_batch(batch, model.config.input_size)
    logits = _forward_eval(model.net, x)
    ev = evidential.evidence_from_logits(np.asarray(logits, dtype=np.float64))
    return [evidential.from_evidence(ev[i]) for i in range(ev.shape[0])]


def predict(model: TrainedModel, images: list[ImageRecord]) -> list[tuple[Label, float]]:
    """(label, uncertainty) per image; exact 0.5 resolves to DEFECTIVE."""
    outs = evidential_outputs(model, images)
    results = []
    for o in outs:
        label = Label.DEFECTIVE if o.probabilities[DEFECTIVE_COL] >= 0.5 else Label.CORRECT
        results.append((label, o.uncertainty))
    return results


def save_checkpoint(model: TrainedModel, path: Path) -> None:
    """Single-file checkpoint embedding weights, config, and history."""
    arrays = {f"param_{i}": p.value for i, p in enumerate(model.net.params())}
    for key, buf in model.net.state().items():
        arrays[f"state::{key}"] = buf
    np.savez_compressed(
        path,
        config_json=json.dumps(model.config.to_dict()),
        history_json=json.dumps([asdict(h) for h in model.history]),
        best_epoch=model.best_epoch,
        **arrays,
    )


def load_checkpoint(path: Path) -> TrainedModel:
    with np.load(path, allow_pickle=False) as data:
        config = ModelConfig.from_dict(json.loads(str(data["config_json"])))
        history = [EpochStats(**h) for h in json.loads(str(data["history_json"]))]
        best_epoch = int(data["best_epoch"])
        net = build_net(config.architecture, config.num_classes,
                        np.random.Generator(np.random.PCG64(config.seed)))
        for i, p in enumerate(net.params()):
            p.value[...] = data[f"param_{i}"]
        live = net.state()
        for key in live:
            live[key][...] = data[f"state::{key}"]
    return TrainedModel(net=net, config=config, history=history, best_epoch=best_epoch)


def write_history_csv(model: TrainedModel, path: Path) -> None:
    with open(path, "w") as f:
        f.write("epoch,train_loss,val_f2\n")
        for h in model.history:
            f.write(f"{h.epoch},{h.train_loss:.6f},{h.val_f2:.6f}\n")


def derive_config(config: ModelConfig, seed: int) -> ModelConfig:
    """Config with a run-specific seed mixed in (per experiment repeat)."""
    mixed = int(np.random.SeedSequence([config.seed, seed]).generate_state(1)[0])
    return replace(config, seed=mixed)
