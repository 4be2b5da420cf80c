"""Event-sourced persistence for runs, label tasks, and defect tickets.

Every mutation appends one JSON line to events.jsonl (flushed and fsynced)
and is then applied to the in-memory state, so replaying the log rebuilds
the exact state and a crash loses at most the in-flight event. A snapshot
is written periodically purely as a load-time optimization.

A single Store owns one directory; all writers go through its lock.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from alqa.errors import ConflictError, ContractError, LeakageError, NotFoundError
from alqa.types import Label

EVENTS_NAME = "events.jsonl"
SNAPSHOT_NAME = "snapshot.json"

OPEN = "open"
CONFIRMED = "confirmed"
FALSE_ALARM = "false_alarm"
PENDING = "pending"
TERMINAL_TASK_STATES = ("labeled", "ambiguous")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _task_id(run_id: str, image_id: str) -> str:
    return "t" + hashlib.sha1(f"{run_id}:{image_id}".encode()).hexdigest()[:12]


def _ticket_id(run_id: str, image_id: str) -> str:
    return "d" + hashlib.sha1(f"{run_id}:{image_id}".encode()).hexdigest()[:12]


@dataclass
class LabelTask:
    task_id: str
    run_id: str
    image_id: str
    perspective: str
    state: str = PENDING  # pending -> labeled | ambiguous, then immutable
    label: str | None = None
    annotator: str | None = None
    duration_s: float | None = None
    created_at: str = ""
    labeled_at: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DefectTicket:
    ticket_id: str
    run_id: str
    image_id: str
    perspective: str
    uncertainty: float
    predicted_label: str = "defective"
    resolution: str = OPEN  # open -> confirmed | false_alarm, once
    resolver: str | None = None
    created_at: str = ""
    resolved_at: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class RunEntry:
    run_id: str
    perspective: str
    config: dict
    dataset_hash: str | None
    train_ids: set[str]
    holdout_ids: set[str]  # validation + test; must never be enqueued
    created_at: str = ""
    curve_points: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "perspective": self.perspective,
            "config": self.config,
            "dataset_hash": self.dataset_hash,
            "train_ids": sorted(self.train_ids),
            "holdout_ids": sorted(self.holdout_ids),
            "created_at": self.created_at,
            "curve_points": self.curve_points,
        }


class Store:
    def __init__(self, root: Path, snapshot_every: int = 100):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.snapshot_every = snapshot_every
        self._lock = threading.RLock()
        self.runs: dict[str, RunEntry] = {}
        self.tasks: dict[str, LabelTask] = {}
        self.tickets: dict[str, DefectTicket] = {}
        self.seq = 0
        self._events_file = None
        self._load()
        self._events_file = open(self.root / EVENTS_NAME, "a")

    def close(self) -> None:
        if self._events_file:
            self._events_file.close()
            self._events_file = None

    # -- event plumbing ---------------------------------------------------

    def _load(self) -> None:
        snap_path = self.root / SNAPSHOT_NAME
        from_seq = 0
        if snap_path.exists():
            snap = json.loads(snap_path.read_text())
            from_seq = snap["seq"]
            self._restore_snapshot(snap)
        events_path = self.root / EVENTS_NAME
        if events_path.exists():
            with open(events_path) as f:
                for line in f:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError:
                        break  # torn tail from a crash; drop it
                    if event["seq"] > from_seq:
                        self._apply(event)
                        self.seq = event["seq"]
                    else:
                        self.seq = max(self.seq, from_seq)

    def _restore_snapshot(self, snap: dict) -> None:
        self.seq = snap["seq"]
        self.runs = {
            r["run_id"]: RunEntry(
                run_id=r["run_id"],
                perspective=r["perspective"],
                config=r["config"],
                dataset_hash=r["dataset_hash"],
                train_ids=set(r["train_ids"]),
                holdout_ids=set(r["holdout_ids"]),
                created_at=r["created_at"],
                curve_points=r["curve_points"],
            )
            for r in snap["runs"]
        }
        self.tasks = {t["task_id"]: LabelTask(**t) for t in snap["tasks"]}
        self.tickets = {t["ticket_id"]: DefectTicket(**t) for t in snap["tickets"]}

    def _write_snapshot(self) -> None:
        snap = {
            "seq": self.seq,
            "runs": [r.to_dict() for r in self.runs.values()],
            "tasks": [t.to_dict() for t in self.tasks.values()],
            "tickets": [t.to_dict() for t in self.tickets.values()],
        }
        tmp = self.root / (SNAPSHOT_NAME + ".tmp")
        tmp.write_text(json.dumps(snap))
        tmp.replace(self.root / SNAPSHOT_NAME)

    def _append(self, event: dict) -> None:
        self.seq += 1
        event = {"seq": self.seq, "ts": _now(), **event}
        self._events_file.write(json.dumps(event, sort_keys=True) + "\n")
        self._events_file.flush()
        os.fsync(self._events_file.fileno())
        self._apply(event)
        if self.seq % self.snapshot_every == 0:
            self._write_snapshot()

    def _apply(self, event: dict) -> None:
        kind = event["type"]
        if kind == "run_created":
            self.runs[event["run_id"]] = RunEntry(
                run_id=event["run_id"],
                perspective=event["perspective"],
                config=event["config"],
                dataset_hash=event.get("dataset_hash"),
                train_ids=set(event["train_ids"]),
                holdout_ids=set(event.get("holdout_ids", [])),
                created_at=event["ts"],
            )
        elif kind == "curve_point":
            self.runs[event["run_id"]].curve_points.append(event["point"])
        elif kind == "tasks_enqueued":
            run = self.runs[event["run_id"]]
            for image_id in event["image_ids"]:
                tid = _task_id(event["run_id"], image_id)
                if tid not in self.tasks:
                    self.tasks[tid] = LabelTask(
                        task_id=tid,
                        run_id=event["run_id"],
                        image_id=image_id,
                        perspective=run.perspective,
                        created_at=event["ts"],
                    )
        elif kind == "task_labeled":
            task = self.tasks[event["task_id"]]
            task.state = "ambiguous" if event["label"] == "ambiguous" else "labeled"
            task.label = event["label"]
            task.annotator = event["annotator"]
            task.duration_s = event["duration_s"]
            task.labeled_at = event["ts"]
        elif kind == "tickets_created":
            for t in event["tickets"]:
                if t["ticket_id"] not in self.tickets:
                    self.tickets[t["ticket_id"]] = DefectTicket(created_at=event["ts"], **t)
        elif kind == "ticket_resolved":
            ticket = self.tickets[event["ticket_id"]]
            ticket.resolution = event["resolution"]
            ticket.resolver = event["resolver"]
            ticket.resolved_at = event["ts"]
        else:
            raise ContractError(f"unknown event type {kind!r}")

    # -- run registry -----------------------------------------------------

    def create_run(
        self,
        run_id: str,
        perspective: str,
        config: dict,
        train_ids: list[str],
        holdout_ids: list[str] | None = None,
        dataset_hash: str | None = None,
    ) -> RunEntry:
        with self._lock:
            if run_id in self.runs:
                raise ConflictError(f"run {run_id} already exists")
            self._append(
                {
                    "type": "run_created",
                    "run_id": run_id,
                    "perspective": perspective,
                    "config": config,
                    "dataset_hash": dataset_hash,
                    "train_ids": sorted(train_ids),
                    "holdout_ids": sorted(holdout_ids or []),
                }
            )
            return self.runs[run_id]

    def get_run(self, run_id: str) -> RunEntry:
        run = self.runs.get(run_id)
        if run is None:
            raise NotFoundError(f"run {run_id} not found")
        return run

    def add_curve_point(self, run_id: str, point: dict) -> None:
        with self._lock:
            self.get_run(run_id)
            self._append({"type": "curve_point", "run_id": run_id, "point": point})

    # -- labeling queue ----------------------------------------------------

    def enqueue_batch(self, run_id: str, image_ids: list[str]) -> list[LabelTask]:
        """One pending task per id; re-enqueueing is a no-op for known ids."""
        with self._lock:
            run = self.get_run(run_id)
            unknown = [i for i in image_ids if i not in run.train_ids]
            if unknown:
                leaked = [i for i in unknown if i in run.holdout_ids]
                if leaked:
                    raise LeakageError(
                        f"ids from the validation/test holdout reached the queue: {leaked[:5]}"
                    )
                raise NotFoundError(f"ids not in run {run_id}'s pool: {unknown[:5]}")
            new_ids = [
                i for i in image_ids if _task_id(run_id, i) not in self.tasks
            ]
            if new_ids:
                self._append({"type": "tasks_enqueued", "run_id": run_id, "image_ids": new_ids})
            return [self.tasks[_task_id(run_id, i)] for i in image_ids]

    def get_task(self, task_id: str) -> LabelTask:
        task = self.tasks.get(task_id)
        if task is None:
            raise NotFoundError(f"task {task_id} not found")
        return task

    def list_tasks(
        self,
        state: str | None = None,
        run_id: str | None = None,
        image_ids: list[str] | None = None,
    ) -> list[LabelTask]:
        out = []
        wanted = set(image_ids) if image_ids is not None else None
        for task in self.tasks.values():
            if state and task.state != state:
                continue
            if run_id and task.run_id != run_id:
                continue
            if wanted is not None and task.image_id not in wanted:
                continue
            out.append(task)
        out.sort(key=lambda t: (t.created_at, t.task_id))
        return out

    def submit_label(
        self, task_id: str, label: str, annotator: str, duration_s: float
    ) -> LabelTask:
        with self._lock:
            task = self.get_task(task_id)
            if task.state != PENDING:
                raise ConflictError(f"task {task_id} is already {task.state}")
            if label not in ("correct", "defective", "ambiguous"):
                raise ContractError(f"invalid label {label!r}")
            if duration_s < 0:
                raise ContractError("duration_s must be >= 0")
            self._append(
                {
                    "type": "task_labeled",
                    "task_id": task_id,
                    "label": label,
                    "annotator": annotator,
                    "duration_s": float(duration_s),
                }
            )
            return task

    # -- defect tickets ----------------------------------------------------

    def create_tickets(self, items: list[dict]) -> list[DefectTicket]:
        """items: {image_id, perspective, uncertainty, run_id}; dedupes per image."""
        with self._lock:
            payload = []
            for item in items:
                tid = _ticket_id(item.get("run_id", ""), item["image_id"])
                if tid in self.tickets:
                    continue
                payload.append(
                    {
                        "ticket_id": tid,
                        "run_id": item.get("run_id", ""),
                        "image_id": item["image_id"],
                        "perspective": item["perspective"],
                        "uncertainty": float(item["uncertainty"]),
                    }
                )
            if payload:
                self._append({"type": "tickets_created", "tickets": payload})
            return [
                self.tickets[_ticket_id(item.get("run_id", ""), item["image_id"])]
                for item in items
            ]

    def get_ticket(self, ticket_id: str) -> DefectTicket:
        ticket = self.tickets.get(ticket_id)
        if ticket is None:
            raise NotFoundError(f"ticket {ticket_id} not found")
        return ticket

    def list_tickets(self, resolution: str | None = OPEN) -> list[DefectTicket]:
        """Tickets sorted by descending uncertainty (triage order)."""
        out = [
            t
            for t in self.tickets.values()
            if resolution in (None, "all") or t.resolution == resolution
        ]
        out.sort(key=lambda t: (-t.uncertainty, t.ticket_id))
        return out

    def resolve_ticket(self, ticket_id: str, resolution: str, resolver: str) -> DefectTicket:
        with self._lock:
            ticket = self.get_ticket(ticket_id)
            if ticket.resolution != OPEN:
                raise ConflictError(f"ticket {ticket_id} is already {ticket.resolution}")
            if resolution not in (CONFIRMED, FALSE_ALARM):
                raise ContractError(f"invalid resolution {resolution!r}")
            self._append(
                {
                    "type": "ticket_resolved",
                    "ticket_id": ticket_id,
                    "resolution": resolution,
                    "resolver": resolver,
                }
            )
            return ticket


def forward_defects(store: Store, model, records, run_id: str = "") -> list[DefectTicket]:
    """Open one ticket per predicted-defective record, carrying its uncertainty."""
    from alqa.classifier import predict

    predictions = predict(model, records)
    items = [
        {
            "image_id": rec.id,
            "perspective": rec.perspective.value,
            "uncertainty": u,
            "run_id": run_id,
        }
        for rec, (label, u) in zip(records, predictions)
        if label is Label.DEFECTIVE
    ]
    return store.create_tickets(items) if items else []
