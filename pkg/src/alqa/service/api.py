"""HTTP+JSON API over the store, consumed by the labeling UI and the CLI."""

from __future__ import annotations

from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import FileResponse
from pydantic import BaseModel, Field

from alqa.errors import ConflictError, ContractError, LeakageError, NotFoundError
from alqa.service.store import Store


class RunBody(BaseModel):
    run_id: str
    perspective: str
    config: dict = Field(default_factory=dict)
    train_ids: list[str]
    holdout_ids: list[str] = Field(default_factory=list)
    dataset_hash: str | None = None


class EnqueueBody(BaseModel):
    image_ids: list[str]


class CurvePointBody(BaseModel):
    point: dict


class LabelBody(BaseModel):
    label: str
    annotator: str
    duration_s: float


class TicketsBody(BaseModel):
    tickets: list[dict]


class ResolutionBody(BaseModel):
    resolution: str
    resolver: str


def create_app(store: Store, data_dir: Path | None = None, token: str | None = None) -> FastAPI:
    app = FastAPI(title="alqa qa service")

    def auth(request: Request):
        if token and request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="bad or missing token")

    dep = [Depends(auth)]

    @app.exception_handler(NotFoundError)
    async def _nf(request, exc):
        raise HTTPException(status_code=404, detail=str(exc))

    @app.exception_handler(ConflictError)
    async def _cf(request, exc):
        raise HTTPException(status_code=409, detail=str(exc))

    @app.exception_handler(LeakageError)
    async def _lk(request, exc):
        raise HTTPException(status_code=422, detail=str(exc))

    @app.exception_handler(ContractError)
    async def _ct(request, exc):
        raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/health")
    def health():
        return {"status": "ok", "events": store.seq}

    @app.post("/runs", status_code=201, dependencies=dep)
    def create_run(body: RunBody):
        run = store.create_run(
            run_id=body.run_id,
            perspective=body.perspective,
            config=body.config,
            train_ids=body.train_ids,
            holdout_ids=body.holdout_ids,
            dataset_hash=body.dataset_hash,
        )
        return run.to_dict()

    @app.get("/runs/{run_id}", dependencies=dep)
    def get_run(run_id: str):
        run = store.get_run(run_id)
        tasks = store.list_tasks(run_id=run_id)
        doc = run.to_dict()
        doc["progress"] = {
            "tasks": len(tasks),
            "pending": sum(t.state == "pending" for t in tasks),
            "labeled": sum(t.state == "labeled" for t in tasks),
            "ambiguous": sum(t.state == "ambiguous" for t in tasks),
            "rounds_recorded": len(run.curve_points),
        }
        return doc

    @app.get("/runs/{run_id}/curve", dependencies=dep)
    def get_curve(run_id: str):
        return {"run_id": run_id, "points": store.get_run(run_id).curve_points}

    @app.post("/runs/{run_id}/curve", status_code=201, dependencies=dep)
    def post_curve(run_id: str, body: CurvePointBody):
        store.add_curve_point(run_id, body.point)
        return {"ok": True}

    @app.post("/runs/{run_id}/tasks", status_code=201, dependencies=dep)
    def enqueue(run_id: str, body: EnqueueBody):
        tasks = store.enqueue_batch(run_id, body.image_ids)
        return {"tasks": [t.to_dict() for t in tasks]}

    @app.get("/runs/{run_id}/tasks", dependencies=dep)
    def run_tasks(run_id: str, ids: str | None = None, state: str | None = None):
        store.get_run(run_id)
        image_ids = ids.split(",") if ids else None
        tasks = store.list_tasks(state=state, run_id=run_id, image_ids=image_ids)
        return {"tasks": [t.to_dict() for t in tasks]}

    @app.get("/tasks", dependencies=dep)
    def tasks(state: str = Query(default="pending"), run_id: str | None = None):
        which = None if state == "all" else state
        return {"tasks": [t.to_dict() for t in store.list_tasks(state=which, run_id=run_id)]}

    @app.post("/tasks/{task_id}/label", dependencies=dep)
    def label_task(task_id: str, body: LabelBody):
        task = store.submit_label(task_id, body.label, body.annotator, body.duration_s)
        return task.to_dict()

    @app.get("/defects", dependencies=dep)
    def defects(resolution: str = Query(default="open")):
        return {"tickets": [t.to_dict() for t in store.list_tickets(resolution)]}

    @app.post("/defects", status_code=201, dependencies=dep)
    def create_defects(body: TicketsBody):
        tickets = store.create_tickets(body.tickets)
        return {"tickets": [t.to_dict() for t in tickets]}

    @app.post("/defects/{ticket_id}/resolution", dependencies=dep)
    def resolve(ticket_id: str, body: ResolutionBody):
        return store.resolve_ticket(ticket_id, body.resolution, body.resolver).to_dict()

    if data_dir is not None:
        images_root = Path(data_dir) / "images"

        @app.get("/images/{perspective}/{image_id}.png")
        def image(perspective: str, image_id: str):
            path = images_root / perspective / f"{image_id}.png"
            if not path.exists():
                raise HTTPException(status_code=404, detail="image not found")
            return FileResponse(path, media_type="image/png")

    return app
