"""HTTP client pieces: a thin service wrapper and the human oracle."""

from __future__ import annotations

import time

import requests

from alqa.errors import ConflictError, ContractError, NotFoundError, OracleTimeoutError
from alqa.types import AnnotationLabel


class ServiceClient:
    def __init__(self, base_url: str, token: str | None = None, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.session = requests.Session()
        if token:
            self.session.headers["Authorization"] = f"Bearer {token}"

    def _check(self, resp: requests.Response) -> dict:
        if resp.status_code == 404:
            raise NotFoundError(resp.text)
        if resp.status_code == 409:
            raise ConflictError(resp.text)
        if resp.status_code >= 400:
            raise ContractError(f"{resp.status_code}: {resp.text}")
        return resp.json()

    def _get(self, path: str, **params) -> dict:
        return self._check(self.session.get(self.base_url + path, params=params or None,
                                            timeout=self.timeout_s))

    def _post(self, path: str, body: dict) -> dict:
        return self._check(self.session.post(self.base_url + path, json=body,
                                             timeout=self.timeout_s))

    def create_run(self, run_id, perspective, config, train_ids, holdout_ids, dataset_hash=None):
        return self._post(
            "/runs",
            {
                "run_id": run_id,
                "perspective": perspective,
                "config": config,
                "train_ids": list(train_ids),
                "holdout_ids": list(holdout_ids),
                "dataset_hash": dataset_hash,
            },
        )

    def get_run(self, run_id):
        return self._get(f"/runs/{run_id}")

    def enqueue(self, run_id, image_ids):
        return self._post(f"/runs/{run_id}/tasks", {"image_ids": list(image_ids)})

    def tasks_for(self, run_id, image_ids):
        return self._get(f"/runs/{run_id}/tasks", ids=",".join(image_ids))["tasks"]

    def post_curve_point(self, run_id, point):
        return self._post(f"/runs/{run_id}/curve", {"point": point})

    def create_tickets(self, tickets):
        return self._post("/defects", {"tickets": tickets})


class HumanOracle:
    """Blocks on the labeling queue until every id of a batch is resolved.

    Enqueueing is idempotent server-side, so a resumed run re-entering the
    same batch just picks up the already-recorded answers.
    """

    def __init__(self, base_url: str, run_id: str, poll_interval_s: float = 2.0,
                 timeout_s: float | None = None, token: str | None = None):
        self.client = ServiceClient(base_url, token=token)
        self.run_id = run_id
        self.poll_interval_s = poll_interval_s
        self.timeout_s = timeout_s

    def label(self, ids: list[str]) -> dict[str, AnnotationLabel]:
        self.client.enqueue(self.run_id, ids)
        deadline = None if self.timeout_s is None else time.monotonic() + self.timeout_s
        while True:
            tasks = self.client.tasks_for(self.run_id, ids)
            terminal = {t["image_id"]: t for t in tasks if t["state"] != "pending"}
            if len(terminal) == len(ids):
                return {i: AnnotationLabel(terminal[i]["label"]) for i in ids}
            if deadline is not None and time.monotonic() > deadline:
                raise OracleTimeoutError(
                    f"{len(ids) - len(terminal)} of {len(ids)} labels still pending "
                    f"after {self.timeout_s}s; run is suspended and resumable"
                )
            time.sleep(self.poll_interval_s)
