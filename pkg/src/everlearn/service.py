"""HTTP front of the knowledge base: status, queue review, verdicts, iterations.

All writes go through one lock, so a verdict never races an iteration.
Posting an iteration starts it in a background thread and returns at once;
progress shows up in /status.  Mutating endpoints accept a client-chosen
request_id and replay the stored response on retries instead of reapplying.
"""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .allpairs import AllPairsTable
from .kb import (
    Assertion,
    ConstraintViolation,
    KnowledgeBase,
    QueuedCandidate,
    VerdictError,
    candidate_id,
)
from .learner import LearnerConfig, TableIndex, index_table, run_iteration


class VerdictRequest(BaseModel):
    id: str
    decision: Literal["approve", "reject"]
    supervisor: str
    request_id: str | None = None


class IterationRequest(BaseModel):
    request_id: str | None = None


def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def render_human(template: str, predicate: str, args: tuple[str, ...]) -> str:
    """Fill the display template by slicing around its X (and Y) markers.

    Slicing instead of str.replace keeps argument bytes intact even when an
    argument itself contains an X or Y.
    """
    if len(args) == 1:
        i = template.find("X")
        if i < 0:
            return f"{predicate}({args[0]})"
        return template[:i] + args[0] + template[i + 1 :]
    xi = template.find("X")
    yi = template.find("Y")
    if xi < 0 or yi < 0:
        return f"{predicate}({args[0]}, {args[1]})"
    first, second = sorted(((xi, "X"), (yi, "Y")))
    values = {"X": args[0], "Y": args[1]}
    return (
        template[: first[0]]
        + values[first[1]]
        + template[first[0] + 1 : second[0]]
        + values[second[1]]
        + template[second[0] + 1 :]
    )


class ServiceState:
    def __init__(
        self,
        kb: KnowledgeBase,
        table: AllPairsTable | None,
        config: LearnerConfig,
    ) -> None:
        self.kb = kb
        self.table = table
        self.config = config
        self.index: TableIndex | None = index_table(table) if table is not None else None
        self.lock = threading.RLock()
        self.iteration_running = False
        self.last_iteration_error: str | None = None
        self.request_cache: dict[str, dict] = {}

    def human_readable(self, predicate: str, args: tuple[str, ...]) -> str:
        if predicate in self.kb.categories:
            template = self.kb.categories[predicate].human_format
        elif predicate in self.kb.relations:
            template = self.kb.relations[predicate].human_format
        else:
            template = ""
        return render_human(template, predicate, args)

    def queue_payload(self, item: QueuedCandidate) -> dict:
        return {
            "id": candidate_id(item.predicate, item.args),
            "predicate": item.predicate,
            "args": list(item.args),
            "score": item.score,
            "evidence": [list(pair) for pair in item.evidence],
            "queued_at": item.queued_at,
            "human_readable": self.human_readable(item.predicate, item.args),
        }

    def assertion_payload(self, assertion: Assertion) -> dict:
        return {
            "id": candidate_id(assertion.predicate, assertion.args),
            "predicate": assertion.predicate,
            "args": list(assertion.args),
            "status": assertion.status,
            "score": assertion.score,
            "iteration": assertion.iteration,
            "evidence": [list(pair) for pair in assertion.evidence],
            "timestamp": _iso(assertion.ts),
            "human_readable": self.human_readable(assertion.predicate, assertion.args),
        }

    def resolve_id(self, target: str) -> tuple[str, tuple[str, ...]] | None:
        for key in self.kb.queue:
            if candidate_id(key[0], key[1]) == target:
                return key
        for key in self.kb.assertions:
            if candidate_id(key[0], key[1]) == target:
                return key
        return None


def create_app(
    kb: KnowledgeBase,
    table: AllPairsTable | None = None,
    config: LearnerConfig | None = None,
    log_path: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    state = ServiceState(kb, table, config or LearnerConfig())
    if log_path is not None:
        kb.attach_log(log_path)
    app = FastAPI(title="everlearn", docs_url=None, redoc_url=None)
    app.state.learner = state

    @app.get("/status")
    def status() -> dict:
        with state.lock:
            return {
                "iteration": kb.iteration,
                "profile": kb.profile_name,
                "corpus_fingerprint": kb.corpus_fingerprint,
                "assertions": kb.status_counts(),
                "queue_size": len(kb.queue),
                "blacklist_size": len(kb.blacklist),
                "trusted_patterns": sum(len(v) for v in kb.trusted_patterns.values()),
                "categories": sorted(kb.categories),
                "relations": sorted(kb.relations),
                "iteration_running": state.iteration_running,
                "last_iteration_error": state.last_iteration_error,
                "iterations_available": state.table is not None,
            }

    @app.get("/queue")
    def queue(
        predicate: str | None = Query(default=None),
        limit: int = Query(default=50, ge=1, le=500),
    ) -> dict:
        with state.lock:
            if (
                predicate is not None
                and predicate not in kb.categories
                and predicate not in kb.relations
            ):
                raise HTTPException(404, f"unknown predicate {predicate!r}")
            items = kb.queue_items(predicate)
            return {
                "total": len(items),
                "items": [state.queue_payload(item) for item in items[:limit]],
            }

    @app.post("/verdicts")
    def post_verdict(body: VerdictRequest) -> dict:
        with state.lock:
            if body.request_id and body.request_id in state.request_cache:
                return state.request_cache[body.request_id]
            key = state.resolve_id(body.id)
            if key is None:
                raise HTTPException(404, f"no queued or asserted instance with id {body.id!r}")
            try:
                kb.apply_verdict(key[0], key[1], body.decision, body.supervisor)
            except ConstraintViolation as exc:
                raise HTTPException(409, str(exc)) from exc
            except VerdictError as exc:
                raise HTTPException(409, str(exc)) from exc
            assertion = kb.assertions[key]
            response = {
                "id": body.id,
                "decision": body.decision,
                "assertion": state.assertion_payload(assertion),
            }
            if body.request_id:
                state.request_cache[body.request_id] = response
            return response

    def _instances(name: str, kind: str, status: str | None, limit: int, offset: int) -> dict:
        with state.lock:
            known = kb.categories if kind == "category" else kb.relations
            if name not in known:
                raise HTTPException(404, f"unknown {kind} {name!r}")
            found = kb.instances_of(name, status)
            page = found[offset : offset + limit]
            return {
                "predicate": name,
                "total": len(found),
                "offset": offset,
                "items": [state.assertion_payload(a) for a in page],
            }

    @app.get("/kb/categories/{name}/instances")
    def category_instances(
        name: str,
        status: str | None = Query(default=None),
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        return _instances(name, "category", status, limit, offset)

    @app.get("/kb/relations/{name}/instances")
    def relation_instances(
        name: str,
        status: str | None = Query(default=None),
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        return _instances(name, "relation", status, limit, offset)

    @app.get("/kb/provenance")
    def provenance(
        predicate: str = Query(...),
        args: list[str] = Query(...),
    ) -> dict:
        with state.lock:
            if predicate not in kb.categories and predicate not in kb.relations:
                raise HTTPException(404, f"unknown predicate {predicate!r}")
            report = kb.provenance(predicate, tuple(args))
            for event in report["events"]:
                event["timestamp"] = _iso(event.pop("ts"))
            report["human_readable"] = state.human_readable(predicate, tuple(args))
            return report

    @app.post("/iterations", status_code=202)
    def start_iteration(body: IterationRequest) -> dict:
        with state.lock:
            if body.request_id and body.request_id in state.request_cache:
                return state.request_cache[body.request_id]
            if state.table is None:
                raise HTTPException(
                    409, "no all-pairs table loaded; restart the service with one"
                )
            if state.iteration_running:
                raise HTTPException(409, "an iteration is already running")
            state.iteration_running = True
            state.last_iteration_error = None
            number = kb.iteration + 1

            def work() -> None:
                try:
                    with state.lock:
                        run_iteration(kb, state.table, state.config, index=state.index)
                except Exception as exc:  # surfaced via /status
                    state.last_iteration_error = str(exc)
                finally:
                    state.iteration_running = False

            threading.Thread(target=work, name=f"iteration-{number}", daemon=True).start()
            response = {"state": "started", "iteration": number}
            if body.request_id:
                state.request_cache[body.request_id] = response
            return response

    @app.get("/iterations/{number}")
    def iteration_detail(number: int) -> dict:
        with state.lock:
            for record in kb.records:
                if record.type == "iteration" and record.get("number") == number:
                    return {
                        "number": number,
                        "profile": record.get("profile"),
                        "fingerprint": record.get("fingerprint"),
                        "stats": record.get("stats"),
                        "queued": record.get("queued"),
                        "expired": record.get("expired"),
                        "trusted_scores": record.get("trusted_scores"),
                        "timestamp": _iso(record.get("ts")),
                    }
        raise HTTPException(404, f"no iteration {number}")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def root() -> RedirectResponse:
            return RedirectResponse("/ui/")

    return app
