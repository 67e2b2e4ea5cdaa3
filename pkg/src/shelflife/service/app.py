"""HTTP API over the annotation store.

Annotator identity comes from the bearer token; when an endpoint also takes
an ``annotator`` parameter it must match the token's identity. The export
endpoint requires the separate admin token. Primary grades are never held
by the store, so no annotator-reachable endpoint can expose them.
"""

from __future__ import annotations

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel

from ..errors import OwnershipError, UnknownAnnotatorError, ValidationError
from ..trec_io import export_qrels
from .store import AnnotationStore


class JudgmentBody(BaseModel):
    annotator: str
    topic: str
    doc: str
    grade: int


class NarrativeBody(BaseModel):
    annotator: str
    topic: str
    narrative_text: str


class FlagBody(BaseModel):
    annotator: str
    topic: str
    note: str
    doc: str | None = None


def create_app(store: AnnotationStore) -> FastAPI:
    app = FastAPI(title="shelflife annotation service")

    def token_of(authorization: str | None) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        return authorization.removeprefix("Bearer ")

    def identity(authorization: str | None = Header(default=None)) -> str:
        annotator = store.annotator_for_token(token_of(authorization))
        if annotator is None:
            raise HTTPException(status_code=401, detail="unknown token")
        return annotator

    def admin(authorization: str | None = Header(default=None)) -> None:
        if not store.is_admin(token_of(authorization)):
            raise HTTPException(status_code=401, detail="admin token required")

    def check_match(annotator: str, identity_annotator: str) -> None:
        if annotator != identity_annotator:
            raise HTTPException(
                status_code=403, detail="annotator does not match token identity"
            )

    @app.get("/config")
    def get_config() -> dict:
        return {
            "grade_labels": {
                str(g): label for g, label in store.config.grade_labels.items()
            },
            "grade_guidelines": {
                str(g): text for g, text in store.config.grade_guidelines.items()
            },
            "search_url_template": store.config.search_url_template,
        }

    @app.get("/topics")
    def get_topics(annotator: str, who: str = Depends(identity)) -> list[dict]:
        check_match(annotator, who)
        return _call(store.topics_view, annotator)

    @app.get("/task/next")
    def get_next_task(annotator: str, who: str = Depends(identity)) -> dict:
        check_match(annotator, who)
        task = _call(store.next_task, annotator)
        if task is None:
            progress = store.progress(annotator)
            return {"done": True, "summary": progress["per_topic"]}
        return {
            "done": False,
            "topic": task.topic,
            "title": task.title,
            "doc": task.doc,
            "text": task.text,
            "position": task.position,
            "remaining": task.remaining,
        }

    @app.get("/progress")
    def get_progress(annotator: str, who: str = Depends(identity)) -> dict:
        check_match(annotator, who)
        return _call(store.progress, annotator)

    @app.post("/judgment")
    def post_judgment(body: JudgmentBody, who: str = Depends(identity)) -> dict:
        check_match(body.annotator, who)
        return _call(
            store.submit_judgment, body.annotator, body.topic, body.doc, body.grade
        )

    @app.post("/narrative")
    def post_narrative(body: NarrativeBody, who: str = Depends(identity)) -> dict:
        check_match(body.annotator, who)
        return _call(
            store.submit_narrative, body.annotator, body.topic, body.narrative_text
        )

    @app.post("/flag")
    def post_flag(body: FlagBody, who: str = Depends(identity)) -> dict:
        check_match(body.annotator, who)
        return _call(store.submit_flag, body.annotator, body.topic, body.note, body.doc)

    @app.get("/export/qrels")
    def get_export(_: None = Depends(admin)) -> dict:
        sets = store.export_annotations()
        return {
            "qrels": {a: export_qrels(s) for a, s in sorted(sets.items())},
            "narratives": [
                {
                    "annotator": e.annotator,
                    "topic": e.topic,
                    "narrative_text": e.narrative_text,
                    "timestamp": e.timestamp,
                }
                for e in store.export_narratives()
            ],
            "flags": [
                {
                    "annotator": e.annotator,
                    "topic": e.topic,
                    "doc": e.doc,
                    "note": e.note,
                    "timestamp": e.timestamp,
                }
                for e in store.export_flags()
            ],
        }

    return app


def _call(func, *args):
    """Translate store errors into HTTP status codes."""
    try:
        return func(*args)
    except UnknownAnnotatorError as exc:
        raise HTTPException(status_code=401, detail=str(exc)) from exc
    except OwnershipError as exc:
        raise HTTPException(status_code=403, detail=str(exc)) from exc
    except ValidationError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
