"""Embedded HTTP service for rating sessions.

Exposes the session/rating/report endpoints the browser form talks to and,
when a built static bundle is present, serves it at the root path.
"""
from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..errors import DuplicateRatingError, ValidationError
from .sessions import SessionManager, now_utc


class RatingBody(BaseModel):
    idea_key: str
    relevance: int = Field(ge=0, le=1)
    novelty: int = Field(ge=1, le=5)
    feasibility: int = Field(ge=0, le=1)


def build_app(manager: SessionManager, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="idea rating service", docs_url=None, redoc_url=None)

    # out-of-range answers are a caller error, reported as 400 not 422
    @app.exception_handler(RequestValidationError)
    async def _body_validation(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc.errors())})

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(DuplicateRatingError)
    async def _duplicate(request: Request, exc: DuplicateRatingError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "run_id": manager.plan.run_id}

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        view = manager.session_view(session_id)
        if view is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return view

    @app.post("/api/sessions/{session_id}/ratings", status_code=201)
    async def post_rating(session_id: str, body: RatingBody):
        try:
            rating = manager.record(
                session_id=session_id,
                idea_key=body.idea_key,
                relevance=body.relevance,
                novelty=body.novelty,
                feasibility=body.feasibility,
                submitted_at=now_utc(),
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        view = manager.session_view(session_id)
        return {
            "status": "stored",
            "idea_key": rating.idea_key,
            "session_status": view["status"],
            "progress": view["progress"],
        }

    @app.get("/api/runs/{run_id}/report")
    async def run_report(run_id: str):
        if run_id != manager.plan.run_id:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return manager.report()

    if static_dir is not None and Path(static_dir).is_dir():
        index_page = Path(static_dir) / "index.html"

        # rating links carry the session token in the path, so deep links
        # like /rate/<id> must land on the app shell, not a 404
        @app.get("/rate/{_session_id}", include_in_schema=False)
        async def rate_page(_session_id: str):
            return FileResponse(index_page)

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(manager: SessionManager, host: str = "127.0.0.1", port: int = 8277,
          static_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(build_app(manager, static_dir=static_dir), host=host, port=port, log_level="warning")
