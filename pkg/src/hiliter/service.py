"""Local HTTP service for the review UI and other clients.

Stateless by design: suggestion ids are content hashes of (body, span,
type), so a render request is validated by recomputing suggestions for
the submitted body; nothing is kept between requests. JSON payloads use
canonical serialization (sorted keys, no insignificant whitespace) so
service responses are byte-identical with library and CLI output.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.staticfiles import StaticFiles

from hiliter.ingest import canonical_json
from hiliter.markup import FormatType
from hiliter.recommend import (
    RenderError,
    ResolutionPolicy,
    load_model_dir,
    render_markdown,
    resolve_conflicts,
    suggest_all,
)
from hiliter.labeler.serialization import FILE_EXTENSION, LoadError, read_model_info

DEFAULT_MAX_BODY_BYTES = 256 * 1024
MODEL_DIR_ENV = "HILITER_MODEL_DIR"


def _json_response(payload: object, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json(payload),
        status_code=status_code,
        media_type="application/json",
    )


def _error(status_code: int, message: str) -> Response:
    return _json_response({"error": message}, status_code=status_code)


def suggest_payload(
    body: str, models, policy: ResolutionPolicy, types: list[FormatType] | None = None
) -> dict:
    """The response object shared verbatim by the service and the CLI."""
    selected = models
    if types is not None:
        selected = {fmt: m for fmt, m in models.items() if fmt in types}
    suggestions, warnings = suggest_all(body, selected)
    resolved = resolve_conflicts(suggestions, policy)
    return {
        "suggestions": [s.to_dict() for s in resolved],
        "parser_warnings": warnings,
    }


def create_app(
    model_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
    max_body_bytes: int = DEFAULT_MAX_BODY_BYTES,
    max_inflight: int = 32,
    request_timeout_s: float = 10.0,
) -> FastAPI:
    model_dir = model_dir or os.environ.get(MODEL_DIR_ENV)
    models = load_model_dir(model_dir) if model_dir else {}
    model_warnings: list[dict] = []
    metadata: list[dict] = []
    if model_dir:
        for file in sorted(Path(model_dir).glob(f"*{FILE_EXTENSION}")):
            try:
                info = read_model_info(file)
            except LoadError as exc:
                model_warnings.append({"file": file.name, "warning": str(exc)})
                continue
            metadata.append({"file": file.name, **info})

    app = FastAPI(title="hiliter", docs_url=None, redoc_url=None)
    app.state.models = models
    app.state.request_timeout_s = request_timeout_s
    inflight = threading.BoundedSemaphore(max_inflight)

    async def _read_json(request: Request) -> tuple[dict | None, Response | None]:
        raw = await request.body()
        if len(raw) > max_body_bytes:
            return None, _error(413, f"body exceeds {max_body_bytes} bytes")
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            return None, _error(400, "malformed JSON body")
        if not isinstance(obj, dict):
            return None, _error(400, "request body must be a JSON object")
        return obj, None

    def _parse_policy(obj: dict) -> ResolutionPolicy | Response:
        name = obj.get("policy", "highest")
        if name in ("highest", "highest_confidence"):
            return ResolutionPolicy(mode="highest_confidence")
        if name in ("all", "all_with_scores"):
            return ResolutionPolicy(mode="all_with_scores")
        return _error(400, f"unknown policy {name!r}")

    @app.post("/api/suggest")
    async def api_suggest(request: Request) -> Response:
        if not inflight.acquire(blocking=False):
            return _error(503, "too many in-flight requests")
        try:
            obj, err = await _read_json(request)
            if err is not None:
                return err
            if not models:
                return _error(503, "no models loaded")
            body = obj.get("body")
            if not isinstance(body, str):
                return _error(400, "field 'body' must be a string")
            types = None
            if obj.get("types") is not None:
                try:
                    types = [FormatType(t) for t in obj["types"]]
                except (ValueError, TypeError):
                    return _error(400, f"unknown format type in {obj['types']!r}")
            policy = _parse_policy(obj)
            if isinstance(policy, Response):
                return policy
            return _json_response(suggest_payload(body, models, policy, types))
        finally:
            inflight.release()

    @app.post("/api/render")
    async def api_render(request: Request) -> Response:
        if not inflight.acquire(blocking=False):
            return _error(503, "too many in-flight requests")
        try:
            obj, err = await _read_json(request)
            if err is not None:
                return err
            if not models:
                return _error(503, "no models loaded")
            body = obj.get("body")
            accepted_ids = obj.get("accepted_ids")
            if not isinstance(body, str) or not isinstance(accepted_ids, list):
                return _error(400, "need string 'body' and list 'accepted_ids'")
            suggestions, _warnings = suggest_all(body, models)
            by_id = {s.id: s for s in suggestions}
            unknown = [i for i in accepted_ids if i not in by_id]
            if unknown:
                return _error(409, f"unknown or stale suggestion ids: {unknown}")
            accepted = [by_id[i] for i in accepted_ids]
            try:
                markdown = render_markdown(body, accepted)
            except RenderError as exc:
                return _error(400, str(exc))
            return _json_response({"markdown": markdown})
        finally:
            inflight.release()

    @app.get("/api/models")
    async def api_models() -> Response:
        return _json_response({"models": metadata, "warnings": model_warnings})

    @app.get("/healthz")
    async def healthz() -> Response:
        return _json_response({"status": "ok", "models": len(models)})

    if static_dir:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app
