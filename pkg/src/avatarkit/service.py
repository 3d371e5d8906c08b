"""HTTP surface: the session API and the standalone mock backend server."""

from __future__ import annotations

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .backends import BackendDescriptor, BackendRequest
from .errors import (
    AvatarKitError,
    InvalidInputError,
    MediaFormatError,
    NotFoundError,
)
from .media import MediaKind, decode_png, decode_wav
from .mocks import MockSuite
from .orchestrator import Orchestrator, Stage

_ERROR_STATUS = {
    "invalid-input": 400,
    "invariant-violation": 400,
    "media-format": 400,
    "stage-order": 409,
    "busy": 429,
    "not-found": 404,
    "backend-unavailable": 502,
    "backend-protocol": 502,
}

_MEDIA_TYPES = {
    MediaKind.TEXT: "text/plain; charset=utf-8",
    MediaKind.AUDIO: "audio/wav",
    MediaKind.IMAGE: "image/png",
    MediaKind.VIDEO: "application/octet-stream",
    MediaKind.REPORT: "application/json",
}

_AUDIO_CONTENT_TYPES = {"audio/wav", "audio/x-wav", "audio/wave"}
_IMAGE_CONTENT_TYPES = {"image/png"}


def _install_error_handler(app: FastAPI) -> None:
    @app.exception_handler(AvatarKitError)
    async def _handle(_request: Request, exc: AvatarKitError) -> JSONResponse:
        return JSONResponse(
            status_code=_ERROR_STATUS.get(exc.code, 500),
            content={"error": exc.code, "detail": str(exc)},
        )


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except ValueError as exc:
        raise InvalidInputError(f"request body must be JSON: {exc}") from exc
    if body is None:
        return {}
    if not isinstance(body, dict):
        raise InvalidInputError("request body must be a JSON object")
    return body


def create_app(orchestrator: Orchestrator) -> FastAPI:
    app = FastAPI(title="avatarkit", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    _install_error_handler(app)
    app.state.orchestrator = orchestrator

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"ok": True}

    @app.post("/v1/sessions")
    async def create_session() -> dict:
        session = orchestrator.create_session()
        return {"session_id": session.session_id, "state": session.state.value}

    @app.get("/v1/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return orchestrator.session(session_id).snapshot()

    @app.get("/v1/sessions/{session_id}/manifest")
    async def get_manifest(session_id: str) -> dict:
        return orchestrator.manifest(session_id).to_dict()

    @app.post("/v1/sessions/{session_id}/message")
    async def post_message(session_id: str, request: Request) -> dict:
        body = await _json_body(request)
        text = body.get("text")
        if not isinstance(text, str):
            raise InvalidInputError("message body needs a string 'text' field")
        reply, round_index = orchestrator.send_message(session_id, text)
        return {"reply": reply, "round": round_index}

    @app.put("/v1/sessions/{session_id}/inputs/audio")
    async def put_audio(session_id: str, request: Request) -> dict:
        content_type = (request.headers.get("content-type") or "").split(";")[0].strip()
        if content_type not in _AUDIO_CONTENT_TYPES:
            raise MediaFormatError(
                f"audio upload must be audio/wav, got {content_type or 'none'}"
            )
        clip = decode_wav(await request.body())
        ref = orchestrator.submit_audio(session_id, clip)
        snapshot = orchestrator.session(session_id).snapshot()
        return {"artifact_id": ref.id, "state": snapshot["state"]}

    @app.put("/v1/sessions/{session_id}/inputs/portrait")
    async def put_portrait(session_id: str, request: Request) -> dict:
        content_type = (request.headers.get("content-type") or "").split(";")[0].strip()
        if content_type not in _IMAGE_CONTENT_TYPES:
            raise MediaFormatError(
                f"portrait upload must be image/png, got {content_type or 'none'}"
            )
        image = decode_png(await request.body())
        ref = orchestrator.submit_portrait(session_id, image)
        snapshot = orchestrator.session(session_id).snapshot()
        return {"artifact_id": ref.id, "state": snapshot["state"]}

    @app.post("/v1/sessions/{session_id}/stages/{stage_name}")
    async def post_stage(session_id: str, stage_name: str, request: Request) -> dict:
        try:
            stage = Stage(stage_name)
        except ValueError:
            raise NotFoundError(f"unknown stage {stage_name!r}") from None
        params = await _json_body(request)
        ref, state = orchestrator.run_stage(session_id, stage, params)
        return {
            "artifact_id": None if ref is None else ref.id,
            "state": state.value,
        }

    @app.get("/v1/artifacts/{artifact_id}")
    async def get_artifact(artifact_id: str) -> Response:
        data, kind = orchestrator.artifact_content(artifact_id)
        return Response(content=data, media_type=_MEDIA_TYPES[kind])

    @app.get("/v1/garments")
    async def get_garments() -> dict:
        return {"garments": orchestrator.garment_listing()}

    return app


def create_mock_app(suite: MockSuite) -> FastAPI:
    """Serve the mock suite over the envelope protocol for external clients."""
    app = FastAPI(title="avatarkit-mock-backends", docs_url=None, redoc_url=None)
    _install_error_handler(app)
    app.state.suite = suite

    @app.get("/healthz")
    async def healthz() -> dict:
        return {"ok": True}

    @app.post("/invoke")
    async def invoke(request: Request) -> JSONResponse:
        body = await _json_body(request)
        envelope = BackendRequest.from_wire(body)
        if envelope.operation == "vqa":
            name = f"vqa:{envelope.params.get('metric', 'unknown')}"
        else:
            name = envelope.operation
        try:
            descriptor = BackendDescriptor(name=name)
            response = suite.dispatch(descriptor, envelope)
        except AvatarKitError as exc:
            return JSONResponse(
                {
                    "status": "error",
                    "request_id": envelope.request_id,
                    "error_code": exc.code,
                }
            )
        return JSONResponse(response.to_wire())

    return app
