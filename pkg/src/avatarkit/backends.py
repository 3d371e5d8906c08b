"""Uniform adapter protocol for every remote model service.

Each stage talks to its backend through one JSON envelope posted to
``{endpoint}/invoke``:

    request:  {"request_id": str, "operation": str, "params": {...},
               "media": [{"role": str, "kind": str, "bytes": base64}, ...]}
    response: {"status": "ok"|"error", "request_id": str,
               "error_code": str?, "values": {...}?, "media": [...]?}

A descriptor whose endpoint is the literal ``"mock"`` dispatches in
process with zero network. Remote calls retry only on connect-phase
failures (refused connection, connect timeout); a response that arrived,
even an error, is never retried because stage calls may be expensive and
are not assumed idempotent. A read timeout after the request was sent is
treated the same way: fail, do not resend.
"""

from __future__ import annotations

import base64
import uuid
from dataclasses import dataclass, field
from typing import Callable

import requests

from .errors import BackendProtocolError, BackendUnavailableError, InvariantViolation
from .media import MediaKind

BACKEND_NAMES = (
    "llm",
    "tts",
    "voiceprint",
    "clone",
    "age",
    "dress",
    "drive_independent",
    "drive_dependent",
    "retarget",
    "novel_view",
    "style",
    "super_resolve",
)

MOCK_ENDPOINT = "mock"
MAX_RETRIES = 3
DEFAULT_TIMEOUT_MS = 60_000
DEFAULT_CONNECT_TIMEOUT_MS = 10_000


def is_backend_name(name: str) -> bool:
    return name in BACKEND_NAMES or name.startswith("vqa:")


@dataclass(frozen=True)
class BackendDescriptor:
    """Locator plus call policy for one backend service."""

    name: str
    endpoint: str = MOCK_ENDPOINT
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    connect_timeout_ms: int = DEFAULT_CONNECT_TIMEOUT_MS
    retries: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not is_backend_name(self.name):
            raise InvariantViolation(f"unknown backend name {self.name!r}")
        if not (0 <= self.retries <= MAX_RETRIES):
            raise InvariantViolation(f"retries must be in [0, {MAX_RETRIES}]")

    @property
    def is_mock(self) -> bool:
        return self.endpoint == MOCK_ENDPOINT


@dataclass(frozen=True)
class MediaPart:
    """One media attachment inside an envelope."""

    role: str
    kind: MediaKind
    data: bytes

    def to_wire(self) -> dict:
        return {
            "role": self.role,
            "kind": self.kind.value,
            "bytes": base64.b64encode(self.data).decode("ascii"),
        }

    @classmethod
    def from_wire(cls, item: dict) -> "MediaPart":
        try:
            return cls(
                role=item["role"],
                kind=MediaKind(item["kind"]),
                data=base64.b64decode(item["bytes"]),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise BackendProtocolError(f"malformed media part: {exc}") from exc


@dataclass(frozen=True)
class BackendRequest:
    request_id: str
    operation: str
    params: dict = field(default_factory=dict)
    media: tuple[MediaPart, ...] = ()

    def to_wire(self) -> dict:
        return {
            "request_id": self.request_id,
            "operation": self.operation,
            "params": self.params,
            "media": [m.to_wire() for m in self.media],
        }

    @classmethod
    def from_wire(cls, body: dict) -> "BackendRequest":
        try:
            return cls(
                request_id=body["request_id"],
                operation=body["operation"],
                params=body.get("params") or {},
                media=tuple(MediaPart.from_wire(m) for m in body.get("media") or []),
            )
        except (KeyError, TypeError) as exc:
            raise BackendProtocolError(f"malformed request envelope: {exc}") from exc


@dataclass(frozen=True)
class BackendResponse:
    request_id: str
    status: str = "ok"
    error_code: str | None = None
    values: dict = field(default_factory=dict)
    media: tuple[MediaPart, ...] = ()

    def to_wire(self) -> dict:
        body: dict = {"status": self.status, "request_id": self.request_id}
        if self.error_code is not None:
            body["error_code"] = self.error_code
        if self.values:
            body["values"] = self.values
        if self.media:
            body["media"] = [m.to_wire() for m in self.media]
        return body

    @classmethod
    def from_wire(cls, body: dict) -> "BackendResponse":
        if not isinstance(body, dict) or "status" not in body:
            raise BackendProtocolError("response envelope missing status")
        if "request_id" not in body:
            raise BackendProtocolError("response envelope missing request_id")
        status = body["status"]
        if status not in ("ok", "error"):
            raise BackendProtocolError(f"bad response status {status!r}")
        return cls(
            request_id=body["request_id"],
            status=status,
            error_code=body.get("error_code"),
            values=body.get("values") or {},
            media=tuple(MediaPart.from_wire(m) for m in body.get("media") or []),
        )


Transport = Callable[[BackendDescriptor, dict], dict]
"""POSTs an envelope dict to a descriptor's endpoint and returns the reply
dict. May raise ``requests.ConnectionError`` / ``requests.Timeout``; those
map to the retry policy in :func:`call_backend`."""


def http_transport(desc: BackendDescriptor, body: dict) -> dict:
    resp = requests.post(
        desc.endpoint.rstrip("/") + "/invoke",
        json=body,
        timeout=(desc.connect_timeout_ms / 1000.0, desc.timeout_ms / 1000.0),
    )
    try:
        return resp.json()
    except ValueError as exc:
        raise BackendProtocolError(
            f"backend {desc.name} returned non-JSON (HTTP {resp.status_code})"
        ) from exc


def call_backend(
    desc: BackendDescriptor,
    request: BackendRequest,
    transport: Transport | None = None,
    mock_suite=None,
) -> BackendResponse:
    """Send one envelope, honoring the retry policy, and validate the reply.

    Mock descriptors require ``mock_suite`` and never touch the network.
    """
    if desc.is_mock:
        if mock_suite is None:
            raise InvariantViolation(f"backend {desc.name} is mock but no suite given")
        response = mock_suite.dispatch(desc, request)
    else:
        transport = transport or http_transport
        raw = None
        last_exc: Exception | None = None
        for _ in range(1 + desc.retries):
            try:
                raw = transport(desc, request.to_wire())
                break
            except (requests.exceptions.ConnectionError, requests.exceptions.ConnectTimeout) as exc:
                last_exc = exc
            except requests.exceptions.Timeout as exc:
                # Request may have been delivered; do not resend.
                raise BackendUnavailableError(
                    f"backend {desc.name} timed out: {exc}"
                ) from exc
        if raw is None:
            raise BackendUnavailableError(
                f"backend {desc.name} unreachable after {1 + desc.retries} attempts: {last_exc}"
            ) from last_exc
        response = BackendResponse.from_wire(raw)

    if response.request_id != request.request_id:
        raise BackendProtocolError(
            f"backend {desc.name} echoed request_id {response.request_id!r}, "
            f"expected {request.request_id!r}"
        )
    return response


class Backend:
    """Client handle binding a descriptor to its transport or mock suite."""

    def __init__(
        self,
        descriptor: BackendDescriptor,
        transport: Transport | None = None,
        mock_suite=None,
    ) -> None:
        self.descriptor = descriptor
        self.transport = transport
        self.mock_suite = mock_suite

    @property
    def name(self) -> str:
        return self.descriptor.name

    def invoke(
        self,
        operation: str,
        params: dict | None = None,
        media: tuple[MediaPart, ...] | list[MediaPart] = (),
    ) -> BackendResponse:
        """Invoke the backend and raise on an error-status reply."""
        request = BackendRequest(
            request_id=uuid.uuid4().hex,
            operation=operation,
            params=params or {},
            media=tuple(media),
        )
        response = call_backend(
            self.descriptor, request, transport=self.transport, mock_suite=self.mock_suite
        )
        if response.status == "error":
            raise BackendProtocolError(
                f"backend {self.name} failed: {response.error_code or 'unspecified'}"
            )
        return response

    def single_media(self, response: BackendResponse, kind: MediaKind) -> bytes:
        """The single media payload of a reply, checked for kind."""
        if len(response.media) != 1:
            raise BackendProtocolError(
                f"backend {self.name} returned {len(response.media)} media parts, expected 1"
            )
        part = response.media[0]
        if part.kind != kind:
            raise BackendProtocolError(
                f"backend {self.name} returned {part.kind.value}, expected {kind.value}"
            )
        return part.data


class BackendHub:
    """Named collection of backend handles used by the orchestrator."""

    def __init__(self, backends: dict[str, Backend]) -> None:
        self._backends = dict(backends)

    def __contains__(self, name: str) -> bool:
        return name in self._backends

    def get(self, name: str) -> Backend:
        try:
            return self._backends[name]
        except KeyError:
            raise InvariantViolation(f"no backend configured under {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._backends)

    def vqa_backends(self) -> list[Backend]:
        return [b for n, b in sorted(self._backends.items()) if n.startswith("vqa:")]

    @property
    def llm(self) -> Backend:
        return self.get("llm")

    @property
    def tts(self) -> Backend:
        return self.get("tts")

    @property
    def voiceprint(self) -> Backend:
        return self.get("voiceprint")

    @property
    def clone(self) -> Backend:
        return self.get("clone")

    @property
    def age(self) -> Backend:
        return self.get("age")

    @property
    def dress(self) -> Backend:
        return self.get("dress")

    @property
    def drive_independent(self) -> Backend:
        return self.get("drive_independent")

    @property
    def drive_dependent(self) -> Backend:
        return self.get("drive_dependent")

    @property
    def retarget(self) -> Backend:
        return self.get("retarget")

    @property
    def novel_view(self) -> Backend:
        return self.get("novel_view")

    @property
    def style(self) -> Backend:
        return self.get("style")

    @property
    def super_resolve(self) -> Backend:
        return self.get("super_resolve")
