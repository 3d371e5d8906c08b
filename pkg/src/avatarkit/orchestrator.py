"""Session state machine and stage runner.

A session walks a linear lifecycle: portrait upload, optional age
transformation, appearance selection, optional dressing, speech, driving,
optional post-processing (any combination, repeatable), assessment.
Conversation rounds and audio upload are orthogonal and allowed in every
state. Each mutation happens under a per-session non-blocking command
lock: a second concurrent command is rejected as retryable Busy rather
than queued. Stage failures leave the session exactly as it was.

Every stage output lands in the content-addressed store and is recorded
in a run manifest row; identical content collapses to one artifact id,
which is what makes end-to-end runs golden-hash comparable.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import animation as anim
from . import appearance as app
from . import postprocess as post
from .backends import BackendHub
from .config import PipelineConfig, build_hub
from .conversation import ConversationSession, converse_round
from .errors import (
    BusyError,
    InvalidInputError,
    NotFoundError,
    StageOrderError,
)
from .media import ArtifactRef, AudioClip, ImageFrame, MediaKind, TextDoc
from .mocks import MockSuite, mock_suite
from .quality import assess_quality, report_to_json
from .speech import make_speech
from .store import ArtifactStore


class SessionState(str, Enum):
    CREATED = "Created"
    PORTRAIT_READY = "PortraitReady"
    AGES_GENERATED = "AgesGenerated"
    APPEARANCE_SELECTED = "AppearanceSelected"
    SPEECH_READY = "SpeechReady"
    ANIMATED = "Animated"
    POST_PROCESSED = "PostProcessed"
    ASSESSED = "Assessed"


class Stage(str, Enum):
    AGES = "Ages"
    SELECT_APPEARANCE = "SelectAppearance"
    DRESS = "Dress"
    SPEAK = "Speak"
    ANIMATE = "Animate"
    NOVEL_VIEW = "NovelView"
    STYLE = "Style"
    SUPER_RESOLVE = "SuperResolve"
    ASSESS = "Assess"


# Which session states may enter each stage.
_STAGE_STATES: dict[Stage, frozenset[SessionState]] = {
    Stage.AGES: frozenset({SessionState.PORTRAIT_READY, SessionState.AGES_GENERATED}),
    Stage.SELECT_APPEARANCE: frozenset(
        {
            SessionState.PORTRAIT_READY,
            SessionState.AGES_GENERATED,
            SessionState.APPEARANCE_SELECTED,
        }
    ),
    Stage.DRESS: frozenset({SessionState.APPEARANCE_SELECTED}),
    Stage.SPEAK: frozenset({SessionState.APPEARANCE_SELECTED, SessionState.SPEECH_READY}),
    Stage.ANIMATE: frozenset({SessionState.SPEECH_READY, SessionState.ANIMATED}),
    Stage.NOVEL_VIEW: frozenset({SessionState.ANIMATED, SessionState.POST_PROCESSED}),
    Stage.STYLE: frozenset({SessionState.ANIMATED, SessionState.POST_PROCESSED}),
    Stage.SUPER_RESOLVE: frozenset({SessionState.ANIMATED, SessionState.POST_PROCESSED}),
    Stage.ASSESS: frozenset(
        {SessionState.ANIMATED, SessionState.POST_PROCESSED, SessionState.ASSESSED}
    ),
}

# Produced clips in pipeline position order; "latest" means rightmost.
VIDEO_CHAIN = ("animation", "novel_view", "styled", "super_resolved")
_STYLE_SOURCES = ("animation", "novel_view")
_SR_SOURCES = ("animation", "novel_view", "styled")
_DOWNSTREAM_OF_ANIMATE = ("novel_view", "styled", "super_resolved", "report")


def resolve_selection(options, choice: int | None = None):
    """Pick one option: an explicit index wins, otherwise the latest."""
    options = list(options)
    if not options:
        raise InvalidInputError("no options to select from")
    if choice is None:
        return options[-1]
    if not (0 <= choice < len(options)):
        raise InvalidInputError(
            f"selection index {choice} outside [0, {len(options) - 1}]"
        )
    return options[choice]


@dataclass(frozen=True)
class ManifestRow:
    stage: str
    operation: str
    input_ids: tuple[str, ...]
    output_id: str | None
    backend: str | None
    wall_ms: float

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "operation": self.operation,
            "inputs": list(self.input_ids),
            "output": self.output_id,
            "backend": self.backend,
            "wall_ms": round(self.wall_ms, 3),
        }


@dataclass
class RunManifest:
    session_id: str
    config: dict
    rows: list[ManifestRow] = field(default_factory=list)

    def output_ids(self) -> list[str]:
        return [row.output_id for row in self.rows if row.output_id is not None]

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "config": self.config,
            "rows": [row.to_dict() for row in self.rows],
        }


class PipelineSession:
    def __init__(self, session_id: str, max_history: int) -> None:
        self.session_id = session_id
        self.state = SessionState.CREATED
        self.conversation = ConversationSession(max_history=max_history)
        self.inputs: dict[str, ArtifactRef] = {}
        self.ages: list[tuple[int, ArtifactRef]] = []
        self.selected: ArtifactRef | None = None
        self.selections: dict = {}
        self.artifacts: dict[str, ArtifactRef] = {}
        self.flags: list[str] = []
        self.created_at = time.time()
        self.updated_at = self.created_at
        self.command_lock = threading.Lock()
        self.apply_lock = threading.Lock()

    def snapshot(self) -> dict:
        with self.apply_lock:
            return {
                "session_id": self.session_id,
                "state": self.state.value,
                "transcript": self.conversation.transcript(),
                "inputs": {name: ref.id for name, ref in self.inputs.items()},
                "ages": [{"age": age, "artifact_id": ref.id} for age, ref in self.ages],
                "selected": None if self.selected is None else self.selected.id,
                "selections": dict(self.selections),
                "artifacts": {name: ref.id for name, ref in self.artifacts.items()},
                "flags": list(self.flags),
                "created_at": self.created_at,
                "updated_at": self.updated_at,
            }

    def artifact_refs(self) -> list[ArtifactRef]:
        refs = list(self.inputs.values())
        refs.extend(ref for _, ref in self.ages)
        refs.extend(self.artifacts.values())
        return refs


class Orchestrator:
    def __init__(
        self,
        config: PipelineConfig | None = None,
        root: str | Path = "avatarkit-data",
        mocks: MockSuite | None = None,
        hub: BackendHub | None = None,
        catalog: app.GarmentCatalog | None = None,
    ) -> None:
        self.config = config or PipelineConfig()
        self.store = ArtifactStore(root)
        self.mocks = mocks or mock_suite()
        self.hub = hub or build_hub(self.config, mock_suite=self.mocks)
        self.catalog = catalog or app.builtin_catalog()
        self._garment_refs = {
            gid: self.store.put(self.catalog.entries[gid].image)
            for gid in self.catalog.ids()
        }
        self.sessions: dict[str, PipelineSession] = {}
        self.manifests: dict[str, RunManifest] = {}
        self._registry_lock = threading.Lock()

    # -- session plumbing ------------------------------------------------

    def create_session(self) -> PipelineSession:
        session = PipelineSession(uuid.uuid4().hex, self.config.max_history)
        with self._registry_lock:
            self.sessions[session.session_id] = session
            self.manifests[session.session_id] = RunManifest(
                session_id=session.session_id, config=self.config.to_dict()
            )
        self._persist(session)
        return session

    def session(self, session_id: str) -> PipelineSession:
        session = self.sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"no session {session_id}")
        return session

    def manifest(self, session_id: str) -> RunManifest:
        self.session(session_id)
        return self.manifests[session_id]

    @contextmanager
    def _command(self, session_id: str):
        session = self.session(session_id)
        if not session.command_lock.acquire(blocking=False):
            raise BusyError(f"session {session_id} already has a command in flight")
        try:
            yield session
        finally:
            session.command_lock.release()

    def _persist(self, session: PipelineSession) -> None:
        directory = self.store.root / "sessions" / session.session_id
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "session.json").write_text(
            json.dumps(session.snapshot(), indent=2) + "\n", "utf-8"
        )
        (directory / "manifest.json").write_text(
            json.dumps(self.manifests[session.session_id].to_dict(), indent=2) + "\n",
            "utf-8",
        )

    def _record(
        self,
        session: PipelineSession,
        stage: str,
        operation: str,
        input_refs,
        output_ref: ArtifactRef | None,
        backend: str | None,
        started: float,
    ) -> None:
        manifest = self.manifests[session.session_id]
        output_id = None if output_ref is None else output_ref.id
        if output_id is not None and any(r.output_id == output_id for r in manifest.rows):
            return  # rerun produced identical content; keep coverage exact
        manifest.rows.append(
            ManifestRow(
                stage=stage,
                operation=operation,
                input_ids=tuple(r.id for r in input_refs),
                output_id=output_id,
                backend=backend,
                wall_ms=(time.monotonic() - started) * 1000.0,
            )
        )

    def garment_listing(self) -> list[dict]:
        return [
            {
                "garment_id": gid,
                "label": self.catalog.entries[gid].label,
                "artifact_id": self._garment_refs[gid].id,
            }
            for gid in self.catalog.ids()
        ]

    def artifact_content(self, artifact_id: str) -> tuple[bytes, MediaKind]:
        ref = self.store.resolve(artifact_id)
        return self.store.get_bytes(ref), ref.kind

    # -- inputs and conversation ----------------------------------------

    def send_message(self, session_id: str, text: str) -> tuple[str, int]:
        with self._command(session_id) as session:
            reply = converse_round(session.conversation, TextDoc(text=text), self.hub.llm)
            with session.apply_lock:
                session.updated_at = time.time()
            self._persist(session)
            return reply.text, session.conversation.rounds[-1].index

    def submit_audio(self, session_id: str, clip: AudioClip) -> ArtifactRef:
        started = time.monotonic()
        with self._command(session_id) as session:
            ref = self.store.put(clip)
            previous = session.inputs.get("target_audio")
            with session.apply_lock:
                session.inputs["target_audio"] = ref
                if previous is not None and previous != ref:
                    session.flags.append("input-replaced:audio")
                session.updated_at = time.time()
            if previous != ref:
                self._record(session, "Input", "audio", (), ref, None, started)
            self._persist(session)
            return ref

    def submit_portrait(self, session_id: str, image: ImageFrame) -> ArtifactRef:
        started = time.monotonic()
        with self._command(session_id) as session:
            if session.state in (SessionState.POST_PROCESSED, SessionState.ASSESSED):
                raise StageOrderError(
                    "portrait can no longer be replaced once post-processing has begun"
                )
            ref = self.store.put(image)
            previous = session.inputs.get("portrait")
            with session.apply_lock:
                session.inputs["portrait"] = ref
                if previous is not None and previous != ref:
                    session.flags.append("input-replaced:portrait")
                if session.state is not SessionState.CREATED:
                    # appearance artifacts derived from the old portrait are stale
                    session.ages = []
                    session.selected = None
                    session.artifacts.pop("dressed", None)
                    session.selections.pop("age_index", None)
                    session.selections.pop("garment_id", None)
                session.state = SessionState.PORTRAIT_READY
                session.updated_at = time.time()
            if previous != ref:
                self._record(session, "Input", "portrait", (), ref, None, started)
            self._persist(session)
            return ref

    # -- stages ----------------------------------------------------------

    def run_stage(self, session_id: str, stage: Stage, params: dict | None = None):
        """Run one pipeline stage; returns (artifact ref or None, state)."""
        params = params or {}
        with self._command(session_id) as session:
            allowed = _STAGE_STATES[stage]
            if session.state not in allowed:
                raise StageOrderError(
                    f"stage {stage.value} not allowed in state {session.state.value}"
                )
            handler = getattr(self, f"_stage_{stage.name.lower()}")
            ref = handler(session, params)
            self._persist(session)
            return ref, session.state

    def _resolve_source(
        self, session: PipelineSession, params: dict, allowed: tuple[str, ...], stage: str
    ) -> tuple[str, ArtifactRef]:
        source = params.get("source")
        if source is not None:
            if source not in VIDEO_CHAIN:
                raise InvalidInputError(f"unknown clip source {source!r}")
            if source not in allowed:
                raise InvalidInputError(
                    f"{stage} cannot consume the {source} clip"
                )
            if source not in session.artifacts:
                raise InvalidInputError(f"the {source} clip has not been generated")
            return source, session.artifacts[source]
        present = [
            (name, session.artifacts[name])
            for name in allowed
            if name in session.artifacts
        ]
        return resolve_selection(present)

    def _stage_ages(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        ages = params.get("ages")
        if ages is None:
            ages = list(self.config.age_grid)
        portrait_ref = session.inputs["portrait"]
        portrait = self.store.get(portrait_ref)
        age_set = app.transform_ages(portrait, ages, self.hub.age)
        refs = [(age, self.store.put(image)) for age, image in age_set.entries]
        with session.apply_lock:
            session.ages = refs
            session.selected = None
            session.artifacts.pop("dressed", None)
            session.selections.pop("age_index", None)
            session.state = SessionState.AGES_GENERATED
            session.updated_at = time.time()
        for _, ref in refs:
            self._record(session, "Ages", "age", (portrait_ref,), ref, "age", started)
        return None

    def _stage_select_appearance(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        index = params.get("index")
        if index is not None and not isinstance(index, int):
            raise InvalidInputError("selection index must be an integer")
        if session.ages:
            chosen = resolve_selection([ref for _, ref in session.ages], index)
            actual = index if index is not None else len(session.ages) - 1
        else:
            if index not in (None, 0):
                raise InvalidInputError(
                    "no age set generated; only the portrait (index 0) is selectable"
                )
            chosen = session.inputs["portrait"]
            actual = None
        with session.apply_lock:
            session.selected = chosen
            session.artifacts.pop("dressed", None)
            if actual is None:
                session.selections.pop("age_index", None)
            else:
                session.selections["age_index"] = actual
            session.selections.pop("garment_id", None)
            session.state = SessionState.APPEARANCE_SELECTED
            session.updated_at = time.time()
        self._record(session, "SelectAppearance", "select", (chosen,), None, None, started)
        return chosen

    def _stage_dress(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        garment_id = params.get("garment_id")
        if not garment_id:
            raise InvalidInputError("Dress requires a garment_id")
        entry = self.catalog.get(garment_id)
        image = self.store.get(session.selected)
        dressed = app.dress(image, entry, self.hub.dress)
        ref = self.store.put(dressed)
        with session.apply_lock:
            session.artifacts["dressed"] = ref
            session.selections["garment_id"] = garment_id
            session.updated_at = time.time()
        self._record(
            session,
            "Dress",
            "dress",
            (session.selected, self._garment_refs[garment_id]),
            ref,
            "dress",
            started,
        )
        return ref

    def _stage_speak(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        text = params.get("text")
        if text is None:
            if not session.conversation.rounds:
                raise StageOrderError(
                    "Speak needs a conversation reply or an explicit text param"
                )
            text = session.conversation.rounds[-1].reply_text.text
        audio_ref = session.inputs.get("target_audio")
        target = None if audio_ref is None else self.store.get(audio_ref)
        clip = make_speech(TextDoc(text=str(text)), target, self.hub)
        ref = self.store.put(clip)
        with session.apply_lock:
            session.artifacts["speech"] = ref
            session.state = SessionState.SPEECH_READY
            session.updated_at = time.time()
        operation = "tts" if target is None else "clone"
        inputs = () if audio_ref is None else (audio_ref,)
        self._record(session, "Speak", operation, inputs, ref, operation, started)
        return ref

    def _stage_animate(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        raw_method = params.get("method", anim.DriveMethod.INDEPENDENT.value)
        try:
            method = anim.DriveMethod(raw_method)
        except ValueError:
            raise InvalidInputError(f"unknown drive method {raw_method!r}") from None
        avatar_id = params.get("avatar_id", anim.DEFAULT_AVATAR_ID)
        image_ref = session.artifacts.get("dressed") or session.selected
        image = self.store.get(image_ref)
        speech_ref = session.artifacts["speech"]
        speech = self.store.get(speech_ref)
        clip = anim.animate(image, speech, method, self.hub, self.config.fps, avatar_id)
        ref = self.store.put(clip)
        with session.apply_lock:
            for stale in _DOWNSTREAM_OF_ANIMATE:
                session.artifacts.pop(stale, None)
            for stale_key in ("style_id", "sr_scale", "novel_view"):
                session.selections.pop(stale_key, None)
            session.artifacts["animation"] = ref
            session.selections["drive_method"] = method.value
            session.state = SessionState.ANIMATED
            session.updated_at = time.time()
        self._record(
            session, "Animate", method.value, (image_ref, speech_ref), ref, method.value, started
        )
        return ref

    def _stage_novel_view(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        try:
            sweep = float(params.get("sweep_degrees", anim.DEFAULT_SWEEP_DEGREES))
        except (TypeError, ValueError):
            raise InvalidInputError("sweep_degrees must be a number") from None
        source_ref = session.artifacts["animation"]
        clip = self.store.get(source_ref)
        out = anim.synthesize_novel_view(clip, self.hub.novel_view, sweep)
        ref = self.store.put(out)
        with session.apply_lock:
            session.artifacts["novel_view"] = ref
            session.selections["novel_view"] = True
            session.state = SessionState.POST_PROCESSED
            session.updated_at = time.time()
        self._record(session, "NovelView", "novel_view", (source_ref,), ref, "novel_view", started)
        return ref

    def _stage_style(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        style_id = params.get("style_id", self.config.style_id)
        preset = post.get_style_preset(style_id)
        _, source_ref = self._resolve_source(session, params, _STYLE_SOURCES, "Style")
        clip = self.store.get(source_ref)
        out = post.style_transfer(clip, preset, self.hub.style)
        ref = self.store.put(out)
        with session.apply_lock:
            session.artifacts["styled"] = ref
            session.selections["style_id"] = style_id
            session.state = SessionState.POST_PROCESSED
            session.updated_at = time.time()
        self._record(session, "Style", "style", (source_ref,), ref, "style", started)
        return ref

    def _stage_super_resolve(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        scale = params.get("scale", self.config.sr_scale)
        if not isinstance(scale, int) or isinstance(scale, bool):
            raise InvalidInputError("scale must be an integer")
        _, source_ref = self._resolve_source(session, params, _SR_SOURCES, "SuperResolve")
        clip = self.store.get(source_ref)
        out = post.super_resolve(clip, scale, self.hub.super_resolve)
        ref = self.store.put(out)
        with session.apply_lock:
            session.artifacts["super_resolved"] = ref
            session.selections["sr_scale"] = scale
            session.state = SessionState.POST_PROCESSED
            session.updated_at = time.time()
        self._record(
            session, "SuperResolve", "super_resolve", (source_ref,), ref, "super_resolve", started
        )
        return ref

    def _stage_assess(self, session: PipelineSession, params: dict):
        started = time.monotonic()
        _, source_ref = self._resolve_source(session, params, VIDEO_CHAIN, "Assess")
        clip = self.store.get(source_ref)
        report = assess_quality(clip, self.hub.vqa_backends())
        ref = self.store.put_bytes(report_to_json(report), MediaKind.REPORT)
        with session.apply_lock:
            session.artifacts["report"] = ref
            session.state = SessionState.ASSESSED
            session.updated_at = time.time()
        self._record(session, "Assess", "assess", (source_ref,), ref, None, started)
        return ref
