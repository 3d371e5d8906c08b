"""Driving-speech synthesis: plain TTS or voice cloning.

The branch is decided by whether target audio was supplied. Cloning never
sees the raw audio; it receives only the compact voiceprint extracted
from it, so the clone backend's surface stays small and replayable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends import Backend, BackendHub, MediaPart
from .errors import BackendProtocolError, InvariantViolation
from .media import AudioClip, MediaKind, TextDoc, decode_wav, encode_wav

VOICEPRINT_SIZE = 64
MIN_CLONE_SOURCE_SECONDS = 0.1


@dataclass(frozen=True)
class Voiceprint:
    """64 non-decreasing, non-negative acoustic features plus provenance."""

    features: tuple[float, ...]
    source_duration: float

    def __post_init__(self) -> None:
        if len(self.features) != VOICEPRINT_SIZE:
            raise InvariantViolation(
                f"voiceprint must have {VOICEPRINT_SIZE} features, got {len(self.features)}"
            )
        if any(f < 0.0 for f in self.features):
            raise InvariantViolation("voiceprint features must be non-negative")
        if any(a > b for a, b in zip(self.features, self.features[1:])):
            raise InvariantViolation("voiceprint features must be non-decreasing")
        if self.source_duration <= 0.0:
            raise InvariantViolation("voiceprint source duration must be positive")


def extract_voiceprint(audio: AudioClip, backend: Backend) -> Voiceprint:
    if audio.duration_seconds < MIN_CLONE_SOURCE_SECONDS:
        raise InvariantViolation(
            f"target audio must be at least {MIN_CLONE_SOURCE_SECONDS} s"
        )
    part = MediaPart(role="audio", kind=MediaKind.AUDIO, data=encode_wav(audio))
    response = backend.invoke("voiceprint", media=[part])
    features = response.values.get("features")
    duration = response.values.get("source_duration")
    if not isinstance(features, list) or not isinstance(duration, (int, float)):
        raise BackendProtocolError("voiceprint reply must carry features and source_duration")
    try:
        return Voiceprint(
            features=tuple(float(f) for f in features),
            source_duration=float(duration),
        )
    except (TypeError, ValueError) as exc:
        raise BackendProtocolError(f"voiceprint reply malformed: {exc}") from exc
    except InvariantViolation as exc:
        raise BackendProtocolError(f"voiceprint reply invalid: {exc}") from exc


def _speech_clip(backend: Backend, operation: str, params: dict) -> AudioClip:
    response = backend.invoke(operation, params=params)
    return decode_wav(backend.single_media(response, MediaKind.AUDIO))


def synthesize_tts(text: TextDoc, backend: Backend) -> AudioClip:
    if not text.text:
        raise InvariantViolation("tts text must be nonempty")
    return _speech_clip(backend, "tts", {"text": text.text, "lang": text.lang})


def synthesize_cloned(text: TextDoc, vp: Voiceprint, backend: Backend) -> AudioClip:
    if not text.text:
        raise InvariantViolation("clone text must be nonempty")
    params = {"text": text.text, "lang": text.lang, "features": list(vp.features)}
    return _speech_clip(backend, "clone", params)


def make_speech(
    text: TextDoc, target_audio: AudioClip | None, backends: BackendHub
) -> AudioClip:
    """Exactly one synthesis branch runs: clone when target audio exists."""
    if not text.text:
        raise InvariantViolation("speech text must be nonempty")
    if target_audio is None:
        return synthesize_tts(text, backends.tts)
    vp = extract_voiceprint(target_audio, backends.voiceprint)
    return synthesize_cloned(text, vp, backends.clone)
