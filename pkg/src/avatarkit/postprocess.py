"""Optional post-processing: style transfer and super-resolution.

Which clips each stage may consume (style never runs after
super-resolution) is enforced by the orchestrator; this module checks
the local arguments and the backend's shape obligations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends import Backend, MediaPart
from .errors import BackendProtocolError, InvalidInputError, InvariantViolation
from .media import MediaKind, VideoClip, decode_video_bundle, encode_video_bundle

SR_SCALES = (1, 2, 4)


@dataclass(frozen=True)
class StylePreset:
    """A style as the mock realizes it: per-channel LUT, optional
    luma collapse first (that is how the mono preset grays frames out).
    Real backends receive only the style_id."""

    style_id: str
    lut: tuple[int, ...]
    to_luma: bool = False

    def __post_init__(self) -> None:
        if len(self.lut) != 256:
            raise InvariantViolation("style LUT must have 256 entries")
        if any(not (0 <= v <= 255) for v in self.lut):
            raise InvariantViolation("style LUT entries must be in [0, 255]")


_IDENTITY = tuple(range(256))

STYLE_PRESETS: dict[str, StylePreset] = {
    "identity": StylePreset("identity", _IDENTITY),
    "mono": StylePreset("mono", _IDENTITY, to_luma=True),
    "invert": StylePreset("invert", tuple(255 - v for v in _IDENTITY)),
}


def get_style_preset(style_id: str) -> StylePreset:
    preset = STYLE_PRESETS.get(style_id)
    if preset is None:
        raise InvalidInputError(f"unknown style id {style_id!r}")
    return preset


def _video_request(backend: Backend, operation: str, video: VideoClip, params: dict) -> VideoClip:
    part = MediaPart(role="video", kind=MediaKind.VIDEO, data=encode_video_bundle(video))
    response = backend.invoke(operation, params=params, media=[part])
    return decode_video_bundle(backend.single_media(response, MediaKind.VIDEO))


def _check_preserved(out: VideoClip, src: VideoClip, what: str, scale: int = 1) -> None:
    if out.frame_count != src.frame_count or out.fps != src.fps:
        raise BackendProtocolError(f"{what} must preserve frame count and fps")
    if (out.width, out.height) != (src.width * scale, src.height * scale):
        raise BackendProtocolError(f"{what} returned wrong frame dimensions")
    src_audio = None if src.audio is None else src.audio.samples
    out_audio = None if out.audio is None else out.audio.samples
    if out_audio != src_audio:
        raise BackendProtocolError(f"{what} must preserve audio")


def style_transfer(video: VideoClip, preset: StylePreset, backend: Backend) -> VideoClip:
    out = _video_request(backend, "style", video, {"style_id": preset.style_id})
    _check_preserved(out, video, "style transfer")
    return out


def super_resolve(video: VideoClip, scale: int, backend: Backend) -> VideoClip:
    if scale not in SR_SCALES:
        raise InvalidInputError(f"scale must be one of {SR_SCALES}, got {scale!r}")
    out = _video_request(backend, "super_resolve", video, {"scale": scale})
    _check_preserved(out, video, "super-resolution", scale=scale)
    return out
