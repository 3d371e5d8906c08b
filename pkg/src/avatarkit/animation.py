"""Animation stages: speech-driven face animation and novel-view sweep.

Two driving paths exist. The person-independent path animates any input
image directly. The person-dependent path can only animate its canonical
avatar, so it always composes with retargeting, in that order, to land
the motion on the requested image.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .backends import Backend, BackendHub, MediaPart
from .errors import BackendProtocolError, InvalidInputError, InvariantViolation
from .media import (
    AudioClip,
    ImageFrame,
    MediaKind,
    VideoClip,
    decode_video_bundle,
    encode_png,
    encode_video_bundle,
    encode_wav,
)

MIN_SPEECH_SECONDS = 0.2
DEFAULT_AVATAR_ID = "default"
DEFAULT_SWEEP_DEGREES = 30.0


class DriveMethod(str, Enum):
    INDEPENDENT = "independent"
    DEPENDENT_RETARGET = "dependent_retarget"


@dataclass(frozen=True)
class CanonicalAvatar:
    """The fixed person the dependent driver was built for."""

    avatar_id: str
    image: ImageFrame


def _avatar_image() -> ImageFrame:
    h = w = 64
    yy, xx = np.mgrid[0:h, 0:w]
    arr = np.zeros((h, w, 3), dtype=np.uint8)
    arr[:, :, 0] = 40 + yy
    arr[:, :, 1] = 60 + yy // 2
    arr[:, :, 2] = 90
    face = (xx - 32) ** 2 * 484 + (yy - 30) ** 2 * 324 <= 324 * 484
    arr[face] = (200, 170, 150)
    arr[24:28, 22:28] = (30, 30, 60)
    arr[24:28, 36:42] = (30, 30, 60)
    arr[42:46, 26:38] = (150, 60, 60)
    return ImageFrame.from_array(arr)


_AVATARS: dict[str, CanonicalAvatar] = {}


def get_avatar(avatar_id: str) -> CanonicalAvatar:
    if avatar_id not in _AVATARS:
        if avatar_id != DEFAULT_AVATAR_ID:
            raise InvalidInputError(f"unknown avatar id {avatar_id!r}")
        _AVATARS[avatar_id] = CanonicalAvatar(DEFAULT_AVATAR_ID, _avatar_image())
    return _AVATARS[avatar_id]


def _require_speech(speech: AudioClip) -> None:
    if speech.duration_seconds < MIN_SPEECH_SECONDS:
        raise InvariantViolation(
            f"driving speech must be at least {MIN_SPEECH_SECONDS} s"
        )


def _decode_video(backend: Backend, response) -> VideoClip:
    return decode_video_bundle(backend.single_media(response, MediaKind.VIDEO))


def check_duration_law(clip: VideoClip, speech: AudioClip) -> None:
    """|N/fps - dur| <= 1/fps; every driver output must satisfy this."""
    drift = abs(clip.frame_count / clip.fps - speech.duration_seconds)
    if drift > 1.0 / clip.fps + 1e-9:
        raise BackendProtocolError(
            f"video/audio misaligned: {clip.frame_count} frames at {clip.fps} fps "
            f"vs {speech.duration_seconds:.3f} s speech"
        )


def _check_driven(
    clip: VideoClip, speech: AudioClip, fps: float, width: int, height: int, what: str
) -> None:
    if (clip.width, clip.height) != (width, height):
        raise BackendProtocolError(f"{what} changed frame dimensions")
    if clip.fps != fps:
        raise BackendProtocolError(f"{what} returned fps {clip.fps}, expected {fps}")
    if clip.audio is None or clip.audio.samples != speech.samples:
        raise BackendProtocolError(f"{what} must carry the driving speech unchanged")
    check_duration_law(clip, speech)


def drive_independent(
    image: ImageFrame, speech: AudioClip, backend: Backend, fps: float
) -> VideoClip:
    _require_speech(speech)
    parts = [
        MediaPart(role="image", kind=MediaKind.IMAGE, data=encode_png(image)),
        MediaPart(role="speech", kind=MediaKind.AUDIO, data=encode_wav(speech)),
    ]
    response = backend.invoke("drive_independent", params={"fps": fps}, media=parts)
    clip = _decode_video(backend, response)
    _check_driven(clip, speech, fps, image.width, image.height, "independent driver")
    return clip


def drive_dependent(
    speech: AudioClip, avatar: CanonicalAvatar, backend: Backend, fps: float
) -> VideoClip:
    _require_speech(speech)
    parts = [MediaPart(role="speech", kind=MediaKind.AUDIO, data=encode_wav(speech))]
    response = backend.invoke(
        "drive_dependent",
        params={"fps": fps, "avatar_id": avatar.avatar_id},
        media=parts,
    )
    clip = _decode_video(backend, response)
    _check_driven(
        clip, speech, fps, avatar.image.width, avatar.image.height, "dependent driver"
    )
    return clip


def retarget(driven: VideoClip, target: ImageFrame, backend: Backend) -> VideoClip:
    parts = [
        MediaPart(role="video", kind=MediaKind.VIDEO, data=encode_video_bundle(driven)),
        MediaPart(role="target", kind=MediaKind.IMAGE, data=encode_png(target)),
    ]
    response = backend.invoke("retarget", media=parts)
    clip = _decode_video(backend, response)
    if (clip.width, clip.height) != (target.width, target.height):
        raise BackendProtocolError("retarget output must match target dimensions")
    if clip.frame_count != driven.frame_count or clip.fps != driven.fps:
        raise BackendProtocolError("retarget must preserve frame count and fps")
    driven_audio = None if driven.audio is None else driven.audio.samples
    clip_audio = None if clip.audio is None else clip.audio.samples
    if clip_audio != driven_audio:
        raise BackendProtocolError("retarget must carry audio over unchanged")
    return clip


def animate(
    image: ImageFrame,
    speech: AudioClip,
    method: DriveMethod,
    backends: BackendHub,
    fps: float,
    avatar_id: str = DEFAULT_AVATAR_ID,
) -> VideoClip:
    """Drive ``image`` with ``speech`` along the chosen path.

    The dependent path is a strict sequence: drive the canonical avatar,
    then retarget onto ``image``. Both paths produce frames at the input
    image's dimensions with the speech attached.
    """
    if method is DriveMethod.INDEPENDENT:
        return drive_independent(image, speech, backends.drive_independent, fps)
    avatar = get_avatar(avatar_id)
    driven = drive_dependent(speech, avatar, backends.drive_dependent, fps)
    return retarget(driven, image, backends.retarget)


def synthesize_novel_view(
    video: VideoClip,
    backend: Backend,
    sweep_degrees: float = DEFAULT_SWEEP_DEGREES,
) -> VideoClip:
    """One sinusoidal yaw sweep baked into a clip of equal shape."""
    parts = [MediaPart(role="video", kind=MediaKind.VIDEO, data=encode_video_bundle(video))]
    response = backend.invoke(
        "novel_view", params={"sweep_degrees": sweep_degrees}, media=parts
    )
    clip = _decode_video(backend, response)
    if (clip.width, clip.height, clip.frame_count, clip.fps) != (
        video.width,
        video.height,
        video.frame_count,
        video.fps,
    ):
        raise BackendProtocolError("novel view must preserve clip shape")
    video_audio = None if video.audio is None else video.audio.samples
    clip_audio = None if clip.audio is None else clip.audio.samples
    if clip_audio != video_audio:
        raise BackendProtocolError("novel view must preserve audio")
    return clip
