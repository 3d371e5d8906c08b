"""Deterministic in-process mock of every model backend.

Each mock realizes the pinned contract for its stage so the whole pipeline
runs and verifies at desk scale with zero network and zero randomness:

* llm            reply "echo[n]: <text>", n = completed pairs in the body + 1
* tts            per code point: 75 ms sine at 220 + (cp mod 26) * 20 Hz,
                 amplitude 0.3 of full scale, padded to at least 200 ms
* voiceprint     RMS over non-overlapping 400-sample windows, then the 64
                 nearest-rank quantiles at p = k/63
* clone          tts waveform scaled by clamp(mean(features)/0.3, 0.5, 1.5)
* age            every channel value shifted by (age - 35), clamped; 35 is
                 the identity age
* dress          lower 40 percent of rows replaced by the garment,
                 nearest-neighbor resampled
* drive_*        one frame per 1/fps of speech; frame t carries a (t mod
                 256) gray 8x8 marker top-left and a mouth-region
                 brightness offset proportional to that frame's speech RMS
* retarget       target image plus the driven frame's 8x8 marker
* novel_view     horizontal shift of round(w/8 * sin(2*pi*t/N)), edge clamp
* style          per-channel 256-entry LUT (after an optional luma
                 collapse, which is how the mono preset works)
* super_resolve  bilinear upsampling with half-pixel centers
* vqa:<metric>   hash of the bundle bytes mapped into the declared range

All mocks are pure functions of their request payloads. The call log
records (operation, request_id) in invocation order and is safe to read
from other threads.
"""

from __future__ import annotations

import hashlib
import math
import threading

import numpy as np

from .animation import get_avatar
from .backends import (
    BACKEND_NAMES,
    BackendDescriptor,
    BackendRequest,
    BackendResponse,
    MediaPart,
)
from .errors import BackendProtocolError, InvariantViolation
from .media import (
    AudioClip,
    AUDIO_SAMPLE_RATE,
    ImageFrame,
    MediaKind,
    VideoClip,
    decode_png,
    decode_video_bundle,
    decode_wav,
    encode_png,
    encode_video_bundle,
    encode_wav,
)
from .postprocess import get_style_preset

TTS_SAMPLES_PER_CHAR = 1200          # 75 ms at 16 kHz
TTS_MIN_SAMPLES = 3200               # 200 ms floor
TTS_AMPLITUDE = 0.3 * 32767.0
TTS_BASE_HZ = 220.0
TTS_STEP_HZ = 20.0
VOICEPRINT_WINDOW = 400
VOICEPRINT_BINS = 64
AGE_IDENTITY = 35
MARKER_SIDE = 8
MOUTH_OSC_GAIN = 80.0
MOUTH_OSC_PERIOD = 8.0
FULL_SCALE = 32767.0


def frame_count_for(duration_seconds: float, fps: float) -> int:
    """Pinned audio/video alignment: round half up, at least one frame."""
    return max(1, int(math.floor(duration_seconds * fps + 0.5)))


def tts_waveform(text: str) -> bytes:
    """PCM16 bytes of the mock prosody for ``text``."""
    values = []
    for ch in text:
        freq = TTS_BASE_HZ + (ord(ch) % 26) * TTS_STEP_HZ
        for i in range(TTS_SAMPLES_PER_CHAR):
            values.append(
                int(round(TTS_AMPLITUDE * math.sin(2.0 * math.pi * freq * i / AUDIO_SAMPLE_RATE)))
            )
    if len(values) < TTS_MIN_SAMPLES:
        values.extend([0] * (TTS_MIN_SAMPLES - len(values)))
    return np.asarray(values, dtype="<i2").tobytes()


def voiceprint_features(clip: AudioClip) -> list[float]:
    """Window RMS quantiles; sorted, hence non-decreasing by construction."""
    raw = clip.values()
    window_count = len(raw) // VOICEPRINT_WINDOW
    rms = []
    for w in range(window_count):
        window = raw[w * VOICEPRINT_WINDOW:(w + 1) * VOICEPRINT_WINDOW]
        acc = 0.0
        for s in window:
            x = s / FULL_SCALE
            acc += x * x
        rms.append(math.sqrt(acc / VOICEPRINT_WINDOW))
    rms.sort()
    features = []
    for k in range(VOICEPRINT_BINS):
        idx = int(math.floor(k / (VOICEPRINT_BINS - 1) * (window_count - 1) + 0.5))
        features.append(rms[idx])
    return features


def clone_scale(features) -> float:
    mean = sum(features) / len(features)
    return min(1.5, max(0.5, mean / 0.3))


def scale_pcm(pcm: bytes, scale: float) -> bytes:
    values = np.frombuffer(pcm, dtype="<i2")
    scaled = [int(round(scale * int(v))) for v in values]
    clipped = np.clip(scaled, -32768, 32767).astype("<i2")
    return clipped.tobytes()


def age_shift(image: ImageFrame, age: int) -> ImageFrame:
    arr = image.to_array().astype(np.int16)
    arr = np.clip(arr + (age - AGE_IDENTITY), 0, 255).astype(np.uint8)
    return ImageFrame.from_array(arr)


def nn_resize(arr: np.ndarray, dst_w: int, dst_h: int) -> np.ndarray:
    """Nearest neighbor with the pinned index map src = (dst * src) // dst."""
    src_h, src_w = arr.shape[:2]
    ys = (np.arange(dst_h) * src_h) // dst_h
    xs = (np.arange(dst_w) * src_w) // dst_w
    return arr[np.ix_(ys, xs)]


def dress_lower_rows(image: ImageFrame, garment: ImageFrame) -> ImageFrame:
    """Replace rows below the 60 percent line with the resampled garment."""
    arr = image.to_array()
    top_rows = int(image.height * 0.6)
    region_h = image.height - top_rows
    garment_region = nn_resize(garment.to_array(), image.width, region_h)
    arr[top_rows:, :, :] = garment_region
    return ImageFrame.from_array(arr)


def _frame_rms(raw: np.ndarray, t: int, fps: float) -> float:
    start = min(len(raw), int(math.floor(t * AUDIO_SAMPLE_RATE / fps)))
    end = min(len(raw), int(math.floor((t + 1) * AUDIO_SAMPLE_RATE / fps)))
    if end <= start:
        return 0.0
    window = raw[start:end].astype(np.float64) / FULL_SCALE
    return float(np.sqrt(np.mean(window * window)))


def _mouth_region(w: int, h: int) -> tuple[slice, slice]:
    return (slice(int(h * 0.65), int(h * 0.85)), slice(int(w * 0.35), int(w * 0.65)))


def drive_frames(image: ImageFrame, speech: AudioClip, fps: float) -> VideoClip:
    """Both drive mocks: marker square plus RMS-scaled mouth oscillation."""
    n = frame_count_for(speech.duration_seconds, fps)
    raw = speech.values()
    base = image.to_array()
    rows, cols = _mouth_region(image.width, image.height)
    frames = []
    for t in range(n):
        arr = base.copy()
        arr[:MARKER_SIDE, :MARKER_SIDE, :] = t % 256
        rms = _frame_rms(raw, t, fps)
        offset = int(round(MOUTH_OSC_GAIN * rms * math.sin(2.0 * math.pi * t / MOUTH_OSC_PERIOD)))
        if offset != 0:
            region = arr[rows, cols].astype(np.int16)
            arr[rows, cols] = np.clip(region + offset, 0, 255).astype(np.uint8)
        frames.append(ImageFrame.from_array(arr))
    return VideoClip(frames=tuple(frames), fps=fps, audio=speech)


def retarget_frames(driven: VideoClip, target: ImageFrame) -> VideoClip:
    base = target.to_array()
    frames = []
    for src in driven.frames:
        arr = base.copy()
        arr[:MARKER_SIDE, :MARKER_SIDE, :] = src.to_array()[:MARKER_SIDE, :MARKER_SIDE, :]
        frames.append(ImageFrame.from_array(arr))
    return VideoClip(frames=tuple(frames), fps=driven.fps, audio=driven.audio)


def novel_view_frames(video: VideoClip) -> VideoClip:
    n = video.frame_count
    w = video.width
    frames = []
    for t, frame in enumerate(video.frames):
        shift = int(round(w / 8.0 * math.sin(2.0 * math.pi * t / n)))
        arr = frame.to_array()
        src_cols = np.clip(np.arange(w) - shift, 0, w - 1)
        frames.append(ImageFrame.from_array(arr[:, src_cols, :]))
    return VideoClip(frames=tuple(frames), fps=video.fps, audio=video.audio)


def apply_style(video: VideoClip, style_id: str) -> VideoClip:
    preset = get_style_preset(style_id)
    lut = np.asarray(preset.lut, dtype=np.uint8)
    frames = []
    for frame in video.frames:
        arr = frame.to_array()
        if preset.to_luma:
            luma = np.round(
                0.299 * arr[:, :, 0].astype(np.float64)
                + 0.587 * arr[:, :, 1].astype(np.float64)
                + 0.114 * arr[:, :, 2].astype(np.float64)
            ).astype(np.uint8)
            arr = np.repeat(luma[:, :, None], 3, axis=2)
        frames.append(ImageFrame.from_array(lut[arr]))
    return VideoClip(frames=tuple(frames), fps=video.fps, audio=video.audio)


def bilinear_upsample(arr: np.ndarray, scale: int) -> np.ndarray:
    """Half-pixel-center bilinear; rounding pinned to floor(v + 0.5)."""
    if scale == 1:
        return arr.copy()
    src_h, src_w = arr.shape[:2]
    dst_h, dst_w = src_h * scale, src_w * scale
    sy = (np.arange(dst_h) + 0.5) / scale - 0.5
    sx = (np.arange(dst_w) + 0.5) / scale - 0.5
    y0 = np.clip(np.floor(sy).astype(int), 0, src_h - 1)
    x0 = np.clip(np.floor(sx).astype(int), 0, src_w - 1)
    y1 = np.clip(y0 + 1, 0, src_h - 1)
    x1 = np.clip(x0 + 1, 0, src_w - 1)
    fy = np.clip(sy - y0, 0.0, 1.0)[:, None, None]
    fx = np.clip(sx - x0, 0.0, 1.0)[None, :, None]
    p = arr.astype(np.float64)
    p00 = p[np.ix_(y0, x0)]
    p01 = p[np.ix_(y0, x1)]
    p10 = p[np.ix_(y1, x0)]
    p11 = p[np.ix_(y1, x1)]
    v = (1.0 - fy) * ((1.0 - fx) * p00 + fx * p01) + fy * ((1.0 - fx) * p10 + fx * p11)
    return np.floor(v + 0.5).astype(np.uint8)


def super_resolve_frames(video: VideoClip, scale: int) -> VideoClip:
    frames = [
        ImageFrame.from_array(bilinear_upsample(f.to_array(), scale))
        for f in video.frames
    ]
    return VideoClip(frames=tuple(frames), fps=video.fps, audio=video.audio)


def vqa_score(metric: str, bundle: bytes, lo: float, hi: float) -> float:
    """Deterministic stand-in score: metric-seeded hash of the clip bytes."""
    digest = hashlib.sha256(metric.encode("utf-8") + b"\x00" + bundle).digest()
    u = int.from_bytes(digest[:8], "big") / 2.0 ** 64
    return lo + (hi - lo) * u


class MockSuite:
    """Dispatcher holding one handler per backend name plus the call log."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._log: list[tuple[str, str]] = []
        self._handlers = {name: getattr(self, f"_op_{name}") for name in BACKEND_NAMES}

    # -- log ------------------------------------------------------------

    @property
    def call_log(self) -> list[tuple[str, str]]:
        with self._lock:
            return list(self._log)

    def operations(self) -> list[str]:
        return [op for op, _ in self.call_log]

    def reset_log(self) -> None:
        with self._lock:
            self._log.clear()

    # -- dispatch -------------------------------------------------------

    def dispatch(self, desc: BackendDescriptor, request: BackendRequest) -> BackendResponse:
        with self._lock:
            self._log.append((request.operation, request.request_id))
        if desc.name.startswith("vqa:") or request.operation == "vqa":
            handler = self._op_vqa
        else:
            handler = self._handlers.get(desc.name)
        if handler is None:
            raise InvariantViolation(f"no mock handler for backend {desc.name!r}")
        return handler(desc, request)

    def names(self) -> list[str]:
        return list(BACKEND_NAMES)

    # -- helpers --------------------------------------------------------

    @staticmethod
    def _media(request: BackendRequest, role: str, kind: MediaKind) -> bytes:
        for part in request.media:
            if part.role == role:
                if part.kind != kind:
                    raise BackendProtocolError(
                        f"media part {role!r} has kind {part.kind.value}, expected {kind.value}"
                    )
                return part.data
        raise BackendProtocolError(f"request missing media part {role!r}")

    @staticmethod
    def _ok(request: BackendRequest, values: dict | None = None, media=()) -> BackendResponse:
        return BackendResponse(
            request_id=request.request_id,
            status="ok",
            values=values or {},
            media=tuple(media),
        )

    # -- handlers -------------------------------------------------------

    def _op_llm(self, desc, request):
        messages = request.params.get("messages")
        if not messages:
            raise BackendProtocolError("llm request carries no messages")
        user_text = messages[0].get("text", "")
        pairs = sum(1 for m in messages[1:] if m.get("role") == "pair")
        return self._ok(request, values={"reply": f"echo[{pairs + 1}]: {user_text}"})

    def _op_tts(self, desc, request):
        text = request.params.get("text", "")
        pcm = tts_waveform(text)
        part = MediaPart(role="speech", kind=MediaKind.AUDIO, data=encode_wav(AudioClip(samples=pcm)))
        return self._ok(request, media=[part])

    def _op_voiceprint(self, desc, request):
        clip = decode_wav(self._media(request, "audio", MediaKind.AUDIO))
        features = voiceprint_features(clip)
        return self._ok(
            request,
            values={"features": features, "source_duration": clip.duration_seconds},
        )

    def _op_clone(self, desc, request):
        text = request.params.get("text", "")
        features = request.params.get("features")
        if not features:
            raise BackendProtocolError("clone request carries no voiceprint features")
        pcm = scale_pcm(tts_waveform(text), clone_scale(features))
        part = MediaPart(role="speech", kind=MediaKind.AUDIO, data=encode_wav(AudioClip(samples=pcm)))
        return self._ok(request, media=[part])

    def _op_age(self, desc, request):
        portrait = decode_png(self._media(request, "portrait", MediaKind.IMAGE))
        ages = request.params.get("ages")
        if not ages:
            raise BackendProtocolError("age request carries no ages")
        media = [
            MediaPart(role="aged", kind=MediaKind.IMAGE, data=encode_png(age_shift(portrait, int(a))))
            for a in ages
        ]
        return self._ok(request, values={"ages": list(ages)}, media=media)

    def _op_dress(self, desc, request):
        image = decode_png(self._media(request, "image", MediaKind.IMAGE))
        garment = decode_png(self._media(request, "garment", MediaKind.IMAGE))
        out = dress_lower_rows(image, garment)
        return self._ok(request, media=[MediaPart("dressed", MediaKind.IMAGE, encode_png(out))])

    def _op_drive_independent(self, desc, request):
        image = decode_png(self._media(request, "image", MediaKind.IMAGE))
        speech = decode_wav(self._media(request, "speech", MediaKind.AUDIO))
        fps = float(request.params.get("fps", 25))
        clip = drive_frames(image, speech, fps)
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_drive_dependent(self, desc, request):
        speech = decode_wav(self._media(request, "speech", MediaKind.AUDIO))
        fps = float(request.params.get("fps", 25))
        avatar = get_avatar(request.params.get("avatar_id", "default"))
        clip = drive_frames(avatar.image, speech, fps)
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_retarget(self, desc, request):
        driven = decode_video_bundle(self._media(request, "video", MediaKind.VIDEO))
        target = decode_png(self._media(request, "target", MediaKind.IMAGE))
        clip = retarget_frames(driven, target)
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_novel_view(self, desc, request):
        video = decode_video_bundle(self._media(request, "video", MediaKind.VIDEO))
        clip = novel_view_frames(video)
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_style(self, desc, request):
        video = decode_video_bundle(self._media(request, "video", MediaKind.VIDEO))
        clip = apply_style(video, request.params.get("style_id", "identity"))
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_super_resolve(self, desc, request):
        video = decode_video_bundle(self._media(request, "video", MediaKind.VIDEO))
        scale = int(request.params.get("scale", 1))
        clip = super_resolve_frames(video, scale)
        return self._ok(request, media=[MediaPart("video", MediaKind.VIDEO, encode_video_bundle(clip))])

    def _op_vqa(self, desc, request):
        bundle = self._media(request, "video", MediaKind.VIDEO)
        metric = request.params.get("metric")
        if not metric and desc.name.startswith("vqa:"):
            metric = desc.name.split(":", 1)[1]
        lo, hi = request.params.get("range") or desc.metadata.get("range", (0.0, 1.0))
        score = vqa_score(str(metric or ""), bundle, float(lo), float(hi))
        return self._ok(request, values={"score": score})


def mock_suite() -> MockSuite:
    """A fresh mock suite covering every backend in the closed name set."""
    return MockSuite()
