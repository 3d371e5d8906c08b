"""Canonical in-memory media values and their bit-stable serialization.

Every value that flows through the pipeline (text, PCM audio, RGB frames,
frame-sequence video) has exactly one byte-level encoding, so identical
values always hash to identical artifact ids:

* text        UTF-8 bytes, nothing else
* audio       RIFF/WAVE, PCM16LE, mono, 16 kHz
* image       PNG, 8-bit RGB, no interlace, single IDAT, filter 0
* video       flat "frame bundle" stream: a magic line, an entry index,
              then the entries ``manifest.json``, ``frame_000001.png`` ...
              and optionally ``audio.wav`` concatenated in index order

The video bundle also has an on-disk directory form (same entries as real
files) used by the artifact store and the ``qa`` CLI; both forms carry the
same manifest JSON ``{"fps": ..., "frame_count": ..., "audio": ...}``.

PNG encoding is done locally (fixed filter/compression) so output bytes
never depend on a library version; decoding accepts arbitrary PNGs via
Pillow so externally produced portraits and garments load fine.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct
import wave
import zlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InvariantViolation, MediaFormatError

AUDIO_SAMPLE_RATE = 16000
AUDIO_CHANNELS = 1
DEFAULT_FPS = 25.0
MIN_IMAGE_SIDE = 8

_BUNDLE_MAGIC = b"FRAMEBUNDLE/1\n"


class MediaKind(str, Enum):
    """Artifact payload kinds understood by the store and the service."""

    TEXT = "text"
    AUDIO = "audio"
    IMAGE = "image"
    VIDEO = "video"
    REPORT = "report"


class InputKind(str, Enum):
    """The three accepted input modalities."""

    TEXT = "text"
    AUDIO = "audio"
    PORTRAIT = "portrait"


@dataclass(frozen=True)
class TextDoc:
    """A piece of UTF-8 text with a BCP-47 language tag.

    The tag is transport metadata only; canonical serialization is the raw
    UTF-8 of ``text``.
    """

    text: str
    lang: str = "en"

    def __post_init__(self) -> None:
        if not isinstance(self.text, str):
            raise InvariantViolation("TextDoc.text must be a string")

    @property
    def stripped(self) -> str:
        return self.text.strip()


@dataclass(frozen=True)
class AudioClip:
    """Mono PCM16 audio at the canonical 16 kHz rate.

    ``samples`` holds little-endian signed 16-bit frames as raw bytes.
    """

    samples: bytes
    sample_rate: int = AUDIO_SAMPLE_RATE
    channels: int = AUDIO_CHANNELS

    def __post_init__(self) -> None:
        if self.sample_rate != AUDIO_SAMPLE_RATE:
            raise InvariantViolation(
                f"sample_rate must be {AUDIO_SAMPLE_RATE}, got {self.sample_rate}"
            )
        if self.channels != AUDIO_CHANNELS:
            raise InvariantViolation(f"channels must be 1, got {self.channels}")
        if not isinstance(self.samples, bytes) or len(self.samples) == 0:
            raise InvariantViolation("samples must be nonempty bytes")
        if len(self.samples) % 2 != 0:
            raise InvariantViolation("samples must hold whole 16-bit frames")

    @classmethod
    def from_values(cls, values) -> "AudioClip":
        """Build a clip from an iterable of int16 sample values."""
        arr = np.asarray(values, dtype=np.int16)
        return cls(samples=arr.astype("<i2").tobytes())

    def values(self) -> np.ndarray:
        """Samples as an int16 numpy array (a read-only view of the bytes)."""
        return np.frombuffer(self.samples, dtype="<i2")

    @property
    def num_samples(self) -> int:
        return len(self.samples) // 2

    @property
    def duration_seconds(self) -> float:
        return self.num_samples / self.sample_rate


@dataclass(frozen=True)
class ImageFrame:
    """An RGB8 raster, row-major, three bytes per pixel."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self) -> None:
        if self.width < MIN_IMAGE_SIDE or self.height < MIN_IMAGE_SIDE:
            raise InvariantViolation(
                f"image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, "
                f"got {self.width}x{self.height}"
            )
        expect = self.width * self.height * 3
        if not isinstance(self.pixels, bytes) or len(self.pixels) != expect:
            raise InvariantViolation(
                f"pixel buffer must hold exactly {expect} bytes"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageFrame":
        """Build from an (H, W, 3) uint8 array."""
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise InvariantViolation("expected an (H, W, 3) array")
        h, w = arr.shape[:2]
        return cls(width=w, height=h, pixels=arr.tobytes())

    def to_array(self) -> np.ndarray:
        """Pixels as an (H, W, 3) uint8 array (copy, safe to mutate)."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, 3).copy()

    @property
    def size(self) -> tuple[int, int]:
        return (self.width, self.height)


@dataclass(frozen=True)
class VideoClip:
    """An ordered frame sequence plus frame rate and optional audio track."""

    frames: tuple[ImageFrame, ...]
    fps: float = DEFAULT_FPS
    audio: AudioClip | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "fps", float(self.fps))
        if len(self.frames) < 1:
            raise InvariantViolation("a video needs at least one frame")
        if not (self.fps > 0):
            raise InvariantViolation("fps must be positive")
        first = self.frames[0]
        for f in self.frames:
            if f.size != first.size:
                raise InvariantViolation(
                    f"all frames must share dimensions; {f.size} != {first.size}"
                )
        if self.audio is not None:
            drift = abs(len(self.frames) / self.fps - self.audio.duration_seconds)
            if drift > 1.0 / self.fps:
                raise InvariantViolation(
                    f"audio/video duration drift {drift:.4f}s exceeds one frame"
                )

    @property
    def frame_count(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


MediaValue = TextDoc | AudioClip | ImageFrame | VideoClip


@dataclass(frozen=True)
class MediaInput:
    """Tagged union of the three input modalities."""

    kind: InputKind
    payload: MediaValue

    _EXPECTED = {
        InputKind.TEXT: TextDoc,
        InputKind.AUDIO: AudioClip,
        InputKind.PORTRAIT: ImageFrame,
    }

    def __post_init__(self) -> None:
        expected = self._EXPECTED[InputKind(self.kind)]
        if not isinstance(self.payload, expected):
            raise InvariantViolation(
                f"{self.kind.value} input requires a {expected.__name__} payload"
            )


@dataclass(frozen=True)
class ArtifactRef:
    """Content address of a serialized value: SHA-256 of its canonical bytes."""

    id: str
    kind: MediaKind

    def __post_init__(self) -> None:
        if len(self.id) != 64 or any(c not in "0123456789abcdef" for c in self.id):
            raise InvariantViolation("artifact id must be lowercase hex sha256")


def media_kind_of(value: MediaValue) -> MediaKind:
    if isinstance(value, TextDoc):
        return MediaKind.TEXT
    if isinstance(value, AudioClip):
        return MediaKind.AUDIO
    if isinstance(value, ImageFrame):
        return MediaKind.IMAGE
    if isinstance(value, VideoClip):
        return MediaKind.VIDEO
    raise InvariantViolation(f"not a media value: {type(value).__name__}")


def artifact_ref(value: MediaValue) -> ArtifactRef:
    """Content-address a media value by hashing its canonical bytes."""
    data = serialize_media(value)
    return ArtifactRef(id=hashlib.sha256(data).hexdigest(), kind=media_kind_of(value))


def artifact_ref_for_bytes(data: bytes, kind: MediaKind) -> ArtifactRef:
    return ArtifactRef(id=hashlib.sha256(data).hexdigest(), kind=kind)


# --- PNG ----------------------------------------------------------------

def _png_chunk(tag: bytes, data: bytes) -> bytes:
    body = tag + data
    return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def encode_png(frame: ImageFrame) -> bytes:
    """Encode as 8-bit RGB PNG: no interlace, filter 0, one IDAT chunk."""
    stride = frame.width * 3
    rows = np.frombuffer(frame.pixels, dtype=np.uint8).reshape(frame.height, stride)
    filtered = np.zeros((frame.height, stride + 1), dtype=np.uint8)
    filtered[:, 1:] = rows
    ihdr = struct.pack(">IIBBBBB", frame.width, frame.height, 8, 2, 0, 0, 0)
    idat = zlib.compress(filtered.tobytes(), 9)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", idat)
        + _png_chunk(b"IEND", b"")
    )


def decode_png(data: bytes) -> ImageFrame:
    """Decode any PNG (or other Pillow-readable raster) to an RGB8 frame."""
    try:
        img = Image.open(io.BytesIO(data))
        img = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise MediaFormatError(f"cannot decode image: {exc}") from exc
    return ImageFrame(width=img.width, height=img.height, pixels=img.tobytes())


# --- WAV ----------------------------------------------------------------

def encode_wav(clip: AudioClip) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(AUDIO_CHANNELS)
        w.setsampwidth(2)
        w.setframerate(AUDIO_SAMPLE_RATE)
        w.writeframes(clip.samples)
    return buf.getvalue()


def decode_wav(data: bytes) -> AudioClip:
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            channels = w.getnchannels()
            rate = w.getframerate()
            width = w.getsampwidth()
            frames = w.readframes(w.getnframes())
    except (wave.Error, EOFError) as exc:
        raise MediaFormatError(f"cannot decode WAV: {exc}") from exc
    if rate != AUDIO_SAMPLE_RATE:
        raise MediaFormatError(
            f"unsupported sample rate {rate}; expected {AUDIO_SAMPLE_RATE} "
            "(resampling is out of scope)"
        )
    if channels != AUDIO_CHANNELS:
        raise MediaFormatError(f"unsupported channel count {channels}; expected 1")
    if width != 2:
        raise MediaFormatError(f"unsupported sample width {width * 8} bit; expected 16")
    return AudioClip(samples=frames)


# --- video frame bundle -------------------------------------------------

def _canonical_fps(fps: float):
    return int(fps) if float(fps).is_integer() else float(fps)


def bundle_manifest_json(clip: VideoClip) -> bytes:
    manifest = {
        "fps": _canonical_fps(clip.fps),
        "frame_count": clip.frame_count,
        "audio": "audio.wav" if clip.audio is not None else None,
    }
    return json.dumps(manifest, separators=(",", ":")).encode("ascii")


def frame_entry_name(index: int) -> str:
    """1-based zero-padded frame file name, e.g. ``frame_000001.png``."""
    return f"frame_{index + 1:06d}.png"


def bundle_entries(clip: VideoClip) -> list[tuple[str, bytes]]:
    """Named entries of the bundle, in canonical order."""
    entries = [("manifest.json", bundle_manifest_json(clip))]
    for i, frame in enumerate(clip.frames):
        entries.append((frame_entry_name(i), encode_png(frame)))
    if clip.audio is not None:
        entries.append(("audio.wav", encode_wav(clip.audio)))
    return entries


def encode_video_bundle(clip: VideoClip) -> bytes:
    """Flat byte-stream form of the bundle (what gets hashed and served)."""
    entries = bundle_entries(clip)
    index = [{"name": name, "size": len(data)} for name, data in entries]
    out = io.BytesIO()
    out.write(_BUNDLE_MAGIC)
    out.write(json.dumps(index, separators=(",", ":")).encode("ascii"))
    out.write(b"\n")
    for _, data in entries:
        out.write(data)
    return out.getvalue()


def _parse_manifest(data: bytes) -> tuple[float, int, str | None]:
    try:
        manifest = json.loads(data.decode("utf-8"))
        fps = float(manifest["fps"])
        frame_count = int(manifest["frame_count"])
        audio_name = manifest["audio"]
    except (ValueError, KeyError, TypeError) as exc:
        raise MediaFormatError(f"bad bundle manifest: {exc}") from exc
    if audio_name is not None and not isinstance(audio_name, str):
        raise MediaFormatError("manifest audio must be a relative path or null")
    return fps, frame_count, audio_name


def _assemble_clip(
    fps: float, frame_count: int, audio_name: str | None,
    lookup,  # name -> bytes, raising KeyError when missing
) -> VideoClip:
    frames = []
    for i in range(frame_count):
        name = frame_entry_name(i)
        try:
            frames.append(decode_png(lookup(name)))
        except KeyError:
            raise MediaFormatError(f"bundle missing entry {name}") from None
    audio = None
    if audio_name is not None:
        try:
            audio = decode_wav(lookup(audio_name))
        except KeyError:
            raise MediaFormatError(f"bundle missing entry {audio_name}") from None
    return VideoClip(frames=tuple(frames), fps=fps, audio=audio)


def decode_video_bundle(data: bytes) -> VideoClip:
    if not data.startswith(_BUNDLE_MAGIC):
        raise MediaFormatError("not a frame bundle stream")
    rest = data[len(_BUNDLE_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise MediaFormatError("frame bundle missing entry index")
    try:
        index = json.loads(rest[:nl].decode("ascii"))
        offsets = {}
        pos = nl + 1
        for item in index:
            name, size = item["name"], int(item["size"])
            offsets[name] = rest[pos:pos + size]
            if len(offsets[name]) != size:
                raise MediaFormatError("frame bundle truncated")
            pos += size
    except (ValueError, KeyError, TypeError) as exc:
        raise MediaFormatError(f"bad frame bundle index: {exc}") from exc
    if "manifest.json" not in offsets:
        raise MediaFormatError("frame bundle missing manifest.json")
    fps, frame_count, audio_name = _parse_manifest(offsets["manifest.json"])
    return _assemble_clip(fps, frame_count, audio_name, lambda n: offsets[n])


def write_video_bundle_dir(clip: VideoClip, path: str | Path) -> None:
    """Materialize the bundle as a directory of real files."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for name, data in bundle_entries(clip):
        (root / name).write_bytes(data)


def read_video_bundle_dir(path: str | Path) -> VideoClip:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise MediaFormatError(f"no manifest.json under {root}")
    fps, frame_count, audio_name = _parse_manifest(manifest_path.read_bytes())

    def lookup(name: str) -> bytes:
        p = root / name
        if not p.is_file():
            raise KeyError(name)
        return p.read_bytes()

    return _assemble_clip(fps, frame_count, audio_name, lookup)


# --- uniform entry points ----------------------------------------------

def serialize_media(value: MediaValue) -> bytes:
    """Canonical bytes of a media value; identical value, identical bytes."""
    if isinstance(value, TextDoc):
        return value.text.encode("utf-8")
    if isinstance(value, AudioClip):
        return encode_wav(value)
    if isinstance(value, ImageFrame):
        return encode_png(value)
    if isinstance(value, VideoClip):
        return encode_video_bundle(value)
    raise InvariantViolation(f"cannot serialize {type(value).__name__}")


def deserialize_media(data: bytes, kind: MediaKind) -> MediaValue:
    """Inverse of :func:`serialize_media`; round-trips bit-exactly."""
    kind = MediaKind(kind)
    if kind == MediaKind.TEXT:
        try:
            return TextDoc(text=data.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise MediaFormatError(f"text is not valid UTF-8: {exc}") from exc
    if kind == MediaKind.AUDIO:
        return decode_wav(data)
    if kind == MediaKind.IMAGE:
        return decode_png(data)
    if kind == MediaKind.VIDEO:
        return decode_video_bundle(data)
    raise MediaFormatError(f"no media codec for kind {kind!r}")
