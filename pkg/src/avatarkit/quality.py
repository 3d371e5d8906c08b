"""Quality assessment: local sharpness metric plus external video metrics.

The sharpness score is the cumulative probability of blur detection: the
fraction of edge pixels whose estimated blur probability stays below the
just-noticeable threshold. It is computed here from scratch, per frame,
then averaged over the clip. External learned metrics are remote
backends scoring the whole clip; their raw outputs are min-max
normalized over ranges the backend declares.

All constants are pinned for bit-stable reproducibility:

* luma = (0.299 r + 0.587 g) + 0.114 b, float, unrounded
* horizontal 3x3 Sobel response divided by its kernel sum 8; a pixel is
  an edge pixel when |response| > 20; border pixels never are
* 64x64 full blocks only; a block participates when its edge pixels
  exceed 0.2 percent of its area
* edge width: strict walk to the local luma extrema on either side
* block contrast <= 50 -> just-noticeable width 5, else 3
* P_blur = 1 - exp(-(width / w_jnb) ** 3.6); sharp when <= 0.63
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .backends import Backend, MediaPart
from .errors import AvatarKitError, InvalidInputError, InvariantViolation
from .media import (
    ArtifactRef,
    MediaKind,
    VideoClip,
    ImageFrame,
    artifact_ref_for_bytes,
    encode_video_bundle,
)

EDGE_THRESHOLD = 20.0
BLOCK_SIZE = 64
EDGE_BLOCK_FRACTION = 0.002
BETA = 3.6
CONTRAST_CUTOFF = 50.0
WIDTH_JNB_LOW_CONTRAST = 5.0
WIDTH_JNB_HIGH_CONTRAST = 3.0
P_JNB = 0.63
NO_EDGES_FLAG = "no-edges"


def _luma(arr: np.ndarray) -> np.ndarray:
    r = arr[:, :, 0].astype(np.float64)
    g = arr[:, :, 1].astype(np.float64)
    b = arr[:, :, 2].astype(np.float64)
    return (0.299 * r + 0.587 * g) + 0.114 * b


def _gradient(luma: np.ndarray) -> np.ndarray:
    """Normalized horizontal Sobel response; zero on the border."""
    grad = np.zeros_like(luma)
    right = (luma[:-2, 2:] + 2.0 * luma[1:-1, 2:]) + luma[2:, 2:]
    left = (luma[:-2, :-2] + 2.0 * luma[1:-1, :-2]) + luma[2:, :-2]
    grad[1:-1, 1:-1] = (right - left) / 8.0
    return grad


def _edge_width(row: np.ndarray, col: int, rising: bool) -> float:
    """Distance between the local luma extrema flanking an edge pixel."""
    left = col
    right = col
    last = row.shape[0] - 1
    if rising:
        while left > 0 and row[left - 1] < row[left]:
            left -= 1
        while right < last and row[right + 1] > row[right]:
            right += 1
    else:
        while left > 0 and row[left - 1] > row[left]:
            left -= 1
        while right < last and row[right + 1] < row[right]:
            right += 1
    return float(right - left)


def cpbd_frame_flags(image: ImageFrame) -> tuple[float, list[str]]:
    """Sharpness score in [0, 1] plus flags ("no-edges" when undecidable)."""
    if image.width < BLOCK_SIZE or image.height < BLOCK_SIZE:
        raise InvariantViolation(
            f"sharpness needs at least {BLOCK_SIZE}x{BLOCK_SIZE}, "
            f"got {image.width}x{image.height}"
        )
    luma = _luma(image.to_array())
    grad = _gradient(luma)
    edge = np.abs(grad) > EDGE_THRESHOLD
    min_count = EDGE_BLOCK_FRACTION * BLOCK_SIZE * BLOCK_SIZE

    sharp = 0
    total = 0
    for by in range(image.height // BLOCK_SIZE):
        for bx in range(image.width // BLOCK_SIZE):
            rows = slice(by * BLOCK_SIZE, (by + 1) * BLOCK_SIZE)
            cols = slice(bx * BLOCK_SIZE, (bx + 1) * BLOCK_SIZE)
            block_edge = edge[rows, cols]
            if block_edge.sum() <= min_count:
                continue
            block_luma = luma[rows, cols]
            contrast = float(block_luma.max()) - float(block_luma.min())
            w_jnb = (
                WIDTH_JNB_LOW_CONTRAST
                if contrast <= CONTRAST_CUTOFF
                else WIDTH_JNB_HIGH_CONTRAST
            )
            for r, c in np.argwhere(block_edge):
                abs_r = by * BLOCK_SIZE + int(r)
                abs_c = bx * BLOCK_SIZE + int(c)
                width = _edge_width(luma[abs_r], abs_c, grad[abs_r, abs_c] > 0.0)
                p_blur = 1.0 - math.exp(-((width / w_jnb) ** BETA))
                total += 1
                if p_blur <= P_JNB:
                    sharp += 1
    if total == 0:
        return 1.0, [NO_EDGES_FLAG]
    return sharp / total, []


def cpbd_frame(image: ImageFrame) -> float:
    return cpbd_frame_flags(image)[0]


def normalize_external(metric_name: str, raw: float, score_range: tuple[float, float]) -> float:
    lo, hi = score_range
    if not (lo < hi):
        raise InvalidInputError(
            f"metric {metric_name} has degenerate range [{lo}, {hi}]"
        )
    return min(1.0, max(0.0, (raw - lo) / (hi - lo)))


@dataclass(frozen=True)
class FrameScore:
    frame_index: int
    cpbd: float
    externals: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (0.0 <= self.cpbd <= 1.0):
            raise InvariantViolation(f"frame cpbd {self.cpbd} outside [0, 1]")


@dataclass(frozen=True)
class QualityReport:
    video: ArtifactRef | None
    cpbd_mean: float
    normalized: dict
    frame_scores: tuple[FrameScore, ...]
    flags: tuple[str, ...]
    name: str | None = None

    def __post_init__(self) -> None:
        if self.frame_scores:
            mean = sum(f.cpbd for f in self.frame_scores) / len(self.frame_scores)
            if abs(mean - self.cpbd_mean) > 1e-12:
                raise InvariantViolation(
                    f"cpbd_mean {self.cpbd_mean} disagrees with frame mean {mean}"
                )
        for metric, value in self.normalized.items():
            if not (0.0 <= value <= 1.0):
                raise InvariantViolation(
                    f"normalized {metric} score {value} outside [0, 1]"
                )


def report_to_json(report: QualityReport) -> bytes:
    body: dict = {}
    if report.name is not None:
        body["name"] = report.name
    body["video"] = None if report.video is None else report.video.id
    body["cpbd"] = report.cpbd_mean
    body["normalized"] = dict(report.normalized)
    body["frames"] = [
        {"frame": f.frame_index, "cpbd": f.cpbd, "externals": dict(f.externals)}
        for f in report.frame_scores
    ]
    body["flags"] = list(report.flags)
    return (json.dumps(body, indent=2) + "\n").encode("utf-8")


def parse_report(data: bytes) -> QualityReport:
    try:
        body = json.loads(data.decode("utf-8"))
        video = body["video"]
        report = QualityReport(
            video=None if video is None else ArtifactRef(id=video, kind=MediaKind.VIDEO),
            cpbd_mean=float(body["cpbd"]),
            normalized=dict(body["normalized"]),
            frame_scores=tuple(
                FrameScore(
                    frame_index=int(f["frame"]),
                    cpbd=float(f["cpbd"]),
                    externals=dict(f.get("externals") or {}),
                )
                for f in body["frames"]
            ),
            flags=tuple(body["flags"]),
            name=body.get("name"),
        )
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"malformed quality report: {exc}") from exc
    return report


def metric_name_of(backend: Backend) -> str:
    name = backend.descriptor.name
    return name.split(":", 1)[1] if name.startswith("vqa:") else name


def assess_quality(video: VideoClip, external_backends: list[Backend]) -> QualityReport:
    """Frame-by-frame sharpness, averaged, plus whole-clip external scores.

    A failing external metric degrades to a flag; a sharpness failure
    fails the whole call.
    """
    bundle = encode_video_bundle(video)
    frame_scores = []
    flags: list[str] = []
    for index, frame in enumerate(video.frames):
        value, frame_flags = cpbd_frame_flags(frame)
        frame_scores.append(FrameScore(frame_index=index, cpbd=value))
        for flag in frame_flags:
            if flag not in flags:
                flags.append(flag)
    cpbd_mean = sum(f.cpbd for f in frame_scores) / len(frame_scores)

    normalized: dict[str, float] = {}
    for backend in external_backends:
        metric = metric_name_of(backend)
        lo, hi = backend.descriptor.metadata.get("range", (0.0, 1.0))
        try:
            response = backend.invoke(
                "vqa",
                params={"metric": metric, "range": [lo, hi]},
                media=[MediaPart(role="video", kind=MediaKind.VIDEO, data=bundle)],
            )
            raw = float(response.values["score"])
            normalized[metric] = normalize_external(metric, raw, (float(lo), float(hi)))
        except (AvatarKitError, KeyError, TypeError, ValueError):
            flags.append(f"metric-unavailable:{metric}")

    return QualityReport(
        video=artifact_ref_for_bytes(bundle, MediaKind.VIDEO),
        cpbd_mean=cpbd_mean,
        normalized=normalized,
        frame_scores=tuple(frame_scores),
        flags=tuple(flags),
    )
