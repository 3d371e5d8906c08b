"""Sharpness scoring, external metric normalization, report round trips."""

from __future__ import annotations

import numpy as np
import pytest
import requests
from hypothesis import given, settings, strategies as st

import refimpl
from avatarkit.backends import Backend, BackendDescriptor
from avatarkit.errors import InvalidInputError, InvariantViolation
from avatarkit.media import (
    ArtifactRef,
    ImageFrame,
    MediaKind,
    VideoClip,
    artifact_ref_for_bytes,
    encode_video_bundle,
)
from avatarkit.quality import (
    FrameScore,
    QualityReport,
    assess_quality,
    cpbd_frame,
    cpbd_frame_flags,
    metric_name_of,
    normalize_external,
    parse_report,
    report_to_json,
)

from conftest import make_portrait


def test_undersized_frames_rejected():
    for w, h in [(63, 64), (64, 63), (8, 8)]:
        frame = ImageFrame.from_array(np.zeros((h, w, 3), dtype=np.uint8))
        with pytest.raises(InvariantViolation):
            cpbd_frame_flags(frame)


def test_matches_brute_force_on_structured_image():
    portrait = make_portrait(128)
    got, got_flags = cpbd_frame_flags(portrait)
    want, want_flags = refimpl.cpbd_reference(portrait.to_array())
    assert got == want
    assert got_flags == want_flags


def test_matches_brute_force_on_noise():
    rng = np.random.default_rng(99)
    for _ in range(3):
        arr = rng.integers(0, 256, size=(128, 128, 3), dtype=np.uint8)
        frame = ImageFrame.from_array(arr)
        assert cpbd_frame_flags(frame) == tuple(refimpl.cpbd_reference(arr))


def test_constant_image_scores_one_with_flag():
    arr = np.full((64, 64, 3), 128, dtype=np.uint8)
    score, flags = cpbd_frame_flags(ImageFrame.from_array(arr))
    assert score == 1.0
    assert flags == ["no-edges"]
    assert cpbd_frame(ImageFrame.from_array(arr)) == 1.0


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_score_always_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    arr = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    score, flags = cpbd_frame_flags(ImageFrame.from_array(arr))
    assert 0.0 <= score <= 1.0
    if flags:
        assert flags == ["no-edges"]
        assert score == 1.0


def test_normalize_maps_endpoints_exactly():
    assert normalize_external("CGIQA", 1.0, (1.0, 5.0)) == 0.0
    assert normalize_external("CGIQA", 5.0, (1.0, 5.0)) == 1.0
    assert normalize_external("VSFA", 0.0, (0.0, 1.0)) == 0.0
    assert normalize_external("VSFA", 1.0, (0.0, 1.0)) == 1.0


def test_normalize_clamps_out_of_range():
    assert normalize_external("m", -3.0, (1.0, 5.0)) == 0.0
    assert normalize_external("m", 9.0, (1.0, 5.0)) == 1.0
    assert normalize_external("m", 3.0, (1.0, 5.0)) == 0.5


@given(st.floats(-10, 10), st.floats(-5, 2), st.floats(2.5, 9))
def test_normalize_matches_reference(raw, lo, hi):
    assert normalize_external("m", raw, (lo, hi)) == refimpl.normalize_reference(raw, lo, hi)


def test_degenerate_range_rejected():
    with pytest.raises(InvalidInputError):
        normalize_external("m", 0.5, (2.0, 2.0))
    with pytest.raises(InvalidInputError):
        normalize_external("m", 0.5, (5.0, 1.0))


def test_frame_score_bounds():
    FrameScore(frame_index=0, cpbd=0.0)
    FrameScore(frame_index=1, cpbd=1.0)
    with pytest.raises(InvariantViolation):
        FrameScore(frame_index=0, cpbd=1.5)
    with pytest.raises(InvariantViolation):
        FrameScore(frame_index=0, cpbd=-0.1)


def test_report_mean_law():
    frames = (FrameScore(0, 0.25), FrameScore(1, 0.75))
    QualityReport(video=None, cpbd_mean=0.5, normalized={}, frame_scores=frames, flags=())
    with pytest.raises(InvariantViolation):
        QualityReport(
            video=None, cpbd_mean=0.5 + 1e-9, normalized={}, frame_scores=frames, flags=()
        )


def test_report_rejects_denormalized_externals():
    with pytest.raises(InvariantViolation):
        QualityReport(
            video=None, cpbd_mean=0.0, normalized={"VSFA": 1.2}, frame_scores=(), flags=()
        )


def test_report_json_round_trip():
    ref = ArtifactRef(id="ab" * 32, kind=MediaKind.VIDEO)
    report = QualityReport(
        video=ref,
        cpbd_mean=0.375,
        normalized={"CGIQA": 0.25, "VSFA": 0.875},
        frame_scores=(FrameScore(0, 0.25), FrameScore(1, 0.5)),
        flags=("no-edges",),
        name="clip-a",
    )
    data = report_to_json(report)
    parsed = parse_report(data)
    assert parsed == report
    assert report_to_json(parsed) == data  # byte-stable through a second pass


def test_report_name_is_optional():
    report = QualityReport(
        video=None, cpbd_mean=0.0, normalized={}, frame_scores=(), flags=()
    )
    parsed = parse_report(report_to_json(report))
    assert parsed.name is None
    assert b'"name"' not in report_to_json(report)


def test_malformed_reports_rejected():
    for blob in [b"not json", b"[]", b'{"cpbd": 0.1}', b'{"video": null, "cpbd": "x", "normalized": {}, "frames": [], "flags": []}']:
        with pytest.raises(InvalidInputError):
            parse_report(blob)


def test_metric_names():
    plain = Backend(BackendDescriptor(name="tts", endpoint="http://x.test"))
    scoped = Backend(BackendDescriptor(name="vqa:CGIQA", endpoint="http://x.test"))
    assert metric_name_of(plain) == "tts"
    assert metric_name_of(scoped) == "CGIQA"


def _assessment_clip() -> VideoClip:
    flat = np.full((64, 64, 3), 40, dtype=np.uint8)
    frames = (make_portrait(64), ImageFrame.from_array(flat))
    return VideoClip(frames=frames, fps=25.0)


def test_assessment_matches_references(hub):
    video = _assessment_clip()
    bundle = encode_video_bundle(video)
    report = assess_quality(video, hub.vqa_backends())

    assert report.video == artifact_ref_for_bytes(bundle, MediaKind.VIDEO)
    assert len(report.frame_scores) == 2
    expected_flags = []
    for index, frame in enumerate(video.frames):
        want, want_flags = refimpl.cpbd_reference(frame.to_array())
        assert report.frame_scores[index].cpbd == want
        for flag in want_flags:
            if flag not in expected_flags:
                expected_flags.append(flag)
    assert list(report.flags) == expected_flags

    ranges = {"CGIQA": (1.0, 5.0), "VSFA": (0.0, 1.0), "FAST-VQA": (0.0, 1.0)}
    assert set(report.normalized) == set(ranges)
    for metric, (lo, hi) in ranges.items():
        raw = refimpl.vqa_reference(metric, bundle, lo, hi)
        assert report.normalized[metric] == refimpl.normalize_reference(raw, lo, hi)


def test_unreachable_metric_degrades_to_flag(hub):
    def down(desc, body):
        raise requests.exceptions.ConnectionError("no route")

    dead = Backend(
        BackendDescriptor(
            name="vqa:VSFA", endpoint="http://down.test", metadata={"range": (0.0, 1.0)}
        ),
        transport=down,
    )
    report = assess_quality(_assessment_clip(), [hub.get("vqa:CGIQA"), dead])
    assert "metric-unavailable:VSFA" in report.flags
    assert "VSFA" not in report.normalized
    assert "CGIQA" in report.normalized


def test_assessment_without_externals(hub):
    report = assess_quality(_assessment_clip(), [])
    assert report.normalized == {}
    assert report.cpbd_mean == sum(f.cpbd for f in report.frame_scores) / 2
