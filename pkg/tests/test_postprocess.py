"""Style transfer and super-resolution contracts."""

from __future__ import annotations

import base64

import numpy as np
import pytest

from avatarkit.animation import DriveMethod, animate
from avatarkit.backends import Backend, BackendDescriptor, BackendRequest
from avatarkit.errors import BackendProtocolError, InvalidInputError, InvariantViolation
from avatarkit.media import ImageFrame, VideoClip, decode_video_bundle, encode_video_bundle
from avatarkit.mocks import mock_suite
from avatarkit.postprocess import (
    SR_SCALES,
    STYLE_PRESETS,
    StylePreset,
    get_style_preset,
    style_transfer,
    super_resolve,
)

from conftest import make_portrait, make_speech_audio


@pytest.fixture
def video(hub):
    return animate(make_portrait(), make_speech_audio(0.4), DriveMethod.INDEPENDENT, hub, 25.0)


def test_preset_lut_must_have_256_entries():
    with pytest.raises(InvariantViolation):
        StylePreset("x", tuple(range(255)))
    with pytest.raises(InvariantViolation):
        StylePreset("x", tuple(range(255)) + (256,))


def test_builtin_presets_and_lookup():
    assert sorted(STYLE_PRESETS) == ["identity", "invert", "mono"]
    assert get_style_preset("mono").to_luma
    with pytest.raises(InvalidInputError):
        get_style_preset("sketchy")


def test_style_preserves_structure(hub, video):
    styled = style_transfer(video, get_style_preset("mono"), hub.style)
    assert styled.frame_count == video.frame_count
    assert styled.fps == video.fps
    assert (styled.width, styled.height) == (video.width, video.height)
    assert styled.audio == video.audio
    # mono collapses channels
    arr = styled.frames[0].to_array()
    assert np.array_equal(arr[:, :, 0], arr[:, :, 1])
    assert np.array_equal(arr[:, :, 1], arr[:, :, 2])


def test_invert_round_trips(hub, video):
    once = style_transfer(video, get_style_preset("invert"), hub.style)
    twice = style_transfer(once, get_style_preset("invert"), hub.style)
    for a, b in zip(twice.frames, video.frames):
        assert a == b


def test_super_resolve_scales_dimensions(hub, video):
    up = super_resolve(video, 2, hub.super_resolve)
    assert (up.width, up.height) == (video.width * 2, video.height * 2)
    assert up.frame_count == video.frame_count
    assert up.fps == video.fps
    assert up.audio == video.audio


def test_super_resolve_scale_one_is_a_faithful_copy(hub, video):
    same = super_resolve(video, 1, hub.super_resolve)
    for a, b in zip(same.frames, video.frames):
        assert a == b


def test_bad_scale_rejected_before_any_backend_call(hub, suite, video):
    suite.reset_log()
    for scale in (3, 0, -2, 8):
        with pytest.raises(InvalidInputError):
            super_resolve(video, scale, hub.super_resolve)
    assert suite.operations() == []
    assert SR_SCALES == (1, 2, 4)


def shape_breaking_backend(name: str) -> Backend:
    def transport(desc, body):
        response = mock_suite().dispatch(desc, BackendRequest.from_wire(body))
        wire = response.to_wire()
        clip = decode_video_bundle(base64.b64decode(wire["media"][0]["bytes"]))
        cropped = VideoClip(
            frames=tuple(
                ImageFrame.from_array(f.to_array()[:32, :32]) for f in clip.frames
            ),
            fps=clip.fps,
            audio=clip.audio,
        )
        wire["media"][0]["bytes"] = base64.b64encode(encode_video_bundle(cropped)).decode()
        return wire

    return Backend(BackendDescriptor(name=name, endpoint="http://x.test"), transport=transport)


def test_style_backend_must_preserve_dimensions(video):
    with pytest.raises(BackendProtocolError):
        style_transfer(video, get_style_preset("identity"), shape_breaking_backend("style"))


def test_sr_backend_must_scale_exactly(video):
    with pytest.raises(BackendProtocolError):
        super_resolve(video, 2, shape_breaking_backend("super_resolve"))


def test_postprocess_is_deterministic(hub, video):
    a = super_resolve(style_transfer(video, get_style_preset("mono"), hub.style), 2, hub.super_resolve)
    b = super_resolve(style_transfer(video, get_style_preset("mono"), hub.style), 2, hub.super_resolve)
    assert encode_video_bundle(a) == encode_video_bundle(b)
