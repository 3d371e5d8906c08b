"""Shared fixtures: deterministic media inputs and a mock-backed pipeline."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from avatarkit.config import PipelineConfig, build_hub
from avatarkit.media import AudioClip, ImageFrame
from avatarkit.mocks import mock_suite
from avatarkit.orchestrator import Orchestrator

SEED = 20260822


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(SEED)


def make_portrait(side: int = 64) -> ImageFrame:
    """Synthetic head-and-shoulders test image: flat regions plus real edges."""
    yy, xx = np.mgrid[0:side, 0:side]
    arr = np.zeros((side, side, 3), dtype=np.uint8)
    arr[:, :, 0] = 60 + yy * 120 // side
    arr[:, :, 1] = 70 + xx * 100 // side
    arr[:, :, 2] = 110
    cy, cx = side * 0.45, side * 0.5
    face = ((xx - cx) / (side * 0.28)) ** 2 + ((yy - cy) / (side * 0.34)) ** 2 <= 1.0
    arr[face] = (198, 166, 142)
    eye_y = slice(int(side * 0.36), int(side * 0.42))
    arr[eye_y, int(side * 0.33):int(side * 0.43)] = (28, 28, 52)
    arr[eye_y, int(side * 0.57):int(side * 0.67)] = (28, 28, 52)
    arr[int(side * 0.62):int(side * 0.70), int(side * 0.40):int(side * 0.60)] = (150, 64, 64)
    arr[int(side * 0.88):, :] = (40, 46, 80)
    return ImageFrame.from_array(arr)


def make_speech_audio(seconds: float = 1.0, seed: int = 7) -> AudioClip:
    """Voice-like audio: two detuned tones with a slow amplitude envelope."""
    n = int(round(seconds * 16000))
    t = np.arange(n) / 16000.0
    env = 0.4 + 0.35 * np.sin(2 * np.pi * 3.1 * t) ** 2
    wave = env * (np.sin(2 * np.pi * 180.0 * t) + 0.5 * np.sin(2 * np.pi * 293.0 * t))
    wave += 0.02 * np.random.default_rng(seed).standard_normal(n)
    samples = np.clip(np.round(wave * 12000.0), -32768, 32767).astype(np.int16)
    return AudioClip.from_values(samples)


def checkerboard(side: int = 256, cell: int = 64) -> np.ndarray:
    yy, xx = np.mgrid[0:side, 0:side]
    pattern = ((yy // cell + xx // cell) % 2) * 255
    return np.repeat(pattern[:, :, None], 3, axis=2).astype(np.uint8)


def blurred(arr: np.ndarray, sigma: float) -> np.ndarray:
    if sigma == 0:
        return arr.copy()
    out = np.empty_like(arr, dtype=np.float64)
    for ch in range(arr.shape[2]):
        out[:, :, ch] = ndimage.gaussian_filter(arr[:, :, ch].astype(np.float64), sigma)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


@pytest.fixture
def portrait() -> ImageFrame:
    return make_portrait()


@pytest.fixture
def speech_audio() -> AudioClip:
    return make_speech_audio()


@pytest.fixture
def suite():
    return mock_suite()


@pytest.fixture
def hub(suite):
    return build_hub(PipelineConfig(), mock_suite=suite)


@pytest.fixture
def orch(tmp_path, suite):
    return Orchestrator(
        config=PipelineConfig(),
        root=tmp_path / "data",
        mocks=suite,
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance verdict lines after the test summary."""
    import sys

    acceptance = sys.modules.get("test_acceptance")
    lines = getattr(acceptance, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
