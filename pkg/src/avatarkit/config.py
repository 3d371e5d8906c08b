"""Pipeline configuration and backend hub construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .appearance import DEFAULT_AGE_GRID, validate_ages
from .backends import (
    BACKEND_NAMES,
    Backend,
    BackendDescriptor,
    BackendHub,
    MOCK_ENDPOINT,
    is_backend_name,
)
from .errors import InvalidInputError, InvariantViolation
from .postprocess import SR_SCALES

DEFAULT_METRIC_RANGES = {
    "CGIQA": (1.0, 5.0),
    "VSFA": (0.0, 1.0),
    "FAST-VQA": (0.0, 1.0),
}


@dataclass(frozen=True)
class PipelineConfig:
    fps: float = 25.0
    age_grid: tuple[int, ...] = DEFAULT_AGE_GRID
    max_history: int = 16
    backend_endpoints: dict = field(default_factory=dict)
    sr_scale: int = 2
    style_id: str = "mono"
    novel_view: bool = True
    metric_ranges: dict = field(default_factory=lambda: dict(DEFAULT_METRIC_RANGES))

    def __post_init__(self) -> None:
        if not (0.0 < self.fps <= 240.0):
            raise InvalidInputError(f"fps must be in (0, 240], got {self.fps!r}")
        try:
            validate_ages(self.age_grid)
        except InvariantViolation as exc:
            raise InvalidInputError(f"bad age grid: {exc}") from exc
        if self.max_history < 1:
            raise InvalidInputError("max_history must be >= 1")
        if self.sr_scale not in SR_SCALES:
            raise InvalidInputError(f"sr_scale must be one of {SR_SCALES}")
        for name, endpoint in self.backend_endpoints.items():
            if not is_backend_name(name):
                raise InvalidInputError(f"unknown backend name {name!r} in endpoints")
            if not isinstance(endpoint, str) or not endpoint:
                raise InvalidInputError(f"endpoint for {name!r} must be a nonempty string")
        for metric, rng in self.metric_ranges.items():
            if len(tuple(rng)) != 2 or not float(rng[0]) < float(rng[1]):
                raise InvalidInputError(f"metric range for {metric!r} must be (lo, hi), lo < hi")

    def to_dict(self) -> dict:
        return {
            "fps": self.fps,
            "age_grid": list(self.age_grid),
            "max_history": self.max_history,
            "backend_endpoints": dict(self.backend_endpoints),
            "sr_scale": self.sr_scale,
            "style_id": self.style_id,
            "novel_view": self.novel_view,
            "metric_ranges": {k: list(v) for k, v in self.metric_ranges.items()},
        }


_CONFIG_KEYS = {
    "fps",
    "age_grid",
    "max_history",
    "backend_endpoints",
    "sr_scale",
    "style_id",
    "novel_view",
    "metric_ranges",
}


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise InvalidInputError("config must be a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    try:
        if "fps" in data:
            kwargs["fps"] = float(data["fps"])
        if "age_grid" in data:
            kwargs["age_grid"] = tuple(int(a) for a in data["age_grid"])
        if "max_history" in data:
            kwargs["max_history"] = int(data["max_history"])
        if "backend_endpoints" in data:
            kwargs["backend_endpoints"] = dict(data["backend_endpoints"])
        if "sr_scale" in data:
            kwargs["sr_scale"] = int(data["sr_scale"])
        if "style_id" in data:
            kwargs["style_id"] = str(data["style_id"])
        if "novel_view" in data:
            kwargs["novel_view"] = bool(data["novel_view"])
        if "metric_ranges" in data:
            kwargs["metric_ranges"] = {
                str(k): (float(v[0]), float(v[1])) for k, v in data["metric_ranges"].items()
            }
    except (TypeError, ValueError, IndexError) as exc:
        raise InvalidInputError(f"malformed config value: {exc}") from exc
    return PipelineConfig(**kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text("utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def with_endpoint(config: PipelineConfig, name: str, endpoint: str) -> PipelineConfig:
    endpoints = dict(config.backend_endpoints)
    endpoints[name] = endpoint
    return replace(config, backend_endpoints=endpoints)


def build_hub(config: PipelineConfig, mock_suite=None) -> BackendHub:
    """One backend handle per fixed name plus one per configured metric."""
    backends: dict[str, Backend] = {}
    names = list(BACKEND_NAMES) + [f"vqa:{metric}" for metric in config.metric_ranges]
    for name in names:
        endpoint = config.backend_endpoints.get(name, MOCK_ENDPOINT)
        metadata = {}
        if name.startswith("vqa:"):
            lo, hi = config.metric_ranges[name.split(":", 1)[1]]
            metadata["range"] = (float(lo), float(hi))
        descriptor = BackendDescriptor(name=name, endpoint=endpoint, metadata=metadata)
        backends[name] = Backend(descriptor, mock_suite=mock_suite)
    return BackendHub(backends)
