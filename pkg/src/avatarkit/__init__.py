"""avatarkit: session-oriented digital human generation pipeline.

Conversation, speech synthesis and cloning, appearance transformation,
speech-driven animation, optional post-processing, and quality
assessment, with every neural model behind a uniform backend protocol
and a complete deterministic mock suite for desk-scale runs.
"""

from .config import PipelineConfig, build_hub, load_config
from .errors import (
    AvatarKitError,
    BackendProtocolError,
    BackendUnavailableError,
    BusyError,
    InvalidInputError,
    InvariantViolation,
    MediaFormatError,
    NotFoundError,
    StageOrderError,
)
from .media import (
    ArtifactRef,
    AudioClip,
    ImageFrame,
    MediaInput,
    MediaKind,
    TextDoc,
    VideoClip,
)
from .orchestrator import Orchestrator, PipelineSession, SessionState, Stage
from .quality import QualityReport, assess_quality, cpbd_frame
from .store import ArtifactStore

__version__ = "0.1.0"

__all__ = [
    "ArtifactRef",
    "ArtifactStore",
    "AudioClip",
    "AvatarKitError",
    "BackendProtocolError",
    "BackendUnavailableError",
    "BusyError",
    "ImageFrame",
    "InvalidInputError",
    "InvariantViolation",
    "MediaFormatError",
    "MediaInput",
    "MediaKind",
    "NotFoundError",
    "Orchestrator",
    "PipelineConfig",
    "PipelineSession",
    "QualityReport",
    "SessionState",
    "Stage",
    "StageOrderError",
    "TextDoc",
    "VideoClip",
    "assess_quality",
    "build_hub",
    "cpbd_frame",
    "load_config",
    "__version__",
]
