"""Exception hierarchy shared by every pipeline layer.

Each exception carries a stable ``code`` used by the HTTP service to build
error payloads, so the wire format does not depend on Python class names.
"""

from __future__ import annotations


class AvatarKitError(Exception):
    """Base class for every error raised by this package."""

    code = "error"


class InvariantViolation(AvatarKitError):
    """A value failed the structural invariants of its type or operation."""

    code = "invariant-violation"


class MediaFormatError(AvatarKitError):
    """Byte container is malformed or uses an unsupported encoding/rate."""

    code = "media-format"


class InvalidInputError(AvatarKitError):
    """A parameter is out of range or refers to an unknown option."""

    code = "invalid-input"


class StageOrderError(AvatarKitError):
    """A stage was requested while its prerequisites are not satisfied."""

    code = "stage-order"


class BackendUnavailableError(AvatarKitError):
    """The backend could not be reached after the configured retries."""

    code = "backend-unavailable"


class BackendProtocolError(AvatarKitError):
    """The backend answered, but the reply violates the adapter protocol."""

    code = "backend-protocol"


class NotFoundError(AvatarKitError):
    """Lookup of a session or artifact id failed."""

    code = "not-found"


class BusyError(AvatarKitError):
    """Another command is in flight for the same session; retry later."""

    code = "busy"
