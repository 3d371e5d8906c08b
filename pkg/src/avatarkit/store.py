"""Content-addressed artifact store.

Every pipeline product is serialized to its canonical byte form and filed
under the SHA-256 of those bytes: ``store/<first two hex>/<digest>.<ext>``.
Equal content therefore collapses to a single file and a ref is enough to
verify what you fetched. Writes go through a temp file and rename so a
crashed put never leaves a readable partial at the final path.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .errors import MediaFormatError, NotFoundError
from .media import (
    ArtifactRef,
    MediaKind,
    artifact_ref_for_bytes,
    deserialize_media,
    media_kind_of,
    serialize_media,
)

EXTENSIONS = {
    MediaKind.TEXT: "txt",
    MediaKind.AUDIO: "wav",
    MediaKind.IMAGE: "png",
    MediaKind.VIDEO: "bundle",
    MediaKind.REPORT: "json",
}
_KIND_BY_EXTENSION = {ext: kind for kind, ext in EXTENSIONS.items()}


class ArtifactStore:
    def __init__(self, root: str | os.PathLike) -> None:
        self.root = Path(root)
        (self.root / "store").mkdir(parents=True, exist_ok=True)

    def _path_for(self, ref: ArtifactRef) -> Path:
        return self.root / "store" / ref.id[:2] / f"{ref.id}.{EXTENSIONS[ref.kind]}"

    def put_bytes(self, data: bytes, kind: MediaKind) -> ArtifactRef:
        """File already-canonical bytes; a repeat put is a no-op."""
        ref = artifact_ref_for_bytes(data, kind)
        path = self._path_for(ref)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".put-")
            try:
                with os.fdopen(fd, "wb") as handle:
                    handle.write(data)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        return ref

    def put(self, value) -> ArtifactRef:
        return self.put_bytes(serialize_media(value), media_kind_of(value))

    def has(self, ref: ArtifactRef) -> bool:
        return self._path_for(ref).exists()

    def get_bytes(self, ref: ArtifactRef) -> bytes:
        path = self._path_for(ref)
        if not path.exists():
            raise NotFoundError(f"artifact {ref.id} not in store")
        return path.read_bytes()

    def get(self, ref: ArtifactRef):
        return deserialize_media(self.get_bytes(ref), ref.kind)

    def path_for(self, ref: ArtifactRef) -> Path:
        """Filesystem location for an existing artifact."""
        path = self._path_for(ref)
        if not path.exists():
            raise NotFoundError(f"artifact {ref.id} not in store")
        return path

    def resolve(self, artifact_id: str) -> ArtifactRef:
        """Recover the full ref (id plus kind) from a bare hex id."""
        if len(artifact_id) != 64 or any(c not in "0123456789abcdef" for c in artifact_id):
            raise NotFoundError(f"malformed artifact id {artifact_id!r}")
        shard = self.root / "store" / artifact_id[:2]
        if shard.is_dir():
            for entry in sorted(shard.iterdir()):
                stem, _, ext = entry.name.partition(".")
                if stem == artifact_id and ext in _KIND_BY_EXTENSION:
                    return ArtifactRef(id=artifact_id, kind=_KIND_BY_EXTENSION[ext])
        raise NotFoundError(f"artifact {artifact_id} not in store")

    def verify(self, ref: ArtifactRef) -> None:
        """Re-hash the stored bytes; mismatch means on-disk corruption."""
        actual = artifact_ref_for_bytes(self.get_bytes(ref), ref.kind)
        if actual.id != ref.id:
            raise MediaFormatError(
                f"stored bytes for {ref.id} hash to {actual.id}; store is corrupt"
            )
