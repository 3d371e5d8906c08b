"""Appearance stages: age transformation and garment replacement."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backends import Backend, MediaPart
from .errors import BackendProtocolError, InvalidInputError, InvariantViolation
from .media import ArtifactRef, ImageFrame, MediaKind, decode_png, encode_png

DEFAULT_AGE_GRID = (10, 20, 30, 40, 50, 60, 70, 80)
AGE_MIN, AGE_MAX = 1, 100


@dataclass(frozen=True)
class AgeImageSet:
    """Aged renditions of one portrait, ordered by strictly increasing age."""

    entries: tuple[tuple[int, ImageFrame], ...]
    source: ArtifactRef | None = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise InvariantViolation("age image set must have at least one entry")
        ages = [age for age, _ in self.entries]
        if any(a >= b for a, b in zip(ages, ages[1:])):
            raise InvariantViolation("age entries must be strictly increasing")
        first = self.entries[0][1]
        for _, image in self.entries:
            if (image.width, image.height) != (first.width, first.height):
                raise InvariantViolation("age images must share dimensions")

    @property
    def ages(self) -> tuple[int, ...]:
        return tuple(age for age, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class GarmentCatalogEntry:
    garment_id: str
    image: ImageFrame
    label: str


@dataclass
class GarmentCatalog:
    entries: dict[str, GarmentCatalogEntry] = field(default_factory=dict)

    def add(self, entry: GarmentCatalogEntry) -> None:
        if entry.garment_id in self.entries:
            raise InvariantViolation(f"duplicate garment id {entry.garment_id!r}")
        self.entries[entry.garment_id] = entry

    def get(self, garment_id: str) -> GarmentCatalogEntry:
        entry = self.entries.get(garment_id)
        if entry is None:
            raise InvalidInputError(f"unknown garment id {garment_id!r}")
        return entry

    def ids(self) -> list[str]:
        return sorted(self.entries)


def load_catalog(directory: str | Path) -> GarmentCatalog:
    """Read a garment directory: <id>.png plus <id>.json with a label."""
    catalog = GarmentCatalog()
    root = Path(directory)
    for png in sorted(root.glob("*.png")):
        garment_id = png.stem
        sidecar = png.with_suffix(".json")
        label = garment_id
        if sidecar.exists():
            label = json.loads(sidecar.read_text("utf-8")).get("label", garment_id)
        catalog.add(
            GarmentCatalogEntry(
                garment_id=garment_id,
                image=decode_png(png.read_bytes()),
                label=label,
            )
        )
    return catalog


def _navy_garment() -> ImageFrame:
    arr = np.zeros((48, 48, 3), dtype=np.uint8)
    arr[:, :] = (30, 40, 90)
    stripes = (np.arange(48) // 6) % 2 == 0
    arr[stripes, :] = (44, 56, 112)
    arr[:6, :] = (205, 205, 214)  # collar band
    return ImageFrame.from_array(arr)


def _checker_garment() -> ImageFrame:
    yy, xx = np.mgrid[0:48, 0:48]
    cells = ((yy // 8) + (xx // 8)) % 2 == 0
    arr = np.where(cells[:, :, None], (200, 40, 40), (240, 230, 220)).astype(np.uint8)
    return ImageFrame.from_array(arr)


def builtin_catalog() -> GarmentCatalog:
    catalog = GarmentCatalog()
    catalog.add(GarmentCatalogEntry("navy", _navy_garment(), "Navy sweater"))
    catalog.add(GarmentCatalogEntry("checker", _checker_garment(), "Checker shirt"))
    return catalog


def validate_ages(ages) -> list[int]:
    if not ages:
        raise InvariantViolation("age list must be nonempty")
    out = []
    for age in ages:
        if not isinstance(age, int) or isinstance(age, bool):
            raise InvariantViolation(f"ages must be integers, got {age!r}")
        if not (AGE_MIN <= age <= AGE_MAX):
            raise InvariantViolation(f"age {age} outside [{AGE_MIN}, {AGE_MAX}]")
        out.append(age)
    if any(a >= b for a, b in zip(out, out[1:])):
        raise InvariantViolation("ages must be strictly increasing")
    return out


def transform_ages(portrait: ImageFrame, ages, backend: Backend) -> AgeImageSet:
    """One output image per requested age, order and dimensions preserved."""
    checked = validate_ages(ages)
    part = MediaPart(role="portrait", kind=MediaKind.IMAGE, data=encode_png(portrait))
    response = backend.invoke("age", params={"ages": checked}, media=[part])
    images = [decode_png(m.data) for m in response.media if m.role == "aged"]
    if len(images) != len(checked):
        raise BackendProtocolError(
            f"age backend returned {len(images)} images for {len(checked)} ages"
        )
    for image in images:
        if (image.width, image.height) != (portrait.width, portrait.height):
            raise BackendProtocolError("age backend changed image dimensions")
    return AgeImageSet(entries=tuple(zip(checked, images)))


def select_age(age_set: AgeImageSet, index: int) -> ImageFrame:
    if not (0 <= index < len(age_set)):
        raise InvalidInputError(
            f"age index {index} outside [0, {len(age_set) - 1}]"
        )
    return age_set.entries[index][1]


def dress(image: ImageFrame, garment: GarmentCatalogEntry, backend: Backend) -> ImageFrame:
    parts = [
        MediaPart(role="image", kind=MediaKind.IMAGE, data=encode_png(image)),
        MediaPart(role="garment", kind=MediaKind.IMAGE, data=encode_png(garment.image)),
    ]
    response = backend.invoke("dress", params={"garment_id": garment.garment_id}, media=parts)
    out = decode_png(backend.single_media(response, MediaKind.IMAGE))
    if (out.width, out.height) != (image.width, image.height):
        raise BackendProtocolError("dress backend changed image dimensions")
    return out
