"""Encoded pages and the sidecar manifest that makes them decodable."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from PIL import Image

from .errors import (
    AtlasMismatch,
    GeometryMismatch,
    ManifestParse,
    MixedTileSizes,
    UnsupportedFormat,
    ValidationError,
    VersionUnsupported,
)
from .raster import BACKGROUND, GlyphAtlas, GlyphTile, render_cover

MANIFEST_VERSION = 1
_MAGIC = "# gpc-manifest"


@dataclass(eq=False)
class EncodedPage:
    bitmap: np.ndarray
    glyphs_per_row: int
    glyph_count: int
    tile_height: int
    tile_width: int

    def cell(self, k: int) -> np.ndarray:
        r, c = divmod(k, self.glyphs_per_row)
        th, tw = self.tile_height, self.tile_width
        return self.bitmap[r * th:(r + 1) * th, c * tw:(c + 1) * tw]

    def cells(self) -> np.ndarray:
        """All tiles as a ``(rows * cols, th, tw)`` view, reading order."""
        th, tw = self.tile_height, self.tile_width
        rows = self.bitmap.shape[0] // th
        grid = self.bitmap.reshape(rows, th, self.glyphs_per_row, tw).swapaxes(1, 2)
        return grid.reshape(-1, th, tw)


def page_shape(glyph_count: int, glyphs_per_row: int, tile_h: int, tile_w: int) -> tuple[int, int]:
    rows = max(1, -(-glyph_count // glyphs_per_row))
    return rows * tile_h, glyphs_per_row * tile_w


def assemble_page(tiles: Sequence[np.ndarray], glyphs_per_row: int) -> EncodedPage:
    """Lay tiles out row-major; unused trailing cells stay background."""
    if not tiles:
        raise ValidationError("cannot assemble a page from zero tiles")
    if glyphs_per_row < 1:
        raise ValidationError("glyphs_per_row must be >= 1")
    th, tw = np.shape(tiles[0])
    for k, t in enumerate(tiles):
        if np.shape(t) != (th, tw):
            raise MixedTileSizes(f"tile {k} is {np.shape(t)}, tile 0 is {(th, tw)}")
    h, w = page_shape(len(tiles), glyphs_per_row, th, tw)
    page = EncodedPage(np.full((h, w), BACKGROUND, dtype=np.uint8), glyphs_per_row, len(tiles), th, tw)
    for k, t in enumerate(tiles):
        page.cell(k)[...] = t
    return page


def canonical_page(atlas: GlyphAtlas, cover_text: str, glyphs_per_row: int) -> EncodedPage:
    return assemble_page([t.bitmap for t in render_cover(atlas, cover_text)], glyphs_per_row)


def carrier_positions(tiles: Sequence[GlyphTile]) -> list[int]:
    return [i for i, t in enumerate(tiles) if t.is_carrier]


@dataclass
class Manifest:
    atlas_id: str
    cover_text: str
    base_seed: int
    p_max: int
    delta: int
    glyphs_per_row: int
    modality: str
    payload_length: int
    carrier_map: list[int]
    page_count: int = 1
    pages: list[str] = field(default_factory=list)
    inversion: dict[str, Any] = field(default_factory=dict)
    version: int = MANIFEST_VERSION

    def __post_init__(self):
        cm = list(self.carrier_map)
        if any(b <= a for a, b in zip(cm, cm[1:])):
            raise ValidationError("carrier_map must be strictly increasing")
        if cm and (cm[0] < 0 or cm[-1] >= len(self.cover_text)):
            raise ValidationError("carrier_map indexes outside the cover text")
        capacity = len(cm) * self.page_count
        if self.payload_length > capacity:
            raise ValidationError(
                f"payload_length {self.payload_length} exceeds {capacity} carrier slots"
            )
        inv = self.inversion
        if "s_min" in inv and "s_max" in inv and inv["s_min"] > inv["s_max"]:
            raise ValidationError("s_min > s_max")


# Fixed key order and types; inversion keys are written as ``inv.<name>``.
_FIELDS: dict[str, type] = {
    "version": int,
    "atlas_id": str,
    "cover_text": str,
    "base_seed": int,
    "p_max": int,
    "delta": int,
    "glyphs_per_row": int,
    "modality": str,
    "payload_length": int,
    "page_count": int,
    "carrier_map": list,
    "pages": list,
}
_INVERSION_TYPES: dict[str, type] = {
    "height": int,
    "width": int,
    "channels": str,
    "frame_count": int,
    "frame_len": int,
    "hop_len": int,
    "sample_rate": int,
    "sample_count": int,
    "s_min": float,
    "s_max": float,
    "degenerate": bool,
}


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)  # shortest round-trippable form
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def _parse(kind: type, raw: str, key: str, lineno: int) -> Any:
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw not in ("true", "false"):
                raise ValueError(raw)
            return raw == "true"
        if kind is list:
            if key == "carrier_map":
                return [int(x) for x in raw.split(",")] if raw else []
            return raw.split(",") if raw else []
        return raw
    except ValueError:
        raise ManifestParse(f"line {lineno}: bad value for {key}: {raw!r}") from None


def dumps_manifest(m: Manifest) -> str:
    lines = [_MAGIC]
    for key in _FIELDS:
        lines.append(f"{key}={_fmt(getattr(m, key))}")
    for key in sorted(m.inversion):
        if key not in _INVERSION_TYPES:
            raise ValidationError(f"unknown inversion parameter {key!r}")
        lines.append(f"inv.{key}={_fmt(m.inversion[key])}")
    return "\n".join(lines) + "\n"


def loads_manifest(text: str) -> Manifest:
    values: dict[str, Any] = {}
    inversion: dict[str, Any] = {}
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line or line.startswith("#"):
            continue
        key, sep, raw = line.partition("=")
        if not sep:
            raise ManifestParse(f"line {lineno}: expected key=value")
        if key.startswith("inv."):
            name = key[4:]
            if name not in _INVERSION_TYPES:
                raise ManifestParse(f"line {lineno}: unknown inversion key {name!r}")
            inversion[name] = _parse(_INVERSION_TYPES[name], raw, key, lineno)
        elif key in _FIELDS:
            values[key] = _parse(_FIELDS[key], raw, key, lineno)
        else:
            raise ManifestParse(f"line {lineno}: unknown key {key!r}")
    missing = [k for k in _FIELDS if k not in values]
    if missing:
        raise ManifestParse(f"missing required key(s): {', '.join(missing)}")
    if values["version"] != MANIFEST_VERSION:
        raise VersionUnsupported(f"manifest version {values['version']}")
    try:
        return Manifest(inversion=inversion, **values)
    except ValidationError as exc:
        raise ManifestParse(str(exc)) from exc


def write_manifest(m: Manifest, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_manifest(m), encoding="utf-8", newline="\n")


def read_manifest(path: str | os.PathLike) -> Manifest:
    return loads_manifest(Path(path).read_text(encoding="utf-8"))


def check_geometry(page: EncodedPage, manifest: Manifest, atlas: GlyphAtlas) -> None:
    if manifest.atlas_id != atlas.atlas_id:
        raise AtlasMismatch(manifest.atlas_id, atlas.atlas_id)
    expected = page_shape(
        len(manifest.cover_text), manifest.glyphs_per_row, atlas.tile_height, atlas.tile_width
    )
    if page.bitmap.shape != expected:
        raise GeometryMismatch(f"page is {page.bitmap.shape}, manifest implies {expected}")


def disassemble_page(
    page: EncodedPage, manifest: Manifest, atlas: GlyphAtlas
) -> list[tuple[GlyphTile, np.ndarray]]:
    """(canonical tile, encoded cell) for each carrier position, reading order."""
    check_geometry(page, manifest, atlas)
    tiles = render_cover(atlas, manifest.cover_text)
    return [(tiles[i], page.cell(i)) for i in manifest.carrier_map]


def page_from_bitmap(bitmap: np.ndarray, manifest: Manifest, atlas: GlyphAtlas) -> EncodedPage:
    return EncodedPage(
        np.asarray(bitmap, dtype=np.uint8),
        manifest.glyphs_per_row,
        len(manifest.cover_text),
        atlas.tile_height,
        atlas.tile_width,
    )


def save_page(page: EncodedPage, path: str | os.PathLike) -> None:
    Image.fromarray(page.bitmap, mode="L").save(path, format="PNG")


def load_page_bitmap(path: str | os.PathLike) -> np.ndarray:
    """Read a page PNG; it must be 8-bit grayscale without alpha."""
    with Image.open(path) as img:
        if img.format != "PNG" or img.mode != "L":
            raise UnsupportedFormat(f"{path}: page must be 8-bit grayscale PNG, got {img.format}/{img.mode}")
        return np.asarray(img, dtype=np.uint8).copy()
