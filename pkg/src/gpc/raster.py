"""Deterministic glyph atlas: build, persist, load, render cover text."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import AtlasCorrupt, InsufficientCapacity, UnsupportedChar

logger = logging.getLogger(__name__)

SUPPORTED_CHARS = frozenset(string.ascii_uppercase + " ")
DEFAULT_CHARSET = tuple(string.ascii_uppercase + " ")
DEFAULT_P_MAX = 26
MIN_TILE_SIDE = 16
BACKGROUND = 255

ATLAS_IMAGE = "atlas.png"
ATLAS_HEADER = "atlas.json"
_ATLAS_FORMAT = "gpc-atlas"
_ATLAS_VERSION = 1

# name -> (nominal size, tile side)
BUNDLED_ATLASES = {
    "payload": (36, 64),
    "text": (160, 192),
}
BUNDLED_FONT = "DejaVuSans.ttf"


@dataclass(frozen=True, eq=False)
class GlyphTile:
    """One canonical glyph raster and its eligible (value-0) pixels.

    ``eligible`` is an ``(n, 2)`` array of ``(row, col)`` in row-major order.
    """

    char: str
    bitmap: np.ndarray
    eligible: np.ndarray = field(init=False)

    def __post_init__(self):
        bitmap = np.ascontiguousarray(self.bitmap, dtype=np.uint8)
        bitmap.setflags(write=False)
        object.__setattr__(self, "bitmap", bitmap)
        eligible = np.argwhere(bitmap == 0).astype(np.int64)
        eligible.setflags(write=False)
        object.__setattr__(self, "eligible", eligible)

    @property
    def capacity(self) -> int:
        return len(self.eligible)

    @property
    def is_carrier(self) -> bool:
        return self.capacity > 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.bitmap.shape


@dataclass(frozen=True, eq=False)
class GlyphAtlas:
    charset: tuple[str, ...]
    tile_width: int
    tile_height: int
    glyphs: Mapping[str, GlyphTile]
    font_descriptor: str = ""
    atlas_id: str = field(init=False)

    def __post_init__(self):
        for ch in self.charset:
            tile = self.glyphs[ch]
            if tile.shape != (self.tile_height, self.tile_width):
                raise AtlasCorrupt(
                    f"glyph {ch!r} is {tile.shape}, expected "
                    f"{(self.tile_height, self.tile_width)}"
                )
        object.__setattr__(self, "atlas_id", _atlas_digest(self))

    def __getitem__(self, char: str) -> GlyphTile:
        return self.glyphs[char]

    def strip(self) -> np.ndarray:
        """All glyphs left to right in charset order."""
        return np.concatenate([self.glyphs[c].bitmap for c in self.charset], axis=1)


def _header_fields(atlas: GlyphAtlas) -> dict:
    return {
        "charset": "".join(atlas.charset),
        "tile_width": atlas.tile_width,
        "tile_height": atlas.tile_height,
    }


def _atlas_digest(atlas: GlyphAtlas) -> str:
    h = hashlib.sha256()
    h.update(f"{_ATLAS_FORMAT}/{_ATLAS_VERSION}\n".encode())
    h.update(json.dumps(_header_fields(atlas), sort_keys=True).encode("utf-8"))
    for ch in atlas.charset:
        h.update(atlas.glyphs[ch].bitmap.tobytes())
    return "sha256:" + h.hexdigest()


def _check_charset(charset: Iterable[str]) -> tuple[str, ...]:
    out = []
    for i, ch in enumerate(charset):
        if ch not in SUPPORTED_CHARS:
            raise UnsupportedChar(ch, i)
        if ch not in out:
            out.append(ch)
    return tuple(out)


def render_glyph(font: ImageFont.FreeTypeFont, char: str, tile_side: int) -> np.ndarray:
    """Rasterize ``char`` centred by its bounding box in a square tile."""
    img = Image.new("L", (tile_side, tile_side), BACKGROUND)
    if char.strip():
        left, top, right, bottom = font.getbbox(char)
        width, height = right - left, bottom - top
        if width > tile_side or height > tile_side:
            logger.warning(
                "glyph %r (%dx%d) clipped by %d px tile", char, width, height, tile_side
            )
        x = (tile_side - width) // 2 - left
        y = (tile_side - height) // 2 - top
        ImageDraw.Draw(img).text((x, y), char, font=font, fill=0)
    return np.asarray(img, dtype=np.uint8)


def build_atlas(
    font_bytes: bytes,
    nominal_size: int,
    tile_side: int,
    charset: Sequence[str] = DEFAULT_CHARSET,
    p_max: int = DEFAULT_P_MAX,
    font_name: str = "",
) -> GlyphAtlas:
    """Render every character of ``charset`` and validate its capacity.

    Raises:
        UnsupportedChar: a character outside A-Z and space.
        InsufficientCapacity: an ink-bearing glyph has fewer than ``p_max``
            pixels at intensity 0, or the tile is below the minimum side.
    """
    chars = _check_charset(charset)
    if tile_side < MIN_TILE_SIDE:
        raise InsufficientCapacity(
            None, 0, p_max, f"tile side {tile_side} < {MIN_TILE_SIDE}"
        )
    # BASIC layout keeps rasterization independent of libraqm availability.
    font = ImageFont.truetype(
        io.BytesIO(font_bytes), nominal_size, layout_engine=ImageFont.Layout.BASIC
    )
    glyphs = {}
    for ch in chars:
        tile = GlyphTile(ch, render_glyph(font, ch, tile_side))
        if ch != " " and tile.capacity < p_max:
            raise InsufficientCapacity(ch, tile.capacity, p_max)
        glyphs[ch] = tile
    family = " ".join(font.getname()) if not font_name else font_name
    return GlyphAtlas(
        charset=chars,
        tile_width=tile_side,
        tile_height=tile_side,
        glyphs=glyphs,
        font_descriptor=f"{family} {nominal_size}pt tile={tile_side}px",
    )


def save_atlas(atlas: GlyphAtlas, path: str | os.PathLike) -> None:
    """Write ``atlas.png`` (glyph strip) and ``atlas.json`` into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    Image.fromarray(atlas.strip(), mode="L").save(path / ATLAS_IMAGE, format="PNG")
    header = {
        "format": _ATLAS_FORMAT,
        "version": _ATLAS_VERSION,
        **_header_fields(atlas),
        "font_descriptor": atlas.font_descriptor,
        "atlas_id": atlas.atlas_id,
    }
    (path / ATLAS_HEADER).write_text(
        json.dumps(header, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_atlas(path: str | os.PathLike) -> GlyphAtlas:
    path = Path(path)
    try:
        header = json.loads((path / ATLAS_HEADER).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise AtlasCorrupt(f"{path / ATLAS_HEADER}: {exc}") from exc
    if header.get("format") != _ATLAS_FORMAT or header.get("version") != _ATLAS_VERSION:
        raise AtlasCorrupt(f"{path}: not a version {_ATLAS_VERSION} atlas")
    try:
        charset = tuple(header["charset"])
        tw, th = int(header["tile_width"]), int(header["tile_height"])
        expected_id = header["atlas_id"]
    except (KeyError, TypeError, ValueError) as exc:
        raise AtlasCorrupt(f"{path / ATLAS_HEADER}: bad header ({exc})") from exc
    try:
        with Image.open(path / ATLAS_IMAGE) as img:
            img.load()
            if img.mode != "L":
                raise AtlasCorrupt(f"atlas image mode {img.mode}, expected L")
            strip = np.asarray(img, dtype=np.uint8)
    except FileNotFoundError:
        raise
    except (OSError, SyntaxError, ValueError) as exc:
        raise AtlasCorrupt(f"{path / ATLAS_IMAGE}: {exc}") from exc
    if strip.shape != (th, tw * len(charset)):
        raise AtlasCorrupt(f"atlas image is {strip.shape}, header implies {(th, tw * len(charset))}")
    glyphs = {
        ch: GlyphTile(ch, strip[:, i * tw:(i + 1) * tw]) for i, ch in enumerate(charset)
    }
    atlas = GlyphAtlas(
        charset=charset,
        tile_width=tw,
        tile_height=th,
        glyphs=glyphs,
        font_descriptor=header.get("font_descriptor", ""),
    )
    if atlas.atlas_id != expected_id:
        raise AtlasCorrupt(f"digest mismatch: header {expected_id}, data {atlas.atlas_id}")
    return atlas


def bundled_font_bytes() -> bytes:
    return resources.files("gpc").joinpath("data", BUNDLED_FONT).read_bytes()


def bundled_atlas_path(name: str = "payload") -> Path:
    size, tile = BUNDLED_ATLASES[name]
    return Path(str(resources.files("gpc").joinpath("data", f"atlas-{tile}")))


def bundled_atlas(name: str = "payload") -> GlyphAtlas:
    """Load a committed atlas: ``"payload"`` (36pt/64px) or ``"text"`` (160pt/192px)."""
    return load_atlas(bundled_atlas_path(name))


def build_bundled_atlas(name: str = "payload") -> GlyphAtlas:
    """Re-render a committed atlas from the bundled font."""
    size, tile = BUNDLED_ATLASES[name]
    return build_atlas(bundled_font_bytes(), size, tile)


def find_atlas(atlas_id: str, search: Iterable[str | os.PathLike] = ()) -> GlyphAtlas:
    """Locate an atlas by id among ``search`` dirs, then the bundled atlases."""
    candidates = [Path(p) for p in search] + [bundled_atlas_path(n) for n in BUNDLED_ATLASES]
    for p in candidates:
        header = p / ATLAS_HEADER
        if not header.is_file():
            continue
        try:
            if json.loads(header.read_text(encoding="utf-8")).get("atlas_id") == atlas_id:
                return load_atlas(p)
        except json.JSONDecodeError:
            continue
    raise FileNotFoundError(f"no atlas with id {atlas_id}")


def render_cover(atlas: GlyphAtlas, cover_text: str) -> list[GlyphTile]:
    """Canonical tiles for ``cover_text`` (uppercased) in reading order."""
    tiles = []
    for i, ch in enumerate(cover_text.upper()):
        try:
            tiles.append(atlas.glyphs[ch])
        except KeyError:
            raise UnsupportedChar(ch, i) from None
    return tiles
