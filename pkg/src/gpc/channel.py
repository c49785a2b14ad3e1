"""Perturbation-cardinality channel.

A glyph carries an integer ``v`` as the number of its value-0 pixels raised
to ``delta``. Pixel choice is a partial Fisher-Yates shuffle of the row-major
eligible list, driven by a SplitMix64 stream seeded per glyph::

    seed_i = mix64(base_seed + i * 0x9E3779B97F4A7C15)   (mod 2**64)

so any glyph can be embedded independently of the others.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapacityExceeded, DimensionMismatch, TamperSuspected, ValidationError
from .raster import GlyphTile

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(seed: int) -> Iterator[int]:
    state = seed & MASK64
    while True:
        state = (state + GOLDEN_GAMMA) & MASK64
        yield mix64(state)


def glyph_seed(base_seed: int, glyph_index: int) -> int:
    return mix64(base_seed + glyph_index * GOLDEN_GAMMA)


@dataclass(frozen=True)
class ChannelConfig:
    base_seed: int = 42
    p_max: int = 26
    delta: int = 1

    def __post_init__(self):
        if self.p_max < 1:
            raise ValidationError(f"p_max must be >= 1, got {self.p_max}")
        if not 1 <= self.delta <= 254:
            raise ValidationError(f"delta must be in [1, 254], got {self.delta}")
        if not 0 <= self.base_seed <= MASK64:
            raise ValidationError(f"base_seed must be a 64-bit unsigned int, got {self.base_seed}")


@dataclass(frozen=True)
class PerturbationRecord:
    glyph_index: int
    count: int
    pixels: tuple[tuple[int, int], ...]


def _check_v(tile: GlyphTile, glyph_index: int, v: int, cfg: ChannelConfig) -> None:
    if v < 0 or v > tile.capacity:
        raise CapacityExceeded(glyph_index, v, tile.capacity)
    if v > cfg.p_max:
        raise CapacityExceeded(glyph_index, v, min(cfg.p_max, tile.capacity))


def sample_indices(n: int, v: int, seed: int) -> list[int]:
    """First ``v`` positions of a forward Fisher-Yates shuffle of ``range(n)``.

    Swaps are tracked sparsely, so cost is O(v) regardless of ``n``.
    """
    rng = splitmix64(seed)
    swapped: dict[int, int] = {}
    out = []
    for i in range(v):
        j = i + next(rng) % (n - i)
        a, b = swapped.get(i, i), swapped.get(j, j)
        swapped[j] = a
        swapped[i] = b
        out.append(b)
    return out


def select_pixels(
    tile: GlyphTile, glyph_index: int, v: int, cfg: ChannelConfig
) -> list[tuple[int, int]]:
    """The ``v`` eligible pixels glyph ``glyph_index`` perturbs for payload ``v``."""
    _check_v(tile, glyph_index, v, cfg)
    idx = sample_indices(tile.capacity, v, glyph_seed(cfg.base_seed, glyph_index))
    return [(int(tile.eligible[k, 0]), int(tile.eligible[k, 1])) for k in idx]


def embed_glyph(
    tile: GlyphTile, glyph_index: int, v: int, cfg: ChannelConfig
) -> tuple[np.ndarray, PerturbationRecord]:
    pixels = select_pixels(tile, glyph_index, v, cfg)
    out = tile.bitmap.copy()
    if pixels:
        rows, cols = zip(*pixels)
        out[list(rows), list(cols)] += cfg.delta
    return out, PerturbationRecord(glyph_index, v, tuple(pixels))


def glyph_anomalies(canonical: GlyphTile, encoded: np.ndarray) -> list[str]:
    """Differences between ``encoded`` and ``canonical`` that embedding cannot produce."""
    base = canonical.bitmap
    problems = []
    darker = int(np.count_nonzero(encoded < base))
    if darker:
        problems.append(f"{darker} pixel(s) darker than canonical")
    outside = int(np.count_nonzero((encoded > base) & (base != 0)))
    if outside:
        problems.append(f"{outside} changed pixel(s) outside the eligible set")
    return problems


def extract_glyph(canonical: GlyphTile, encoded_bitmap: np.ndarray, cfg: ChannelConfig | None = None) -> int:
    """Count pixels brighter than canonical.

    Anomalies (darker pixels, changes off the eligible set) are reported as a
    :class:`TamperSuspected` warning; the count is returned regardless.
    """
    encoded = np.asarray(encoded_bitmap)
    if encoded.shape != canonical.shape:
        raise DimensionMismatch(f"encoded {encoded.shape} vs canonical {canonical.shape}")
    problems = glyph_anomalies(canonical, encoded)
    if problems:
        warnings.warn(TamperSuspected("; ".join(problems)), stacklevel=2)
    return int(np.count_nonzero(encoded > canonical.bitmap))


def capacity_report(tiles: Sequence[GlyphTile]) -> list[tuple[str, int, bool]]:
    return [(t.char, t.capacity, t.is_carrier) for t in tiles]
