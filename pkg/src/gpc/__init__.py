"""Glyph perturbation cardinality steganography.

Payloads of any modality become integers in ``[0, p_max]``; each integer is
written into one rendered glyph as the number of interior ink pixels nudged
up by one gray level, and read back by differencing against the canonical
glyph raster.
"""

from .channel import ChannelConfig, embed_glyph, extract_glyph, select_pixels
from .codecs import PayloadSequence
from .container import Manifest, read_manifest, write_manifest
from .pipeline import Layout, decode, encode, evaluate
from .raster import GlyphAtlas, GlyphTile, build_atlas, bundled_atlas, load_atlas, render_cover, save_atlas

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "GlyphAtlas",
    "GlyphTile",
    "Layout",
    "Manifest",
    "PayloadSequence",
    "build_atlas",
    "bundled_atlas",
    "decode",
    "embed_glyph",
    "encode",
    "evaluate",
    "extract_glyph",
    "load_atlas",
    "read_manifest",
    "render_cover",
    "save_atlas",
    "select_pixels",
    "write_manifest",
]
