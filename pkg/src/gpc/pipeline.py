"""End-to-end encode/decode/evaluate across modalities."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import codecs
from .channel import ChannelConfig, select_pixels
from .codecs import PayloadSequence
from .container import (
    EncodedPage,
    Manifest,
    canonical_page,
    carrier_positions,
    check_geometry,
    page_from_bitmap,
)
from .errors import CoverTooShort, GeometryMismatch, ValidationError
from .media import AudioClip, FrameStream
from .metrics import MetricsReport, audio_metrics, ber, cer, image_metrics, video_metrics
from .raster import GlyphAtlas, render_cover

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Layout:
    glyphs_per_row: int = 10
    repeat_cover: bool = False
    workers: int = 1


@dataclass
class DecodeResult:
    payload: PayloadSequence
    output: Any
    warnings: list[str] = field(default_factory=list)
    audio_mode: str | None = None


def make_payload(
    modality: str,
    secret: Any,
    p_max: int = 26,
    frame_len: int = codecs.DEFAULT_FRAME_LEN,
    hop_len: int = codecs.DEFAULT_HOP_LEN,
) -> PayloadSequence:
    """Run the modality codec on a raw secret (str, RGB array, AudioClip, frames)."""
    if isinstance(secret, PayloadSequence):
        return secret
    if modality == "text":
        return codecs.text_encode(secret, p_max)
    if modality == "image":
        return codecs.image_encode(secret, p_max)
    if modality == "audio":
        if isinstance(secret, AudioClip):
            return codecs.audio_encode(secret.samples, frame_len, hop_len, p_max, secret.sample_rate)
        return codecs.audio_encode(secret, frame_len, hop_len, p_max)
    if modality == "video":
        frames = secret.frames if isinstance(secret, FrameStream) else secret
        return codecs.video_encode(frames, p_max)
    raise ValidationError(f"unknown modality {modality!r}")


def encode(
    modality: str,
    secret_input: Any,
    cover_text: str,
    atlas: GlyphAtlas,
    cfg: ChannelConfig = ChannelConfig(),
    layout: Layout = Layout(),
) -> tuple[list[EncodedPage], Manifest]:
    """Embed a secret into one or more pages of ``cover_text``.

    Carriers of the cover are filled in reading order; if the payload does
    not fit, the cover is repeated on further pages when
    ``layout.repeat_cover`` is set, otherwise :class:`CoverTooShort` is raised.
    """
    payload = make_payload(modality, secret_input, cfg.p_max)
    if payload.p_max != cfg.p_max:
        raise ValidationError(f"payload p_max {payload.p_max} != channel p_max {cfg.p_max}")
    cover = cover_text.upper()
    tiles = render_cover(atlas, cover)
    carriers = carrier_positions(tiles)
    n = len(payload)
    per_page = len(carriers)
    if n and not per_page:
        raise CoverTooShort(n, 0)
    page_count = max(1, -(-n // per_page)) if per_page else 1
    if page_count > 1 and not layout.repeat_cover:
        raise CoverTooShort(n, per_page)

    base = canonical_page(atlas, cover, layout.glyphs_per_row)
    values = payload.values.tolist()
    jobs = []  # (page, cell, glyph_index, v)
    for p in range(page_count):
        for k, pos in enumerate(carriers):
            j = p * per_page + k
            if j >= n:
                break
            jobs.append((p, pos, p * len(cover) + pos, values[j]))

    def pick(job):
        _, pos, gi, v = job
        return select_pixels(tiles[pos], gi, v, cfg)

    if layout.workers > 1:
        with ThreadPoolExecutor(layout.workers) as pool:
            selections = list(pool.map(pick, jobs, chunksize=256))
    else:
        selections = [pick(job) for job in jobs]

    pages = [
        EncodedPage(base.bitmap.copy(), base.glyphs_per_row, base.glyph_count,
                    base.tile_height, base.tile_width)
        for _ in range(page_count)
    ]
    for (p, pos, _, _), pixels in zip(jobs, selections):
        if pixels:
            cell = pages[p].cell(pos)
            rows, cols = zip(*pixels)
            cell[list(rows), list(cols)] += cfg.delta

    manifest = Manifest(
        atlas_id=atlas.atlas_id,
        cover_text=cover,
        base_seed=cfg.base_seed,
        p_max=cfg.p_max,
        delta=cfg.delta,
        glyphs_per_row=layout.glyphs_per_row,
        modality=payload.modality,
        payload_length=n,
        carrier_map=carriers,
        page_count=page_count,
        inversion=dict(payload.inversion),
    )
    return pages, manifest


def _as_page(page, manifest: Manifest, atlas: GlyphAtlas) -> EncodedPage:
    if isinstance(page, EncodedPage):
        return page
    return page_from_bitmap(page, manifest, atlas)


def extract_counts(
    page: EncodedPage, canonical: EncodedPage, manifest: Manifest, atlas: GlyphAtlas,
    page_index: int, verify_pattern: bool = True,
) -> tuple[list[int], list[str]]:
    """Per-carrier counts for one page plus integrity findings."""
    check_geometry(page, manifest, atlas)
    enc, can = page.bitmap, canonical.bitmap
    problems = []
    darker = int(np.count_nonzero(enc < can))
    if darker:
        problems.append(f"page {page_index}: {darker} pixel(s) darker than canonical")
    off_set = int(np.count_nonzero((enc > can) & (can != 0)))
    if off_set:
        problems.append(f"page {page_index}: {off_set} changed pixel(s) outside eligible sets")
    counts_all = (page.cells() > canonical.cells()).sum(axis=(1, 2))
    carriers = set(manifest.carrier_map)
    stray = [k for k in range(len(counts_all)) if k not in carriers and counts_all[k]]
    if stray:
        problems.append(f"page {page_index}: changes in non-carrier cell(s) {stray}")
    counts = [int(counts_all[k]) for k in manifest.carrier_map]
    if verify_pattern:
        cfg = ChannelConfig(manifest.base_seed, manifest.p_max, manifest.delta)
        tiles = render_cover(atlas, manifest.cover_text)
        for pos, v in zip(manifest.carrier_map, counts):
            if v == 0 or v > min(cfg.p_max, tiles[pos].capacity):
                continue
            gi = page_index * len(manifest.cover_text) + pos
            expect = np.zeros((atlas.tile_height, atlas.tile_width), dtype=bool)
            for r, c in select_pixels(tiles[pos], gi, v, cfg):
                expect[r, c] = True
            got = page.cell(pos) > canonical.cell(pos)
            if not np.array_equal(expect, got):
                problems.append(
                    f"page {page_index}: glyph {pos} perturbation pattern does not match seed"
                )
    return counts, problems


def decode(
    pages: Sequence,
    manifest: Manifest,
    atlas: GlyphAtlas,
    cover_check: str | None = None,
    reference: Any = None,
) -> DecodeResult:
    """Recover the payload and invert the modality codec.

    ``reference`` (an :class:`AudioClip` or sample array) rebuilds audio by
    rescaling the original frames; without it audio is rebuilt from a sine
    carrier.
    """
    if cover_check is not None and cover_check.upper() != manifest.cover_text:
        raise GeometryMismatch("cover text differs from the manifest")
    if len(pages) != manifest.page_count:
        raise GeometryMismatch(f"{len(pages)} page(s) given, manifest lists {manifest.page_count}")
    canonical = canonical_page(atlas, manifest.cover_text, manifest.glyphs_per_row)
    values: list[int] = []
    problems: list[str] = []
    per_page = len(manifest.carrier_map)
    for p, raw in enumerate(pages):
        page = _as_page(raw, manifest, atlas)
        counts, issues = extract_counts(page, canonical, manifest, atlas, p)
        problems += issues
        take = max(0, min(per_page, manifest.payload_length - p * per_page))
        values += counts[:take]
        if any(counts[take:]):
            problems.append(f"page {p}: perturbations beyond payload_length")
    for msg in problems:
        logger.info("tamper suspected: %s", msg)

    payload = PayloadSequence(np.array(values, dtype=np.int64), manifest.p_max,
                              manifest.modality, dict(manifest.inversion))
    audio_mode = None
    m = manifest.modality
    if m == "text":
        output = codecs.text_decode(payload) if len(payload) else ""
    elif m == "image":
        output = codecs.image_decode(payload)
    elif m == "video":
        output = codecs.video_decode(payload)
    else:
        ref_frames = None
        if reference is not None:
            samples = reference.samples if isinstance(reference, AudioClip) else reference
            inv = manifest.inversion
            ref_frames = codecs.frame_signal(samples, int(inv["frame_len"]), int(inv["hop_len"]))
            audio_mode = "reference"
        else:
            audio_mode = "envelope"
        output = codecs.audio_decode(payload, ref_frames)
    return DecodeResult(payload, output, problems, audio_mode)


def evaluate(original: Any, recovered: Any, modality: str) -> MetricsReport:
    if modality == "text":
        return MetricsReport("text", {
            "cer": cer(original, recovered),
            "ber": ber(original, recovered),
            "exact": float(original == recovered),
        })
    if modality == "image":
        m = image_metrics(original, recovered)
        scalars = {k: m[k] for k in ("mse", "mae", "rmse", "psnr", "ssim_avg")}
        for name, v in zip("RGB", m["ssim_per_channel"]):
            scalars[f"ssim_{name}"] = v
        scalars["max_abs_error"] = float(
            np.max(np.abs(np.asarray(original, dtype=np.int64) - np.asarray(recovered, dtype=np.int64)))
        )
        return MetricsReport("image", scalars)
    if modality == "audio":
        x = original.samples if isinstance(original, AudioClip) else np.asarray(original)
        y = recovered.samples if isinstance(recovered, AudioClip) else np.asarray(recovered)
        n = min(len(x), len(y))
        return MetricsReport("audio", audio_metrics(x[:n], y[:n]))
    if modality == "video":
        a = original.frames if isinstance(original, FrameStream) else list(original)
        b = recovered.frames if isinstance(recovered, FrameStream) else list(recovered)
        m = video_metrics(a, b)
        scalars = {k: m[k] for k in ("psnr_mean", "psnr_std", "ssim_mean", "ssim_std")}
        scalars["max_abs_error"] = float(max(
            (np.max(np.abs(fa.astype(np.int64) - fb.astype(np.int64))) for fa, fb in zip(a, b)),
            default=0,
        ))
        return MetricsReport("video", scalars, {"psnr": m["psnr"], "ssim": m["ssim"], "mse": m["mse"]})
    raise ValidationError(f"unknown modality {modality!r}")

