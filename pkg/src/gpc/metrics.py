"""Fidelity metrics for every modality plus raster diagnostics."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter

from .codecs import PayloadSequence
from .errors import EmptyReference, LengthMismatch, ShapeMismatch, ZeroReferenceSignal

logger = logging.getLogger(__name__)

PSNR_SENTINEL = math.inf
SSIM_WINDOW = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DATA_RANGE = 255.0
BITS_PER_CHAR = 5


@dataclass
class MetricsReport:
    modality: str
    scalars: dict[str, float] = field(default_factory=dict)
    series: dict[str, list] = field(default_factory=dict)

    def summary_text(self) -> str:
        lines = [f"modality={self.modality}"]
        lines += [f"{k}={_num(v)}" for k, v in self.scalars.items()]
        return "\n".join(lines) + "\n"

    def series_csv(self) -> str:
        """Per-unit series as CSV, one column per series, one row per unit."""
        buf = io.StringIO()
        names = list(self.series)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", *names])
        n = max((len(v) for v in self.series.values()), default=0)
        for i in range(n):
            row = [i] + [_num(self.series[k][i]) if i < len(self.series[k]) else "" for k in names]
            writer.writerow(row)
        return buf.getvalue()

    def scalars_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["metric", "value"])
        for k, v in self.scalars.items():
            writer.writerow([k, _num(v)])
        return buf.getvalue()


def _num(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


# -- text ---------------------------------------------------------------

def levenshtein(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def cer(reference: str, hypothesis: str) -> float:
    if not reference:
        raise EmptyReference("CER needs a non-empty reference")
    return levenshtein(reference, hypothesis) / len(reference)


def _char_code(ch: str) -> int:
    return (ord(ch) - 64) & ((1 << BITS_PER_CHAR) - 1)


def ber(reference: str, hypothesis: str) -> float:
    """Bit error rate over 5-bit codes of ``ord(c) - 64``.

    Positions present in only one string count as all bits wrong.
    """
    n = max(len(reference), len(hypothesis))
    if n == 0:
        return 0.0
    wrong = 0
    for i in range(n):
        if i >= len(reference) or i >= len(hypothesis):
            wrong += BITS_PER_CHAR
        else:
            wrong += bin(_char_code(reference[i]) ^ _char_code(hypothesis[i])).count("1")
    return wrong / (n * BITS_PER_CHAR)


# -- images -------------------------------------------------------------

def psnr_from_mse(mse: float, data_range: float = DATA_RANGE) -> float:
    if mse == 0:
        return PSNR_SENTINEL
    return 10.0 * math.log10(data_range ** 2 / mse)


def ssim(a, b, data_range: float = DATA_RANGE, win_size: int = SSIM_WINDOW) -> float:
    """Mean SSIM of two 2-D arrays: uniform window, sample covariance, borders cropped."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 2:
        raise ShapeMismatch(f"ssim needs equal 2-D arrays, got {x.shape} and {y.shape}")
    if min(x.shape) < win_size:
        raise ShapeMismatch(f"image {x.shape} smaller than {win_size}x{win_size} window")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    npix = win_size ** 2
    cov_norm = npix / (npix - 1)

    def filt(z):
        return uniform_filter(z, size=win_size, mode="reflect")

    ux, uy = filt(x), filt(y)
    uxx, uyy, uxy = filt(x * x), filt(y * y), filt(x * y)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)
    num = (2 * ux * uy + c1) * (2 * vxy + c2)
    den = (ux * ux + uy * uy + c1) * (vx + vy + c2)
    pad = (win_size - 1) // 2
    s = num / den
    return float(s[pad:-pad, pad:-pad].mean())


def image_metrics(a, b) -> dict:
    """MSE, MAE, RMSE over all channels jointly; SSIM per channel and averaged."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatch(f"{x.shape} vs {y.shape}")
    if x.ndim == 2:
        x, y = x[:, :, None], y[:, :, None]
    if x.ndim != 3 or x.shape[2] not in (1, 3):
        raise ShapeMismatch(f"expected H x W x C with C in (1, 3), got {x.shape}")
    diff = x - y
    mse = float(np.mean(diff ** 2))
    per_channel = [ssim(x[:, :, c], y[:, :, c]) for c in range(x.shape[2])]
    return {
        "mse": mse,
        "mae": float(np.mean(np.abs(diff))),
        "rmse": math.sqrt(mse),
        "psnr": psnr_from_mse(mse),
        "ssim_avg": float(np.mean(per_channel)),
        "ssim_per_channel": per_channel,
    }


# -- audio --------------------------------------------------------------

def audio_metrics(x, x_hat) -> dict:
    ref = np.asarray(x, dtype=np.float64).reshape(-1)
    est = np.asarray(x_hat, dtype=np.float64).reshape(-1)
    if ref.size != est.size:
        n = min(ref.size, est.size)
        logger.warning("audio lengths differ (%d vs %d); truncating to %d", ref.size, est.size, n)
        ref, est = ref[:n], est[:n]
    signal = float(np.sum(ref ** 2))
    if signal == 0:
        raise ZeroReferenceSignal("SNR undefined for an all-zero reference")
    err = ref - est
    noise = float(np.sum(err ** 2))
    snr = PSNR_SENTINEL if noise == 0 else 10.0 * math.log10(signal / noise)
    return {
        "mae": float(np.mean(np.abs(err))),
        "mse": float(np.mean(err ** 2)),
        "snr_db": snr,
    }


# -- payloads -----------------------------------------------------------

def payload_error(sent: PayloadSequence, received: PayloadSequence) -> dict:
    a, b = sent.values, received.values
    if a.size != b.size:
        raise LengthMismatch(f"{a.size} sent vs {b.size} received")
    if a.size == 0:
        return {"mean_abs": 0.0, "max_abs": 0, "exact_match": True}
    d = np.abs(a - b)
    return {
        "mean_abs": float(d.mean()),
        "max_abs": int(d.max()),
        "exact_match": bool(not d.any()),
    }


# -- rasters ------------------------------------------------------------

def diff_heatmap(
    canonical, encoded, tile_height: int, tile_width: int, glyphs_per_row: int, glyph_count: int
) -> tuple[np.ndarray, list[int]]:
    """255 where ``encoded`` is brighter than ``canonical``; per-glyph sums."""
    c = np.asarray(canonical)
    e = np.asarray(encoded)
    if c.shape != e.shape:
        raise ShapeMismatch(f"{c.shape} vs {e.shape}")
    hit = e > c
    heat = np.where(hit, 255, 0).astype(np.uint8)
    rows = c.shape[0] // tile_height
    per_cell = hit.reshape(rows, tile_height, glyphs_per_row, tile_width).sum(axis=(1, 3))
    return heat, [int(v) for v in per_cell.reshape(-1)[:glyph_count]]


def page_mse(canonical, encoded) -> float:
    d = np.asarray(encoded, dtype=np.float64) - np.asarray(canonical, dtype=np.float64)
    return float(np.mean(d ** 2))


# -- video --------------------------------------------------------------

def video_metrics(a: Sequence, b: Sequence) -> dict:
    """Per-frame PSNR/SSIM; temporal consistency is their standard deviation."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} frames")
    per = [image_metrics(fa, fb) for fa, fb in zip(a, b)]
    psnrs = [m["psnr"] for m in per]
    ssims = [m["ssim_avg"] for m in per]
    return {
        "psnr": psnrs,
        "ssim": ssims,
        "mse": [m["mse"] for m in per],
        "psnr_mean": _mean(psnrs),
        "psnr_std": _std(psnrs),
        "ssim_mean": _mean(ssims),
        "ssim_std": _std(ssims),
    }


def _mean(xs: list[float]) -> float:
    if xs and all(math.isinf(v) for v in xs):
        return PSNR_SENTINEL
    finite = [v for v in xs if math.isfinite(v)]
    return float(np.mean(finite)) if finite else math.nan


def _std(xs: list[float]) -> float:
    # sentinel frames agree with each other exactly, so they add no spread
    if xs and all(math.isinf(v) for v in xs):
        return 0.0
    finite = [v for v in xs if math.isfinite(v)]
    return float(np.std(finite)) if finite else math.nan
