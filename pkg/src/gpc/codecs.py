"""Modality codecs: text, image, audio and video to bounded integer payloads."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import (
    EmptyVideo,
    FrameCountMismatch,
    ShapeMismatch,
    TooShort,
    UnsupportedSecretChar,
    ValidationError,
    ValueOutOfRange,
)

MODALITIES = ("text", "image", "audio", "video")
TEXT_P_MAX = 26
DEFAULT_FRAME_LEN = 1024
DEFAULT_HOP_LEN = 512
DEFAULT_SAMPLE_RATE = 16000
ENVELOPE_CARRIER_HZ = 440.0


@dataclass(eq=False)
class PayloadSequence:
    """Bounded integers ``0 <= v <= p_max`` plus what is needed to invert them."""

    values: np.ndarray
    p_max: int
    modality: str
    inversion: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        self.values = np.asarray(self.values, dtype=np.int64).reshape(-1)
        if self.values.size:
            lo, hi = (1, TEXT_P_MAX) if self.modality == "text" else (0, self.p_max)
            bad = np.flatnonzero((self.values < lo) | (self.values > hi))
            if bad.size:
                j = int(bad[0])
                raise ValueOutOfRange(j, int(self.values[j]), lo, hi)

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, PayloadSequence):
            return NotImplemented
        return (
            self.modality == other.modality
            and self.p_max == other.p_max
            and self.inversion == other.inversion
            and np.array_equal(self.values, other.values)
        )


# -- text ---------------------------------------------------------------

def text_encode(secret: str, p_max: int = TEXT_P_MAX) -> PayloadSequence:
    secret = secret.upper()
    if not secret:
        raise ValidationError("secret text is empty")
    values = []
    for i, ch in enumerate(secret):
        if not "A" <= ch <= "Z":
            raise UnsupportedSecretChar(ch, i)
        values.append(ord(ch) - 64)
    if p_max < TEXT_P_MAX:
        raise ValidationError(f"text payloads need p_max >= {TEXT_P_MAX}, got {p_max}")
    return PayloadSequence(np.array(values), p_max, "text")


def text_decode(seq: PayloadSequence) -> str:
    _expect(seq, "text")
    for j, v in enumerate(seq.values.tolist()):
        if not 1 <= v <= TEXT_P_MAX:
            raise ValueOutOfRange(j, v, 1, TEXT_P_MAX)
    return "".join(chr(v + 64) for v in seq.values.tolist())


# -- intensity quantizer ------------------------------------------------
# round(x * p / 255) and round(v * 255 / p), half away from zero, in exact
# integer arithmetic (all operands are non-negative).

def quantize_intensity(x, p_max: int = TEXT_P_MAX):
    """Map 8-bit intensities to ``[0, p_max]``; works on scalars and arrays."""
    arr = np.asarray(x, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValidationError("intensities must be in [0, 255]")
    out = (2 * arr * p_max + 255) // 510
    return int(out) if out.ndim == 0 else out


def dequantize_intensity(v, p_max: int = TEXT_P_MAX):
    arr = np.asarray(v, dtype=np.int64)
    if arr.size and (arr.min() < 0 or arr.max() > p_max):
        raise ValidationError(f"payload values must be in [0, {p_max}]")
    out = (2 * arr * 255 + p_max) // (2 * p_max)
    return int(out) if out.ndim == 0 else out.astype(np.uint8)


# -- image --------------------------------------------------------------

def _as_rgb(pixels) -> np.ndarray:
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeMismatch(f"expected H x W x 3 image, got shape {arr.shape}")
    return arr


def _planes(img: np.ndarray, p_max: int) -> np.ndarray:
    # R plane, then G, then B, each row-major
    return quantize_intensity(np.moveaxis(img, 2, 0).reshape(-1), p_max)


def _unplanes(values: np.ndarray, h: int, w: int, p_max: int) -> np.ndarray:
    return np.moveaxis(dequantize_intensity(values, p_max).reshape(3, h, w), 0, 2).copy()


def image_encode(pixels, p_max: int = TEXT_P_MAX) -> PayloadSequence:
    img = _as_rgb(pixels)
    h, w, _ = img.shape
    return PayloadSequence(
        _planes(img, p_max), p_max, "image",
        {"height": h, "width": w, "channels": "RGB"},
    )


def image_decode(seq: PayloadSequence) -> np.ndarray:
    _expect(seq, "image")
    h, w = int(seq.inversion["height"]), int(seq.inversion["width"])
    if len(seq) != 3 * h * w:
        raise ShapeMismatch(f"{len(seq)} values cannot fill a {h}x{w}x3 image")
    return _unplanes(seq.values, h, w, seq.p_max)


# -- video --------------------------------------------------------------

def video_encode(frames: Sequence, p_max: int = TEXT_P_MAX) -> PayloadSequence:
    if len(frames) == 0:
        raise EmptyVideo("video has no frames")
    first = _as_rgb(frames[0])
    h, w, _ = first.shape
    parts = []
    for k, f in enumerate(frames):
        f = _as_rgb(f)
        if f.shape != first.shape:
            raise ShapeMismatch(f"frame {k} is {f.shape}, frame 0 is {first.shape}")
        parts.append(_planes(f, p_max))
    return PayloadSequence(
        np.concatenate(parts), p_max, "video",
        {"frame_count": len(frames), "height": h, "width": w, "channels": "RGB"},
    )


def video_decode(seq: PayloadSequence) -> list[np.ndarray]:
    _expect(seq, "video")
    t = int(seq.inversion["frame_count"])
    h, w = int(seq.inversion["height"]), int(seq.inversion["width"])
    per = 3 * h * w
    if t < 1:
        raise EmptyVideo("video has no frames")
    if len(seq) != t * per:
        raise ShapeMismatch(f"{len(seq)} values cannot fill {t} frames of {h}x{w}x3")
    return [_unplanes(seq.values[k * per:(k + 1) * per], h, w, seq.p_max) for k in range(t)]


# -- audio --------------------------------------------------------------

def frame_signal(samples: np.ndarray, frame_len: int, hop_len: int) -> np.ndarray:
    """Full frames at offsets 0, hop, 2*hop, ... as a ``(J, frame_len)`` view."""
    samples = np.asarray(samples, dtype=np.float64)
    if frame_len < 1 or hop_len < 1:
        raise ValidationError("frame_len and hop_len must be >= 1")
    if samples.size < frame_len:
        raise TooShort(f"{samples.size} samples, need at least one frame of {frame_len}")
    count = 1 + (samples.size - frame_len) // hop_len
    return np.lib.stride_tricks.sliding_window_view(samples, frame_len)[::hop_len][:count]


def frame_rms(frames: np.ndarray) -> np.ndarray:
    return np.sqrt(np.mean(np.square(frames), axis=-1))


def audio_encode(
    samples,
    frame_len: int = DEFAULT_FRAME_LEN,
    hop_len: int = DEFAULT_HOP_LEN,
    p_max: int = TEXT_P_MAX,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> PayloadSequence:
    """Frame RMS, min-max normalised and floored into ``[0, p_max]``."""
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    rms = frame_rms(frame_signal(samples, frame_len, hop_len))
    s_min, s_max = float(rms.min()), float(rms.max())
    degenerate = s_max == s_min
    if degenerate:
        values = np.zeros(rms.size, dtype=np.int64)
    else:
        scaled = (rms - s_min) / (s_max - s_min) * p_max
        values = np.clip(np.floor(scaled), 0, p_max).astype(np.int64)
    return PayloadSequence(
        values, p_max, "audio",
        {
            "frame_len": frame_len,
            "hop_len": hop_len,
            "sample_rate": sample_rate,
            "s_min": s_min,
            "s_max": s_max,
            "degenerate": degenerate,
            "sample_count": int(samples.size),
        },
    )


def ola_window(frame_len: int) -> np.ndarray:
    """Triangular window, strictly positive, summing to a constant at 50% overlap."""
    n = np.arange(frame_len)
    return 1.0 - np.abs(2.0 * n - (frame_len - 1)) / (frame_len + 1)


def overlap_add(frames: np.ndarray, hop_len: int) -> np.ndarray:
    """Windowed overlap-add, divided by the summed window so constants pass unchanged."""
    count, frame_len = frames.shape
    window = ola_window(frame_len)
    length = (count - 1) * hop_len + frame_len
    out = np.zeros(length)
    norm = np.zeros(length)
    for j in range(count):
        s = j * hop_len
        out[s:s + frame_len] += window * frames[j]
        norm[s:s + frame_len] += window
    mask = norm > 0
    out[mask] /= norm[mask]
    return out


def target_rms(seq: PayloadSequence) -> np.ndarray:
    inv = seq.inversion
    s_min, s_max = float(inv["s_min"]), float(inv["s_max"])
    return s_min + seq.values / seq.p_max * (s_max - s_min)


def audio_decode(seq: PayloadSequence, reference_frames=None) -> np.ndarray:
    """Rebuild a waveform from frame RMS values.

    With ``reference_frames`` (``(J, frame_len)``), each frame is rescaled to
    its decoded RMS; frames with zero RMS pass through unscaled. Without,
    each frame is a unit-RMS sine at :data:`ENVELOPE_CARRIER_HZ` scaled to
    the decoded RMS.
    """
    _expect(seq, "audio")
    inv = seq.inversion
    frame_len, hop = int(inv["frame_len"]), int(inv["hop_len"])
    rms_hat = target_rms(seq)
    if reference_frames is not None:
        ref = np.asarray(reference_frames, dtype=np.float64)
        if ref.ndim != 2 or ref.shape[0] != len(seq) or ref.shape[1] != frame_len:
            raise FrameCountMismatch(
                f"reference frames {ref.shape}, payload needs ({len(seq)}, {frame_len})"
            )
        rms = frame_rms(ref)
        gain = np.ones_like(rms)
        nz = rms > 0
        gain[nz] = rms_hat[nz] / rms[nz]
        frames = ref * gain[:, None]
    else:
        rate = float(inv.get("sample_rate", DEFAULT_SAMPLE_RATE))
        t = (np.arange(len(seq))[:, None] * hop + np.arange(frame_len)[None, :]) / rate
        carrier = math.sqrt(2.0) * np.sin(2.0 * math.pi * ENVELOPE_CARRIER_HZ * t)
        frames = carrier * rms_hat[:, None]
    if len(seq) == 0:
        return np.zeros(0)
    return overlap_add(frames, hop)


def _expect(seq: PayloadSequence, modality: str) -> None:
    if seq.modality != modality:
        raise ValidationError(f"expected a {modality} payload, got {seq.modality}")
