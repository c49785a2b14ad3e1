"""Minimal media ingest/emit: 8-bit PNG, PCM16 WAV, numbered PNG frame dirs."""

from __future__ import annotations

import logging
import os
import re
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .errors import MissingFrame, MixedDimensions, UnsupportedFormat, ValidationError

logger = logging.getLogger(__name__)

FRAME_PATTERN = "frame_{:06d}.png"
_FRAME_RE = re.compile(r"^frame_(\d{6})\.png$")


@dataclass
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if s.size < 1:
            raise ValidationError("audio clip has no samples")
        self.samples = np.clip(s, -1.0, 1.0)


@dataclass
class FrameStream:
    frames: list
    fps: int = 30

    def __post_init__(self):
        self.frames = [np.asarray(f, dtype=np.uint8) for f in self.frames]
        shapes = {f.shape for f in self.frames}
        if len(shapes) > 1:
            raise MixedDimensions(f"frames have differing shapes: {sorted(shapes)}")

    def __len__(self) -> int:
        return len(self.frames)


# -- images -------------------------------------------------------------

def load_image(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit PNG as ``H x W x 3`` uint8 (gray is replicated)."""
    try:
        img = Image.open(path)
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    with img:
        if img.format != "PNG":
            raise UnsupportedFormat(f"{path}: {img.format} is not PNG")
        mode = img.mode
        if mode in ("I", "I;16", "I;16B", "I;16L", "F"):
            raise UnsupportedFormat(f"{path}: {mode} (not 8-bit)")
        if mode == "L":
            arr = np.asarray(img, dtype=np.uint8)
            return np.repeat(arr[:, :, None], 3, axis=2)
        if mode == "RGB":
            return np.asarray(img, dtype=np.uint8).copy()
        if mode in ("P", "RGBA", "LA", "1"):
            return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()
        raise UnsupportedFormat(f"{path}: unsupported PNG mode {mode}")


def save_image(pixels, path: str | os.PathLike) -> None:
    arr = np.asarray(pixels)
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValidationError("pixel values must be in [0, 255]")
        arr = arr.astype(np.uint8)
    if arr.ndim == 2:
        mode = "L"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        mode = "RGB"
    else:
        raise ValidationError(f"cannot save array of shape {arr.shape} as PNG")
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _area_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Weights averaging the input interval covered by each output cell."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for k in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            m[i, k] = min(hi, k + 1) - max(lo, k)
    return m / scale


def _bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    # half-pixel centres, edge-clamped
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        x = min(max((i + 0.5) * scale - 0.5, 0.0), n_in - 1)
        k = int(np.floor(x))
        f = x - k
        m[i, k] += 1.0 - f
        if f > 0:
            m[i, k + 1] += f
    return m


def _axis_matrix(n_in: int, n_out: int) -> np.ndarray:
    if n_out == n_in:
        return np.eye(n_in)
    if n_out < n_in:
        return _area_matrix(n_in, n_out)
    return _bilinear_matrix(n_in, n_out)


def resize_image(pixels, out_h: int, out_w: int) -> np.ndarray:
    """Area-average when shrinking an axis, bilinear when growing it."""
    if out_h < 1 or out_w < 1:
        raise ValidationError("output dimensions must be >= 1")
    arr = np.asarray(pixels)
    h, w = arr.shape[:2]
    if (h, w) == (out_h, out_w):
        return arr.copy()
    rows = _axis_matrix(h, out_h)
    cols = _axis_matrix(w, out_w)
    data = arr.astype(np.float64)
    out = np.einsum("ih,hw...->iw...", rows, data)
    out = np.einsum("jw,iw...->ij...", cols, out)
    return np.clip(_round_half_up(out), 0, 255).astype(np.uint8)


# -- audio --------------------------------------------------------------

def load_wav(path: str | os.PathLike) -> AudioClip:
    """Read a PCM16 WAV; stereo is averaged to mono."""
    try:
        with wave.open(os.fspath(path), "rb") as wf:
            width = wf.getsampwidth()
            channels = wf.getnchannels()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    if width != 2:
        raise UnsupportedFormat(f"{path}: {8 * width}-bit samples, only 16-bit PCM supported")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if channels > 1:
        logger.warning("%s: %d channels averaged to mono", path, channels)
        data = data.reshape(-1, channels).mean(axis=1)
    return AudioClip(data / 32768.0, rate)


def save_wav(clip: AudioClip, path: str | os.PathLike) -> None:
    pcm = np.clip(np.round(clip.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(os.fspath(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(clip.sample_rate))
        wf.writeframes(pcm.tobytes())


# -- frame directories --------------------------------------------------

def load_frames(directory: str | os.PathLike, step: int = 1, fps: int = 30) -> FrameStream:
    """Read ``frame_%06d.png`` files, contiguous from 0, keeping every ``step``-th."""
    if step < 1:
        raise ValidationError("frame step must be >= 1")
    directory = Path(directory)
    indices = sorted(
        int(m.group(1)) for p in directory.iterdir() if (m := _FRAME_RE.match(p.name))
    )
    for expected, got in enumerate(indices):
        if got != expected:
            raise MissingFrame(expected)
    frames = []
    for k in indices[::step]:
        frame = load_image(directory / FRAME_PATTERN.format(k))
        if frames and frame.shape != frames[0].shape:
            raise MixedDimensions(f"frame {k} is {frame.shape}, frame 0 is {frames[0].shape}")
        frames.append(frame)
    return FrameStream(frames, fps)


def save_frames(stream: FrameStream | Sequence, directory: str | os.PathLike) -> None:
    frames = stream.frames if isinstance(stream, FrameStream) else list(stream)
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for k, f in enumerate(frames):
        save_image(f, directory / FRAME_PATTERN.format(k))
