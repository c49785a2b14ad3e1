import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpc.codecs import PayloadSequence
from gpc.errors import EmptyReference, LengthMismatch, ShapeMismatch, ZeroReferenceSignal
from gpc.metrics import (
    MetricsReport,
    audio_metrics,
    ber,
    cer,
    diff_heatmap,
    image_metrics,
    levenshtein,
    payload_error,
    psnr_from_mse,
    ssim,
    video_metrics,
)


def brute_levenshtein(a, b):
    # exponential recursion, fine for tiny strings
    if not a:
        return len(b)
    if not b:
        return len(a)
    if a[0] == b[0]:
        return brute_levenshtein(a[1:], b[1:])
    return 1 + min(brute_levenshtein(a[1:], b), brute_levenshtein(a, b[1:]),
                   brute_levenshtein(a[1:], b[1:]))


@settings(max_examples=200)
@given(st.text("ABC", max_size=6), st.text("ABC", max_size=6))
def test_levenshtein_matches_recursion(a, b):
    assert levenshtein(a, b) == brute_levenshtein(a, b)


def test_cer_examples():
    assert cer("THERE", "THERE") == 0.0
    assert cer("AB", "AC") == 0.5
    assert cer("A", "") == 1.0
    with pytest.raises(EmptyReference):
        cer("", "A")


def test_ber_examples():
    assert ber("THERE", "THERE") == 0.0
    assert ber("A", "C") == pytest.approx(0.2)
    assert ber("", "") == 0.0
    assert ber("AB", "A") == 0.5  # missing char: all five bits wrong


def test_psnr_table_row():
    assert psnr_from_mse(4.2161) == pytest.approx(41.8816, abs=1e-3)
    assert psnr_from_mse(0) == math.inf


def test_image_metrics_identical(rng):
    a = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    m = image_metrics(a, a)
    assert m["mse"] == 0 and m["psnr"] == math.inf
    assert m["ssim_avg"] == 1.0 and m["ssim_per_channel"] == [1.0, 1.0, 1.0]


def test_image_metrics_constant_offset():
    a = np.full((10, 10, 3), 100, np.uint8)
    m = image_metrics(a, a + 3)
    assert (m["mse"], m["mae"], m["rmse"]) == (9.0, 3.0, 3.0)


def test_image_metrics_gray():
    a = np.zeros((8, 8), np.uint8)
    assert len(image_metrics(a, a)["ssim_per_channel"]) == 1


def test_image_metrics_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        image_metrics(np.zeros((8, 8, 3)), np.zeros((8, 9, 3)))


def test_ssim_matches_skimage(rng):
    skm = pytest.importorskip("skimage.metrics")
    a = rng.integers(0, 256, (40, 33), dtype=np.uint8)
    b = np.clip(a.astype(int) + rng.integers(-20, 21, a.shape), 0, 255).astype(np.uint8)
    ref = skm.structural_similarity(a, b, win_size=7, data_range=255)
    assert ssim(a, b) == pytest.approx(ref, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (9, 11)), arrays(np.uint8, (9, 11)))
def test_ssim_properties(a, b):
    assert ssim(a, a) == 1.0
    s = ssim(a, b)
    assert s == ssim(b, a)
    assert -1.0 <= s <= 1.0


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, (8, 8, 3)), arrays(np.uint8, (8, 8, 3)))
def test_psnr_mse_identity(a, b):
    m = image_metrics(a, b)
    if m["mse"] > 0:
        assert abs(m["psnr"] - 10 * math.log10(255 ** 2 / m["mse"])) < 1e-9
    assert abs(m["rmse"] - math.sqrt(m["mse"])) < 1e-12


def test_audio_metrics_examples():
    x = np.sin(np.linspace(0, 20, 1000))
    assert audio_metrics(x, x)["snr_db"] == math.inf
    assert audio_metrics(x, np.zeros_like(x))["snr_db"] == pytest.approx(0.0)
    assert audio_metrics(x, x / 2)["snr_db"] == pytest.approx(10 * math.log10(4))
    with pytest.raises(ZeroReferenceSignal):
        audio_metrics(np.zeros(10), np.ones(10))


def test_audio_metrics_truncates(caplog):
    m = audio_metrics(np.ones(10), np.ones(8))
    assert m["snr_db"] == math.inf
    assert "truncating" in caplog.text


def test_payload_error_examples():
    a = PayloadSequence(np.arange(10), 26, "image")
    assert payload_error(a, a) == {"mean_abs": 0.0, "max_abs": 0, "exact_match": True}
    b = PayloadSequence(np.arange(10) + np.eye(10, dtype=int)[3], 26, "image")
    assert payload_error(a, b) == {"mean_abs": 0.1, "max_abs": 1, "exact_match": False}
    with pytest.raises(LengthMismatch):
        payload_error(a, PayloadSequence([1], 26, "image"))


def test_diff_heatmap():
    canon = np.zeros((4, 6), np.uint8)
    enc = canon.copy()
    enc[0, 0] = enc[1, 1] = 1  # glyph 0
    enc[3, 1] = 1  # glyph 2 (second row, first cell)
    heat, counts = diff_heatmap(canon, enc, 2, 3, 2, 3)
    assert counts == [2, 0, 1]
    assert heat.sum() == 3 * 255
    heat, counts = diff_heatmap(canon, canon, 2, 3, 2, 3)
    assert not heat.any() and counts == [0, 0, 0]


def test_video_metrics(rng):
    f = rng.integers(0, 256, (10, 10, 3), dtype=np.uint8)
    m = video_metrics([f, f], [f, f])
    assert m["psnr"] == [math.inf, math.inf] and m["ssim"] == [1.0, 1.0]
    assert m["psnr_std"] == 0.0
    g = np.clip(f.astype(int) + 2, 0, 255).astype(np.uint8)
    m = video_metrics([f] * 3, [g] * 3)
    assert m["psnr_std"] == 0.0 and m["ssim_std"] == 0.0
    with pytest.raises(LengthMismatch):
        video_metrics([f], [])


def test_report_csv():
    r = MetricsReport("video", {"psnr_mean": 40.0, "x": math.inf}, {"psnr": [1.0, 2.0]})
    assert r.scalars_csv() == "metric,value\npsnr_mean,40.0\nx,inf\n"
    assert r.series_csv() == "index,psnr\n0,1.0\n1,2.0\n"
    assert "modality=video" in r.summary_text()
