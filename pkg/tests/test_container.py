import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpc.channel import ChannelConfig, embed_glyph
from gpc.container import (
    Manifest,
    assemble_page,
    carrier_positions,
    disassemble_page,
    dumps_manifest,
    loads_manifest,
    read_manifest,
    write_manifest,
)
from gpc.errors import AtlasMismatch, GeometryMismatch, ManifestParse, MixedTileSizes, VersionUnsupported
from gpc.raster import render_cover


def make_manifest(**kw):
    base = dict(
        atlas_id="sha256:abc",
        cover_text="A B",
        base_seed=42,
        p_max=26,
        delta=1,
        glyphs_per_row=10,
        modality="audio",
        payload_length=2,
        carrier_map=[0, 2],
        inversion={"frame_len": 1024, "hop_len": 512, "sample_rate": 16000,
                   "s_min": 0.1 + 0.2, "s_max": 1 / 3, "degenerate": False,
                   "sample_count": 2048},
    )
    base.update(kw)
    return Manifest(**base)


def tiles(n, h=4, w=3):
    return [np.full((h, w), k, np.uint8) for k in range(n)]


def test_layout_one_row():
    page = assemble_page(tiles(5), 10)
    assert page.bitmap.shape == (4, 30)
    assert (page.bitmap[:, 15:] == 255).all()


def test_layout_three_rows():
    page = assemble_page(tiles(27), 10)
    assert page.bitmap.shape == (12, 30)


def test_cells_match_sources():
    src = [np.random.default_rng(k).integers(0, 256, (4, 3), dtype=np.uint8) for k in range(13)]
    page = assemble_page(src, 4)
    for k, t in enumerate(src):
        r, c = divmod(k, 4)
        assert np.array_equal(page.bitmap[r * 4:(r + 1) * 4, c * 3:(c + 1) * 3], t)
        assert np.array_equal(page.cells()[k], t)


def test_mixed_tile_sizes():
    with pytest.raises(MixedTileSizes):
        assemble_page([np.zeros((4, 4), np.uint8), np.zeros((4, 5), np.uint8)], 2)


def test_manifest_round_trip(tmp_path):
    m = make_manifest(pages=["p.png"])
    write_manifest(m, tmp_path / "m.txt")
    back = read_manifest(tmp_path / "m.txt")
    assert back == m
    assert back.inversion["s_min"] == 0.1 + 0.2  # full double precision


@given(st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False))
def test_manifest_floats_exact(a, b):
    lo, hi = sorted((a, b))
    m = make_manifest(inversion={"s_min": lo, "s_max": hi})
    assert loads_manifest(dumps_manifest(m)).inversion == {"s_min": lo, "s_max": hi}


def test_manifest_keeps_spaces_in_cover():
    m = make_manifest(cover_text=" A B ", carrier_map=[1, 3])
    assert loads_manifest(dumps_manifest(m)).cover_text == " A B "


def test_manifest_missing_key():
    text = "\n".join(l for l in dumps_manifest(make_manifest()).splitlines() if not l.startswith("p_max"))
    with pytest.raises(ManifestParse):
        loads_manifest(text)


@pytest.mark.parametrize("bad", ["p_max=abc", "nonsense", "bogus=1", "inv.colour=red"])
def test_manifest_bad_lines(bad):
    with pytest.raises(ManifestParse):
        loads_manifest(dumps_manifest(make_manifest()) + bad + "\n")


def test_manifest_version():
    with pytest.raises(VersionUnsupported):
        loads_manifest(dumps_manifest(make_manifest()).replace("version=1", "version=9"))


def test_manifest_invariants():
    with pytest.raises(ManifestParse):
        loads_manifest(dumps_manifest(make_manifest()).replace("carrier_map=0,2", "carrier_map=2,0"))
    with pytest.raises(ManifestParse):
        loads_manifest(dumps_manifest(make_manifest()).replace("payload_length=2", "payload_length=3"))


def _encoded_page(atlas, cover):
    cfg = ChannelConfig()
    ts = render_cover(atlas, cover)
    carriers = carrier_positions(ts)
    bitmaps = [t.bitmap for t in ts]
    for k, pos in enumerate(carriers):
        bitmaps[pos] = embed_glyph(ts[pos], pos, k + 1, cfg)[0]
    page = assemble_page(bitmaps, 4)
    m = Manifest(atlas.atlas_id, cover, 42, 26, 1, 4, "text", len(carriers), carriers)
    return page, m, bitmaps


def test_disassemble_round_trip(payload_atlas):
    page, m, bitmaps = _encoded_page(payload_atlas, "GLYPH")
    pairs = disassemble_page(page, m, payload_atlas)
    assert [p[0].char for p in pairs] == list("GLYPH")
    assert all(np.array_equal(enc, bitmaps[i]) for i, (_, enc) in enumerate(pairs))


def test_disassemble_skips_spaces(payload_atlas):
    page, m, _ = _encoded_page(payload_atlas, "AB CD")
    assert m.carrier_map == [0, 1, 3, 4]
    assert [p[0].char for p in disassemble_page(page, m, payload_atlas)] == list("ABCD")


def test_disassemble_atlas_mismatch(payload_atlas, text_atlas):
    page, m, _ = _encoded_page(payload_atlas, "AB")
    with pytest.raises(AtlasMismatch):
        disassemble_page(page, m, text_atlas)


def test_disassemble_geometry_mismatch(payload_atlas):
    page, m, _ = _encoded_page(payload_atlas, "AB")
    page.bitmap = page.bitmap[:, :-1]
    with pytest.raises(GeometryMismatch):
        disassemble_page(page, m, payload_atlas)
