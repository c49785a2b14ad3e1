"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 integrity warning on decode,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import codecs
from .channel import ChannelConfig, capacity_report
from .container import (
    canonical_page,
    check_geometry,
    load_page_bitmap,
    page_from_bitmap,
    read_manifest,
    save_page,
    write_manifest,
)
from .errors import GPCError
from .media import AudioClip, FrameStream, load_frames, load_image, load_wav, resize_image, save_frames, save_image, save_wav
from .metrics import diff_heatmap
from .pipeline import Layout, decode, encode, evaluate, make_payload
from .raster import (
    BUNDLED_ATLASES,
    GlyphAtlas,
    build_atlas,
    bundled_atlas,
    bundled_font_bytes,
    find_atlas,
    load_atlas,
    render_cover,
    save_atlas,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_INTEGRITY = 3
EXIT_USAGE = 64

ATLAS_ENV = "GPC_ATLAS_DIR"
DEFAULT_SEED = 42

logger = logging.getLogger("gpc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _canvas(value: str) -> tuple[int, int]:
    try:
        h, w = (int(x) for x in value.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {value!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("canvas dimensions must be >= 1")
    return h, w


def _read_cover(args) -> str:
    if args.cover_text is not None:
        return args.cover_text
    return " ".join(Path(args.cover).read_text(encoding="utf-8").split())


def _atlas_for(args, modality: str | None = None, atlas_id: str | None = None) -> GlyphAtlas:
    path = args.atlas or os.environ.get(ATLAS_ENV)
    if path:
        return load_atlas(path)
    if atlas_id is not None:
        return find_atlas(atlas_id)
    return bundled_atlas("text" if modality == "text" else "payload")


def _page_paths(out: Path, count: int) -> list[Path]:
    return [out] + [out.with_name(f"{out.stem}_{k:04d}{out.suffix}") for k in range(1, count)]


def _load_pages(args, manifest, manifest_path: Path) -> list[Path]:
    if args.page:
        return [Path(p) for p in args.page]
    if not manifest.pages:
        raise UsageError("manifest lists no pages; pass --page")
    return [manifest_path.parent / p for p in manifest.pages]


# -- commands -----------------------------------------------------------

def cmd_atlas(args) -> int:
    font = Path(args.font).read_bytes() if args.font else bundled_font_bytes()
    atlas = build_atlas(font, args.size, args.tile, p_max=args.pmax,
                        font_name=Path(args.font).stem if args.font else "")
    save_atlas(atlas, args.out)
    print(f"atlas {atlas.atlas_id} -> {args.out} ({atlas.font_descriptor})")
    return EXIT_OK


def _load_secret(args):
    m = args.modality
    if m == "text":
        p = Path(args.secret)
        return p.read_text(encoding="utf-8").strip() if p.is_file() else args.secret
    if m == "image":
        img = load_image(args.secret)
        return resize_image(img, *args.canvas) if args.canvas else img
    if m == "audio":
        return load_wav(args.secret)
    stream = load_frames(args.secret, step=args.frame_step)
    if args.canvas:
        stream = FrameStream([resize_image(f, *args.canvas) for f in stream.frames], stream.fps)
    return stream


def cmd_encode(args) -> int:
    cover = _read_cover(args)
    atlas = _atlas_for(args, args.modality)
    cfg = ChannelConfig(args.seed, args.pmax, args.delta)
    payload = make_payload(args.modality, _load_secret(args), args.pmax, args.frame_len, args.hop_len)
    layout = Layout(args.glyphs_per_row, args.repeat_cover, args.workers)
    pages, manifest = encode(args.modality, payload, cover, atlas, cfg, layout)
    out = Path(args.out)
    manifest_path = Path(args.manifest)
    paths = _page_paths(out, len(pages))
    for page, path in zip(pages, paths):
        save_page(page, path)
    manifest.pages = [os.path.relpath(p, manifest_path.parent) for p in paths]
    write_manifest(manifest, manifest_path)
    print(
        f"encoded {manifest.modality}: {manifest.payload_length} values into "
        f"{len(pages)} page(s), {len(manifest.carrier_map)} carriers/page -> {out}"
    )
    return EXIT_OK


def cmd_decode(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    atlas = _atlas_for(args, atlas_id=manifest.atlas_id)
    pages = [load_page_bitmap(p) for p in _load_pages(args, manifest, manifest_path)]
    if manifest.modality != "text" and not args.out:
        raise UsageError(f"--out is required to decode {manifest.modality}")
    reference = load_wav(args.reference) if args.reference else None
    result = decode(pages, manifest, atlas, cover_check=args.cover_text, reference=reference)
    m = manifest.modality
    if m == "text":
        print(result.output)
        if args.out:
            Path(args.out).write_text(result.output + "\n", encoding="utf-8")
    elif m == "image":
        save_image(result.output, args.out)
        print(f"decoded image {result.output.shape[1]}x{result.output.shape[0]} -> {args.out}")
    elif m == "audio":
        rate = int(manifest.inversion.get("sample_rate", codecs.DEFAULT_SAMPLE_RATE))
        save_wav(AudioClip(result.output, rate), args.out)
        print(f"decoded audio ({len(result.output)} samples, mode={result.audio_mode}) -> {args.out}")
    else:
        save_frames(result.output, args.out)
        print(f"decoded video ({len(result.output)} frames) -> {args.out}")
    for w in result.warnings:
        print(f"warning: tamper suspected: {w}", file=sys.stderr)
    return EXIT_INTEGRITY if result.warnings else EXIT_OK


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_inspect(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = read_manifest(manifest_path)
    atlas = _atlas_for(args, atlas_id=manifest.atlas_id)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    canon = canonical_page(atlas, manifest.cover_text, manifest.glyphs_per_row)
    tiles = render_cover(atlas, manifest.cover_text)
    rows = []
    for p, path in enumerate(_load_pages(args, manifest, manifest_path)):
        page = page_from_bitmap(load_page_bitmap(path), manifest, atlas)
        check_geometry(page, manifest, atlas)
        heat, counts = diff_heatmap(canon.bitmap, page.bitmap, atlas.tile_height,
                                    atlas.tile_width, manifest.glyphs_per_row, len(tiles))
        suffix = "" if manifest.page_count == 1 else f"_{p:04d}"
        save_image(heat, out / f"heatmap{suffix}.png")
        rows += [(p, i, t.char, c) for i, (t, c) in enumerate(zip(tiles, counts))]
    _write_csv(out / "counts.csv", ["page", "glyph", "char", "count"], rows)
    _write_csv(out / "capacity.csv", ["glyph", "char", "eligible_count", "is_carrier"],
               [(i, c, n, int(k)) for i, (c, n, k) in enumerate(capacity_report(tiles))])
    print(f"inspected {manifest.page_count} page(s); total perturbations {sum(r[3] for r in rows)} -> {out}")
    return EXIT_OK


def cmd_capacity(args) -> int:
    atlas = _atlas_for(args, args.modality)
    tiles = render_cover(atlas, _read_cover(args))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["glyph", "char", "eligible_count", "is_carrier"])
    for i, (c, n, k) in enumerate(capacity_report(tiles)):
        w.writerow([i, c, n, int(k)])
    return EXIT_OK


def _load_media(modality: str, value: str):
    if modality == "text":
        p = Path(value)
        return p.read_text(encoding="utf-8").strip() if p.is_file() else value
    if modality == "image":
        return load_image(value)
    if modality == "audio":
        return load_wav(value)
    return load_frames(value)


def cmd_metrics(args) -> int:
    m = args.modality
    original = _load_media(m, args.original)
    recovered = _load_media(m, args.recovered)
    # compare at the recovered (canonical) resolution
    if m == "image" and original.shape != recovered.shape:
        original = resize_image(original, *recovered.shape[:2])
    if m == "video" and len(original) and len(recovered):
        shape = recovered.frames[0].shape
        if original.frames[0].shape != shape:
            original = FrameStream([resize_image(f, *shape[:2]) for f in original.frames], original.fps)
    report = evaluate(original, recovered, m)
    Path(args.out).write_text(report.scalars_csv(), encoding="utf-8")
    if report.series:
        series = Path(args.out).with_name(Path(args.out).stem + "_series.csv")
        series.write_text(report.series_csv(), encoding="utf-8")
    if args.summary:
        Path(args.summary).write_text(report.summary_text(), encoding="utf-8")
    sys.stdout.write(report.summary_text())
    return EXIT_OK


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="base seed for pixel selection (default 42)")
    common.add_argument("--atlas", help=f"atlas directory (default ${ATLAS_ENV} or bundled)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="gpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("atlas", parents=[common], help="build and save a glyph atlas")
    p.add_argument("--font", help="TrueType font file (default: bundled DejaVu Sans)")
    p.add_argument("--size", type=int, default=BUNDLED_ATLASES["payload"][0])
    p.add_argument("--tile", type=int, default=BUNDLED_ATLASES["payload"][1])
    p.add_argument("--pmax", type=int, default=26)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_atlas)

    p = sub.add_parser("encode", parents=[common], help="embed a secret into cover text")
    p.add_argument("--modality", choices=codecs.MODALITIES, required=True)
    cover = p.add_mutually_exclusive_group(required=True)
    cover.add_argument("--cover", help="cover text file")
    cover.add_argument("--cover-text")
    p.add_argument("--secret", required=True,
                   help="text (or text file), PNG, WAV, or frame directory")
    p.add_argument("--out", required=True, help="page PNG path")
    p.add_argument("--manifest", required=True)
    p.add_argument("--pmax", type=int, default=26)
    p.add_argument("--delta", type=int, default=1)
    p.add_argument("--repeat-cover", action="store_true",
                   help="repeat the cover on extra pages when the payload overflows it")
    p.add_argument("--frame-step", type=int, default=1)
    p.add_argument("--canvas", type=_canvas, help="resize image/video frames to HxW")
    p.add_argument("--glyphs-per-row", type=int, default=10)
    p.add_argument("--frame-len", type=int, default=codecs.DEFAULT_FRAME_LEN)
    p.add_argument("--hop-len", type=int, default=codecs.DEFAULT_HOP_LEN)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", parents=[common], help="recover a secret from page(s)")
    p.add_argument("--page", "--pages", nargs="+", help="page PNGs (default: from manifest)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.add_argument("--reference", help="original WAV for frame-rescaling audio reconstruction")
    p.add_argument("--cover-text", help="cover text the receiver expects")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("inspect", parents=[common], help="heatmap, per-glyph counts, capacity")
    p.add_argument("--page", "--pages", nargs="+")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("capacity", parents=[common], help="eligible pixel count per cover glyph")
    cover = p.add_mutually_exclusive_group(required=True)
    cover.add_argument("--cover")
    cover.add_argument("--cover-text")
    p.add_argument("--modality", choices=codecs.MODALITIES, default="image",
                   help="selects the bundled atlas when --atlas is absent")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("metrics", parents=[common], help="compare original and recovered media")
    p.add_argument("--modality", choices=codecs.MODALITIES, required=True)
    p.add_argument("--original", required=True)
    p.add_argument("--recovered", required=True)
    p.add_argument("--out", required=True, help="metrics CSV")
    p.add_argument("--summary", help="also write a key=value summary here")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gpc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GPCError as exc:
        print(f"gpc {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"gpc {args.command}: IoError: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
