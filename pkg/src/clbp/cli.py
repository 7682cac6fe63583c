"""Command-line entry point: ``clbp <command> ...``."""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    FVF,
    ExperimentConfig,
    channel_mutual_information,
    discrimination_report,
    far_frr,
    genuine_impostor_scores,
    run_identification_experiment,
)
from .config import Config, resolve_config
from .errors import ClbpError
from .features import CANONICAL_CHANNELS
from .gallery import load_gallery, save_gallery
from .illumination import Method, enhance_image
from .imaging import (
    Colorspace,
    channel_plane,
    read_image,
    replace_intensity,
    write_image,
    ycbcr_to_rgb,
)
from .pipeline import enroll_features, extract_dataset, identify, ingest
from .segmentation import segment_face
from .synthetic import write_dataset

log = logging.getLogger("clbp")

_SPACES = {"hsi": Colorspace.HSI, "ycbcr": Colorspace.YCBCR, "rgb": Colorspace.RGB}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration (overrides config files)")
    g.add_argument("--config", help="key=value config file (default: $CLBP_CONFIG)")
    g.add_argument("--channels", help="comma-separated channels, e.g. H,S,I")
    g.add_argument("--grid", help="region grid ROWSxCOLS, e.g. 4x4")
    g.add_argument("--bins", help="histogram bins per region")
    g.add_argument("--metric", choices=["kld", "l1", "l2", "xcorr"], type=str.lower)
    g.add_argument("--enhancement", choices=["norm", "svd", "none"], type=str.lower)
    g.add_argument("--space", dest="enhancement_space", choices=sorted(_SPACES), type=str.lower,
                   help="colorspace whose intensity plane is equalized")
    g.add_argument("--region-weights", dest="region_weights", help="m comma-separated weights")
    g.add_argument("--seed")


def _config(args, **extra) -> Config:
    keys = ("channels", "grid", "bins", "metric", "enhancement", "enhancement_space",
            "region_weights", "seed", "fusion", "trials", "train_counts")
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides.update(extra)
    return resolve_config(overrides, getattr(args, "config", None))


def cmd_enhance(args) -> None:
    rgb = read_image(args.input)
    space = _SPACES[args.space]
    out = enhance_image(rgb, space, Method.parse(args.method))
    if space is Colorspace.HSI:
        out = replace_intensity(rgb, out.plane("I"))
    elif space is Colorspace.YCBCR:
        out = ycbcr_to_rgb(out)
    write_image(args.output, out)


def cmd_detect(args) -> None:
    img = read_image(args.input)
    face = segment_face(img)
    print(*face.bbox)
    if args.crop:
        write_image(args.crop, face.crop)
    if args.mask:
        write_image(args.mask, face.mask)


def cmd_enroll(args) -> None:
    config = _config(args)
    index = ingest(args.dataset)
    gallery = enroll_features(extract_dataset(index, config), config)
    save_gallery(gallery, args.gallery)
    print(f"enrolled {len(gallery.subject_ids)} subjects, {gallery.sample_count()} samples "
          f"-> {args.gallery} ({index.warnings} files skipped)")


def cmd_identify(args) -> None:
    gallery = load_gallery(args.gallery)
    result = identify(read_image(args.image), gallery, args.fusion, args.top)
    print(result.decision)
    for rank, (subject, score) in enumerate(result.ranking, 1):
        print(f"{rank}\t{subject}\t{score:.6g}")


def cmd_evaluate(args) -> None:
    config = _config(args)
    bin_counts = tuple(int(b) for b in args.bin_counts.split(",")) if args.bin_counts else (config.bins,)
    features = extract_dataset(ingest(args.dataset), config)
    exp = ExperimentConfig(
        train_counts=config.train_counts,
        channels=config.channels,
        grid=config.grid,
        bins=bin_counts,
        metric=config.metric,
        fusion=tuple(args.rules.split(",")),
        trials=config.trials,
        seed=config.seed,
    )
    report = run_identification_experiment(features, exp)
    sys.stdout.write(report.to_text())
    if args.csv:
        Path(args.csv).write_text(report.to_delimited(), encoding="utf-8")


def _mi_table(index, config: Config) -> str:
    channels = [c for c in CANONICAL_CHANNELS if c != "GRAY"]
    total = np.zeros((len(channels), len(channels)))
    count = 0
    for _, paths in index.subjects:
        for path in paths:
            rgb = read_image(path)
            try:
                x, y, w, h = segment_face(rgb).bbox
            except ClbpError:
                continue
            crop = rgb.crop(x, y, w, h)
            # H and S live in [0, 1]; stretch them onto the 256-level scale
            planes = [channel_plane(crop, c) * (255.0 if c in ("H", "S") else 1.0) for c in channels]
            for i, j in itertools.combinations_with_replacement(range(len(planes)), 2):
                total[i, j] += channel_mutual_information(planes[i], planes[j])
            count += 1
    if count == 0:
        raise ClbpError("no face found in any image")
    avg = np.triu(total) + np.triu(total, 1).T
    avg /= count
    lines = ["".join(f"{c:>8}" for c in [""] + channels)]
    for c, row in zip(channels, avg):
        lines.append(f"{c:>8}" + "".join(f"{v:>8.2f}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> None:
    config = _config(args)
    index = ingest(args.dataset)
    if args.report == "mi":
        sys.stdout.write(_mi_table(index, config))
        return
    features = extract_dataset(index, config)
    if args.report == "theta":
        sys.stdout.write(discrimination_report(features, config.channels, config.metric).to_text())
        return
    genuine, impostor = genuine_impostor_scores(features, config.metric, FVF)
    curve = far_frr(genuine, impostor)
    print(f"EER {100 * curve.eer:.2f}% ({len(genuine)} genuine, {len(impostor)} impostor pairs)")
    if args.out:
        Path(args.out).write_text(curve.to_delimited(), encoding="utf-8")


def cmd_synth(args) -> None:
    root = write_dataset(args.output, args.subjects, args.samples, args.seed)
    print(f"wrote {args.subjects}x{args.samples} images under {root}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clbp", description="Color LBP face identification toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="equalize illumination of an image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=["svd", "norm"], default="norm")
    p.add_argument("--space", choices=sorted(_SPACES), default="hsi")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("detect", help="locate the face (largest skin blob)")
    p.add_argument("input")
    p.add_argument("--crop", help="write the cropped face here")
    p.add_argument("--mask", help="write the face mask here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("enroll", help="build a gallery from a dataset directory")
    p.add_argument("dataset")
    p.add_argument("--gallery", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("identify", help="identify one image against a gallery")
    p.add_argument("image")
    p.add_argument("--gallery", required=True)
    p.add_argument("--fusion", choices=["sum", "median", "mv", "fvf"], default="fvf")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="repeated random-split recognition experiment")
    p.add_argument("dataset")
    p.add_argument("--train-counts", dest="train_counts")
    p.add_argument("--trials")
    p.add_argument("--bin-counts", help="comma-separated bin counts dividing --bins, e.g. 256,128,64,32")
    p.add_argument("--rules", default="sum,median,mv,fvf")
    p.add_argument("--csv", help="also write train_count,rule,bins,rate rows here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="discrimination, mutual information or FAR/FRR report")
    p.add_argument("dataset")
    p.add_argument("--report", choices=["theta", "mi", "roc"], required=True)
    p.add_argument("--out", help="roc: write FAR,FRR curve points here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="write the seeded synthetic dataset")
    p.add_argument("output")
    p.add_argument("--subjects", type=int, default=10)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ClbpError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"clbp: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
