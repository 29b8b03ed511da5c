"""Command-line front end: run the pipeline, emit synthetic pairs, selftest.

Flag values override config-file values, which override built-in defaults.
Diagnostics go to stderr; stdout carries the one-line run summary.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .pipeline import PipelineError, RunConfig, run_pipeline, summary_line
from .netpbm import save_image
from .selftest import run_selftest
from .synthetic import make_synthetic_pair

_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def _parse_layers(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad layer list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpinvert",
        description="Exemplar-guided translation: warp, invert, select.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="translate a source/target image pair")
    run_p.add_argument("--source", required=True, help="source image (PPM/PGM)")
    run_p.add_argument("--target", required=True, help="target exemplar (PPM/PGM)")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--config", help="JSON config file with RunConfig fields")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--layers", type=_parse_layers,
                       help="comma-separated composing layers, e.g. 2,3,4,5")
    run_p.add_argument("--codes", type=int, help="latent codes per hypothesis")
    run_p.add_argument("--steps", type=int, help="optimization steps")
    run_p.add_argument("--alpha", type=float, help="warp softmax temperature")
    run_p.add_argument("--distance", choices=("l2", "perceptual", "l1", "combined"),
                       help="inversion distance kind")
    run_p.add_argument("--factor", type=int, help="guide-to-output downsample factor")
    run_p.add_argument("--ref-dir", help="directory of reference images for scoring")

    synth_p = sub.add_parser("synth", help="write a synthetic source/target pair")
    synth_p.add_argument("--seed", type=int, required=True)
    synth_p.add_argument("--out", required=True, help="output directory")
    synth_p.add_argument("--size", type=int, default=16, help="image side length")
    synth_p.add_argument("--edge-source", action="store_true",
                         help="emit the source as a single-channel edge map")

    sub.add_parser("selftest", help="run the built-in invariant suite")
    return parser


def _config_from_args(args) -> RunConfig:
    values: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - _CONFIG_FIELDS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    flag_map = {
        "master_seed": args.seed,
        "hypothesis_layers": args.layers,
        "code_count": args.codes,
        "steps": args.steps,
        "warp_temperature": args.alpha,
        "distance_kind": args.distance,
        "downsample_factor": args.factor,
        "reference_dir": args.ref_dir,
    }
    for key, value in flag_map.items():
        if value is not None:
            values[key] = value
    if values.get("reference_dir") and "reference_mode" not in values:
        values["reference_mode"] = "directory"
    values["source_path"] = args.source
    values["target_path"] = args.target
    values["output_dir"] = args.out
    for key in ("hypothesis_layers", "extractor_widths", "channel_schedule"):
        if isinstance(values.get(key), list):
            values[key] = tuple(values[key])
    return RunConfig(**values)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    try:
        outcome = run_pipeline(cfg)
    except PipelineError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(summary_line(outcome))
    if outcome.partial:
        for failure in outcome.failures:
            print(f"warning: hypothesis layer {failure['layer']} aborted: "
                  f"{failure['error']}", file=sys.stderr)
        return 2
    return 0


def _cmd_synth(args) -> int:
    source, target = make_synthetic_pair(args.seed, size=args.size,
                                         edge_source=args.edge_source)
    os.makedirs(args.out, exist_ok=True)
    src_name = "source.pgm" if args.edge_source else "source.ppm"
    save_image(source, os.path.join(args.out, src_name))
    save_image(target, os.path.join(args.out, "target.ppm"))
    print(f"wrote {src_name} and target.ppm to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "selftest":
            return 1 if run_selftest() else 0
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
