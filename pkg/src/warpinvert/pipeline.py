"""End-to-end orchestration: warp the exemplar, invert under every
composing-layer hypothesis, select by Frechet score, write images and a
structured report.

All randomness flows from a single master seed unless a stage seed is pinned
explicitly, so two runs with the same config produce byte-identical outputs.
The JSON report embeds the fully resolved configuration and every number a
rerun needs to be reproduced.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, netpbm, ops
from .correspondence import WarpConfig, centralize, correlation_matrix, warp
from .features import DEFAULT_WIDTHS, build_extractor, extract_features
from .generator import (
    DEFAULT_CODE_COUNT,
    DEFAULT_LATENT_DIM,
    DEFAULT_LAYER_COUNT,
    BASE_RESOLUTION,
    HypothesisConfig,
    build_generator,
    default_channel_schedule,
)
from .inversion import (
    DEFAULT_BETA1,
    DEFAULT_BETA2,
    DEFAULT_LEARNING_RATE,
    DEFAULT_PERCEPTUAL_WEIGHT,
    NonFiniteLossError,
    invert,
)
from .selection import (
    DEFAULT_CROP_COUNT,
    DEFAULT_EMBED_SIZE,
    DEFAULT_REFERENCE_COUNT,
    SelectionReport,
    reference_from_generator,
    reference_from_images,
    select_best,
)

REPORT_NAME = "report.json"
WARPED_NAME = "warped.ppm"
FINAL_NAME = "final.ppm"


class PipelineError(RuntimeError):
    """The run could not produce a final image."""


@dataclass
class RunConfig:
    """Everything one run needs; every field has a working default.

    Seeds left as None are derived deterministically from master_seed.
    """

    source_path: str = ""
    target_path: str = ""
    output_dir: str = ""
    master_seed: int = 0
    # feature extraction
    extractor_seed: int | None = None
    extractor_widths: tuple[int, ...] = DEFAULT_WIDTHS
    separate_target_extractor: bool = False
    # correspondence warp
    warp_temperature: float = 100.0
    warp_norm_eps: float = 1e-8
    # generator
    generator_seed: int | None = None
    layer_count: int = DEFAULT_LAYER_COUNT
    latent_dim: int = DEFAULT_LATENT_DIM
    base_resolution: int = BASE_RESOLUTION
    channel_schedule: tuple[int, ...] | None = None
    # inversion
    hypothesis_layers: tuple[int, ...] = (2, 3, 4, 5)
    code_count: int = DEFAULT_CODE_COUNT
    steps: int = 400
    learning_rate: float = DEFAULT_LEARNING_RATE
    adam_beta1: float = DEFAULT_BETA1
    adam_beta2: float = DEFAULT_BETA2
    distance_kind: str = "combined"
    perceptual_weight: float = DEFAULT_PERCEPTUAL_WEIGHT
    downsample_factor: int = 4
    inversion_seed: int | None = None
    # selection
    fid_crop_count: int = DEFAULT_CROP_COUNT
    fid_embed_size: int = DEFAULT_EMBED_SIZE
    fid_crop_seed: int | None = None
    reference_mode: str = "generator"  # "generator" or "directory"
    reference_dir: str | None = None
    reference_sample_count: int = DEFAULT_REFERENCE_COUNT
    reference_seed: int | None = None


def resolve_config(cfg: RunConfig) -> RunConfig:
    """Fill in every derived value so the config pins the run exactly."""
    if cfg.reference_mode not in ("generator", "directory"):
        raise ValueError(
            f"reference_mode must be 'generator' or 'directory', got {cfg.reference_mode!r}"
        )
    if cfg.reference_mode == "directory" and not cfg.reference_dir:
        raise ValueError("reference_mode 'directory' requires reference_dir")
    if not cfg.hypothesis_layers:
        raise ValueError("hypothesis_layers must not be empty")
    state = np.random.SeedSequence(cfg.master_seed).generate_state(6, dtype=np.uint32)
    out = dataclasses.replace(
        cfg,
        extractor_widths=tuple(cfg.extractor_widths),
        hypothesis_layers=tuple(int(n) for n in cfg.hypothesis_layers),
        channel_schedule=tuple(cfg.channel_schedule) if cfg.channel_schedule
        else default_channel_schedule(cfg.layer_count),
        extractor_seed=int(state[0]) if cfg.extractor_seed is None else cfg.extractor_seed,
        generator_seed=int(state[2]) if cfg.generator_seed is None else cfg.generator_seed,
        inversion_seed=int(state[3]) if cfg.inversion_seed is None else cfg.inversion_seed,
        fid_crop_seed=int(state[4]) if cfg.fid_crop_seed is None else cfg.fid_crop_seed,
        reference_seed=int(state[5]) if cfg.reference_seed is None else cfg.reference_seed,
    )
    for n in out.hypothesis_layers:
        if not 1 <= n <= out.layer_count - 1:
            raise ValueError(
                f"hypothesis layer {n} outside [1, {out.layer_count - 1}]"
            )
    return out


def _target_extractor_seed(cfg: RunConfig) -> int:
    # A fixed offset keeps the two streams distinct but reproducible.
    return cfg.extractor_seed + 1 if cfg.separate_target_extractor else cfg.extractor_seed


def build_guide(source: np.ndarray, target: np.ndarray, cfg: RunConfig):
    """Correspondence stage: features, correlation, warp, guide at input size.

    Returns (guide, warped_small, correlation). The warp happens at feature
    resolution; the guide is its nearest-neighbor upsample back to the input
    resolution so the inversion factor relates input to generator output.
    """
    if source.shape[:2] != target.shape[:2]:
        raise ValueError(
            f"source {source.shape[:2]} and target {target.shape[:2]} must share "
            "spatial size"
        )
    w_src = build_extractor(cfg.extractor_seed, cfg.extractor_widths,
                            in_channels=source.shape[2])
    w_tgt = build_extractor(_target_extractor_seed(cfg), cfg.extractor_widths,
                            in_channels=target.shape[2])
    f_s = centralize(extract_features(source, w_src))
    f_t = centralize(extract_features(target, w_tgt))
    m = correlation_matrix(f_s, f_t, cfg.warp_norm_eps)
    pool = w_tgt.pool_factor
    target_small = ops.box_downsample(target, pool)
    warped_small = warp(m, target_small,
                        WarpConfig(cfg.warp_temperature, cfg.warp_norm_eps))
    guide = ops.upsample_nearest(warped_small, pool)
    return guide, warped_small, m


@dataclass
class PipelineOutcome:
    selection: SelectionReport
    report: dict
    output_dir: str
    partial: bool = False
    failures: list[dict] = field(default_factory=list)


def run_pipeline(cfg: RunConfig) -> PipelineOutcome:
    """Execute the two-stage translation and write all artifacts.

    Writes warped.ppm, hypothesis_<n>.ppm per surviving hypothesis,
    final.ppm and report.json into cfg.output_dir. Aborted hypotheses are
    recorded in the report instead of being dropped silently; if none
    survive, a partial report is still written and PipelineError is raised.
    """
    cfg = resolve_config(cfg)
    os.makedirs(cfg.output_dir, exist_ok=True)
    source = netpbm.load_image(cfg.source_path)
    target = netpbm.load_image(cfg.target_path)

    guide, _, _ = build_guide(source, target, cfg)
    guide_size = guide.shape[0]
    spec = build_generator(cfg.generator_seed, cfg.latent_dim, cfg.layer_count,
                           cfg.base_resolution, cfg.channel_schedule,
                           image_channels=target.shape[2])
    if guide_size * cfg.downsample_factor != spec.resolution:
        raise ValueError(
            f"guide size {guide_size} times factor {cfg.downsample_factor} must "
            f"equal the generator resolution {spec.resolution}"
        )
    score_weights = build_extractor(cfg.extractor_seed, cfg.extractor_widths,
                                    in_channels=target.shape[2])

    hypotheses, failures = [], []
    for n in cfg.hypothesis_layers:
        hyp_cfg = HypothesisConfig(
            composing_layer=n,
            code_count=cfg.code_count,
            seed=cfg.inversion_seed + n,
            steps=cfg.steps,
            distance_kind=cfg.distance_kind,
        )
        try:
            hypotheses.append(invert(
                spec, hyp_cfg, guide, cfg.downsample_factor,
                weights=score_weights, lr=cfg.learning_rate,
                beta1=cfg.adam_beta1, beta2=cfg.adam_beta2,
                perceptual_weight=cfg.perceptual_weight,
            ))
        except NonFiniteLossError as err:
            failures.append({"layer": n, "error": str(err)})

    if cfg.reference_mode == "generator":
        reference = reference_from_generator(
            spec, score_weights, cfg.reference_sample_count,
            cfg.reference_seed, cfg.fid_embed_size)
        ref_desc = (f"{cfg.reference_sample_count} seeded samples from the "
                    f"frozen generator (seed {cfg.reference_seed})")
    else:
        images = _load_reference_dir(cfg.reference_dir)
        reference = reference_from_images(images, score_weights, cfg.fid_embed_size)
        ref_desc = f"{len(images)} images from {cfg.reference_dir}"

    selection = None
    if hypotheses:
        selection = select_best(
            hypotheses, reference, score_weights,
            samples_per_hypothesis=cfg.fid_crop_count,
            embed_size=cfg.fid_embed_size, crop_seed=cfg.fid_crop_seed,
            reference_description=ref_desc,
        )

    netpbm.save_image(guide, os.path.join(cfg.output_dir, WARPED_NAME))
    for hyp in hypotheses:
        name = f"hypothesis_{hyp.config.composing_layer}.ppm"
        netpbm.save_image(hyp.output, os.path.join(cfg.output_dir, name))
    if selection is not None:
        netpbm.save_image(selection.final_image,
                          os.path.join(cfg.output_dir, FINAL_NAME))

    report = _build_report(cfg, selection, failures, ref_desc)
    _write_report(report, os.path.join(cfg.output_dir, REPORT_NAME))
    if selection is None:
        raise PipelineError(
            "all hypotheses aborted; partial report written to "
            + os.path.join(cfg.output_dir, REPORT_NAME)
        )
    return PipelineOutcome(selection, report, cfg.output_dir,
                           partial=bool(failures), failures=failures)


def summary_line(outcome: PipelineOutcome) -> str:
    chosen = outcome.selection.hypotheses[outcome.selection.chosen_index]
    return (f"chosen layer={chosen.config.composing_layer} "
            f"fid={_fmt_float(chosen.fid_score)}")


def _load_reference_dir(path: str) -> list[np.ndarray]:
    names = sorted(n for n in os.listdir(path)
                   if n.lower().endswith((".ppm", ".pgm")))
    if len(names) < 2:
        raise ValueError(f"reference directory {path} needs >= 2 netpbm images")
    return [netpbm.load_image(os.path.join(path, n)) for n in names]


def _fmt_float(x) -> float:
    # Quantize to 9 significant digits so reports diff cleanly.
    return float(f"{float(x):.9g}")


def _jsonable(value):
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, (np.floating,)):
        return _fmt_float(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _build_report(cfg: RunConfig, selection: SelectionReport | None,
                  failures: list[dict], ref_desc: str) -> dict:
    hyp_entries = []
    chosen_index = None
    chosen_layer = None
    if selection is not None:
        for hyp in selection.hypotheses:
            hyp_entries.append({
                "layer": hyp.config.composing_layer,
                "code_count": hyp.config.code_count,
                "steps": hyp.config.steps,
                "seed": hyp.config.seed,
                "distance_kind": hyp.config.distance_kind,
                "initial_loss": hyp.initial_loss,
                "final_loss": hyp.final_loss,
                "fid_score": hyp.fid_score,
                "image": f"hypothesis_{hyp.config.composing_layer}.ppm",
            })
        chosen_index = selection.chosen_index
        chosen_layer = selection.hypotheses[chosen_index].config.composing_layer
    report = {
        "version": __version__,
        "config": dataclasses.asdict(cfg),
        "hypotheses": hyp_entries,
        "failed_hypotheses": failures,
        "partial": bool(failures),
        "chosen_index": chosen_index,
        "chosen_layer": chosen_layer,
        "reference": {"mode": cfg.reference_mode, "description": ref_desc},
        "fid_procedure": {
            "crop_count": cfg.fid_crop_count,
            "crop_fraction": 0.5,
            "embed_size": cfg.fid_embed_size,
            "crop_seed": cfg.fid_crop_seed,
            "note": "overlapping half-resolution crops box-pooled to "
                    "embed_size, embedded by the pooled extractor features",
        },
        "outputs": {
            "warped": WARPED_NAME,
            "final": FINAL_NAME if selection is not None else None,
        },
    }
    return _jsonable(report)


def _write_report(report: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
