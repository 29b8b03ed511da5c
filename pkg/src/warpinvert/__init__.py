"""Exemplar-guided image translation in two stages: dense correspondence
warping of the exemplar into the source layout, then parallel latent-code
optimizations of a frozen generator under different composing-layer
hypotheses, with Frechet-distance scoring picking the final image.
"""

__version__ = "0.1.0"

from .correspondence import WarpConfig, centralize, correlation_matrix, warp
from .features import (
    DEFAULT_WIDTHS,
    ExtractorWeights,
    build_extractor,
    embed_for_fid,
    extract_features,
)
from .generator import (
    GeneratorSpec,
    HypothesisConfig,
    LatentCodeSet,
    build_generator,
    compose_at_layer,
    default_channel_schedule,
    generate,
    generate_with_grads,
    seed_codes,
)
from .inversion import (
    InversionHypothesis,
    NonFiniteLossError,
    distance,
    distance_with_grad,
    downsample,
    invert,
)
from .netpbm import NetpbmError, load_image, save_image
from .ops import AdamState, GradRecord, adam_init, adam_step, gradient_check, softmax_rows
from .pipeline import (
    PipelineError,
    PipelineOutcome,
    RunConfig,
    build_guide,
    resolve_config,
    run_pipeline,
    summary_line,
)
from .selection import (
    FidStats,
    SelectionReport,
    choose_index,
    crop_samples,
    fid_stats,
    frechet_distance,
    psd_sqrt,
    reference_from_generator,
    reference_from_images,
    select_best,
    stats_from_embeddings,
)
from .synthetic import Layout, layout_pair, make_synthetic_pair, render_layout

__all__ = [
    "AdamState",
    "DEFAULT_WIDTHS",
    "ExtractorWeights",
    "FidStats",
    "GeneratorSpec",
    "GradRecord",
    "HypothesisConfig",
    "InversionHypothesis",
    "LatentCodeSet",
    "Layout",
    "NetpbmError",
    "NonFiniteLossError",
    "PipelineError",
    "PipelineOutcome",
    "RunConfig",
    "SelectionReport",
    "WarpConfig",
    "adam_init",
    "adam_step",
    "build_extractor",
    "build_generator",
    "build_guide",
    "centralize",
    "choose_index",
    "compose_at_layer",
    "correlation_matrix",
    "crop_samples",
    "default_channel_schedule",
    "distance",
    "distance_with_grad",
    "downsample",
    "embed_for_fid",
    "extract_features",
    "fid_stats",
    "frechet_distance",
    "generate",
    "generate_with_grads",
    "gradient_check",
    "invert",
    "layout_pair",
    "load_image",
    "make_synthetic_pair",
    "psd_sqrt",
    "reference_from_generator",
    "reference_from_images",
    "render_layout",
    "resolve_config",
    "run_pipeline",
    "save_image",
    "seed_codes",
    "select_best",
    "softmax_rows",
    "stats_from_embeddings",
    "summary_line",
    "warp",
]
