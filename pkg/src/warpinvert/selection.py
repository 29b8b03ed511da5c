"""Frechet-distance scoring of hypotheses and argmin selection.

Each reconstructed image is expanded into a small population of seeded
overlapping crops, embedded by the pooled extractor features, and fitted
with a Gaussian (mean + unbiased covariance). The Frechet distance of that
Gaussian to a reference distribution is the hypothesis score; the hypothesis
with the smallest score wins, ties going to the smaller composing layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops
from .features import ExtractorWeights, embed_for_fid
from .generator import GeneratorSpec, LatentCodeSet, generate
from .inversion import InversionHypothesis

DEFAULT_CROP_COUNT = 32
DEFAULT_EMBED_SIZE = 16
DEFAULT_REFERENCE_COUNT = 128
PSD_CLAMP = -1e-8
PSD_REJECT = -1e-6


@dataclass(frozen=True)
class FidStats:
    """Gaussian fit of a set of embeddings."""

    mean: np.ndarray          # (C,)
    covariance: np.ndarray    # (C, C), symmetric PSD up to tolerance
    sample_count: int

    def __post_init__(self):
        if self.mean.ndim != 1 or self.covariance.shape != (self.mean.size,) * 2:
            raise ValueError(
                f"FidStats: inconsistent shapes {self.mean.shape} / "
                f"{self.covariance.shape}"
            )
        if self.sample_count < 2:
            raise ValueError(f"FidStats: need >= 2 samples, got {self.sample_count}")


@dataclass
class SelectionReport:
    """All scored hypotheses, the winning index and the final image."""

    hypotheses: list[InversionHypothesis]
    chosen_index: int
    final_image: np.ndarray
    reference_description: str


def stats_from_embeddings(embeddings: np.ndarray) -> FidStats:
    """Mean and unbiased, symmetrized covariance of (N, C) embeddings."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2:
        raise ValueError(f"stats_from_embeddings: need (N, C), got {embeddings.shape}")
    n = embeddings.shape[0]
    if n < 2:
        raise ValueError(f"stats_from_embeddings: need >= 2 samples, got {n}")
    ops.require_finite("stats_from_embeddings", embeddings)
    mean = embeddings.mean(axis=0)
    centered = embeddings - mean
    cov = centered.T @ centered / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return FidStats(mean, cov, n)


def fid_stats(images, weights: ExtractorWeights) -> FidStats:
    """Gaussian fit of the embeddings of >= 2 same-shape images."""
    images = list(images)
    if len(images) < 2:
        raise ValueError(f"fid_stats: need >= 2 images, got {len(images)}")
    shape = np.asarray(images[0]).shape
    for im in images[1:]:
        if np.asarray(im).shape != shape:
            raise ValueError("fid_stats: images must share one shape")
    embeds = np.stack([embed_for_fid(im, weights) for im in images])
    return stats_from_embeddings(embeds)


def psd_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in (PSD_REJECT, 0) are treated as rounding noise and clamped
    to zero; anything below PSD_REJECT means the input is not PSD.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"psd_sqrt: need a square matrix, got {sigma.shape}")
    ops.require_finite("psd_sqrt", sigma)
    vals, vecs = np.linalg.eigh(0.5 * (sigma + sigma.T))
    if vals.min(initial=0.0) < PSD_REJECT:
        raise ValueError(
            f"psd_sqrt: eigenvalue {vals.min():.3e} below {PSD_REJECT:.0e}; "
            "input is not PSD"
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: FidStats, b: FidStats) -> float:
    """Frechet distance between two Gaussian fits.

    Computed in the symmetric form |mu_a - mu_b|^2 + Tr(S_a) + Tr(S_b)
    - 2 Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)), clamped to >= 0.
    """
    if a.mean.size != b.mean.size:
        raise ValueError(
            f"frechet_distance: dimension mismatch {a.mean.size} vs {b.mean.size}"
        )
    diff = a.mean - b.mean
    root_a = psd_sqrt(a.covariance)
    cross = psd_sqrt(root_a @ b.covariance @ root_a)
    value = (float(diff @ diff) + float(np.trace(a.covariance))
             + float(np.trace(b.covariance)) - 2.0 * float(np.trace(cross)))
    return max(value, 0.0)


def crop_samples(image: np.ndarray, count: int, seed: int,
                 embed_size: int = DEFAULT_EMBED_SIZE) -> list[np.ndarray]:
    """Seeded overlapping half-resolution crops box-pooled to embed_size."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"crop_samples: need (H, W, C), got {image.shape}")
    if count < 2:
        raise ValueError(f"crop_samples: need >= 2 crops, got {count}")
    h, w = image.shape[:2]
    ch, cw = h // 2, w // 2
    if ch < embed_size or cw < embed_size:
        raise ValueError(
            f"crop_samples: half resolution {ch}x{cw} is below embed size {embed_size}"
        )
    if ch % embed_size or cw % embed_size:
        raise ValueError(
            f"crop_samples: half resolution {ch}x{cw} not divisible by "
            f"embed size {embed_size}"
        )
    rng = np.random.default_rng(seed)
    tops = rng.integers(0, h - ch + 1, size=count)
    lefts = rng.integers(0, w - cw + 1, size=count)
    fy, fx = ch // embed_size, cw // embed_size
    crops = []
    for t, l in zip(tops, lefts):
        crop = image[t:t + ch, l:l + cw, :]
        crops.append(ops.box_downsample(crop, fy) if fy == fx else
                     _pool_rect(crop, fy, fx))
    return crops


def _pool_rect(x, fy, fx):
    h, w, c = x.shape
    return x.reshape(h // fy, fy, w // fx, fx, c).mean(axis=(1, 3))


def pool_to_embed_size(image: np.ndarray, embed_size: int = DEFAULT_EMBED_SIZE) -> np.ndarray:
    """Box-pool a square image down to embed_size x embed_size."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    if h != w:
        raise ValueError(f"pool_to_embed_size: need a square image, got {h}x{w}")
    if h % embed_size:
        raise ValueError(
            f"pool_to_embed_size: size {h} not divisible by embed size {embed_size}"
        )
    return ops.box_downsample(image, h // embed_size)


def reference_from_generator(spec: GeneratorSpec, weights: ExtractorWeights,
                             count: int = DEFAULT_REFERENCE_COUNT, seed: int = 0,
                             embed_size: int = DEFAULT_EMBED_SIZE) -> FidStats:
    """Fit the reference Gaussian to seeded single-code generator samples."""
    if count < 2:
        raise ValueError(f"reference_from_generator: need >= 2 samples, got {count}")
    rng = np.random.default_rng(seed)
    embeds = []
    for _ in range(count):
        code = rng.standard_normal((1, spec.latent_dim))
        codeset = LatentCodeSet(code, np.ones((1, spec.channels_at(1))))
        sample = generate(spec, codeset, 1)
        embeds.append(embed_for_fid(pool_to_embed_size(sample, embed_size), weights))
    return stats_from_embeddings(np.stack(embeds))


def reference_from_images(images, weights: ExtractorWeights,
                          embed_size: int = DEFAULT_EMBED_SIZE) -> FidStats:
    """Fit the reference Gaussian to a directory-style list of images."""
    images = list(images)
    if len(images) < 2:
        raise ValueError(f"reference_from_images: need >= 2 images, got {len(images)}")
    embeds = [embed_for_fid(pool_to_embed_size(im, embed_size), weights)
              for im in images]
    return stats_from_embeddings(np.stack(embeds))


def choose_index(scores, layers) -> int:
    """Argmin over scores; exact ties go to the smallest composing layer."""
    scores = list(scores)
    layers = list(layers)
    if not scores or len(scores) != len(layers):
        raise ValueError("choose_index: need matching non-empty scores and layers")
    best = 0
    for i in range(1, len(scores)):
        if scores[i] < scores[best] or (scores[i] == scores[best]
                                        and layers[i] < layers[best]):
            best = i
    return best


def select_best(hypotheses: list[InversionHypothesis], reference: FidStats,
                weights: ExtractorWeights,
                samples_per_hypothesis: int = DEFAULT_CROP_COUNT,
                embed_size: int = DEFAULT_EMBED_SIZE,
                crop_seed: int = 0,
                reference_description: str = "") -> SelectionReport:
    """Score every hypothesis against the reference and pick the argmin.

    Scores are written back onto the hypotheses as fid_score. Crop seeds are
    offset by the composing layer so scoring is independent of list order.
    """
    if not hypotheses:
        raise ValueError("select_best: no hypotheses to select from")
    for hyp in hypotheses:
        crops = crop_samples(hyp.output, samples_per_hypothesis,
                             crop_seed + hyp.config.composing_layer, embed_size)
        stats = fid_stats(crops, weights)
        hyp.fid_score = frechet_distance(stats, reference)
    idx = choose_index([h.fid_score for h in hypotheses],
                       [h.config.composing_layer for h in hypotheses])
    return SelectionReport(
        hypotheses=hypotheses,
        chosen_index=idx,
        final_image=hypotheses[idx].output,
        reference_description=reference_description,
    )
