"""Guided latent optimization: fit one composing-layer hypothesis to a guide.

The objective is D(down(y), guide) where y is the generator output, down is
a box-average reduction by an integer factor and D is a pixel or feature
distance. Codes and importances are optimized with bias-corrected Adam; the
generator weights and the guide are never touched. The best-so-far output is
retained, so the reported final loss is the minimum of the loss trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .features import ExtractorWeights, extract_features, extract_features_with_grad
from .generator import (
    GeneratorSpec,
    HypothesisConfig,
    LatentCodeSet,
    generate_with_grads,
    seed_codes,
)

DEFAULT_LEARNING_RATE = 1e-2
DEFAULT_BETA1 = 0.0
DEFAULT_BETA2 = 0.999
DEFAULT_PERCEPTUAL_WEIGHT = 1.0


class NonFiniteLossError(RuntimeError):
    """The objective left the finite range during optimization."""

    def __init__(self, composing_layer: int, step: int):
        self.composing_layer = composing_layer
        self.step = step
        super().__init__(
            f"non-finite loss at step {step} for composing layer {composing_layer}"
        )


@dataclass
class InversionHypothesis:
    """Result of optimizing one composing-layer hypothesis."""

    config: HypothesisConfig
    final_codes: LatentCodeSet
    output: np.ndarray
    loss_trace: list[float] = field(default_factory=list)
    initial_loss: float = 0.0
    final_loss: float = 0.0
    fid_score: float | None = None


def downsample(image: np.ndarray, factor: int) -> np.ndarray:
    """Non-overlapping factor x factor box average per channel."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"downsample: need (H, W, C), got {image.shape}")
    return ops.box_downsample(image, factor)


def distance(a: np.ndarray, b: np.ndarray, kind: str = "l2",
             weights: ExtractorWeights | None = None,
             perceptual_weight: float = DEFAULT_PERCEPTUAL_WEIGHT) -> float:
    """Distance between two same-shape images.

    "l2" and "l1" are mean squared / mean absolute pixel differences,
    "perceptual" is the mean squared difference of extractor features and
    "combined" is l2 + perceptual_weight * perceptual.
    """
    value, _ = _distance_impl(a, b, kind, weights, perceptual_weight,
                              want_grad=False)
    return value


def distance_with_grad(a: np.ndarray, b: np.ndarray, kind: str = "l2",
                       weights: ExtractorWeights | None = None,
                       perceptual_weight: float = DEFAULT_PERCEPTUAL_WEIGHT):
    """Distance plus its gradient with respect to the first image."""
    return _distance_impl(a, b, kind, weights, perceptual_weight, want_grad=True)


def _distance_impl(a, b, kind, weights, perceptual_weight, want_grad):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ops.require_same_shape("distance", a, b)
    ops.require_finite("distance", a, b)
    if kind not in ("l2", "l1", "perceptual", "combined"):
        raise ValueError(f"distance: unknown kind {kind!r}")
    if kind in ("perceptual", "combined") and weights is None:
        raise ValueError(f"distance: kind {kind!r} requires extractor weights")

    value, grad = 0.0, None
    if kind in ("l2", "combined"):
        diff = a - b
        value += float((diff * diff).mean())
        if want_grad:
            grad = 2.0 * diff / diff.size
    elif kind == "l1":
        diff = a - b
        value = float(np.abs(diff).mean())
        if want_grad:
            grad = np.sign(diff) / diff.size
    if kind in ("perceptual", "combined"):
        lam = perceptual_weight if kind == "combined" else 1.0
        if lam != 0.0:
            if want_grad:
                fa, back_a = extract_features_with_grad(a, weights)
            else:
                fa, back_a = extract_features(a, weights), None
            fb = extract_features(b, weights)
            fdiff = fa - fb
            value += lam * float((fdiff * fdiff).mean())
            if want_grad:
                g_feat = lam * 2.0 * fdiff / fdiff.size
                g_perc = back_a(g_feat)
                grad = g_perc if grad is None else grad + g_perc
    if want_grad and grad is None:
        grad = np.zeros_like(a)
    return value, grad


def invert(spec: GeneratorSpec, cfg: HypothesisConfig, guide: np.ndarray,
           factor: int, weights: ExtractorWeights | None = None,
           lr: float = DEFAULT_LEARNING_RATE,
           beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
           perceptual_weight: float = DEFAULT_PERCEPTUAL_WEIGHT) -> InversionHypothesis:
    """Optimize codes and importances so down(generate(...)) matches the guide.

    Deterministic given cfg.seed. Raises NonFiniteLossError if the objective
    degenerates; the caller decides how to surface the aborted hypothesis.
    """
    guide = np.asarray(guide, dtype=np.float64)
    if guide.ndim != 3:
        raise ValueError(f"invert: guide must be (H, W, C), got {guide.shape}")
    ops.require_finite("invert", guide)
    if factor < 1:
        raise ValueError(f"invert: factor must be >= 1, got {factor}")
    res = spec.resolution
    if guide.shape[0] * factor != res or guide.shape[1] * factor != res:
        raise ValueError(
            f"invert: guide {guide.shape[0]}x{guide.shape[1]} times factor "
            f"{factor} must equal the generator resolution {res}"
        )
    if guide.shape[2] != spec.image_channels:
        raise ValueError(
            f"invert: guide has {guide.shape[2]} channels, generator emits "
            f"{spec.image_channels}"
        )
    n = cfg.composing_layer
    if n > spec.layer_count - 1:
        raise ValueError(
            f"invert: composing layer {n} exceeds generator maximum "
            f"{spec.layer_count - 1}"
        )

    codeset = seed_codes(spec, n, cfg.code_count, cfg.seed)
    code_state = ops.adam_init(codeset.codes)
    imp_state = ops.adam_init(codeset.importances)

    def objective(y, want_grad):
        d = ops.box_downsample(y, factor)
        loss, g = _distance_impl(d, guide, cfg.distance_kind, weights,
                                 perceptual_weight, want_grad)
        if want_grad:
            g = ops.box_downsample_vjp(g, factor)
        return loss, g

    def guarded(step, fn, *args, **kwargs):
        # Overflowing parameters trip the finiteness guards inside the
        # primitives; surface that as an aborted hypothesis, not a crash.
        try:
            result = fn(*args, **kwargs)
        except ValueError as err:
            if "non-finite" in str(err):
                raise NonFiniteLossError(n, step) from err
            raise
        return result

    y, closure = guarded(0, generate_with_grads, spec, codeset, n)
    trace: list[float] = []
    best_loss = np.inf
    best_output = y
    best_codes = codeset
    for step in range(cfg.steps):
        loss, g_y = guarded(step, objective, y, want_grad=True)
        if not np.isfinite(loss):
            raise NonFiniteLossError(n, step)
        trace.append(loss)
        if loss < best_loss:
            best_loss, best_output, best_codes = loss, y, codeset
        g_codes, g_imps = closure(g_y)
        new_codes, code_state = ops.adam_step(codeset.codes, g_codes,
                                              code_state, lr, beta1, beta2)
        new_imps, imp_state = ops.adam_step(codeset.importances, g_imps,
                                            imp_state, lr, beta1, beta2)
        codeset = LatentCodeSet(new_codes, new_imps)
        y, closure = guarded(step + 1, generate_with_grads, spec, codeset, n)

    if cfg.steps == 0:
        loss, _ = guarded(0, objective, y, want_grad=False)
        if not np.isfinite(loss):
            raise NonFiniteLossError(n, 0)
        initial_loss = final_loss = loss
    else:
        initial_loss = trace[0]
        final_loss = best_loss
    return InversionHypothesis(
        config=cfg,
        final_codes=best_codes,
        output=best_output,
        loss_trace=trace,
        initial_loss=initial_loss,
        final_loss=final_loss,
    )
