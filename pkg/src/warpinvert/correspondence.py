"""Dense cross-domain correspondence: correlation matrix and softmax warp.

Feature maps from the two domains are centralized channel-wise, every pair
of positions is scored by cosine correlation, and the exemplar is rearranged
into the source layout as a per-position softmax-weighted average of its
pixels. Warping happens at feature resolution; the caller pools the exemplar
image down first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops

DEFAULT_TEMPERATURE = 100.0
DEFAULT_NORM_EPS = 1e-8


@dataclass(frozen=True)
class WarpConfig:
    """Softmax sharpness and the zero-norm guard for degenerate positions."""

    temperature: float = DEFAULT_TEMPERATURE
    epsilon_norm: float = DEFAULT_NORM_EPS

    def __post_init__(self):
        if not (self.temperature > 0.0):
            raise ValueError(f"WarpConfig: temperature must be > 0, got {self.temperature}")
        if not (self.epsilon_norm > 0.0):
            raise ValueError(f"WarpConfig: epsilon_norm must be > 0, got {self.epsilon_norm}")


def centralize(f: np.ndarray) -> np.ndarray:
    """Subtract the spatial mean per channel; output means are ~0."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3:
        raise ValueError(f"centralize: need (H, W, C), got {f.shape}")
    ops.require_finite("centralize", f)
    return f - f.mean(axis=(0, 1), keepdims=True)


def correlation_matrix(f_s_hat: np.ndarray, f_t_hat: np.ndarray,
                       eps: float = DEFAULT_NORM_EPS) -> np.ndarray:
    """Pairwise cosine correlations of two centralized (H, W, C) maps.

    Entry (u, v) correlates source position u with target position v after
    row-major flattening; norms below eps are clamped to eps so constant
    regions yield zero correlation instead of dividing by zero.
    """
    f_s_hat = np.asarray(f_s_hat, dtype=np.float64)
    f_t_hat = np.asarray(f_t_hat, dtype=np.float64)
    if f_s_hat.ndim != 3 or f_t_hat.ndim != 3:
        raise ValueError("correlation_matrix: feature maps must be (H, W, C)")
    if f_s_hat.shape != f_t_hat.shape:
        raise ValueError(
            f"correlation_matrix: shape mismatch {f_s_hat.shape} vs {f_t_hat.shape}"
        )
    if not (eps > 0.0):
        raise ValueError(f"correlation_matrix: eps must be > 0, got {eps}")
    ops.require_finite("correlation_matrix", f_s_hat, f_t_hat)
    c = f_s_hat.shape[2]
    s = f_s_hat.reshape(-1, c)
    t = f_t_hat.reshape(-1, c)
    s_norm = np.maximum(np.linalg.norm(s, axis=1), eps)
    t_norm = np.maximum(np.linalg.norm(t, axis=1), eps)
    return (s / s_norm[:, None]) @ (t / t_norm[:, None]).T


def warp(m: np.ndarray, target: np.ndarray, cfg: WarpConfig | None = None) -> np.ndarray:
    """Rearrange the target into the source layout via softmax row weights.

    Each output position u is sum_v softmax_v(temperature * m[u, v]) *
    target[v], a convex combination of target pixels. ``target`` must
    already be at feature resolution: H * W == m.shape[1].
    """
    cfg = cfg or WarpConfig()
    m = np.asarray(m, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"warp: correlation matrix must be 2-D, got {m.shape}")
    if target.ndim != 3:
        raise ValueError(f"warp: target must be (H, W, C), got {target.shape}")
    h, w, c = target.shape
    if m.shape[1] != h * w:
        raise ValueError(
            f"warp: matrix has {m.shape[1]} columns but target flattens to {h * w} positions"
        )
    if m.shape[0] != h * w:
        raise ValueError(
            f"warp: matrix has {m.shape[0]} rows but output needs {h * w} positions"
        )
    ops.require_finite("warp", m, target)
    weights = ops.softmax_rows(m, cfg.temperature)
    return (weights @ target.reshape(-1, c)).reshape(h, w, c)
