"""Procedural generation of unaligned source/target test pairs.

Each image is a flat-color background with an ellipse and a rectangle whose
positions, sizes and colors are drawn from a seeded stream. Source and
target come from independent substreams of the same seed, so the pair shares
the layout family but is unaligned by construction. An optional edge-map
variant turns the source into a single-channel boundary image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_SIZE = 16


@dataclass(frozen=True)
class Layout:
    """Normalized geometry and colors of one flat-region image."""

    background: tuple[float, float, float]
    ellipse_center: tuple[float, float]   # (cy, cx) in [0, 1]
    ellipse_axes: tuple[float, float]     # (ay, ax) in [0, 1]
    ellipse_color: tuple[float, float, float]
    rect_top_left: tuple[float, float]
    rect_size: tuple[float, float]
    rect_color: tuple[float, float, float]


def _draw_layout(rng: np.random.Generator) -> Layout:
    def color():
        return tuple(rng.uniform(0.05, 0.95, size=3))

    return Layout(
        background=color(),
        ellipse_center=tuple(rng.uniform(0.25, 0.75, size=2)),
        ellipse_axes=tuple(rng.uniform(0.15, 0.35, size=2)),
        ellipse_color=color(),
        rect_top_left=tuple(rng.uniform(0.05, 0.55, size=2)),
        rect_size=tuple(rng.uniform(0.2, 0.4, size=2)),
        rect_color=color(),
    )


def layout_pair(seed: int) -> tuple[Layout, Layout]:
    """The source and target layouts implied by a seed (re-derivable)."""
    src_ss, tgt_ss = np.random.SeedSequence(seed).spawn(2)
    return (_draw_layout(np.random.default_rng(src_ss)),
            _draw_layout(np.random.default_rng(tgt_ss)))


def ellipse_mask(layout: Layout, size: int) -> np.ndarray:
    """Boolean inside-ellipse mask at pixel centers."""
    coords = (np.arange(size) + 0.5) / size
    y = coords[:, None]
    x = coords[None, :]
    cy, cx = layout.ellipse_center
    ay, ax = layout.ellipse_axes
    return ((y - cy) / ay) ** 2 + ((x - cx) / ax) ** 2 <= 1.0


def rect_mask(layout: Layout, size: int) -> np.ndarray:
    coords = (np.arange(size) + 0.5) / size
    y = coords[:, None]
    x = coords[None, :]
    ty, tx = layout.rect_top_left
    sy, sx = layout.rect_size
    return (y >= ty) & (y < ty + sy) & (x >= tx) & (x < tx + sx)


def render_layout(layout: Layout, size: int = DEFAULT_SIZE) -> np.ndarray:
    """Paint a layout as an (size, size, 3) image in [0, 1]."""
    image = np.empty((size, size, 3))
    image[:] = layout.background
    image[ellipse_mask(layout, size)] = layout.ellipse_color
    image[rect_mask(layout, size)] = layout.rect_color
    return image


def edge_map(image: np.ndarray) -> np.ndarray:
    """Single-channel boundary image: 1 where a flat region changes."""
    gray = image.mean(axis=2)
    edges = np.zeros_like(gray, dtype=bool)
    edges[:-1, :] |= np.abs(np.diff(gray, axis=0)) > 1e-9
    edges[:, :-1] |= np.abs(np.diff(gray, axis=1)) > 1e-9
    return edges.astype(np.float64)[..., None]


def make_synthetic_pair(seed: int, size: int = DEFAULT_SIZE,
                        edge_source: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic unaligned (source, target) pair for a seed."""
    src_layout, tgt_layout = layout_pair(seed)
    source = render_layout(src_layout, size)
    target = render_layout(tgt_layout, size)
    if edge_source:
        source = edge_map(source)
    return source, target
