"""Walk through the correspondence stage on a synthetic image pair.

The source and target are flat-region layouts drawn from the same family
but unaligned. We extract seeded convolutional features from both, subtract
the per-channel spatial means, score every source/target position pair by
cosine correlation and rearrange the pooled target into the source layout
as a softmax-weighted average. Raising the softmax temperature moves the
warp from a global average toward a hard nearest-feature gather.
"""

import os

import numpy as np

from warpinvert import (
    WarpConfig,
    build_extractor,
    centralize,
    correlation_matrix,
    extract_features,
    make_synthetic_pair,
    save_image,
    warp,
)
from warpinvert.ops import box_downsample, upsample_nearest

OUT = os.path.join(os.path.dirname(__file__), "out", "correspondence")
os.makedirs(OUT, exist_ok=True)

source, target = make_synthetic_pair(seed=3)
save_image(source, os.path.join(OUT, "source.ppm"))
save_image(target, os.path.join(OUT, "target.ppm"))
print(f"pair: {source.shape[0]}x{source.shape[1]} source/target, unaligned layouts")

extractor = build_extractor(seed=0)
f_s = centralize(extract_features(source, extractor))
f_t = centralize(extract_features(target, extractor))
print(f"features: {f_s.shape} after {len(extractor.layer_widths)} layers "
      f"(spatial /{extractor.pool_factor})")
print(f"centralized channel means: |mean| max = {np.abs(f_s.mean(axis=(0, 1))).max():.2e}")

m = correlation_matrix(f_s, f_t)
print(f"correlation matrix: {m.shape}, entries in [{m.min():.3f}, {m.max():.3f}]")

target_small = box_downsample(target, extractor.pool_factor)
for temperature in (0.1, 10.0, 100.0, 1e4):
    warped = warp(m, target_small, WarpConfig(temperature=temperature))
    spread = warped.reshape(-1, 3).std(axis=0).mean()
    print(f"temperature {temperature:>8.1f}: warped pixel spread {spread:.4f}")

warped = warp(m, target_small, WarpConfig(temperature=100.0))
guide = upsample_nearest(warped, extractor.pool_factor)
save_image(guide, os.path.join(OUT, "warped.ppm"))
print(f"wrote source/target/warped to {OUT}")
print("low temperature collapses to the target mean; high temperature "
      "gathers each source position's best-matching target pixel")
