"""Score competing composing-layer hypotheses and let the numbers decide.

Every hypothesis inverts the same guide with the blend at a different
generator layer. Each reconstruction is expanded into seeded overlapping
crops, embedded, fitted with a Gaussian and scored by Frechet distance
against a reference population sampled from the frozen generator. The
smallest score wins; no human picks the layer.
"""

import os

import numpy as np

from warpinvert import (
    HypothesisConfig,
    build_extractor,
    build_generator,
    invert,
    save_image,
    select_best,
)
from warpinvert.correspondence import WarpConfig, centralize, correlation_matrix, warp
from warpinvert.features import extract_features
from warpinvert.ops import box_downsample, upsample_nearest
from warpinvert.selection import reference_from_generator
from warpinvert.synthetic import make_synthetic_pair

OUT = os.path.join(os.path.dirname(__file__), "out", "selection")
os.makedirs(OUT, exist_ok=True)

source, target = make_synthetic_pair(seed=8)
extractor = build_extractor(seed=0)
f_s = centralize(extract_features(source, extractor))
f_t = centralize(extract_features(target, extractor))
m = correlation_matrix(f_s, f_t)
warped = warp(m, box_downsample(target, extractor.pool_factor), WarpConfig())
guide = upsample_nearest(warped, extractor.pool_factor)

spec = build_generator(seed=42)
print("inverting the warped guide under four composing-layer hypotheses...")
hypotheses = []
for layer in (2, 3, 4, 5):
    cfg = HypothesisConfig(layer, code_count=10, seed=50 + layer, steps=120,
                           distance_kind="combined")
    hyp = invert(spec, cfg, guide, 4, weights=extractor)
    hypotheses.append(hyp)
    print(f"  layer {layer}: loss {hyp.initial_loss:.4f} -> {hyp.final_loss:.4f}")

reference = reference_from_generator(spec, extractor, count=64, seed=0)
report = select_best(hypotheses, reference, extractor,
                     reference_description="64 frozen-generator samples")

print("\nlayer  frechet score")
for i, hyp in enumerate(report.hypotheses):
    marker = "  <- chosen" if i == report.chosen_index else ""
    print(f"  {hyp.config.composing_layer}    {hyp.fid_score:.4f}{marker}")

chosen = report.hypotheses[report.chosen_index]
scores = [h.fid_score for h in report.hypotheses]
assert chosen.fid_score == min(scores)
save_image(report.final_image, os.path.join(OUT, "final.ppm"))
print(f"\nargmin holds; final image from layer "
      f"{chosen.config.composing_layer} written to {OUT}")
