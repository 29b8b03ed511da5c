"""Seeded convolutional feature extraction and the pooled scoring embedding.

A small stack of 3x3 convolutions with leaky-rectifier activations stands in
for a heavyweight pretrained backbone. Layer 1 keeps the input resolution;
every later layer first halves resolution with a 2x2 mean pool. Weights are
drawn once from a seeded stream and are immutable, so extraction is a pure,
reproducible function of (image, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops

DEFAULT_WIDTHS = (8, 16, 32)
RANGE_SLACK = 1e-6


@dataclass(frozen=True)
class ExtractorWeights:
    seed: int
    layer_widths: tuple[int, ...]
    in_channels: int
    kernels: tuple[np.ndarray, ...]  # (3, 3, cin, cout) per layer
    biases: tuple[np.ndarray, ...]   # (cout,) per layer

    @property
    def pool_factor(self) -> int:
        """Total spatial reduction: 2^(layers - 1)."""
        return 2 ** (len(self.layer_widths) - 1)


def build_extractor(seed: int, layer_widths=DEFAULT_WIDTHS,
                    in_channels: int = 3) -> ExtractorWeights:
    """Draw extractor weights from a seeded stream, scaled by 1/sqrt(fan_in)."""
    widths = tuple(int(w) for w in layer_widths)
    if not widths or any(w < 1 for w in widths):
        raise ValueError(f"build_extractor: invalid layer widths {layer_widths}")
    rng = np.random.default_rng(seed)
    kernels, biases = [], []
    cin = in_channels
    for cout in widths:
        fan_in = 9 * cin
        k = rng.standard_normal((3, 3, cin, cout)) / np.sqrt(fan_in)
        b = rng.standard_normal(cout) / np.sqrt(fan_in)
        k.setflags(write=False)
        b.setflags(write=False)
        kernels.append(k)
        biases.append(b)
        cin = cout
    return ExtractorWeights(int(seed), widths, in_channels,
                            tuple(kernels), tuple(biases))


def _check_image(image: np.ndarray, weights: ExtractorWeights) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"extract_features: need (H, W, C), got {image.shape}")
    if image.shape[2] != weights.in_channels:
        raise ValueError(
            f"extract_features: image has {image.shape[2]} channels, "
            f"extractor expects {weights.in_channels}"
        )
    ops.require_finite("extract_features", image)
    if image.min() < -RANGE_SLACK or image.max() > 1.0 + RANGE_SLACK:
        raise ValueError("extract_features: image values must lie in [0, 1]")
    h, w = image.shape[:2]
    div = weights.pool_factor
    if h % div or w % div:
        raise ValueError(
            f"extract_features: spatial size {h}x{w} must be divisible by "
            f"{div} (2^(layers-1) for {len(weights.layer_widths)} layers)"
        )
    return image


def extract_features(image: np.ndarray, weights: ExtractorWeights) -> np.ndarray:
    """Run the extractor; output is (H/2^(L-1), W/2^(L-1), last width)."""
    x = _check_image(image, weights)
    for i, (k, b) in enumerate(zip(weights.kernels, weights.biases)):
        if i > 0:
            x = ops.box_downsample(x, 2)
        x = ops.leaky_relu(ops.conv3x3(x, k, b, padding="edge"))
    return x


def extract_features_with_grad(image: np.ndarray, weights: ExtractorWeights):
    """Forward pass plus a closure mapping dL/dfeatures back to dL/dimage."""
    x = _check_image(image, weights)
    cache = []
    for i, (k, b) in enumerate(zip(weights.kernels, weights.biases)):
        pooled = ops.box_downsample(x, 2) if i > 0 else x
        pre = ops.conv3x3(pooled, k, b, padding="edge")
        cache.append((i, pooled, pre, k))
        x = ops.leaky_relu(pre)

    def backward(g: np.ndarray) -> np.ndarray:
        for i, pooled, pre, k in reversed(cache):
            g = ops.leaky_relu_vjp(g, pre)
            g, _, _ = ops.conv3x3_vjp(g, pooled, k, padding="edge")
            if i > 0:
                g = ops.box_downsample_vjp(g, 2)
        return g

    return x, backward


def embed_for_fid(image: np.ndarray, weights: ExtractorWeights) -> np.ndarray:
    """Global spatial mean of the final feature map; length = last width."""
    return ops.channel_mean(extract_features(image, weights))
