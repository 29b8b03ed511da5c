"""Seeded progressive-style generator with multi-code feature composition.

Layer 1 maps a latent vector to a base-resolution feature map; every layer
up to the second-to-last doubles resolution with nearest upsampling followed
by a 3x3 convolution and a leaky rectifier; the last layer is a 3x3
convolution to image channels squashed by tanh. Output resolution is
base * 2^(L-2).

Several latent codes can be run through layers 1..n independently and their
feature maps blended at the composing layer n with per-channel importance
weights before the remaining layers decode the blend to an image. Weights
are frozen at build time; only codes and importances ever receive gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ops

DEFAULT_LATENT_DIM = 32
DEFAULT_LAYER_COUNT = 6
BASE_RESOLUTION = 4
DEFAULT_CODE_COUNT = 30
DISTANCE_KINDS = ("l2", "l1", "perceptual", "combined")


def default_channel_schedule(layer_count: int) -> tuple[int, ...]:
    """Halving widths from 32 with a floor of 4; one entry per non-final layer."""
    return tuple(max(4, 32 >> i) for i in range(layer_count - 1))


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    latent_dim: int
    layer_count: int
    base_resolution: int
    channels: tuple[int, ...]        # widths of layers 1..L-1
    image_channels: int
    latent_kernel: np.ndarray        # (latent_dim, base^2 * channels[0])
    latent_bias: np.ndarray
    conv_kernels: tuple[np.ndarray, ...]  # layers 2..L, (3, 3, cin, cout)
    conv_biases: tuple[np.ndarray, ...]

    @property
    def resolution(self) -> int:
        return self.base_resolution * 2 ** (self.layer_count - 2)

    def channels_at(self, n: int) -> int:
        """Channel count of the layer-n output (valid composing layers only)."""
        if not 1 <= n <= self.layer_count - 1:
            raise ValueError(
                f"composing layer {n} outside [1, {self.layer_count - 1}]"
            )
        return self.channels[n - 1]


@dataclass(frozen=True)
class LatentCodeSet:
    """K latent codes with one importance vector per code at the blend layer."""

    codes: np.ndarray        # (K, latent_dim)
    importances: np.ndarray  # (K, channels at the composing layer)

    def __post_init__(self):
        if self.codes.ndim != 2 or self.importances.ndim != 2:
            raise ValueError("LatentCodeSet: codes and importances must be 2-D")
        if self.codes.shape[0] != self.importances.shape[0]:
            raise ValueError(
                f"LatentCodeSet: {self.codes.shape[0]} codes vs "
                f"{self.importances.shape[0]} importance vectors"
            )
        if self.codes.shape[0] < 1:
            raise ValueError("LatentCodeSet: need at least one code")
        ops.require_finite("LatentCodeSet", self.codes, self.importances)

    @property
    def count(self) -> int:
        return self.codes.shape[0]


@dataclass(frozen=True)
class HypothesisConfig:
    """One inversion attempt: where to blend, how many codes, how long."""

    composing_layer: int
    code_count: int = DEFAULT_CODE_COUNT
    seed: int = 0
    steps: int = 400
    distance_kind: str = "combined"

    def __post_init__(self):
        if self.composing_layer < 1:
            raise ValueError(f"composing_layer must be >= 1, got {self.composing_layer}")
        if self.code_count < 1:
            raise ValueError(f"code_count must be >= 1, got {self.code_count}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.distance_kind not in DISTANCE_KINDS:
            raise ValueError(
                f"distance_kind must be one of {DISTANCE_KINDS}, got {self.distance_kind!r}"
            )


def build_generator(seed: int, latent_dim: int = DEFAULT_LATENT_DIM,
                    layer_count: int = DEFAULT_LAYER_COUNT,
                    base_resolution: int = BASE_RESOLUTION,
                    channels=None, image_channels: int = 3) -> GeneratorSpec:
    """Draw frozen generator weights from a seeded stream."""
    if layer_count < 2:
        raise ValueError(f"build_generator: layer_count must be >= 2, got {layer_count}")
    if latent_dim < 1 or base_resolution < 1 or image_channels < 1:
        raise ValueError("build_generator: latent_dim, base_resolution and "
                         "image_channels must be positive")
    cs = tuple(int(c) for c in (channels or default_channel_schedule(layer_count)))
    if len(cs) != layer_count - 1 or any(c < 1 for c in cs):
        raise ValueError(
            f"build_generator: need {layer_count - 1} positive widths, got {cs}"
        )
    rng = np.random.default_rng(seed)
    lk = rng.standard_normal((latent_dim, base_resolution ** 2 * cs[0]))
    lk /= np.sqrt(latent_dim)
    lb = rng.standard_normal(base_resolution ** 2 * cs[0]) / np.sqrt(latent_dim)
    kernels, biases = [], []
    outs = list(cs[1:]) + [image_channels]
    for cin, cout in zip(cs, outs):
        fan_in = 9 * cin
        kernels.append(rng.standard_normal((3, 3, cin, cout)) / np.sqrt(fan_in))
        biases.append(rng.standard_normal(cout) / np.sqrt(fan_in))
    for arr in [lk, lb, *kernels, *biases]:
        arr.setflags(write=False)
    return GeneratorSpec(int(seed), latent_dim, layer_count, base_resolution,
                         cs, image_channels, lk, lb,
                         tuple(kernels), tuple(biases))


def seed_codes(spec: GeneratorSpec, n: int, count: int, seed: int) -> LatentCodeSet:
    """Unit-Gaussian codes and all-ones importances for composing layer n."""
    rng = np.random.default_rng(seed)
    codes = rng.standard_normal((count, spec.latent_dim))
    imps = np.ones((count, spec.channels_at(n)))
    return LatentCodeSet(codes, imps)


def _check_inputs(spec: GeneratorSpec, codes: LatentCodeSet, n: int) -> None:
    c_n = spec.channels_at(n)
    if codes.codes.shape[1] != spec.latent_dim:
        raise ValueError(
            f"generate: codes have dim {codes.codes.shape[1]}, "
            f"generator expects {spec.latent_dim}"
        )
    if codes.importances.shape[1] != c_n:
        raise ValueError(
            f"generate: importances have {codes.importances.shape[1]} channels "
            f"but layer {n} outputs {c_n}"
        )


def _stage_forward(spec: GeneratorSpec, codes: LatentCodeSet, n: int):
    """Layers 1..n for all K codes at once; returns (maps, cache)."""
    k = codes.count
    pre1 = ops.matmul(codes.codes, spec.latent_kernel) + spec.latent_bias
    h = ops.leaky_relu(pre1).reshape(
        k, spec.base_resolution, spec.base_resolution, spec.channels[0])
    cache = [("latent", pre1)]
    for j in range(2, n + 1):
        up = ops.upsample_nearest(h, 2)
        pre = ops.conv3x3(up, spec.conv_kernels[j - 2], spec.conv_biases[j - 2],
                          padding="edge")
        cache.append(("conv", up, pre, spec.conv_kernels[j - 2]))
        h = ops.leaky_relu(pre)
    return h, cache


def _blend(h: np.ndarray, importances: np.ndarray) -> np.ndarray:
    # (K, H, W, C) weighted per channel and summed over codes.
    return np.einsum("kc,khwc->hwc", importances, h)


def compose_at_layer(spec: GeneratorSpec, codes: LatentCodeSet, n: int) -> np.ndarray:
    """The blended feature map right before decoding (exposed for checks)."""
    _check_inputs(spec, codes, n)
    h, _ = _stage_forward(spec, codes, n)
    return _blend(h, codes.importances)


def _decode_forward(spec: GeneratorSpec, blended: np.ndarray, n: int):
    d = blended
    cache = []
    for j in range(n + 1, spec.layer_count):
        up = ops.upsample_nearest(d, 2)
        pre = ops.conv3x3(up, spec.conv_kernels[j - 2], spec.conv_biases[j - 2],
                          padding="edge")
        cache.append((up, pre, spec.conv_kernels[j - 2]))
        d = ops.leaky_relu(pre)
    pre_out = ops.conv3x3(d, spec.conv_kernels[-1], spec.conv_biases[-1],
                          padding="edge")
    image = 0.5 * ops.tanh(pre_out) + 0.5
    return image, (cache, d, pre_out)


def generate(spec: GeneratorSpec, codes: LatentCodeSet, n: int) -> np.ndarray:
    """Compose K codes at layer n and decode to an image in [0, 1]."""
    _check_inputs(spec, codes, n)
    h, _ = _stage_forward(spec, codes, n)
    image, _ = _decode_forward(spec, _blend(h, codes.importances), n)
    return image


def generate_with_grads(spec: GeneratorSpec, codes: LatentCodeSet, n: int):
    """Forward pass plus a closure for gradients w.r.t. codes and importances.

    The closure takes dL/dimage and returns (code_grads, importance_grads)
    with the same shapes as the code set. Generator weights are frozen and
    receive no gradient.
    """
    _check_inputs(spec, codes, n)
    h, stage_cache = _stage_forward(spec, codes, n)
    blended = _blend(h, codes.importances)
    image, (decode_cache, d_last, pre_out) = _decode_forward(spec, blended, n)
    importances = codes.importances

    def backward(g_image: np.ndarray):
        g = ops.tanh_vjp(0.5 * g_image, pre_out)
        g, _, _ = ops.conv3x3_vjp(g, d_last, spec.conv_kernels[-1], padding="edge")
        for up, pre, kern in reversed(decode_cache):
            g = ops.leaky_relu_vjp(g, pre)
            g, _, _ = ops.conv3x3_vjp(g, up, kern, padding="edge")
            g = ops.upsample_nearest_vjp(g, 2)
        # g is now dL/dblended at the composing layer.
        g_imp = np.einsum("khwc,hwc->kc", h, g)
        g_h = importances[:, None, None, :] * g[None, ...]
        for entry in reversed(stage_cache[1:]):
            _, up, pre, kern = entry
            g_h = ops.leaky_relu_vjp(g_h, pre)
            g_h, _, _ = ops.conv3x3_vjp(g_h, up, kern, padding="edge")
            g_h = ops.upsample_nearest_vjp(g_h, 2)
        pre1 = stage_cache[0][1]
        g_flat = ops.leaky_relu_vjp(g_h.reshape(pre1.shape), pre1)
        g_codes = g_flat @ spec.latent_kernel.T
        return g_codes, g_imp

    return image, backward
