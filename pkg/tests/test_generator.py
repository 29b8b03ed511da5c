import numpy as np
import pytest

from warpinvert import ops
from warpinvert.generator import (
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
from gradsuite import TOL, generator_gradient_records


def test_resolution_formula():
    assert build_generator(7).resolution == 64          # 4 * 2^4 for L=6
    assert build_generator(7, layer_count=2).resolution == 4


def test_same_seed_bit_identical_weights():
    a = build_generator(7)
    b = build_generator(7)
    assert np.array_equal(a.latent_kernel, b.latent_kernel)
    for ka, kb in zip(a.conv_kernels, b.conv_kernels):
        assert np.array_equal(ka, kb)


def test_rejects_too_few_layers():
    with pytest.raises(ValueError, match="layer_count"):
        build_generator(0, layer_count=1)


@pytest.mark.parametrize("layer_count", range(2, 8))
def test_output_range_and_resolution_across_depths(layer_count):
    spec = build_generator(3, latent_dim=8, layer_count=layer_count)
    codes = seed_codes(spec, 1, 2, seed=1)
    img = generate(spec, codes, 1)
    expected = 4 * 2 ** (layer_count - 2)
    assert img.shape == (expected, expected, 3)
    assert img.min() >= 0.0
    assert img.max() <= 1.0


def _manual_single_code_forward(spec, z):
    # Independent forward pass: layer 1, upsample+conv+leaky stack, tanh head.
    h = ops.leaky_relu(z @ spec.latent_kernel + spec.latent_bias)
    h = h.reshape(spec.base_resolution, spec.base_resolution, spec.channels[0])
    for j in range(2, spec.layer_count):
        h = ops.upsample_nearest(h, 2)
        h = ops.leaky_relu(ops.conv3x3(h, spec.conv_kernels[j - 2],
                                       spec.conv_biases[j - 2], padding="edge"))
    out = ops.conv3x3(h, spec.conv_kernels[-1], spec.conv_biases[-1],
                      padding="edge")
    return 0.5 * np.tanh(out) + 0.5


@pytest.mark.parametrize("n", [1, 2, 3])
def test_single_code_all_ones_importance_is_plain_forward(n):
    spec = build_generator(11, latent_dim=6, layer_count=4, channels=(8, 6, 4))
    z = np.random.default_rng(5).standard_normal((1, 6))
    codes = LatentCodeSet(z, np.ones((1, spec.channels_at(n))))
    assert np.array_equal(generate(spec, codes, n),
                          _manual_single_code_forward(spec, z[0]))


def test_duplicate_codes_add_their_importances():
    spec = build_generator(13, latent_dim=6, layer_count=3, channels=(6, 5))
    rng = np.random.default_rng(6)
    z = rng.standard_normal(6)
    a = rng.uniform(0.2, 1.5, size=5)
    b = rng.uniform(0.2, 1.5, size=5)
    two = LatentCodeSet(np.stack([z, z]), np.stack([a, b]))
    one = LatentCodeSet(z[None, :], (a + b)[None, :])
    assert np.abs(generate(spec, two, 2) - generate(spec, one, 2)).max() < 1e-12


@pytest.mark.parametrize("lam", [2.0, 0.5, 4.0])
def test_blend_scales_exactly_with_importances(lam):
    # Power-of-two factors keep the float scaling exact.
    spec = build_generator(17, latent_dim=6, layer_count=4, channels=(8, 6, 4))
    codes = seed_codes(spec, 2, 3, seed=2)
    scaled = LatentCodeSet(codes.codes, lam * codes.importances)
    assert np.array_equal(compose_at_layer(spec, scaled, 2),
                          lam * compose_at_layer(spec, codes, 2))


def test_importance_channel_mismatch_rejected():
    spec = build_generator(19, latent_dim=6, layer_count=3, channels=(6, 5))
    bad = LatentCodeSet(np.zeros((2, 6)), np.ones((2, 3)))
    with pytest.raises(ValueError, match="channels"):
        generate(spec, bad, 2)


def test_composing_layer_bounds():
    spec = build_generator(23, latent_dim=6, layer_count=3, channels=(6, 5))
    codes = seed_codes(spec, 1, 1, seed=0)
    with pytest.raises(ValueError, match="composing layer"):
        generate(spec, codes, 3)        # only layers 1..L-1 compose


def test_generator_gradients_match_finite_differences():
    for seed in range(10):
        for rec in generator_gradient_records(seed):
            assert rec.max_rel_error < TOL, (
                f"{rec.op_name} seed {seed}: {rec.max_rel_error:.3e}"
            )


def test_zero_upstream_gradient_gives_zero_parameter_gradients():
    spec = build_generator(29, latent_dim=5, layer_count=3, channels=(5, 4))
    codes = seed_codes(spec, 2, 2, seed=3)
    img, back = generate_with_grads(spec, codes, 2)
    g_codes, g_imps = back(np.zeros_like(img))
    assert np.array_equal(g_codes, np.zeros_like(codes.codes))
    assert np.array_equal(g_imps, np.zeros_like(codes.importances))


def test_importance_gradient_of_zero_feature_map_is_zero():
    # Zero latent weights make every pre-blend feature map exactly zero.
    base = build_generator(31, latent_dim=4, layer_count=2, channels=(5,))
    zero_lk = np.zeros_like(base.latent_kernel)
    zero_lb = np.zeros_like(base.latent_bias)
    spec = GeneratorSpec(base.seed, base.latent_dim, base.layer_count,
                         base.base_resolution, base.channels,
                         base.image_channels, zero_lk, zero_lb,
                         base.conv_kernels, base.conv_biases)
    codes = seed_codes(spec, 1, 2, seed=4)
    img, back = generate_with_grads(spec, codes, 1)
    _, g_imps = back(np.ones_like(img))
    assert np.array_equal(g_imps, np.zeros_like(codes.importances))


def test_default_channel_schedule_shape():
    assert default_channel_schedule(6) == (32, 16, 8, 4, 4)
    assert len(default_channel_schedule(3)) == 2


def test_hypothesis_config_validation():
    with pytest.raises(ValueError, match="composing_layer"):
        HypothesisConfig(0)
    with pytest.raises(ValueError, match="code_count"):
        HypothesisConfig(2, code_count=0)
    with pytest.raises(ValueError, match="distance_kind"):
        HypothesisConfig(2, distance_kind="chebyshev")
