import numpy as np
import pytest

from warpinvert.correspondence import (
    WarpConfig,
    centralize,
    correlation_matrix,
    warp,
)
from warpinvert.ops import box_downsample


def _seeded_features(seed, shape=(3, 3, 8)):
    return centralize(np.random.default_rng(seed).standard_normal(shape))


# -- centralize ---------------------------------------------------------------

def test_centralize_constant_map_is_zero():
    assert np.allclose(centralize(np.full((4, 4, 2), 3.7)), 0.0, atol=1e-12)


def test_centralize_two_pixel_map():
    out = centralize(np.array([[[1.0], [3.0]]]))
    assert np.allclose(out, np.array([[[-1.0], [1.0]]]))


def test_centralize_output_means_are_zero():
    f = np.random.default_rng(1).standard_normal((5, 7, 4)) * 10
    means = centralize(f).mean(axis=(0, 1))
    assert np.abs(means).max() < 1e-6


def test_centralize_is_idempotent():
    f = np.random.default_rng(2).standard_normal((4, 6, 3))
    once = centralize(f)
    assert np.abs(centralize(once) - once).max() < 1e-9


# -- correlation matrix -------------------------------------------------------

def test_self_correlation_diagonal_is_one():
    f = _seeded_features(3)
    m = correlation_matrix(f, f)
    assert np.abs(np.diag(m) - 1.0).max() < 1e-6


def test_orthogonal_vectors_correlate_to_zero():
    fs = np.array([[[1.0, 0.0]]])
    ft = np.array([[[0.0, 1.0]]])
    assert abs(correlation_matrix(fs, ft)[0, 0]) < 1e-12


def test_hand_computed_row():
    fs = np.array([[[1.0, 1.0], [9.0, 9.0]]])       # only position 0 matters
    ft = np.array([[[1.0, 1.0], [1.0, -1.0]]])
    m = correlation_matrix(fs, ft)
    assert abs(m[0, 0] - 1.0) < 1e-9
    assert abs(m[0, 1]) < 1e-9


def test_entries_bounded_over_seeded_pairs():
    for seed in range(30):
        m = correlation_matrix(_seeded_features(seed), _seeded_features(seed + 1000))
        assert m.min() >= -1.0 - 1e-6
        assert m.max() <= 1.0 + 1e-6


def test_zero_norm_positions_guarded_not_rejected():
    flat = centralize(np.full((2, 2, 3), 1.0))      # all-zero after centralizing
    m = correlation_matrix(flat, _seeded_features(4, (2, 2, 3)))
    assert np.allclose(m, 0.0)


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="mismatch"):
        correlation_matrix(np.zeros((2, 2, 3)), np.zeros((2, 2, 4)))


# -- warp ---------------------------------------------------------------------

def test_tiny_temperature_returns_target_mean_everywhere():
    rng = np.random.default_rng(5)
    m = correlation_matrix(_seeded_features(5), _seeded_features(6))
    target = rng.uniform(0.0, 1.0, size=(3, 3, 3))
    out = warp(m, target, WarpConfig(temperature=1e-9))
    mean = target.reshape(-1, 3).mean(axis=0)
    assert np.abs(out - mean).max() < 1e-6


def test_sharp_temperature_matches_argmax_gather():
    m = correlation_matrix(_seeded_features(7), _seeded_features(8))
    gaps = np.sort(m, axis=1)
    assert (gaps[:, -1] - gaps[:, -2]).min() > 0.002  # dominant argmax per row
    target = np.random.default_rng(9).uniform(0.0, 1.0, size=(3, 3, 3))
    out = warp(m, target, WarpConfig(temperature=1e4))
    gathered = target.reshape(-1, 3)[m.argmax(axis=1)].reshape(3, 3, 3)
    assert np.abs(out - gathered).max() < 1e-6


def test_two_position_analytic_softmax():
    m = np.array([[np.log(2.0), 0.0], [0.0, np.log(2.0)]])
    target = np.array([[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]])
    out = warp(m, target, WarpConfig(temperature=1.0))
    expected0 = (2.0 / 3.0) * target[0, 0] + (1.0 / 3.0) * target[0, 1]
    assert np.abs(out[0, 0] - expected0).max() < 1e-9


def test_warp_output_is_a_convex_combination_per_channel():
    rng = np.random.default_rng(10)
    m = correlation_matrix(_seeded_features(11), _seeded_features(12))
    target = rng.uniform(0.0, 1.0, size=(3, 3, 3))
    out = warp(m, target, WarpConfig(temperature=3.0))
    lo = target.reshape(-1, 3).min(axis=0)
    hi = target.reshape(-1, 3).max(axis=0)
    assert np.all(out >= lo - 1e-12)
    assert np.all(out <= hi + 1e-12)


def test_warp_is_equivariant_to_consistent_target_permutation():
    rng = np.random.default_rng(13)
    m = correlation_matrix(_seeded_features(14), _seeded_features(15))
    target = rng.uniform(0.0, 1.0, size=(3, 3, 3))
    perm = rng.permutation(9)
    permuted_target = target.reshape(-1, 3)[perm].reshape(3, 3, 3)
    out = warp(m, target, WarpConfig(temperature=2.0))
    out_perm = warp(m[:, perm], permuted_target, WarpConfig(temperature=2.0))
    assert np.abs(out - out_perm).max() < 1e-12


def test_identical_features_reproduce_pooled_target():
    image = np.random.default_rng(16).uniform(0.0, 1.0, size=(8, 8, 3))
    pooled = box_downsample(image, 2)
    f = _seeded_features(17, (4, 4, 16))
    m = correlation_matrix(f, f)
    out = warp(m, pooled, WarpConfig(temperature=1e4))
    assert np.abs(out - pooled).max() < 1e-4


def test_warp_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="columns"):
        warp(np.zeros((9, 9)), np.zeros((2, 2, 3)), WarpConfig())


def test_warp_config_validation():
    with pytest.raises(ValueError, match="temperature"):
        WarpConfig(temperature=0.0)
    with pytest.raises(ValueError, match="epsilon_norm"):
        WarpConfig(epsilon_norm=0.0)
