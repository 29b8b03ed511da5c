import math

import numpy as np
import pytest

from warpinvert import ops
from gradsuite import TOL, primitive_gradient_records


def test_matmul_identity():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((2, 2))
    assert np.array_equal(ops.matmul(np.eye(2), a), a)


def test_matmul_rejects_bad_shapes():
    with pytest.raises(ValueError, match="incompatible shapes"):
        ops.matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_gradient_at_seeded_point():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((4, 2))

    def loss_wrt_a(v):
        g = np.ones((3, 2))
        return float(ops.matmul(v, b).sum()), ops.matmul_vjp(g, v, b)[0]

    def loss_wrt_b(v):
        g = np.ones((3, 2))
        return float(ops.matmul(a, v).sum()), ops.matmul_vjp(g, a, v)[1]

    assert ops.gradient_check("matmul", loss_wrt_a, a).max_rel_error < 1e-4
    assert ops.gradient_check("matmul", loss_wrt_b, b).max_rel_error < 1e-4


def test_tanh_at_zero():
    z = np.zeros((2, 3))
    assert np.array_equal(ops.tanh(z), z)
    assert np.array_equal(ops.tanh_vjp(np.ones_like(z), z), np.ones_like(z))


def test_nonfinite_inputs_rejected():
    bad = np.array([[1.0, np.nan]])
    with pytest.raises(ValueError, match="non-finite"):
        ops.tanh(bad)
    with pytest.raises(ValueError, match="non-finite"):
        ops.add(bad, bad)


def test_elementwise_shape_mismatch_rejected():
    with pytest.raises(ValueError, match="shape mismatch"):
        ops.add(np.ones(3), np.ones(4))


# -- softmax ----------------------------------------------------------------

def test_softmax_constant_row_is_uniform():
    for temp in (0.1, 1.0, 250.0):
        out = ops.softmax_rows(np.full((1, 3), 4.2), temp)
        assert np.allclose(out, 1.0 / 3.0, atol=1e-12)


def test_softmax_sharp_temperature_approaches_argmax():
    out = ops.softmax_rows(np.array([[1.0, 0.0]]), 100.0)
    assert out[0, 0] > 1.0 - 1e-9


def test_softmax_log_two_row():
    out = ops.softmax_rows(np.array([[math.log(2.0), 0.0]]), 1.0)
    assert abs(out[0, 0] - 2.0 / 3.0) < 1e-9
    assert abs(out[0, 1] - 1.0 / 3.0) < 1e-9


def test_softmax_rejects_nonpositive_temperature():
    for temp in (0.0, -1.0):
        with pytest.raises(ValueError, match="temperature"):
            ops.softmax_rows(np.zeros((1, 2)), temp)


def test_softmax_rows_normalized_at_large_magnitudes():
    rng = np.random.default_rng(5)
    m = rng.uniform(-1e4, 1e4, size=(20, 7))
    out = ops.softmax_rows(m, 1.0)
    assert np.all(out >= 0.0)
    assert np.abs(out.sum(axis=1) - 1.0).max() < 1e-6


# -- adam -------------------------------------------------------------------

def test_adam_zero_gradient_is_a_no_op():
    p = np.array([1.5, -2.0])
    stepped, state = ops.adam_step(p, np.zeros(2), ops.adam_init(p),
                                   lr=0.1, beta1=0.0, beta2=0.999)
    assert np.array_equal(stepped, p)
    assert state.step_count == 1


def test_adam_first_step_hand_checked():
    # beta1=0: m_hat = g = 1; v_hat = 0.001/0.001 = 1; step = lr / (1 + eps).
    p = np.array([1.0])
    stepped, _ = ops.adam_step(p, np.array([1.0]), ops.adam_init(p),
                               lr=0.1, beta1=0.0, beta2=0.999)
    assert abs(stepped[0] - 0.9) < 1e-6


def test_adam_deterministic_bit_for_bit():
    rng = np.random.default_rng(3)
    p = rng.standard_normal((4, 5))
    g = rng.standard_normal((4, 5))

    def run():
        param, state = p, ops.adam_init(p)
        for _ in range(2):
            param, state = ops.adam_step(param, g, state, lr=0.05,
                                         beta1=0.0, beta2=0.999)
        return param, state

    p1, s1 = run()
    p2, s2 = run()
    assert np.array_equal(p1, p2)
    assert np.array_equal(s1.first_moment, s2.first_moment)
    assert np.array_equal(s1.second_moment, s2.second_moment)


def test_adam_beta1_zero_first_moment_is_raw_gradient():
    rng = np.random.default_rng(4)
    p = rng.standard_normal(6)
    g = rng.standard_normal(6)
    _, state = ops.adam_step(p, g, ops.adam_init(p), lr=0.01,
                             beta1=0.0, beta2=0.999)
    assert np.array_equal(state.first_moment, g)


def test_adam_second_moment_nonnegative_and_counter_increments():
    rng = np.random.default_rng(6)
    p = rng.standard_normal(8)
    state = ops.adam_init(p)
    for expected in (1, 2, 3):
        p, state = ops.adam_step(p, rng.standard_normal(8), state,
                                 lr=0.01, beta1=0.5, beta2=0.9)
        assert state.step_count == expected
        assert state.second_moment.min() >= 0.0


def test_adam_rejects_shape_mismatch():
    p = np.ones(3)
    with pytest.raises(ValueError, match="shape mismatch"):
        ops.adam_step(p, np.ones(4), ops.adam_init(p), lr=0.1,
                      beta1=0.0, beta2=0.999)


def test_adam_rejects_bad_hyperparameters():
    p = np.ones(2)
    g = np.ones(2)
    st = ops.adam_init(p)
    with pytest.raises(ValueError):
        ops.adam_step(p, g, st, lr=0.0, beta1=0.0, beta2=0.999)
    with pytest.raises(ValueError):
        ops.adam_step(p, g, st, lr=0.1, beta1=1.0, beta2=0.999)
    with pytest.raises(ValueError):
        ops.adam_step(p, g, st, lr=0.1, beta1=0.0, beta2=0.999, eps=0.0)


# -- resampling and conv ----------------------------------------------------

def test_upsample_then_downsample_round_trips():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((3, 5, 2))
    assert np.allclose(ops.box_downsample(ops.upsample_nearest(x, 3), 3), x)


def test_box_downsample_rejects_indivisible():
    with pytest.raises(ValueError, match="not divisible"):
        ops.box_downsample(np.zeros((5, 4, 1)), 2)


def test_conv3x3_edge_padding_keeps_uniform_maps_uniform():
    rng = np.random.default_rng(9)
    kern = rng.standard_normal((3, 3, 2, 4))
    bias = rng.standard_normal(4)
    uniform = np.tile(rng.standard_normal(2), (6, 6, 1))
    out = ops.conv3x3(uniform, kern, bias, padding="edge")
    assert np.ptp(out.reshape(-1, 4), axis=0).max() < 1e-12


def test_conv3x3_rejects_mismatched_kernel():
    with pytest.raises(ValueError, match="kernel"):
        ops.conv3x3(np.zeros((4, 4, 3)), np.zeros((3, 3, 2, 4)), np.zeros(4))


# -- the full gradient battery ----------------------------------------------

def test_every_primitive_passes_gradient_checks_at_ten_seeded_points():
    for seed in range(10):
        for rec in primitive_gradient_records(seed):
            assert rec.max_rel_error < TOL, (
                f"{rec.op_name} at seed {seed}: {rec.max_rel_error:.3e}"
            )


def test_gradient_check_detects_a_wrong_gradient():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((3, 3))

    def wrong(v):
        return float((v * v).sum()), v  # should be 2v

    assert ops.gradient_check("broken", wrong, x).max_rel_error > 0.1
