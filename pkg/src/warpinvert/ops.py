"""Dense array primitives with hand-derived gradients, plus an Adam optimizer.

Everything operates on float64 numpy arrays. Spatial data is laid out as
(..., H, W, C); leading axes are treated as batch dimensions. Each
differentiable primitive comes as a forward/vjp pair: the ``*_vjp`` function
takes the upstream gradient of a scalar loss and returns the gradient with
respect to each input. There is no computation graph; callers chain vjps
explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAKY_SLOPE = 0.2
ADAM_EPS = 1e-8


def require_finite(name: str, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError(f"{name}: non-finite values in input")


def require_same_shape(name: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{name}: shape mismatch {a.shape} vs {b.shape}")


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# Elementwise and scalar arithmetic
# ---------------------------------------------------------------------------

def add(a, b):
    a, b = _as_array(a), _as_array(b)
    require_same_shape("add", a, b)
    require_finite("add", a, b)
    return a + b


def add_vjp(g, a, b):
    return g, g


def sub(a, b):
    a, b = _as_array(a), _as_array(b)
    require_same_shape("sub", a, b)
    require_finite("sub", a, b)
    return a - b


def sub_vjp(g, a, b):
    return g, -g


def mul(a, b):
    a, b = _as_array(a), _as_array(b)
    require_same_shape("mul", a, b)
    require_finite("mul", a, b)
    return a * b


def mul_vjp(g, a, b):
    return g * b, g * a


def scale(a, s: float):
    a = _as_array(a)
    require_finite("scale", a, np.asarray(s))
    return a * s


def scale_vjp(g, s: float):
    return g * s


def shift(a, s: float):
    a = _as_array(a)
    require_finite("shift", a, np.asarray(s))
    return a + s


def shift_vjp(g, s: float):
    return g


# ---------------------------------------------------------------------------
# Linear algebra and reductions
# ---------------------------------------------------------------------------

def matmul(a, b):
    """Matrix product of (m, k) and (k, n) arrays."""
    a, b = _as_array(a), _as_array(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    require_finite("matmul", a, b)
    return a @ b


def matmul_vjp(g, a, b):
    return g @ b.T, a.T @ g


def tensor_sum(x) -> float:
    x = _as_array(x)
    require_finite("tensor_sum", x)
    return float(x.sum())


def tensor_sum_vjp(g: float, x):
    return np.full_like(x, g)


def channel_mean(x):
    """Mean over the spatial axes of (..., H, W, C); returns (..., C)."""
    x = _as_array(x)
    if x.ndim < 3:
        raise ValueError(f"channel_mean: need (..., H, W, C), got {x.shape}")
    require_finite("channel_mean", x)
    return x.mean(axis=(-3, -2))


def channel_mean_vjp(g, x):
    h, w = x.shape[-3], x.shape[-2]
    return np.broadcast_to(g[..., None, None, :] / (h * w), x.shape).copy()


def l2_norm(x) -> float:
    x = _as_array(x)
    require_finite("l2_norm", x)
    return float(np.sqrt((x * x).sum()))


def l2_norm_vjp(g: float, x):
    n = np.sqrt((x * x).sum())
    if n == 0.0:
        return np.zeros_like(x)
    return (g / n) * x


# ---------------------------------------------------------------------------
# Spatial resampling
# ---------------------------------------------------------------------------

def upsample_nearest(x, factor: int):
    """Nearest-neighbor upsample of (..., H, W, C) by an integer factor."""
    x = _as_array(x)
    if x.ndim < 3:
        raise ValueError(f"upsample_nearest: need (..., H, W, C), got {x.shape}")
    if factor < 1:
        raise ValueError(f"upsample_nearest: factor must be >= 1, got {factor}")
    require_finite("upsample_nearest", x)
    return np.repeat(np.repeat(x, factor, axis=-3), factor, axis=-2)


def upsample_nearest_vjp(g, factor: int):
    lead = g.shape[:-3]
    h, w, c = g.shape[-3] // factor, g.shape[-2] // factor, g.shape[-1]
    blocks = g.reshape(lead + (h, factor, w, factor, c))
    return blocks.sum(axis=(-4, -2))


def box_downsample(x, factor: int):
    """Non-overlapping factor x factor box average of (..., H, W, C)."""
    x = _as_array(x)
    if x.ndim < 3:
        raise ValueError(f"box_downsample: need (..., H, W, C), got {x.shape}")
    if factor < 1:
        raise ValueError(f"box_downsample: factor must be >= 1, got {factor}")
    h, w = x.shape[-3], x.shape[-2]
    if h % factor or w % factor:
        raise ValueError(
            f"box_downsample: spatial size {h}x{w} not divisible by factor {factor}"
        )
    require_finite("box_downsample", x)
    lead = x.shape[:-3]
    blocks = x.reshape(lead + (h // factor, factor, w // factor, factor, x.shape[-1]))
    return blocks.mean(axis=(-4, -2))


def box_downsample_vjp(g, factor: int):
    return np.repeat(np.repeat(g, factor, axis=-3), factor, axis=-2) / (factor * factor)


# ---------------------------------------------------------------------------
# 3x3 convolution, stride 1, same padding
# ---------------------------------------------------------------------------

_PAD_MODES = {"zero": "constant", "edge": "edge"}


def _pad_spatial(x, padding: str):
    if padding not in _PAD_MODES:
        raise ValueError(f"conv3x3: unknown padding {padding!r}")
    width = [(0, 0)] * (x.ndim - 3) + [(1, 1), (1, 1), (0, 0)]
    return np.pad(x, width, mode=_PAD_MODES[padding])


def conv3x3(x, kernel, bias, padding: str = "zero"):
    """3x3 convolution of (..., H, W, Cin) with kernel (3, 3, Cin, Cout).

    Stride 1, output spatial size equals input. ``padding`` selects the
    border fill: "zero" or "edge" (replicate).
    """
    x, kernel, bias = _as_array(x), _as_array(kernel), _as_array(bias)
    if x.ndim < 3:
        raise ValueError(f"conv3x3: need (..., H, W, Cin), got {x.shape}")
    if kernel.shape[:2] != (3, 3) or kernel.shape[2] != x.shape[-1]:
        raise ValueError(
            f"conv3x3: kernel {kernel.shape} does not match input channels {x.shape[-1]}"
        )
    if bias.shape != (kernel.shape[3],):
        raise ValueError(f"conv3x3: bias {bias.shape} vs Cout {kernel.shape[3]}")
    require_finite("conv3x3", x, kernel, bias)
    h, w = x.shape[-3], x.shape[-2]
    xp = _pad_spatial(x, padding)
    out = np.zeros(x.shape[:-1] + (kernel.shape[3],))
    for di in range(3):
        for dj in range(3):
            out += xp[..., di:di + h, dj:dj + w, :] @ kernel[di, dj]
    return out + bias


def conv3x3_vjp(g, x, kernel, padding: str = "zero"):
    """Gradients of conv3x3 w.r.t. input, kernel and bias."""
    h, w = x.shape[-3], x.shape[-2]
    lead_axes = tuple(range(g.ndim - 1))
    xp = _pad_spatial(x, padding)
    gxp = np.zeros_like(xp)
    gk = np.zeros_like(kernel)
    for di in range(3):
        for dj in range(3):
            patch = xp[..., di:di + h, dj:dj + w, :]
            gk[di, dj] = np.tensordot(patch, g, axes=(lead_axes, lead_axes))
            gxp[..., di:di + h, dj:dj + w, :] += g @ kernel[di, dj].T
    gb = g.sum(axis=lead_axes)
    return _fold_padding(gxp, padding), gk, gb


def _fold_padding(gxp, padding: str):
    # Zero padding discards border gradients; edge padding folds them back
    # onto the replicated source pixels.
    gx = gxp[..., 1:-1, 1:-1, :]
    if padding == "zero":
        return gx.copy()
    gx = gx.copy()
    gx[..., 0, :, :] += gxp[..., 0, 1:-1, :]
    gx[..., -1, :, :] += gxp[..., -1, 1:-1, :]
    gx[..., :, 0, :] += gxp[..., 1:-1, 0, :]
    gx[..., :, -1, :] += gxp[..., 1:-1, -1, :]
    gx[..., 0, 0, :] += gxp[..., 0, 0, :]
    gx[..., 0, -1, :] += gxp[..., 0, -1, :]
    gx[..., -1, 0, :] += gxp[..., -1, 0, :]
    gx[..., -1, -1, :] += gxp[..., -1, -1, :]
    return gx


# ---------------------------------------------------------------------------
# Nonlinearities
# ---------------------------------------------------------------------------

def leaky_relu(x, slope: float = LEAKY_SLOPE):
    x = _as_array(x)
    require_finite("leaky_relu", x)
    return np.where(x >= 0.0, x, slope * x)


def leaky_relu_vjp(g, x, slope: float = LEAKY_SLOPE):
    return g * np.where(x >= 0.0, 1.0, slope)


def tanh(x):
    x = _as_array(x)
    require_finite("tanh", x)
    return np.tanh(x)


def tanh_vjp(g, x):
    t = np.tanh(x)
    return g * (1.0 - t * t)


def softmax_rows(m, temperature: float):
    """Row-wise softmax of temperature * m for a 2-D array.

    Uses max subtraction so rows stay normalized for entries up to ~1e4
    in magnitude.
    """
    m = _as_array(m)
    if m.ndim != 2:
        raise ValueError(f"softmax_rows: need a 2-D array, got {m.shape}")
    if not (temperature > 0.0):
        raise ValueError(f"softmax_rows: temperature must be > 0, got {temperature}")
    require_finite("softmax_rows", m)
    z = temperature * m
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_vjp(g, m, temperature: float):
    s = softmax_rows(m, temperature)
    inner = (g * s).sum(axis=1, keepdims=True)
    return temperature * s * (g - inner)


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdamState:
    """Per-parameter optimizer state: moment estimates and step counter."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0


def adam_init(param: np.ndarray) -> AdamState:
    return AdamState(np.zeros_like(param), np.zeros_like(param), 0)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float = ADAM_EPS,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns the new parameter and state."""
    param, grad = _as_array(param), _as_array(grad)
    require_same_shape("adam_step", param, grad)
    require_same_shape("adam_step", param, state.first_moment)
    require_same_shape("adam_step", param, state.second_moment)
    require_finite("adam_step", param, grad)
    if not (lr > 0.0):
        raise ValueError(f"adam_step: lr must be > 0, got {lr}")
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ValueError(f"adam_step: betas must be in [0, 1), got {beta1}, {beta2}")
    if not (eps > 0.0):
        raise ValueError(f"adam_step: eps must be > 0, got {eps}")
    t = state.step_count + 1
    m = beta1 * state.first_moment + (1.0 - beta1) * grad
    v = beta2 * state.second_moment + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_param, AdamState(m, v, t)


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

@dataclass
class GradRecord:
    """Outcome of one analytic-vs-numeric gradient comparison."""

    op_name: str
    analytic_grad: np.ndarray
    numeric_grad: np.ndarray
    max_rel_error: float


def finite_difference_grad(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function at x."""
    x = np.array(x, dtype=np.float64)
    num = np.zeros_like(x)
    flat_x, flat_n = x.ravel(), num.ravel()
    for i in range(x.size):
        orig = flat_x[i]
        flat_x[i] = orig + step
        fp = f(x)
        flat_x[i] = orig - step
        fm = f(x)
        flat_x[i] = orig
        flat_n[i] = (fp - fm) / (2.0 * step)
    return num


def gradient_check(op_name: str, value_and_grad, x: np.ndarray,
                   step: float = 1e-5) -> GradRecord:
    """Compare an analytic gradient against central finite differences.

    ``value_and_grad(x)`` must return (scalar, grad-array-like-x). The
    relative error is max over elements of |a - n| / max(|a|, |n|, 1e-8).
    """
    _, analytic = value_and_grad(x)
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = finite_difference_grad(lambda y: value_and_grad(y)[0], x, step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    err = float((np.abs(analytic - numeric) / denom).max()) if x.size else 0.0
    return GradRecord(op_name, analytic, numeric, err)
