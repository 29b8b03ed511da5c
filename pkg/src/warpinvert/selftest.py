"""Fast invariant suite behind the `selftest` CLI subcommand.

Each check is a small, self-contained probe of one contract the library
promises: gradient correctness, softmax normalization, warp limits, Frechet
closed forms, optimizer determinism, image round trips. Runs in seconds and
returns a nonzero count of failures for the CLI exit code.
"""

from __future__ import annotations

import numpy as np

from . import correspondence, generator, inversion, netpbm, ops, selection, synthetic
from .features import build_extractor, extract_features


def _check_gradients() -> str | None:
    rng = np.random.default_rng(7)
    x = rng.standard_normal((3, 4, 2))
    w = rng.standard_normal((3, 4, 2))

    def weighted_tanh(v):
        return float((ops.tanh(v) * w).sum()), ops.tanh_vjp(w, v)

    rec = ops.gradient_check("tanh", weighted_tanh, x)
    if rec.max_rel_error >= 1e-4:
        return f"tanh gradient error {rec.max_rel_error:.2e}"
    kern = rng.standard_normal((3, 3, 2, 3))
    bias = rng.standard_normal(3)
    wc = rng.standard_normal((3, 4, 3))

    def weighted_conv(v):
        out = ops.conv3x3(v, kern, bias, padding="edge")
        g, _, _ = ops.conv3x3_vjp(wc, v, kern, padding="edge")
        return float((out * wc).sum()), g

    rec = ops.gradient_check("conv3x3", weighted_conv, x)
    if rec.max_rel_error >= 1e-4:
        return f"conv3x3 gradient error {rec.max_rel_error:.2e}"
    return None


def _check_generator_grads() -> str | None:
    spec = generator.build_generator(3, latent_dim=6, layer_count=3,
                                     channels=(5, 4))
    codes = generator.seed_codes(spec, 2, 2, seed=5)
    w = np.random.default_rng(9).standard_normal((spec.resolution,) * 2
                                                 + (spec.image_channels,))

    def loss_of_codes(c):
        cs = generator.LatentCodeSet(c, codes.importances)
        img, back = generator.generate_with_grads(spec, cs, 2)
        return float((img * w).sum()), back(w)[0]

    rec = ops.gradient_check("generate_with_grads", loss_of_codes, codes.codes)
    if rec.max_rel_error >= 1e-4:
        return f"generator gradient error {rec.max_rel_error:.2e}"
    return None


def _check_softmax() -> str | None:
    rng = np.random.default_rng(11)
    m = rng.uniform(-1e4, 1e4, size=(6, 9))
    rows = ops.softmax_rows(m, 3.0).sum(axis=1)
    if np.abs(rows - 1.0).max() >= 1e-6:
        return f"row sums off by {np.abs(rows - 1.0).max():.2e}"
    return None


def _check_adam() -> str | None:
    p = np.array([1.0])
    g = np.array([1.0])
    stepped, _ = ops.adam_step(p, g, ops.adam_init(p), lr=0.1, beta1=0.0,
                               beta2=0.999)
    if abs(stepped[0] - 0.9) > 1e-6:
        return f"hand-checked step gave {stepped[0]!r}"
    same, _ = ops.adam_step(p, np.zeros(1), ops.adam_init(p), lr=0.1,
                            beta1=0.0, beta2=0.999)
    if not np.array_equal(same, p):
        return "zero gradient moved the parameter"
    return None


def _check_warp() -> str | None:
    rng = np.random.default_rng(13)
    f = correspondence.centralize(rng.standard_normal((3, 3, 8)))
    m = correspondence.correlation_matrix(f, f)
    if np.abs(np.diag(m) - 1.0).max() >= 1e-6:
        return "self-correlation diagonal is not 1"
    if m.min() < -1 - 1e-6 or m.max() > 1 + 1e-6:
        return "correlation out of [-1, 1]"
    target = rng.uniform(0.0, 1.0, size=(3, 3, 3))
    flat_mean = target.reshape(-1, 3).mean(axis=0)
    near_uniform = correspondence.warp(m, target, correspondence.WarpConfig(1e-9))
    if np.abs(near_uniform - flat_mean).max() >= 1e-6:
        return "tiny temperature does not average the target"
    sharp = correspondence.warp(m, target, correspondence.WarpConfig(1e4))
    if np.abs(sharp - target).max() >= 1e-4:
        return "identical features do not reproduce the target"
    return None


def _check_frechet() -> str | None:
    rng = np.random.default_rng(17)
    a = rng.standard_normal((5, 5))
    cov = a @ a.T
    root = selection.psd_sqrt(cov)
    if np.abs(root @ root - cov).max() >= 1e-6:
        return "PSD root does not reconstruct"
    s1 = selection.FidStats(np.array([0.0]), np.array([[1.0]]), 8)
    s2 = selection.FidStats(np.array([3.0]), np.array([[4.0]]), 8)
    d = selection.frechet_distance(s1, s2)
    if abs(d - 10.0) >= 1e-6:
        return f"1-D closed form gave {d!r}"
    if selection.frechet_distance(s2, s2) >= 1e-6:
        return "self-distance is not 0"
    return None


def _check_inversion() -> str | None:
    spec = generator.build_generator(21, latent_dim=8, layer_count=3,
                                     channels=(8, 6))
    known = generator.seed_codes(spec, 2, 3, seed=1)
    guide = inversion.downsample(generator.generate(spec, known, 2), 2)
    cfg = generator.HypothesisConfig(2, code_count=3, seed=2, steps=80,
                                     distance_kind="l2")
    hyp = inversion.invert(spec, cfg, guide, 2)
    if hyp.final_loss > 0.5 * hyp.initial_loss:
        return (f"self-reconstruction barely moved: "
                f"{hyp.initial_loss:.3e} -> {hyp.final_loss:.3e}")
    if hyp.final_loss != min(hyp.loss_trace):
        return "final loss is not the trace minimum"
    return None


def _check_netpbm() -> str | None:
    rng = np.random.default_rng(23)
    img = rng.uniform(0.0, 1.0, size=(5, 7, 3))
    data = netpbm.encode(img)
    again = netpbm.encode(netpbm.decode(data))
    if data != again:
        return "round trip is not byte-identical"
    try:
        netpbm.decode(b"P3\n1 1\n255\n000")
    except netpbm.NetpbmError:
        pass
    else:
        return "ASCII magic was not rejected"
    return None


def _check_synthetic() -> str | None:
    a = synthetic.make_synthetic_pair(31)
    b = synthetic.make_synthetic_pair(31)
    if not (np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])):
        return "same seed produced different pairs"
    ext = build_extractor(0)
    feats = extract_features(a[0], ext)
    if feats.shape != (4, 4, 32):
        return f"unexpected feature shape {feats.shape}"
    return None


CHECKS = [
    ("primitive gradients", _check_gradients),
    ("generator gradients", _check_generator_grads),
    ("softmax normalization", _check_softmax),
    ("adam update", _check_adam),
    ("correlation and warp", _check_warp),
    ("frechet distance", _check_frechet),
    ("self-reconstruction", _check_inversion),
    ("netpbm round trip", _check_netpbm),
    ("synthetic pairs", _check_synthetic),
]


def run_selftest(write=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, check in CHECKS:
        problem = check()
        if problem is None:
            write(f"PASS {name}")
        else:
            failures += 1
            write(f"FAIL {name}: {problem}")
    return failures
