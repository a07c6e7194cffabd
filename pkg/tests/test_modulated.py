"""Multi-tone parameterization, weighted-coverage objective, and the
projected-descent optimizer."""

import math
from fractions import Fraction

import numpy as np
import pytest

from lissscan import (ROI_A, ROI_B, ModulatedParams, OptimizeOptions,
                      SampledPattern, ScannerConfig, WeightMap,
                      default_tone_indices, design_unmodulated, gradient,
                      initial_params, objective, optimize, polar_coefficients,
                      project_absolute, project_rms, reference_pattern,
                      roi_density, sample_unmodulated, synthesize_modulated,
                      transfer_amplitude)
from lissscan.errors import DomainError, InvalidParams

F = Fraction


# ------------------------------------------------------------------ weight maps

def test_weight_map_validation():
    with pytest.raises(DomainError):
        WeightMap(np.ones((4, 5)))
    with pytest.raises(DomainError):
        WeightMap(np.ones(16))
    with pytest.raises(DomainError):
        WeightMap(np.full((4, 4), -0.1))
    with pytest.raises(DomainError):
        WeightMap(np.full((4, 4), math.nan))
    assert WeightMap.uniform(8, 0.5).w.shape == (8, 8)


def test_weight_map_from_rectangles():
    wmap = WeightMap.from_rectangles([ROI_B], 32)
    assert set(np.unique(wmap.w)) == {0.0, 1.0}
    # patch centers -1 + (2i+1)/32 inside [0.2, 0.9] x [0.2, 0.8]
    assert int(np.count_nonzero(wmap.w)) == 11 * 10
    ix, iy = np.nonzero(wmap.w)
    cx = -1.0 + (2.0 * ix + 1.0) / 32
    cy = -1.0 + (2.0 * iy + 1.0) / 32
    assert cx.min() >= 0.2 and cx.max() <= 0.9
    assert cy.min() >= 0.2 and cy.max() <= 0.8


# ------------------------------------------------------------------- parameters

def test_tone_ladders_pinned():
    assert default_tone_indices(1, 5) == (12, 13, 14, 15, 16)
    assert default_tone_indices(2, 5) == (24, 26, 28, 30, 32)
    assert default_tone_indices(F(13, 10), 5) == (16, 17, 18, 20, 21)
    assert default_tone_indices(1, 3) == (13, 14, 15)
    assert default_tone_indices(2, 3) == (26, 28, 30)
    assert default_tone_indices(F(13, 10), 3) == (17, 18, 20)
    with pytest.raises(InvalidParams):
        default_tone_indices(1, 4)
    with pytest.raises(InvalidParams):
        default_tone_indices(0, 5)
    with pytest.raises(InvalidParams):
        default_tone_indices(F(1, 100), 5)   # rounds below the grid


def test_initial_params_layout():
    params = initial_params(2, m=7, n_tones=5)
    assert params.nx == (24, 26, 28, 30, 32)
    assert params.ny == (12, 13, 14, 15, 16)
    assert params.alpha[2] == 0.95 and np.count_nonzero(params.alpha) == 1
    assert params.beta[2] == 0.95 and np.count_nonzero(params.beta) == 1
    assert np.all(params.gamma == 0) and np.all(params.delta == 0)
    assert params.rms_x == pytest.approx(0.95) and params.rms_y == pytest.approx(0.95)
    assert params.config.fx_res == 2.0 and params.config.fy_res == 1.0
    single = initial_params(2, m=7, n_tones=3, y_single_tone=True)
    assert single.ny == (14,)
    np.testing.assert_allclose(single.fy_tones, [1.0])
    with pytest.raises(InvalidParams):
        initial_params(2, amplitude=0.0)
    with pytest.raises(InvalidParams):
        initial_params(2, amplitude=1.5)


def test_tone_frequencies_sit_on_the_grid():
    params = initial_params(2, m=7, n_tones=5)
    np.testing.assert_allclose(params.fx_tones, np.array([24, 26, 28, 30, 32]) / 14.0)
    assert params.fx_tones[2] == pytest.approx(2.0)   # center tone on resonance


def test_params_validation():
    base = initial_params(1, n_tones=3)
    with pytest.raises(InvalidParams):
        base.with_coefficients(alpha=[1.2, 0.0, 0.0])   # RMS above 1
    with pytest.raises(InvalidParams):
        base.with_coefficients(alpha=[0.1, 0.2])        # length mismatch
    with pytest.raises(InvalidParams):
        base.with_coefficients(alpha=[math.nan, 0.0, 0.0])
    with pytest.raises(InvalidParams):
        ModulatedParams(alpha=[0.1], gamma=[0.0], beta=[0.1], delta=[0.0],
                        nx=(14, 14), ny=(14,), L=2, m=7, config=base.config)
    with pytest.raises(InvalidParams):
        ModulatedParams(alpha=[0.1, 0.1], gamma=[0.0, 0.0], beta=[0.1], delta=[0.0],
                        nx=(15, 14), ny=(14,), L=2, m=7, config=base.config)
    with pytest.raises(InvalidParams):
        ModulatedParams(alpha=[0.1], gamma=[0.0], beta=[0.1], delta=[0.0],
                        nx=(14,), ny=(14,), L=0, m=7, config=base.config)


def test_with_coefficients_partial_update():
    base = initial_params(1, n_tones=3)
    new = base.with_coefficients(gamma=[0.1, 0.2, 0.1])
    np.testing.assert_array_equal(new.alpha, base.alpha)
    np.testing.assert_allclose(new.gamma, [0.1, 0.2, 0.1])
    assert new.nx == base.nx and new.config == base.config
    np.testing.assert_array_equal(base.gamma, np.zeros(3))   # original untouched


def test_params_dict_round_trip():
    rng = np.random.default_rng(3)
    base = initial_params(F(13, 10), n_tones=5)
    params = base.with_coefficients(*(rng.uniform(-0.2, 0.2, 5) for _ in range(4)))
    back = ModulatedParams.from_dict(params.to_dict())
    for name in ("alpha", "gamma", "beta", "delta"):
        np.testing.assert_array_equal(getattr(back, name), getattr(params, name))
    assert back.nx == params.nx and back.ny == params.ny
    assert back.config == params.config
    with pytest.raises(InvalidParams):
        ModulatedParams.from_dict({"alpha": [0.1]})


# -------------------------------------------------------------------- synthesis

def test_single_tone_synthesis_matches_closed_form():
    cfg = ScannerConfig.normalized(1.0)
    params = ModulatedParams(alpha=[0.8], gamma=[0.0], beta=[0.0], delta=[0.6],
                             nx=(14,), ny=(13,), L=2, m=7, config=cfg)
    pattern = synthesize_modulated(params, 200)
    hx = transfer_amplitude(cfg, "x", 1.0)
    hy = transfer_amplitude(cfg, "y", 13 / 14)
    np.testing.assert_allclose(pattern.x, 0.8 * hx * np.cos(2 * np.pi * pattern.t), atol=1e-12)
    np.testing.assert_allclose(pattern.y, 0.6 * hy * np.sin(2 * np.pi * (13 / 14) * pattern.t),
                               atol=1e-12)


def test_polar_coefficients_reproduce_a_phased_tone():
    a, g = polar_coefficients([0.7], [0.5])
    cfg = ScannerConfig.normalized(1.0)
    params = ModulatedParams(alpha=a, gamma=g, beta=[0.1], delta=[0.0],
                             nx=(14,), ny=(14,), L=2, m=7, config=cfg)
    pattern = synthesize_modulated(params, 200)
    np.testing.assert_allclose(pattern.x, 0.7 * np.cos(2 * np.pi * pattern.t + 0.5), atol=1e-12)


def test_synthesis_is_linear_in_the_coefficients():
    rng = np.random.default_rng(11)
    base = initial_params(F(3, 2), n_tones=5)
    p1 = base.with_coefficients(*(rng.uniform(-0.3, 0.3, 5) for _ in range(4)))
    p2 = base.with_coefficients(*(rng.uniform(-0.3, 0.3, 5) for _ in range(4)))
    mix = base.with_coefficients(*(0.4 * getattr(p1, n) - 0.5 * getattr(p2, n)
                                   for n in ("alpha", "gamma", "beta", "delta")))
    sa, sb, sm = (synthesize_modulated(p, 300) for p in (p1, p2, mix))
    np.testing.assert_allclose(sm.x, 0.4 * sa.x - 0.5 * sb.x, atol=1e-12)
    np.testing.assert_allclose(sm.y, 0.4 * sa.y - 0.5 * sb.y, atol=1e-12)


def test_synthesis_window_and_bookkeeping():
    params = initial_params(2, n_tones=3)
    one = synthesize_modulated(params, 500)
    assert one.t[0] == 0.0 and one.t[-1] == pytest.approx(7.0 - 7.0 / 500.0)
    assert one.frame_len == 7.0 and one.frames == 1
    two = synthesize_modulated(params, 500, frames=2)
    assert two.t[-1] == pytest.approx(14.0 - 14.0 / 500.0)
    assert two.frames == 2
    with pytest.raises(DomainError):
        synthesize_modulated(params, 1)
    with pytest.raises(DomainError):
        synthesize_modulated(params, 500, frames=0)


def test_reference_pattern_is_the_single_tone_design():
    ref = reference_pattern(2, 7)
    cfg = ScannerConfig.normalized(2.0)
    direct = sample_unmodulated(design_unmodulated(F(2), 7), cfg, n_samples=500)
    np.testing.assert_array_equal(ref.x, direct.x)
    np.testing.assert_array_equal(ref.y, direct.y)
    custom = reference_pattern(2, 7, config=ScannerConfig(fx_res=2.0, qx=5.0), n_samples=200)
    assert len(custom.x) == 200
    assert np.max(np.abs(custom.x)) != pytest.approx(np.max(np.abs(ref.x)))


# -------------------------------------------------------------------- objective

def test_objective_matches_brute_force():
    rng = np.random.default_rng(5)
    n = 40
    pattern = SampledPattern(t=np.arange(n) * 0.1, x=rng.uniform(-1, 1, n),
                             y=rng.uniform(-1, 1, n), frame_len=4.0)
    wmap = WeightMap(rng.uniform(0, 1, (8, 8)))
    threshold = 0.15
    loss, asg = objective(pattern, wmap, threshold)
    centers = -1.0 + (2.0 * np.arange(8) + 1.0) / 8
    expected = 0.0
    for i, cx in enumerate(centers):
        for j, cy in enumerate(centers):
            d2 = (pattern.x - cx) ** 2 + (pattern.y - cy) ** 2
            k = int(np.argmin(d2))
            assert asg.n_idx[i, j] == k
            if d2[k] < threshold ** 2:
                assert asg.occupied[i, j]
            else:
                assert not asg.occupied[i, j]
                expected += wmap.w[i, j] * d2[k]
    assert loss == pytest.approx(expected, rel=1e-12)


def test_occupied_patches_pay_nothing():
    pattern = SampledPattern(t=np.array([0.0, 1.0]), x=np.array([-0.9375, 0.5]),
                             y=np.array([-0.9375, 0.5]), frame_len=2.0)
    wmap = WeightMap.uniform(16)
    # first sample sits exactly on a patch center: occupied at any threshold > 0
    loss_tight, asg = objective(pattern, wmap, 1e-6)
    assert asg.occupied[0, 0]
    loss_loose, _ = objective(pattern, wmap, 0.5)
    assert loss_loose <= loss_tight


def test_raising_the_threshold_never_raises_the_loss():
    rng = np.random.default_rng(9)
    pattern = SampledPattern(t=np.arange(60) * 0.05, x=rng.uniform(-1, 1, 60),
                             y=rng.uniform(-1, 1, 60), frame_len=3.0)
    wmap = WeightMap(rng.uniform(0, 1, (16, 16)))
    losses = [objective(pattern, wmap, thr)[0] for thr in (0.0, 0.05, 0.1, 0.2, 0.4)]
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))
    with pytest.raises(DomainError):
        objective(pattern, wmap, -0.1)


def test_roi_density_counting():
    pattern = SampledPattern(t=np.arange(4) * 1.0,
                             x=np.array([0.5, 0.5, -0.6, 0.2]),
                             y=np.array([0.5, 0.7, 0.0, 0.81]), frame_len=4.0)
    assert roi_density(pattern, [ROI_B]) == 2      # boundary x = 0.2 is inside
    assert roi_density(pattern, [ROI_A]) == 1
    assert roi_density(pattern, [ROI_A, ROI_B]) == 3
    assert roi_density(pattern, []) == 0
    assert roi_density(pattern, [(-1, 1, -1, 1)]) == 4
    with pytest.raises(DomainError):
        roi_density(pattern, [(0.5, 0.2, 0.0, 1.0)])


# ------------------------------------------------------------------- gradients

def _fd_gradient(params, wmap, n_samples, threshold, h=1e-6):
    flat = []
    for name in ("alpha", "gamma", "beta", "delta"):
        for j in range(len(getattr(params, name))):
            losses = []
            for eps in (h, -h):
                arr = getattr(params, name).copy()
                arr[j] += eps
                p = params.with_coefficients(**{name: arr})
                losses.append(objective(synthesize_modulated(p, n_samples), wmap, threshold)[0])
            flat.append((losses[0] - losses[1]) / (2 * h))
    return np.array(flat)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(21)
    base = initial_params(F(3, 2), n_tones=5)
    coef = rng.standard_normal(20)
    coef *= 0.8 / math.hypot(*coef)   # comfortably inside both RMS balls
    params = base.with_coefficients(coef[:5], coef[5:10], coef[10:15], coef[15:])
    wmap = WeightMap(rng.uniform(0, 1, (16, 16)))
    grad = gradient(params, wmap, 200, 1.0 / 16)
    analytic = np.concatenate([grad.alpha, grad.gamma, grad.beta, grad.delta])
    fd = _fd_gradient(params, wmap, 200, 1.0 / 16)
    assert np.linalg.norm(fd - analytic) / np.linalg.norm(analytic) < 1e-6


def test_gradient_is_zero_once_every_weighted_patch_is_occupied():
    params = initial_params(1, n_tones=3)
    wmap = WeightMap.uniform(8)
    grad = gradient(params, wmap, 300, threshold=3.0)   # threshold swallows the FoV
    for part in (grad.alpha, grad.gamma, grad.beta, grad.delta):
        np.testing.assert_array_equal(part, np.zeros_like(part))


# ----------------------------------------------------------------- projections

def test_rms_projection():
    a = np.array([0.3, -0.2])
    b = np.array([0.1, 0.0])
    pa, pb = project_rms(a, b)
    np.testing.assert_array_equal(pa, a)
    assert pa is not a                       # defensively copied
    big_a, big_b = a * 9.0, b * 9.0
    qa, qb = project_rms(big_a, big_b)
    norm = math.sqrt(np.sum(qa ** 2) + np.sum(qb ** 2))
    assert norm == pytest.approx(1.0, rel=1e-12)
    # direction preserved: projected vector is a positive multiple of the input
    scale = np.linalg.norm(np.concatenate([qa, qb])) / np.linalg.norm(np.concatenate([big_a, big_b]))
    np.testing.assert_allclose(np.concatenate([qa, qb]),
                               scale * np.concatenate([big_a, big_b]), atol=1e-12)


def test_absolute_projection_satisfies_the_simplex_conditions():
    rng = np.random.default_rng(17)
    for _ in range(25):
        k = int(rng.integers(2, 6))
        cos_c = rng.standard_normal(k)
        sin_c = rng.standard_normal(k)
        pa, pb = project_absolute(cos_c, sin_c)
        mags_in = np.hypot(cos_c, sin_c)
        mags_out = np.hypot(pa, pb)
        assert mags_out.sum() <= 1.0 + 1e-9
        if mags_in.sum() <= 1.0:
            np.testing.assert_array_equal(pa, cos_c)
            continue
        assert mags_out.sum() == pytest.approx(1.0, rel=1e-9)
        # per-tone directions survive; shrinkage is uniform over the active set
        active = mags_out > 1e-12
        shrink = (mags_in - mags_out)[active]
        np.testing.assert_allclose(shrink, shrink[0], atol=1e-9)
        assert np.all(mags_in[~active] <= shrink[0] + 1e-9)
        np.testing.assert_allclose(pa[active] * mags_in[active],
                                   cos_c[active] * mags_out[active], atol=1e-9)
        # projecting again changes nothing
        qa, qb = project_absolute(pa, pb)
        np.testing.assert_allclose(qa, pa, atol=1e-12)


# -------------------------------------------------------------------- optimizer

OPTS_SHORT = OptimizeOptions(max_iters=25)


def test_optimize_descends_and_stays_feasible():
    init = initial_params(F(3, 2), n_tones=5)
    wmap = WeightMap.from_rectangles([ROI_B], 32)
    res = optimize(init, wmap, OPTS_SHORT)
    assert res.loss <= res.loss_trace[0]
    assert res.loss == pytest.approx(float(np.min(res.loss_trace)), rel=1e-15)
    assert np.all(res.norm_trace <= 1.0 + 1e-9)
    assert len(res.loss_trace) == res.iterations + 1
    assert res.params.rms_x <= 1.0 + 1e-9 and res.params.rms_y <= 1.0 + 1e-9


def test_optimize_is_deterministic():
    init = initial_params(2, n_tones=3, y_single_tone=True)
    wmap = WeightMap.from_rectangles([ROI_A], 32)
    r1 = optimize(init, wmap, OPTS_SHORT)
    r2 = optimize(init, wmap, OPTS_SHORT)
    np.testing.assert_array_equal(r1.loss_trace, r2.loss_trace)
    np.testing.assert_array_equal(r1.params.alpha, r2.params.alpha)


def test_optimize_on_a_uniform_map_stays_feasible():
    # no loss target on purpose: a uniform map gives the descent nothing to
    # trade, so the meaningful contract is feasibility plus a finite trace
    init = initial_params(1, n_tones=5)
    res = optimize(init, WeightMap.uniform(32), OPTS_SHORT)
    assert np.all(np.isfinite(res.loss_trace))
    assert np.all(res.norm_trace <= 1.0 + 1e-9)


def test_optimize_with_absolute_constraint():
    init = initial_params(2, n_tones=3)
    wmap = WeightMap.from_rectangles([ROI_B], 32)
    res = optimize(init, wmap, OptimizeOptions(max_iters=15, constraint="absolute"))
    mag_x = float(np.hypot(res.params.alpha, res.params.gamma).sum())
    mag_y = float(np.hypot(res.params.beta, res.params.delta).sum())
    assert mag_x <= 1.0 + 1e-9 and mag_y <= 1.0 + 1e-9
    assert np.all(res.norm_trace <= 1.0 + 1e-9)


def test_optimize_converges_early_when_nothing_improves():
    init = initial_params(1, n_tones=3)
    res = optimize(init, WeightMap.uniform(16), OptimizeOptions(max_iters=200, threshold=3.0))
    # everything occupied from the start: loss 0, patience stops the loop
    assert res.loss == 0.0
    assert res.converged and res.iterations < 200


def test_optimize_input_validation():
    init = initial_params(1, n_tones=3)
    with pytest.raises(InvalidParams):
        optimize(init, WeightMap(np.zeros((8, 8))))
    with pytest.raises(DomainError):
        optimize(init, WeightMap.uniform(8), OptimizeOptions(constraint="clip"))
    with pytest.raises(DomainError):
        optimize(init, WeightMap.uniform(8), OptimizeOptions(threshold=-0.2))
