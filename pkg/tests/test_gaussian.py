import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from teamrelax import code_value, separability_projection
from teamrelax.gaussian import (GaussianSpec, GridBudgetExceeded, additive_channel, build_instance,
                                discretize_gaussian, eq15_16_reference, gamma_star, gaussian_bounds,
                                grids, linear_code_on_grid, stationarity_residual)
from teamrelax.info import kl_divergence


def test_spec_validation():
    for bad in (dict(grid_points=10), dict(grid_points=7), dict(half_width=2.0), dict(k0=0.0),
                dict(sigma0=-1.0), dict(problem="other")):
        with pytest.raises(ValueError):
            GaussianSpec(**bad)


def test_three_point_grid():
    values, probs = discretize_gaussian(1.0, 3, 1.0)
    assert np.array_equal(values, [-1.0, 0.0, 1.0])
    assert probs[0] == probs[2] < probs[1]


@given(st.integers(4, 40).map(lambda k: 2 * k + 1), st.floats(3.0, 6.0))
def test_grid_is_symmetric_with_zero_mean(n, h):
    values, probs = discretize_gaussian(1.0, n, h)
    assert np.array_equal(probs, probs[::-1])
    assert np.array_equal(values, -values[::-1])
    # mirrored terms cancel exactly, so the mean is zero in exact arithmetic
    assert np.array_equal(values * probs, -(values * probs)[::-1])
    assert abs(values @ probs) <= 1e-15
    assert probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_fine_grid_variance():
    values, probs = discretize_gaussian(1.0, 65, 5.0)
    assert abs(values ** 2 @ probs - 1.0) <= 0.01


def test_grid_scales_with_sigma():
    v1, p1 = discretize_gaussian(1.0, 33, 5.0)
    v2, p2 = discretize_gaussian(2.0, 33, 5.0)
    assert np.array_equal(p1, p2)
    assert np.allclose(v2, 2 * v1, rtol=0, atol=1e-15)


def test_test_channel_closed_form():
    cf = gamma_star(GaussianSpec())
    assert cf.gamma0_star == pytest.approx(1.0, abs=1e-12)
    assert cf.gamma1_star == pytest.approx(0.5, abs=1e-12)
    assert cf.opt_b == pytest.approx(0.75, abs=1e-12)
    assert cf.xi0(cf.gamma0_star) == pytest.approx(0.25, abs=1e-12)
    assert cf.lambda_star == pytest.approx(2 * 0.25 * 2, abs=1e-12)


def test_small_power_cost_closed_form():
    cf = gamma_star(GaussianSpec(k0=1 / 16))
    assert cf.gamma0_star == pytest.approx(math.sqrt(3), abs=1e-12)
    assert cf.gamma1_star == pytest.approx(math.sqrt(3) / 4, abs=1e-12)
    assert cf.opt_b == pytest.approx(0.4375, abs=1e-12)


def test_cross_term_root_and_sign_rule():
    spec = GaussianSpec(k0=1.0, s01=2.0, problem="bansalBasar")
    cf = gamma_star(spec)
    assert cf.root_residual <= 1e-12
    assert cf.gamma0_star == pytest.approx(1.2012688724469542, abs=1e-12)
    assert abs(cf.gamma0_star - 1.203) <= 2e-3
    g = cf.gamma0_star
    assert abs((2 * g - 2) * (g ** 2 + 1) ** 2 - 2 * g) <= 1e-12
    assert cf.gamma0_signed == -cf.gamma0_star
    assert gamma_star(GaussianSpec(k0=1.0, s01=-2.0, problem="bansalBasar")).gamma0_signed == cf.gamma0_star
    assert cf.opt_b == pytest.approx(-0.5501659121831177, abs=1e-12)


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0.05, 3.0), st.floats(-3.0, 3.0))
def test_root_meets_the_power_equation(sigma0, sigma_w, k0, s01):
    spec = GaussianSpec(sigma0=sigma0, sigma_w=sigma_w, k0=k0, s01=s01, problem="bansalBasar")
    cf = gamma_star(spec)
    if cf.status != "ok":
        return
    p = cf.gamma0_star * sigma0
    lhs = (2 * k0 * p - abs(s01) * sigma0) * (p ** 2 + sigma_w ** 2) ** 2
    rhs = 2 * p * sigma0 ** 2 * sigma_w ** 2
    # the first factor is a difference of nearly equal terms, so measure
    # the residual against the size of those terms
    scale = (2 * k0 * p + abs(s01) * sigma0) * (p ** 2 + sigma_w ** 2) ** 2 + rhs
    assert abs(lhs - rhs) <= 1e-12 * scale
    assert abs(stationarity_residual(spec, cf.gamma0_star)) <= 1e-12 * scale


def test_bounds_examples():
    spec = GaussianSpec()
    zero = gaussian_bounds(spec, 0.0)
    assert zero.cc_rhs == 0.0 and zero.distortion_lb == 1.0
    one = gaussian_bounds(spec, 1.0)
    assert one.cc_rhs == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert one.distortion_lb == pytest.approx(0.5, abs=1e-15)
    assert one.rd_lhs == pytest.approx(one.cc_rhs, abs=1e-12)
    assert gaussian_bounds(spec, 1e8).distortion_lb < 1e-15
    lbs = [gaussian_bounds(spec, p).distortion_lb for p in np.linspace(0, 5, 20)]
    assert np.all(np.diff(lbs) < 0)
    with pytest.raises(ValueError):
        gaussian_bounds(spec, -1.0)


def test_profile_references():
    spec = GaussianSpec()
    at0 = eq15_16_reference(spec, 1.0, 0.0, 0.3, 0.0)
    assert at0.kl_at_x == at0.c1
    at2 = eq15_16_reference(spec, 1.0, 2.0, 0.3, 0.0)
    assert at2.kl_at_x - at0.kl_at_x == pytest.approx(1.0, abs=1e-14)
    s = 0.7
    vertex = 2.0 * 1.0 * 0.5 * s
    assert eq15_16_reference(spec, 1.0, 0.0, s, vertex).log_ratio_at_sshat == pytest.approx(
        eq15_16_reference(spec, 1.0, 0.0, s, 0.0).c2, abs=1e-15)
    with pytest.raises(ValueError):
        eq15_16_reference(spec, 0.0, 0.0, 0.0, 0.0)


def test_divergence_profile_matches_fine_grid():
    spec = GaussianSpec(grid_points=129)
    s_vals, p_s, x_vals, y_vals = grids(spec)
    channel = additive_channel(x_vals, y_vals, spec.sigma_w)
    out = p_s @ channel                          # X = S on matched grids
    i0, i2 = np.argmin(np.abs(x_vals)), np.argmin(np.abs(x_vals - 2.0))
    x = x_vals[i2]
    ref = eq15_16_reference(spec, 1.0, x, 0.0, 0.0).kl_at_x - eq15_16_reference(spec, 1.0, 0.0, 0.0, 0.0).kl_at_x
    assert ref == pytest.approx(x ** 2 / 4, abs=1e-14)
    diff = kl_divergence(channel[i2], out) - kl_divergence(channel[i0], out)
    assert diff == pytest.approx(ref, rel=0.02)


def test_test_channel_instance():
    inst = build_instance(GaussianSpec())
    mid = 8
    assert inst.s_values[mid] == 0.0 and inst.x_values[mid] == 0.0
    assert np.all(inst.cost_tensor[mid, mid, :, mid] == 0.0)
    assert np.allclose(inst.channel.sum(axis=1), 1.0)
    step = np.diff(inst.x_values)
    assert np.allclose(np.diff(inst.y_values), step[0])
    assert inst.y_values[0] <= inst.x_values[0] - 5.0 + 1e-12


def test_cross_term_instance_adds_bilinear_cost():
    plain = build_instance(GaussianSpec(k0=1.0, grid_points=9, problem="bansalBasar"))
    cross = build_instance(GaussianSpec(k0=1.0, s01=2.0, grid_points=9, problem="bansalBasar"))
    # the cross instance may use a wider X grid, so compare against labels directly
    s, x = cross.s_values, cross.x_values
    base = (s[None, None, None, :] - s[:, None, None, None]) ** 2 + 1.0 * x[None, :, None, None] ** 2
    extra = cross.cost_tensor - base
    assert np.allclose(extra, np.broadcast_to(2 * s[:, None, None, None] * x[None, :, None, None],
                                              extra.shape), atol=1e-12)
    assert plain.separable.tau_prime is None


def test_witsenhausen_is_not_separable():
    inst = build_instance(GaussianSpec(grid_points=9, problem="witsenhausen"))
    assert separability_projection(inst).residual > 0


def test_grid_budget_refusal():
    with pytest.raises(GridBudgetExceeded):
        build_instance(GaussianSpec(grid_points=201))


def test_linear_code_examples():
    inst = build_instance(GaussianSpec())
    ident = linear_code_on_grid(inst, 1.0, 0.5)
    assert list(ident.f) == list(range(17))
    zero = linear_code_on_grid(inst, 0.0, 0.5)
    assert set(zero.f) == {8}
    assert abs(code_value(inst, ident) - 0.75) <= 0.15 * 0.75
    fine = build_instance(GaussianSpec(grid_points=33))
    coarse_err = abs(code_value(inst, ident) - 0.75)
    fine_err = abs(code_value(fine, linear_code_on_grid(fine, 1.0, 0.5)) - 0.75)
    assert fine_err <= coarse_err


def test_nearest_ties_go_to_smaller_label():
    inst = build_instance(GaussianSpec())
    step = inst.x_values[1] - inst.x_values[0]
    code = linear_code_on_grid(inst, 0.5 * step / inst.s_values[9], 0.5)
    assert code.f[9] == 8


def test_linear_code_moments_on_fine_grid():
    inst = build_instance(GaussianSpec(grid_points=65))
    code = linear_code_on_grid(inst, 1.0, 0.5)
    x = inst.x_values[np.asarray(code.f)]
    assert x ** 2 @ inst.p_s == pytest.approx(1.0, rel=0.02)
    # distortion part only: remove the power term from the total cost
    distortion = code_value(inst, code) - 0.25 * (x ** 2 @ inst.p_s)
    assert distortion == pytest.approx(0.5, rel=0.02)
