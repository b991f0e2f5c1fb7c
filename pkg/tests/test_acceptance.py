"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict (printed in the terminal summary)
before asserting, so a failing criterion still reports its numbers.
"""
import math
import time

import numpy as np
import pytest

from conftest import record
from oracles import binary_entropy, random_instance_arrays
from teamrelax import (DetCode, Instance, SeparableCost, bound_report, code_value, enumerate_optimal,
                       f_mi_gradients, nonconvexity_witness, separability_projection,
                       solve_relaxation_bansal, solve_relaxation_general, solve_relaxation_separable)
from teamrelax.core import det_code_to_random
from teamrelax.exact import alternating_best_response
from teamrelax.gaussian import GaussianSpec, build_instance, gamma_star, linear_code_on_grid
from teamrelax.info import (blahut_arimoto_cc, blahut_arimoto_rd, dpi_slack, get_generator,
                            input_information, kernel_information, kl_divergence, neg_log)
from teamrelax.inverse import (SynthesisSpec, candidate_pair, instance_with_costs, lossless_code,
                               synthesize_costs, verify_inverse_optimality)

KINDS = ("negLog", "totalVariation", "squaredHellinger", "chiSquareLike")
GRIDS = (17, 33, 65)
BSC = np.array([[0.9, 0.1], [0.1, 0.9]])
HAMMING = 1.0 - np.eye(2)
CAPACITY = math.log(2) - binary_entropy(0.1)


def test_criterion_01_relaxation_below_exact():
    t0 = time.perf_counter()
    worst = -np.inf
    for seed in range(100):
        p_s, channel, cost = random_instance_arrays(1000 + seed)
        inst = Instance(p_s, channel, cost=cost)
        worst = max(worst, solve_relaxation_general(inst).value - enumerate_optimal(inst).value)
    secs = time.perf_counter() - t0
    ok = worst <= 1e-8 and secs < 30
    record(1, ok, f"max(relax - exact) = {worst:.3e} over 100 instances, {secs:.1f} s")
    assert ok


def test_criterion_02_tight_binary_case():
    t0 = time.perf_counter()
    inst = Instance(np.array([0.5, 0.5]), BSC, separable=SeparableCost(HAMMING, np.zeros(2)))
    sol = solve_relaxation_separable(inst)
    exact = enumerate_optimal(inst).value
    secs = time.perf_counter() - t0
    ok = (abs(sol.value - 0.1) <= 1e-6 and abs(exact - 0.1) <= 1e-6 and sol.lam > 0
          and abs(sol.dpi_slack) <= 1e-8 and secs < 1)
    record(2, ok, f"relax {sol.value:.9f}, exact {exact:.9f}, lambda {sol.lam:.4f}, "
                  f"slack {sol.dpi_slack:.1e}, {secs:.2f} s")
    assert ok


def test_criterion_03_blahut_arimoto():
    t0 = time.perf_counter()
    cap = blahut_arimoto_cc(BSC).value
    rate = blahut_arimoto_rd(np.array([0.5, 0.5]), HAMMING, target=0.1).value
    secs = time.perf_counter() - t0
    ok = abs(cap - 0.368064) <= 1e-5 and abs(rate - 0.368064) <= 1e-5 and secs < 1
    record(3, ok, f"C = {cap:.7f}, R(0.1) = {rate:.7f} (closed form {CAPACITY:.7f}), {secs:.2f} s")
    assert ok


def test_criterion_04_test_channel_refinement():
    cf = gamma_star(GaussianSpec())
    closed_ok = (abs(cf.gamma0_star - 1) <= 1e-12 and abs(cf.gamma1_star - 0.5) <= 1e-12
                 and abs(cf.opt_b - 0.75) <= 1e-12)
    errors, secs = [], 0.0
    for n in GRIDS:
        t0 = time.perf_counter()
        inst = build_instance(GaussianSpec(grid_points=n))
        sol = solve_relaxation_separable(inst)
        secs = time.perf_counter() - t0
        errors.append(abs(sol.value - 0.75) / 0.75)
    linear = code_value(inst, linear_code_on_grid(inst, cf.gamma0_star, cf.gamma1_star))
    excess = (linear - sol.value) / sol.value
    monotone = all(e2 <= e1 for e1, e2 in zip(errors, errors[1:]))
    ok = closed_ok and monotone and errors[-1] <= 0.05 and excess <= 0.02 and secs < 300
    record(4, ok, f"rel. errors {', '.join(f'{e:.2e}' for e in errors)} "
                  f"(non-increasing: {monotone}), linear code excess {excess:.2%}, {secs:.1f} s at 65")
    assert ok


def _encoder_slope(inst, code):
    x = inst.x_values[np.asarray(code.f)]
    s = inst.s_values
    return float(np.sum(inst.p_s * s * x) / np.sum(inst.p_s * s * s))


def test_criterion_05_cross_term_refinement():
    spec = GaussianSpec(k0=1.0, s01=2.0, problem="bansalBasar")
    cf = gamma_star(spec)
    errors = []
    for n in GRIDS:
        inst = build_instance(GaussianSpec(k0=1.0, s01=2.0, grid_points=n, problem="bansalBasar"))
        sol = solve_relaxation_bansal(inst)
        errors.append(abs(sol.value - cf.opt_b) / abs(cf.opt_b))
    seed_code = linear_code_on_grid(inst, cf.gamma0_signed, cf.gamma1_signed)
    heur = alternating_best_response(inst, init=det_code_to_random(seed_code, inst), restarts=3)
    slope = _encoder_slope(inst, heur.best_code)
    monotone = all(e2 <= e1 for e1, e2 in zip(errors, errors[1:]))
    ok = (cf.root_residual <= 1e-12 and monotone and errors[-1] <= 0.05
          and np.sign(slope) == -np.sign(spec.s01))
    record(5, ok, f"root {cf.gamma0_star:.10f} (residual {cf.root_residual:.1e}), rel. errors "
                  f"{', '.join(f'{e:.2e}' for e in errors)} (non-increasing: {monotone}), "
                  f"heuristic encoder slope {slope:.4f}")
    assert ok


def test_criterion_06_dpi_equality_at_optimum():
    inst = build_instance(GaussianSpec(k0=1.0, s01=2.0, grid_points=65, problem="bansalBasar"))
    sol = solve_relaxation_bansal(inst)
    f = neg_log()
    gap = input_information(f, inst.channel, sol.pair.b) - kernel_information(f, inst.p_s, sol.pair.a)
    ok = sol.lam > 10 * 1e-8 and abs(gap) <= 1e-2
    record(6, ok, f"lambda {sol.lam:.4f}, I(X;Y) - I(S;Shat) = {gap:.2e}")
    assert ok


def test_criterion_07_f_dpi_and_f_sum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_dpi, worst_sum = np.inf, np.inf
    gens = [get_generator(k) for k in KINDS]
    for _ in range(1000):
        ns, nx, ny, nt = rng.integers(2, 5, size=4)
        q = (rng.dirichlet(np.ones(ns))[:, None, None, None]
             * rng.dirichlet(np.ones(nx), ns)[:, :, None, None]
             * rng.dirichlet(np.ones(ny), nx)[None, :, :, None]
             * rng.dirichlet(np.ones(nt), ny)[None, None, :, :])
        for f in gens:
            worst_dpi = min(worst_dpi, dpi_slack(f, q).slack)
    for i in range(1000):
        f = gens[i % 4]
        n = rng.integers(1, 10)
        a, b = rng.uniform(0.01, 3, size=(2, n))
        gap = np.sum(b * f(a / b)) - b.sum() * f(np.array([a.sum() / b.sum()]))[0]
        worst_sum = min(worst_sum, gap)
    secs = time.perf_counter() - t0
    ok = worst_dpi >= -1e-10 and worst_sum >= -1e-10 and secs < 30
    record(7, ok, f"min DPI slack {worst_dpi:.2e}, min f-sum gap {worst_sum:.2e}, {secs:.1f} s")
    assert ok


def _central(fun, x, h=1e-6):
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, dn = x.copy(), x.copy()
        up[idx] += h
        dn[idx] -= h
        out[idx] = (fun(up) - fun(dn)) / (2 * h)
    return out


def _interior_point(rng, f):
    """Random interior point; for total variation, one away from the kink."""
    while True:
        p_s = rng.dirichlet(np.ones(3))
        a = rng.dirichlet(np.ones(3), 3) * 0.8 + 0.2 / 3
        w = rng.dirichlet(np.ones(3), 3) * 0.8 + 0.2 / 3
        b = rng.dirichlet(np.ones(3)) * 0.8 + 0.2 / 3
        if f.smooth:
            return p_s, a, w, b
        if (np.min(np.abs((p_s @ a)[None, :] / a - 1)) > 1e-3
                and np.min(np.abs((b @ w)[None, :] / w - 1)) > 1e-3):
            return p_s, a, w, b


def test_criterion_08_gradients():
    rng = np.random.default_rng(8)
    worst_fd, worst_closed = 0.0, 0.0
    for kind in KINDS:
        f = get_generator(kind)
        for _ in range(100):
            p_s, a, w, b = _interior_point(rng, f)
            g = f_mi_gradients(f, p_s, a, w, b)
            fd_a = _central(lambda x: kernel_information(f, p_s, x), a)
            fd_b = _central(lambda x: input_information(f, w, x), b)
            worst_fd = max(worst_fd,
                           np.max(np.abs(g.dA - fd_a)) / max(1.0, np.max(np.abs(fd_a))),
                           np.max(np.abs(g.dB - fd_b)) / max(1.0, np.max(np.abs(fd_b))))
            if kind == "negLog":
                q, r = p_s @ a, b @ w
                kl = np.array([kl_divergence(w[x], r) for x in range(3)])
                worst_closed = max(worst_closed,
                                   np.max(np.abs(g.dA - p_s[:, None] * np.log(a / q[None, :]))),
                                   np.max(np.abs(g.dB - (kl - 1))))
    ok = worst_fd <= 1e-4 and worst_closed <= 1e-10
    record(8, ok, f"max relative FD error {worst_fd:.2e}, max closed-form error {worst_closed:.2e}")
    assert ok


def test_criterion_09_inverse_optimality():
    rng = np.random.default_rng(9)
    passed = 0
    for kind in ("negLog", "totalVariation"):
        f = get_generator(kind)
        for _ in range(50):
            base = Instance(rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2), 2) * 0.9 + 0.05,
                            cost=np.zeros((2, 2, 2, 2)))
            code = lossless_code(base, rng)
            spec = SynthesisSpec(f, float(rng.uniform(0.1, 3)), rng.normal(size=2), float(rng.normal()))
            delta, rho = synthesize_costs(base, candidate_pair(base, code), spec)
            passed += verify_inverse_optimality(instance_with_costs(base, delta, rho), code).optimal
    base = Instance(np.array([0.4, 0.6]), np.array([[0.8, 0.2], [0.3, 0.7]]), cost=np.zeros((2, 2, 2, 2)))
    pair = candidate_pair(base, DetCode([0, 1], [0, 1]))
    delta, rho = synthesize_costs(base, pair, SynthesisSpec(neg_log(), 0.0, np.array([0.3, -0.2]), 0.5))
    table = enumerate_optimal(instance_with_costs(base, delta, rho), keep_table=True).table
    spread = float(np.ptp([v for _, v in table]))
    ok = passed == 100 and spread <= 1e-12
    record(9, ok, f"{passed}/100 synthesized instances verified, lambda = 0 spread {spread:.1e}")
    assert ok


def test_criterion_10_nonconvexity_witness():
    worst, applicable = np.inf, 0
    for seed in range(100):
        p_s, channel, cost = random_instance_arrays(2000 + seed)
        wit = nonconvexity_witness(Instance(p_s, channel, cost=cost))
        if wit.status == "not_applicable":
            continue
        applicable += 1
        worst = min(worst, wit.residual)
    ok = applicable > 0 and worst >= 1e-6
    record(10, ok, f"min midpoint residual {worst:.3e} over {applicable} applicable instances")
    assert ok


def test_criterion_11_separability():
    rng = np.random.default_rng(11)
    worst_sep = 0.0
    for _ in range(100):
        ns, nx, ny, nt = rng.integers(2, 5, size=4)
        inst = Instance(rng.dirichlet(np.ones(ns)), rng.dirichlet(np.ones(ny), nx),
                        cost=np.broadcast_to(rng.normal(size=(ns, 1, 1, nt)) + rng.normal(size=(1, nx, 1, 1)),
                                             (ns, nx, ny, nt)).copy())
        worst_sep = max(worst_sep, separability_projection(inst).residual)
    wits = build_instance(GaussianSpec(grid_points=9, problem="witsenhausen"))
    wits_ratio = separability_projection(wits).residual / np.linalg.norm(wits.cost_tensor)
    s = np.linspace(-1, 1, 3)
    x = np.linspace(-2, 2, 4)
    pure = np.broadcast_to(2.0 * s[:, None, None, None] * x[None, :, None, None], (3, 4, 2, 3)).copy()
    cross = Instance(np.full(3, 1 / 3), np.full((4, 2), 0.5), cost=pure)
    cross_ratio = separability_projection(cross).residual / np.linalg.norm(pure)
    ok = worst_sep <= 1e-10 and wits_ratio > 1e-6 and cross_ratio > 1e-6
    record(11, ok, f"max separable residual {worst_sep:.1e}, Witsenhausen ratio {wits_ratio:.3f}, "
                   f"cross-term ratio {cross_ratio:.3f}")
    assert ok


def test_criterion_12_witsenhausen_bound():
    inst = build_instance(GaussianSpec(grid_points=9, problem="witsenhausen"))
    rep = bound_report(inst)
    ok = rep.lb <= rep.ub and rep.multiplier_identity_residual <= 1e-4 * max(1.0, abs(rep.lb))
    record(12, ok, f"lb {rep.lb:.6f} <= ub {rep.ub:.6f} ({'heuristic' if rep.ub_heuristic else 'exact'}), "
                   f"identity residual {rep.multiplier_identity_residual:.1e}, relax status {rep.relax_status}")
    assert ok
