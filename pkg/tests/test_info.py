import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import dirichlet, seeds
from oracles import binary_entropy
from teamrelax.info import (SHIPPED_KINDS, affine, blahut_arimoto_cc, blahut_arimoto_rd, custom,
                            dpi_slack, entropy, f_divergence, f_mi_gradients, f_mutual_information,
                            get_generator, input_information, kernel_information, kl_divergence,
                            mutual_information, neg_log, saddle_probe, total_variation)

KINDS = st.sampled_from(SHIPPED_KINDS)
BSC = np.array([[0.9, 0.1], [0.1, 0.9]])
HAMMING = 1.0 - np.eye(2)
LN2_MINUS_HB = np.log(2) - binary_entropy(0.1)


@pytest.mark.parametrize("kind", SHIPPED_KINDS)
def test_generator_basics(kind, rng):
    f = get_generator(kind)
    assert abs(f(np.array([1.0]))[0]) <= 1e-12
    t = np.sort(rng.uniform(0.01, 20, size=(1000, 3)), axis=1)
    w = (t[:, 2] - t[:, 1]) / (t[:, 2] - t[:, 0])
    assert np.all(f(t[:, 1]) <= w * f(t[:, 0]) + (1 - w) * f(t[:, 2]) + 1e-10)
    pts = rng.uniform(0.1, 10, size=200)
    if kind == "totalVariation":
        pts = pts[np.abs(pts - 1) > 1e-3]
    h = 1e-6
    fd = (f(pts + h) - f(pts - h)) / (2 * h)
    assert np.all(np.abs(fd - f.deriv(pts)) <= 1e-6 * np.maximum(1, np.abs(fd)))


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        get_generator("renyi")


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    assert kl_divergence([1, 0], [0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-15)
    assert kl_divergence([0.5, 0.5], [1, 0]) == np.inf


def test_mutual_information_examples():
    assert mutual_information(np.outer([0.2, 0.8], [0.6, 0.4])) == pytest.approx(0, abs=1e-15)
    assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(np.log(2), abs=1e-15)
    assert mutual_information(np.array([[0.4, 0.1], [0.1, 0.4]])) == pytest.approx(0.192745, abs=1e-6)


def test_f_divergence_examples():
    assert f_divergence(total_variation(), [0.8, 0.2], [0.5, 0.5]) == pytest.approx(0.3, abs=1e-15)
    assert f_mutual_information(total_variation(), np.diag([0.5, 0.5])) == pytest.approx(0.5, abs=1e-15)
    assert f_mutual_information(neg_log(), np.array([[0.4, 0.1], [0.1, 0.4]])) == pytest.approx(
        0.192745, abs=1e-6)


def test_f_divergence_boundary_conventions():
    # P > 0 where Q = 0 contributes P * lim f(t)/t
    assert f_divergence(total_variation(), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0)
    assert f_divergence(get_generator("squaredHellinger"), [1.0, 0.0], [0.0, 1.0]) == pytest.approx(2.0)


@given(seeds(), st.integers(2, 6))
def test_neglog_divergence_swaps_kl(rng, n):
    p, q = dirichlet(rng, n, 2)
    assert f_divergence(neg_log(), p, q) == pytest.approx(kl_divergence(q, p), abs=1e-12)


@given(seeds(), KINDS, st.integers(2, 5))
def test_f_divergence_nonnegative_and_zero_on_diagonal(rng, kind, n):
    f = get_generator(kind)
    p, q = dirichlet(rng, n, 2)
    assert f_divergence(f, p, q) >= -1e-12
    assert abs(f_divergence(f, p, p)) <= 1e-12


@given(seeds(), st.integers(2, 5), st.integers(2, 5))
def test_neglog_information_is_shannon(rng, m, n):
    joint = rng.dirichlet(np.ones(m * n)).reshape(m, n)
    assert abs(f_mutual_information(neg_log(), joint) - mutual_information(joint)) <= 1e-10


@given(seeds(), KINDS)
def test_f_dpi_along_random_chain(rng, kind):
    ns, nx, ny, nt = rng.integers(2, 4, size=4)
    q = (dirichlet(rng, ns)[:, None, None, None] * dirichlet(rng, nx, ns)[:, :, None, None]
         * dirichlet(rng, ny, nx)[None, :, :, None] * dirichlet(rng, nt, ny)[None, None, :, :])
    assert dpi_slack(get_generator(kind), q).slack >= -1e-10


def test_dpi_slack_examples():
    f = neg_log()
    q = np.zeros((2, 2, 2, 2))
    for s in range(2):
        q[s, s, s, s] = 0.5
    assert abs(dpi_slack(f, q).slack) <= 1e-15
    const = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for y in range(2):
            const[s, 0, y, y] = 0.5 * BSC[0, y]
    sl = dpi_slack(f, const)
    assert abs(sl.i_xy) <= 1e-15 and abs(sl.i_sshat) <= 1e-15


@given(seeds(), KINDS, st.integers(1, 8))
def test_f_sum_inequality(rng, kind, n):
    f = get_generator(kind)
    a = rng.uniform(0.01, 3, size=n)
    b = rng.uniform(0.01, 3, size=n)
    assert np.sum(b * f(a / b)) >= b.sum() * f(np.array([a.sum() / b.sum()]))[0] - 1e-10


@given(seeds(), KINDS, st.integers(2, 5))
def test_f_divergence_jointly_convex(rng, kind, n):
    f = get_generator(kind)
    p1, q1, p2, q2 = dirichlet(rng, n, 4)
    mid = f_divergence(f, (p1 + p2) / 2, (q1 + q2) / 2)
    assert mid <= 0.5 * f_divergence(f, p1, q1) + 0.5 * f_divergence(f, p2, q2) + 1e-10


def _central_differences(fun, x, h=1e-5):
    out = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        up, dn = x.copy(), x.copy()
        up[idx] += h
        dn[idx] -= h
        out[idx] = (fun(up) - fun(dn)) / (2 * h)
    return out


def _away_from_kink(p_s, a, w, b):
    t_a = (p_s @ a)[None, :] / a
    t_b = (b @ w)[None, :] / w
    return np.min(np.abs(t_a - 1)) > 1e-3 and np.min(np.abs(t_b - 1)) > 1e-3


@given(seeds(), KINDS)
def test_gradients_match_finite_differences(rng, kind):
    f = get_generator(kind)
    p_s = dirichlet(rng, 3)
    a = rng.uniform(0.2, 1, size=(3, 3))
    a /= a.sum(axis=1, keepdims=True)
    w = dirichlet(rng, 3, 3) * 0.8 + 0.2 / 3
    b = dirichlet(rng, 3) * 0.8 + 0.2 / 3
    if f.kind == "totalVariation" and not _away_from_kink(p_s, a, w, b):
        return
    g = f_mi_gradients(f, p_s, a, w, b)
    fd_a = _central_differences(lambda x: kernel_information(f, p_s, x), a)
    fd_b = _central_differences(lambda x: input_information(f, w, x), b)
    assert np.max(np.abs(g.dA - fd_a)) <= 1e-4 * max(1, np.max(np.abs(fd_a)))
    assert np.max(np.abs(g.dB - fd_b)) <= 1e-4 * max(1, np.max(np.abs(fd_b)))
    assert not g.boundary


@given(seeds())
def test_neglog_gradients_closed_form(rng):
    p_s = dirichlet(rng, 3)
    a = dirichlet(rng, 4, 3)
    w = dirichlet(rng, 3, 2)
    b = dirichlet(rng, 2)
    g = f_mi_gradients(neg_log(), p_s, a, w, b)
    q = p_s @ a
    r = b @ w
    assert np.max(np.abs(g.dA - p_s[:, None] * np.log(a / q[None, :]))) <= 1e-10
    kl = np.array([kl_divergence(w[x], r) for x in range(2)])
    assert np.max(np.abs(g.dB - (kl - 1))) <= 1e-10


def test_gradient_examples():
    p_s = np.array([0.3, 0.7])
    a = np.tile([0.2, 0.5, 0.3], (2, 1))
    g = f_mi_gradients(neg_log(), p_s, a, BSC, np.array([0.5, 0.5]))
    assert np.max(np.abs(g.dA)) <= 1e-15
    assert g.dB[0] == pytest.approx(g.dB[1], abs=1e-15)


def test_gradients_flag_boundary():
    g = f_mi_gradients(neg_log(), np.array([0.5, 0.5]), np.eye(2), BSC, np.array([0.5, 0.5]))
    assert g.boundary


def test_saddle_probe_certified_kinds():
    assert saddle_probe(neg_log(), BSC, trials=1000).passed
    assert saddle_probe(affine(2.0), BSC, trials=200).passed


def test_saddle_probe_runs_on_custom_generator():
    f = custom("square", lambda t: (np.asarray(t) - 1) ** 2,
               lambda t: 2 * (np.asarray(t) - 1), 1.0, np.inf, -np.inf)
    rep = saddle_probe(f, BSC, trials=50)
    assert np.isfinite(rep.worst_violation)
    assert not f.saddle_certified


def test_blahut_arimoto_closed_forms():
    cap = blahut_arimoto_cc(BSC)
    assert cap.value == pytest.approx(LN2_MINUS_HB, abs=1e-5)
    assert np.allclose(cap.kernel_or_marginal, [0.5, 0.5], atol=1e-6)
    p = np.array([0.5, 0.5])
    assert blahut_arimoto_rd(p, HAMMING, target=0.1).value == pytest.approx(LN2_MINUS_HB, abs=1e-5)
    assert blahut_arimoto_rd(p, HAMMING, target=0.5).value == pytest.approx(0.0, abs=1e-8)
    assert blahut_arimoto_rd(p, HAMMING, target=0.0).value == pytest.approx(np.log(2), abs=1e-6)
    assert blahut_arimoto_cc(np.eye(2)).value == pytest.approx(np.log(2), abs=1e-9)


def test_blahut_arimoto_slope_mode_kernel():
    # a(shat|s) proportional to q(shat) exp(-delta/lam) with uniform q at the symmetric point
    res = blahut_arimoto_rd(np.array([0.5, 0.5]), HAMMING, slope=0.5)
    e = np.exp(-1 / 0.5)
    assert res.kernel_or_marginal[0, 1] == pytest.approx(e / (1 + e), abs=1e-9)
    assert res.converged


@given(seeds(), st.floats(0.05, 0.6), st.floats(0.05, 0.6))
def test_rate_distortion_non_increasing(rng, d1, d2):
    p = dirichlet(rng, 3)
    delta = rng.random((3, 3))
    np.fill_diagonal(delta, 0.0)
    lo, hi = sorted((d1, d2))
    dmax = float(np.min(p @ delta))
    lo, hi = min(lo, dmax), min(hi, dmax)
    r_lo = blahut_arimoto_rd(p, delta, target=lo).value
    r_hi = blahut_arimoto_rd(p, delta, target=hi).value
    assert r_lo >= r_hi - 1e-8


@given(seeds(), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_capacity_cost_non_decreasing(rng, p1, p2):
    w = dirichlet(rng, 3, 3)
    rho = np.array([0.0, 0.5, 1.0])
    lo, hi = sorted((p1, p2))
    assert blahut_arimoto_cc(w, rho, target=lo).value <= blahut_arimoto_cc(w, rho, target=hi).value + 1e-8


def test_entropy_uniform():
    assert entropy(np.full(4, 0.25)) == pytest.approx(np.log(4), abs=1e-15)
