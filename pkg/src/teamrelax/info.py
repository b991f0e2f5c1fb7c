"""Divergences, (f-)mutual information, their gradients and Blahut-Arimoto solvers.

All information quantities are in nats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp, rel_entr

INF = np.inf


@dataclass(frozen=True)
class FGenerator:
    """Convex ``f`` with ``f(1) = 0`` and the limits needed at the simplex boundary.

    ``limit_at_zero`` is ``f(0+)``, ``slope_inf`` is ``lim f(t)/t`` as ``t -> inf``
    (also the limit of ``f'``), and ``zero_mass_slope`` is ``lim (f(t) - t f'(t))``.
    """

    kind: str
    eval: Callable
    deriv: Callable
    limit_at_zero: float
    slope_inf: float
    zero_mass_slope: float
    saddle_certified: bool = False
    smooth: bool = True

    def __call__(self, t):
        return self.eval(t)


def _neglog_eval(t):
    with np.errstate(divide="ignore"):
        return -np.log(t)


def neg_log():
    """f(t) = -ln t; the matching f-mutual information is Shannon's."""
    return FGenerator("negLog", _neglog_eval, lambda t: -1.0 / np.asarray(t, dtype=float),
                      INF, 0.0, -INF, saddle_certified=True)


def total_variation():
    return FGenerator("totalVariation", lambda t: 0.5 * np.abs(np.asarray(t, dtype=float) - 1.0),
                      lambda t: 0.5 * np.sign(np.asarray(t, dtype=float) - 1.0),
                      0.5, 0.5, -0.5, smooth=False)


def squared_hellinger():
    return FGenerator("squaredHellinger", lambda t: (np.sqrt(t) - 1.0) ** 2,
                      lambda t: 1.0 - 1.0 / np.sqrt(t), 1.0, 1.0, -INF)


def chi_square_like():
    """f(t) = 1/t - 1."""
    return FGenerator("chiSquareLike", lambda t: 1.0 / np.asarray(t, dtype=float) - 1.0,
                      lambda t: -1.0 / np.asarray(t, dtype=float) ** 2, INF, 0.0, -1.0)


def affine(c=1.0, d=None):
    """f(t) = c - d t; ``f(1) = 0`` forces ``d = c``."""
    d = c if d is None else d
    if abs(c - d) > 1e-12:
        raise ValueError("affine generator needs c == d so that f(1) = 0")
    return FGenerator("affine", lambda t: c - d * np.asarray(t, dtype=float),
                      lambda t: np.full_like(np.asarray(t, dtype=float), -d),
                      c, -d, c, saddle_certified=True)


def custom(kind, eval, deriv, limit_at_zero, slope_inf, zero_mass_slope, smooth=True):
    """Register a code-defined generator. Never saddle-certified up front."""
    return FGenerator(kind, eval, deriv, limit_at_zero, slope_inf, zero_mass_slope,
                      saddle_certified=False, smooth=smooth)


_FACTORIES = {
    "negLog": neg_log,
    "totalVariation": total_variation,
    "squaredHellinger": squared_hellinger,
    "chiSquareLike": chi_square_like,
    "affine": affine,
}
SHIPPED_KINDS = ("negLog", "totalVariation", "squaredHellinger", "chiSquareLike")


def get_generator(name):
    """Look up a shipped generator by kind name."""
    if isinstance(name, FGenerator):
        return name
    try:
        return _FACTORIES[name]()
    except KeyError:
        raise ValueError(f"unknown f kind {name!r}; known: {sorted(_FACTORIES)}") from None


# --------------------------------------------------------------------------
# plain and f-divergences

def kl_divergence(p, q):
    """D(p||q) in nats; ``inf`` when p is not absolutely continuous w.r.t. q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same shape")
    return float(np.sum(rel_entr(p, q)))


def entropy(p):
    p = np.asarray(p, dtype=float)
    return float(-np.sum(np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)))


def mutual_information(joint):
    joint = np.asarray(joint, dtype=float)
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    live = px > 0
    # row-wise divergences: px * py can underflow where the joint does not
    cond = joint[live] / px[live, None]
    return float(max(px[live] @ np.sum(rel_entr(cond, py[None, :]), axis=1), 0.0))


def _perspective_sum(f: FGenerator, num, den, weight=None):
    """Sum of weight * den * f(num / den) with the boundary conventions of ``f``.

    ``weight`` (nonnegative, broadcast against num and den) lets callers pass
    row masses separately, so the ratio is formed before any product can
    underflow.
    """
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    num, den = np.broadcast_arrays(num, den)
    w = np.ones(num.shape) if weight is None else np.broadcast_to(weight, num.shape)
    pos = w > 0
    both = (num > 0) & (den > 0) & pos
    total = 0.0
    if np.any(both):
        total += float(np.sum(w[both] * den[both] * f.eval(num[both] / den[both])))
    only_den = (num <= 0) & (den > 0) & pos
    if np.any(only_den):
        mass = float(np.sum(w[only_den] * den[only_den]))
        total += mass * f.limit_at_zero if mass > 0 else 0.0
    only_num = (num > 0) & (den <= 0) & pos
    if np.any(only_num):
        mass = float(np.sum(w[only_num] * num[only_num]))
        total += mass * f.slope_inf if mass > 0 else 0.0
    return total


def f_divergence(f: FGenerator, p, q):
    """D_f(p||q) = sum q f(p/q)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same shape")
    return _perspective_sum(f, p, q)


def f_mutual_information(f: FGenerator, joint):
    """sum p(x,y) f(p(x) p(y) / p(x,y))."""
    joint = np.asarray(joint, dtype=float)
    px, py = joint.sum(axis=1), joint.sum(axis=0)
    live = px > 0
    cond = joint[live] / px[live, None]
    return _perspective_sum(f, py[None, :], cond, px[live, None])


@dataclass(frozen=True)
class Slack:
    i_xy: float
    i_sshat: float
    slack: float


def dpi_slack(f: FGenerator, q) -> Slack:
    """I_f(X;Y) - I_f(S;Shat) of a joint indexed (s, x, y, shat)."""
    q = np.asarray(q, dtype=float)
    ixy = f_mutual_information(f, q.sum(axis=(0, 3)))
    iss = f_mutual_information(f, q.sum(axis=(1, 2)))
    return Slack(ixy, iss, ixy - iss)


def kernel_information(f: FGenerator, p_s, a):
    """sum_s,shat P_S(s) a(shat|s) f(q(shat) / a(shat|s)) with q = P_S a.

    Agrees with I_f of the joint P_S a when a is row-stochastic; off the
    simplex it is the extension whose partial derivatives ``grad_a`` returns.
    """
    p_s = np.asarray(p_s, dtype=float)
    a = np.asarray(a, dtype=float)
    q = np.broadcast_to(p_s @ a, a.shape)
    return _perspective_sum(f, q, a, p_s[:, None])


def input_information(f: FGenerator, channel, b):
    """I_f of the joint b(x) P(y|x)."""
    return f_mutual_information(f, np.asarray(b, dtype=float)[:, None] * channel)


def endtoend_information(f: FGenerator, p_s, a, channel, b):
    """(I_f(a P_S), I_f(P_{Y|X} b)) for an end-to-end pair."""
    return kernel_information(f, p_s, a), input_information(f, channel, b)


# --------------------------------------------------------------------------
# gradients

@dataclass(frozen=True)
class Gradients:
    dA: np.ndarray
    dB: np.ndarray
    boundary: bool


def _safe_eval(fn, t, mask):
    out = np.zeros_like(t)
    out[mask] = fn(t[mask])
    return out


def grad_a(f: FGenerator, p_s, a):
    """d I_f(a P_S) / d a(shat|s), shape (nS, nShat)."""
    p_s = np.asarray(p_s, dtype=float)
    a = np.asarray(a, dtype=float)
    q = p_s @ a
    pos = (a > 0) & (q[None, :] > 0)
    t = np.where(pos, q[None, :] / np.where(a > 0, a, 1.0), 1.0)
    fp = np.where(pos, _safe_eval(f.deriv, t, pos), f.slope_inf)
    weighted = np.where(p_s[:, None] > 0, p_s[:, None] * fp, 0.0)
    coupling = weighted.sum(axis=0)                              # sum_s' P_S(s') f'(t)
    direct = np.where(pos, _safe_eval(f.eval, t, pos) - t * fp, f.zero_mass_slope)
    grad = p_s[:, None] * (direct + coupling[None, :])
    # columns that carry no mass at all: single-cell limit
    empty = q <= 0
    if np.any(empty):
        with np.errstate(invalid="ignore"):
            fps = np.array([f.eval(np.array([v]))[0] if v > 0 else 0.0 for v in p_s])
        col = p_s * (fps + (1.0 - p_s) * f.slope_inf)
        grad[:, empty] = col[:, None]
    grad[p_s <= 0] = 0.0
    return grad


def grad_b(f: FGenerator, channel, b):
    """d I_f(P_{Y|X} b) / d b(x), shape (nX,)."""
    w = np.asarray(channel, dtype=float)
    b = np.asarray(b, dtype=float)
    r = b @ w
    pos = (w > 0) & (r[None, :] > 0)
    t = np.where(pos, r[None, :] / np.where(w > 0, w, 1.0), 1.0)
    fp = np.where(pos, _safe_eval(f.deriv, t, pos), np.where(w > 0, 0.0, f.slope_inf))
    zero_r = (w > 0) & (r[None, :] <= 0)
    if np.any(zero_r):
        with np.errstate(divide="ignore", invalid="ignore"):
            fp = np.where(zero_r, f.deriv(np.zeros(1))[0], fp)
    with np.errstate(invalid="ignore"):
        inner = np.sum(np.where(b[:, None] > 0, b[:, None] * fp, 0.0), axis=0)
    own = np.where(pos, w * _safe_eval(f.eval, t, pos), 0.0)
    own = np.where(w <= 0, r[None, :] * f.slope_inf, own)
    own = np.where(zero_r, w * f.limit_at_zero, own)
    with np.errstate(invalid="ignore"):
        return np.sum(own + w * inner[None, :], axis=1)


def f_mi_gradients(f: FGenerator, p_s, a, channel, b) -> Gradients:
    """Gradients of I_f(a P_S) in a and of I_f(P_{Y|X} b) in b.

    For non-smooth generators the values are subgradients (``f'(1) = 0`` for
    total variation). ``boundary`` is set when a or b touches zero where the
    derivative is one-sided.
    """
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        da = grad_a(f, p_s, a)
        db = grad_b(f, channel, b)
    p_s = np.asarray(p_s)
    boundary = bool(np.any((np.asarray(a) <= 0) & (p_s[:, None] > 0))
                    or np.any(np.asarray(b) <= 0)
                    or not np.all(np.isfinite(da)) or not np.all(np.isfinite(db)))
    return Gradients(da, db, boundary)


# --------------------------------------------------------------------------
# saddle-property probe

@dataclass(frozen=True)
class ProbeReport:
    passed: bool
    worst_violation: float
    kernel_convex_passed: bool
    kernel_worst_violation: float


def saddle_probe(f: FGenerator, channel, trials=1000, seed=0) -> ProbeReport:
    """Empirical concavity of I_f in the input law and convexity in the kernel.

    Trials alternate between dense and sparse random laws (Dirichlet weights 1
    and 0.3) and use a random mixing weight, since failures tend to sit near
    the boundary of the simplex. Violations are reported as negative numbers.
    """
    rng = np.random.default_rng(seed)
    w = np.asarray(channel, dtype=float)
    nx, ny = w.shape
    worst = INF
    worst_k = INF

    def mi(b, kern):
        return f_mutual_information(f, b[:, None] * kern)

    for i in range(max(int(trials), 1)):
        conc = 1.0 if i % 2 == 0 else 0.3
        t = rng.uniform(0.05, 0.95)
        b1, b2 = rng.dirichlet(np.full(nx, conc), size=2)
        gap = mi(t * b1 + (1 - t) * b2, w) - t * mi(b1, w) - (1 - t) * mi(b2, w)
        worst = min(worst, gap)
        b = rng.dirichlet(np.full(nx, conc))
        k1 = rng.dirichlet(np.full(ny, conc), size=nx)
        k2 = rng.dirichlet(np.full(ny, conc), size=nx)
        gap_k = t * mi(b, k1) + (1 - t) * mi(b, k2) - mi(b, t * k1 + (1 - t) * k2)
        worst_k = min(worst_k, gap_k)
    return ProbeReport(bool(worst >= -1e-9), float(worst),
                       bool(worst_k >= -1e-9), float(worst_k))


# --------------------------------------------------------------------------
# Blahut-Arimoto

@dataclass
class BAResult:
    value: float                 # rate or capacity in nats
    kernel_or_marginal: np.ndarray
    lagrange_slope: float
    iterations: int
    converged: bool
    expected_cost: float = 0.0
    lagrangian: float = 0.0
    lower: float = -INF
    upper: float = INF


MAX_ITER = 100_000
WARM_MIX = 1e-9


def _warm_log(start, n):
    """Log of a warm start, mixed with a little uniform mass so that no
    coordinate is stuck at zero under multiplicative updates."""
    if start is None:
        return np.full(n, -math.log(n))
    p = (1.0 - WARM_MIX) * np.asarray(start, float) / np.sum(start) + WARM_MIX / n
    return np.log(p)


def _lse(x, axis=None):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return out.squeeze(axis) if axis is not None else float(out.reshape(()))


def _simplex_newton(fgh, p0, tol_abs, max_steps=200):
    """Minimize a smooth convex f over the probability simplex by active-set Newton.

    Newton steps on the face spanned by the current support, dropping
    coordinates that reach zero and adding the coordinate with the smallest
    gradient once the face is solved. Stops when the Frank-Wolfe gap
    p.g - min(g), an upper bound on the suboptimality, is at most ``tol_abs``.
    ``fgh(p)`` returns (value, gradient, Hessian).
    """
    p = np.asarray(p0, float)
    p = p / p.sum()
    support = p > 1e-9 * p.max()
    p = np.where(support, p, 0.0)
    p /= p.sum()
    f, g, h = fgh(p)
    steps = 0
    while steps < max_steps:
        steps += 1
        if float(p @ g - g.min()) <= tol_abs:
            break
        idx = np.nonzero(support)[0]
        hs = h[np.ix_(idx, idx)]
        reg = 1e-14 * (float(np.trace(hs)) / len(idx) + 1.0)
        kkt = np.zeros((len(idx) + 1, len(idx) + 1))
        kkt[:-1, :-1] = hs + reg * np.eye(len(idx))
        kkt[:-1, -1] = kkt[-1, :-1] = 1.0
        rhs = np.concatenate([-g[idx], [0.0]])
        try:
            d_s = np.linalg.solve(kkt, rhs)[:-1]
        except np.linalg.LinAlgError:
            d_s = -(g[idx] - g[idx].mean())
        slope = float(g[idx] @ d_s)
        if slope >= 0 or not np.all(np.isfinite(d_s)):
            d_s = -(g[idx] - g[idx].mean())
            slope = float(g[idx] @ d_s)
        spread = float(g[idx].max() - g[idx].min())
        if spread <= 0.5 * tol_abs or -slope <= 1e-30 * max(1.0, abs(f)):
            # the face is solved; enter the most attractive outside coordinate
            outside = np.nonzero(~support)[0]
            if len(outside) == 0:
                break
            k = outside[np.argmin(g[outside])]
            if g[k] >= float(p @ g):
                break
            support[k] = True
            continue
        d = np.zeros_like(p)
        d[idx] = d_s
        neg = d < 0
        t_max = float(np.min(p[neg] / -d[neg])) if np.any(neg) else np.inf
        t = min(1.0, t_max)
        while True:
            trial = np.clip(p + t * d, 0.0, None)
            trial /= trial.sum()
            ft, gt, ht = fgh(trial)
            if ft <= f + 1e-4 * t * slope or t < 1e-14:
                break
            # below rounding the decrease is invisible; judge by the gradient
            tiny = -slope <= 1e-12 * max(1.0, abs(f))
            if tiny and float(gt[idx].max() - gt[idx].min()) < spread:
                break
            t *= 0.5
        if t == t_max:
            support &= trial > 0
            k = int(np.argmin(np.where(neg, p / np.where(neg, -d, 1.0), np.inf)))
            support[k] = False
            trial[k] = 0.0
            trial /= trial.sum()
            ft, gt, ht = fgh(trial)
        p, f, g, h = trial, ft, gt, ht
    return p, steps


def rd_lagrangian(p_s, delta, lam, tol=1e-12, max_iter=MAX_ITER, q0=None, warmup=10):
    """Minimize E[delta] + lam * I(S;Shat) over kernels a(shat|s).

    Runs Blahut-Arimoto (a ∝ q exp(-delta/lam), q = P_S a, in the log
    domain) for at most ``warmup`` sweeps and then, if the duality gap is still
    above ``tol * max(1, |value|)``, minimizes the equivalent convex function
    -lam * sum_s P_S(s) log sum_shat q(shat) exp(-delta(s, shat)/lam) of the
    output marginal q by Newton steps. ``lower`` and ``upper`` bracket the
    minimum.
    """
    p_s = np.asarray(p_s, dtype=float)
    delta = np.asarray(delta, dtype=float)
    ns, nshat = delta.shape
    sup = p_s > 0
    ps = p_s[sup]
    dl = delta[sup]
    ls = -dl / lam
    log_q = _warm_log(q0, nshat)
    log_ps = np.log(ps)
    converged = False
    it = 0
    gap = INF

    def bounds(log_q):
        t = log_q[None, :] + ls
        log_z = _lse(t, axis=1)
        log_a = t - log_z[:, None]
        a = np.exp(log_a)
        upper = float(np.sum(ps[:, None] * a * dl) + lam * np.sum(ps[:, None] * a * (log_a - log_q[None, :])))
        log_c = _lse(log_ps[:, None] + ls - log_z[:, None], axis=0)
        lower = float(-lam * np.dot(ps, log_z) - lam * np.max(log_c))
        return log_a, upper, lower

    for it in range(1, min(max_iter, warmup) + 1):
        log_a, upper, lower = bounds(log_q)
        gap = upper - lower
        if gap <= tol * max(1.0, abs(upper)):
            converged = True
            break
        log_q = _lse(log_ps[:, None] + log_a, axis=0)
        log_q -= _lse(log_q)
    if not converged and max_iter > warmup:
        shift = ls.max(axis=1)
        k = np.exp(ls - shift[:, None])

        def fgh(q):
            # z^2 appears in the Hessian; keep it representable
            z = np.clip(k @ q, 1e-150, None)
            w = ps / z
            return (-lam * float(ps @ np.log(z)), -lam * (w @ k),
                    lam * (k.T * (w / z)) @ k)

        q0_ = np.exp(log_q)
        _, up0, lo0 = bounds(log_q)
        q, steps = _simplex_newton(fgh, q0_, 0.5 * tol * max(1.0, abs(up0)))
        it += steps
        log_q_n = np.log(np.clip(q, 1e-300, None))
        _, up_n, lo_n = bounds(log_q_n)
        if up_n - lo_n < gap:
            log_q, gap = log_q_n, up_n - lo_n
        converged = gap <= tol * max(1.0, abs(up_n))
    log_a, upper, lower = bounds(log_q)
    a_full = np.full((ns, nshat), 1.0 / nshat)
    a_full[sup] = np.exp(log_a)
    joint = p_s[:, None] * a_full
    rate = mutual_information(joint)
    dist = float(np.sum(joint * delta))
    return BAResult(rate, a_full, lam, it, converged, dist, dist + lam * rate, lower, upper)


def _zero_rate_point(p_s, delta):
    shat = int(np.argmin(p_s @ delta))
    a = np.zeros(delta.shape)
    a[:, shat] = 1.0
    return a, float(p_s @ delta[:, shat])


def blahut_arimoto_rd(p_s, delta, slope=None, target=None, tol=1e-12, max_iter=MAX_ITER):
    """Rate-distortion point at a Lagrange slope, or R(D) at a target distortion.

    ``slope`` is the weight on I in E[delta] + slope * I. With ``target`` the
    slope is bisected (geometrically) until |E[delta] - D| <= 1e-8.
    """
    p_s = np.asarray(p_s, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if (slope is None) == (target is None):
        raise ValueError("give exactly one of slope and target")
    if slope is not None:
        if slope <= 0:
            raise ValueError("slope must be positive")
        return rd_lagrangian(p_s, delta, slope, tol, max_iter)
    a0, d_max = _zero_rate_point(p_s, delta)
    if target >= d_max - 1e-12:
        return BAResult(0.0, a0, INF, 0, True, d_max, d_max, d_max, d_max)
    d_min = float(p_s @ delta.min(axis=1))
    if target < d_min - 1e-12:
        raise ValueError(f"distortion {target} is below the minimum achievable {d_min}")
    spread = float(delta.max() - delta.min()) or 1.0
    lo, hi = 1e-6 * spread, spread
    res = rd_lagrangian(p_s, delta, hi, tol, max_iter)
    while res.expected_cost < target and hi < 1e12:
        hi *= 2.0
        res = rd_lagrangian(p_s, delta, hi, tol, max_iter)
    if target <= d_min + 1e-12:
        return rd_lagrangian(p_s, delta, lo, tol, max_iter)
    best = res
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        res = rd_lagrangian(p_s, delta, mid, tol, max_iter, q0=best.kernel_or_marginal.T @ p_s)
        if abs(res.expected_cost - target) < abs(best.expected_cost - target):
            best = res
        if abs(res.expected_cost - target) <= 1e-8:
            break
        if res.expected_cost > target:
            hi = mid
        else:
            lo = mid
    return best


def _divergences(w, log_w, b):
    """D(W_x || b W) for every x, with 0 log 0 = 0 and inf on support mismatch."""
    r = b @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        log_r = np.log(r)
        terms = np.where(w > 0, w * (log_w - log_r[None, :]), 0.0)
    return terms.sum(axis=1)


def cc_lagrangian(channel, rho, inv_slope, tol=1e-12, max_iter=MAX_ITER, b0=None, warmup=10):
    """Maximize I(X;Y) - inv_slope * E[rho] over input laws b.

    Arimoto updates b ∝ b exp(D(W_x||r) - inv_slope rho(x)) in the log domain
    for at most ``warmup`` sweeps, then Newton steps on the concave objective
    if the gap between max_x(...) and log sum b exp(...) is still above tol.
    """
    w = np.asarray(channel, dtype=float)
    rho = np.asarray(rho, dtype=float)
    nx = w.shape[0]
    with np.errstate(divide="ignore"):
        log_w = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), -INF)
    log_b = _warm_log(b0, nx)
    tilt = -inv_slope * rho
    converged = False
    it = 0

    def bounds(log_b):
        score = _divergences(w, log_w, np.exp(log_b)) + tilt
        new = log_b + score
        return score, float(np.max(score)), _lse(new), new

    gap = INF
    for it in range(1, min(max_iter, warmup) + 1):
        score, upper, lower, new = bounds(log_b)
        gap = upper - lower
        if gap <= tol * max(1.0, abs(upper)):
            converged = True
            break
        log_b = new - lower
    if not converged and max_iter > warmup:
        live = w.sum(axis=0) > 0
        wl = w[:, live]
        neg_h = np.where(wl > 0, wl * np.log(np.where(wl > 0, wl, 1.0)), 0.0).sum(axis=1)

        def fgh(b):
            r = np.clip(b @ wl, 1e-300, None)
            lr = np.log(r)
            d = neg_h - wl @ lr
            val = -(float(b @ d) + float(b @ tilt))
            return val, -(d + tilt) + 1.0, (wl / r[None, :]) @ wl.T

        _, up0, lo0, _ = bounds(log_b)
        b, steps = _simplex_newton(fgh, np.exp(log_b), 0.5 * tol * max(1.0, abs(up0)))
        it += steps
        log_b_n = np.log(np.clip(b, 1e-300, None))
        _, up_n, lo_n, _ = bounds(log_b_n)
        if up_n - lo_n < gap:
            log_b, gap = log_b_n, up_n - lo_n
        converged = gap <= tol * max(1.0, abs(up_n))
    score, upper, lower, _ = bounds(log_b)
    b = np.exp(log_b)
    b /= b.sum()
    cap = mutual_information(b[:, None] * w)
    cost = float(b @ rho)
    return BAResult(cap, b, inv_slope, it, converged, cost, cap - inv_slope * cost, lower, upper)


def blahut_arimoto_cc(channel, rho=None, slope=None, target=None, tol=1e-12, max_iter=MAX_ITER):
    """Capacity-cost point.

    ``slope`` is the Lagrange weight on cost (``I - slope * E[rho]``); with
    ``target`` the weight is bisected until |E[rho] - P| <= 1e-8; with neither,
    the unconstrained capacity is returned.
    """
    w = np.asarray(channel, dtype=float)
    rho = np.zeros(w.shape[0]) if rho is None else np.asarray(rho, dtype=float)
    if slope is not None and target is not None:
        raise ValueError("give at most one of slope and target")
    if slope is not None:
        if slope < 0:
            raise ValueError("slope must be nonnegative")
        return cc_lagrangian(w, rho, slope, tol, max_iter)
    free = cc_lagrangian(w, rho, 0.0, tol, max_iter)
    if target is None or free.expected_cost <= target + 1e-12:
        return free
    if target < rho.min() - 1e-12:
        raise ValueError(f"cost {target} is below the minimum input cost {rho.min()}")
    lo, hi = 0.0, 1.0
    res = cc_lagrangian(w, rho, hi, tol, max_iter)
    while res.expected_cost > target and hi < 1e12:
        lo = hi
        hi *= 2.0
        res = cc_lagrangian(w, rho, hi, tol, max_iter)
    best = res
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        res = cc_lagrangian(w, rho, mid, tol, max_iter, b0=best.kernel_or_marginal)
        if abs(res.expected_cost - target) < abs(best.expected_cost - target):
            best = res
        if abs(res.expected_cost - target) <= 1e-8:
            break
        if res.expected_cost > target:
            lo = mid
        else:
            hi = mid
    return best
