"""Convex relaxations with the information-inequality constraint I(S;Shat) <= I(X;Y).

Three solvers share one dual scheme:

* ``solve_relaxation_separable`` for costs delta(s, shat) + rho(x), in the
  end-to-end variables (a, b);
* ``solve_relaxation_bansal`` for the same plus the cross term, replaced by its
  Cauchy-Schwarz lower bound -alpha sqrt(E rho(X));
* ``solve_relaxation_general`` for an arbitrary cost tensor, in the joint Q.

For a fixed multiplier lam on the information constraint, the (a, b) problem
splits into a rate-distortion Lagrangian in a and a capacity-cost Lagrangian in
b. Multipliers follow the sign conventions

    delta = -lam * G_a - mu_a + nu_a,    rho = lam * G_b - mu_b + nu_b

where ``G_a = dI/da / P_S`` (log a/q for Shannon information) and
``G_b = dI/db`` (D(W_x || r) - 1), so that the optimal value of every
relaxation equals -(E[mu_a(S)] + lam + mu_b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog, minimize
from scipy.special import logsumexp

from .core import EndToEndPair, Instance, SeparableCost, expected_cost, product_joint
from .exact import BudgetExceeded, alternating_best_response, enumerate_optimal
from .info import (FGenerator, cc_lagrangian, dpi_slack, grad_a, grad_b, input_information,
                   kernel_information, neg_log, rd_lagrangian, saddle_probe, total_variation)

OPTIMAL, MAX_ITER, INFEASIBLE, DEGENERATE = "optimal", "maxIter", "infeasible", "degenerate"
LP_VARIABLE_CAP = 3_000_000


class UncertifiedGenerator(ValueError):
    """The generator lacks the saddle property needed for a convex relaxation."""


@dataclass
class Multipliers:
    lambda_a: Optional[np.ndarray]
    lambda_b: Optional[np.ndarray]
    lam: float
    lambda_p: Optional[np.ndarray]
    mu_a: np.ndarray
    mu_b: float
    nu_a: np.ndarray
    nu_b: np.ndarray
    nu: Optional[np.ndarray] = None


@dataclass
class KKTReport:
    stationarity_a: float
    stationarity_b: float
    stationarity_q: float
    dpi_complementarity: float
    sign_violations: float
    primal_feasibility: float
    complementarity: float = 0.0

    @property
    def max_residual(self):
        return max(self.stationarity_a, self.stationarity_b, self.stationarity_q,
                   self.dpi_complementarity, self.sign_violations, self.primal_feasibility,
                   self.complementarity)

    def as_dict(self):
        return {"stationarityA": self.stationarity_a, "stationarityB": self.stationarity_b,
                "stationarityQ": self.stationarity_q, "dpiComplementarity": self.dpi_complementarity,
                "signViolations": self.sign_violations, "primalFeasibility": self.primal_feasibility,
                "complementarity": self.complementarity, "maxResidual": self.max_residual}


@dataclass
class RelaxSolution:
    pair: EndToEndPair
    value: float
    mult: Multipliers
    status: str
    kkt: KKTReport
    dual_value: float
    dpi_slack: float
    q: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def lam(self):
        return self.mult.lam

    @property
    def gap(self):
        return self.value - self.dual_value


# --------------------------------------------------------------------------
# helpers

def _check_generator(f: FGenerator, channel):
    if f.saddle_certified:
        return
    report = saddle_probe(f, channel, trials=200, seed=0)
    if not (report.passed and report.kernel_convex_passed):
        raise UncertifiedGenerator(
            f"{f.kind} failed the saddle probe on this channel "
            f"(worst violation {min(report.worst_violation, report.kernel_worst_violation):.3e})")


def separable_parts(inst: Instance, tol=1e-12):
    """(delta, rho) of a cost of the form delta(s, shat) + rho(x), or None."""
    if inst.separable is not None:
        sep = inst.separable
        return None if sep.has_cross else (sep.delta, sep.rho)
    k = inst.cost_tensor
    rho = k[0, :, 0, 0] - k[0, 0, 0, 0]
    delta = k[:, 0, 0, :]
    fitted = delta[:, None, None, :] + rho[None, :, None, None]
    if np.max(np.abs(k - fitted)) > tol * max(1.0, np.max(np.abs(k))):
        return None
    return delta, rho


def _kernel_grad(f, p_s, a):
    """dI_f/da divided by P_S (zero on rows with P_S = 0)."""
    if f.kind == "negLog":
        q = p_s @ a
        with np.errstate(divide="ignore"):
            return np.log(np.clip(a, 1e-300, None)) - np.log(np.clip(q, 1e-300, None))[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = grad_a(f, p_s, a)
    safe = np.where(p_s > 0, p_s, 1.0)[:, None]
    return np.where(p_s[:, None] > 0, g / safe, 0.0)


def _input_grad(f, channel, b):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return grad_b(f, channel, b)


# --------------------------------------------------------------------------
# inner problems for fixed lam

@dataclass
class _AStep:
    a: np.ndarray
    value: float          # E delta + lam I at a
    lower: float          # certified lower bound on the minimum
    info: float           # I(a)
    dist: float


@dataclass
class _BStep:
    b: np.ndarray
    value: float          # E rho - lam I at b
    lower: float
    info: float
    cost: float


_LP_TIGHT = dict(primal_feasibility_tolerance=1e-10, dual_feasibility_tolerance=1e-10)


def _kelley_simplex_rows(x0, objective, gradient, tol, max_cuts=400, shrink=1e-9):
    """Cutting-plane minimization of a convex function over row-stochastic matrices.

    Each cut is a tangent plane taken at a point pulled slightly toward the
    uniform matrix, so gradients stay finite and the cut stays a global
    under-estimator. The LP over the cuts gives the certified lower bound.
    For piecewise-linear objectives the loop ends after finitely many cuts.
    """
    rows, cols = x0.shape
    n = rows * cols
    a_eq = np.zeros((rows, n + 1))
    for r in range(rows):
        a_eq[r, r * cols:(r + 1) * cols] = 1.0
    cost = np.zeros(n + 1)
    cost[-1] = 1.0
    bounds = [(0.0, 1.0)] * n + [(None, None)]
    cuts, rhs = [], []

    def add_cut(x):
        p = (1.0 - shrink) * x + shrink / cols
        g = np.asarray(gradient(p), dtype=float).ravel()
        cuts.append(np.append(g, -1.0))
        rhs.append(float(g @ p.ravel()) - objective(p))

    best_x, best = x0.copy(), objective(x0)
    lower = -np.inf
    add_cut(x0)
    for _ in range(max_cuts):
        res = None
        for options in (_LP_TIGHT, {}):
            res = linprog(cost, A_ub=np.array(cuts), b_ub=np.array(rhs), A_eq=a_eq,
                          b_eq=np.ones(rows), bounds=bounds, method="highs", options=options)
            if res.status == 0:
                break
        if res.status != 0:
            break
        lower = max(lower, float(res.fun))
        x = np.clip(res.x[:n].reshape(rows, cols), 0.0, None)
        x /= x.sum(axis=1, keepdims=True)
        val = objective(x)
        if val < best:
            best_x, best = x, val
        if best - lower <= tol * max(1.0, abs(best)):
            break
        add_cut(x)
    return best_x, best, min(lower, best)


def _simplex_rows(x0, objective, gradient, tol, smooth=True, shrink=1e-9):
    """Minimize a convex function over row-stochastic matrices with a certified lower bound.

    Smooth objectives go to SLSQP first; the tangent plane at a point pulled
    slightly toward uniform then bounds the minimum from below. When that
    bound is not tight enough, or the objective has kinks, the cutting-plane
    loop takes over from the best point found.
    """
    rows, cols = x0.shape
    if smooth:
        def jac(v):
            g = np.asarray(gradient(v.reshape(rows, cols)), dtype=float).ravel()
            return np.where(np.isfinite(g), g, np.sign(g) * 1e6)

        cons = [{"type": "eq", "fun": lambda v, r=r: v[r * cols:(r + 1) * cols].sum() - 1.0,
                 "jac": lambda v, r=r: np.eye(rows * cols)[r * cols:(r + 1) * cols].sum(axis=0)}
                for r in range(rows)]
        with np.errstate(all="ignore"):
            res = minimize(lambda v: objective(np.clip(v, 0.0, None).reshape(rows, cols)),
                           x0.ravel(), jac=jac, bounds=[(0.0, 1.0)] * (rows * cols),
                           constraints=cons, method="SLSQP", options=dict(ftol=1e-16, maxiter=200))
        x = np.clip(res.x.reshape(rows, cols), 0.0, None)
        x /= x.sum(axis=1, keepdims=True)
        val = objective(x)
        p = (1.0 - shrink) * x + shrink / cols
        g = np.asarray(gradient(p), dtype=float)
        if np.all(np.isfinite(g)):
            lower = objective(p) - float(np.sum(p * g) - np.sum(g.min(axis=1)))
            if val - lower <= tol * max(1.0, abs(val)):
                return x, val, min(lower, val)
        if objective(x0) > val:
            x0 = x
    return _kelley_simplex_rows(x0, objective, gradient, tol)


def _a_step(f, p_s, cost, lam, tol, warm=None, max_iter=100_000):
    """min over kernels a of sum P_S a cost + lam I_f(a)."""
    ns, nshat = cost.shape
    if lam <= 0:
        a = np.zeros_like(cost)
        a[np.arange(ns), np.argmin(cost, axis=1)] = 1.0
        dist = float(np.sum(p_s[:, None] * a * cost))
        return _AStep(a, dist, dist, kernel_information(f, p_s, a), dist)
    if f.kind == "negLog":
        res = rd_lagrangian(p_s, cost, lam, tol, max_iter, q0=warm)
        return _AStep(res.kernel_or_marginal, res.lagrangian, res.lower, res.value,
                      res.expected_cost)
    if f.kind == "totalVariation":
        return _tv_a_step(p_s, cost, lam)
    w = p_s[:, None]
    obj = lambda a: float(np.sum(w * a * cost)) + lam * kernel_information(f, p_s, a)
    grad = lambda a: w * (cost + lam * _kernel_grad(f, p_s, a))
    a0 = np.full_like(cost, 1.0 / nshat) if warm is None else warm
    a, val, lower = _simplex_rows(a0, obj, grad, tol, f.smooth)
    info = kernel_information(f, p_s, a)
    return _AStep(a, val, min(lower, val), info, val - lam * info)


def _tv_a_step(p_s, cost, lam):
    """Kernel step for total variation, solved exactly as one LP.

    I_TV(a P_S) = 1/2 sum_s P_S(s) sum_shat |q(shat) - a(shat|s)| with q = P_S a
    is piecewise linear, so an epigraph variable u per cell makes it linear.
    """
    ns, nshat = cost.shape
    n = ns * nshat
    # variables: a (n), u (n); u >= +-(q - a) weighted by P_S
    mix = np.kron(np.ones((ns, 1)), np.kron(p_s[None, :], np.eye(nshat)))   # rows (s, shat) -> q(shat)
    diff = mix - np.eye(n)                                                   # q - a
    a_ub = np.block([[diff, -np.eye(n)], [-diff, -np.eye(n)]])
    a_eq = np.hstack([np.kron(np.eye(ns), np.ones((1, nshat))), np.zeros((ns, n))])
    weights = np.repeat(p_s, nshat)
    c = np.concatenate([weights * cost.ravel(), 0.5 * lam * weights])
    res = None
    for options in (_LP_TIGHT, {}):
        res = linprog(c, A_ub=a_ub, b_ub=np.zeros(2 * n), A_eq=a_eq, b_eq=np.ones(ns),
                      bounds=[(0, None)] * (2 * n), method="highs", options=options)
        if res.status == 0:
            break
    if res.status != 0:
        raise RuntimeError(f"total-variation kernel LP failed: {res.message}")
    a = np.clip(res.x[:n].reshape(ns, nshat), 0.0, None)
    a /= a.sum(axis=1, keepdims=True)
    info = kernel_information(total_variation(), p_s, a)
    dist = float(np.sum(p_s[:, None] * a * cost))
    value = dist + lam * info
    return _AStep(a, value, min(float(res.fun), value), info, dist)


def _b_step(f, channel, cost, lam, tol, warm=None, max_iter=100_000):
    """min over input laws b of sum b cost - lam I_f(b)."""
    nx = cost.shape[0]
    if lam <= 0:
        b = np.zeros(nx)
        ties = np.nonzero(cost <= cost.min() + 1e-12)[0]
        if len(ties) > 1:
            # among cheapest inputs, keep the most informative mix
            sub = cc_lagrangian(channel[ties], np.zeros(len(ties)), 0.0, tol, max_iter)
            b[ties] = sub.kernel_or_marginal
        else:
            b[ties[0]] = 1.0
        c = float(b @ cost)
        return _BStep(b, c, c, input_information(f, channel, b), c)
    if f.kind == "negLog":
        res = cc_lagrangian(channel, cost, 1.0 / lam, tol, max_iter, b0=warm)
        return _BStep(res.kernel_or_marginal, -lam * res.lagrangian, -lam * res.upper,
                      res.value, res.expected_cost)
    obj = lambda b: float(b[0] @ cost) - lam * input_information(f, channel, b[0])
    grad = lambda b: (cost - lam * _input_grad(f, channel, b[0]))[None, :]
    b0 = np.full((1, nx), 1.0 / nx) if warm is None else warm[None, :]
    b, val, lower = _simplex_rows(b0, obj, grad, tol, f.smooth)
    b = b[0]
    info = input_information(f, channel, b)
    return _BStep(b, val, min(lower, val), info, val + lam * info)


# --------------------------------------------------------------------------
# multipliers and KKT residuals for the end-to-end program

def _multipliers_at(f, p_s, delta, channel, rho, a, b, lam):
    """Multipliers making nu_a, nu_b >= 0 with a zero in every row."""
    ga = _kernel_grad(f, p_s, a)
    gb = _input_grad(f, channel, b)
    with np.errstate(invalid="ignore"):
        ta = delta + lam * ga if lam > 0 else delta.copy()
        tb = rho - lam * gb if lam > 0 else rho.copy()
    ta = np.where(np.isfinite(ta), ta, np.inf)
    tb = np.where(np.isfinite(tb), tb, np.inf)
    mu_a = -np.min(ta, axis=1)
    nu_a = ta + mu_a[:, None]
    # rho = lam G_b - mu_b + nu_b
    mu_b = -float(np.min(tb))
    nu_b = tb + mu_b
    return Multipliers(-delta, None, lam, None, mu_a, mu_b, nu_a, nu_b)


def _pair_report(f, p_s, channel, pair, mult, slack):
    a, b = pair.a, pair.b
    w = p_s > 0
    nu_a = np.where(np.isfinite(mult.nu_a), mult.nu_a, 0.0)
    nu_b = np.where(np.isfinite(mult.nu_b), mult.nu_b, 0.0)
    stat_a = float(np.max(np.sum(a * nu_a, axis=1)[w])) if np.any(w) else 0.0
    stat_b = float(abs(np.sum(b * nu_b)))
    sign = max(0.0, -mult.lam, -float(np.min(mult.nu_a)), -float(np.min(mult.nu_b)))
    feas = max(float(np.max(np.abs(a.sum(axis=1) - 1))), abs(float(b.sum() - 1)),
               max(0.0, -slack), max(0.0, -float(a.min())), max(0.0, -float(b.min())))
    return KKTReport(stat_a, stat_b, 0.0, abs(mult.lam * slack), sign, feas)


def kkt_residual_separable(inst: Instance, pair: EndToEndPair, f: FGenerator = None, lam=None,
                           delta=None, rho=None, lambda_grid=None):
    """Reconstruct multipliers for a candidate pair and report KKT residuals.

    For each trial ``lam`` the row constants mu_a and mu_b are chosen so that
    nu_a, nu_b are nonnegative with a zero in every row; the reported ``lam`` is
    the trial value with the smallest maximal residual. Pass ``lam`` to skip the
    search, or ``lambda_grid`` to supply the trial values.
    """
    f = neg_log() if f is None else f
    if delta is None or rho is None:
        parts = separable_parts(inst)
        if parts is None:
            raise ValueError("instance cost is not of the form delta(s, shat) + rho(x)")
        delta, rho = parts
    p_s, channel = inst.p_s, inst.channel
    i_a, i_b = kernel_information(f, p_s, pair.a), input_information(f, channel, pair.b)
    slack = i_b - i_a

    def evaluate(t):
        mult = _multipliers_at(f, p_s, delta, channel, rho, pair.a, pair.b, t)
        return mult, _pair_report(f, p_s, channel, pair, mult, slack)

    if lam is not None:
        return evaluate(float(lam))
    scale = max(1.0, float(np.ptp(delta)), float(np.ptp(rho)))
    trials = (np.concatenate([[0.0], scale * np.logspace(-6, 4, 201)])
              if lambda_grid is None else np.asarray(lambda_grid, float))
    scores = [evaluate(t)[1].max_residual for t in trials]
    i = int(np.argmin(scores))
    best_t = trials[i]
    if lambda_grid is None and 0 < i < len(trials) - 1:
        lo, hi = math.log(trials[i - 1]) if trials[i - 1] > 0 else math.log(trials[i]) - 0.1, \
            math.log(trials[i + 1])
        for _ in range(80):
            m1 = lo + (hi - lo) * 0.382
            m2 = lo + (hi - lo) * 0.618
            if evaluate(math.exp(m1))[1].max_residual <= evaluate(math.exp(m2))[1].max_residual:
                hi = m2
            else:
                lo = m1
        cand = math.exp(0.5 * (lo + hi))
        if evaluate(cand)[1].max_residual < scores[i]:
            best_t = cand
    return evaluate(best_t)


# --------------------------------------------------------------------------
# separable relaxation

def _lambda_cap(delta, rho, channel):
    spread = max(float(np.ptp(delta)) + float(np.ptp(rho)), 1e-12)
    rows = channel
    d = []
    for i in range(rows.shape[0]):
        for j in range(i + 1, rows.shape[0]):
            p, q = rows[i], rows[j]
            m = (p > 0) & (q > 0)
            if np.any(m):
                d.append(float(np.sum(p[m] * np.log(p[m] / q[m]))))
    nz = [v for v in d if v > 1e-12]
    return 2.0 * spread / max(1e-3, min(nz) if nz else 1.0)


def _solve_pair(f, p_s, delta, channel, rho, tol, max_steps=200, lam_hint=None):
    """Core of the separable solver. Returns (a, b, lam, dual, info dict).

    The slope I(b_lam) - I(a_lam) of the dual is nonincreasing in lam; its
    sign change is bracketed (around ``lam_hint`` when given) and located by
    Illinois false position in log lam.
    """
    scale = max(1.0, float(np.ptp(delta)), float(np.ptp(rho)))
    inner_tol = min(1e-12, tol * 1e-3)
    cache = {}
    last = {"a": None, "b": None}

    def at(lam):
        key = float(lam)
        if key not in cache:
            sa = _a_step(f, p_s, delta, lam, inner_tol, last["a"])
            sb = _b_step(f, channel, rho, lam, inner_tol, last["b"])
            if lam > 0:
                last["a"] = p_s @ sa.a if f.kind == "negLog" else sa.a
                last["b"] = sb.b
            cache[key] = (sa, sb, sb.info - sa.info)
        return cache[key]

    sa0, sb0, slack0 = at(0.0)
    if slack0 >= -tol:
        val = sa0.dist + sb0.cost
        return sa0.a, sb0.b, 0.0, val, {"steps": 0, "lam_lo": 0.0, "lam_hi": 0.0}
    floor = 1e-9 * scale
    if at(floor)[2] >= 0:
        sa, sb, _ = at(floor)
        return sa.a, sb.b, floor, sa.lower + sb.lower, {"steps": 0, "lam_lo": floor,
                                                        "lam_hi": floor}
    # bracket: slack(lo) < 0 <= slack(hi)
    if lam_hint is not None and lam_hint > floor:
        lo = hi = float(lam_hint)
        factor = 1.001
        if at(lo)[2] < 0:
            while at(hi)[2] < 0 and hi < 1e300:
                lo, hi = hi, hi * factor
                factor = factor ** 4
        else:
            while at(lo)[2] >= 0 and lo > floor:
                hi, lo = lo, max(lo / factor, floor)
                factor = factor ** 4
    else:
        lo, hi = floor, _lambda_cap(delta, rho, channel)
        while at(hi)[2] < 0 and hi < 1e300:
            lo, hi = hi, hi * 2.0
    xl, xh = math.log(lo), math.log(hi)
    sl, sh = at(lo)[2], at(hi)[2]
    side = 0
    steps = 0
    for steps in range(1, max_steps + 1):
        if xh - xl <= 1e-13:
            break
        x = xh - sh * (xh - xl) / (sh - sl) if sh - sl > 0 else 0.5 * (xl + xh)
        # keep the trial well inside the bracket
        width = xh - xl
        x = min(max(x, xl + 1e-3 * width), xh - 1e-3 * width)
        if steps % 4 == 0:
            x = 0.5 * (xl + xh)
        sm = at(math.exp(x))[2]
        if abs(sm) <= 1e-3 * tol:
            xl = xh = x
            sl = sh = sm
            break
        if sm < 0:
            xl, sl = x, sm
            if side == -1:
                sh *= 0.5
            side = -1
        else:
            xh, sh = x, sm
            if side == 1:
                sl *= 0.5
            side = 1
        if not f.smooth and sh - sl > 0 and _bracket_gap(at(math.exp(xl)), at(math.exp(xh))) <= 1e-2 * tol * scale:
            # piecewise-linear duals never shrink the bracket; stop once it certifies
            break
    lo, hi = math.exp(xl), math.exp(xh)
    sa_lo, sb_lo, s_lo = at(lo)
    sa_hi, sb_hi, s_hi = at(hi)
    theta = 0.0 if s_hi - s_lo <= 0 else min(1.0, max(0.0, s_hi / (s_hi - s_lo)))
    a = theta * sa_lo.a + (1 - theta) * sa_hi.a
    b = theta * sb_lo.b + (1 - theta) * sb_hi.b
    # the linearized slack is zero; the true slack is at least that by
    # convexity of I in a and concavity in b. Guard rounding anyway.
    i_a, i_b = kernel_information(f, p_s, a), input_information(f, channel, b)
    if i_b - i_a < 0 and theta > 0:
        a, b = sa_hi.a, sb_hi.b
    dual = max(sa_lo.lower + sb_lo.lower, sa_hi.lower + sb_hi.lower)
    lam = math.sqrt(lo * hi)
    return a, b, lam, dual, {"steps": steps, "evaluations": len(cache), "lam_lo": lo,
                             "lam_hi": hi, "theta": theta}


def _bracket_gap(low, high):
    """Primal value of the slack-balancing mix of two Lagrangian minimizers minus the best dual."""
    sa_lo, sb_lo, s_lo = low
    sa_hi, sb_hi, s_hi = high
    theta = min(1.0, max(0.0, s_hi / (s_hi - s_lo)))
    primal = theta * (sa_lo.dist + sb_lo.cost) + (1 - theta) * (sa_hi.dist + sb_hi.cost)
    return primal - max(sa_lo.lower + sb_lo.lower, sa_hi.lower + sb_hi.lower)


def _finish_pair(inst, f, delta, rho, a, b, lam, dual, tol, info, value_offset=0.0,
                 value_fn=None):
    p_s, channel = inst.p_s, inst.channel
    a = a / a.sum(axis=1, keepdims=True)
    b = b / b.sum()
    pair = EndToEndPair(a, b)
    i_a, i_b = kernel_information(f, p_s, a), input_information(f, channel, b)
    slack = i_b - i_a
    mult, report = kkt_residual_separable(inst, pair, f, lam=lam, delta=delta, rho=rho)
    if value_fn is None:
        value = float(np.sum(p_s[:, None] * a * delta) + b @ rho) + value_offset
    else:
        value = value_fn(a, b)
    gap = value - dual
    # at a kink of f the report uses one fixed subgradient, so for non-smooth
    # generators the zero duality gap alone certifies optimality
    ok = gap <= tol * max(1.0, abs(value)) and (report.max_residual <= tol
                                                or not f.smooth)
    info = dict(info, primal=value, iA=i_a, iB=i_b)
    return RelaxSolution(pair, value, mult, OPTIMAL if ok else MAX_ITER, report, dual, slack,
                         info=info)


def solve_relaxation_separable(inst: Instance, f: FGenerator = None, tol=1e-8,
                               delta=None, rho=None) -> RelaxSolution:
    """Minimize E delta(S, Shat) + E rho(X) subject to I_f(S;Shat) <= I_f(X;Y).

    The multiplier lam is the sign change of the dual slope, located by
    false position in log lam. The primal point is the
    convex combination of the bracketing solutions whose linearized slack
    vanishes, which is feasible because I is convex in a and concave in b.
    """
    f = neg_log() if f is None else f
    _check_generator(f, inst.channel)
    if delta is None or rho is None:
        parts = separable_parts(inst)
        if parts is None:
            raise ValueError("instance cost is not of the form delta(s, shat) + rho(x)")
        delta, rho = parts
    delta = np.asarray(delta, float)
    rho = np.asarray(rho, float)
    a, b, lam, dual, info = _solve_pair(f, inst.p_s, delta, inst.channel, rho, tol)
    return _finish_pair(inst, f, delta, rho, a, b, lam, dual, tol, info)


# --------------------------------------------------------------------------
# Cauchy-Schwarz relaxation for the cross term

def solve_relaxation_bansal(inst: Instance, tol=1e-8, max_outer=500) -> RelaxSolution:
    """Relaxation with the cross term bounded below by -alpha sqrt(E rho(X)).

    The concave term is handled by a damped fixed point on R = sqrt(E rho):
    at the solution, (a, b) also solves the separable relaxation with rho
    scaled by (1 - alpha / (2 R)).
    """
    sep = inst.separable
    if sep is None:
        raise ValueError("instance needs a SeparableCost")
    f = neg_log()
    delta, rho = sep.delta, sep.rho
    alpha = sep.alpha(inst.p_s)
    if alpha == 0.0:
        sol = solve_relaxation_separable(inst, f, tol, delta=delta, rho=rho)
        sol.info["alpha"] = 0.0
        return sol
    if np.any(rho < 0):
        raise ValueError("rho must be nonnegative")
    if np.all(rho == 0):
        pair = EndToEndPair(np.full(delta.shape, 1.0 / delta.shape[1]),
                            np.full(rho.shape, 1.0 / rho.shape[0]))
        zero = Multipliers(None, None, 0.0, None, np.zeros(inst.n_s), 0.0,
                           np.zeros(delta.shape), np.zeros(rho.shape))
        return RelaxSolution(pair, math.nan, zero, DEGENERATE,
                             KKTReport(math.inf, math.inf, 0.0, 0.0, 0.0, 0.0), math.nan, math.nan,
                             info={"alpha": alpha, "reason": "R = 0 for every input law"})

    def respond(r):
        scaled = (1.0 - alpha / (2.0 * r)) * rho
        a, b, lam, dual, info = _solve_pair(f, inst.p_s, delta, inst.channel, scaled, tol)
        return math.sqrt(max(float(b @ rho), 0.0)), (a, b, lam, dual, info, scaled)

    r = math.sqrt(float(rho.mean()))
    history = [r]
    converged = False
    for _ in range(max_outer):
        h, state = respond(r)
        new_r = 0.5 * (r + h)
        history.append(new_r)
        if abs(new_r - r) <= 1e-10:
            r = new_r
            converged = True
            break
        r = new_r
    if not converged:
        # fall back to bisection on h(R) - R over the observed range
        lo, hi = min(history), max(history)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            h, state = respond(mid)
            if h > mid:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-10:
                break
        r = 0.5 * (lo + hi)
    h, (a, b, lam, dual_g, info, scaled) = respond(r)
    p_s = inst.p_s
    value_fn = lambda a_, b_: float(np.sum(p_s[:, None] * a_ * delta) + b_ @ rho
                                    - alpha * math.sqrt(max(float(b_ @ rho), 0.0)))
    # the linearization -alpha sqrt(P) >= -alpha (R/2 + P/(2R)) turns the
    # separable dual value into a lower bound for this program
    dual = dual_g - alpha * r / 2.0
    sol = _finish_pair(inst, f, delta, scaled, a, b, lam, dual, tol, info, value_fn=value_fn)
    sol.info.update(alpha=alpha, R=r, R_history=history, rho_scale=1.0 - alpha / (2.0 * r))
    return sol


# --------------------------------------------------------------------------
# general relaxation over joint distributions

def _ot_coupling(mu, nu, cost):
    """Exact optimal coupling between mu (rows) and nu (columns) by linear programming."""
    # masses below the LP tolerance only make the solver report infeasibility
    rows = np.nonzero(mu > 1e-11 * mu.sum())[0]
    cols = np.nonzero(nu > 1e-11 * nu.sum())[0]
    m, n = len(rows), len(cols)
    c = cost[np.ix_(rows, cols)].ravel()
    ri = np.repeat(np.arange(m), n)
    ci = np.tile(np.arange(n), m)
    idx = np.arange(m * n)
    # the last column constraint is implied by the others; keeping it lets
    # rounding make the system inconsistent
    keep = ci < n - 1
    a_eq = sparse.vstack([sparse.csr_matrix((np.ones(m * n), (ri, idx)), shape=(m, m * n)),
                          sparse.csr_matrix((np.ones(keep.sum()), (ci[keep], idx[keep])),
                                            shape=(n - 1, m * n))])
    b_eq = np.concatenate([mu[rows], (nu[cols] * (mu[rows].sum() / nu[cols].sum()))[:-1]])
    # HiGHS presolve occasionally declares these (always feasible) problems
    # infeasible when masses span many orders of magnitude
    tight = dict(primal_feasibility_tolerance=1e-10, dual_feasibility_tolerance=1e-10,
                 presolve=False)
    for options in (tight, dict(presolve=False), {}):
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds", options=options)
        if res.status == 0:
            break
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    plan = np.zeros((len(mu), len(nu)))
    plan[np.ix_(rows, cols)] = np.clip(res.x.reshape(m, n), 0.0, None)
    # row potential as the c-transform of the column potentials on the support
    col_pot = np.append(np.asarray(res.eqlin.marginals)[m:], 0.0)
    row_pot = np.min(cost[:, cols] - col_pot[None, :], axis=1)
    return plan, row_pot


def _dual_pieces(kappa_m, phi, eps):
    """Smoothed c-transform psi(x, y) and the weights pi(s, shat | x, y)."""
    z = -(kappa_m - phi.ravel()[:, None]) / eps            # (s*shat, x*y)
    lse = logsumexp(z, axis=0)
    return -eps * lse, np.exp(z - lse[None, :])


def _primal_sqp(inst, f, max_iter=60, z0=None):
    """Local SQP solve of the joint-distribution relaxation (small tensors).

    Starts from ``z0`` (a joint tensor) or from the uniform product pair.
    Returns the induced pair (a, b) of the final iterate.
    """
    p_s, w = inst.p_s, inst.channel
    ns, nx, ny, nshat = inst.shape
    shape = inst.shape
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    rows, beq = [], []
    for s_ in range(ns):
        r = np.zeros(n)
        r[idx[s_].ravel()] = 1.0
        rows.append(r)
        beq.append(p_s[s_])
    for x in range(nx):
        for y in range(ny - 1):
            r = np.zeros(n)
            r[idx[:, x].ravel()] -= w[x, y]
            r[idx[:, x, y].ravel()] += 1.0
            rows.append(r)
            beq.append(0.0)
    a_eq, b_eq = np.array(rows), np.array(beq)
    c = inst.cost_tensor.ravel()
    live = p_s > 0

    def pieces(z):
        q = np.clip(z, 0.0, None).reshape(shape)
        m = q.sum(axis=(1, 2))
        rs = m.sum(axis=1)
        a = np.where(live[:, None], m / np.where(rs > 0, rs, 1.0)[:, None], 1.0 / nshat)
        a = np.where(a.sum(axis=1, keepdims=True) > 0, a, 1.0 / nshat)
        b = q.sum(axis=(0, 2, 3))
        return a, b / max(b.sum(), 1e-300)

    def slack(z):
        a, b = pieces(z)
        return input_information(f, w, b) - kernel_information(f, p_s, a)

    def slack_grad(z):
        a, b = pieces(np.clip(z, 1e-14, None))
        ga = _kernel_grad(f, p_s, a)
        gb = _input_grad(f, w, b)
        ga = np.where(np.isfinite(ga), ga, np.sign(ga) * 1e3)
        gb = np.where(np.isfinite(gb), gb, np.sign(gb) * 1e3)
        return np.broadcast_to(gb[None, :, None, None] - ga[:, None, None, :], shape).ravel()

    if z0 is None:
        z0 = product_joint(inst, EndToEndPair(np.full((ns, nshat), 1.0 / nshat),
                                              np.full(nx, 1.0 / nx)))
    z0 = np.asarray(z0, dtype=float).ravel()
    res = minimize(lambda z: float(c @ z), z0, jac=lambda z: c, method="SLSQP",
                   bounds=[(0.0, None)] * n,
                   constraints=[{"type": "eq", "fun": lambda z: a_eq @ z - b_eq, "jac": lambda z: a_eq},
                                {"type": "ineq", "fun": slack, "jac": slack_grad}],
                   options={"ftol": 1e-15, "maxiter": max_iter})
    a, b = pieces(res.x)
    return a, b, {"sqp_iterations": int(res.nit), "sqp_status": int(res.status)}


def _feasible_pair(f, p_s, w, a, b):
    """Pull a toward its output marginal until I(a) <= I(b)."""
    i_a, i_b = kernel_information(f, p_s, a), input_information(f, w, b)
    if i_a <= i_b or i_a <= 0:
        return a
    q = p_s @ a
    pull = min(1.0, 1.0 - i_b / i_a)
    while True:
        trial = (1 - pull) * a + pull * q[None, :]
        if kernel_information(f, p_s, trial) <= i_b or pull >= 1.0:
            return trial
        pull = min(1.0, pull * 1.5 + 1e-15)


def _smoothed_dual_ascent(inst, f, kappa_m, eps_levels, max_lbfgs):
    """L-BFGS-B on the smoothed dual; returns (lam, phi, evaluations)."""
    p_s, w = inst.p_s, inst.channel
    ns, nx, ny, nshat = inst.shape
    scale = max(1.0, float(np.ptp(kappa_m)))
    inner_tol = 1e-14
    state = {"qa": None, "b": None}

    def evaluate(x, eps):
        lam = max(float(x[0]), 0.0)
        phi = x[1:].reshape(ns, nshat)
        psi, pi = _dual_pieces(kappa_m, phi, eps)
        psi_bar = np.sum(w * psi.reshape(nx, ny), axis=1)
        sa = _a_step(f, p_s, phi, lam, inner_tol, state["qa"])
        sb = _b_step(f, w, psi_bar, lam, inner_tol, state["b"])
        if lam > 0:
            state["qa"] = p_s @ sa.a if f.kind == "negLog" else sa.a
            state["b"] = sb.b
        g_phi = p_s[:, None] * sa.a - ((sb.b[:, None] * w).ravel()[None, :] * pi).sum(axis=1).reshape(ns, nshat)
        return sa.value + sb.value, np.concatenate([[sa.info - sb.info], g_phi.ravel()])

    x = np.concatenate([[scale], np.zeros(ns * nshat)])
    bounds = [(0.0, None)] + [(None, None)] * (ns * nshat)
    evals = 0
    for eps in eps_levels:
        fun = lambda z: tuple(-v for v in evaluate(z, eps))
        res = minimize(fun, x, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": max_lbfgs, "ftol": 1e-15, "gtol": 1e-12, "maxcor": 30})
        x = res.x
        evals += res.nfev
    return max(float(x[0]), 0.0), x[1:].reshape(ns, nshat), evals


def _column_gradients(f, p_s, a):
    """Per-column gradients of I_f at kernel a, divided by P_S (shape nS x nShat).

    I_f is a sum over output symbols of convex functions that are
    positively homogeneous in the column (P_S(s) a(shat|s))_s, so the
    gradient at any nonzero column is a linear minorant of its term.
    """
    return np.where(np.isfinite(g := _kernel_grad(f, p_s, a)), g, 0.0)


def _certificate_lp(inst, f, b_points, points, kappa, perturb=1e-10):
    """Multipliers (lam, phi) from a linear program.

    ``points[t]`` is a list of vectors g over s, each a linear minorant
    slope of the information term of output column t. ``b_points`` are
    input laws; at a slightly interior copy of each, the input gradient
    G_j and remainder c_j (-1 for Shannon information) give a tangent
    majorant of I in b. Every feasible point of

        max  -E mu_a - mu_b + sum_j zeta_j c_j
        s.t. phi(., t) = -sum_k eta_tk g_tk - mu_a + nu_a(., t),   sum_k eta_tk = lam,
             sum_y W psi = sum_j zeta_j G_j - mu_b + nu_b,          sum_j zeta_j = lam,
             phi(s, shat) + psi(x, y) <= kappa,   eta, zeta, nu_a, nu_b >= 0

    bounds the relaxation from below. Returns
    (lam, phi, mu_a, lp_value, (m, b, q)) or None if the LP fails, where q
    is the LP's own transport plan and m(s, shat), b its marginals;
    tangents there are the cuts that tighten the LP next.
    """
    p_s, w = inst.p_s, inst.channel
    ns, nx, ny, nshat = inst.shape
    gbs, cbs = [], []
    for b in b_points:
        b2 = (1 - perturb) * b + perturb / nx
        gbs.append(_input_grad(f, w, b2))
        cbs.append(float(b2 @ gbs[-1]) - input_information(f, w, b2))
    nb = len(gbs)
    live_s = np.nonzero(p_s > 0)[0]
    counts = [len(points[t]) for t in range(nshat)]
    o_lam, o_mua, o_mub = 0, 1, 1 + ns
    o_zeta = o_mub + 1
    o_eta = o_zeta + nb
    eta_off = o_eta + np.concatenate([[0], np.cumsum(counts)])
    o_nua = eta_off[-1]
    o_nub = o_nua + ns * nshat
    o_psi = o_nub + nx
    nvar = o_psi + nx * ny
    cost = np.zeros(nvar)
    cost[o_zeta:o_eta] = -np.array(cbs)
    cost[o_mua:o_mua + ns] = p_s
    cost[o_mub] = 1.0
    # phi(s, t) as a sparse linear form in the variables
    phi_form = []
    for s_ in range(ns):
        for t in range(nshat):
            cols = [o_mua + s_, o_nua + s_ * nshat + t]
            vals = [-1.0, 1.0]
            for k, g in enumerate(points[t]):
                cols.append(eta_off[t] + k)
                vals.append(-float(g[s_]))
            phi_form.append((cols, vals))
    rows, cols, data, rhs = [], [], [], []
    row_sxt = []
    r = 0
    for s_ in live_s:
        for t in range(nshat):
            pc, pv = phi_form[s_ * nshat + t]
            for x in range(nx):
                for y in range(ny):
                    if w[x, y] <= 0:
                        continue
                    rows.extend([r] * (len(pc) + 1))
                    cols.extend(pc + [o_psi + x * ny + y])
                    data.extend(pv + [1.0])
                    rhs.append(kappa[s_, x, y, t])
                    row_sxt.append((s_, x, y, t))
                    r += 1
    a_ub = sparse.csr_matrix((data, (rows, cols)), shape=(r, nvar))
    eq = np.zeros((nx + nshat + 1, nvar))
    for x in range(nx):
        eq[x, o_psi + x * ny:o_psi + (x + 1) * ny] = w[x]
        eq[x, o_zeta:o_eta] = [-g[x] for g in gbs]
        eq[x, o_mub] = 1.0
        eq[x, o_nub + x] = -1.0
    for t in range(nshat):
        eq[nx + t, eta_off[t]:eta_off[t + 1]] = 1.0
        eq[nx + t, o_lam] = -1.0
    eq[-1, o_zeta:o_eta] = 1.0
    eq[-1, o_lam] = -1.0
    bounds = ([(0, None)] + [(None, None)] * (ns + 1) + [(0, None)] * (o_psi - o_zeta)
              + [(None, None)] * (nx * ny))
    res = linprog(cost, A_ub=a_ub, b_ub=np.array(rhs), A_eq=eq, b_eq=np.zeros(nx + nshat + 1),
                  bounds=bounds, method="highs")
    if res.status != 0:
        return None
    z = res.x
    lam = max(float(z[o_lam]), 0.0)
    phi = np.zeros((ns, nshat))
    for k, (pc, pv) in enumerate(phi_form):
        phi.flat[k] = float(np.dot(z[pc], pv))
    if len(live_s) < ns:
        # rows without source mass: largest phi compatible with the transport constraints
        psi = z[o_psi:].reshape(nx, ny)
        dead = p_s <= 0
        slackk = np.where((w > 0)[None, :, :, None], kappa - psi[None, :, :, None], np.inf)
        phi[dead] = np.min(slackk, axis=(1, 2))[dead]
    # the LP's own transport plan, read off the inequality duals
    mass = -res.ineqlin.marginals
    row_sxt = np.array(row_sxt)
    q_lp = np.zeros(inst.shape)
    q_lp[tuple(row_sxt.T)] = np.maximum(mass, 0.0)
    m_st = q_lp.sum(axis=(1, 2))
    b_lp = q_lp.sum(axis=(0, 2, 3))
    plan = (m_st, b_lp / max(b_lp.sum(), 1e-300), q_lp)
    return lam, phi, z[o_mua:o_mua + ns].copy(), -float(res.fun), plan


def _blend_columns(a_new, a_old, p_s, tiny=1e-12):
    """a_new with columns it leaves (numerically) empty taken from a_old."""
    col = p_s @ a_new
    empty = col <= tiny
    out = a_new.copy()
    out[:, empty] = a_old[:, empty] * tiny
    return out / out.sum(axis=1, keepdims=True)


PRIMAL_SIZE_CAP = 400


def solve_relaxation_general(inst: Instance, f: FGenerator = None, tol=1e-8,
                             eps_levels=None, max_lbfgs=500, recover_joint=True,
                             method="auto", max_rounds=30) -> RelaxSolution:
    """Relaxation over joint distributions for an arbitrary cost tensor.

    For fixed end-to-end pair (a, b) the best Q is an optimal transport plan
    between P_S a on (s, shat) and b W on (x, y). Dualizing the transport
    gives, for every potential phi(s, shat) with exact c-transform psi(x, y),
    a separable relaxation with delta = phi and rho(x) = sum_y W psi; its
    value is a lower bound and the bound is tight at the optimal phi.

    A starting pair comes from an SQP solve of the primal (``method="primal"``,
    the default for tensors of at most PRIMAL_SIZE_CAP entries) or from
    L-BFGS-B on the entropically smoothed dual (``method="dual"``). The
    solver then alternates transport potentials of the current pair with
    separable solves, keeping the best certified bound and the best feasible
    pair, until they agree within tol.
    """
    f = neg_log() if f is None else f
    _check_generator(f, inst.channel)
    p_s, w = inst.p_s, inst.channel
    ns, nx, ny, nshat = inst.shape
    kappa = inst.cost_tensor
    kappa_m = kappa.transpose(0, 3, 1, 2).reshape(ns * nshat, nx * ny)
    scale = max(1.0, float(np.ptp(kappa)))
    if method == "auto":
        method = "primal" if kappa.size <= PRIMAL_SIZE_CAP else "dual"
    if method not in ("primal", "dual"):
        raise ValueError("method must be 'auto', 'primal' or 'dual'")
    can_couple = lambda a_, b_: (np.count_nonzero(p_s[:, None] * a_) * np.count_nonzero(b_[:, None] * w)
                                 <= LP_VARIABLE_CAP)
    info = {"method": method}

    def transport_value(a_, b_):
        plan, row_pot = _ot_coupling((p_s[:, None] * a_).ravel(), (b_[:, None] * w).ravel(), kappa_m)
        return float(np.sum(plan * kappa_m)), plan, row_pot.reshape(ns, nshat)

    def separable_at(phi_, hint):
        psi_c = np.min(kappa - phi_[:, None, None, :], axis=(0, 3))
        return _solve_pair(f, p_s, phi_, w, np.sum(w * psi_c, axis=1), tol, lam_hint=hint)

    best_dual, best = -math.inf, None          # best certified bound and its (phi, lam)
    best_val, best_pair = math.inf, None       # best feasible pair by transport value

    def certify(phi_, lam_):
        """Certified dual value at (lam, phi) with the exact c-transform."""
        nonlocal best_dual, best
        psi_c = np.min(kappa - phi_[:, None, None, :], axis=(0, 3))
        inner = min(1e-12, tol * 1e-3)
        sa = _a_step(f, p_s, phi_, lam_, inner)
        sb = _b_step(f, w, np.sum(w * psi_c, axis=1), lam_, inner)
        if sa.lower + sb.lower > best_dual:
            best_dual, best = sa.lower + sb.lower, (phi_, lam_, {"source": "certificate"})
        return sa, sb

    def offer(a_, b_):
        nonlocal best_val, best_pair
        if not (recover_joint and can_couple(a_, b_)):
            best_pair = best_pair or (a_, b_)
            return None
        val_, _, row_pot_ = transport_value(a_, b_)
        if val_ < best_val:
            best_val, best_pair = val_, (a_, b_)
        return row_pot_

    if method == "primal":
        a, b, sqp_info = _primal_sqp(inst, f)
        info.update(sqp_info)
        a = _feasible_pair(f, p_s, w, a, b)
        phi = offer(a, b)
        lam_hint = None
    else:
        if eps_levels is None:
            eps_levels = [scale * 1e-1, scale * 1e-3]
        lam_hint, phi, evals = _smoothed_dual_ascent(inst, f, kappa_m, eps_levels, max_lbfgs)
        info["evaluations"] = evals
        a, b, lam, dual, pinfo = separable_at(phi, lam_hint or None)
        if dual > best_dual:
            best_dual, best = dual, (phi, lam, pinfo)
        offer(a, b)
    rounds = 0
    done = lambda: best_val - best_dual <= tol * max(1.0, abs(best_val))
    points, b_points = None, []
    add_at = best_pair
    polish_rounds = (4, 10, 18)
    while rounds < max_rounds and best_pair is not None and not done():
        rounds += 1
        a_cut, b_cut = add_at
        grads = _column_gradients(f, p_s, (1 - 1e-10) * a_cut + 1e-10 / nshat)
        if points is None:
            points = [[] for _ in range(nshat)]
        for t in range(nshat):
            points[t].append(grads[:, t])
        b_points.append(b_cut)
        cert = _certificate_lp(inst, f, b_points, points, kappa)
        if cert is not None:
            lam_c, phi_c, _, _, (m_lp, b_lp, q_lp) = cert
            certify(phi_c, lam_c)
            if done():
                break
            phi, lam_hint = phi_c, lam_c
            # Kelley step: the next tangents touch the LP's own plan, whose
            # empty columns keep the shape of the current pair
            live = p_s > 0
            a_lp = a_cut.copy()
            rows = m_lp[live].sum(axis=1, keepdims=True)
            a_lp[live] = np.where(rows > 0, m_lp[live] / np.where(rows > 0, rows, 1.0), a_cut[live])
            add_at = (_blend_columns(a_lp, a_cut, p_s), b_lp)
            offer(_feasible_pair(f, p_s, w, add_at[0], b_lp), b_lp)
            if method == "primal" and rounds in polish_rounds:
                # the plan is close to optimal by now: a short SQP run from
                # it gives a sharp primal pair and a good next cut
                a_q, b_q, sqp_info = _primal_sqp(inst, f, z0=q_lp)
                info["sqp_polish"] = sqp_info
                a_q = _feasible_pair(f, p_s, w, a_q, b_q)
                offer(a_q, b_q)
                add_at = (_blend_columns(a_q, a_cut, p_s), b_q)
        elif phi is None:
            break
        # re-solve the separable problem at these potentials: a feasible pair
        # and an exact multiplier search
        a, b, lam, dual, pinfo = separable_at(phi, lam_hint or None)
        if dual > best_dual:
            best_dual, best = dual, (phi, lam, pinfo)
        before = best_val
        offer(a, b)
        if best_val >= before and cert is None:
            break
    if best is None:
        a, b, lam, dual, pinfo = separable_at(phi, lam_hint or None)
        best_dual, best = dual, (phi, lam, pinfo)
    phi, lam, pinfo = best
    a, b = best_pair
    a = a / a.sum(axis=1, keepdims=True)
    b = b / b.sum()
    pair = EndToEndPair(a, b)
    q_joint = None
    value = math.nan
    if recover_joint and can_couple(a, b):
        val, plan, _ = transport_value(a, b)
        q_joint = plan.reshape(ns, nshat, nx, ny).transpose(0, 2, 3, 1).copy()
        q_joint /= q_joint.sum()
        value = float(np.sum(q_joint * kappa))

    # multipliers in the sign conventions of the module docstring, with the
    # exact c-transform so that nu >= 0 holds exactly
    psi_xy = np.min(kappa - phi[:, None, None, :], axis=(0, 3))
    psi_bar = np.sum(w * psi_xy, axis=1)
    # gradients at the Lagrangian minimizers of (phi, lam), so that the value
    # identity holds for the certified bound even when a gap remains
    inner = min(1e-12, tol * 1e-3)
    a_d = _a_step(f, p_s, phi, lam, inner).a
    b_d = _b_step(f, w, psi_bar, lam, inner).b
    mult = _general_multipliers(f, inst, phi, psi_xy, psi_bar, lam, a_d, b_d)
    slack = input_information(f, w, b) - kernel_information(f, p_s, a)
    if q_joint is not None:
        report = kkt_residual_general(inst, q_joint, f, mult)
    else:
        report = _pair_report(f, p_s, w, pair, mult, slack)
    status = MAX_ITER
    if not math.isnan(value) and value - best_dual <= tol * max(1.0, abs(value)):
        status = OPTIMAL
    info.update(lam_search=pinfo, rounds=rounds,
                identity=-(float(p_s @ mult.mu_a) + lam + mult.mu_b))
    return RelaxSolution(pair, value if not math.isnan(value) else best_dual, mult, status, report,
                         best_dual, slack, q=q_joint, info=info)


def _general_multipliers(f, inst, phi, psi_xy, psi_bar, lam, a, b):
    p_s, w = inst.p_s, inst.channel
    lambda_a = -phi
    lambda_b = -psi_bar
    lambda_p = -(psi_xy - psi_bar[:, None])
    nu = inst.cost_tensor - phi[:, None, None, :] - psi_xy[None, :, :, None]
    if lam > 0:
        ga = _kernel_grad(f, p_s, a)
        gb = _input_grad(f, w, b)
        # lambda_a = lam G_a + mu_a - nu_a with nu_a >= 0, min 0 per row
        t = lambda_a - lam * ga
        mu_a = np.max(t, axis=1)
        nu_a = mu_a[:, None] - t
        # lambda_b = -lam G_b + mu_b - nu_b, G_b = gb
        u = lambda_b + lam * gb
        mu_b = float(np.max(u))
        nu_b = mu_b - u
    else:
        mu_a = np.max(lambda_a, axis=1)
        nu_a = mu_a[:, None] - lambda_a
        mu_b = float(np.max(lambda_b))
        nu_b = mu_b - lambda_b
    return Multipliers(lambda_a, lambda_b, lam, lambda_p, mu_a, mu_b, nu_a, nu_b, nu)


def kkt_residual_general(inst: Instance, q, f: FGenerator = None, mult: Multipliers = None) -> KKTReport:
    """Residuals of every KKT equation of the joint-distribution relaxation.

    Norms are maxima of absolute values. Cells with zero channel probability are
    skipped in the joint equation.
    """
    f = neg_log() if f is None else f
    q = np.asarray(q, float)
    p_s, w = inst.p_s, inst.channel
    ns, nx, ny, nshat = inst.shape
    kappa = inst.cost_tensor
    q_ss = q.sum(axis=(1, 2))
    a = np.where(p_s[:, None] > 0, q_ss / np.where(p_s > 0, p_s, 1.0)[:, None], 1.0 / nshat)
    b = q.sum(axis=(0, 2, 3))
    lam = mult.lam
    zero_xy = np.zeros((nx, ny))
    lambda_a = mult.lambda_a if mult.lambda_a is not None else np.zeros((ns, nshat))
    lambda_b = mult.lambda_b if mult.lambda_b is not None else np.zeros(nx)
    lambda_p = mult.lambda_p if mult.lambda_p is not None else zero_xy
    nu = mult.nu if mult.nu is not None else np.zeros(q.shape)
    rhs = (kappa + lambda_a[:, None, None, :] + lambda_b[None, :, None, None]
           + lambda_p[None, :, :, None]
           - np.sum(lambda_p * w, axis=1)[None, :, None, None])
    live = np.broadcast_to((w > 0)[None, :, :, None], q.shape)
    stat_q = float(np.max(np.abs(nu - rhs)[live])) if np.any(live) else 0.0
    ga = _kernel_grad(f, p_s, a) if lam > 0 else np.zeros_like(a)
    gb = _input_grad(f, w, b) if lam > 0 else np.zeros_like(b)
    rows = p_s > 0
    res_a = lambda_a - (lam * ga + mult.mu_a[:, None] - mult.nu_a)
    # ignore cells where both a and the gradient term vanish at the boundary
    res_a = np.where(np.isfinite(res_a), res_a, 0.0)
    stat_a = float(np.max(np.abs(res_a[rows]))) if np.any(rows) else 0.0
    res_b = lambda_b - (-lam * gb + mult.mu_b - mult.nu_b)
    res_b = np.where(np.isfinite(res_b), res_b, 0.0)
    stat_b = float(np.max(np.abs(res_b)))
    comp = abs(float(np.sum(nu * q)))
    comp = max(comp, float(np.max(np.abs(np.sum(a * mult.nu_a, axis=1))[rows])) if np.any(rows) else 0.0,
               abs(float(np.sum(b * mult.nu_b))))
    slack = input_information(f, w, b) - kernel_information(f, p_s, a)
    sign = max(0.0, -lam, -float(np.min(nu)), -float(np.min(mult.nu_a)), -float(np.min(mult.nu_b)))
    q_xy = q.sum(axis=(0, 3))
    feas = max(float(np.max(np.abs(q.sum(axis=(1, 2, 3)) - p_s))),
               float(np.max(np.abs(q_xy - b[:, None] * w))),
               max(0.0, -slack), max(0.0, -float(q.min())), abs(float(q.sum()) - 1.0))
    return KKTReport(stat_a, stat_b, stat_q, abs(lam * slack), sign, feas, comp)


# --------------------------------------------------------------------------
# bound report

@dataclass
class BoundReport:
    lb: float
    ub: float
    gap: float
    multiplier_identity_residual: float
    dpi_equality_slack: float
    ub_heuristic: bool
    relax_status: str
    primal_value: float


def bound_report(inst: Instance, f: FGenerator = None, tol=1e-8, restarts=20, seed=0) -> BoundReport:
    """Lower bound from the general relaxation against an exact or heuristic upper bound.

    ``lb`` is the certified dual value of the relaxation, and the multiplier
    identity compares it with -(E mu_a(S) + lam + mu_b) from the multipliers
    attached to the solution.
    """
    f = neg_log() if f is None else f
    sol = solve_relaxation_general(inst, f, tol)
    try:
        ex = enumerate_optimal(inst)
        ub, heuristic = ex.value, False
    except BudgetExceeded:
        ex = alternating_best_response(inst, restarts=restarts, seed=seed)
        ub, heuristic = ex.value, True
    lb = sol.dual_value
    ident = abs(lb + float(inst.p_s @ sol.mult.mu_a) + sol.mult.lam + sol.mult.mu_b)
    return BoundReport(lb, ub, ub - lb, ident, sol.dpi_slack, heuristic, sol.status, sol.value)
