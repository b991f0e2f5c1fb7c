"""Discretized Gaussian instances and their continuous closed-form references.

Three presets share one grid layout: the source S ~ N(0, sigma0^2), an
additive channel Y = X + W with W ~ N(0, sigmaW^2), and the costs

* ``testChannel``: (shat - s)^2 + k0 x^2
* ``bansalBasar``: (shat - s)^2 + k0 x^2 + s01 x s
* ``witsenhausen``: (x - shat)^2 + (x - s)^2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .core import DetCode, Instance, SeparableCost

PROBLEMS = ("testChannel", "bansalBasar", "witsenhausen")
PRESET_NAMES = {"test-channel": "testChannel", "bansal-basar": "bansalBasar",
                "witsenhausen": "witsenhausen"}
TENSOR_BUDGET = 10 ** 8


class GridBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianSpec:
    sigma0: float = 1.0
    sigma_w: float = 1.0
    k0: float = 0.25
    s01: float = 0.0
    grid_points: int = 17
    half_width: float = 5.0
    problem: str = "testChannel"

    def __post_init__(self):
        if self.sigma0 <= 0 or self.sigma_w <= 0 or self.k0 <= 0:
            raise ValueError("sigma0, sigma_w and k0 must be positive")
        if self.grid_points < 9 or self.grid_points % 2 == 0:
            raise ValueError("grid_points must be odd and at least 9")
        if self.half_width < 3:
            raise ValueError("half_width must be at least 3")
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}")
        if self.problem == "testChannel" and self.s01 != 0:
            object.__setattr__(self, "s01", 0.0)


@dataclass(frozen=True)
class ClosedForms:
    gamma0_star: float
    gamma1_star: float
    gamma0_signed: float          # encoder gain of B itself, -sgn(s01) * gamma0_star
    gamma1_signed: float
    xi0: Callable
    xi1: Callable
    p_bar: Callable
    opt_b: float
    distortion_lb: Callable
    lambda_star: float
    root_residual: float
    status: str = "ok"


def discretize_gaussian(sigma, grid_points, half_width=5.0):
    """Uniform grid on [-h sigma, h sigma] with renormalized density weights."""
    mid = grid_points // 2
    z = half_width * (np.arange(grid_points) - mid) / mid     # exactly antisymmetric
    values = sigma * z
    w = np.exp(-0.5 * z ** 2)
    w = 0.5 * (w + w[::-1])
    return values, w / w.sum()


def xi0(spec, g):
    return spec.sigma0 ** 2 * spec.sigma_w ** 2 / (g ** 2 * spec.sigma0 ** 2 + spec.sigma_w ** 2) ** 2


def xi1(spec, g):
    return g * spec.sigma0 ** 2 / (g ** 2 * spec.sigma0 ** 2 + spec.sigma_w ** 2)


def p_bar(spec, g):
    return (g ** 2 * spec.sigma0 ** 2 + spec.sigma_w ** 2) / (g ** 2 * spec.sigma0 ** 2)


def stationarity_residual(spec, g):
    """Left minus right side of the encoder-gain equation at gain g."""
    s0, sw = spec.sigma0, spec.sigma_w
    return ((2 * spec.k0 * g * s0 - abs(spec.s01) * s0) * (g ** 2 * s0 ** 2 + sw ** 2) ** 2
            - 2 * g * s0 ** 3 * sw ** 2)


def linear_cost(spec, g):
    """Cost of the linear pair (g S, xi1(g) Y) for problem B, with g >= 0
    taken against the sign of s01."""
    s0, sw = spec.sigma0, spec.sigma_w
    return (sw ** 2 * s0 ** 2 / (g ** 2 * s0 ** 2 + sw ** 2) + spec.k0 * g ** 2 * s0 ** 2
            - abs(spec.s01) * g * s0 ** 2)


def gamma_star(spec: GaussianSpec) -> ClosedForms:
    """Optimal linear gains of the Gaussian problems and the optimal value.

    The positive root of the gain equation is a stationary point of
    ``linear_cost``; when several roots exist the one with the lowest cost is
    kept. Roots are bracketed on a scan of (0, gmax] with gmax doubled until
    the residual turns positive, then refined by Brent's method.
    """
    s0 = spec.sigma0
    if spec.s01 == 0:
        # drop the trivial root at zero
        h = lambda g: stationarity_residual(spec, g) / g
    else:
        h = lambda g: stationarity_residual(spec, g)
    gmax = 1.0
    while h(gmax) <= 0 and gmax < 1e8:
        gmax *= 2.0
    grid = np.linspace(gmax * 1e-9, gmax, 4001)
    vals = np.array([h(g) for g in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        if vals[i] == 0:
            roots.append(grid[i])
        elif vals[i + 1] != 0:
            roots.append(brentq(h, grid[i], grid[i + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                maxiter=500))
    f_xi0 = lambda g: xi0(spec, g)
    f_xi1 = lambda g: xi1(spec, g)
    f_pbar = lambda g: p_bar(spec, g)
    dist_lb = lambda p: s0 ** 2 * spec.sigma_w ** 2 / (p ** 2 + spec.sigma_w ** 2)
    if not roots:
        return ClosedForms(0.0, 0.0, 0.0, 0.0, f_xi0, f_xi1, f_pbar, s0 ** 2, dist_lb, 0.0,
                           abs(stationarity_residual(spec, 0.0)), status="degenerate")
    g0 = min(roots, key=lambda g: linear_cost(spec, g))
    g1 = xi1(spec, g0)
    signed = -math.copysign(g0, spec.s01) if spec.s01 != 0 else g0
    lam = 2 * g1 ** 2 * spec.sigma_w ** 2 * p_bar(spec, g0)
    return ClosedForms(g0, g1, signed, xi1(spec, signed), f_xi0, f_xi1, f_pbar,
                       linear_cost(spec, g0), dist_lb, lam,
                       abs(stationarity_residual(spec, g0)))


@dataclass(frozen=True)
class Bounds:
    rd_lhs: float
    cc_rhs: float
    distortion_lb: float


def gaussian_bounds(spec: GaussianSpec, power) -> Bounds:
    """Rate and capacity bounds at input amplitude ``power`` (E[X^2] <= power^2), in nats.

    ``rd_lhs`` is the rate side evaluated at the distortion bound, where the
    two sides meet.
    """
    if power < 0:
        raise ValueError("power must be nonnegative")
    sw2 = spec.sigma_w ** 2
    cc = 0.5 * math.log((power ** 2 + sw2) / sw2)
    dlb = spec.sigma0 ** 2 * sw2 / (power ** 2 + sw2)
    return Bounds(0.5 * math.log(spec.sigma0 ** 2 / dlb), cc, dlb)


@dataclass(frozen=True)
class Refs:
    kl_at_x: float
    log_ratio_at_sshat: float
    c1: float
    c2: float
    x_coefficient: float


def eq15_16_reference(spec: GaussianSpec, gamma0, x, s, shat) -> Refs:
    """Divergence and log-likelihood-ratio profiles of the linear pair with gain gamma0.

    With X = gamma0 S the output law is N(0, v), v = gamma0^2 sigma0^2 + sigmaW^2,
    so D(N(x, sigmaW^2) || N(0, v)) = c1 + x^2 / (2 v). The decoder
    Shat = xi1(gamma0) Y gives log a(shat|s)/a(shat) as a negative quadratic in
    shat centred at pbar gamma0 gamma1 s plus c2(s) = ln(v/sigmaW^2)/2 + s^2/(2 sigma0^2).
    """
    if gamma0 == 0:
        raise ValueError("gamma0 must be nonzero")
    sw2 = spec.sigma_w ** 2
    v = gamma0 ** 2 * spec.sigma0 ** 2 + sw2
    c1 = 0.5 * (sw2 / v - 1.0 + math.log(v / sw2))
    kl = c1 + x ** 2 / (2 * v)
    g1 = xi1(spec, gamma0)
    pb = p_bar(spec, gamma0)
    c2 = 0.5 * math.log(v / sw2) + s ** 2 / (2 * spec.sigma0 ** 2)
    ratio = -(shat - pb * gamma0 * g1 * s) ** 2 / (2 * g1 ** 2 * sw2 * pb) + c2
    return Refs(kl, ratio, c1, c2, 1.0 / (2 * v))


def grids(spec: GaussianSpec):
    """(s_values, p_s, x_values, y_values) for a spec."""
    s_vals, p_s = discretize_gaussian(spec.sigma0, spec.grid_points, spec.half_width)
    if spec.problem == "witsenhausen":
        g_hat = 1.0
    else:
        g_hat = max(1.0, abs(gamma_star(spec).gamma0_star))
    sigma_x = max(spec.sigma0 * g_hat, spec.sigma0)
    x_vals = np.linspace(-spec.half_width * sigma_x, spec.half_width * sigma_x, spec.grid_points)
    x_vals[spec.grid_points // 2] = 0.0
    step = x_vals[1] - x_vals[0]
    extra = int(math.ceil(spec.half_width * spec.sigma_w / step - 1e-9))
    n_y = spec.grid_points + 2 * extra
    y_vals = x_vals[0] - extra * step + step * np.arange(n_y)
    y_vals[n_y // 2] = 0.0
    return s_vals, p_s, x_vals, y_vals


def additive_channel(x_vals, y_vals, sigma_w):
    w = np.exp(-0.5 * ((y_vals[None, :] - x_vals[:, None]) / sigma_w) ** 2)
    return w / w.sum(axis=1, keepdims=True)


def build_instance(spec: GaussianSpec) -> Instance:
    s_vals, p_s, x_vals, y_vals = grids(spec)
    n = spec.grid_points
    entries = n * n * len(y_vals) * n
    if entries > TENSOR_BUDGET:
        raise GridBudgetExceeded(f"{entries} tensor entries exceed the budget of {TENSOR_BUDGET}")
    channel = additive_channel(x_vals, y_vals, spec.sigma_w)
    labels = dict(s_values=s_vals, x_values=x_vals, y_values=y_vals, shat_values=s_vals)
    if spec.problem == "witsenhausen":
        xs = x_vals[None, :, None, None]
        cost = (xs - s_vals[None, None, None, :]) ** 2 + (xs - s_vals[:, None, None, None]) ** 2
        cost = np.broadcast_to(cost, (n, n, len(y_vals), n)).copy()
        return Instance(p_s, channel, cost=cost, **labels)
    delta = (s_vals[None, :] - s_vals[:, None]) ** 2
    rho = spec.k0 * x_vals ** 2
    if spec.s01 != 0:
        sep = SeparableCost(delta, rho, tau_prime=s_vals ** 2 / spec.k0, k_cross=spec.s01)
    else:
        sep = SeparableCost(delta, rho)
    return Instance(p_s, channel, separable=sep, **labels)


def _nearest(grid, targets):
    """Index of the nearest grid label, ties toward the smaller label."""
    d = np.abs(grid[None, :] - np.asarray(targets)[:, None])
    return np.argmax(d <= d.min(axis=1, keepdims=True) + 1e-12, axis=1)


def linear_code_on_grid(inst: Instance, gamma0, gamma1) -> DetCode:
    """Grid-rounded version of the linear pair x = gamma0 s, shat = gamma1 y."""
    f = _nearest(inst.x_values, gamma0 * inst.s_values)
    g = _nearest(inst.shat_values, gamma1 * inst.y_values)
    return DetCode(f, g)


def refine(spec: GaussianSpec, grid_points) -> GaussianSpec:
    return replace(spec, grid_points=grid_points)
