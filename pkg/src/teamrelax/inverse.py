"""Cost pairs (delta, rho) that make a given code optimal.

A code induces an end-to-end pair (a, b). If (delta, rho) are built from
multipliers so that the pair meets the first-order conditions of the
information-constrained relaxation, then the pair solves the relaxation;
because the pair also comes from an actual code, that code solves the team
problem. ``synthesize_costs`` builds such costs,

    delta(s, shat) = -lam * G_a(s, shat) + mu_a(s) + nu_a(s, shat)
    rho(x)         =  lam * G_b(x)       + mu_b    + nu_b(x)

with G_a = dI_f(a P_S)/da / P_S and G_b = dI_f(P_{Y|X} b)/db, and
``verify_inverse_optimality`` checks the outcome by exhaustive search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (DetCode, EndToEndPair, Instance, RandomCode, SeparableCost, build_joint_from_code,
                   code_value, det_code_to_random, expected_cost, induced_endtoend)
from .exact import BudgetExceeded, alternating_best_response, enumerate_optimal
from .info import FGenerator, grad_a, grad_b, input_information, kernel_information, neg_log

COMPLEMENTARITY_TOL = 1e-10
DPI_EQUALITY_TOL = 1e-9
VERIFY_TOL = 1e-9


class SynthesisRefused(ValueError):
    """The multipliers cannot certify the candidate pair."""


@dataclass(frozen=True)
class SynthesisSpec:
    """Multipliers for the synthesis. ``nu_a``/``nu_b`` default to zero."""

    f: FGenerator
    lam: float
    mu_a: np.ndarray
    mu_b: float
    nu_a: Optional[np.ndarray] = None
    nu_b: Optional[np.ndarray] = None
    note: str = ""

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise SynthesisRefused("lam must be finite and nonnegative")
        object.__setattr__(self, "mu_a", np.asarray(self.mu_a, dtype=float))
        for name in ("nu_a", "nu_b"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if np.any(v < 0):
                    raise SynthesisRefused(f"{name} must be nonnegative")
                object.__setattr__(self, name, v)


def _gradients(f, p_s, a, channel, b):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ga = grad_a(f, p_s, a)
        gb = grad_b(f, channel, b)
    safe = np.where(p_s > 0, p_s, 1.0)[:, None]
    ga = np.where(p_s[:, None] > 0, ga / safe, 0.0)
    return ga, gb


def check_complementarity(inst: Instance, pair: EndToEndPair, spec: SynthesisSpec):
    """Raise SynthesisRefused unless the multipliers fit the pair.

    Needs <nu_a(s, .), a(s, .)> = 0 on every row, <nu_b, b> = 0, and DPI
    equality when lam > 0.
    """
    ns, _, _, nshat = inst.shape
    if spec.mu_a.shape != (ns,):
        raise SynthesisRefused(f"mu_a must have length {ns}")
    if spec.nu_a is not None:
        if spec.nu_a.shape != (ns, nshat):
            raise SynthesisRefused("nu_a has the wrong shape")
        rows = np.sum(spec.nu_a * pair.a, axis=1)
        if np.max(np.abs(rows)) > COMPLEMENTARITY_TOL:
            raise SynthesisRefused("nu_a is positive where the candidate kernel has mass")
    if spec.nu_b is not None:
        if spec.nu_b.shape != (inst.n_x,):
            raise SynthesisRefused("nu_b has the wrong shape")
        if abs(float(spec.nu_b @ pair.b)) > COMPLEMENTARITY_TOL:
            raise SynthesisRefused("nu_b is positive where the input law has mass")
    if spec.lam > 0:
        slack = (input_information(spec.f, inst.channel, pair.b)
                 - kernel_information(spec.f, inst.p_s, pair.a))
        if abs(slack) > DPI_EQUALITY_TOL:
            raise SynthesisRefused(
                f"lam > 0 needs I(X;Y) = I(S;Shat) at the candidate, slack is {slack:.3e}")


def synthesize_costs(inst: Instance, pair: EndToEndPair, spec: SynthesisSpec):
    """(delta, rho) under which ``pair`` meets the relaxation's optimality conditions.

    Cells where the kernel gradient is not finite (for instance a(shat|s) = 0
    under Shannon information) must be covered by a positive nu_a; they get the
    largest finite delta plus one, which keeps every such cell unattractive.
    """
    check_complementarity(inst, pair, spec)
    ns, nx, _, nshat = inst.shape
    nu_a = np.zeros((ns, nshat)) if spec.nu_a is None else spec.nu_a
    nu_b = np.zeros(nx) if spec.nu_b is None else spec.nu_b
    if spec.lam > 0:
        ga, gb = _gradients(spec.f, inst.p_s, pair.a, inst.channel, pair.b)
    else:
        ga, gb = np.zeros((ns, nshat)), np.zeros(nx)
    with np.errstate(invalid="ignore"):
        delta = -spec.lam * ga + spec.mu_a[:, None] + nu_a
        rho = spec.lam * gb + spec.mu_b + nu_b
    if not np.all(np.isfinite(rho)):
        raise SynthesisRefused("input gradient is not finite; the channel needs full support")
    bad = ~np.isfinite(delta)
    if np.any(bad):
        if np.any(nu_a[bad] <= 0):
            raise SynthesisRefused("kernel gradient undefined on a cell that nu_a does not cover")
        delta[bad] = float(np.max(delta[~bad])) + 1.0 if np.any(~bad) else 1.0
    return delta, rho


def instance_with_costs(inst: Instance, delta, rho) -> Instance:
    """Copy of ``inst`` with the separable cost delta(s, shat) + rho(x)."""
    return inst.with_cost(separable=SeparableCost(np.asarray(delta, float), np.asarray(rho, float)))


class GastparCosts(tuple):
    """(rho, delta) with a mask ``flagged`` of cells where p*(s|shat) = 0."""

    def __new__(cls, rho, delta, flagged):
        obj = super().__new__(cls, (rho, delta))
        obj.flagged = flagged
        return obj


def gastpar_costs(inst: Instance, pair: EndToEndPair, c1, c2, rho0=0.0, d0=None, beta=None):
    """Cost and distortion that make the pair optimal in the Shannon case.

    rho(x)        = c1 D(P_{Y|X}(.|x) || P_Y) + rho0 + beta(x) on inputs the pair never uses
    delta(s,shat) = -c2 log p(s|shat) + d0(s)

    with P_Y and p(s|shat) the output law and posterior induced by the pair.
    Cells with p(s|shat) = 0 have no finite value; they are listed in
    ``flagged`` and receive the largest finite delta plus one.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    ns, nx, _, _ = inst.shape
    p_s, w = inst.p_s, inst.channel
    d0 = np.zeros(ns) if d0 is None else np.asarray(d0, float)
    beta = np.zeros(nx) if beta is None else np.asarray(beta, float)
    if np.any(beta < 0):
        raise ValueError("beta must be nonnegative")
    r = pair.b @ w
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * (np.log(np.where(w > 0, w, 1.0)) - np.log(r)[None, :]), 0.0)
    kl = terms.sum(axis=1)
    rho = c1 * kl + rho0 + beta * (pair.b <= 0)
    joint = p_s[:, None] * pair.a
    q = joint.sum(axis=0)
    flagged = (joint <= 0) | (q[None, :] <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        post = joint / np.where(q > 0, q, 1.0)[None, :]
        delta = -c2 * np.log(np.where(flagged, 1.0, post)) + d0[:, None]
    if np.any(flagged):
        fill = float(np.max(delta[~flagged])) + 1.0 if np.any(~flagged) else 1.0
        delta = np.where(flagged, fill, delta)
    return GastparCosts(rho, delta, flagged)


@dataclass(frozen=True)
class GastparFit:
    residual: float
    c1: float
    c2: float
    rho0: float
    d0: np.ndarray


def best_gastpar_fit(inst: Instance, pair: EndToEndPair, delta, rho) -> GastparFit:
    """Least-squares fit of (delta, rho) by the Shannon-case family plus row constants.

    Fits rho ~ c1 D(W_x || P_Y) + rho0 and delta ~ -c2 log p(s|shat) + d0(s)
    jointly and returns the root-mean-square residual over all fitted cells.
    A large residual shows that the costs lie outside that family.
    """
    ns, nx, _, nshat = inst.shape
    base = gastpar_costs(inst, pair, 1.0, 1.0)
    kl = base[0]
    neg_log_post = base[1]
    live = ~base.flagged
    # unknowns: c1, rho0, c2, d0(0..ns-1)
    n_unknown = 3 + ns
    rows, rhs = [], []
    for x in range(nx):
        r = np.zeros(n_unknown)
        r[0], r[1] = kl[x], 1.0
        rows.append(r)
        rhs.append(rho[x])
    for s in range(ns):
        for t in range(nshat):
            if not live[s, t]:
                continue
            r = np.zeros(n_unknown)
            r[2], r[3 + s] = neg_log_post[s, t], 1.0
            rows.append(r)
            rhs.append(delta[s, t])
    a_mat, y = np.array(rows), np.array(rhs)
    sol, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
    resid = float(np.sqrt(np.mean((a_mat @ sol - y) ** 2)))
    return GastparFit(resid, float(sol[0]), float(sol[2]), float(sol[1]), sol[3:].copy())


@dataclass(frozen=True)
class VerifyReport:
    candidate_value: float
    global_min: float
    optimal: bool
    heuristic: bool = False


def candidate_pair(inst: Instance, candidate: Union[DetCode, RandomCode]) -> EndToEndPair:
    """End-to-end pair induced by a code."""
    return induced_endtoend(build_joint_from_code(inst, candidate), inst.p_s)


def verify_inverse_optimality(inst: Instance, candidate: Union[DetCode, RandomCode],
                              budget=None) -> VerifyReport:
    """Compare the candidate's cost with the best deterministic code.

    Randomized codes never beat the best deterministic one, so enumeration
    settles optimality. Over budget, the comparison uses alternating best
    responses and is flagged as heuristic.
    """
    if isinstance(candidate, DetCode):
        value = code_value(inst, candidate)
    else:
        value = expected_cost(inst, build_joint_from_code(inst, candidate))
    try:
        best = enumerate_optimal(inst, budget=budget).value
        heuristic = False
    except BudgetExceeded:
        init = candidate if isinstance(candidate, RandomCode) else det_code_to_random(candidate, inst)
        best = alternating_best_response(inst, init=init).value
        heuristic = True
    return VerifyReport(value, best, value <= best + VERIFY_TOL, heuristic)


def lossless_code(inst: Instance, rng=None) -> DetCode:
    """A code whose encoder and decoder are injective, drawn at random.

    Injective maps lose no information, so the induced pair meets
    I(S;Shat) = I(X;Y) for every f-information; with a full-support channel
    the end-to-end kernel has full support too. Needs nS <= nX and nY <= nShat.
    """
    ns, nx, ny, nshat = inst.shape
    if ns > nx or ny > nshat:
        raise ValueError("an injective code needs nS <= nX and nY <= nShat")
    rng = np.random.default_rng(rng)
    return DetCode(rng.permutation(nx)[:ns], rng.permutation(nshat)[:ny])
