"""Global and local solutions of the team problem over codes.

The objective is bilinear in the encoder and decoder kernels, so a
deterministic code attains the optimum; enumeration over deterministic
encoders with a per-output best decoder is exhaustive.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

import numpy as np

from .core import DetCode, Instance, RandomCode, code_value

DEFAULT_BUDGET = 10 ** 8
TIE_TOL = 1e-12
_CHUNK_ENTRIES = 2_000_000


class BudgetExceeded(RuntimeError):
    def __init__(self, count, budget):
        super().__init__(f"enumeration needs {count} codes, budget is {budget}")
        self.count = count
        self.budget = budget


def enumeration_budget():
    env = os.environ.get("TEAMRELAX_BUDGET")
    return int(float(env)) if env else DEFAULT_BUDGET


@dataclass
class ExactResult:
    best_code: DetCode
    value: float
    evaluated: int
    table: Optional[list] = None
    heuristic: bool = False
    history: list = field(default_factory=list)


def code_count(inst: Instance):
    ns, nx, ny, nshat = inst.shape
    return nx ** ns * nshat ** ny


def _decoder_costs(inst, enc):
    """C(y, shat): cost of answering shat at output y, for an encoder kernel (nS, nX)."""
    ps = inst.p_s
    if inst.cost is None and "cost_tensor" not in inst.__dict__:
        # mass of (s, y) reaching the decoder; only the distortion depends on shat
        m_sy = (ps[:, None] * enc) @ inst.channel
        return m_sy.T @ inst.separable.delta
    return np.einsum("s,sx,xy,sxyt->yt", ps, enc, inst.channel, inst.cost_tensor, optimize=True)


def _encoder_costs(inst, dec):
    """C(s, x): expected cost of sending x for source s, given a decoder kernel (nY, nShat)."""
    ps = inst.p_s
    if inst.cost is None and "cost_tensor" not in inst.__dict__:
        sep = inst.separable
        # sum_y W(x,y) sum_shat dec(y,shat) delta(s,shat)
        dist = (inst.channel @ dec) @ sep.delta.T          # (x, s)
        local = sep.rho[None, :] + sep.cross_term(inst.s_values, inst.x_values)
        return ps[:, None] * (dist.T + local)
    return np.einsum("s,xy,yt,sxyt->sx", ps, inst.channel, dec, inst.cost_tensor, optimize=True)


def _first_argmin(costs, axis):
    """Smallest index within TIE_TOL of the minimum along ``axis``."""
    low = costs.min(axis=axis, keepdims=True)
    return np.argmax(costs <= low + TIE_TOL, axis=axis)


def enumerate_optimal(inst: Instance, keep_table=False, budget=None) -> ExactResult:
    """Minimum expected cost over all deterministic codes.

    Encoders are visited in lexicographic order; for each one the best decoder
    is read off per output symbol, which is exact because the cost separates
    over y once the encoder is fixed. Ties go to the lexicographically smallest
    (f, g).
    """
    budget = enumeration_budget() if budget is None else budget
    ns, nx, ny, nshat = inst.shape
    count = code_count(inst)
    if count > budget:
        raise BudgetExceeded(count, budget)
    kappa = inst.cost_tensor
    n_enc = nx ** ns
    chunk = max(1, _CHUNK_ENTRIES // (ns * ny * nshat))
    best_val, best_f, best_g = np.inf, None, None
    table = [] if keep_table else None
    s_idx = np.arange(ns)
    for start in range(0, n_enc, chunk):
        ids = np.arange(start, min(start + chunk, n_enc))
        encs = np.stack(np.unravel_index(ids, (nx,) * ns), axis=1)      # (m, s)
        w = inst.channel[encs]                                           # (m, s, y)
        k = kappa[s_idx[None, :], encs]                                  # (m, s, y, t)
        c = np.einsum("s,msy,msyt->myt", inst.p_s, w, k)
        g = _first_argmin(c, axis=2)                                     # (m, y)
        vals = np.take_along_axis(c, g[..., None], axis=2)[..., 0].sum(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val - TIE_TOL:
            best_val, best_f, best_g = vals[i], encs[i], g[i]
        if keep_table:
            for m in range(len(ids)):
                for gg in product(range(nshat), repeat=ny):
                    v = float(c[m, np.arange(ny), list(gg)].sum())
                    table.append((DetCode(encs[m], gg), v))
    code = DetCode(best_f, best_g)
    return ExactResult(code, code_value(inst, code), count, table)


def _best_encoder(inst, dec):
    c = _encoder_costs(inst, dec)
    return _first_argmin(c, axis=1)


def _best_decoder(inst, enc):
    c = _decoder_costs(inst, enc)
    return _first_argmin(c, axis=1)


def _kernel(idx, n):
    out = np.zeros((len(idx), n))
    out[np.arange(len(idx)), idx] = 1.0
    return out


def _random_value(inst, enc, dec):
    return float(np.sum(_encoder_costs(inst, dec) * enc))


def _decoder_matched_value(inst, f):
    enc = _kernel(f, inst.n_x)
    g = _best_decoder(inst, enc)
    return _random_value(inst, enc, _kernel(g, inst.n_shat)), g


def _polish(inst, f, value):
    """Single-symbol encoder moves, each followed by the matched decoder.

    Returns the first improving neighbour, or None at a local optimum.
    """
    for s in range(inst.n_s):
        for x in range(inst.n_x):
            if x == f[s]:
                continue
            trial = f.copy()
            trial[s] = x
            v, g = _decoder_matched_value(inst, trial)
            if v < value - TIE_TOL:
                return trial, g, v
    return None


def _descend(inst, enc, dec, max_sweeps, polish):
    history = [_random_value(inst, enc, dec)]
    f = g = None
    for _ in range(max_sweeps):
        f = _best_encoder(inst, dec)
        enc = _kernel(f, inst.n_x)
        g = _best_decoder(inst, enc)
        dec = _kernel(g, inst.n_shat)
        value = _random_value(inst, enc, dec)
        improved = value < history[-1] - TIE_TOL
        history.append(min(value, history[-1]))
        if not improved:
            move = _polish(inst, f, history[-1]) if polish else None
            if move is None:
                break
            f, g, value = move
            dec = _kernel(g, inst.n_shat)
            history.append(value)
    return DetCode(f, g), history


def alternating_best_response(inst: Instance, init: Optional[RandomCode] = None,
                              restarts=10, seed=0, max_sweeps=1000, polish=True) -> ExactResult:
    """Coordinate descent between encoder and decoder best responses.

    Each block update jumps to a deterministic best response. Runs from
    ``init`` (if given) and from ``restarts`` random deterministic codes and
    keeps the lowest value, tie-broken lexicographically. With ``polish``, a
    converged pair is further improved by single-symbol encoder changes (each
    with its matched decoder) before the run ends.
    """
    rng = np.random.default_rng(seed)
    starts = []
    if init is not None:
        starts.append((np.asarray(init.encoder, float), np.asarray(init.decoder, float)))
    for _ in range(restarts):
        # random encoder paired with its best decoder
        enc = _kernel(rng.integers(inst.n_x, size=inst.n_s), inst.n_x)
        starts.append((enc, _kernel(_best_decoder(inst, enc), inst.n_shat)))
    if not starts:
        raise ValueError("need an initial code or at least one restart")
    best, best_val, best_hist = None, np.inf, []
    for enc, dec in starts:
        code, hist = _descend(inst, enc, dec, max_sweeps, polish)
        val = code_value(inst, code)
        better = val < best_val - TIE_TOL
        tie = abs(val - best_val) <= TIE_TOL and (code.f, code.g) < (best.f, best.g)
        if better or tie:
            best, best_val, best_hist = code, val, hist
    return ExactResult(best, best_val, len(starts), heuristic=True, history=best_hist)
