"""JSON formats for instances, codes and solutions.

Output is deterministic: object keys are sorted and floats are written with
17 significant digits, so equal inputs give byte-identical files. Tensors are
stored row-major in the index order (s, x, y, shat).
"""
from __future__ import annotations

import json
import math
import sys

import numpy as np

from .core import DetCode, EndToEndPair, Instance, InvalidInstance, SeparableCost


def _encode(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    elif isinstance(obj, np.ndarray):
        _encode(obj.tolist(), out)
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no NaN or infinity
        out.append(format(v, ".17g") if math.isfinite(v) else "null")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    parts = []
    _encode(obj, parts)
    return "".join(parts)


def read_json(path):
    """Parse JSON from a file, or from standard input when path is "-"."""
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidInstance(f"malformed JSON in {path}: {exc}") from exc


def _vector(obj, key, n=None):
    try:
        v = np.asarray(obj[key], dtype=float)
    except KeyError:
        raise InvalidInstance(f'missing field "{key}"') from None
    except (TypeError, ValueError):
        raise InvalidInstance(f'field "{key}" must be numeric') from None
    if n is not None and v.size != n:
        raise InvalidInstance(f'field "{key}" must have {n} entries')
    return v


def _count(obj, key):
    v = obj.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise InvalidInstance(f'field "{key}" must be a positive integer')
    return v


def instance_to_json(inst: Instance) -> dict:
    ns, nx, ny, nshat = inst.shape
    out = {"nS": ns, "nX": nx, "nY": ny, "nShat": nshat,
           "sValues": inst.s_values, "xValues": inst.x_values, "yValues": inst.y_values,
           "shatValues": inst.shat_values, "pS": inst.p_s, "channel": inst.channel}
    if inst.separable is not None:
        sep = inst.separable
        block = {"delta": sep.delta, "rho": sep.rho}
        if sep.tau_prime is not None:
            block["tauPrime"] = sep.tau_prime
            block["kCross"] = sep.k_cross
        out["separable"] = block
    else:
        out["cost"] = inst.cost.ravel()
    return out


def instance_from_json(obj) -> Instance:
    if not isinstance(obj, dict):
        raise InvalidInstance("instance JSON must be an object")
    ns, nx, ny, nshat = (_count(obj, k) for k in ("nS", "nX", "nY", "nShat"))
    p_s = _vector(obj, "pS", ns)
    channel = _vector(obj, "channel", nx * ny).reshape(nx, ny)
    labels = {}
    for key, name, n in (("sValues", "s_values", ns), ("xValues", "x_values", nx),
                         ("yValues", "y_values", ny), ("shatValues", "shat_values", nshat)):
        if key in obj:
            labels[name] = _vector(obj, key, n)
    if ("cost" in obj) == ("separable" in obj):
        raise InvalidInstance('give exactly one of "cost" and "separable"')
    if "cost" in obj:
        cost = _vector(obj, "cost", ns * nx * ny * nshat).reshape(ns, nx, ny, nshat)
        return Instance(p_s, channel, cost=cost, **labels)
    block = obj["separable"]
    if not isinstance(block, dict):
        raise InvalidInstance('"separable" must be an object')
    delta = _vector(block, "delta", ns * nshat).reshape(ns, nshat)
    rho = _vector(block, "rho", nx)
    tau = _vector(block, "tauPrime", ns) if "tauPrime" in block else None
    k = float(block.get("kCross", 0.0))
    return Instance(p_s, channel, separable=SeparableCost(delta, rho, tau, k), **labels)


def code_to_json(code: DetCode) -> dict:
    return {"f": list(code.f), "g": list(code.g)}


def code_from_json(obj) -> DetCode:
    try:
        return DetCode(obj["f"], obj["g"])
    except (KeyError, TypeError, ValueError):
        raise InvalidInstance('code JSON needs integer lists "f" and "g"') from None


def multipliers_to_json(mult) -> dict:
    out = {"lambda": mult.lam, "muA": mult.mu_a, "muB": mult.mu_b, "nuA": mult.nu_a,
           "nuB": mult.nu_b}
    for key, name in (("lambdaA", "lambda_a"), ("lambdaB", "lambda_b"), ("lambdaP", "lambda_p")):
        v = getattr(mult, name)
        if v is not None:
            out[key] = v
    if mult.nu is not None:
        out["nu"] = mult.nu.ravel()
    return out


def solution_to_json(sol) -> dict:
    """Report of a relaxation solve."""
    out = {"value": sol.value, "dualValue": sol.dual_value, "a": sol.pair.a, "b": sol.pair.b,
           "lambda": sol.lam, "kkt": sol.kkt.as_dict(), "status": sol.status,
           "dpiSlack": sol.dpi_slack, "multipliers": multipliers_to_json(sol.mult)}
    if sol.q is not None:
        out["q"] = sol.q.ravel()
    return out


def pair_from_json(obj, inst: Instance) -> EndToEndPair:
    ns, nx, _, nshat = inst.shape
    return EndToEndPair(_vector(obj, "a", ns * nshat).reshape(ns, nshat), _vector(obj, "b", nx))
