"""Problem instances, codes and joint distributions over S x X x Y x Shat.

Every joint distribution is a dense array indexed ``(s, x, y, shat)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

SIMPLEX_TOL = 1e-12


class InvalidInstance(ValueError):
    """Raised when an instance, code or distribution violates its invariants."""


def _check_simplex(p, name, tol=SIMPLEX_TOL, axis=-1):
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)):
        raise InvalidInstance(f"{name} has non-finite entries")
    if np.any(p < -tol):
        raise InvalidInstance(f"{name} has negative entries")
    sums = p.sum(axis=axis)
    if np.any(np.abs(sums - 1.0) > tol * max(1, p.shape[axis])):
        raise InvalidInstance(f"{name} does not sum to one (max error "
                              f"{np.max(np.abs(sums - 1.0)):.3e})")
    return np.clip(p, 0.0, None)


def _labels(values, n, name):
    if values is None:
        return np.arange(n, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (n,):
        raise InvalidInstance(f"{name} must have length {n}")
    return values


def conditional_rows(joint):
    """Row-normalize a nonnegative matrix; zero rows become uniform."""
    joint = np.asarray(joint, dtype=float)
    mass = joint.sum(axis=1, keepdims=True)
    out = np.full_like(joint, 1.0 / joint.shape[1])
    np.divide(joint, mass, out=out, where=mass > 0)
    return out


@dataclass(frozen=True)
class SeparableCost:
    """Cost of the form delta(s, shat) + rho(x) + tau(x, s).

    The cross term is ``tau(x, s) = k_cross * sign(x) * sign(s) * sqrt(rho(x) tau_prime(s))``
    with signs taken from the instance labels, so ``rho = k0 x**2``,
    ``tau_prime = s**2 / k0`` and ``k_cross = s01`` reproduce ``s01 * x * s``.
    """

    delta: np.ndarray
    rho: np.ndarray
    tau_prime: Optional[np.ndarray] = None
    k_cross: float = 0.0

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        rho = np.asarray(self.rho, dtype=float)
        if delta.ndim != 2 or rho.ndim != 1:
            raise InvalidInstance("delta must be a matrix and rho a vector")
        if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(rho))):
            raise InvalidInstance("separable cost entries must be finite")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "rho", rho)
        if self.tau_prime is not None:
            tp = np.asarray(self.tau_prime, dtype=float)
            if tp.shape != (delta.shape[0],):
                raise InvalidInstance("tau_prime must have length nS")
            if np.any(rho < 0) or np.any(tp < 0):
                raise InvalidInstance("rho and tau_prime must be >= 0 with a cross term")
            object.__setattr__(self, "tau_prime", tp)
        object.__setattr__(self, "k_cross", float(self.k_cross))

    @property
    def has_cross(self):
        return self.tau_prime is not None and self.k_cross != 0.0

    def alpha(self, p_s):
        """Cauchy-Schwarz coefficient |k| sqrt(E tau'(S))."""
        if not self.has_cross:
            return 0.0
        return abs(self.k_cross) * float(np.sqrt(np.dot(self.tau_prime, p_s)))

    def cross_term(self, s_values, x_values):
        """Matrix tau(s, x) (indexed s first)."""
        if not self.has_cross:
            return np.zeros((self.delta.shape[0], self.rho.shape[0]))
        sign = np.sign(s_values)[:, None] * np.sign(x_values)[None, :]
        return self.k_cross * sign * np.sqrt(np.outer(self.tau_prime, self.rho))

    def expand(self, s_values, x_values, n_y):
        """Full cost tensor indexed (s, x, y, shat)."""
        ns, nshat = self.delta.shape
        nx = self.rho.shape[0]
        tensor = (self.delta[:, None, None, :]
                  + self.rho[None, :, None, None]
                  + self.cross_term(s_values, x_values)[:, :, None, None])
        return np.broadcast_to(tensor, (ns, nx, n_y, nshat)).copy()


@dataclass(frozen=True, eq=False)
class Instance:
    """Finite-alphabet problem datum: source, channel and cost.

    Exactly one of ``cost`` (tensor indexed ``(s, x, y, shat)``) and
    ``separable`` must be given. The full tensor of a separable instance is
    built lazily on first access of :attr:`cost_tensor`.
    """

    p_s: np.ndarray
    channel: np.ndarray
    cost: Optional[np.ndarray] = None
    separable: Optional[SeparableCost] = None
    s_values: Optional[np.ndarray] = None
    x_values: Optional[np.ndarray] = None
    y_values: Optional[np.ndarray] = None
    shat_values: Optional[np.ndarray] = None
    n_shat_hint: Optional[int] = field(default=None, repr=False)

    def __post_init__(self):
        p_s = _check_simplex(self.p_s, "p_s")
        channel = np.asarray(self.channel, dtype=float)
        if p_s.ndim != 1 or channel.ndim != 2:
            raise InvalidInstance("p_s must be a vector and channel a matrix")
        channel = _check_simplex(channel, "channel rows")
        object.__setattr__(self, "p_s", p_s)
        object.__setattr__(self, "channel", channel)
        ns = p_s.shape[0]
        nx, ny = channel.shape
        if (self.cost is None) == (self.separable is None):
            raise InvalidInstance("give exactly one of cost and separable")
        if self.cost is not None:
            cost = np.asarray(self.cost, dtype=float)
            if cost.ndim != 4 or cost.shape[:3] != (ns, nx, ny):
                raise InvalidInstance(f"cost must have shape ({ns}, {nx}, {ny}, nShat)")
            if not np.all(np.isfinite(cost)):
                raise InvalidInstance("cost entries must be finite")
            object.__setattr__(self, "cost", cost)
            nshat = cost.shape[3]
        else:
            sep = self.separable
            if sep.delta.shape[0] != ns or sep.rho.shape[0] != nx:
                raise InvalidInstance("separable cost dimensions do not match p_s/channel")
            nshat = sep.delta.shape[1]
        object.__setattr__(self, "s_values", _labels(self.s_values, ns, "s_values"))
        object.__setattr__(self, "x_values", _labels(self.x_values, nx, "x_values"))
        object.__setattr__(self, "y_values", _labels(self.y_values, ny, "y_values"))
        object.__setattr__(self, "shat_values", _labels(self.shat_values, nshat, "shat_values"))

    @property
    def shape(self):
        return (self.p_s.shape[0], self.channel.shape[0], self.channel.shape[1],
                self.shat_values.shape[0])

    n_s = property(lambda self: self.shape[0])
    n_x = property(lambda self: self.shape[1])
    n_y = property(lambda self: self.shape[2])
    n_shat = property(lambda self: self.shape[3])

    @cached_property
    def cost_tensor(self):
        if self.cost is not None:
            return self.cost
        return self.separable.expand(self.s_values, self.x_values, self.n_y)

    def with_cost(self, cost=None, separable=None):
        """Copy of this instance with a different cost."""
        return Instance(self.p_s, self.channel, cost=cost, separable=separable,
                        s_values=self.s_values, x_values=self.x_values,
                        y_values=self.y_values, shat_values=self.shat_values)


@dataclass(frozen=True)
class DetCode:
    """Deterministic encoder ``f: S -> X`` and decoder ``g: Y -> Shat`` as index arrays."""

    f: tuple
    g: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(int(v) for v in self.f))
        object.__setattr__(self, "g", tuple(int(v) for v in self.g))

    def validate(self, inst):
        ns, nx, ny, nshat = inst.shape
        if len(self.f) != ns or len(self.g) != ny:
            raise InvalidInstance("code length does not match the instance")
        if min(self.f) < 0 or max(self.f) >= nx or min(self.g) < 0 or max(self.g) >= nshat:
            raise InvalidInstance("code entries out of range")


@dataclass(frozen=True)
class RandomCode:
    """Stochastic encoder Q(x|s) (nS x nX) and decoder Q(shat|y) (nY x nShat)."""

    encoder: np.ndarray
    decoder: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "encoder", _check_simplex(self.encoder, "encoder rows"))
        object.__setattr__(self, "decoder", _check_simplex(self.decoder, "decoder rows"))


@dataclass(frozen=True)
class EndToEndPair:
    """End-to-end kernel a(shat|s) (nS x nShat) and channel input law b(x)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a", _check_simplex(self.a, "a rows", tol=1e-10))
        object.__setattr__(self, "b", _check_simplex(self.b, "b", tol=1e-10))


@dataclass(frozen=True)
class MembershipReport:
    l1_residual: float
    in_q: bool


@dataclass(frozen=True)
class Witness:
    q1: Optional[np.ndarray]
    q2: Optional[np.ndarray]
    t: float
    residual: float
    status: str = "ok"


@dataclass(frozen=True)
class SepReport:
    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    residual: float


def det_code_to_random(code: DetCode, inst: Instance) -> RandomCode:
    """Lift a deterministic code to 0/1 kernels."""
    code.validate(inst)
    enc = np.zeros((inst.n_s, inst.n_x))
    enc[np.arange(inst.n_s), code.f] = 1.0
    dec = np.zeros((inst.n_y, inst.n_shat))
    dec[np.arange(inst.n_y), code.g] = 1.0
    return RandomCode(enc, dec)


def build_joint_from_code(inst: Instance, code) -> np.ndarray:
    """Q(s,x,y,shat) = P_S(s) Q(x|s) P(y|x) Q(shat|y)."""
    if isinstance(code, DetCode):
        code = det_code_to_random(code, inst)
    ns, nx, ny, nshat = inst.shape
    if code.encoder.shape != (ns, nx) or code.decoder.shape != (ny, nshat):
        raise InvalidInstance("code kernels do not match the instance dimensions")
    return np.einsum("s,sx,xy,yt->sxyt", inst.p_s, code.encoder, inst.channel, code.decoder)


def product_joint(inst: Instance, pair: EndToEndPair) -> np.ndarray:
    """Q(z) = a(shat|s) P_S(s) b(x) P(y|x); feasible for the relaxed program."""
    return np.einsum("st,s,x,xy->sxyt", pair.a, inst.p_s, pair.b, inst.channel)


def check_joint(q, tol=1e-10):
    q = np.asarray(q, dtype=float)
    if q.ndim != 4:
        raise InvalidInstance("joint must be indexed (s, x, y, shat)")
    if np.any(q < -tol) or abs(q.sum() - 1.0) > tol:
        raise InvalidInstance("joint must be nonnegative with unit mass")
    return np.clip(q, 0.0, None)


def induced_endtoend(q, p_s) -> EndToEndPair:
    """End-to-end pair (Q(shat|s), Q(x)) of a joint distribution.

    Rows of ``a`` with ``p_s(s) = 0`` are uniform.
    """
    q = check_joint(q)
    p_s = np.asarray(p_s, dtype=float)
    q_ss = q.sum(axis=(1, 2))
    if np.max(np.abs(q_ss.sum(axis=1) - p_s)) > 1e-8:
        raise InvalidInstance("S-marginal of the joint is inconsistent with p_s")
    a = np.full_like(q_ss, 1.0 / q_ss.shape[1])
    pos = p_s > 0
    a[pos] = q_ss[pos] / p_s[pos, None]
    a = a / a.sum(axis=1, keepdims=True)
    b = q.sum(axis=(0, 2, 3))
    return EndToEndPair(a, b / b.sum())


def expected_cost(inst: Instance, q) -> float:
    """<kappa, Q>."""
    q = np.asarray(q, dtype=float)
    if q.shape != inst.shape:
        raise InvalidInstance(f"joint shape {q.shape} does not match {inst.shape}")
    if inst.cost is None and "cost_tensor" not in inst.__dict__:
        sep = inst.separable
        q_ss = q.sum(axis=(1, 2))
        q_sx = q.sum(axis=(2, 3))
        value = np.sum(sep.delta * q_ss) + np.dot(sep.rho, q_sx.sum(axis=0))
        if sep.has_cross:
            value += np.sum(sep.cross_term(inst.s_values, inst.x_values) * q_sx)
        return float(value)
    return float(np.tensordot(inst.cost_tensor, q, axes=4))


def code_value(inst: Instance, code: DetCode) -> float:
    """Direct sum_s sum_y P_S(s) P(y|f(s)) kappa(s, f(s), y, g(y))."""
    code.validate(inst)
    f = np.asarray(code.f)
    g = np.asarray(code.g)
    w = inst.channel[f]                     # (s, y)
    s_idx = np.arange(inst.n_s)[:, None]
    y_idx = np.arange(inst.n_y)[None, :]
    if inst.cost is None and "cost_tensor" not in inst.__dict__:
        sep = inst.separable
        cross = sep.cross_term(inst.s_values, inst.x_values)[np.arange(inst.n_s), f]
        kappa = sep.delta[s_idx, g[None, :]] + (sep.rho[f] + cross)[:, None]
    else:
        kappa = inst.cost_tensor[s_idx, f[:, None], y_idx, g[None, :]]
    return float(np.sum(inst.p_s[:, None] * w * kappa))


def extract_kernels(q):
    """Kernels Q(x|s) and Q(shat|y) of a joint, uniform on zero-mass rows."""
    q = np.asarray(q, dtype=float)
    return conditional_rows(q.sum(axis=(2, 3))), conditional_rows(q.sum(axis=(0, 1)))


def membership_check(inst: Instance, q, tol: float = 1e-10) -> MembershipReport:
    """Distance of ``q`` from the factorized set.

    The kernels are read off ``q`` and the joint is rebuilt with the instance's
    source and channel; ``l1_residual`` is the L1 distance between the two.
    """
    q = check_joint(q)
    enc, dec = extract_kernels(q)
    rebuilt = build_joint_from_code(inst, RandomCode(enc, dec))
    residual = float(np.abs(q - rebuilt).sum())
    q_s = q.sum(axis=(1, 2, 3))
    q_xy = q.sum(axis=(0, 3))
    q_x = q_xy.sum(axis=1)
    pos = q_x > 0
    channel_err = 0.0
    if np.any(pos):
        channel_err = float(np.max(np.abs(q_xy[pos] / q_x[pos, None] - inst.channel[pos])))
    ok = (residual <= tol and np.max(np.abs(q_s - inst.p_s)) <= tol and channel_err <= tol)
    return MembershipReport(residual, bool(ok))


def nonconvexity_witness(inst: Instance) -> Witness:
    """Two members of the factorized set whose midpoint lies outside it.

    Uses the identity-labeled code ``f(s) = s mod nX, g(y) = y mod nShat`` and
    the code with both maps index-reversed.
    """
    ns, nx, ny, nshat = inst.shape
    if nx < 2 or nshat < 2:
        return Witness(None, None, 0.5, 0.0, status="not_applicable")
    f1 = np.arange(ns) % nx
    g1 = np.arange(ny) % nshat
    c1 = DetCode(f1, g1)
    c2 = DetCode(nx - 1 - f1, nshat - 1 - g1)
    q1 = build_joint_from_code(inst, c1)
    q2 = build_joint_from_code(inst, c2)
    mid = 0.5 * q1 + 0.5 * q2
    return Witness(q1, q2, 0.5, membership_check(inst, mid).l1_residual)


def separability_projection(inst: Instance) -> SepReport:
    """Least-squares split of kappa into f1(x) + f2(s, shat) + f3(x, y).

    Functions of ``(s, shat)`` and of ``(x, y)`` meet only in the constants
    under the uniform inner product, so the projection is the two-way
    marginal-mean decomposition.
    """
    kappa = inst.cost_tensor
    mean = kappa.mean()
    f2 = kappa.mean(axis=(1, 2))                     # (s, shat)
    g_xy = kappa.mean(axis=(0, 3)) - mean            # (x, y)
    f1 = g_xy.mean(axis=1)
    f3 = g_xy - f1[:, None]
    fitted = f1[None, :, None, None] + f2[:, None, None, :] + f3[None, :, :, None]
    residual = float(np.linalg.norm(kappa - fitted))
    return SepReport(f1, f2, f3, residual)
