"""Independent reference computations used to freeze expected values.

Nothing here imports the package's solvers: the relaxation is written as a
conic program for cvxpy and the exact value comes from a plain loop over
all deterministic codes.
"""
import itertools

import numpy as np


def random_instance_arrays(seed, max_alphabet=3, full_tensor=True):
    rng = np.random.default_rng(seed)
    ns, nx, ny, nt = rng.integers(2, max_alphabet + 1, size=4)
    p_s = rng.dirichlet(np.ones(ns))
    channel = rng.dirichlet(np.ones(ny), size=nx)
    if full_tensor:
        return p_s, channel, rng.random((ns, nx, ny, nt))
    return p_s, channel, rng.random((ns, nt)), rng.random(nx)


def brute_force_value(p_s, channel, cost):
    ns, nx, ny, nt = cost.shape
    best = np.inf
    for f in itertools.product(range(nx), repeat=ns):
        for g in itertools.product(range(nt), repeat=ny):
            total = 0.0
            for s in range(ns):
                for y in range(ny):
                    total += p_s[s] * channel[f[s], y] * cost[s, f[s], y, g[y]]
            best = min(best, total)
    return best


def cvx_relaxation_value(p_s, channel, cost):
    """min E[kappa] over joints with the right source and channel and I(S;Shat) <= I(X;Y)."""
    import cvxpy as cp

    ns, nx, ny, nt = cost.shape
    n = cost.size
    idx = np.arange(n).reshape(cost.shape)
    q = cp.Variable(n, nonneg=True)
    sel_st = np.zeros((ns * nt, n))
    sel_x = np.zeros((nx, n))
    sel_xy = np.zeros((nx * ny, n))
    sel_s = np.zeros((ns, n))
    for s in range(ns):
        sel_s[s, idx[s].ravel()] = 1
        for t in range(nt):
            sel_st[s * nt + t, idx[s, :, :, t].ravel()] = 1
    for x in range(nx):
        sel_x[x, idx[:, x].ravel()] = 1
        for y in range(ny):
            sel_xy[x * ny + y, idx[:, x, y, :].ravel()] = 1
    m = sel_st @ q
    b = sel_x @ q
    q_shat = np.kron(np.ones((1, ns)), np.eye(nt)) @ m
    product = cp.hstack([p_s[s] * q_shat for s in range(ns)])
    i_sshat = cp.sum(cp.rel_entr(m, product))
    neg_h = [float(np.sum(w[w > 0] * np.log(w[w > 0]))) for w in channel]
    i_xy = cp.sum(cp.entr(channel.T @ b)) + sum(b[x] * neg_h[x] for x in range(nx))
    cons = [sel_s @ q == p_s,
            sel_xy @ q == cp.hstack([channel[x, y] * b[x] for x in range(nx) for y in range(ny)]),
            i_sshat <= i_xy]
    prob = cp.Problem(cp.Minimize(cost.ravel() @ q), cons)
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def binary_entropy(p):
    return float(-p * np.log(p) - (1 - p) * np.log(1 - p))
