"""Independent reference solvers used only by the tests.

Everything here goes through cvxpy or scipy rather than the package's own
proxes and splitting schemes.
"""
import cvxpy as cp
import numpy as np


TIGHT = dict(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)


def _solve(problem):
    problem.solve(solver=cp.CLARABEL, **TIGHT)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"oracle failed: {problem.status}")


def prox_oracle(kind, u, step):
    """``argmin_x f(x) + ||u - x||^2 / (2 step)`` as a conic program."""
    u = np.asarray(u, dtype=float)
    x = cp.Variable(u.shape, symmetric=kind == "PsdTrace") if u.ndim == 2 else cp.Variable(u.shape)
    constraints = []
    if kind == "L1":
        f = cp.norm1(x) if u.ndim == 1 else cp.sum(cp.abs(x))
    elif kind == "Linf":
        f = cp.norm_inf(x) if u.ndim == 1 else cp.max(cp.abs(x))
    elif kind == "Schatten1":
        f = cp.normNuc(x)
    elif kind == "SchattenInf":
        f = cp.sigma_max(x)
    elif kind == "RowL12":
        f = cp.sum(cp.norm(x, 2, axis=1))
    elif kind == "PsdTrace":
        f = cp.trace(x)
        constraints.append(x >> 0)
    else:
        raise ValueError(kind)
    _solve(cp.Problem(cp.Minimize(f + cp.sum_squares(x - u) / (2 * step)), constraints))
    return np.asarray(x.value)


def l1_ball_projection(u, radius):
    x = cp.Variable(len(u))
    _solve(cp.Problem(cp.Minimize(cp.sum_squares(x - u)), [cp.norm1(x) <= radius]))
    return x.value


def polar_distance_qp(g, signs):
    """``min ||g - v||^2`` over ``v = t * w`` with ``w`` in the l1 subdifferential at ``signs``.

    Written in the homogenized variables ``v`` and ``t``: ``v_i = t s_i`` on
    the support, ``|v_i| <= t`` off it.
    """
    g = np.asarray(g, dtype=float)
    signs = np.asarray(signs)
    on = signs != 0
    v = cp.Variable(g.size)
    t = cp.Variable(nonneg=True)
    cons = []
    if on.any():
        cons.append(v[on] == t * signs[on])
    if (~on).any():
        cons.append(cp.abs(v[~on]) <= t)
    prob = cp.Problem(cp.Minimize(cp.sum_squares(g - v)), cons)
    _solve(prob)
    return float(prob.value)


def l1_demix_oracle(z0, rotation, lam):
    """``min ||x||_1 + lam ||Q y||_1  s.t.  x + y = z0``; returns ``(x, y)``."""
    d = len(z0)
    x = cp.Variable(d)
    c = cp.Variable(d)
    _solve(
        cp.Problem(
            cp.Minimize(cp.norm1(x) + lam * cp.norm1(c)),
            [x + rotation.T @ c == z0],
        )
    )
    return x.value, rotation.T @ c.value


def nuclear_l1_oracle(Z0, lam):
    X = cp.Variable(Z0.shape)
    _solve(cp.Problem(cp.Minimize(cp.normNuc(X) + lam * cp.sum(cp.abs(Z0 - X)))))
    return X.value, Z0 - X.value
