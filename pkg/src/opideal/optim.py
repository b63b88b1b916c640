"""Small convex subproblems shared by the estimators.

Everything here is deterministic: linear programs go to HiGHS through
scipy, smooth p-norm problems use Newton's method (p >= 2) or BFGS.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize


def _pnorm(r, p):
    r = np.abs(r)
    if math.isinf(p):
        return r.max(initial=0.0)
    return float((r**p).sum() ** (1.0 / p))


def _solve_affine(C, d):
    """A particular solution and a null-space basis of C x = d, or None if infeasible."""
    C = np.atleast_2d(C)
    x0, *_ = np.linalg.lstsq(C, d, rcond=None)
    if np.linalg.norm(C @ x0 - d) > 1e-9 * (1.0 + np.linalg.norm(d)):
        return None
    return x0, null_space(C)


def _newton_pnorm(c, G, p, t0, max_iter=100):
    """Minimize sum |c + G t|^p for p >= 2 by damped Newton."""
    t = t0.copy()

    def f(t):
        return float((np.abs(c + G @ t) ** p).sum())

    ft = f(t)
    for _ in range(max_iter):
        r = c + G @ t
        ar = np.abs(r)
        g = p * G.T @ (np.sign(r) * ar ** (p - 1))
        H = p * (p - 1) * (G.T * ar ** (p - 2)) @ G
        H += 1e-14 * (np.trace(H) + 1e-300) * np.eye(len(t))
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = g
        dec = float(g @ step)
        if dec <= 1e-28 * max(ft, 1e-300):
            break
        s = 1.0
        while s > 1e-12:
            t_new = t - s * step
            f_new = f(t_new)
            if f_new <= ft - 1e-4 * s * dec:
                break
            s *= 0.5
        else:
            break
        if ft - f_new <= 1e-15 * ft:
            t, ft = t_new, f_new
            break
        t, ft = t_new, f_new
    return t


def _bfgs_pnorm(c, G, p, t0):
    def fg(t):
        r = c + G @ t
        ar = np.abs(r)
        return float((ar**p).sum()), p * G.T @ (np.sign(r) * ar ** (p - 1))

    res = minimize(fg, t0, jac=True, method="BFGS", options={"gtol": 1e-11, "maxiter": 2000})
    return res.x


def min_norm_affine(B, C, d, p: float):
    """argmin ||B x||_p subject to C x = d.

    Returns None when the constraint is infeasible.  The returned point
    satisfies the constraint up to least-squares accuracy by construction
    (it is parametrized as x0 + N t).
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    d = np.atleast_1d(np.asarray(d, dtype=float))
    aff = _solve_affine(C, d)
    if aff is None:
        return None
    x0, N = aff
    if N.shape[1] == 0:
        return x0
    c = B @ x0
    G = B @ N
    k = N.shape[1]
    if p == 2:
        t, *_ = np.linalg.lstsq(G, -c, rcond=None)
        return x0 + N @ t
    if p == 1 or math.isinf(p):
        rows = G.shape[0]
        if p == 1:
            # variables (t, s): min sum s, -s <= c + G t <= s
            cost = np.concatenate([np.zeros(k), np.ones(rows)])
            A_ub = np.block([[G, -np.eye(rows)], [-G, -np.eye(rows)]])
            bounds = [(None, None)] * k + [(0, None)] * rows
        else:
            cost = np.concatenate([np.zeros(k), [1.0]])
            A_ub = np.block([[G, -np.ones((rows, 1))], [-G, -np.ones((rows, 1))]])
            bounds = [(None, None)] * k + [(0, None)]
        b_ub = np.concatenate([-c, c])
        res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if res.status != 0:
            raise RuntimeError(f"LP failed: {res.message}")
        return x0 + N @ res.x[:k]
    t2, *_ = np.linalg.lstsq(G, -c, rcond=None)
    scale = _pnorm(c + G @ t2, p)
    if scale == 0:
        return x0 + N @ t2
    cs, ts = c / scale, t2 / scale
    if p >= 2:
        t = _newton_pnorm(cs, G, p, ts)
    else:
        t = _bfgs_pnorm(cs, G, p, ts)
    return x0 + N @ (t * scale)


def span_separator(C, d):
    """A vector orthogonal to the columns of C with positive inner product with d.

    Certifies that d is not a linear combination of the columns of C.
    """
    C = np.atleast_2d(C)
    coef, *_ = np.linalg.lstsq(C, d, rcond=None)
    return d - C @ coef


def domination_lp(M, s):
    """min sum w subject to M w >= s, w >= 0; returns (w, z, value).

    ``z`` holds the nonnegative dual multipliers of the rows.
    """
    I, J = M.shape
    res = linprog(np.ones(J), A_ub=-M, b_ub=-s, bounds=[(0, None)] * J, method="highs")
    if res.status != 0:
        raise RuntimeError(f"domination LP failed: {res.message}")
    z = np.maximum(-np.asarray(res.ineqlin.marginals), 0.0)
    return np.maximum(res.x, 0.0), z, float(res.fun)
