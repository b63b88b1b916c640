"""Upper estimates for the p-nuclear norms by alternating minimization.

A decomposition T = sum_k x'_k (x) y_k is stored as two matrices X (K x n,
rows x'_k) and Y (K x m, rows y_k) with Y^T X = T.  The "dp" flavor costs
||(x'_k)||^w_{p'} * ||(y_k)||_p and the "gp" flavor ||(x'_k)||_p * ||(y_k)||^w_{p'}.
With one factor fixed the other is a convex problem, solved with cvxpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from opideal.config import DEFAULT, RunConfig
from opideal.estimate import NormEstimate
from opideal.spaces import (
    VectorSequence,
    as_exponent,
    ball_vertices,
    dual_exponent,
    lp_norm,
    operator_norm_array,
    random_sphere,
    strong_p_norm,
    weak_p_norm,
)
from opideal.summing import OperatorMatrix, transpose

RECONSTRUCTION_TOL = 1e-6
_SOLVER = "CLARABEL"


@dataclass(frozen=True)
class Decomposition:
    """T = sum_k left_k (x) right_k with left in E' and right in F."""

    left: VectorSequence
    right: VectorSequence
    flavor: str  # "dp" or "gp"
    cost: float
    residual: float = 0.0

    def matrix(self) -> np.ndarray:
        return self.right.items.T @ self.left.items

    def to_dict(self) -> dict:
        return {"kind": "decomposition", "flavor": self.flavor, "cost": self.cost,
                "residual": self.residual, "left": self.left.to_dict(),
                "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> Decomposition:
        return cls(VectorSequence.from_dict(d["left"]), VectorSequence.from_dict(d["right"]),
                   d["flavor"], d["cost"], d.get("residual", 0.0))


# ---------------------------------------------------------------------------
# factor norms as cvxpy expressions


def _cp_norm(z, s):
    if math.isinf(s):
        return cp.norm(z, "inf")
    return cp.pnorm(z, s) if s != 1 else cp.norm1(z)


def _strong_expr(Z, s, p):
    """(sum_k ||row_k||_s^p)^(1/p)."""
    rows = cp.hstack([_cp_norm(Z[k, :], s) for k in range(Z.shape[0])])
    return _cp_norm(rows, p)


def _weak_expr(Z, w, q, pool=None):
    """sup over ||z||_w <= 1 of ||Z z||_q (exactly, or over ``pool`` rows of B_w)."""
    K, d = Z.shape
    if w == 1:
        return cp.max(cp.hstack([_cp_norm(Z[:, i], q) for i in range(d)]))
    if math.isinf(q):
        wd = dual_exponent(w)
        return cp.max(cp.hstack([_cp_norm(Z[k, :], wd) for k in range(K)]))
    if w == 2 and q == 2:
        return cp.sigma_max(Z)
    if pool is None:
        pool = ball_vertices(d, w, half=True)
    return cp.max(cp.hstack([_cp_norm(Z @ z, q) for z in pool]))


def _weak_is_exact_expr(w, q, d):
    verts = ball_vertices(d, w, half=True)
    return w == 1 or math.isinf(q) or (w == 2 and q == 2) or (verts is not None and len(verts) <= 256)


def _weak_value(Z, w, q, rng):
    """Weak norm of the rows of Z: the l_w -> l_q norm of Z."""
    lo, hi, x, exact = operator_norm_array(Z, w, q, rng=rng, restarts=8)
    return hi, x


# ---------------------------------------------------------------------------
# alternating descent


class _Alternator:
    """Compiled subproblems for one (shape, flavor) with the fixed factor as a parameter."""

    def __init__(self, A, K, flavor, u, v, p, rng):
        m, n = A.shape
        self.A, self.K, self.flavor, self.p = A, K, flavor, p
        self.rng = rng
        q = dual_exponent(p)
        self.q = q
        # left factor X (K x n) lives in E' = l_{u'}; right factor Y (K x m) in F = l_v
        if flavor == "dp":
            self.left_weak, self.right_weak = (u, q), None
            self.left_strong, self.right_strong = None, v
        else:
            self.left_weak, self.right_weak = None, (dual_exponent(v), q)
            self.left_strong, self.right_strong = dual_exponent(u), None
        self.pools = {"left": None, "right": None}
        for side in ("left", "right"):
            if not self.needs_pool(side):
                self._build(side)

    def _expr(self, Z, side):
        weak = self.left_weak if side == "left" else self.right_weak
        if weak is not None:
            w, q = weak
            return _weak_expr(Z, w, q, self.pools[side])
        s = self.left_strong if side == "left" else self.right_strong
        return _strong_expr(Z, s, self.p)

    def _build(self, side):
        m, n = self.A.shape
        K = self.K
        if side == "left":
            Z = cp.Variable((K, n))
            F = cp.Parameter((K, m))
            cons = [F.T @ Z == self.A]
        else:
            Z = cp.Variable((K, m))
            F = cp.Parameter((K, n))
            cons = [Z.T @ F == self.A]
        prob = cp.Problem(cp.Minimize(self._expr(Z, side)), cons)
        setattr(self, side, (prob, Z, F))

    def needs_pool(self, side) -> bool:
        weak = self.left_weak if side == "left" else self.right_weak
        if weak is None:
            return False
        d = self.A.shape[1] if side == "left" else self.A.shape[0]
        return not _weak_is_exact_expr(weak[0], weak[1], d)

    def factor_norm(self, Z, side) -> float:
        weak = self.left_weak if side == "left" else self.right_weak
        if weak is not None:
            return _weak_value(Z, weak[0], weak[1], self.rng)[0]
        s = self.left_strong if side == "left" else self.right_strong
        return float(lp_norm(lp_norm(Z, s, axis=1), self.p))

    def solve(self, side, fixed):
        """Optimal ``side`` factor given the other; None if the solver fails."""
        if self.needs_pool(side):
            return self._solve_cutting(side, fixed)
        prob, Z, F = getattr(self, side)
        F.value = fixed
        try:
            prob.solve(solver=_SOLVER)
        except cp.error.SolverError:
            return None
        if Z.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
            return None
        return np.array(Z.value)

    def rescale(self, X, Y):
        """Best per-term split x'_k -> e_k x'_k, y_k -> y_k / e_k (a convex problem in e)."""
        weak_side = "left" if self.left_weak is not None else "right"
        W, St = (X, Y) if weak_side == "left" else (Y, X)
        s_side = "right" if weak_side == "left" else "left"
        strong_exp = self.right_strong if s_side == "right" else self.left_strong
        srow = lp_norm(St, strong_exp, axis=1)
        live = srow > 1e-12 * max(srow.max(), 1e-300)
        if live.sum() == 0:
            return X, Y
        w, q = self.left_weak if weak_side == "left" else self.right_weak
        e = cp.Variable(int(live.sum()), pos=True)
        Wl = W[live]
        pool = self.pools[weak_side]
        if pool is None and not _weak_is_exact_expr(w, q, W.shape[1]):
            return X, Y
        obj = _weak_expr(cp.diag(e) @ Wl, w, q, pool)
        cons = [cp.sum(cp.multiply(srow[live] ** self.p, cp.power(e, -self.p))) <= 1]
        prob = cp.Problem(cp.Minimize(obj), cons)
        try:
            prob.solve(solver=_SOLVER)
        except cp.error.SolverError:
            return X, Y
        if e.value is None:
            return X, Y
        ev = np.ones(len(W))
        ev[live] = np.maximum(np.asarray(e.value), 1e-12)
        Wn, Sn = W * ev[:, None], St / ev[:, None]
        Wn[~live] = 0.0
        return (Wn, Sn) if weak_side == "left" else (Sn, Wn)

    def _solve_cutting(self, side, fixed):
        # weak norm with no finite description: grow a pool of extreme points
        w, q = self.left_weak if side == "left" else self.right_weak
        d = self.A.shape[1] if side == "left" else self.A.shape[0]
        pool = self.pools[side]
        if pool is None:
            pool = np.vstack([np.eye(d), random_sphere(self.rng, 2 * d, d, w)])
        Z = cp.Variable((self.K, d))
        cons = [fixed.T @ Z == self.A] if side == "left" else [Z.T @ fixed == self.A]
        sol = None
        for _ in range(12):
            prob = cp.Problem(cp.Minimize(_weak_expr(Z, w, q, pool)), cons)
            try:
                prob.solve(solver=_SOLVER)
            except cp.error.SolverError:
                break
            if Z.value is None:
                break
            sol = np.array(Z.value)
            val, x = _weak_value(sol, w, q, self.rng)
            if val <= prob.value * (1 + 1e-5):
                break
            pool = np.vstack([pool, x])
        self.pools[side] = pool
        return sol


def _initial(A, K, rng, kind):
    m, n = A.shape
    if kind == 0:
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        r = min(K, int((s > 1e-12 * s[0]).sum()))
        X = np.zeros((K, n))
        Y = np.zeros((K, m))
        X[:r] = np.sqrt(s[:r])[:, None] * Vt[:r]
        Y[:r] = np.sqrt(s[:r])[:, None] * U.T[:r]
        if K > r:
            X[r:] = 1e-3 * rng.standard_normal((K - r, n))
        return X, Y
    X = rng.standard_normal((K, n))
    Y, *_ = np.linalg.lstsq(X.T, A.T, rcond=None)
    return X, Y.reshape(K, m)


def _descend(alt: _Alternator, X, Y, rounds: int):
    """Alternate exact minimizations; returns the best (X, Y, cost) seen."""
    A = alt.A
    best = None
    prev = math.inf
    for _ in range(rounds):
        Xn = alt.solve("left", Y)
        if Xn is not None:
            X = Xn
        Yn = alt.solve("right", X)
        if Yn is not None:
            Y = Yn
        X, Y = alt.rescale(X, Y)
        a, b = alt.factor_norm(X, "left"), alt.factor_norm(Y, "right")
        if a > 0 and b > 0:
            c = math.sqrt(b / a)
            X, Y = X * c, Y / c
        cost = a * b
        resid = float(np.abs(Y.T @ X - A).max())
        if resid <= RECONSTRUCTION_TOL * max(1.0, np.abs(A).max()):
            if best is None or cost < best[2]:
                best = (X.copy(), Y.copy(), cost)
        if cost > prev * (1 - 1e-7):
            break
        prev = cost
    return best


def _projective(A, u, v, rng, rounds: int = 40):
    """sum_k ||x'_k|| ||y_k|| minimized over decompositions: the p = 1 case of both flavors.

    Atoms x'_k are fixed unit functionals, so the right factor solves a convex
    problem; new atoms come from the dual multiplier of the reconstruction
    constraint.  When B_{E'} is a polytope its vertices are all the atoms needed.
    Returns (X, Y, upper, dual_lower).
    """
    m, n = A.shape
    ud, vd = dual_exponent(u), dual_exponent(v)
    verts = ball_vertices(n, ud, half=True)
    exhaustive = verts is not None and len(verts) <= 256
    if exhaustive:
        atoms = verts / lp_norm(verts, ud, axis=1)[:, None]
    else:
        _, _, vt = np.linalg.svd(A)
        atoms = np.vstack([np.eye(n), vt, random_sphere(rng, 2 * n, n, ud)])
        atoms = atoms / lp_norm(atoms, ud, axis=1)[:, None]
    best = None
    lower = 0.0
    for _ in range(rounds):
        K = len(atoms)
        Y = cp.Variable((K, m))
        con = Y.T @ atoms == A
        prob = cp.Problem(cp.Minimize(cp.sum(cp.hstack([_cp_norm(Y[k, :], v) for k in range(K)]))),
                          [con])
        try:
            prob.solve(solver=_SOLVER)
        except cp.error.SolverError:
            break
        if Y.value is None:
            break
        Yv = np.array(Y.value)
        cost = float(lp_norm(Yv, v, axis=1).sum())
        if np.abs(Yv.T @ atoms - A).max() <= RECONSTRUCTION_TOL * max(1.0, np.abs(A).max()):
            if best is None or cost < best[2]:
                best = (atoms.copy(), Yv, cost)
        Lam = np.asarray(con.dual_value, dtype=float).reshape(m, n)
        nl, _, x, _ = operator_norm_array(Lam, ud, vd, rng=rng, restarts=8)
        if nl > 0:
            lower = max(lower, abs(float((Lam * A).sum())) / nl)
        if exhaustive or best is None or best[2] <= lower * (1 + 1e-6):
            break
        new = x / lp_norm(x, ud)
        if np.min(np.abs(atoms - new).max(axis=1)) < 1e-9 or np.min(np.abs(atoms + new).max(axis=1)) < 1e-9:
            break
        atoms = np.vstack([atoms, new])
    return best, lower


def _nuclear(T: OperatorMatrix, p, rank_budget, seed, config, flavor) -> tuple:
    p = as_exponent(p)
    if math.isinf(p) or p < 1:
        raise ValueError("nuclear norms need 1 <= p < inf")
    A = T.entries
    m, n = A.shape
    rank = int(np.linalg.matrix_rank(A)) if np.any(A) else 0
    K = rank_budget or 2 * min(m, n)
    if K < max(rank, 1):
        raise ValueError(f"rank budget {K} is below the rank {rank} of T")
    left_space, right_space = T.domain.dual(), T.codomain
    q = dual_exponent(p)
    lp, rp = (q, p) if flavor == "dp" else (p, q)
    if rank == 0:
        dec = Decomposition(VectorSequence(np.zeros((1, n)), left_space, lp),
                            VectorSequence(np.zeros((1, m)), right_space, rp), flavor, 0.0)
        return dec, "converged"
    rng = np.random.default_rng(seed)
    if p == 1:
        res, dual_lower = _projective(A, T.domain.u, T.codomain.u, rng)
        if res is not None:
            X, Y, cost = res
            keep = lp_norm(Y, T.codomain.u, axis=1) > 1e-10 * max(1.0, np.abs(A).max())
            X, Y = X[keep], Y[keep]
            if flavor == "gp":
                c = lp_norm(Y, T.codomain.u, axis=1)
                X, Y = X * c[:, None], Y / c[:, None]
            resid = float(np.abs(Y.T @ X - A).max())
            dec = Decomposition(VectorSequence(X, left_space, lp),
                                VectorSequence(Y, right_space, rp), flavor, float(cost), resid)
            return dec, "converged"
    best = None
    # rank schedule: each budget starts from the best decomposition of the previous one
    budgets = sorted({k for k in (rank, K) if k >= rank})
    carry = None
    for k in budgets:
        alt = _Alternator(A, k, flavor, T.domain.u, T.codomain.u, p, rng)
        starts = []
        if carry is not None:
            X0 = np.vstack([carry[0], np.zeros((k - len(carry[0]), n))])
            Y0 = np.vstack([carry[1], np.zeros((k - len(carry[1]), m))])
            starts.append((X0, Y0))
        for r in range(config.nuclear_restarts):
            starts.append(_initial(A, k, rng, r))
        for X0, Y0 in starts:
            res = _descend(alt, X0, Y0, config.nuclear_rounds)
            if res is not None and (best is None or res[2] < best[2]):
                best = res
        carry = best
    if best is None:
        # the SVD split is always an exact decomposition
        X, Y = _initial(A, rank, rng, 0)
        alt = _Alternator(A, rank, flavor, T.domain.u, T.codomain.u, p, rng)
        best = (X, Y, alt.factor_norm(X, "left") * alt.factor_norm(Y, "right"))
        status = "unconverged"
    else:
        status = "converged"
    X, Y, cost = best
    resid = float(np.abs(Y.T @ X - A).max())
    dec = Decomposition(VectorSequence(X, left_space, lp), VectorSequence(Y, right_space, rp),
                        flavor, float(cost), resid)
    return dec, status


def decomposition_cost(dec: Decomposition, rng=None) -> float:
    """Recompute the cost of a decomposition from its factors."""
    weak_left = dec.flavor == "dp"
    L, R = dec.left, dec.right
    if weak_left:
        return weak_p_norm(L, rng).upper * strong_p_norm(R)
    return strong_p_norm(L) * weak_p_norm(R, rng).upper


def _from_cover(T: OperatorMatrix, cover_dict: dict, p: float) -> Decomposition | None:
    """Decomposition of T on l_1^n read off a cover of T(B_E).

    Writing T e_i = sum_k alpha_ik y_k gives T = sum_k x'_k (x) y_k with
    x'_k = (alpha_ik)_i, whose weak l_{p'} norm is max_i ||alpha_i||_{p'}.
    """
    from opideal.spaces import min_hull_coefficients

    Y = np.atleast_2d(np.asarray(cover_dict["vectors"]["items"], dtype=float))
    rows = []
    for i in range(T.domain.dim):
        _, alpha = min_hull_coefficients(Y, T.entries[:, i], p)
        if alpha is None:
            return None
        rows.append(alpha)
    X = np.array(rows).T  # (K, n)
    q = dual_exponent(p)
    left = VectorSequence(X, T.domain.dual(), q)
    right = VectorSequence(Y, T.codomain, p)
    dec = Decomposition(left, right, "dp", 0.0)
    cost = decomposition_cost(dec)
    resid = float(np.abs(Y.T @ X - T.entries).max())
    return Decomposition(left, right, "dp", float(cost), resid)


def _estimate(T, p, rank_budget, seed, config, flavor, lower_of) -> NormEstimate:
    p = as_exponent(p)
    dec, status = _nuclear(T, p, rank_budget, seed, config, flavor)
    if dec.cost == 0:
        return NormEstimate(0.0, 0.0, "converged", f"nuclear_{flavor}", None, dec.to_dict())
    low = lower_of()
    tol = RECONSTRUCTION_TOL * max(1.0, np.abs(T.entries).max())
    if flavor == "dp" and T.domain.u == 1 and p > 1 and isinstance(low.upper_witness, dict) \
            and low.upper_witness.get("kind") == "cover":
        alt = _from_cover(T, low.upper_witness, p)
        if alt is not None and alt.residual <= tol and alt.cost < dec.cost:
            dec, status = alt, "converged"
    lower = low.lower
    upper = max(dec.cost, lower)
    if dec.residual > tol:
        status = "unconverged"
    wit = None
    if isinstance(low.lower_witness, dict):
        # the kappa witness acts on the adjoint of whatever kappa was computed for
        wit = dict(low.lower_witness, acts_on="adjoint" if flavor == "dp" else "operator")
    return NormEstimate(lower, upper, status, f"nuclear_{flavor}", wit, dec.to_dict(),
                        {"terms": len(dec.left)})


def nuclear_dp(T: OperatorMatrix, p, rank_budget: int | None = None, seed: int = 0,
               config: RunConfig = DEFAULT) -> NormEstimate:
    """Upper estimate of nu^p(T): weak l_{p'} left factor times strong l_p right factor.

    The lower end is the kappa_p lower bound, which never exceeds nu^p.
    """
    from opideal.kompact import kappa_norm

    return _estimate(T, p, rank_budget, seed, config, "dp", lambda: kappa_norm(T, p, config))


def nuclear_gp(T: OperatorMatrix, p, rank_budget: int | None = None, seed: int = 0,
               config: RunConfig = DEFAULT) -> NormEstimate:
    """Upper estimate of nu_p(T): strong l_p left factor times weak l_{p'} right factor.

    The lower end is the p-summing lower bound of T (equal to kappa_p of T').
    """
    from opideal.kompact import kappa_norm

    return _estimate(T, p, rank_budget, seed, config, "gp",
                     lambda: kappa_norm(transpose(T), p, config))


@dataclass(frozen=True)
class IdentityReport:
    nuclear_upper: float
    kappa_lower: float
    kappa_upper: float
    discrepancy: float
    passed: bool
    tol: float

    def to_dict(self) -> dict:
        return {"nuclear_upper": self.nuclear_upper, "kappa_lower": self.kappa_lower,
                "kappa_upper": self.kappa_upper, "discrepancy": self.discrepancy,
                "pass": self.passed, "tol": self.tol}


def check_ell1_identity(T: OperatorMatrix, p, config: RunConfig = DEFAULT,
                        rel: float = 0.05, tol: float = 1e-6) -> IdentityReport:
    """Compare nu^p and kappa_p for an operator on l_1^n, where the two coincide."""
    from opideal.kompact import kappa_norm

    if T.domain.u != 1:
        raise ValueError("the identity concerns operators defined on l_1^n")
    kap = kappa_norm(T, p, config)
    nu = _estimate(T, p, None, config.seed, config, "dp", lambda: kap)
    up = nu.upper
    disc = 0.0 if kap.upper == 0 else up / kap.upper - 1.0
    ok = up >= kap.lower - tol and up <= kap.upper * (1 + rel) + tol
    return IdentityReport(up, kap.lower, kap.upper, float(disc), bool(ok), tol)
