"""Two-sided estimation of the p-summing norm of a matrix between l_u spaces.

Lower bounds come from finite families with weak p-norm at most one
(``PietschWitness``); upper bounds from Pietsch domination measures with
finitely many atoms (``DominationCertificate``).  Both are produced by a
column-and-constraint generation loop around the domination LP

    min sum_j w_j   s.t.   sum_j w_j |<a_j, x_i>|^p >= ||S x_i||^p   (probes x_i)

whose dual multipliers on the probes form the witness family.  Neither bound
trusts the LP: the upper bound is rescaled by the worst domination ratio over
the whole unit sphere, the lower bound by the exact (or searched) weak norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space, orth
from scipy.optimize import minimize

from opideal import optim
from opideal.config import DEFAULT, RunConfig
from opideal.estimate import NormEstimate
from opideal.spaces import (
    INF,
    SpaceSpec,
    as_exponent,
    ball_vertices,
    dual_exponent,
    lp_norm,
    normalize,
    norming,
    operator_norm_array,
    power_maxima,
    random_sphere,
)


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray  # shape (codomain.dim, domain.dim)
    domain: SpaceSpec
    codomain: SpaceSpec

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.entries, dtype=float))
        if a.shape != (self.codomain.dim, self.domain.dim):
            raise ValueError(
                f"matrix shape {a.shape} does not match {self.domain} -> {self.codomain}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "entries", a)

    @classmethod
    def from_array(cls, a, u, v) -> OperatorMatrix:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        m, n = a.shape
        return cls(a, SpaceSpec(n, u), SpaceSpec(m, v))

    @classmethod
    def identity(cls, n: int, u, v) -> OperatorMatrix:
        return cls(np.eye(n), SpaceSpec(n, u), SpaceSpec(n, v))

    @classmethod
    def rank_one(cls, functional, vector, u, v) -> OperatorMatrix:
        """The operator x -> <functional, x> vector from l_u to l_v."""
        return cls.from_array(np.outer(vector, functional), u, v)

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other: OperatorMatrix) -> OperatorMatrix:
        if other.codomain != self.domain:
            raise ValueError(f"cannot compose: {other.codomain} != {self.domain}")
        return OperatorMatrix(self.entries @ other.entries, other.domain, self.codomain)

    def __mul__(self, c: float) -> OperatorMatrix:
        return OperatorMatrix(c * self.entries, self.domain, self.codomain)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not np.any(self.entries)

    def to_dict(self) -> dict:
        return {"domain": self.domain.to_dict(), "codomain": self.codomain.to_dict(),
                "entries": self.entries.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> OperatorMatrix:
        return cls(np.array(d["entries"], dtype=float), SpaceSpec.from_dict(d["domain"]),
                   SpaceSpec.from_dict(d["codomain"]))


def transpose(T: OperatorMatrix) -> OperatorMatrix:
    """The adjoint T': F' -> E' as a matrix."""
    return OperatorMatrix(T.entries.T.copy(), T.codomain.dual(), T.domain.dual())


def operator_norm(T: OperatorMatrix, config: RunConfig = DEFAULT) -> NormEstimate:
    """||T|| from l_u to l_v.

    Exact for u in {1, inf}, v in {1, inf} or u = v = 2.  Other exponent
    pairs get a power-iteration lower bound and the smallest of three cheap
    factorization bounds as upper bound.
    """
    u, v = T.domain.u, T.codomain.u
    rng = np.random.default_rng(config.seed)
    lo, hi, x, exact = operator_norm_array(T.entries, u, v, rng=rng, restarts=config.restarts,
                                           max_iter=config.max_iter)
    if not exact:
        m, n = T.shape
        A = T.entries
        bounds = [
            n ** (1 - 1 / u) * lp_norm(A, v, axis=0).max(),  # through l_1
            m ** (1 / v) * lp_norm(A, dual_exponent(u), axis=1).max(),  # through l_inf
        ]
        cube = ball_vertices(n, INF)
        if cube is not None:
            bounds.append(lp_norm(cube @ A.T, v, axis=1).max())
        hi = max(lo, float(min(bounds)))
    status = "converged" if hi <= lo * (1 + config.gap_rel) + 1e-12 else "unconverged"
    return NormEstimate(lo, hi, status, "exact" if exact else "ascent",
                        lower_witness={"vector": x.tolist()})


# ---------------------------------------------------------------------------
# certificates


@dataclass
class PietschWitness:
    """A family (x_i) in the domain with weak p-norm <= 1; value = (sum ||T x_i||^p)^(1/p)."""

    vectors: np.ndarray
    value: float
    weak_norm: float
    weak_exact: bool
    p: float

    def to_dict(self) -> dict:
        return {"kind": "pietsch_witness", "p": self.p, "vectors": self.vectors.tolist(),
                "value": self.value, "weak_norm": self.weak_norm, "weak_exact": self.weak_exact}

    @classmethod
    def from_dict(cls, d: dict) -> PietschWitness:
        return cls(np.array(d["vectors"], dtype=float), d["value"], d["weak_norm"],
                   d["weak_exact"], d["p"])


@dataclass
class DominationCertificate:
    """||T x||^p <= constant^p * sum_j weights_j |<atoms_j, x>|^p on the unit ball.

    ``ratio`` is the worst factor by which the LP measure had to be inflated
    to dominate everywhere; ``ratio_exact`` says whether that worst case was
    found by exhaustive/closed-form search rather than multi-start ascent.
    """

    atoms: np.ndarray
    weights: np.ndarray
    constant: float
    residual: float
    ratio: float
    ratio_exact: bool
    p: float
    status: str = "converged"
    probes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def functionals(self) -> np.ndarray:
        """The same certificate read as a quasi p-nuclear family x'_j."""
        return self.constant * self.weights[:, None] ** (1.0 / self.p) * self.atoms

    def to_dict(self) -> dict:
        return {"kind": "domination", "p": self.p, "atoms": self.atoms.tolist(),
                "weights": self.weights.tolist(), "constant": self.constant,
                "residual": self.residual, "ratio": self.ratio,
                "ratio_exact": self.ratio_exact, "status": self.status}


def _zero_domination(n: int, p: float) -> DominationCertificate:
    atoms = np.zeros((1, n))
    atoms[0, 0] = 1.0
    return DominationCertificate(atoms, np.ones(1), 0.0, 0.0, 0.0, True, p)


def _zero_witness(n: int, p: float) -> PietschWitness:
    x = np.zeros((1, n))
    x[0, 0] = 1.0
    return PietschWitness(x, 0.0, 1.0, True, p)


# ---------------------------------------------------------------------------
# search oracles


def _dedupe_rows(existing: np.ndarray, new: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Rows of ``new`` (sign-normalized) not within ``tol`` of a row of ``existing``."""
    out = []
    pool = np.atleast_2d(existing).reshape(-1, existing.shape[1])
    for r in np.atleast_2d(new):
        if not np.all(np.isfinite(r)) or not np.any(r):
            continue
        k = int(np.argmax(np.abs(r) > 1e-12))
        r = r if r[k] > 0 else -r
        if len(pool) and np.min(np.max(np.abs(pool - r), axis=1)) < tol:
            continue
        pool = np.vstack([pool, r])
        out.append(r)
    return np.array(out).reshape(-1, existing.shape[1])


# rays enumerated by the p = 1 ratio search
MAX_RAYS = 60000
# new probes and atoms admitted per engine step
BATCH = 8


def _polyhedral_rays(B: np.ndarray, limit: int = MAX_RAYS):
    """Directions spanned by intersecting n-1 of the hyperplanes <b_j, x> = 0.

    These contain every vertex of the unit ball of x -> sum_j |<b_j, x>|.
    Returns None when there would be more than ``limit`` of them.
    """
    J, n = B.shape
    if n == 1:
        return np.ones((1, 1))
    if math.comb(J, n - 1) > limit:
        return None
    idx = np.array(list(combinations(range(J), n - 1)))
    M = B[idx]  # (N, n-1, n)
    cols = np.arange(n)
    X = np.empty((len(idx), n))
    for k in range(n):
        X[:, k] = (-1) ** k * np.linalg.det(M[:, :, cols != k])
    nrm = np.linalg.norm(X, axis=1)
    keep = nrm > 1e-12 * max(nrm.max(initial=0.0), 1e-300)
    return X[keep] / nrm[keep, None]


def _snap_to_ray(B, x):
    """The arrangement ray through the n-1 hyperplanes nearest to ``x``."""
    n = len(x)
    if n == 1:
        return x
    dist = np.abs(B @ x) / np.maximum(np.linalg.norm(B, axis=1), 1e-300)
    near = B[np.argsort(dist)[: n - 1]]
    _, _, vt = np.linalg.svd(near)
    r = vt[-1]
    return r if r @ x >= 0 else -r


def _norm_grad(y, u):
    """(||y||_u, gradient of ||.||_u at y) for finite u > 1 or u = inf (a subgradient)."""
    if math.isinf(u) or u == 1:
        n = lp_norm(y, u)
        return n, norming(y, u)
    a = np.abs(y)
    scale = a.max()
    if scale == 0:
        return 0.0, np.zeros_like(y)
    t = (a / scale) ** (u - 1)
    n = scale * float((t * (a / scale)).sum()) ** (1.0 / u)
    return n, np.sign(y) * t * (scale / n) ** (u - 1)


def _smooth_ratio_ascent(S, B, p, b, starts):
    """Local maxima of log||Sx||_b - log||Bx||_p by BFGS from each start."""
    def neg(x):
        ny, gy = _norm_grad(S @ x, b)
        nr, gr = _norm_grad(B @ x, p)
        if ny <= 0 or nr <= 0:
            return 0.0, np.zeros_like(x)
        return -(math.log(ny) - math.log(nr)), -(S.T @ gy / ny - B.T @ gr / nr)

    out = []
    for x0 in starts:
        res = minimize(neg, x0, jac=True, method="BFGS", options={"gtol": 1e-8, "maxiter": 400})
        x = res.x
        g = lp_norm(B @ x, p)
        if g > 0:
            out.append((lp_norm(S @ x, b) / g, x))
    return out


def domination_ratio(S: np.ndarray, B: np.ndarray, p: float, b: float, rng, restarts: int = 16,
                     seeds=None, max_iter: int = 200):
    """sup_x ||S x||_b / ||B x||_p together with maximizing directions.

    Returns ``(ratio, candidates, exact)``; ``candidates`` are unnormalized
    maximizers sorted by decreasing ratio.  Exhaustive cases: p = b = 2
    (generalized eigenvalue), p = 1 (vertices of the polyhedral gauge ball),
    and codomains whose dual ball is a polytope (for each extreme functional
    y' the inner problem max{<S'y', x> : ||Bx||_p <= 1} is convex).
    Otherwise multi-start BFGS on the log-ratio.
    """
    m, n = S.shape
    N = null_space(B, rcond=1e-11) if B.shape[0] else np.eye(n)
    if N.shape[1]:
        SN = S @ N
        if np.linalg.norm(SN) > 1e-10 * max(1.0, np.linalg.norm(S)):
            _, _, vt = np.linalg.svd(SN)
            return INF, np.atleast_2d(N @ vt[0]), True
        # S vanishes on ker B: solve on its orthogonal complement and map back
        Q = orth(B.T, rcond=1e-11)
        if Q.shape[1] == 0:
            return 0.0, np.zeros((0, n)), True
        seeds_q = None if seeds is None else np.atleast_2d(seeds) @ Q
        R, cand, exact = domination_ratio(S @ Q, B @ Q, p, b, rng, restarts, seeds_q, max_iter)
        return R, np.atleast_2d(cand) @ Q.T, exact
    if p == 2 and b == 2:
        # B has trivial kernel here, so x = B^+ y parametrizes every direction
        Bp = np.linalg.pinv(B)
        _, sv, vt = np.linalg.svd(S @ Bp)
        return float(sv[0]), (Bp @ vt[: min(3, len(vt))].T).T, True

    results = None
    exact = False
    if p == 1:
        rays = _polyhedral_rays(B)
        exact = rays is not None
        if rays is None:
            # too many hyperplanes: ascend, then snap each local maximum to a vertex
            starts = list(random_sphere(rng, restarts, n, 2))
            if seeds is not None:
                starts = list(np.atleast_2d(seeds)) + starts
            xs = [x for _, x in _smooth_ratio_ascent(S, B, 1.0, b, starts)]
            rays = np.array(xs + [_snap_to_ray(B, x) for x in xs]).reshape(-1, n)
        g = lp_norm(rays @ B.T, 1, axis=1)
        rays = rays[g > 0]
        vals = lp_norm(rays @ S.T, b, axis=1) / g[g > 0]
        order = np.argsort(-vals)[:16]
        return float(vals[order[0]]), rays[order], exact

    def inner(z):
        if not np.any(z):
            return 0.0, None
        x = optim.min_norm_affine(B, z[None, :], np.array([1.0]), p)
        g = lp_norm(B @ x, p)
        if g <= 0:
            return INF, x
        return lp_norm(S @ x, b) / g, x

    bd = dual_exponent(b)
    verts = ball_vertices(m, bd)
    if verts is not None and len(verts) <= 256:
        results = [inner(S.T @ y) for y in verts]
        exact = True
    elif p > 1:
        starts = list(random_sphere(rng, restarts, n, 2))
        if seeds is not None:
            starts = list(np.atleast_2d(seeds)) + starts
        results = _smooth_ratio_ascent(S, B, p, b, starts)
    else:
        starts = list(random_sphere(rng, restarts, m, bd))
        if seeds is not None:
            starts = [norming(S @ s, b) for s in np.atleast_2d(seeds)] + starts
        results = []
        for y in starts:
            val, x = inner(S.T @ y)
            for _ in range(max_iter):
                if x is None or math.isinf(val):
                    break
                v2, x2 = inner(S.T @ norming(S @ x, b))
                if v2 <= val * (1 + 1e-9):
                    break
                val, x = v2, x2
            results.append((val, x))
    results = [r for r in results if r[1] is not None]
    if not results:
        return 0.0, np.zeros((0, n)), exact
    results.sort(key=lambda r: -r[0])
    return float(results[0][0]), np.array([r[1] for r in results]), exact


class DominationSearch:
    """Column-and-constraint generation for the Pietsch domination LP of ``S``.

    Stateful so that callers can run further rounds when a gap persists.
    """

    def __init__(self, S: OperatorMatrix, p: float, config: RunConfig = DEFAULT, rng=None):
        if math.isinf(p):
            raise ValueError("the domination search needs a finite p")
        self.S = S
        self.p = float(p)
        self.cfg = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        self.A = S.entries
        self.a, self.b = S.domain.u, S.codomain.u
        self.ad = dual_exponent(self.a)
        n = S.domain.dim
        self.n = n

        verts = ball_vertices(n, self.ad)
        self.atoms_exhaustive = verts is not None and len(verts) <= 4096
        if self.atoms_exhaustive:
            atoms = verts
        else:
            # rows of S and its leading right singular vectors: exact for rank one
            rows = self.A[lp_norm(self.A, self.ad, axis=1) > 0]
            spectral = np.linalg.svd(self.A)[2][: min(n, 3)]
            atoms = np.vstack([np.eye(n), rows, spectral,
                               random_sphere(self.rng, 2 * n, n, self.ad)])
        atoms = atoms / lp_norm(atoms, self.ad, axis=1)[:, None]
        self.atoms = _dedupe_rows(np.zeros((0, n)), atoms)

        probes = [np.eye(n), random_sphere(self.rng, 2 * n, n, self.a)]
        pv = ball_vertices(n, self.a)
        if pv is not None and len(pv) <= 64:
            probes.append(pv)
        _, _, vt = np.linalg.svd(self.A)
        probes.append(vt[: min(n, 3)])
        P = np.vstack(probes)
        self.probes = _dedupe_rows(np.zeros((0, n)), P / lp_norm(P, self.a, axis=1)[:, None])

        self.best_upper: DominationCertificate | None = None
        self.best_lower: PietschWitness | None = None
        self.iterations = 0
        self.history: list[tuple[float, float]] = []

    @property
    def upper(self) -> float:
        return INF if self.best_upper is None else self.best_upper.constant

    @property
    def lower(self) -> float:
        return 0.0 if self.best_lower is None else self.best_lower.value

    def gap(self) -> float:
        if self.upper == 0:
            return 0.0
        if self.lower == 0:
            return INF
        return self.upper / self.lower - 1.0

    def _solve_lp(self):
        s = lp_norm(self.probes @ self.A.T, self.b, axis=1) ** self.p
        M = np.abs(self.probes @ self.atoms.T) ** self.p
        keep = s > 1e-300
        w, z_k, val = optim.domination_lp(M[keep], s[keep])
        z = np.zeros(len(s))
        z[keep] = z_k
        return w, z, val

    def step(self) -> bool:
        """One LP solve plus both oracles; returns False when nothing new was generated."""
        p, cfg = self.p, self.cfg
        w, z, V = self._solve_lp()
        self.iterations += 1
        if V <= 0:
            self.best_upper = _zero_domination(self.n, p)
            self.best_lower = _zero_witness(self.n, p)
            return False

        # upper side: inflate the LP measure until it dominates everywhere
        supp = w > 1e-12 * w.max()
        B = w[supp, None] ** (1.0 / p) * self.atoms[supp]
        seeds = self.probes[np.argsort(-z)[:4]]
        R, cand, exact = domination_ratio(self.A, B, p, self.b, self.rng,
                                          restarts=max(4, cfg.restarts // 2), seeds=seeds)
        upper = R * V ** (1.0 / p)
        if upper < self.upper:
            mu = w[supp] / w[supp].sum()
            self.best_upper = DominationCertificate(
                atoms=self.atoms[supp].copy(), weights=mu, constant=float(upper), residual=0.0,
                ratio=float(R), ratio_exact=exact, p=p, probes=self.probes.copy())

        # lower side: the LP dual is a weakly p-summable family
        zs = z > 1e-12 * max(z.max(), 1e-300)
        fam = z[zs, None] ** (1.0 / p) * self.probes[zs]
        lo_seeds = self.atoms[np.argsort(-w)[:4]]
        wk_lo, _, xprime, wexact = operator_norm_array(
            fam, self.ad, p, rng=self.rng, restarts=cfg.restarts, seeds=lo_seeds)
        beta = wk_lo**p
        if wk_lo > 0:
            value = lp_norm(lp_norm(fam @ self.A.T, self.b, axis=1), p)
            lower = value / wk_lo
            if lower > self.lower:
                self.best_lower = PietschWitness(fam / wk_lo, float(lower), 1.0, wexact, p)
        self.history.append((self.lower, self.upper))

        added = False
        if R > 1 + 1e-9:
            cand = np.atleast_2d(cand)[:BATCH]
            cand = cand / lp_norm(cand, self.a, axis=1)[:, None]
            new = _dedupe_rows(self.probes, cand)
            if len(new):
                self.probes = np.vstack([self.probes, new])
                added = True
        if not self.atoms_exhaustive and beta > 1 + 1e-9 and len(self.atoms) < cfg.max_atoms:
            starts = np.vstack([xprime[None, :], random_sphere(self.rng, cfg.restarts // 2,
                                                                self.n, self.ad)])
            vals, xs = power_maxima(fam, self.ad, p, starts)
            order = np.argsort(-vals)
            cand = np.array([xs[k] for k in order if vals[k] ** p > 1 + 1e-9][:BATCH])
            if len(cand):
                cand = cand / lp_norm(cand, self.ad, axis=1)[:, None]
                new = _dedupe_rows(self.atoms, cand)
                if len(new):
                    self.atoms = np.vstack([self.atoms, new])
                    added = True
        return added

    def run(self, rounds: int | None = None) -> DominationSearch:
        rounds = rounds or self.cfg.engine_rounds
        for _ in range(rounds):
            more = self.step()
            if self.gap() <= self.cfg.gap_stop or not more:
                break
        return self

    def converged(self, gap_rel: float) -> bool:
        return self.gap() <= gap_rel


# ---------------------------------------------------------------------------
# public operations


def _weak_norm(X, ad, p, rng, restarts, seeds=None):
    lo, _, xp, exact = operator_norm_array(X, ad, p, rng=rng, restarts=restarts, seeds=seeds)
    return lo, xp, exact


def summing_lower(T: OperatorMatrix, p: float, k: int | None = None, seed: int = 0,
                  config: RunConfig = DEFAULT, start=None, steps: int = 60) -> PietschWitness:
    """Best weakly p-summable family of ``k`` vectors found by projected ascent.

    Maximizes sum_i ||T x_i||^p / (weak p-norm)^p by gradient steps on the
    log-ratio, renormalizing the family to weak norm one after each step.
    ``start`` optionally seeds one run with a given family.
    """
    p = float(p)
    n = T.domain.dim
    if T.is_zero():
        return _zero_witness(n, p)
    rng = np.random.default_rng(seed)
    a, b, ad = T.domain.u, T.codomain.u, dual_exponent(T.domain.u)
    A = T.entries
    k = k or n
    inner_restarts = max(4, config.restarts // 4)

    def value(X):
        return float((lp_norm(X @ A.T, b, axis=1) ** p).sum())

    inits = []
    if start is not None:
        inits.append(np.atleast_2d(start))
    if k == n:
        inits.append(np.eye(n))
    # the norming direction of T alone is optimal for rank one
    _, _, xbest, _ = operator_norm_array(A, a, b, rng=rng, restarts=inner_restarts)
    inits.append(np.vstack([xbest[None, :], random_sphere(rng, k - 1, n, a)]) if k > 1
                 else xbest[None, :])
    inits.append(random_sphere(rng, k, n, a))

    best = None
    for X in inits:
        wn, xp, _ = _weak_norm(X, ad, p, rng, inner_restarts)
        if wn == 0:
            continue
        X = X / wn
        f = value(X)
        step = 0.1
        for _ in range(steps):
            Y = X @ A.T
            ny = lp_norm(Y, b, axis=1)
            grad_num = np.zeros_like(X)
            for i in range(len(X)):
                if ny[i] > 0:
                    grad_num[i] = p * ny[i] ** (p - 1) * (A.T @ norming(Y[i], b))
            t = X @ xp
            grad_w = p * (np.sign(t) * np.abs(t) ** (p - 1))[:, None] * xp[None, :]
            g = grad_num / max(f, 1e-300) - grad_w
            improved = False
            while step > 1e-6:
                Xn = X + step * g
                wn, xpn, _ = _weak_norm(Xn, ad, p, rng, inner_restarts, seeds=xp[None, :])
                if wn > 0:
                    Xn = Xn / wn
                    fn = value(Xn)
                    if fn > f * (1 + 1e-12):
                        X, f, xp = Xn, fn, xpn
                        step *= 1.5
                        improved = True
                        break
                step *= 0.5
            if not improved:
                break
        wn, _, exact = _weak_norm(X, ad, p, rng, config.restarts, seeds=xp[None, :])
        X = X / wn
        val = value(X) ** (1 / p)
        if best is None or val > best.value:
            best = PietschWitness(X, val, 1.0, exact, p)
    return best if best is not None else _zero_witness(n, p)


def summing_upper(T: OperatorMatrix, p: float, budget: int | None = None, seed: int = 0,
                  config: RunConfig = DEFAULT) -> DominationCertificate:
    """Pietsch domination certificate from the cutting-plane LP."""
    p = float(p)
    if T.is_zero():
        return _zero_domination(T.domain.dim, p)
    search = DominationSearch(T, p, config, np.random.default_rng(seed)).run(budget)
    cert = search.best_upper
    cert.status = "converged" if search.converged(config.gap_rel) else "unconverged"
    return cert


def witness_schedule(n: int) -> list[int]:
    return sorted({1, n, 2 * n, 4 * n})


def summing_norm(T: OperatorMatrix, p, config: RunConfig = DEFAULT) -> NormEstimate:
    """pi_p(T) as a certified interval; p = inf is routed to the operator norm."""
    p = as_exponent(p)
    if math.isinf(p):
        est = operator_norm(T, config)
        est.method = "operator_norm"
        return est
    n = T.domain.dim
    if T.is_zero():
        return NormEstimate(0.0, 0.0, "converged", "zero",
                            _zero_witness(n, p).to_dict(), _zero_domination(n, p).to_dict())
    search = _run_with_rounds(T, p, config)
    return _combine(T, p, search, config)


# engine steps in each gap-closure round after the first
CLOSURE_STEPS = 10


def _run_with_rounds(T, p, config):
    search = DominationSearch(T, p, config, np.random.default_rng(config.seed)).run()
    rounds = 1
    while search.gap() > config.gap_rel and rounds < config.kappa_rounds:
        before = (search.lower, search.upper)
        search.run(CLOSURE_STEPS)
        rounds += 1
        if (search.lower, search.upper) == before:
            break
    search.rounds = rounds
    return search


def _combine(T, p, search: DominationSearch, config: RunConfig) -> NormEstimate:
    upper_cert = search.best_upper
    witness = search.best_lower
    # a single norming vector is always feasible, and optimal for rank one
    x = operator_norm_array(T.entries, T.domain.u, T.codomain.u,
                            rng=np.random.default_rng(config.seed), restarts=config.restarts)[2]
    nx = lp_norm(x, T.domain.u)
    if nx > 0:
        single = float(lp_norm(T.entries @ x, T.codomain.u) / nx)
        if witness is None or single > witness.value:
            witness = PietschWitness((x / nx)[None, :], single, 1.0, True, p)
    if config.witness_ascent and search.gap() > config.gap_stop:
        for k in witness_schedule(T.domain.dim):
            cand = summing_lower(T, p, k, seed=config.seed + k, config=config,
                                 start=witness.vectors if k == len(witness.vectors) else None)
            if cand.value > witness.value:
                witness = cand
        polished = summing_lower(T, p, len(witness.vectors), seed=config.seed, config=config,
                                 start=witness.vectors)
        if polished.value > witness.value:
            witness = polished
    lower, upper = witness.value, upper_cert.constant
    extra = {"iterations": search.iterations, "atoms": int(len(search.atoms)),
             "probes": int(len(search.probes))}
    if lower > upper:
        if lower - upper > 1e-9 * max(1.0, upper):
            extra["crossing"] = lower - upper
        lower = upper
    ok = upper <= lower * (1 + config.gap_rel) + 1e-12 and "crossing" not in extra
    cert_dict = upper_cert.to_dict()
    return NormEstimate(lower, upper, "converged" if ok else "unconverged", "pietsch_lp",
                        witness.to_dict(), cert_dict, extra)
