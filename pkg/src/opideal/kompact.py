"""p-compact norms of matrices and of finite sets.

kappa_p(T) is computed through the adjoint: the least l_p-norm of a family
of functionals dominating ||T'y'|| pointwise (the quasi p-nuclear norm of T')
gives the upper bound, and weakly p-summable families for T' give the lower
bound.  A dominating family for T' read in the bidual is a cover of T(B_E).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from opideal import optim
from opideal.config import DEFAULT, RunConfig
from opideal.estimate import NormEstimate
from opideal.spaces import (
    SpaceSpec,
    as_exponent,
    Vector,
    VectorSequence,
    ball_vertices,
    dual_exponent,
    lp_norm,
    min_hull_coefficients,
    random_sphere,
    strong_p_norm,
)
from opideal.summing import (
    DominationSearch,
    OperatorMatrix,
    _combine,
    _run_with_rounds,
    domination_ratio,
    operator_norm,
    transpose,
)


@dataclass(frozen=True)
class QNCertificate:
    """Functionals x'_k with ||S x|| <= (sum_k |x'_k(x)|^p)^(1/p) for all x.

    ``residual`` is the largest violation of that inequality on the unit
    ball found by the ratio search (zero when the search was exhaustive and
    found none); ``exact`` records whether the search was exhaustive.
    """

    functionals: VectorSequence
    p: float
    residual: float = 0.0
    exact: bool = True
    truncated: bool = False
    status: str = "converged"

    @property
    def cost(self) -> float:
        return strong_p_norm(self.functionals)

    def to_dict(self) -> dict:
        return {"kind": "quasi_nuclear", "functionals": self.functionals.to_dict(),
                "cost": self.cost, "residual": self.residual, "exact": self.exact,
                "truncated": self.truncated, "status": self.status}

    @classmethod
    def from_dict(cls, d: dict) -> QNCertificate:
        f = VectorSequence.from_dict(d["functionals"])
        return cls(f, f.p, d.get("residual", 0.0), d.get("exact", True),
                   d.get("truncated", False), d.get("status", "converged"))


@dataclass(frozen=True)
class Cover:
    """Vectors y_k in the codomain with T(B_E) inside p-co{y_k} up to ``residual``."""

    vectors: VectorSequence
    p: float
    residual: float = 0.0

    @property
    def cost(self) -> float:
        return strong_p_norm(self.vectors)

    def to_dict(self) -> dict:
        return {"kind": "cover", "vectors": self.vectors.to_dict(), "cost": self.cost,
                "residual": self.residual}

    @classmethod
    def from_dict(cls, d: dict) -> Cover:
        v = VectorSequence.from_dict(d["vectors"])
        return cls(v, v.p, d.get("residual", 0.0))


def default_budget(T: OperatorMatrix) -> int:
    return 4 * min(T.domain.dim, T.codomain.dim)


def _polish(S: OperatorMatrix, B: np.ndarray, p: float, config: RunConfig) -> np.ndarray:
    """Local search on a truncated family for a smaller cost times domination ratio."""
    space_u = S.domain.dual().u
    shape = B.shape

    def objective(flat):
        F = flat.reshape(shape)
        c = lp_norm(lp_norm(F, space_u, axis=1), p)
        if c <= 0:
            return math.inf
        R = domination_ratio(S.entries, F, p, S.codomain.u, np.random.default_rng(config.seed),
                             restarts=4)[0]
        return math.log(c) + math.log(R) if math.isfinite(R) and R > 0 else math.inf

    res = minimize(objective, B.ravel(), method="Nelder-Mead",
                   options={"maxfev": 100 * B.size, "xatol": 1e-10, "fatol": 1e-12})
    if res.fun < objective(B.ravel()):
        return res.x.reshape(shape)
    return B


def _certificate(search: DominationSearch, m: int | None, config: RunConfig) -> QNCertificate:
    S, p = search.S, search.p
    space = S.domain.dual()
    cert = search.best_upper
    X = cert.functionals()
    truncated = False
    exact = cert.ratio_exact
    if m is not None and len(X) > m:
        # keep the m heaviest atoms, re-solve the LP on them and re-inflate
        keep = np.argsort(-cert.weights)[:m]
        atoms = cert.atoms[keep]
        s = lp_norm(search.probes @ S.entries.T, S.codomain.u, axis=1) ** p
        M = np.abs(search.probes @ atoms.T) ** p
        rows = s > 1e-300
        w = optim.domination_lp(M[rows], s[rows])[0] if rows.any() else np.zeros(m)
        B = w[:, None] ** (1.0 / p) * atoms
        B = _polish(S, B, p, config)
        R, _, exact = domination_ratio(S.entries, B, p, S.codomain.u,
                                       np.random.default_rng(config.seed), config.restarts)
        X = R * B
        truncated = True
    status = "converged" if search.converged(config.gap_rel) else "unconverged"
    seq = VectorSequence(X, space, p)
    return QNCertificate(seq, p, 0.0, exact, truncated, status)


def qn_upper(S: OperatorMatrix, p, m: int | None = None, seed: int = 0,
             config: RunConfig = DEFAULT) -> QNCertificate:
    """Dominating functional family for S found by the cutting-plane engine.

    ``m`` caps the number of functionals; when the engine's family is larger
    the heaviest m atoms are kept and re-weighted.
    """
    p = float(p)
    if math.isinf(p) or p < 1:
        raise ValueError("qn_upper needs 1 <= p < inf")
    if m is not None and m < 1:
        raise ValueError("functional count must be at least 1")
    space = S.domain.dual()
    if S.is_zero():
        return QNCertificate(VectorSequence(np.zeros((1, S.domain.dim)), space, p), p)
    cfg = config.with_(seed=seed)
    search = _run_with_rounds(S, p, cfg)
    return _certificate(search, m, cfg)


def kappa_norm(T: OperatorMatrix, p, config: RunConfig = DEFAULT) -> NormEstimate:
    """kappa_p(T) as an interval.

    Upper witness: a cover of T(B_E) (from the dominating family of T');
    lower witness: a weakly p-summable family in F' for T'.
    """
    p = as_exponent(p)
    if math.isinf(p):
        est = operator_norm(T, config)
        est.method = "operator_norm"
        return est
    S = transpose(T)
    if T.is_zero():
        cover = Cover(VectorSequence(np.zeros((1, T.codomain.dim)), T.codomain, p), p)
        wit = {"kind": "pietsch_witness", "p": p, "vectors": [[0.0] * S.domain.dim],
               "value": 0.0, "weak_norm": 1.0, "weak_exact": True, "acts_on": "adjoint"}
        return NormEstimate(0.0, 0.0, "converged", "zero", wit, cover.to_dict())
    search = _run_with_rounds(S, p, config)
    est = _combine(S, p, search, config)
    cert = _certificate(search, config.functional_budget, config)
    cover = cover_from_qn(cert)
    upper = cover.cost
    if upper < est.upper or cert.truncated:
        est.upper = max(upper, est.lower)
    est.upper_witness = cover.to_dict()
    est.lower_witness = dict(est.lower_witness, acts_on="adjoint")
    est.method = "quasi_nuclear_adjoint"
    est.extra["ratio_exact"] = bool(cert.exact)
    est.extra["functionals"] = int(len(cover.vectors.items))
    if cert.truncated:
        est.extra["truncated"] = True
        if est.upper > est.lower * (1 + config.gap_rel):
            est.status = "unconverged"
    return est


def cover_from_qn(cert: QNCertificate) -> Cover:
    """Functionals on F' read as vectors of F (finite-dimensional bidual)."""
    f = cert.functionals
    # functionals on F' already live in F'' = F
    return Cover(VectorSequence(f.items.copy(), f.space, cert.p), cert.p, cert.residual)


def containment_scale(T: OperatorMatrix, cover: Cover, config: RunConfig = DEFAULT):
    """Least t with T(B_E) inside t * p-co{y_k}, and whether it is exact.

    By support functions t = sup ||T'y'|| / ||(<y', y_k>)_k||_p over y' != 0.
    When B_E is a polytope the value is recomputed from hull membership of
    the images of its vertices, which needs no search.
    """
    Y = cover.vectors.items
    p = cover.p
    verts = ball_vertices(T.domain.dim, T.domain.u, half=True)
    if verts is not None and len(verts) <= 256:
        t = 0.0
        for x in verts:
            t = max(t, min_hull_coefficients(Y, T.entries @ x, p)[0])
        return t, True
    S = transpose(T)
    rng = np.random.default_rng(config.seed)
    R, _, exact = domination_ratio(S.entries, Y, p, S.codomain.u, rng, config.restarts)
    return R, exact


def verify_cover(T: OperatorMatrix, c: Cover, probes=None, seed: int = 0,
                 config: RunConfig = DEFAULT) -> float:
    """max over y' in B_{F'} of ||T'y'|| - ||(<y', y_k>)_k||_p, clamped at zero."""
    S = transpose(T)
    Y = c.vectors.items
    p = c.p
    m = S.domain.dim
    rng = np.random.default_rng(seed)
    R, cand, exact = domination_ratio(S.entries, Y, p, S.codomain.u, rng, config.restarts)
    if R <= 1 + 1e-12 and exact:
        return 0.0
    pts = [np.atleast_2d(cand).reshape(-1, m), random_sphere(rng, config.restarts, m, S.domain.u),
           np.eye(m)]
    if probes is not None:
        pts.append(np.atleast_2d(np.asarray(probes, dtype=float)))
    verts = ball_vertices(m, S.domain.u)
    if verts is not None and len(verts) <= 4096:
        pts.append(verts)
    P = np.vstack(pts)
    nrm = lp_norm(P, S.domain.u, axis=1)
    P = P[nrm > 0] / nrm[nrm > 0, None]
    gap = lp_norm(P @ S.entries.T, S.codomain.u, axis=1) - lp_norm(P @ Y.T, p, axis=1)
    return float(max(0.0, gap.max(initial=0.0)))


def mp_of_finite_set(points, p, config: RunConfig = DEFAULT) -> NormEstimate:
    """m_p(K; E) for a finite K, as kappa_p of l_1^|K| -> E sending e_i to the i-th point."""
    pts = list(points)
    if not pts:
        raise ValueError("the set must be nonempty")
    space = pts[0].space if isinstance(pts[0], Vector) else None
    if space is None:
        raise TypeError("points must be Vector instances")
    if any(q.space != space for q in pts):
        raise ValueError("all points must lie in the same space")
    Psi = OperatorMatrix(np.column_stack([q.coords for q in pts]), SpaceSpec(len(pts), 1.0), space)
    return kappa_norm(Psi, p, config)
