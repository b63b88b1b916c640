"""Finite-dimensional sequence spaces l_u^n and norms of vector sequences.

Exponents are plain floats with ``math.inf`` standing for infinity.  All
exponent arithmetic goes through reciprocals, which keeps 1 <-> inf exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from opideal import optim
from opideal.estimate import NormEstimate

INF = math.inf

# vertex enumeration of the l_inf ball is used only up to this dimension
MAX_CUBE_DIM = 14


class InvalidExponentError(ValueError):
    pass


def as_exponent(u) -> float:
    """Parse an exponent given as a number, ``"inf"`` or a fraction string like ``"4/3"``."""
    if isinstance(u, str):
        s = u.strip().lower()
        if s in ("inf", "infinity", "oo", "∞"):
            return INF
        try:
            u = float(Fraction(s))
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidExponentError(f"cannot parse exponent {u!r}") from exc
    u = float(u)
    if math.isnan(u) or u < 1:
        raise InvalidExponentError(f"exponent must lie in [1, inf], got {u}")
    return u


def exponent_to_json(u: float):
    return "inf" if math.isinf(u) else u


def recip(u: float) -> float:
    """1/u with 1/inf = 0."""
    return 0.0 if math.isinf(u) else 1.0 / u


def dual_exponent(u) -> float:
    """Conjugate exponent u' with 1/u + 1/u' = 1.

    Finite exponents are snapped to the nearest fraction with denominator at
    most 10**6 before conjugating, so that ``dual_exponent(dual_exponent(u))``
    returns ``u`` exactly for such rationals.
    """
    u = as_exponent(u)
    if math.isinf(u):
        return 1.0
    if u == 1:
        return INF
    fr = Fraction(u).limit_denominator(10**6)
    if float(fr) != u:
        return 1.0 / (1.0 - 1.0 / u)
    return float(1 / (1 - 1 / fr))


@dataclass(frozen=True)
class SpaceSpec:
    dim: int
    u: float

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "u", as_exponent(self.u))

    def dual(self) -> SpaceSpec:
        return SpaceSpec(self.dim, dual_exponent(self.u))

    def is_polytope(self) -> bool:
        return self.u == 1 or math.isinf(self.u)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "u": exponent_to_json(self.u)}

    @classmethod
    def from_dict(cls, d: dict) -> SpaceSpec:
        return cls(int(d["dim"]), as_exponent(d["u"]))

    def __str__(self):
        u = "inf" if math.isinf(self.u) else f"{self.u:g}"
        return f"l_{u}^{self.dim}"


@dataclass(frozen=True)
class Vector:
    coords: np.ndarray
    space: SpaceSpec

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.size != self.space.dim:
            raise ValueError(f"vector of length {c.size} does not live in {self.space}")
        object.__setattr__(self, "coords", c)

    def to_json(self) -> list:
        return self.coords.tolist()


@dataclass(frozen=True)
class VectorSequence:
    """A finite sequence (x_k) in one space, read in l_p(E) or l_p^w(E)."""

    items: np.ndarray  # shape (K, dim), one row per vector
    space: SpaceSpec
    p: float = 1.0

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.items, dtype=float))
        if arr.shape[0] == 0:
            raise ValueError("a vector sequence must be nonempty")
        if arr.shape[1] != self.space.dim:
            raise ValueError(f"sequence items have length {arr.shape[1]}, space is {self.space}")
        object.__setattr__(self, "items", arr)
        object.__setattr__(self, "p", as_exponent(self.p))

    @classmethod
    def of(cls, vectors, p=1.0) -> VectorSequence:
        vectors = list(vectors)
        space = vectors[0].space
        if any(v.space != space for v in vectors):
            raise ValueError("all items must share one space")
        return cls(np.array([v.coords for v in vectors]), space, p)

    def __len__(self):
        return self.items.shape[0]

    def to_dict(self) -> dict:
        return {"space": self.space.to_dict(), "p": exponent_to_json(self.p),
                "items": self.items.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> VectorSequence:
        return cls(np.array(d["items"], dtype=float), SpaceSpec.from_dict(d["space"]), as_exponent(d["p"]))


# ---------------------------------------------------------------------------
# array-level helpers

def lp_norm(x, u: float, axis=-1):
    """The l_u norm of ``x`` along ``axis``."""
    x = np.abs(np.asarray(x, dtype=float))
    if math.isinf(u):
        return x.max(axis=axis, initial=0.0)
    if u == 1:
        return x.sum(axis=axis)
    if u == 2:
        return np.sqrt((x * x).sum(axis=axis))
    scale = x.max(axis=axis, keepdims=True, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    out = (((x / safe) ** u).sum(axis=axis, keepdims=True)) ** (1.0 / u) * scale
    return np.squeeze(out, axis=axis)


def norming(y, u: float) -> np.ndarray:
    """A functional eta with ||eta||_{u'} = 1 and <eta, y> = ||y||_u.

    Returns the zero vector for y = 0.
    """
    y = np.asarray(y, dtype=float)
    ny = lp_norm(y, u)
    if ny == 0:
        return np.zeros_like(y)
    if u == 2:
        return y / ny
    if u == 1:
        return np.sign(y)
    if math.isinf(u):
        eta = np.zeros_like(y)
        k = int(np.argmax(np.abs(y)))
        eta[k] = np.sign(y[k])
        return eta
    t = y / ny
    return np.sign(t) * np.abs(t) ** (u - 1)


def normalize(x, u: float) -> np.ndarray:
    n = lp_norm(x, u)
    return x / n if n > 0 else x


def ball_vertices(dim: int, u: float, half: bool = True):
    """Extreme points of the unit ball of l_u^dim, or None if it is not a polytope.

    With ``half=True`` only one of each pair +-v is returned.
    """
    if u == 1:
        e = np.eye(dim)
        return e if half else np.vstack([e, -e])
    if math.isinf(u):
        if dim > MAX_CUBE_DIM:
            return None
        if half:
            rest = np.array(list(product((1.0, -1.0), repeat=dim - 1)), dtype=float)
            rest = rest.reshape(len(rest), dim - 1)
            return np.hstack([np.ones((rest.shape[0], 1)), rest])
        return np.array(list(product((1.0, -1.0), repeat=dim)))
    return None


def random_sphere(rng, count: int, dim: int, u: float) -> np.ndarray:
    """Random points on the unit sphere of l_u^dim (Gaussian directions, renormalized)."""
    g = rng.standard_normal((count, dim))
    n = lp_norm(g, u, axis=1)
    n[n == 0] = 1.0
    return g / n[:, None]


# ---------------------------------------------------------------------------
# operations

def vector_norm(x: Vector) -> float:
    return float(lp_norm(x.coords, x.space.u))


def strong_p_norm(s: VectorSequence) -> float:
    """(sum_k ||x_k||^p)^(1/p), or max_k ||x_k|| for p = inf."""
    return float(lp_norm(lp_norm(s.items, s.space.u, axis=1), s.p))


def operator_norm_array(A, a: float, b: float, rng=None, restarts: int = 32,
                        max_iter: int = 500, seeds=None):
    """Norm of the matrix ``A`` from l_a to l_b.

    Returns ``(lower, upper, x, exact)`` where ``x`` is a maximizing unit vector.
    Exact whenever the domain ball or the dual codomain ball is a polytope of
    manageable size, or a = b = 2.  Otherwise a multi-start power iteration
    gives ``lower`` and ``upper`` is set equal to it with ``exact=False``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if not np.any(A):
        x = np.zeros(n)
        x[0] = 1.0
        return 0.0, 0.0, x, True
    verts = ball_vertices(n, a, half=True)
    if verts is not None:
        vals = lp_norm(verts @ A.T, b, axis=1)
        k = int(np.argmax(vals))
        return float(vals[k]), float(vals[k]), verts[k].copy(), True
    bd = dual_exponent(b)
    dverts = ball_vertices(m, bd, half=True)
    if dverts is not None:
        # ||A||_{a->b} = max over extreme functionals eta of ||A^T eta||_{a'}
        ad = dual_exponent(a)
        z = dverts @ A
        vals = lp_norm(z, ad, axis=1)
        k = int(np.argmax(vals))
        return float(vals[k]), float(vals[k]), norming(z[k], ad), True
    if a == 2 and b == 2:
        _, sv, vt = np.linalg.svd(A)
        return float(sv[0]), float(sv[0]), vt[0], True

    rng = rng if rng is not None else np.random.default_rng(0)
    starts = [random_sphere(rng, restarts, n, a), np.eye(n)]
    if seeds is not None and len(seeds):
        starts.insert(0, np.array([normalize(s, a) for s in np.atleast_2d(seeds)]))
    vals, xs = power_maxima(A, a, b, np.vstack(starts), max_iter)
    k = int(np.argmax(vals))
    return float(vals[k]), float(vals[k]), xs[k], False


def power_maxima(A, a: float, b: float, starts, max_iter: int = 500):
    """Run the l_a -> l_b norm power iteration from each start.

    The iteration x <- argmax_{||x||_a <= 1} <A^T eta(Ax), x> never decreases
    ||Ax||_b, so each run ends at a local maximizer on the unit sphere.
    Returns the final values and points, one per start.
    """
    ad = dual_exponent(a)
    vals, xs = [], []
    for x in np.atleast_2d(starts):
        val = lp_norm(A @ x, b)
        for _ in range(max_iter):
            x_new = norming(A.T @ norming(A @ x, b), ad)
            v_new = lp_norm(A @ x_new, b)
            if v_new <= val * (1 + 1e-9):
                if v_new > val:
                    x, val = x_new, v_new
                break
            x, val = x_new, v_new
        vals.append(float(val))
        xs.append(x)
    return np.array(vals), xs


def weak_p_norm(s: VectorSequence, rng=None, restarts: int = 32) -> NormEstimate:
    """sup over ||x'||_{u'} <= 1 of (sum_k |<x', x_k>|^p)^(1/p).

    This is the norm of the map x' -> (<x', x_k>)_k from l_{u'} to l_p.
    """
    lo, hi, xprime, exact = operator_norm_array(
        s.items, dual_exponent(s.space.u), s.p, rng=rng, restarts=restarts)
    return NormEstimate(
        lower=lo, upper=hi, status="converged",
        method="exact" if exact else "ascent",
        upper_witness={"functional": xprime.tolist()},
    )


@dataclass
class Membership:
    member: bool
    coefficients: np.ndarray | None
    coefficient_norm: float
    infeasibility_certificate: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "coefficient_norm": self.coefficient_norm,
            "coefficients": None if self.coefficients is None else self.coefficients.tolist(),
            "infeasibility_certificate": None if self.infeasibility_certificate is None
            else self.infeasibility_certificate.tolist(),
        }


def min_hull_coefficients(items: np.ndarray, point: np.ndarray, p: float):
    """min ||alpha||_{p'} subject to sum_k alpha_k x_k = point.

    Returns ``(norm, alpha)``; ``norm`` is inf with alpha=None if ``point`` is
    outside the span of the items.
    """
    items = np.atleast_2d(items)
    K = items.shape[0]
    pd = dual_exponent(p)
    sol = optim.min_norm_affine(np.eye(K), items.T, np.asarray(point, dtype=float), pd)
    if sol is None:
        return INF, None
    return float(lp_norm(sol, pd)), sol


def pco_membership(s: VectorSequence, point: Vector, tol: float = 1e-7) -> Membership:
    """Decide whether ``point`` lies in the p-convex hull of ``s``.

    The hull is {sum_k alpha_k x_k : ||alpha||_{p'} <= 1}; for p = 1 the
    coefficients range over the sup-norm ball.
    """
    if point.space != s.space:
        raise ValueError("point and sequence live in different spaces")
    norm, alpha = min_hull_coefficients(s.items, point.coords, s.p)
    if alpha is None:
        cert = optim.span_separator(s.items.T, point.coords)
        return Membership(False, None, INF, cert)
    return Membership(norm <= 1 + tol, alpha, norm)
