"""Randomized checks of the kappa_r coincidence inequalities with explicit constants.

Each family instantiates its hypotheses with exact small models l_u^n, so
all space constants of the L_{p,lambda} kind equal one.  Families whose
constant contains an unspecified universal factor c do not pass or fail:
they report the least c that makes every sampled instance hold.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gamma

from opideal.config import DEFAULT, RunConfig
from opideal.kompact import kappa_norm
from opideal.spaces import INF, dual_exponent, exponent_to_json, lp_norm
from opideal.summing import OperatorMatrix, operator_norm

# Haagerup's threshold where the lower Khintchine constant changes formula
_HAAGERUP_P0 = 1.84742


def khintchine_upper(r: float) -> float:
    """Best B_r with (E|sum eps_i a_i|^r)^(1/r) <= B_r ||a||_2."""
    if r <= 2:
        return 1.0
    return math.sqrt(2.0) * (gamma((r + 1) / 2) / math.sqrt(math.pi)) ** (1.0 / r)


def khintchine_lower(q: float) -> float:
    """Best A_q with A_q ||a||_2 <= (E|sum eps_i a_i|^q)^(1/q), for q <= 2."""
    if q >= 2:
        return 1.0
    if q <= _HAAGERUP_P0:
        return 2.0 ** (0.5 - 1.0 / q)
    return math.sqrt(2.0) * (gamma((q + 1) / 2) / math.sqrt(math.pi)) ** (1.0 / q)


def cotype2_lq(q: float) -> float:
    """Cotype 2 constant of l_q for 1 <= q <= 2 (q = 2 is Hilbert space)."""
    if q > 2:
        raise ValueError("l_q has cotype 2 only for q <= 2")
    return 1.0 / khintchine_lower(q)


def estimate_cotype(q: float, u: float, dim: int, terms: int = 3, seed: int = 0,
                    restarts: int = 8) -> float:
    """Lower estimate of the cotype q constant of l_u^dim.

    Maximizes (sum ||x_i||^q)^(1/q) / (E ||sum eps_i x_i||^2)^(1/2) over
    families of ``terms`` vectors, averaging over all sign patterns.
    """
    rng = np.random.default_rng(seed)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=terms)))

    def neg_ratio(flat):
        X = flat.reshape(terms, dim)
        num = lp_norm(lp_norm(X, u, axis=1), q)
        den = math.sqrt(float((lp_norm(signs @ X, u, axis=1) ** 2).mean()))
        return -num / den if den > 0 else 0.0

    best = 0.0
    starts = [np.eye(terms, dim).ravel()] + [rng.standard_normal(terms * dim)
                                             for _ in range(restarts)]
    for x0 in starts:
        res = minimize(neg_ratio, x0, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


@functools.lru_cache(maxsize=None)
def _cotype_cached(q, u, dim):
    return estimate_cotype(q, u, dim)


@dataclass
class ConstantTable:
    """Constants used on the right-hand sides, each with a provenance string."""

    K_G: float = 1.78222
    c: float | None = None
    overrides: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=lambda: {
        "K_G": "literature upper bound for the real Grothendieck constant",
        "B_r": "Haagerup's best constants in Khintchine's inequality",
        "C_2": "cotype 2 constant of l_q (q <= 2) as the reciprocal lower Khintchine constant",
        "C_q": "estimate: maximization over small Rademacher families",
        "c": "unspecified universal constant; measured, never asserted",
    })

    def __post_init__(self):
        if self.K_G < 1:
            raise ValueError("K_G must be at least 1")
        if self.c is not None and self.c <= 0:
            raise ValueError("c must be positive")

    def B(self, r: float) -> float:
        return self.overrides.get(f"B_{r:g}", khintchine_upper(r))

    def C2(self, q: float) -> float:
        """Cotype 2 constant of l_q, q <= 2."""
        return self.overrides.get(f"C_2(l_{q:g})", cotype2_lq(q))

    def Cq(self, q: float, u: float, dim: int) -> float:
        key = f"C_{q:g}(l_{u:g})"
        if key in self.overrides:
            return self.overrides[key]
        return _cotype_cached(q, u, dim)

    def to_dict(self) -> dict:
        return {"K_G": self.K_G, "c": self.c, "overrides": self.overrides,
                "provenance": self.provenance}

    @classmethod
    def from_dict(cls, d: dict) -> ConstantTable:
        t = cls(K_G=d.get("K_G", 1.78222), c=d.get("c"), overrides=dict(d.get("overrides", {})))
        t.provenance.update(d.get("provenance", {}))
        return t

    @classmethod
    def load(cls, path) -> ConstantTable:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


DEFAULT_TABLE = ConstantTable()


@dataclass
class InequalityReport:
    name: str
    instances: int = 0
    excluded: int = 0
    worst_margin: float = math.inf
    passed: bool | None = True
    constants: dict = field(default_factory=dict)
    min_c: float | None = None
    tol: float = 1e-6
    margins: list = field(default_factory=list)

    def record(self, lhs: float, rhs: float):
        self.instances += 1
        m = rhs - lhs
        self.margins.append(m)
        self.worst_margin = min(self.worst_margin, m)
        if self.passed is not None:
            self.passed = self.worst_margin >= -self.tol

    def to_dict(self) -> dict:
        return {"name": self.name, "instances": self.instances, "excluded": self.excluded,
                "worst_margin": None if math.isinf(self.worst_margin) else self.worst_margin,
                "pass": self.passed, "constants": self.constants, "min_c": self.min_c,
                "tol": self.tol}


def _random_operator(rng, n, m, u, v) -> OperatorMatrix:
    return OperatorMatrix.from_array(rng.uniform(-1, 1, (m, n)), u, v)


def check_grothendieck(dims=(3, 3), samples: int = 100, seed: int = 0,
                       table: ConstantTable = DEFAULT_TABLE, config: RunConfig = DEFAULT,
                       operators=None) -> InequalityReport:
    """kappa_1(T) <= K_G ||T|| for T: l_2^n -> l_inf^m."""
    rep = InequalityReport("l2l1", constants={"K_G": table.K_G})
    rng = np.random.default_rng(seed)
    n, m = dims
    ops = operators if operators is not None else (
        _random_operator(rng, n, m, 2, INF) for _ in range(samples))
    for T in ops:
        if T.domain.u != 2 or not math.isinf(T.codomain.u):
            raise ValueError("the Grothendieck check needs l_2 -> l_inf")
        k = kappa_norm(T, 1, config)
        if not k.converged:
            rep.excluded += 1
            continue
        rep.record(k.lower, table.K_G * operator_norm(T, config).upper)
    return rep


def check_mega(T: OperatorMatrix, r, s, A: float, config: RunConfig = DEFAULT,
               tol: float = 1e-6) -> InequalityReport:
    """kappa_r(T) <= A kappa_s(T), given the constant A transferred from the summing side."""
    if r > s:
        raise ValueError("need r <= s")
    rep = InequalityReport("mega", constants={"A": A}, tol=tol)
    lhs = kappa_norm(T, r, config).lower
    rhs = A * kappa_norm(T, s, config).upper
    rep.record(lhs, rhs)
    return rep


# ---------------------------------------------------------------------------
# cotype families


def _linfty_a(t, u, v, r, dim):
    c2 = t.C2(dual_exponent(u))
    return (c2**2 * (1 + math.log(c2))) ** (1.0 / r), 1.0 / r


def _linfty_b(q):
    def f(t, u, v, r, dim):
        rp = dual_exponent(r)
        return q**-1 * (1 / q - 1 / r) ** (-1 / rp) * t.Cq(q, dual_exponent(u), dim), 1.0
    return f


def _nohipo_a(t, u, v, r, dim):
    return t.B(r) * t.C2(dual_exponent(u)), None


def _nohipo_b(t, u, v, r, dim):
    c2 = t.C2(dual_exponent(v))
    return c2 * math.sqrt(1 + math.log(c2)), 1.0


def _nohipo_c(q):
    def f(t, u, v, r, dim):
        rp = dual_exponent(r)
        return q**-1 * (1 / q - 1 / rp) ** (-1 / r) * t.Cq(q, dual_exponent(v), dim), 1.0
    return f


# name -> (domain exponents, codomain exponents, lhs exponent, rhs exponent);
# a rhs exponent of None means the operator norm
FAMILIES = {
    "l2l1": ((2.0,), (INF,), 1.0, None),
    "linfty-a": ((2.0, 4.0, INF), (1.0,), 2.0, None),
    "linfty-b": ((4.0 / 3.0,), (1.0,), 6.0, None),
    "nohipo-a": ((2.0, INF), (1.0, 2.0, INF), 2.0, 4.0),
    "nohipo-b": ((1.0, 2.0, INF), (2.0, INF), 1.0, 2.0),
    "nohipo-c": ((1.0, 2.0, INF), (4.0 / 3.0,), 1.0, 1.2),
}
COTYPE_Q = 4.0


def _rhs_factor(name, t: ConstantTable, u, v, dim):
    """(factor, exponent of c or None) for the family's right-hand side."""
    if name == "l2l1":
        return t.K_G, None
    if name == "linfty-a":
        r = FAMILIES[name][2]
        return _linfty_a(t, u, v, r, dim)
    if name == "linfty-b":
        return _linfty_b(COTYPE_Q)(t, u, v, FAMILIES[name][2], dim)
    if name == "nohipo-a":
        return _nohipo_a(t, u, v, FAMILIES[name][3], dim)
    if name == "nohipo-b":
        return _nohipo_b(t, u, v, None, dim)
    if name == "nohipo-c":
        return _nohipo_c(COTYPE_Q)(t, u, v, FAMILIES[name][3], dim)
    raise KeyError(name)


def check_cotype_family(family: str, dims=(2, 4), samples: int = 100, seed: int = 0,
                        table: ConstantTable = DEFAULT_TABLE, config: RunConfig = DEFAULT,
                        operators=None) -> InequalityReport:
    """Run one inequality family on random operators with dimensions in ``dims`` (inclusive range).

    The report carries ``min_c``: for families with a universal c, the least
    value for which every sampled instance satisfies the inequality (the
    lhs uses lower bounds and the rhs upper bounds, so it is a valid
    requirement on c); for the others, the least multiplier on the table
    factor that would still make every instance hold.
    """
    if family not in FAMILIES:
        raise KeyError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}")
    us, vs, r_lhs, r_rhs = FAMILIES[family]
    rng = np.random.default_rng(seed)
    rep = InequalityReport(family)
    if family == "l2l1":
        rep.constants = {"K_G": table.K_G}
    rep.constants.update({"r_lhs": exponent_to_json(r_lhs),
                          "r_rhs": None if r_rhs is None else exponent_to_json(r_rhs)})
    universal = None
    cache = {}
    if operators is None:
        lo, hi = dims
        operators = []
        for _ in range(samples):
            n, m = rng.integers(lo, hi + 1, size=2)
            operators.append(_random_operator(rng, int(n), int(m), rng.choice(us), rng.choice(vs)))
    for T in operators:
        u, v = T.domain.u, T.codomain.u
        dim = T.domain.dim if family.startswith("linfty") else T.codomain.dim
        key = (u, v, dim)
        if key not in cache:
            cache[key] = _rhs_factor(family, table, u, v, dim)
        factor, c_exp = cache[key]
        rep.constants[f"factor(u={exponent_to_json(u)},v={exponent_to_json(v)},n={dim})"] = factor
        lhs = kappa_norm(T, r_lhs, config)
        rhs_est = operator_norm(T, config) if r_rhs is None else kappa_norm(T, r_rhs, config)
        if not lhs.converged or not rhs_est.converged:
            rep.excluded += 1
            continue
        rhs = factor * rhs_est.upper
        ratio = 0.0 if lhs.lower == 0 else lhs.lower / rhs if rhs > 0 else INF
        if c_exp is None:
            # no c in this family: min_c is the least multiplier on the table factor
            rep.min_c = ratio if rep.min_c is None else max(rep.min_c, ratio)
            rep.record(lhs.lower, rhs)
            continue
        universal = c_exp
        # lhs <= c^e * rhs  <=>  c >= (lhs / rhs)^(1/e)
        need = ratio ** (1.0 / c_exp)
        rep.min_c = need if rep.min_c is None else max(rep.min_c, need)
        cval = table.c
        rep.record(lhs.lower, (cval ** c_exp if cval is not None else 1.0) * rhs)
    if universal is not None:
        rep.constants["c_exponent"] = universal
        rep.constants["c"] = table.c
        if table.c is None:
            rep.passed = None  # nothing to assert without a value for c
    return rep
