"""Limit orders of the p-compact ideal between l_u spaces, and empirical growth fits.

lambda(K_r, u, v) is the growth exponent of kappa_r(id: l_u^n -> l_v^n) in n.
The closed forms are piecewise in (u, v); membership of each piece is tested
on reciprocal exponents so that u = inf needs no special casing.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from opideal.config import DEFAULT, RunConfig
from opideal.spaces import as_exponent, dual_exponent, exponent_to_json, recip
from opideal.summing import OperatorMatrix

BOUNDARY_TOL = 1e-12
SLOPE_BAND = 0.15
BOUNDED_RATIO = 1.5


class RegionError(RuntimeError):
    """No piece of the limit-order table matched, or matching pieces disagree."""


@dataclass(frozen=True)
class LimitOrderQuery:
    r: float
    u: float
    v: float

    def __post_init__(self):
        r, u, v = (as_exponent(x) for x in (self.r, self.u, self.v))
        if math.isinf(r):
            raise ValueError("the limit-order table covers 1 <= r < inf")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    def to_dict(self) -> dict:
        return {k: exponent_to_json(getattr(self, k)) for k in ("r", "u", "v")}


@dataclass(frozen=True)
class LimitOrder:
    value: float
    region: str
    matched: tuple[str, ...]


def _between(x, lo, hi, tol=BOUNDARY_TOL):
    """lo <= x <= hi for reciprocals, i.e. exponents ordered the other way round."""
    return lo - tol <= x <= hi + tol


def _pieces(r: float, u: float, v: float):
    """All (tag, value) pieces of the table whose region contains (u, v)."""
    ir, iu, iv = recip(r), recip(u), recip(v)
    irp = 1.0 - ir  # 1/r'
    half = 0.5
    out = []
    # every condition "a <= x <= b" on exponents becomes "1/b <= 1/x <= 1/a"
    v_le_r = _between(iv, ir, 1.0)
    u_le_rp = _between(iu, irp, 1.0)
    u_ge_rp = _between(iu, 0.0, irp)
    u_le_2 = _between(iu, half, 1.0)
    u_ge_2 = _between(iu, 0.0, half)
    v_ge_2 = _between(iv, 0.0, half)
    if r <= 2:
        v_r_2 = _between(iv, half, ir)
        u_le_vp = _between(iu, 1.0 - iv, 1.0)
        u_ge_vp = _between(iu, 0.0, 1.0 - iv)
        if v_le_r and u_le_rp:
            out.append(("a1", ir))
        if v_le_r and u_ge_rp:
            out.append(("a2", 1.0 - iu))
        if v_r_2 and u_le_vp:
            out.append(("a3", iv))
        if v_r_2 and u_ge_vp:
            out.append(("a4", 1.0 - iu))
        if v_ge_2 and u_le_2:
            out.append(("a5", iv))
        if v_ge_2 and u_ge_2:
            out.append(("a6", half - iu + iv))
    else:
        v_le_2 = _between(iv, half, 1.0)
        v_2_r = _between(iv, ir, half)
        v_ge_r = _between(iv, 0.0, ir)
        u_rp_2 = _between(iu, half, irp)
        if v_le_r and u_le_rp:
            out.append(("b1", ir))
        if v_le_2 and u_ge_rp:
            out.append(("b2", 1.0 - iu))
        if v_2_r and u_rp_2:
            rho = ir + (iv - ir) * (irp - iu) / (half - ir)
            out.append(("b3", rho))
        if v_ge_r and u_le_2:
            out.append(("b4", iv))
        if v_ge_2 and u_ge_2:
            out.append(("b5", half - iu + iv))
    return out


def limit_order_formula(q: LimitOrderQuery) -> LimitOrder:
    """lambda(K_r, u, v) with the table piece that produced it.

    On region boundaries every matching piece is evaluated and they must
    agree to 1e-12.
    """
    pieces = _pieces(q.r, q.u, q.v)
    if not pieces:
        raise RegionError(f"no region contains {q}")
    vals = [val for _, val in pieces]
    if max(vals) - min(vals) > BOUNDARY_TOL:
        raise RegionError(f"pieces disagree at {q}: {pieces}")
    return LimitOrder(float(vals[0]), pieces[0][0], tuple(t for t, _ in pieces))


def limit_order_summing(q: LimitOrderQuery) -> float:
    """lambda(Pi_r, u, v), read from the compact table as lambda(K_r, v', u')."""
    swapped = LimitOrderQuery(q.r, dual_exponent(q.v), dual_exponent(q.u))
    return limit_order_formula(swapped).value


# ---------------------------------------------------------------------------
# empirical growth


def fit_slope(dims, lowers, uppers) -> tuple[float, float]:
    """Least-squares slope of log(midpoint) against log(n), with worst-case error.

    The error bound propagates each interval's half-width in log scale
    through the (linear) least-squares weights.
    """
    x = np.log(np.asarray(dims, dtype=float))
    lo = np.asarray(lowers, dtype=float)
    hi = np.asarray(uppers, dtype=float)
    y = np.log(0.5 * (lo + hi))
    c = (x - x.mean()) / ((x - x.mean()) ** 2).sum()
    slope = float(c @ y)
    delta = 0.5 * np.log(hi / lo)
    return slope, float(np.abs(c) @ delta)


def diagonal(n: int, lam: float, u, v) -> OperatorMatrix:
    """The truncation diag(k^-lam), k = 1..n, of the diagonal operator D_lam."""
    return OperatorMatrix.from_array(np.diag(np.arange(1, n + 1, dtype=float) ** -lam), u, v)


@dataclass
class SlopeExperiment:
    query: LimitOrderQuery
    dims: list[int]
    lowers: list[float] = field(default_factory=list)
    uppers: list[float] = field(default_factory=list)
    fitted_slope: float = math.nan
    slope_err: float = math.nan
    diag_exponent: float | None = None
    partial: bool = False

    @property
    def values(self) -> list[float]:
        return [0.5 * (a + b) for a, b in zip(self.lowers, self.uppers)]

    def bounded(self, ratio: float = BOUNDED_RATIO) -> bool:
        vals = self.values
        return max(vals) / min(vals) < ratio

    def to_dict(self) -> dict:
        return {"query": self.query.to_dict(), "dims": self.dims, "lowers": self.lowers,
                "uppers": self.uppers, "fitted_slope": self.fitted_slope,
                "slope_err": self.slope_err, "diag_exponent": self.diag_exponent,
                "partial": self.partial}


def empirical_slope(q: LimitOrderQuery, dims=range(2, 7), config: RunConfig = DEFAULT,
                    diag_exponent: float | None = None) -> SlopeExperiment:
    """Fit the growth of kappa_r over the identities (or D_lam truncations) l_u^n -> l_v^n."""
    from opideal.kompact import kappa_norm

    dims = [int(n) for n in dims]
    if any(b <= a for a, b in zip(dims, dims[1:])) or len(dims) < 2:
        raise ValueError("dims must be strictly increasing with at least two entries")
    exp = SlopeExperiment(q, dims, diag_exponent=diag_exponent)
    for n in dims:
        if diag_exponent is None:
            T = OperatorMatrix.identity(n, q.u, q.v)
        else:
            T = diagonal(n, diag_exponent, q.u, q.v)
        est = kappa_norm(T, q.r, config)
        exp.lowers.append(est.lower)
        exp.uppers.append(est.upper)
        exp.partial |= not est.converged
    exp.fitted_slope, exp.slope_err = fit_slope(dims, exp.lowers, exp.uppers)
    return exp


def verdict(formula: float, exp: SlopeExperiment, band: float = SLOPE_BAND) -> str:
    # unconverged points still carry valid intervals, already folded into slope_err
    return "agree" if abs(exp.fitted_slope - formula) <= band + exp.slope_err else "disagree"


@dataclass
class AtlasRow:
    r: float
    u: float
    v: float
    region: str
    lambda_formula: float
    slope_fit: float
    slope_err: float
    verdict: str

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("r", "u", "v"):
            d[k] = exponent_to_json(d[k])
        return d


def atlas(grid, dims=range(2, 7), config: RunConfig = DEFAULT, fit: bool = True) -> list[AtlasRow]:
    rows = []
    for r, u, v in grid:
        q = LimitOrderQuery(r, u, v)
        lo = limit_order_formula(q)
        if fit:
            exp = empirical_slope(q, dims, config)
            rows.append(AtlasRow(q.r, q.u, q.v, lo.region, lo.value, exp.fitted_slope,
                                 exp.slope_err, verdict(lo.value, exp)))
        else:
            rows.append(AtlasRow(q.r, q.u, q.v, lo.region, lo.value, math.nan, math.nan,
                                 "formula_only"))
    return rows


CSV_COLUMNS = ("r", "u", "v", "region", "lambda_formula", "slope_fit", "slope_err", "verdict")


def rows_to_csv(rows: list[AtlasRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(v) for k, v in row.to_dict().items()})
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(round(x, 12))
    return x


def rows_to_json(rows: list[AtlasRow]) -> str:
    return json.dumps([r.to_dict() for r in rows], sort_keys=True)


def sharpness_probe(r, r_tilde, u, v, slopes: bool = False, dims=range(2, 7),
                    config: RunConfig = DEFAULT) -> dict:
    """Compare limit orders at r < r_tilde; differing values predict a strict inclusion."""
    r, r_tilde = as_exponent(r), as_exponent(r_tilde)
    if r > r_tilde:
        raise ValueError("need r <= r_tilde")
    a = limit_order_formula(LimitOrderQuery(r, u, v))
    b = limit_order_formula(LimitOrderQuery(r_tilde, u, v))
    strict = abs(a.value - b.value) > BOUNDARY_TOL
    report = {
        "r": exponent_to_json(r), "r_tilde": exponent_to_json(r_tilde),
        "u": exponent_to_json(as_exponent(u)), "v": exponent_to_json(as_exponent(v)),
        "lambda_r": a.value, "lambda_r_tilde": b.value,
        "regions": [a.region, b.region],
        "verdict": "strict inclusion predicted" if strict else "no separation by limit order",
    }
    if slopes:
        report["slope_r"] = empirical_slope(LimitOrderQuery(r, u, v), dims, config).fitted_slope
        report["slope_r_tilde"] = empirical_slope(LimitOrderQuery(r_tilde, u, v), dims,
                                                  config).fitted_slope
    return report
