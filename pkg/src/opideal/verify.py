"""Re-verification of serialized reports without rerunning any search.

Every report embeds the operator and both witnesses.  Lower witnesses are
families with (recomputed) weak norm; upper witnesses are domination
measures, functional families, covers or decompositions.  Each is turned
back into a bound from its vectors alone and the two bounds are compared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from opideal.config import DEFAULT, RunConfig
from opideal.kompact import Cover, containment_scale
from opideal.nuclear import RECONSTRUCTION_TOL, Decomposition, decomposition_cost
from opideal.spaces import VectorSequence, as_exponent, lp_norm, weak_p_norm
from opideal.summing import OperatorMatrix, domination_ratio, operator_norm, transpose

REL_TOL = 1e-6
VERIFY_RESTARTS = 64


@dataclass
class Verification:
    kind: str
    lower: float
    upper: float
    stated_lower: float
    stated_upper: float
    ok: bool
    notes: list

    def to_dict(self) -> dict:
        def num(x):
            return "inf" if math.isinf(x) else x
        return {"kind": self.kind, "lower": num(self.lower), "upper": num(self.upper),
                "stated_lower": num(self.stated_lower), "stated_upper": num(self.stated_upper),
                "ok": self.ok, "notes": self.notes}


def _num(x) -> float:
    return math.inf if x == "inf" else float(x)


def pietsch_lower(S: OperatorMatrix, w: dict, rng) -> float:
    """(sum ||S x_i||^p)^(1/p) / weak norm of (x_i), from the witness vectors."""
    X = np.atleast_2d(np.asarray(w["vectors"], dtype=float))
    p = as_exponent(w["p"])
    value = float(lp_norm(lp_norm(X @ S.entries.T, S.codomain.u, axis=1), p))
    if value == 0:
        return 0.0
    weak = weak_p_norm(VectorSequence(X, S.domain, p), rng, VERIFY_RESTARTS).upper
    return value / weak


def functional_upper(S: OperatorMatrix, F: np.ndarray, p: float, rng) -> float:
    """cost of the family times the worst domination ratio sup ||Sx|| / ||(f_k(x))||_p."""
    F = np.atleast_2d(F)
    cost = float(lp_norm(lp_norm(F, S.domain.dual().u, axis=1), p))
    if S.is_zero():
        return 0.0
    if cost == 0:
        return math.inf
    R, _, _ = domination_ratio(S.entries, F, p, S.codomain.u, rng, restarts=VERIFY_RESTARTS // 2)
    return cost * R


def domination_upper(S: OperatorMatrix, c: dict, rng) -> float:
    p = as_exponent(c["p"])
    atoms = np.atleast_2d(np.asarray(c["atoms"], dtype=float))
    mu = np.asarray(c["weights"], dtype=float)
    F = float(c["constant"]) * mu[:, None] ** (1.0 / p) * atoms
    return functional_upper(S, F, p, rng)


def _lower_from(report_kind: str, T: OperatorMatrix, w: dict | None, rng) -> tuple[float, str]:
    if w is None:
        return 0.0, "no lower witness"
    if "vector" in w:
        x = np.asarray(w["vector"], dtype=float)
        nx = lp_norm(x, T.domain.u)
        return (float(lp_norm(T.entries @ x, T.codomain.u) / nx) if nx > 0 else 0.0), "vector"
    target = transpose(T) if w.get("acts_on", "operator") == "adjoint" else T
    return pietsch_lower(target, w, rng), f"pietsch on {w.get('acts_on', 'operator')}"


def _upper_from(report_kind: str, T: OperatorMatrix, w: dict | None, rng,
                config: RunConfig) -> tuple[float, str]:
    if report_kind == "op":
        return operator_norm(T, config).upper, "recomputed"
    if w is None:
        return math.inf, "no upper witness"
    kind = w.get("kind")
    if kind == "domination":
        return domination_upper(T, w, rng), "domination"
    if kind == "quasi_nuclear":
        f = VectorSequence.from_dict(w["functionals"])
        return functional_upper(T, f.items, f.p, rng), "functionals"
    if kind == "cover":
        cover = Cover.from_dict(w)
        if T.is_zero():
            return 0.0, "cover"
        scale, _ = containment_scale(T, cover, config)
        return cover.cost * scale, "cover"
    if kind == "decomposition":
        dec = Decomposition.from_dict(w)
        resid = float(np.abs(dec.matrix() - T.entries).max())
        if resid > RECONSTRUCTION_TOL * max(1.0, np.abs(T.entries).max()):
            return math.inf, f"reconstruction residual {resid:.3g}"
        return decomposition_cost(dec, rng), "decomposition"
    raise ValueError(f"unknown witness kind {kind!r}")


def verify_report(report: dict, config: RunConfig = DEFAULT) -> Verification:
    """Recompute both bounds of a norm report from its embedded certificates."""
    T = OperatorMatrix.from_dict(report["operator"])
    est = report["estimate"]
    kind = report["kind"]
    if str(report.get("p")) == "inf":
        kind = "op"  # every ideal norm at p = inf is reported as the operator norm
    rng = np.random.default_rng(config.seed)
    stated_lo, stated_hi = _num(est["lower"]), _num(est["upper"])
    wit = est.get("witness") or {}
    if stated_hi == 0 and stated_lo == 0:
        ok = T.is_zero()
        return Verification(kind, 0.0, 0.0, 0.0, 0.0, ok, ["zero operator"])
    lo, n1 = _lower_from(kind, T, wit.get("lower"), rng)
    hi, n2 = _upper_from(kind, T, wit.get("upper"), rng, config)
    slack = REL_TOL * max(1.0, stated_hi if math.isfinite(stated_hi) else 1.0)
    notes = [n1, n2]
    ok = lo <= hi + slack
    if lo < stated_lo - slack:
        ok = False
        notes.append("lower witness does not reproduce the stated lower bound")
    if hi > stated_hi + slack:
        ok = False
        notes.append("upper witness does not reproduce the stated upper bound")
    return Verification(kind, lo, hi, stated_lo, stated_hi, bool(ok), notes)
