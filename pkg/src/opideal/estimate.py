from __future__ import annotations

import math
from dataclasses import dataclass, field


def _num(x):
    if x is None:
        return None
    x = float(x)
    return "inf" if math.isinf(x) else x


def _unnum(x):
    if x == "inf":
        return math.inf
    return None if x is None else float(x)


@dataclass
class NormEstimate:
    """A certified interval [lower, upper] for an ideal norm."""

    lower: float
    upper: float
    status: str = "converged"  # or "unconverged"
    method: str = ""
    lower_witness: dict | None = None
    upper_witness: dict | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = max(0.0, float(self.lower))
        self.upper = max(0.0, float(self.upper))
        if self.lower > self.upper:
            # rounding noise only; callers enforce lower <= upper + tol
            if self.lower - self.upper <= 1e-9 * max(1.0, self.upper):
                self.lower = self.upper
            else:
                raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @property
    def rel_gap(self) -> float:
        if self.upper == 0:
            return 0.0
        if self.lower == 0:
            return math.inf
        return self.upper / self.lower - 1.0

    def scaled(self, c: float) -> NormEstimate:
        c = abs(c)
        return NormEstimate(c * self.lower, c * self.upper, self.status, self.method,
                            self.lower_witness, self.upper_witness, dict(self.extra))

    def to_dict(self) -> dict:
        return {
            "lower": _num(self.lower),
            "upper": _num(self.upper),
            "status": self.status,
            "method": self.method,
            "witness": {"lower": self.lower_witness, "upper": self.upper_witness},
            **({"extra": self.extra} if self.extra else {}),
        }

    @classmethod
    def from_dict(cls, d: dict) -> NormEstimate:
        w = d.get("witness") or {}
        return cls(_unnum(d["lower"]), _unnum(d["upper"]), d.get("status", "converged"),
                   d.get("method", ""), w.get("lower"), w.get("upper"), d.get("extra", {}))
