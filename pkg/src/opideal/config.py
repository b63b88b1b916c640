from __future__ import annotations

import os
from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class RunConfig:
    """Numeric defaults shared by every estimator; echoed into report headers."""

    seed: int = 0
    # tolerances
    gap_rel: float = 0.05
    feas: float = 1e-7
    gap_stop: float = 1e-2
    # budgets
    restarts: int = 32
    max_iter: int = 500
    engine_rounds: int = 60
    kappa_rounds: int = 10
    max_atoms: int = 600
    functional_budget: int | None = None
    rank_budget: int | None = None
    nuclear_rounds: int = 200
    nuclear_restarts: int = 3
    witness_ascent: bool = True
    # output
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        for name in ("gap_rel", "feas", "gap_stop"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("restarts", "max_iter", "engine_rounds", "kappa_rounds", "max_atoms",
                     "nuclear_rounds", "nuclear_restarts"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("functional_budget", "rank_budget"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.format not in ("json", "csv"):
            raise ValueError("format must be json or csv")

    def with_(self, **kw) -> RunConfig:
        return replace(self, **kw)

    def numeric(self) -> dict:
        d = asdict(self)
        d.pop("output")
        d.pop("format")
        return d

    @classmethod
    def from_env(cls, **kw) -> RunConfig:
        seed = os.environ.get("OPIDEAL_SEED")
        if seed is not None:
            kw["seed"] = int(seed)
        return cls(**kw)


DEFAULT = RunConfig()
