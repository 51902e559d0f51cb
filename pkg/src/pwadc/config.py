"""Tolerances, caps and sampling defaults shared by all modules."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

EPS_FEAS = 1e-8
EPS_GEO = 1e-7
EPS_DIM = 1e-7
EPS_CONT = 1e-6


@dataclass(frozen=True)
class Config:
    eps_feas: float = EPS_FEAS
    eps_geo: float = EPS_GEO
    eps_dim: float = EPS_DIM
    eps_cont: float = EPS_CONT
    cell_cap: int = 100_000
    region_cap: int = 100_000
    n_samples: int = 10_000
    seed: int = 42

    def __post_init__(self):
        for name in ("eps_feas", "eps_geo", "eps_dim", "eps_cont"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("cell_cap", "region_cap", "n_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def with_overrides(self, **kw) -> "Config":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, path: str | Path) -> "Config":
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


DEFAULT = Config()
