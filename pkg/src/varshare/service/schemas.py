"""Request and response bodies for the HTTP service."""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, Field, field_validator

AllocMethodName = Literal["shapley", "pme", "pv", "pv0"]


class GameTablePayload(BaseModel):
    """A dense value table: values[mask] for every coalition bitmask."""

    d: int = Field(ge=1, le=20)
    values: list[float]

    @field_validator("values")
    @classmethod
    def _finite(cls, v: list[float]) -> list[float]:
        if any(not math.isfinite(x) for x in v):
            raise ValueError("value table contains non-finite entries")
        return v


class AllocRequest(BaseModel):
    table: GameTablePayload
    methods: list[AllocMethodName] = ["shapley", "pme"]
    zero_tol: float = Field(default=0.0, ge=0.0)


class AllocationPayload(BaseModel):
    method: str
    shares: list[float]
    total: float
    degenerate: bool


class AllocResponse(BaseModel):
    d: int
    allocations: list[AllocationPayload]
    # 1-based players guaranteed zero PME, present when pme or pv0 was requested
    exogenous: list[int]
    warnings: list[str]


class ToycaseRequest(BaseModel):
    case: Literal[
        "exogenous-linear", "unbalanced-linear", "interaction-linear", "shapley-joke"
    ]
    param: Literal["rho", "beta", "alpha"] = "rho"
    values: list[float]
    rho: float = 0.0
    beta: float = 2.0
    alpha: float = 0.0
    zero_tol: float = Field(default=0.0, ge=0.0)

    @field_validator("values")
    @classmethod
    def _finite(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("sweep grid is empty")
        if any(not math.isfinite(x) for x in v):
            raise ValueError("sweep grid contains non-finite entries")
        return v


class SweepRowPayload(BaseModel):
    param_name: str
    param_value: float
    player: int
    shapley: float
    pme: float


class ToycaseResponse(BaseModel):
    case: str
    rows: list[SweepRowPayload]


class EstimateRequest(BaseModel):
    model: Literal["ishigami", "robot", "gaussian-linear"] = "ishigami"
    method: Literal["mc", "knn"] = "mc"
    case: Literal["exogenous-linear", "unbalanced-linear", "shapley-joke"] = (
        "exogenous-linear"
    )
    rho: float = 0.0
    beta: float = 2.0
    n: int = Field(default=2000, ge=2)
    k: int = Field(default=6, ge=2)
    nv: int = Field(default=20000, ge=2)
    no: int = Field(default=500, ge=1)
    ni: int = Field(default=100, ge=2)
    reps: int = Field(default=20, ge=1)
    scheme: Literal["independent-seeds", "subsample-80"] | None = None
    level: float = Field(default=0.9, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0)
    zero_tol: float = Field(default=0.0, ge=0.0)
    jobs: int = Field(default=1, ge=1)


class PlayerRowPayload(BaseModel):
    player: int
    input: str
    method: str
    mean: float
    ci_low: float
    ci_high: float
    ci_level: float
    replications: int


class EstimateResponse(BaseModel):
    model: str
    method: str
    degenerate: bool
    rows: list[PlayerRowPayload]
    elapsed_seconds: float


class HealthResponse(BaseModel):
    status: str
    version: str
