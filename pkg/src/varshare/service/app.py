"""FastAPI service exposing the allocation and estimation pipelines.

Run it with ``uvicorn varshare.service.app:app``.  Contract violations map to
422, numerical failures to 500; degenerate games are not errors and come back
in-band with their flag set.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..allocations import (
    detect_exogenous,
    pme_from_total_indices,
    proportional_values,
    proportional_values_extended,
    shapley_effects_from_indices,
)
from ..coalitions import GameTable
from ..errors import (
    ComplexityGuardError,
    ContractError,
    DegenerateGameError,
    DimensionError,
    LinearAlgebraError,
    PositivityError,
    TableParseError,
    VarshareError,
)
from ..experiments import EstimateConfig, run_estimate, toycase_sweep
from .schemas import (
    AllocationPayload,
    AllocRequest,
    AllocResponse,
    EstimateRequest,
    EstimateResponse,
    HealthResponse,
    PlayerRowPayload,
    SweepRowPayload,
    ToycaseRequest,
    ToycaseResponse,
)

_CONTRACT_ERRORS = (
    ContractError,
    DimensionError,
    PositivityError,
    ComplexityGuardError,
    TableParseError,
)


def create_app() -> FastAPI:
    app = FastAPI(title="varshare", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _schema_error(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        # rebuild the issue list without the echoed input, which may not be
        # JSON-serializable (e.g. a rejected non-finite float)
        issues = [
            {
                "loc": [str(part) for part in issue.get("loc", [])],
                "msg": str(issue.get("msg", "")),
            }
            for issue in exc.errors()
        ]
        return JSONResponse(
            status_code=422, content={"detail": issues, "code": "contract"}
        )

    @app.exception_handler(VarshareError)
    async def _varshare_error(request: Request, exc: VarshareError) -> JSONResponse:
        if isinstance(exc, _CONTRACT_ERRORS):
            return JSONResponse(
                status_code=422, content={"detail": str(exc), "code": "contract"}
            )
        if isinstance(exc, DegenerateGameError):
            return JSONResponse(
                status_code=422, content={"detail": str(exc), "code": "degenerate"}
            )
        # LinearAlgebraError and anything else numerical
        return JSONResponse(
            status_code=500, content={"detail": str(exc), "code": "numerical"}
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/alloc", response_model=AllocResponse)
    def alloc(req: AllocRequest) -> AllocResponse:
        table = GameTable.from_values(req.table.d, np.asarray(req.table.values))
        results: list[AllocationPayload] = []
        notes: list[str] = []
        exogenous: set[int] = set()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            for method in req.methods:
                if method == "shapley":
                    out = shapley_effects_from_indices(table)
                elif method == "pme":
                    out = pme_from_total_indices(table, req.zero_tol)
                elif method == "pv0":
                    out = proportional_values_extended(table, req.zero_tol)
                else:
                    out = proportional_values(table)
                results.append(
                    AllocationPayload(
                        method=out.method.value,
                        shares=[float(s) for s in out.shares],
                        total=out.total,
                        degenerate=out.degenerate,
                    )
                )
                if method in ("pme", "pv0"):
                    exogenous |= {
                        i + 1 for i in detect_exogenous(table, req.zero_tol)
                    }
        notes.extend(str(w.message) for w in caught)
        return AllocResponse(
            d=table.d,
            allocations=results,
            exogenous=sorted(exogenous),
            warnings=sorted(set(notes)),
        )

    @app.post("/toycase", response_model=ToycaseResponse)
    def toycase(req: ToycaseRequest) -> ToycaseResponse:
        rows = toycase_sweep(
            req.case,
            req.param,
            req.values,
            rho=req.rho,
            beta=req.beta,
            alpha=req.alpha,
            tau=req.zero_tol,
        )
        return ToycaseResponse(case=req.case, rows=[SweepRowPayload(**r) for r in rows])

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        cfg = EstimateConfig(
            model=req.model,
            method=req.method,
            case=req.case,
            rho=req.rho,
            beta=req.beta,
            n=req.n,
            k=req.k,
            nv=req.nv,
            no=req.no,
            ni=req.ni,
            reps=req.reps,
            scheme=req.scheme,
            level=req.level,
            seed=req.seed,
            tau=req.zero_tol,
            jobs=req.jobs,
        )
        start = time.perf_counter()
        result = run_estimate(cfg)
        elapsed = time.perf_counter() - start
        return EstimateResponse(
            model=req.model,
            method=req.method,
            degenerate=result.degenerate,
            rows=[PlayerRowPayload(**r) for r in result.rows],
            elapsed_seconds=elapsed,
        )

    return app


app = create_app()
