"""High-level pipelines shared by the service and the command line.

These functions wire models, samplers, estimators, and allocation rules into
the two deliverables: exact sweeps over a reference case's parameter, and
replicated estimation studies reporting Shapley effects and proportional
marginal effects with confidence intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .estimators import (
    DataSet,
    KnnJob,
    McJob,
    ReplicationScheme,
    ReplicationStudy,
    replicate_with_ci,
)
from .gaussian import ToyCase, toycase_allocations, toycase_model
from .models import (
    ISHIGAMI_NAMES,
    ROBOT_NAMES,
    GaussianSampler,
    derive_rng,
    ishigami,
    ishigami_input_law,
    robot_arm_from_columns,
    sample_gaussian,
    sample_robot_inputs,
)

SWEEPABLE = {"rho", "beta", "alpha"}
# dataset-generation stream label, distinct from the estimator streams
_STREAM_DATASET = 100


def toycase_sweep(
    case: ToyCase,
    param: str,
    values,
    *,
    rho: float = 0.0,
    beta: float = 2.0,
    alpha: float = 0.0,
    tau: float = 0.0,
) -> list[dict]:
    """Exact Shapley and PME shares over a grid of one case parameter.

    Returns one row dict per (grid value, player), ready for the sweep CSV.
    """
    case = ToyCase(case)
    if param not in SWEEPABLE:
        raise ContractError(f"param must be one of {sorted(SWEEPABLE)}, got {param!r}")
    if param == "alpha" and case is not ToyCase.INTERACTION_LINEAR:
        raise ContractError("only the interaction case has an alpha parameter")
    if param == "beta" and case is not ToyCase.UNBALANCED_LINEAR:
        raise ContractError("only the unbalanced case has a beta parameter")
    values = [float(v) for v in values]
    if not values:
        raise ContractError("sweep grid is empty")
    rows: list[dict] = []
    for value in values:
        kwargs = {"rho": rho, "beta": beta, "alpha": alpha, param: value}
        sh, pme = toycase_allocations(case, tau=tau, **kwargs)
        for i in range(sh.d):
            rows.append(
                {
                    "param_name": param,
                    "param_value": value,
                    "player": i + 1,
                    "shapley": float(sh.shares[i]),
                    "pme": float(pme.shares[i]),
                }
            )
    return rows


@dataclass(frozen=True)
class EstimateConfig:
    """Everything needed to run one replicated estimation study."""

    model: str = "ishigami"
    method: str = "mc"
    case: str = ToyCase.EXOGENOUS_LINEAR.value
    rho: float = 0.0
    beta: float = 2.0
    n: int = 2000
    k: int = 6
    nv: int = 20000
    no: int = 500
    ni: int = 100
    reps: int = 20
    scheme: str | None = None
    level: float = 0.9
    seed: int = 0
    tau: float = 0.0
    jobs: int = 1


@dataclass(frozen=True)
class EstimateResult:
    config: EstimateConfig
    names: tuple[str, ...]
    study: ReplicationStudy
    rows: list[dict]

    @property
    def degenerate(self) -> bool:
        return bool(
            np.all(self.study.shapley.samples == 0.0)
            and np.all(self.study.pme.samples == 0.0)
        )


def _build_job(cfg: EstimateConfig) -> tuple[McJob | KnnJob, tuple[str, ...]]:
    if cfg.model == "ishigami":
        fn = ishigami
        names = ISHIGAMI_NAMES
        mu, sigma = ishigami_input_law(cfg.rho)
        if cfg.method == "mc":
            return McJob(fn, GaussianSampler(mu, sigma), cfg.nv, cfg.no, cfg.ni), names
        x = sample_gaussian(mu, sigma, cfg.n, derive_rng(cfg.seed, _STREAM_DATASET))
        return KnnJob(DataSet(x, fn(x)), cfg.k), names
    if cfg.model == "robot":
        if cfg.method == "mc":
            raise ContractError(
                "the robot input law has no conditional sampler; use method 'knn'"
            )
        x = sample_robot_inputs(cfg.n, derive_rng(cfg.seed, _STREAM_DATASET))
        return KnnJob(DataSet(x, robot_arm_from_columns(x)), cfg.k), ROBOT_NAMES
    if cfg.model == "gaussian-linear":
        model = toycase_model(ToyCase(cfg.case), rho=cfg.rho, beta=cfg.beta)
        names = tuple(f"X{i + 1}" for i in range(model.d))
        if cfg.method == "mc":
            sampler = GaussianSampler(model.mu, model.sigma)
            return McJob(model.evaluate, sampler, cfg.nv, cfg.no, cfg.ni), names
        x = sample_gaussian(
            model.mu, model.sigma, cfg.n, derive_rng(cfg.seed, _STREAM_DATASET)
        )
        return KnnJob(DataSet(x, model.evaluate(x)), cfg.k), names
    raise ContractError(
        f"model must be 'ishigami', 'robot', or 'gaussian-linear', got {cfg.model!r}"
    )


def run_estimate(cfg: EstimateConfig) -> EstimateResult:
    """Replicated estimation: total-index tables, then both allocation rules."""
    if cfg.method not in ("mc", "knn"):
        raise ContractError(f"method must be 'mc' or 'knn', got {cfg.method!r}")
    job, names = _build_job(cfg)
    if cfg.scheme is None:
        scheme = (
            ReplicationScheme.INDEPENDENT_SEEDS
            if cfg.method == "mc"
            else ReplicationScheme.SUBSAMPLE_80
        )
    else:
        scheme = ReplicationScheme(cfg.scheme)
    study = replicate_with_ci(
        job,
        reps=cfg.reps,
        scheme=scheme,
        level=cfg.level,
        seed=cfg.seed,
        tau=cfg.tau,
        n_jobs=cfg.jobs,
    )
    rows: list[dict] = []
    for summary in (study.shapley, study.pme):
        for i, name in enumerate(names):
            rows.append(
                {
                    "player": i + 1,
                    "input": name,
                    "method": summary.method.value,
                    "mean": float(summary.mean[i]),
                    "ci_low": float(summary.ci_low[i]),
                    "ci_high": float(summary.ci_high[i]),
                    "ci_level": float(summary.level),
                    "replications": study.reps,
                }
            )
    return EstimateResult(config=cfg, names=names, study=study, rows=rows)
