"""Monte Carlo and given-data estimators of total Sobol' indices.

Two routes to the same table.  The double-loop Monte Carlo route draws outer
observations of the fixed inputs and inner conditional draws of the free
ones; the mean of the unbiased inner variances over the outer loop estimates
the unnormalized total index.  The given-data route replaces conditional
sampling with nearest neighbors of each observation in the fixed inputs.
Both normalize by one shared variance estimate per table, clamp indices into
[0, 1], and pin the empty and grand coalitions to 0 and 1 exactly.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .allocations import pme_from_total_indices, shapley_effects_from_indices
from .coalitions import MAX_PLAYERS, Allocation, AllocationMethod, Coalition, GameTable
from .errors import ContractError, DimensionError
from .models import GaussianSampler, derive_rng, derive_seed

log = logging.getLogger(__name__)

SUBSAMPLE_FRACTION = 0.8


@dataclass(frozen=True)
class McBudget:
    """Sampling effort for one double-loop Monte Carlo index.

    ``nv`` draws feed the shared variance estimate; each of the ``no`` outer
    observations gets ``ni`` inner conditional draws, so one index costs
    nv + no * ni model evaluations (the variance draw is shared across a
    table).
    """

    nv: int
    no: int
    ni: int
    seed: int = 0

    def __post_init__(self) -> None:
        for name, value, least in (
            ("nv", self.nv, 2),
            ("no", self.no, 1),
            ("ni", self.ni, 2),
            ("seed", self.seed, 0),
        ):
            if not isinstance(value, (int, np.integer)) or value < least:
                raise ContractError(f"{name} must be an integer >= {least}, got {value!r}")

    @property
    def evals_per_index(self) -> int:
        return self.nv + self.no * self.ni


@dataclass(frozen=True)
class DataSet:
    """An observed sample (x, y) for given-data estimation."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if x.ndim != 2:
            raise DimensionError(f"x must be 2-D (rows, inputs), got shape {x.shape}")
        if y.shape != (x.shape[0],):
            raise DimensionError(
                f"y must have one entry per row of x: {y.shape} vs {x.shape}"
            )
        if x.shape[0] < 2:
            raise ContractError("at least 2 rows are required")
        if not 1 <= x.shape[1] <= MAX_PLAYERS:
            raise DimensionError(f"input count must be in [1, {MAX_PLAYERS}]")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ContractError("dataset contains non-finite entries")
        x = x.copy()
        y = y.copy()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_function(cls, fn, x: np.ndarray) -> "DataSet":
        x = np.asarray(x, dtype=np.float64)
        return cls(x, np.asarray(fn(x), dtype=np.float64))

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    @property
    def d(self) -> int:
        return int(self.x.shape[1])

    def take(self, rows: np.ndarray) -> "DataSet":
        return DataSet(self.x[rows], self.y[rows])


@dataclass(frozen=True)
class IndexEstimate:
    """One estimated total Sobol' index.

    ``value`` is clamped into [0, 1]; ``raw_value`` keeps the pre-clamp
    number.  Replication samples and an empirical CI are attached when the
    estimate came from a replication study.
    """

    coalition: Coalition
    value: float
    method: str
    raw_value: float = float("nan")
    replications: tuple[float, ...] | None = None
    ci: tuple[float, float] | None = None
    ci_level: float | None = None


def estimate_variance(y: np.ndarray) -> float:
    """Unbiased sample variance of the response."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ContractError("variance needs a 1-D sample with at least 2 points")
    return float(np.var(y, ddof=1))


def _clamp_index(raw: float, coalition: Coalition, method: str) -> float:
    value = min(max(raw, 0.0), 1.0)
    if value != raw:
        log.info(
            "clamped %s index of %s: %.6g -> %.1f", method, coalition, raw, value
        )
    return value


# ---------------------------------------------------------------------------
# Double-loop Monte Carlo

# fixed stream labels under one master seed
_STREAM_VARIANCE = 0
_STREAM_OUTER = 1
_STREAM_INNER = 2
_STREAM_REPLICATE = 3


def estimate_total_sobol_mc(
    model_fn,
    sampler: GaussianSampler,
    coalition: Coalition | int,
    budget: McBudget,
    *,
    variance: float | None = None,
) -> IndexEstimate:
    """Double-loop Monte Carlo estimate of one total Sobol' index.

    Draws ``no`` observations of the complement of the coalition, then ``ni``
    conditional draws of the coalition's inputs for each, and averages the
    unbiased inner variances.  The coalition's own derived streams make table
    assembly order-independent.  Pass ``variance`` to reuse a table-wide
    denominator; otherwise ``nv`` fresh draws estimate it.
    """
    d = sampler.d
    mask = coalition.bits if isinstance(coalition, Coalition) else int(coalition)
    if isinstance(coalition, Coalition) and coalition.d != d:
        raise DimensionError(f"coalition over d={coalition.d}, sampler over d={d}")
    if not 0 <= mask < (1 << d):
        raise DimensionError(f"mask {mask} out of range for d={d}")
    full = (1 << d) - 1
    who = Coalition(mask, d)
    if mask == 0:
        return IndexEstimate(who, 0.0, "double-mc", 0.0)
    if mask == full:
        return IndexEstimate(who, 1.0, "double-mc", 1.0)
    if variance is None:
        rng_v = derive_rng(budget.seed, _STREAM_VARIANCE)
        variance = estimate_variance(model_fn(sampler.joint(budget.nv, rng_v)))
    if variance <= 0.0:
        raise ContractError(
            "response variance estimate is not positive; the table-level "
            "estimator handles degenerate responses"
        )
    rng_outer = derive_rng(budget.seed, _STREAM_OUTER, mask)
    rng_inner = derive_rng(budget.seed, _STREAM_INNER, mask)
    given_mask = mask ^ full
    x_given = sampler.marginal(given_mask, budget.no, rng_outer)
    draws = sampler.conditional_batch(mask, x_given, budget.ni, rng_inner)
    free = [i for i in range(d) if mask >> i & 1]
    given = [i for i in range(d) if not mask >> i & 1]
    x_full = np.empty((budget.no, budget.ni, d), dtype=np.float64)
    x_full[:, :, free] = draws
    x_full[:, :, given] = x_given[:, None, :]
    y = np.asarray(
        model_fn(x_full.reshape(budget.no * budget.ni, d)), dtype=np.float64
    ).reshape(budget.no, budget.ni)
    raw = float(np.mean(np.var(y, axis=1, ddof=1)) / variance)
    return IndexEstimate(who, _clamp_index(raw, who, "double-mc"), "double-mc", raw)


# ---------------------------------------------------------------------------
# Given-data nearest neighbors


def _standardize_columns(z: np.ndarray) -> np.ndarray:
    scale = np.std(z, axis=0, ddof=1)
    scale[scale == 0.0] = 1.0  # constant columns carry no distance information
    return z / scale


def knn_neighbor_rows(z: np.ndarray, k: int) -> np.ndarray:
    """Row indices of the k nearest neighbors of each row, self included.

    Euclidean distance via a k-d tree.  Deterministic for fixed input;
    exactly tied distances resolve by tree order, a null event for
    continuous inputs (see knn_neighbor_rows_exhaustive for the pinned rule).
    """
    _, idx = cKDTree(z).query(z, k=k)
    if k == 1:
        idx = idx[:, None]
    return idx


def knn_neighbor_rows_exhaustive(z: np.ndarray, k: int) -> np.ndarray:
    """Reference neighbor search: all pairwise distances, ties to the lower row.

    Quadratic in the sample size; exists to pin down semantics and check the
    tree path.
    """
    n = z.shape[0]
    d2 = np.sum((z[:, None, :] - z[None, :, :]) ** 2, axis=-1)
    order = np.lexsort((np.broadcast_to(np.arange(n), (n, n)), d2), axis=1)
    return order[:, :k]


def estimate_total_sobol_knn(
    data: DataSet, coalition: Coalition | int, k: int, *, variance: float | None = None
) -> IndexEstimate:
    """Given-data estimate of one total Sobol' index.

    For each observation, the k nearest neighbors in the standardized
    complement columns (the observation itself included) approximate draws
    that share the fixed inputs; the unbiased variance of their responses
    replaces the inner conditional variance.
    """
    d = data.d
    mask = coalition.bits if isinstance(coalition, Coalition) else int(coalition)
    if isinstance(coalition, Coalition) and coalition.d != d:
        raise DimensionError(f"coalition over d={coalition.d}, data over d={d}")
    if not 0 <= mask < (1 << d):
        raise DimensionError(f"mask {mask} out of range for d={d}")
    if not isinstance(k, (int, np.integer)) or not 2 <= k <= data.n:
        raise ContractError(f"k must be an integer in [2, n={data.n}], got {k!r}")
    full = (1 << d) - 1
    who = Coalition(mask, d)
    if mask == 0:
        return IndexEstimate(who, 0.0, "knn", 0.0)
    if mask == full:
        return IndexEstimate(who, 1.0, "knn", 1.0)
    if variance is None:
        variance = estimate_variance(data.y)
    if variance <= 0.0:
        raise ContractError(
            "response variance is not positive; the table-level estimator "
            "handles degenerate responses"
        )
    given = [i for i in range(d) if not mask >> i & 1]
    z = _standardize_columns(data.x[:, given])
    idx = knn_neighbor_rows(z, int(k))
    raw = float(np.mean(np.var(data.y[idx], axis=1, ddof=1)) / variance)
    return IndexEstimate(who, _clamp_index(raw, who, "knn"), "knn", raw)


# ---------------------------------------------------------------------------
# Whole tables


def _degenerate_table(d: int) -> GameTable:
    log.warning("response variance is zero; emitting a degenerate all-zero table")
    return GameTable(d, np.zeros(1 << d), nonnegative=True, monotone=True, degenerate=True)


def estimate_all_total_indices_mc(
    model_fn, sampler: GaussianSampler, budget: McBudget, *, n_jobs: int = 1
) -> GameTable:
    """The full total-index table by double-loop Monte Carlo.

    One shared variance estimate normalizes every entry; each coalition uses
    its own derived streams, so the result does not depend on worker count.
    """
    d = sampler.d
    rng_v = derive_rng(budget.seed, _STREAM_VARIANCE)
    y_v = np.asarray(model_fn(sampler.joint(budget.nv, rng_v)), dtype=np.float64)
    variance = estimate_variance(y_v)
    if variance <= 0.0:
        return _degenerate_table(d)
    values = np.zeros(1 << d)
    values[-1] = 1.0
    inner_masks = range(1, (1 << d) - 1)

    def run(mask: int) -> None:
        est = estimate_total_sobol_mc(
            model_fn, sampler, mask, budget, variance=variance
        )
        values[mask] = est.value

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, inner_masks))
    else:
        for mask in inner_masks:
            run(mask)
    return GameTable.from_values(d, values)


def estimate_all_total_indices_knn(
    data: DataSet, k: int, *, n_jobs: int = 1
) -> GameTable:
    """The full total-index table from one observed sample."""
    d = data.d
    variance = estimate_variance(data.y)
    if variance <= 0.0:
        return _degenerate_table(d)
    values = np.zeros(1 << d)
    values[-1] = 1.0
    inner_masks = range(1, (1 << d) - 1)

    def run(mask: int) -> None:
        est = estimate_total_sobol_knn(data, mask, k, variance=variance)
        values[mask] = est.value

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, inner_masks))
    else:
        for mask in inner_masks:
            run(mask)
    return GameTable.from_values(d, values)


def estimate_all_total_indices(
    *,
    method: str,
    model_fn=None,
    sampler: GaussianSampler | None = None,
    budget: McBudget | None = None,
    data: DataSet | None = None,
    k: int | None = None,
    n_jobs: int = 1,
) -> GameTable:
    """Dispatch to the Monte Carlo or given-data table estimator."""
    if method == "mc":
        if model_fn is None or sampler is None or budget is None:
            raise ContractError("method 'mc' needs model_fn, sampler, and budget")
        return estimate_all_total_indices_mc(model_fn, sampler, budget, n_jobs=n_jobs)
    if method == "knn":
        if data is None or k is None:
            raise ContractError("method 'knn' needs data and k")
        return estimate_all_total_indices_knn(data, k, n_jobs=n_jobs)
    raise ContractError(f"method must be 'mc' or 'knn', got {method!r}")


# ---------------------------------------------------------------------------
# Replication


class ReplicationScheme(str, enum.Enum):
    """How replicates of an estimation pipeline differ from each other."""

    INDEPENDENT_SEEDS = "independent-seeds"
    SUBSAMPLE_80 = "subsample-80"


@dataclass(frozen=True)
class McJob:
    """A Monte Carlo estimation pipeline to replicate."""

    model_fn: object
    sampler: GaussianSampler
    nv: int
    no: int
    ni: int

    @property
    def d(self) -> int:
        return self.sampler.d


@dataclass(frozen=True)
class KnnJob:
    """A given-data estimation pipeline to replicate."""

    data: DataSet
    k: int

    @property
    def d(self) -> int:
        return self.data.d


@dataclass(frozen=True)
class ReplicationSummary:
    """Mean shares and empirical quantile CI over replicates, per player."""

    method: AllocationMethod
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    level: float
    samples: np.ndarray = field(repr=False)

    def mean_allocation(self, total: float | None = None) -> Allocation:
        total = float(np.sum(self.mean)) if total is None else total
        return Allocation(self.mean, total, self.method)


@dataclass(frozen=True)
class ReplicationStudy:
    """Replicated Shapley-effect and proportional-marginal-effect shares."""

    shapley: ReplicationSummary
    pme: ReplicationSummary
    reps: int
    scheme: ReplicationScheme


def _summarize(
    method: AllocationMethod, samples: np.ndarray, level: float
) -> ReplicationSummary:
    alpha = 1.0 - level
    return ReplicationSummary(
        method=method,
        mean=samples.mean(axis=0),
        ci_low=np.quantile(samples, alpha / 2.0, axis=0),
        ci_high=np.quantile(samples, 1.0 - alpha / 2.0, axis=0),
        level=level,
        samples=samples,
    )


def replicate_with_ci(
    job: McJob | KnnJob,
    *,
    reps: int,
    scheme: ReplicationScheme,
    level: float = 0.9,
    seed: int = 0,
    tau: float = 0.0,
    n_jobs: int = 1,
    rep_seeds: list[int] | None = None,
) -> ReplicationStudy:
    """Run the index-to-allocation pipeline ``reps`` times and summarize.

    Each replicate estimates a full total-index table, then computes Shapley
    effects and proportional marginal effects from it.  Under
    ``INDEPENDENT_SEEDS`` replicates differ by derived master seeds (only
    meaningful for Monte Carlo jobs; a given-data job is deterministic, which
    yields identical replicates and zero-width intervals).  Under
    ``SUBSAMPLE_80`` each replicate keeps a random 80% of the rows without
    replacement.  ``rep_seeds`` overrides the per-replicate seeds, e.g. to
    force identical replicates.
    """
    scheme = ReplicationScheme(scheme)
    if reps < 1:
        raise ContractError(f"reps must be >= 1, got {reps}")
    if not 0.0 < level < 1.0:
        raise ContractError(f"CI level must be in (0, 1), got {level}")
    if rep_seeds is not None and len(rep_seeds) != reps:
        raise ContractError("rep_seeds must list one seed per replicate")
    if isinstance(job, McJob) and scheme is ReplicationScheme.SUBSAMPLE_80:
        raise ContractError("subsampling needs an observed dataset; use a KnnJob")

    def rep_seed(r: int) -> int:
        if rep_seeds is not None:
            return int(rep_seeds[r])
        return derive_seed(seed, _STREAM_REPLICATE, r)

    def one_table(r: int) -> GameTable:
        if isinstance(job, McJob):
            budget = McBudget(job.nv, job.no, job.ni, seed=rep_seed(r))
            return estimate_all_total_indices_mc(job.model_fn, job.sampler, budget)
        if scheme is ReplicationScheme.SUBSAMPLE_80:
            rng = derive_rng(rep_seed(r))
            m = max(2, int(SUBSAMPLE_FRACTION * job.data.n))
            rows = np.sort(rng.choice(job.data.n, size=m, replace=False))
            return estimate_all_total_indices_knn(job.data.take(rows), job.k)
        return estimate_all_total_indices_knn(job.data, job.k)

    d = job.d
    sh_samples = np.empty((reps, d))
    pme_samples = np.empty((reps, d))

    def run(r: int) -> None:
        table = one_table(r)
        sh_samples[r] = shapley_effects_from_indices(table).shares
        pme_samples[r] = pme_from_total_indices(table, tau).shares

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, range(reps)))
    else:
        for r in range(reps):
            run(r)
    return ReplicationStudy(
        shapley=_summarize(AllocationMethod.SHAPLEY, sh_samples, level),
        pme=_summarize(AllocationMethod.PME, pme_samples, level),
        reps=reps,
        scheme=scheme,
    )
