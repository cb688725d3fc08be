"""Exact sensitivity indices for linear models with Gaussian inputs.

For Y = beta . X with X ~ N(mu, Sigma), the variance explained by any subset
of inputs has a closed form through the conditional covariance, so Sobol'
indices, Shapley effects, and proportional marginal effects can be computed
to floating-point accuracy.  Four small reference cases with hand-derived
allocation formulas are bundled for calibration and testing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .allocations import pme_from_total_indices, shapley_coalitional
from .coalitions import Allocation, AllocationMethod, Coalition, GameTable
from .errors import (
    ContractError,
    DegenerateGameError,
    DimensionError,
    LinearAlgebraError,
)

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class GaussianLinearModel:
    """Y = beta . X with X ~ N(mu, Sigma); Sigma must be symmetric positive definite."""

    beta: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray | None = None

    def __post_init__(self) -> None:
        beta = np.atleast_1d(np.asarray(self.beta, dtype=np.float64))
        sigma = np.asarray(self.sigma, dtype=np.float64)
        d = beta.size
        if beta.ndim != 1:
            raise DimensionError("beta must be a vector")
        if sigma.shape != (d, d):
            raise DimensionError(
                f"sigma must be {d}x{d} to match beta, got {sigma.shape}"
            )
        if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(sigma))):
            raise ContractError("model coefficients must be finite")
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > SYMMETRY_TOL:
            raise ContractError(f"sigma is not symmetric within {SYMMETRY_TOL:g}")
        mu = self.mu
        mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=np.float64)
        if mu.shape != (d,):
            raise DimensionError(f"mu must have shape ({d},), got {mu.shape}")
        try:
            linalg.cholesky(sigma, lower=True)
        except linalg.LinAlgError as exc:
            raise LinearAlgebraError(f"sigma is not positive definite: {exc}") from exc
        for name, arr in (("beta", beta), ("sigma", sigma), ("mu", mu)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return int(self.beta.size)

    @property
    def variance(self) -> float:
        return float(self.beta @ self.sigma @ self.beta)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return x @ self.beta


def _as_mask(model_d: int, coalition: Coalition | int) -> int:
    if isinstance(coalition, Coalition):
        if coalition.d != model_d:
            raise DimensionError(
                f"coalition over d={coalition.d} players, model over d={model_d}"
            )
        return coalition.bits
    bits = int(coalition)
    if not 0 <= bits < (1 << model_d):
        raise DimensionError(f"mask {bits} out of range for d={model_d}")
    return bits


def conditional_explained_variance(
    model: GaussianLinearModel, coalition: Coalition | int
) -> float:
    """Var(E[Y | X_A]) in closed form.

    Equals c' Sigma_AA c with c = beta_A + Sigma_AA^-1 Sigma_A,B beta_B, where
    B is the complement of A.  Nonnegative; tiny negative round-off is
    clamped to zero.
    """
    mask = _as_mask(model.d, coalition)
    if mask == 0:
        return 0.0
    if mask == (1 << model.d) - 1:
        return model.variance
    inside = [i for i in range(model.d) if mask >> i & 1]
    outside = [i for i in range(model.d) if not mask >> i & 1]
    s_aa = model.sigma[np.ix_(inside, inside)]
    s_ab = model.sigma[np.ix_(inside, outside)]
    try:
        factor = linalg.cho_factor(s_aa, lower=True)
        c = model.beta[inside] + linalg.cho_solve(factor, s_ab @ model.beta[outside])
    except linalg.LinAlgError as exc:
        raise LinearAlgebraError(
            f"conditioning block for mask {mask:#x} is not positive definite: {exc}"
        ) from exc
    return max(float(c @ s_aa @ c), 0.0)


def closed_sobol(model: GaussianLinearModel, coalition: Coalition | int) -> float:
    """Closed Sobol' index: the share of Var(Y) explained by X_A alone."""
    variance = model.variance
    if variance <= 0.0:
        raise DegenerateGameError("model response has zero variance (beta = 0)")
    return conditional_explained_variance(model, coalition) / variance


def total_sobol(model: GaussianLinearModel, coalition: Coalition | int) -> float:
    """Total Sobol' index: the variance share lost when X_A is unexplained.

    One minus the closed index of the complement; the dual game of the closed
    indices.
    """
    mask = _as_mask(model.d, coalition)
    if mask == 0:
        return 0.0
    return 1.0 - closed_sobol(model, mask ^ ((1 << model.d) - 1))


def sobol_game(model: GaussianLinearModel, kind: str = "total") -> GameTable:
    """The full 2^d table of closed or total Sobol' indices."""
    if kind not in ("total", "closed"):
        raise ContractError(f"kind must be 'total' or 'closed', got {kind!r}")
    index = total_sobol if kind == "total" else closed_sobol
    values = np.array([index(model, mask) for mask in range(1 << model.d)])
    values[0] = 0.0
    values[-1] = 1.0
    return GameTable.from_values(model.d, values)


# ---------------------------------------------------------------------------
# Reference cases


class ToyCase(str, enum.Enum):
    """Small dependent-input models with hand-derived reference allocations."""

    EXOGENOUS_LINEAR = "exogenous-linear"
    UNBALANCED_LINEAR = "unbalanced-linear"
    INTERACTION_LINEAR = "interaction-linear"
    SHAPLEY_JOKE = "shapley-joke"


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not (math.isfinite(rho) and -1.0 < rho < 1.0):
        raise ContractError(f"correlation must lie in (-1, 1), got {rho!r}")
    return rho


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and 0.0 <= alpha <= 1.0):
        raise ContractError(f"interaction weight must lie in [0, 1], got {alpha!r}")
    return alpha


def toycase_model(
    case: ToyCase, *, rho: float = 0.0, beta: float = 2.0
) -> GaussianLinearModel:
    """The Gaussian linear model behind a reference case.

    The interaction case is not linear and has no such model; use
    toycase_function for something evaluable.
    """
    case = ToyCase(case)
    rho = _check_rho(rho)
    if case is ToyCase.EXOGENOUS_LINEAR:
        # Y = X1 + X2 with a spectator X3 correlated to X1
        sigma = np.array([[1.0, 0.0, rho], [0.0, 1.0, 0.0], [rho, 0.0, 1.0]])
        return GaussianLinearModel([1.0, 1.0, 0.0], sigma)
    if case is ToyCase.UNBALANCED_LINEAR:
        # Y = X1 + beta X2 + X3 with X2, X3 correlated
        beta = float(beta)
        if not math.isfinite(beta):
            raise ContractError(f"beta must be finite, got {beta!r}")
        sigma = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, rho], [0.0, rho, 1.0]])
        return GaussianLinearModel([1.0, beta, 1.0], sigma)
    if case is ToyCase.SHAPLEY_JOKE:
        # Y = X1 alone, with X2 correlated to X1
        sigma = np.array([[1.0, rho], [rho, 1.0]])
        return GaussianLinearModel([1.0, 0.0], sigma)
    raise ContractError(
        f"{case.value} is not a linear model; use toycase_function instead"
    )


def toycase_function(case: ToyCase, *, rho: float = 0.0, beta: float = 2.0, alpha: float = 0.0):
    """An evaluable (function, mu, sigma) triple for a reference case."""
    case = ToyCase(case)
    if case is ToyCase.INTERACTION_LINEAR:
        rho = _check_rho(rho)
        b = 1.0 - _check_alpha(alpha)

        def fn(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=np.float64)
            return x[..., 0] + b * x[..., 1] + x[..., 0] * x[..., 1]

        sigma = np.array([[1.0, rho], [rho, 1.0]])
        return fn, np.zeros(2), sigma
    model = toycase_model(case, rho=rho, beta=beta)
    return model.evaluate, np.asarray(model.mu), np.asarray(model.sigma)


def toycase_game(
    case: ToyCase,
    *,
    rho: float = 0.0,
    beta: float = 2.0,
    alpha: float = 0.0,
    kind: str = "total",
) -> GameTable:
    """The exact Sobol'-index table of a reference case.

    Linear cases go through the Gaussian conditioning oracle.  The
    interaction case uses its hand-derived moments: for Y = X1 + b X2 + X1 X2
    with b = 1 - alpha and unit-variance inputs at correlation rho,
    Var(Y) = 2 + b^2 + 2 b rho + rho^2, and the explained variances are
    (1 + b rho)^2 + 2 rho^2 for X1 and (b + rho)^2 + 2 rho^2 for X2.
    """
    case = ToyCase(case)
    if case is not ToyCase.INTERACTION_LINEAR:
        return sobol_game(toycase_model(case, rho=rho, beta=beta), kind=kind)
    if kind not in ("total", "closed"):
        raise ContractError(f"kind must be 'total' or 'closed', got {kind!r}")
    rho = _check_rho(rho)
    b = 1.0 - _check_alpha(alpha)
    variance = 2.0 + b * b + 2.0 * b * rho + rho * rho
    closed_1 = ((1.0 + b * rho) ** 2 + 2.0 * rho * rho) / variance
    closed_2 = ((b + rho) ** 2 + 2.0 * rho * rho) / variance
    if kind == "closed":
        values = [0.0, closed_1, closed_2, 1.0]
    else:
        values = [0.0, 1.0 - closed_2, 1.0 - closed_1, 1.0]
    return GameTable.from_values(2, np.array(values))


def toycase_reference_allocations(
    case: ToyCase, *, rho: float = 0.0, beta: float = 2.0, alpha: float = 0.0
) -> tuple[Allocation, Allocation]:
    """Hand-derived (Shapley, PME) shares of a reference case, both summing to 1.

    These are independent of the game-table route: each formula was obtained
    by eliminating the conditional variances symbolically, so they serve as
    oracles for the allocation pipeline.
    """
    case = ToyCase(case)
    rho = _check_rho(rho)
    if case is ToyCase.EXOGENOUS_LINEAR:
        sh = np.array([0.5 - rho * rho / 4.0, 0.5, rho * rho / 4.0])
        pme = np.array([0.5, 0.5, 0.0])
    elif case is ToyCase.UNBALANCED_LINEAR:
        beta = float(beta)
        # always positive: 2 + beta^2 + 2 rho beta > 1 + (|beta| - 1)^2 for |rho| < 1
        variance = 2.0 + beta * beta + 2.0 * rho * beta
        half_swing = 0.5 * rho * rho * (1.0 - beta * beta)
        sh = (
            np.array(
                [1.0, beta * beta + beta * rho + half_swing, 1.0 + beta * rho - half_swing]
            )
            / variance
        )
        coupled = 1.0 + beta * beta + 2.0 * rho * beta
        pme = np.array(
            [
                1.0 / variance,
                beta * beta * coupled / ((1.0 + beta * beta) * variance),
                coupled / ((1.0 + beta * beta) * variance),
            ]
        )
    elif case is ToyCase.INTERACTION_LINEAR:
        b = 1.0 - _check_alpha(alpha)
        variance = 2.0 + b * b + 2.0 * b * rho + rho * rho
        sh = np.array(
            [
                (3.0 + rho * rho * b * b + 2.0 * rho * b) / (2.0 * variance),
                (1.0 + 2.0 * rho * rho + (2.0 - rho * rho) * b * b + 2.0 * rho * b)
                / (2.0 * variance),
            ]
        )
        pme = np.array([2.0 / (3.0 + b * b), (b * b + 1.0) / (3.0 + b * b)])
    else:  # SHAPLEY_JOKE
        sh = np.array([1.0 - rho * rho / 2.0, rho * rho / 2.0])
        pme = np.array([1.0, 0.0])
    return (
        Allocation(sh, 1.0, AllocationMethod.SHAPLEY),
        Allocation(pme, 1.0, AllocationMethod.PME),
    )


def toycase_allocations(
    case: ToyCase,
    *,
    rho: float = 0.0,
    beta: float = 2.0,
    alpha: float = 0.0,
    tau: float = 0.0,
) -> tuple[Allocation, Allocation]:
    """(Shapley, PME) computed through the game-table pipeline, not the formulas."""
    table = toycase_game(case, rho=rho, beta=beta, alpha=alpha, kind="total")
    return shapley_coalitional(table), pme_from_total_indices(table, tau)
