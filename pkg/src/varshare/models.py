"""Benchmark response functions and input samplers.

Includes the Ishigami function with a correlated spectator input, a planar
four-segment robot arm with dependent lengths and angles, and Gaussian
joint/marginal/conditional samplers.  All randomness flows through
`derive_rng`, which turns a master seed plus a path of integers into an
independent, reproducible stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import ndtr

from .coalitions import MAX_PLAYERS
from .errors import ContractError, DimensionError, LinearAlgebraError

ISHIGAMI_A = 7.0
ISHIGAMI_B = 0.1
ISHIGAMI_NAMES = ("X1", "X2", "X3", "X4")
ROBOT_NAMES = ("A1", "A2", "A3", "A4", "L1", "L2", "L3", "L4")


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """An independent generator for (seed, path); same inputs, same stream.

    Distinct paths under one seed give statistically independent streams, so
    parallel work can draw without sharing state.
    """
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ContractError(f"seed must be a nonnegative integer, got {seed!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *path: int) -> int:
    """A derived integer seed, for handing to code that wants a seed, not a stream."""
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ContractError(f"seed must be a nonnegative integer, got {seed!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


# ---------------------------------------------------------------------------
# Ishigami with a spectator input


def ishigami(x: np.ndarray) -> np.ndarray:
    """sin(x1) + 7 sin(x2)^2 + 0.1 x3^4 sin(x1); the fourth column is ignored.

    The fourth input exists so that dependence structures can correlate a
    response-irrelevant input with a relevant one.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 4:
        raise DimensionError(f"expected 4 input columns, got {x.shape[-1]}")
    s1 = np.sin(x[..., 0])
    return s1 + ISHIGAMI_A * np.sin(x[..., 1]) ** 2 + ISHIGAMI_B * x[..., 2] ** 4 * s1


def ishigami_input_law(rho: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(mu, sigma) for centered Gaussian inputs with sd pi/3 each.

    ``rho`` is the raw covariance between x1 and the spectator x4; the matrix
    stays positive definite for |rho| < (pi/3)^2, and |rho| <= 0.99 is
    enforced.
    """
    rho = float(rho)
    if not (math.isfinite(rho) and abs(rho) <= 0.99):
        raise ContractError(f"|rho| must be <= 0.99, got {rho!r}")
    sigma = np.eye(4) * (math.pi / 3.0) ** 2
    sigma[0, 3] = sigma[3, 0] = rho
    return np.zeros(4), sigma


# ---------------------------------------------------------------------------
# Robot arm


def robot_arm(lengths: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Distance from the origin to the tip of a planar four-segment arm.

    Segment i has length ``lengths[..., i]`` and absolute direction equal to
    the running sum of ``angles[..., :i+1]``.
    """
    lengths = np.asarray(lengths, dtype=np.float64)
    angles = np.asarray(angles, dtype=np.float64)
    if lengths.shape[-1] != 4 or angles.shape[-1] != 4:
        raise DimensionError("robot arm takes 4 lengths and 4 angles")
    heading = np.cumsum(angles, axis=-1)
    u = np.sum(lengths * np.cos(heading), axis=-1)
    v = np.sum(lengths * np.sin(heading), axis=-1)
    return np.hypot(u, v)


def robot_arm_from_columns(x: np.ndarray) -> np.ndarray:
    """Robot arm response from dataset columns ordered A1..A4, L1..L4."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 8:
        raise DimensionError(f"expected 8 input columns, got {x.shape[-1]}")
    return robot_arm(x[..., 4:], x[..., :4])


@dataclass(frozen=True)
class RobotInputLaw:
    """Dependent input law for the robot arm.

    Angles are uniform on [0, 2 pi], coupled through a Gaussian copula with
    equicorrelation ``angle_corr``.  Lengths form a decreasing chain: L1 is
    uniform on [0, 1] and each later segment is its predecessor times a fresh
    uniform, independent of the angles.
    """

    angle_corr: float = 0.95

    def __post_init__(self) -> None:
        c = float(self.angle_corr)
        # equicorrelated 4x4 matrix is PD iff c in (-1/3, 1)
        if not (-1.0 / 3.0 < c < 1.0):
            raise ContractError(f"angle copula correlation must be in (-1/3, 1), got {c!r}")
        object.__setattr__(self, "angle_corr", c)

    def copula_matrix(self) -> np.ndarray:
        c = self.angle_corr
        return (1.0 - c) * np.eye(4) + c * np.ones((4, 4))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ContractError(f"sample size must be >= 1, got {n}")
        z = sample_gaussian(np.zeros(4), self.copula_matrix(), n, rng)
        angles = 2.0 * math.pi * ndtr(z)
        ratios = rng.uniform(size=(n, 4))
        lengths = np.cumprod(ratios, axis=1)
        return np.hstack([angles, lengths])


def sample_robot_inputs(
    n: int, rng_or_seed: np.random.Generator | int, law: RobotInputLaw | None = None
) -> np.ndarray:
    """n rows of robot-arm inputs in the column order A1..A4, L1..L4."""
    rng = (
        rng_or_seed
        if isinstance(rng_or_seed, np.random.Generator)
        else derive_rng(rng_or_seed)
    )
    return (law or RobotInputLaw()).sample(n, rng)


# ---------------------------------------------------------------------------
# Gaussian sampling


def _check_spd(sigma: np.ndarray, what: str) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionError(f"{what} must be square, got {sigma.shape}")
    if np.max(np.abs(sigma - sigma.T), initial=0.0) > 1e-12:
        raise ContractError(f"{what} is not symmetric")
    try:
        return linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"{what} is not positive definite: {exc}") from exc


def sample_gaussian(
    mu: np.ndarray, sigma: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """n draws from N(mu, sigma) via the lower Cholesky factor."""
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.shape != (mu.size, mu.size):
        raise DimensionError(
            f"sigma must be {mu.size}x{mu.size} to match mu, got {sigma.shape}"
        )
    chol = _check_spd(sigma, "covariance")
    z = rng.standard_normal((n, mu.size))
    return mu + z @ chol.T


def conditional_gaussian(
    mu: np.ndarray, sigma: np.ndarray, free: list[int], given: list[int]
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Conditional law of X_free given X_given, as (coef, offset_mu, given_mu, cov).

    The conditional mean at observation x_g is
    ``offset_mu + (x_g - given_mu) @ coef.T``; the conditional covariance is
    the Schur complement and does not depend on x_g.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    s_ff = sigma[np.ix_(free, free)]
    s_fg = sigma[np.ix_(free, given)]
    s_gg = sigma[np.ix_(given, given)]
    try:
        factor = linalg.cho_factor(s_gg, lower=True)
        coef = linalg.cho_solve(factor, s_fg.T).T
    except linalg.LinAlgError as exc:
        raise LinearAlgebraError(
            f"conditioning covariance is not positive definite: {exc}"
        ) from exc
    cov = s_ff - coef @ s_fg.T
    cov = 0.5 * (cov + cov.T)
    return coef, mu[free], mu[given], cov


def sample_conditional_gaussian(
    mu: np.ndarray,
    sigma: np.ndarray,
    free: list[int],
    given: list[int],
    x_given: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """n draws of X_free conditional on X_given = x_given (one observation)."""
    coef, mu_f, mu_g, cov = conditional_gaussian(mu, sigma, free, given)
    x_given = np.asarray(x_given, dtype=np.float64)
    if x_given.shape != (len(given),):
        raise DimensionError(
            f"x_given must have shape ({len(given)},), got {x_given.shape}"
        )
    chol = _check_spd(cov, "conditional covariance")
    mean = mu_f + coef @ (x_given - mu_g)
    z = rng.standard_normal((n, len(free)))
    return mean + z @ chol.T


class GaussianSampler:
    """Joint, marginal, and conditional draws for one Gaussian input law.

    Marginal and conditional factorizations are cached per coalition mask, so
    sweeping all coalitions of a table reuses the linear algebra.
    """

    def __init__(self, mu: np.ndarray, sigma: np.ndarray) -> None:
        self.mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
        self.sigma = np.asarray(sigma, dtype=np.float64)
        if self.sigma.shape != (self.mu.size, self.mu.size):
            raise DimensionError(
                f"sigma must be {self.mu.size}x{self.mu.size}, got {self.sigma.shape}"
            )
        if not 1 <= self.mu.size <= MAX_PLAYERS:
            raise DimensionError(f"dimension must be in [1, {MAX_PLAYERS}]")
        self._chol = _check_spd(self.sigma, "covariance")
        self._marginal_chol: dict[int, np.ndarray] = {}
        self._conditional: dict[int, tuple] = {}

    @property
    def d(self) -> int:
        return int(self.mu.size)

    def _members(self, mask: int) -> list[int]:
        return [i for i in range(self.d) if mask >> i & 1]

    def joint(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.d))
        return self.mu + z @ self._chol.T

    def marginal(self, mask: int, n: int, rng: np.random.Generator) -> np.ndarray:
        """n draws of the sub-vector indexed by ``mask``."""
        idx = self._members(mask)
        if not idx:
            raise DimensionError("marginal of the empty coalition is undefined")
        if mask not in self._marginal_chol:
            self._marginal_chol[mask] = _check_spd(
                self.sigma[np.ix_(idx, idx)], "marginal covariance"
            )
        z = rng.standard_normal((n, len(idx)))
        return self.mu[idx] + z @ self._marginal_chol[mask].T

    def conditional_batch(
        self, free_mask: int, x_given: np.ndarray, ni: int, rng: np.random.Generator
    ) -> np.ndarray:
        """ni draws of X_free for each row of x_given; shape (m, ni, |free|).

        ``x_given`` holds observations of the complement of ``free_mask``, in
        ascending index order.
        """
        free = self._members(free_mask)
        given = self._members(free_mask ^ ((1 << self.d) - 1))
        if not free:
            raise DimensionError("conditional draw needs at least one free input")
        x_given = np.atleast_2d(np.asarray(x_given, dtype=np.float64))
        if x_given.shape[1] != len(given):
            raise DimensionError(
                f"x_given must have {len(given)} columns, got {x_given.shape[1]}"
            )
        if not given:
            # nothing to condition on: plain joint draws of the free block
            z = rng.standard_normal((x_given.shape[0], ni, len(free)))
            if free_mask not in self._marginal_chol:
                self._marginal_chol[free_mask] = self._chol
            return self.mu[free] + z @ self._marginal_chol[free_mask].T
        if free_mask not in self._conditional:
            coef, mu_f, mu_g, cov = conditional_gaussian(self.mu, self.sigma, free, given)
            self._conditional[free_mask] = (
                coef,
                mu_f,
                mu_g,
                _check_spd(cov, "conditional covariance"),
            )
        coef, mu_f, mu_g, chol = self._conditional[free_mask]
        means = mu_f + (x_given - mu_g) @ coef.T
        z = rng.standard_normal((x_given.shape[0], ni, len(free)))
        return means[:, None, :] + z @ chol.T
