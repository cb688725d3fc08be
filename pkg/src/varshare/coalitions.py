"""Coalitions, cooperative-game value tables, and allocation containers.

Players are indexed 0..d-1 internally; text formats use 1-based labels.  A
coalition over d players is a bitmask in [0, 2^d) where bit i marks player i,
so a dense game table is one float per mask.  The player cap keeps those
tables (and every subset walk over them) tractable.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ContractError, DimensionError

MAX_PLAYERS = 20

# |sum(shares) - total| must stay within this relative slack for any allocation.
EFFICIENCY_TOL = 1e-10

# Slack used when checking game properties (monotonicity, nonnegativity).
VALIDATION_TOL = 1e-12


def _check_player_count(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool):
        raise DimensionError(f"player count must be an integer, got {d!r}")
    if not 1 <= d <= MAX_PLAYERS:
        raise DimensionError(f"player count must be in [1, {MAX_PLAYERS}], got {d}")


@dataclass(frozen=True, order=True)
class Coalition:
    """An immutable subset of the players 0..d-1, stored as a bitmask."""

    bits: int
    d: int

    def __post_init__(self) -> None:
        _check_player_count(self.d)
        if not isinstance(self.bits, (int, np.integer)) or isinstance(self.bits, bool):
            raise DimensionError(f"coalition bits must be an integer, got {self.bits!r}")
        if not 0 <= self.bits < (1 << self.d):
            raise DimensionError(
                f"coalition bits {self.bits} out of range for {self.d} players"
            )
        object.__setattr__(self, "bits", int(self.bits))
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def from_members(cls, members: Iterator[int], d: int) -> "Coalition":
        _check_player_count(d)
        bits = 0
        for i in members:
            if not 0 <= int(i) < d:
                raise DimensionError(f"player index {i} out of range for d={d}")
            bits |= 1 << int(i)
        return cls(bits, d)

    @classmethod
    def empty(cls, d: int) -> "Coalition":
        return cls(0, d)

    @classmethod
    def grand(cls, d: int) -> "Coalition":
        return cls((1 << d) - 1, d)

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.d) if self.bits >> i & 1)

    def complement(self) -> "Coalition":
        return Coalition(self.bits ^ ((1 << self.d) - 1), self.d)

    def union(self, other: "Coalition") -> "Coalition":
        self._check_same_ground(other)
        return Coalition(self.bits | other.bits, self.d)

    def without(self, player: int) -> "Coalition":
        if not 0 <= player < self.d:
            raise DimensionError(f"player index {player} out of range for d={self.d}")
        return Coalition(self.bits & ~(1 << player), self.d)

    def with_player(self, player: int) -> "Coalition":
        if not 0 <= player < self.d:
            raise DimensionError(f"player index {player} out of range for d={self.d}")
        return Coalition(self.bits | (1 << player), self.d)

    def issubset(self, other: "Coalition") -> bool:
        self._check_same_ground(other)
        return self.bits & ~other.bits == 0

    def _check_same_ground(self, other: "Coalition") -> None:
        if self.d != other.d:
            raise DimensionError(
                f"coalitions over different player sets: d={self.d} vs d={other.d}"
            )

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, player: int) -> bool:
        return 0 <= player < self.d and bool(self.bits >> player & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members())

    def __str__(self) -> str:
        if self.bits == 0:
            return "0"
        return "+".join(str(i + 1) for i in self.members())


def enumerate_coalitions(d: int) -> list[Coalition]:
    """All 2^d coalitions ordered by cardinality, ties broken by ascending bitmask."""
    _check_player_count(d)
    masks = sorted(range(1 << d), key=lambda m: (m.bit_count(), m))
    return [Coalition(m, d) for m in masks]


def popcounts(d: int) -> np.ndarray:
    """Bit-count of every mask in [0, 2^d), as an int64 array."""
    counts = np.zeros(1 << d, dtype=np.int64)
    for i in range(d):
        counts[(np.arange(1 << d) >> i) & 1 == 1] += 1
    return counts


@dataclass(frozen=True)
class GameTable:
    """A dense cooperative game: one value per coalition bitmask.

    ``values[mask]`` is the worth of the coalition with that bitmask; the
    empty coalition must be worth exactly zero.  ``monotone`` and
    ``nonnegative`` record properties that have been established for the
    table (conservative: False means "not known", not "known false").
    ``degenerate`` marks tables produced from a constant response, where no
    variance exists to apportion.
    """

    d: int
    values: np.ndarray
    monotone: bool = False
    nonnegative: bool = False
    degenerate: bool = False

    def __post_init__(self) -> None:
        _check_player_count(self.d)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (1 << self.d,):
            raise DimensionError(
                f"value table for d={self.d} must have shape ({1 << self.d},), "
                f"got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ContractError("value table contains non-finite entries")
        if values[0] != 0.0:
            raise ContractError(
                f"empty coalition must have value exactly 0, got {values[0]!r}"
            )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "d", int(self.d))

    @classmethod
    def from_values(cls, d: int, values, *, degenerate: bool = False) -> "GameTable":
        """Build a table and stamp its monotone/nonnegative flags by checking them."""
        game = cls(d, values, degenerate=degenerate)
        report = validate(game)
        return dataclasses.replace(
            game, monotone=report.monotone, nonnegative=report.nonnegative
        )

    @property
    def full_mask(self) -> int:
        return (1 << self.d) - 1

    @property
    def grand_value(self) -> float:
        return float(self.values[self.full_mask])

    def value(self, coalition: Coalition | int) -> float:
        if isinstance(coalition, Coalition):
            if coalition.d != self.d:
                raise DimensionError(
                    f"coalition over d={coalition.d} players queried against a "
                    f"d={self.d} game"
                )
            return float(self.values[coalition.bits])
        if not 0 <= coalition <= self.full_mask:
            raise DimensionError(f"mask {coalition} out of range for d={self.d}")
        return float(self.values[coalition])


def dual(game: GameTable) -> GameTable:
    """The dual game: each coalition gets what the grand coalition loses without it.

    ``w(A) = v(D) - v(D \\ A)``.  The dual of a monotone game is monotone, and
    is nonnegative because the empty coalition is worth zero.
    """
    masks = np.arange(1 << game.d)
    values = game.grand_value - game.values[game.full_mask ^ masks]
    values = values.copy()
    values[0] = 0.0
    return GameTable(
        game.d,
        values,
        monotone=game.monotone,
        nonnegative=game.monotone,
        degenerate=game.degenerate,
    )


def restrict(game: GameTable, coalition: Coalition) -> GameTable:
    """The subgame on the members of ``coalition``, players re-indexed to 0..k-1."""
    if coalition.d != game.d:
        raise DimensionError(
            f"coalition over d={coalition.d} players used with a d={game.d} game"
        )
    members = coalition.members()
    if not members:
        raise DimensionError("cannot restrict to the empty coalition")
    k = len(members)
    sub = np.empty(1 << k, dtype=np.float64)
    for b in range(1 << k):
        mask = 0
        for j in range(k):
            if b >> j & 1:
                mask |= 1 << members[j]
        sub[b] = game.values[mask]
    return GameTable(
        k, sub, monotone=game.monotone, nonnegative=game.nonnegative
    )


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of checking a game table's structural properties."""

    monotone: bool
    nonnegative: bool
    # Pairs (subset_mask, superset_mask) where the superset is worth less.
    monotone_violations: tuple[tuple[int, int], ...]
    # Masks whose value is negative.
    negative_masks: tuple[int, ...]


def validate(game: GameTable, tol: float = VALIDATION_TOL) -> ValidationReport:
    """Check nonnegativity and monotonicity up to an absolute slack of ``tol``."""
    values = game.values
    negative = tuple(int(m) for m in np.flatnonzero(values < -tol))
    violations: list[tuple[int, int]] = []
    masks = np.arange(1 << game.d)
    for i in range(game.d):
        bit = 1 << i
        with_i = masks[(masks & bit) != 0]
        bad = with_i[values[with_i] < values[with_i ^ bit] - tol]
        violations.extend((int(m ^ bit), int(m)) for m in bad)
    violations.sort()
    return ValidationReport(
        monotone=not violations,
        nonnegative=not negative,
        monotone_violations=tuple(violations),
        negative_masks=negative,
    )


class AllocationMethod(str, enum.Enum):
    """How a vector of per-player shares was produced."""

    SHAPLEY = "shapley"
    PV = "pv"
    PV0 = "pv0"
    PME = "pme"
    RANDOM_ORDER = "random-order"


@dataclass(frozen=True)
class Allocation:
    """Per-player shares of a game's grand value.

    Shares must add up to ``total`` within ``EFFICIENCY_TOL`` relative slack;
    degenerate allocations (no value to share) are exempt and carry all-zero
    shares.
    """

    shares: np.ndarray
    total: float
    method: AllocationMethod
    degenerate: bool = False

    def __post_init__(self) -> None:
        shares = np.asarray(self.shares, dtype=np.float64)
        if shares.ndim != 1 or not 1 <= shares.size <= MAX_PLAYERS:
            raise DimensionError(f"shares must be a vector of 1..{MAX_PLAYERS} players")
        if not np.all(np.isfinite(shares)):
            raise ContractError("allocation shares contain non-finite entries")
        shares = shares.copy()
        shares.flags.writeable = False
        object.__setattr__(self, "shares", shares)
        object.__setattr__(self, "total", float(self.total))
        object.__setattr__(self, "method", AllocationMethod(self.method))
        if not self.degenerate:
            total_shares = math.fsum(float(s) for s in shares)
            gap = abs(total_shares - self.total)
            if gap > EFFICIENCY_TOL * max(1.0, abs(self.total)):
                raise ContractError(
                    f"shares sum to {total_shares!r}, not {self.total!r} "
                    f"(gap {gap:.3e})"
                )

    @property
    def d(self) -> int:
        return int(self.shares.size)
