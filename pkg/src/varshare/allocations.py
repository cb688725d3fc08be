"""Cooperative-game allocation rules.

Two families are implemented.  Shapley values average marginal contributions
with combinatorial weights.  Proportional values weight orderings by the
reciprocal product of prefix worths, which makes each player's share scale
with how much value flows through coalitions containing it; they are computed
through the ratio potential, a levelwise dynamic program over subsets.  The
zero-extended variant handles games whose coalitions can be worthless, and is
what turns a table of total Sobol' indices into proportional marginal effects.
"""

from __future__ import annotations

import itertools
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .coalitions import (
    Allocation,
    AllocationMethod,
    GameTable,
    popcounts,
    validate,
)
from .errors import (
    ComplexityGuardError,
    ContractError,
    DimensionError,
    NonMonotoneGameWarning,
    PositivityError,
)

log = logging.getLogger(__name__)

PERMUTATION_CAP = 10  # streaming permutation sums
ORACLE_CAP = 8  # materialized per-player permutation sums
PMF_CAP = 6  # explicit distributions over all d! orderings

PMF_NORMALIZATION_TOL = 1e-9
ORACLE_MATCH_TOL = 1e-10


def _warn_if_not_monotone(game: GameTable, what: str) -> None:
    if game.monotone:
        return
    report = validate(game)
    if not report.monotone:
        a, b = report.monotone_violations[0]
        log.debug("%s: first monotonicity violation %#x vs %#x", what, a, b)
        warnings.warn(
            f"{what} expects a monotone game; shares lose their nonnegativity "
            "guarantee",
            NonMonotoneGameWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# Shapley values


def shapley_coalitional(game: GameTable) -> Allocation:
    """Shapley shares from the coalitional sum over subsets not containing i.

    share_i = sum over A not containing i of
              [ (d-1 choose |A|) * d ]^-1 * (v(A+i) - v(A)).
    """
    d = game.d
    values = game.values
    counts = popcounts(d)
    # weight for a coalition of size k among the remaining d-1 players
    weights_by_card = np.array(
        [1.0 / (d * math.comb(d - 1, k)) for k in range(d)], dtype=np.float64
    )
    shares = np.empty(d, dtype=np.float64)
    masks = np.arange(1 << d)
    for i in range(d):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        gains = values[without | bit] - values[without]
        shares[i] = float(np.dot(gains, weights_by_card[counts[without]]))
    return Allocation(shares, game.grand_value, AllocationMethod.SHAPLEY)


def shapley_permutation(game: GameTable) -> Allocation:
    """Shapley shares as the average marginal contribution over all orderings.

    Streams the d! orderings, so it is capped at d <= 10; use
    shapley_coalitional beyond toy sizes.
    """
    d = game.d
    if d > PERMUTATION_CAP:
        raise ComplexityGuardError(
            f"permutation form enumerates d! orderings; d={d} exceeds cap {PERMUTATION_CAP}"
        )
    values = game.values
    sums = np.zeros(d, dtype=np.float64)
    for order in itertools.permutations(range(d)):
        prefix = 0
        prev = 0.0
        for player in order:
            prefix |= 1 << player
            cur = values[prefix]
            sums[player] += cur - prev
            prev = cur
    shares = sums / math.factorial(d)
    return Allocation(shares, game.grand_value, AllocationMethod.SHAPLEY)


# ---------------------------------------------------------------------------
# Random-order models


@dataclass(frozen=True)
class OrderingPmf:
    """A probability mass function over orderings of the players.

    Only orderings with listed weight are supported; anything absent has
    probability zero.  ``normalized`` records that the weights sum to one.
    """

    d: int
    orders: tuple[tuple[int, ...], ...]
    probs: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (len(self.orders),):
            raise DimensionError("one probability per ordering is required")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ContractError("ordering weights must be finite and nonnegative")
        expected = tuple(range(self.d))
        seen = set()
        for order in self.orders:
            if tuple(sorted(order)) != expected:
                raise ContractError(f"{order!r} is not an ordering of 0..{self.d - 1}")
            if order in seen:
                raise ContractError(f"ordering {order!r} listed twice")
            seen.add(order)
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "orders", tuple(tuple(o) for o in self.orders))

    @classmethod
    def uniform(cls, d: int) -> "OrderingPmf":
        if d > PERMUTATION_CAP:
            raise ComplexityGuardError(
                f"uniform pmf lists d! orderings; d={d} exceeds cap {PERMUTATION_CAP}"
            )
        orders = tuple(itertools.permutations(range(d)))
        probs = np.full(len(orders), 1.0 / len(orders))
        return cls(d, orders, probs, normalized=True)

    def normalize(self) -> "OrderingPmf":
        total = math.fsum(float(p) for p in self.probs)
        if total <= 0:
            raise ContractError("ordering weights sum to zero; cannot normalize")
        return OrderingPmf(self.d, self.orders, self.probs / total, normalized=True)


def random_order_allocation(game: GameTable, pmf: OrderingPmf) -> Allocation:
    """Expected marginal contribution of each player under a random ordering."""
    if pmf.d != game.d:
        raise DimensionError(f"pmf over d={pmf.d} players, game over d={game.d}")
    total = math.fsum(float(p) for p in pmf.probs)
    if abs(total - 1.0) > PMF_NORMALIZATION_TOL:
        raise ContractError(
            f"ordering weights must sum to 1 within {PMF_NORMALIZATION_TOL:g}, "
            f"got {total!r}"
        )
    values = game.values
    terms: list[list[float]] = [[] for _ in range(game.d)]
    for order, p in zip(pmf.orders, pmf.probs):
        prefix = 0
        prev = 0.0
        for player in order:
            prefix |= 1 << player
            cur = values[prefix]
            terms[player].append(float(p) * (cur - prev))
            prev = cur
    shares = np.array([math.fsum(t) for t in terms])
    return Allocation(shares, game.grand_value, AllocationMethod.RANDOM_ORDER)


def pv_ordering_pmf(game: GameTable) -> OrderingPmf:
    """The ordering distribution whose random-order model is the proportional value.

    Each ordering is weighted by the reciprocal product of its prefix worths,
    then normalized.  Requires every nonempty coalition to be strictly
    positive (every one is a prefix of some ordering).
    """
    d = game.d
    if d > PMF_CAP:
        raise ComplexityGuardError(
            f"explicit ordering pmf lists d! orderings; d={d} exceeds cap {PMF_CAP}"
        )
    values = game.values
    if np.any(values[1:] <= 0.0):
        bad = int(np.flatnonzero(values[1:] <= 0.0)[0]) + 1
        raise PositivityError(
            f"ordering weights need positive prefix worths; value({bad:#x}) <= 0"
        )
    orders = tuple(itertools.permutations(range(d)))
    weights = np.empty(len(orders), dtype=np.float64)
    for n, order in enumerate(orders):
        prefix = 0
        likelihood = 1.0
        for player in order:
            prefix |= 1 << player
            likelihood /= values[prefix]
        weights[n] = likelihood
    return OrderingPmf(d, orders, weights).normalize()


# ---------------------------------------------------------------------------
# Ratio potential and proportional values


def _ratio_potential_map(ground: int, value_at) -> dict[int, float]:
    """R for every subset of the ``ground`` mask, by cardinality level.

    R(empty) = 1 and R(B) = value_at(B) / sum_j 1/R(B - j).  Raises
    PositivityError when a required worth is not strictly positive.
    """
    subs = [0]
    s = ground
    while s:
        subs.append(s)
        s = (s - 1) & ground
    subs.sort(key=lambda m: (m.bit_count(), m))
    table: dict[int, float] = {0: 1.0}
    for mask in subs:
        if mask == 0:
            continue
        worth = float(value_at(mask))
        if worth <= 0.0 or not math.isfinite(worth):
            raise PositivityError(
                f"ratio potential needs strictly positive worths; "
                f"got {worth!r} on mask {mask:#x}"
            )
        m = mask
        recips = []
        while m:
            bit = m & -m
            recips.append(1.0 / table[mask ^ bit])
            m ^= bit
        r = worth / math.fsum(recips)
        if not (math.isfinite(r) and r > 0.0):
            raise PositivityError(
                f"ratio potential left (0, inf) on mask {mask:#x}; worths too "
                "close to zero, raise the zero threshold"
            )
        table[mask] = r
    return table


def ratio_potential(game: GameTable, coalition) -> float:
    """The ratio potential R of one coalition under the game's worth function."""
    if hasattr(coalition, "bits"):
        if coalition.d != game.d:
            raise DimensionError(
                f"coalition over d={coalition.d} players, game over d={game.d}"
            )
        bits = coalition.bits
    else:
        bits = int(coalition)
    if not 0 <= bits <= game.full_mask:
        raise DimensionError(f"mask {bits} out of range for d={game.d}")
    values = game.values
    return _ratio_potential_map(bits, lambda m: values[m])[bits]


def _pv_shares(d: int, values: np.ndarray) -> np.ndarray:
    full = (1 << d) - 1
    table = _ratio_potential_map(full, lambda m: values[m])
    top = table[full]
    return np.array([top / table[full ^ (1 << i)] for i in range(d)])


def proportional_values(game: GameTable) -> Allocation:
    """Proportional-value shares for a game positive on all nonempty coalitions."""
    if np.any(game.values[1:] <= 0.0):
        raise PositivityError(
            "proportional values need strictly positive worths on every nonempty "
            "coalition; use proportional_values_extended for games with nulls"
        )
    _warn_if_not_monotone(game, "proportional_values")
    shares = _pv_shares(game.d, game.values)
    return Allocation(shares, game.grand_value, AllocationMethod.PV)


def pv_permutation_oracle(game: GameTable) -> Allocation:
    """Proportional values by brute force over orderings.

    share_i = [sum over orderings of the other players of the reciprocal
    prefix-worth product] / [same sum over orderings of all players].  Exists
    to cross-check the dynamic program; capped at d <= 8.
    """
    d = game.d
    if d > ORACLE_CAP:
        raise ComplexityGuardError(
            f"permutation oracle enumerates d! orderings; d={d} exceeds cap {ORACLE_CAP}"
        )
    values = game.values
    if np.any(values[1:] <= 0.0):
        raise PositivityError(
            "permutation oracle needs strictly positive worths on every nonempty coalition"
        )

    def likelihood_terms(players: tuple[int, ...]) -> list[float]:
        out = []
        for order in itertools.permutations(players):
            prefix = 0
            term = 1.0
            for player in order:
                prefix |= 1 << player
                term /= values[prefix]
            out.append(term)
        return out

    denom = math.fsum(likelihood_terms(tuple(range(d))))
    shares = np.empty(d, dtype=np.float64)
    for i in range(d):
        others = tuple(j for j in range(d) if j != i)
        shares[i] = math.fsum(likelihood_terms(others)) / denom
    return Allocation(shares, game.grand_value, AllocationMethod.PV)


# ---------------------------------------------------------------------------
# Zero structure and the extended proportional value


@dataclass(frozen=True)
class ZeroStructure:
    """Where a nonnegative game is worthless, summarized by its largest nulls.

    ``k_max`` is the largest cardinality of a coalition worth at most ``tau``;
    ``null_coalitions`` lists every such coalition of that cardinality (as
    bitmasks); ``always_null`` is their intersection, the players that belong
    to every largest null coalition.
    """

    d: int
    tau: float
    k_max: int
    null_coalitions: tuple[int, ...]
    always_null: frozenset[int]


def zero_structure(game: GameTable, tau: float = 0.0) -> ZeroStructure:
    """Classify coalitions worth at most ``tau`` and extract the largest ones."""
    if not (math.isfinite(tau) and tau >= 0.0):
        raise ContractError(f"zero threshold must be finite and >= 0, got {tau!r}")
    counts = popcounts(game.d)
    null_masks = np.flatnonzero(game.values <= tau)
    k_max = int(counts[null_masks].max())
    largest = tuple(int(m) for m in null_masks[counts[null_masks] == k_max])
    common = largest[0]
    for m in largest[1:]:
        common &= m
    always = frozenset(i for i in range(game.d) if common >> i & 1)
    return ZeroStructure(game.d, float(tau), k_max, largest, always)


def _pv0_shares(game: GameTable, tau: float) -> tuple[np.ndarray, bool]:
    """Extended-PV shares and a degenerate flag, shared by pv0 and pme."""
    if np.any(game.values < -1e-12):
        raise ContractError(
            "extended proportional values need a nonnegative game; "
            "clamp or re-estimate the table"
        )
    structure = zero_structure(game, tau)
    d, full = game.d, game.full_mask
    if game.grand_value <= tau:
        return np.zeros(d), True
    _warn_if_not_monotone(game, "proportional_values_extended")
    values = game.values
    if structure.k_max == 0:
        # only the empty coalition is null: plain proportional values, same arithmetic
        return _pv_shares(d, values), False
    numer_terms: list[list[float]] = [[] for _ in range(d)]
    denom_terms: list[float] = []
    for null_mask in structure.null_coalitions:
        rest = full ^ null_mask
        table = _ratio_potential_map(rest, lambda m: values[null_mask | m])
        denom_terms.append(1.0 / table[rest])
        for i in range(d):
            bit = 1 << i
            if rest & bit:
                numer_terms[i].append(1.0 / table[rest ^ bit])
    denom = math.fsum(denom_terms)
    shares = np.array([math.fsum(t) / denom for t in numer_terms])
    return shares, False


def proportional_values_extended(game: GameTable, tau: float = 0.0) -> Allocation:
    """Proportional values extended to games with worthless coalitions.

    Coalitions worth at most ``tau`` count as null.  Players in every largest
    null coalition receive exactly zero; the rest share the grand worth
    through ratio potentials of the subgames rooted at each largest null
    coalition.  When only the empty coalition is null this is exactly
    proportional_values.  A grand coalition at or below ``tau`` leaves nothing
    to share: all-zero shares with the degenerate flag set.
    """
    shares, degenerate = _pv0_shares(game, tau)
    return Allocation(
        shares, game.grand_value, AllocationMethod.PV0, degenerate=degenerate
    )


# ---------------------------------------------------------------------------
# Sensitivity shares from total-index tables


def pme_from_total_indices(table: GameTable, tau: float = 0.0) -> Allocation:
    """Proportional marginal effects: extended PV of a total-index table.

    The table holds one total Sobol' index per coalition, which is the dual of
    the explained-variance game, so applying the extended proportional value
    to it grants exactly zero to inputs the response never depends on.
    """
    if table.degenerate:
        return Allocation(
            np.zeros(table.d), table.grand_value, AllocationMethod.PME, degenerate=True
        )
    shares, degenerate = _pv0_shares(table, tau)
    return Allocation(
        shares, table.grand_value, AllocationMethod.PME, degenerate=degenerate
    )


def shapley_effects_from_indices(table: GameTable) -> Allocation:
    """Shapley effects straight from a total-index table.

    The Shapley value of a game equals the Shapley value of its dual, so the
    total-index table can be used as-is; with a normalized table the shares
    sum to one.  A table whose grand value is zero carries no variance to
    apportion and comes back all-zero with the degenerate flag set.
    """
    if table.degenerate or table.grand_value <= 0.0:
        return Allocation(
            np.zeros(table.d), table.grand_value, AllocationMethod.SHAPLEY, degenerate=True
        )
    return shapley_coalitional(table)


def detect_exogenous(table: GameTable, tau: float = 0.0) -> frozenset[int]:
    """Players guaranteed a zero proportional marginal effect.

    These are the players present in every largest null coalition of the
    total-index table: the inputs whose every influence channel carries no
    variance at threshold ``tau``.
    """
    if table.grand_value <= tau:
        return frozenset(range(table.d))
    return zero_structure(table, tau).always_null
