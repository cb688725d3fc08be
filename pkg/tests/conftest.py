"""Shared random-game factories, all explicitly seeded."""

from __future__ import annotations

import numpy as np
import pytest

from varshare.coalitions import GameTable


def monotone_closure(values: np.ndarray, d: int) -> np.ndarray:
    """Raise each coalition to at least the worth of its sub-coalitions."""
    out = values.copy()
    out[0] = 0.0
    for mask in range(1, 1 << d):
        m = mask
        while m:
            bit = m & -m
            out[mask] = max(out[mask], out[mask ^ bit])
            m ^= bit
    return out


def random_game(rng: np.random.Generator, d: int) -> GameTable:
    """Arbitrary nonneg values, no structure beyond the zero empty coalition."""
    values = rng.uniform(0.0, 1.0, size=1 << d)
    values[0] = 0.0
    return GameTable(d, values)


def random_monotone_game(rng: np.random.Generator, d: int) -> GameTable:
    values = monotone_closure(rng.uniform(0.0, 1.0, size=1 << d), d)
    return GameTable.from_values(d, values)


def random_positive_game(rng: np.random.Generator, d: int) -> GameTable:
    """Monotone and strictly positive on every nonempty coalition."""
    values = monotone_closure(rng.uniform(0.05, 1.0, size=1 << d), d)
    return GameTable.from_values(d, values)


def random_planted_null_game(
    rng: np.random.Generator, d: int, floor: float = 0.2
) -> GameTable:
    """Monotone game whose nulls are a random nonempty lower set of coalitions.

    Null coalitions are exactly the subsets of a few randomly chosen seeds;
    all other nonempty coalitions are at least ``floor``.
    """
    full = (1 << d) - 1
    n_seeds = int(rng.integers(1, 3))
    null = {0}
    for _ in range(n_seeds):
        seed_mask = int(rng.integers(1, full))  # never the grand coalition
        sub = seed_mask
        while True:
            null.add(sub)
            if sub == 0:
                break
            sub = (sub - 1) & seed_mask
    values = monotone_closure(rng.uniform(floor, 1.0, size=1 << d), d)
    for mask in null:
        values[mask] = 0.0
    # re-check monotonicity: nulls form a lower set, so zeros never sit above
    # a positive sub-coalition
    return GameTable.from_values(d, values)


def symmetrized(game: GameTable, i: int, j: int) -> GameTable:
    """Average the game with its (i j)-relabeling, making i and j symmetric."""
    d = game.d
    swapped = np.empty_like(game.values)
    for mask in range(1 << d):
        other = mask & ~((1 << i) | (1 << j))
        if mask >> i & 1:
            other |= 1 << j
        if mask >> j & 1:
            other |= 1 << i
        swapped[mask] = game.values[other]
    return GameTable.from_values(d, 0.5 * (game.values + swapped))


def with_null_player(game: GameTable) -> GameTable:
    """Extend by one player whose presence never changes any worth."""
    d = game.d
    values = np.empty(1 << (d + 1))
    values[: 1 << d] = game.values
    values[1 << d :] = game.values
    return GameTable.from_values(d + 1, values)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260823)
