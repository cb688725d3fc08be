"""Coalition, GameTable, Allocation, and validation behavior."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from varshare.coalitions import (
    Allocation,
    AllocationMethod,
    Coalition,
    GameTable,
    dual,
    enumerate_coalitions,
    popcounts,
    restrict,
    validate,
)
from varshare.errors import ContractError, DimensionError

from conftest import random_monotone_game


class TestCoalition:
    def test_members_round_trip(self):
        c = Coalition.from_members([0, 2], 3)
        assert c.bits == 0b101
        assert c.members() == (0, 2)
        assert len(c) == 2
        assert 0 in c and 1 not in c and 2 in c

    def test_complement(self):
        c = Coalition(0b011, 4)
        assert c.complement().bits == 0b1100

    def test_str_uses_one_based_labels(self):
        assert str(Coalition(0, 3)) == "0"
        assert str(Coalition(0b101, 3)) == "1+3"

    def test_out_of_range_rejected(self):
        with pytest.raises(DimensionError):
            Coalition(8, 3)
        with pytest.raises(DimensionError):
            Coalition(-1, 3)
        with pytest.raises(DimensionError):
            Coalition(0, 0)
        with pytest.raises(DimensionError):
            Coalition(0, 21)
        with pytest.raises(DimensionError):
            Coalition.from_members([3], 3)

    def test_set_operations_demand_same_ground_set(self):
        with pytest.raises(DimensionError):
            Coalition(1, 2).union(Coalition(1, 3))

    def test_grand_and_empty(self):
        assert Coalition.grand(4).bits == 15
        assert Coalition.empty(4).bits == 0


class TestEnumeration:
    def test_order_is_cardinality_then_bits(self):
        # d=3: empty, singletons ascending, pairs ascending, grand
        got = [c.bits for c in enumerate_coalitions(3)]
        assert got == [0, 1, 2, 4, 3, 5, 6, 7]

    def test_count(self):
        assert len(enumerate_coalitions(5)) == 32

    def test_popcounts(self):
        assert popcounts(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


class TestGameTable:
    def test_empty_coalition_must_be_zero(self):
        with pytest.raises(ContractError):
            GameTable(2, np.array([0.1, 0.5, 0.5, 1.0]))

    def test_shape_checked(self):
        with pytest.raises(DimensionError):
            GameTable(2, np.zeros(5))

    def test_non_finite_rejected(self):
        with pytest.raises(ContractError):
            GameTable(1, np.array([0.0, np.nan]))

    def test_values_read_only(self):
        g = GameTable(1, np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            g.values[1] = 2.0

    def test_value_accessor(self):
        g = GameTable(2, np.array([0.0, 1.0, 3.0, 8.0]))
        assert g.value(Coalition(0b11, 2)) == 8.0
        assert g.value(2) == 3.0
        assert g.grand_value == 8.0
        with pytest.raises(DimensionError):
            g.value(Coalition(1, 3))
        with pytest.raises(DimensionError):
            g.value(4)

    def test_from_values_stamps_flags(self):
        g = GameTable.from_values(2, np.array([0.0, 1.0, 3.0, 8.0]))
        assert g.monotone and g.nonnegative
        h = GameTable.from_values(2, np.array([0.0, 1.0, 3.0, 2.0]))
        assert not h.monotone and h.nonnegative


class TestDual:
    def test_worked_example(self):
        g = GameTable.from_values(2, np.array([0.0, 1.0, 3.0, 8.0]))
        w = dual(g)
        assert w.values.tolist() == [0.0, 5.0, 7.0, 8.0]

    def test_involution(self, rng):
        for _ in range(10):
            g = random_monotone_game(rng, 4)
            assert_allclose(dual(dual(g)).values, g.values, atol=1e-12)

    def test_dual_of_monotone_is_monotone_and_nonnegative(self, rng):
        for _ in range(10):
            g = random_monotone_game(rng, 4)
            w = dual(g)
            report = validate(w)
            assert report.monotone and report.nonnegative


class TestValidate:
    def test_reports_violating_pairs(self):
        g = GameTable(2, np.array([0.0, 1.0, 3.0, 2.0]))
        report = validate(g)
        assert not report.monotone
        # only the {2} inclusion into the grand coalition fails: 3 > 2
        assert report.monotone_violations == ((2, 3),)

    def test_negative_values_reported(self):
        g = GameTable(2, np.array([0.0, -1.0, 0.5, 1.0]))
        report = validate(g)
        assert not report.nonnegative
        assert report.negative_masks == (1,)

    def test_tolerance_absorbs_round_off(self):
        g = GameTable(1, np.array([0.0, -1e-15]))
        assert validate(g).nonnegative


class TestRestrict:
    def test_subgame_reindexes_players(self):
        g = GameTable.from_values(3, np.arange(8.0) * np.array([0, 1, 1, 1, 1, 1, 1, 1]))
        sub = restrict(g, Coalition.from_members([0, 2], 3))
        # sub players (0,1) map to original (1,3): masks 0,1,4,5
        assert sub.values.tolist() == [g.values[0], g.values[1], g.values[4], g.values[5]]

    def test_empty_restriction_rejected(self):
        g = GameTable(1, np.array([0.0, 1.0]))
        with pytest.raises(DimensionError):
            restrict(g, Coalition.empty(1))


class TestAllocation:
    def test_efficiency_enforced(self):
        with pytest.raises(ContractError):
            Allocation(np.array([1.0, 2.0]), 4.0, AllocationMethod.SHAPLEY)

    def test_efficiency_tolerance_is_relative(self):
        big = 1e8
        Allocation(np.array([big, big + big * 5e-11]), 2 * big, AllocationMethod.SHAPLEY)

    def test_degenerate_skips_efficiency(self):
        a = Allocation(
            np.zeros(2), 0.7, AllocationMethod.PME, degenerate=True
        )
        assert a.degenerate and a.total == 0.7

    def test_non_finite_rejected(self):
        with pytest.raises(ContractError):
            Allocation(np.array([np.inf, 0.0]), np.inf, AllocationMethod.PV)

    def test_method_coerced_to_enum(self):
        a = Allocation(np.array([1.0]), 1.0, "pme")
        assert a.method is AllocationMethod.PME
