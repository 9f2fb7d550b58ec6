"""Tests for parrondo.models."""

import unittest

import numpy as np
from pydantic import ValidationError

from parrondo.models import (
    CrossSectionSpec,
    EquilibriumStats,
    GameKind,
    GameSpec,
    LatticeDims,
    LatticeState,
    ParamVector,
    RegimeTag,
    RegionCell,
    RegionClass,
    RegionGrid,
    SignVariant,
    SimConfig,
    parse_probability,
)


class TestLatticeDims(unittest.TestCase):
    """Test lattice sizes and their text form."""

    def test_parse(self) -> None:
        dims = LatticeDims.parse("3x4")
        self.assertEqual((dims.M, dims.N), (3, 4))
        self.assertEqual(dims.sites, 12)
        self.assertEqual(dims.num_states, 4096)
        self.assertEqual(dims.token, "3x4")

    def test_parse_uppercase(self) -> None:
        self.assertEqual(LatticeDims.parse(" 5X5 "), LatticeDims(M=5, N=5))

    def test_too_small(self) -> None:
        with self.assertRaises(ValidationError):
            LatticeDims(M=2, N=5)

    def test_missing_separator(self) -> None:
        with self.assertRaises(ValueError):
            LatticeDims.parse("33")

    def test_hashable(self) -> None:
        self.assertEqual(len({LatticeDims(M=3, N=3), LatticeDims.parse("3x3")}), 1)


class TestLatticeState(unittest.TestCase):
    """Test bit packing of lattice states."""

    def setUp(self) -> None:
        self.rows = [[0, 0, 1], [0, 1, 0], [1, 0, 1]]
        self.x = LatticeState.from_rows(self.rows)

    def test_rows_round_trip(self) -> None:
        self.assertEqual(self.x.to_rows(), self.rows)

    def test_bit_layout(self) -> None:
        # (1,3) is bit 2, (2,2) bit 4, (3,1) bit 6, (3,3) bit 8
        self.assertEqual(self.x.bits, (1 << 2) | (1 << 4) | (1 << 6) | (1 << 8))

    def test_get(self) -> None:
        self.assertEqual(self.x.get(1, 3), 1)
        self.assertEqual(self.x.get(1, 1), 0)
        with self.assertRaises(ValueError):
            self.x.get(4, 1)

    def test_winners(self) -> None:
        self.assertEqual(self.x.num_winners, 4)
        self.assertEqual(LatticeState.ones(LatticeDims(M=3, N=4)).num_winners, 12)

    def test_to_array_dtype(self) -> None:
        array = self.x.to_array()
        self.assertEqual(array.dtype, np.int8)
        self.assertEqual(array.shape, (3, 3))

    def test_bits_beyond_lattice(self) -> None:
        with self.assertRaises(ValidationError):
            LatticeState(bits=1 << 9, dims=LatticeDims(M=3, N=3))

    def test_non_binary_array(self) -> None:
        with self.assertRaises(ValueError):
            LatticeState.from_array(np.full((3, 3), 2))


class TestParamVector(unittest.TestCase):
    """Test coin probability vectors."""

    def test_parse_fractions(self) -> None:
        p = ParamVector.parse("1/20,3/20,8/13,3/4,9/10")
        self.assertAlmostEqual(p[2], 8 / 13)
        self.assertEqual(p[4], 0.9)

    def test_parse_wrong_length(self) -> None:
        with self.assertRaises(ValueError):
            ParamVector.parse("0.1,0.2")

    def test_out_of_range(self) -> None:
        with self.assertRaises(ValidationError):
            ParamVector.of(0.1, 0.2, 1.5, 0.3, 0.4)

    def test_q(self) -> None:
        p = ParamVector.of(0.0, 0.25, 0.5, 0.75, 1.0)
        self.assertEqual(p.q, (1.0, 0.75, 0.5, 0.25, 0.0))

    def test_token_parses_back(self) -> None:
        p = ParamVector.parse("1/20,3/20,8/13,3/4,9/10")
        self.assertEqual(ParamVector.parse(p.token), p)

    def test_monotone_and_dominated(self) -> None:
        low = ParamVector.of(0.1, 0.2, 0.3, 0.4, 0.5)
        high = ParamVector.of(0.2, 0.2, 0.4, 0.4, 0.6)
        self.assertTrue(low.is_monotone)
        self.assertTrue(low.dominated_by(high))
        self.assertFalse(high.dominated_by(low))
        self.assertFalse(ParamVector.of(1, 0, 1, 0.5, 0.5).is_monotone)

    def test_parse_probability(self) -> None:
        self.assertEqual(parse_probability("3/4"), 0.75)
        with self.assertRaises(ValueError):
            parse_probability("5/4")


class TestGameSpec(unittest.TestCase):
    """Test game descriptors."""

    def test_parse_b(self) -> None:
        self.assertEqual(GameSpec.parse("B").kind, GameKind.B)

    def test_parse_mixture(self) -> None:
        spec = GameSpec.parse("mix:1/2")
        self.assertEqual(spec.kind, GameKind.MIXTURE)
        self.assertEqual(spec.gamma, 0.5)
        self.assertEqual(spec.token, "mix:0.5")

    def test_parse_pattern(self) -> None:
        spec = GameSpec.parse("pat:2,3")
        self.assertEqual((spec.r, spec.s), (2, 3))
        self.assertEqual(spec.token, "pat:2,3")

    def test_invalid_gamma(self) -> None:
        with self.assertRaises(ValidationError):
            GameSpec.mixture(1.0)

    def test_invalid_pattern(self) -> None:
        with self.assertRaises(ValidationError):
            GameSpec.pattern(0, 1)

    def test_unknown_game(self) -> None:
        with self.assertRaises(ValueError):
            GameSpec.parse("C")

    def test_b_rejects_gamma(self) -> None:
        with self.assertRaises(ValidationError):
            GameSpec(kind=GameKind.B, gamma=0.5)


class TestEnums(unittest.TestCase):
    def test_sign(self) -> None:
        self.assertEqual(SignVariant.DOT.sign, -1.0)
        self.assertEqual(SignVariant.PLAIN.sign, 1.0)
        self.assertEqual(SignVariant.DDOT.sign, 1.0)

    def test_known_mean(self) -> None:
        self.assertEqual(RegimeTag.ABSORB_ZEROS.known_mean, -1.0)
        self.assertEqual(RegimeTag.ABSORB_ONES.known_mean, 1.0)
        self.assertEqual(RegimeTag.CHECKERBOARD.known_mean, 0.0)
        self.assertIsNone(RegimeTag.ERGODIC.known_mean)


class TestRecords(unittest.TestCase):
    """Test the serialised forms of result models."""

    def test_stats_record(self) -> None:
        stats = EquilibriumStats(
            dims=LatticeDims(M=3, N=3),
            game=GameSpec.mixture(0.5),
            params=ParamVector.fair(),
            mean=0.0,
            variance=1.0,
            num_classes=26,
            stationary=np.ones(26) / 26,
        )
        record = stats.to_record()
        self.assertEqual(record["game"], "mix:0.5")
        self.assertEqual(record["regime"], "ergodic")
        self.assertEqual(record["sigma2"], 1.0)
        self.assertNotIn("stationary", stats.model_dump())

    def test_sim_config_bounds(self) -> None:
        with self.assertRaises(ValidationError):
            SimConfig(n=0)
        with self.assertRaises(ValidationError):
            SimConfig(n=10, seed=-1)


class TestCrossSectionSpec(unittest.TestCase):
    """Test validation of grid cross-sections."""

    def make(self, **kwargs) -> CrossSectionSpec:
        values = {
            "dims": LatticeDims(M=3, N=3),
            "fixed": {"p0": 0.1, "p2": 0.5, "p4": 0.9},
            "axes": (("p1", 3), ("p3", 4)),
        }
        values.update(kwargs)
        return CrossSectionSpec(**values)

    def test_valid(self) -> None:
        spec = self.make()
        self.assertEqual(spec.axis_names, ["p1", "p3"])
        self.assertEqual(spec.num_cells, 12)
        self.assertEqual(spec.game_for_c, GameSpec.mixture(0.5))

    def test_missing_coordinate(self) -> None:
        with self.assertRaises(ValidationError):
            self.make(fixed={"p0": 0.1, "p4": 0.9})

    def test_overlap(self) -> None:
        with self.assertRaises(ValidationError):
            self.make(fixed={"p0": 0.1, "p1": 0.2, "p2": 0.5, "p4": 0.9})

    def test_game_b_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            self.make(game_for_c=GameSpec.b())

    def test_resolution(self) -> None:
        with self.assertRaises(ValidationError):
            self.make(axes=(("p1", 1), ("p3", 4)))

    def test_grid_counts(self) -> None:
        spec = self.make()
        grid = RegionGrid(
            spec=spec,
            cells=[
                RegionCell(values=(0.0, 0.0), mu_b=-0.1, mu_c=0.1, region=RegionClass.PARRONDO),
                RegionCell(values=(0.0, 0.5), region=RegionClass.UNDEFINED),
            ],
        )
        self.assertEqual(
            grid.counts(),
            {"parrondo": 1, "anti_parrondo": 0, "neither": 0, "undefined": 1},
        )


if __name__ == "__main__":
    unittest.main()
