"""Tests for parrondo.lattice."""

import json
import unittest
from pathlib import Path

import numpy as np

from parrondo.errors import CapacityExceeded, DomainError
from parrondo.lattice import (
    apply_permutation,
    canonicalize,
    column_rotation,
    enumerate_orbits,
    generators,
    neighbor_count,
    neighbor_table,
    orbit,
    row_rotation,
    site_index,
    site_neighbor_counts,
    stabilizer_size,
    symmetry_group,
    transposition,
    verify_lumpability,
)
from parrondo.models import LatticeDims, LatticeState, ParamVector
from tests import SLOW, SLOW_REASON

FIXTURES = Path(__file__).parent / "fixtures"
D33 = LatticeDims(M=3, N=3)
D34 = LatticeDims(M=3, N=4)


class TestNeighborCount(unittest.TestCase):
    """Test wrapped neighbour counting."""

    def setUp(self) -> None:
        self.x = LatticeState.from_rows([[0, 0, 1], [0, 1, 0], [1, 0, 1]])

    def test_constant_states(self) -> None:
        for i in range(1, 4):
            for j in range(1, 4):
                self.assertEqual(neighbor_count(LatticeState.zeros(D33), i, j), 0)
                self.assertEqual(neighbor_count(LatticeState.ones(D33), i, j), 4)

    def test_centre(self) -> None:
        self.assertEqual(neighbor_count(self.x, 2, 2), 0)

    def test_wrapped_corner(self) -> None:
        self.assertEqual(neighbor_count(self.x, 1, 3), 1)

    def test_out_of_range(self) -> None:
        with self.assertRaises(DomainError):
            neighbor_count(self.x, 0, 1)
        with self.assertRaises(DomainError):
            neighbor_count(self.x, 1, 4)

    def test_vectorised_counts_agree(self) -> None:
        bits = np.arange(D34.num_states, step=37)
        counts = site_neighbor_counts(bits, D34)
        for row, b in zip(counts, bits.tolist()):
            x = LatticeState(bits=b, dims=D34)
            expected = [neighbor_count(x, i, j) for i in range(1, 4) for j in range(1, 5)]
            self.assertEqual(row.tolist(), expected)

    def test_table_read_only(self) -> None:
        with self.assertRaises(ValueError):
            neighbor_table(D33)[0, 0] = 1

    def test_site_index(self) -> None:
        self.assertEqual(site_index(D34, 1, 1), 0)
        self.assertEqual(site_index(D34, 3, 4), 11)


class TestSymmetryGroup(unittest.TestCase):
    """Test group generation and closure."""

    def test_orders(self) -> None:
        self.assertEqual(symmetry_group(D33).order, 36)
        self.assertEqual(symmetry_group(D33, True).order, 72)
        self.assertEqual(symmetry_group(D34).order, 48)
        self.assertEqual(symmetry_group(LatticeDims(M=4, N=4)).order, 64)

    def test_order_divides_8mn(self) -> None:
        for dims in (D33, D34, LatticeDims(M=3, N=5), LatticeDims(M=4, N=5)):
            self.assertEqual((8 * dims.sites) % symmetry_group(dims).order, 0)

    def test_identity_first(self) -> None:
        group = symmetry_group(D34)
        self.assertEqual(group.elements[0].tolist(), list(range(12)))

    def test_closed(self) -> None:
        group = symmetry_group(D33, True)
        members = {e.tobytes() for e in group.elements}
        for a in group.elements[::7]:
            for b in group.elements[::5]:
                self.assertIn(a[b].tobytes(), members)

    def test_transpose_needs_square(self) -> None:
        with self.assertRaises(DomainError):
            transposition(D34)
        with self.assertRaises(DomainError):
            symmetry_group(D34, True)

    def test_generators_preserve_neighbour_counts(self) -> None:
        # m_s(x_sigma) = m_sigma(s)(x) for every state and site
        bits = np.arange(D33.num_states)
        counts = site_neighbor_counts(bits, D33)
        for name, sigma in generators(D33, True).items():
            moved = np.array([apply_permutation(LatticeState(bits=int(b), dims=D33), sigma).bits for b in bits])
            np.testing.assert_array_equal(site_neighbor_counts(moved, D33), counts[:, sigma], err_msg=name)


class TestApplyPermutation(unittest.TestCase):
    def setUp(self) -> None:
        self.x = LatticeState.from_rows([[0, 0, 1, 1], [0, 1, 0, 0], [1, 0, 1, 0]])

    def test_identity(self) -> None:
        self.assertEqual(apply_permutation(self.x, np.arange(12)), self.x)

    def test_zeros_fixed(self) -> None:
        zeros = LatticeState.zeros(D34)
        for sigma in symmetry_group(D34).elements:
            self.assertEqual(apply_permutation(zeros, sigma), zeros)

    def test_rotation_order(self) -> None:
        y = self.x
        for _ in range(3):
            y = apply_permutation(y, row_rotation(D34))
        self.assertEqual(y, self.x)
        for _ in range(4):
            y = apply_permutation(y, column_rotation(D34))
        self.assertEqual(y, self.x)

    def test_row_rotation_moves_last_row_up(self) -> None:
        y = apply_permutation(self.x, row_rotation(D34))
        self.assertEqual(y.to_rows()[0], self.x.to_rows()[2])

    def test_length_mismatch(self) -> None:
        with self.assertRaises(DomainError):
            apply_permutation(self.x, np.arange(9))


class TestCanonicalize(unittest.TestCase):
    """Test orbit representatives."""

    def test_ones_singleton(self) -> None:
        group = symmetry_group(D33)
        ones = LatticeState.ones(D33)
        self.assertEqual(canonicalize(ones, group), ones)
        self.assertEqual(orbit(ones, group), {ones.bits})

    def test_idempotent_and_constant_on_orbits(self) -> None:
        group = symmetry_group(D33, True)
        for bits in range(0, D33.num_states, 3):
            x = LatticeState(bits=bits, dims=D33)
            c = canonicalize(x, group)
            self.assertEqual(canonicalize(c, group), c)
            self.assertLessEqual(c.bits, x.bits)
            for sigma in group.elements[::9]:
                self.assertEqual(canonicalize(apply_permutation(x, sigma), group), c)

    def test_orbit_stabilizer(self) -> None:
        rng = np.random.default_rng(5)
        for dims, transpose in ((D33, True), (D34, False), (LatticeDims(M=4, N=4), True)):
            group = symmetry_group(dims, transpose)
            for bits in rng.integers(0, dims.num_states, 20).tolist():
                x = LatticeState(bits=bits, dims=dims)
                self.assertEqual(len(orbit(x, group)) * stabilizer_size(x, group), group.order)

    def test_wrong_dims(self) -> None:
        with self.assertRaises(DomainError):
            canonicalize(LatticeState.zeros(D34), symmetry_group(D33))


class TestEnumerateOrbits(unittest.TestCase):
    """Test orbit counts against published effective state-space sizes."""

    @classmethod
    def setUpClass(cls) -> None:
        cls.reference = json.loads((FIXTURES / "reference_values.json").read_text())["orbit_counts"]

    def check(self, rows) -> None:
        for row in rows:
            dims = LatticeDims.parse(row["dims"])
            with self.subTest(dims=row["dims"], transpose=row["transpose"]):
                table = enumerate_orbits(dims, row["transpose"])
                self.assertEqual(table.num_classes, row["classes"])
                self.assertEqual(int(table.class_size.sum()), dims.num_states)

    def test_small_counts(self) -> None:
        self.check(row for row in self.reference if not row["slow"])

    @unittest.skipUnless(SLOW, SLOW_REASON)
    def test_large_counts(self) -> None:
        self.check(row for row in self.reference if row["slow"])

    def test_table_consistency(self) -> None:
        table = enumerate_orbits(D33, True)
        group = symmetry_group(D33, True)
        self.assertEqual(table.group_order, 72)
        self.assertEqual(table.class_of[0], 0)
        self.assertEqual(table.class_of[D33.num_states - 1], table.num_classes - 1)
        for bits in range(D33.num_states):
            rep = canonicalize(LatticeState(bits=bits, dims=D33), group).bits
            self.assertEqual(table.representative[table.class_of[bits]], rep)
        sizes = np.bincount(table.class_of, minlength=table.num_classes)
        np.testing.assert_array_equal(sizes, table.class_size)

    def test_over_limit(self) -> None:
        with self.assertRaises(CapacityExceeded):
            enumerate_orbits(LatticeDims(M=4, N=7))
        with self.assertRaises(CapacityExceeded):
            enumerate_orbits(LatticeDims(M=4, N=4), False, 15)


class TestLumpability(unittest.TestCase):
    """Test P(x_sigma, y_sigma) = P(x, y)."""

    def test_exhaustive_3x3(self) -> None:
        group = symmetry_group(D33, True)
        p = ParamVector.parse("1/20,3/20,8/13,3/4,9/10")
        self.assertTrue(verify_lumpability(D33, group, p))

    def test_game_a(self) -> None:
        self.assertTrue(verify_lumpability(D34, symmetry_group(D34), ParamVector.fair(), samples=500, seed=1))

    def test_sampled_4x4(self) -> None:
        dims = LatticeDims(M=4, N=4)
        p = ParamVector.of(0.1, 0.3, 0.2, 0.9, 0.4)
        self.assertTrue(verify_lumpability(dims, symmetry_group(dims, True), p, samples=300, seed=2))

    def test_foreign_group(self) -> None:
        with self.assertRaises(DomainError):
            verify_lumpability(D34, symmetry_group(D33), ParamVector.fair(), samples=10)


if __name__ == "__main__":
    unittest.main()
