"""Seeded random streams for simulated play."""

from __future__ import annotations

import numpy as np

from parrondo.models import LatticeDims


class RngStreams:
    """Three independent Philox streams: the row I, the column J and the coin U.

    All three are spawned from one SeedSequence, so a seed fixes every draw and
    two chains fed from the same streams see the same (I, J, U) sequence.
    """

    def __init__(self, seed: int, dims: LatticeDims) -> None:
        self.seed = seed
        self.dims = dims
        rows, cols, coins = np.random.SeedSequence(seed).spawn(3)
        self._rows = np.random.Generator(np.random.Philox(rows))
        self._cols = np.random.Generator(np.random.Philox(cols))
        self._coins = np.random.Generator(np.random.Philox(coins))

    def sites(self, count: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw *count* 0-based (row, column) pairs."""
        return (
            self._rows.integers(0, self.dims.M, size=count, dtype=np.int64),
            self._cols.integers(0, self.dims.N, size=count, dtype=np.int64),
        )

    def uniforms(self, count: int) -> np.ndarray:
        """Draw *count* coin variables uniform on (0, 1]."""
        return 1.0 - self._coins.random(count)
