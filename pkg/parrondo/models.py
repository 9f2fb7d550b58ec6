"""Pydantic v2 models for lattice states, game parameters and result records."""

from __future__ import annotations

from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1
PARAM_NAMES = ("p0", "p1", "p2", "p3", "p4")


def parse_probability(text: str) -> float:
    """Parse a decimal or fractional probability such as ``0.05`` or ``8/13``."""
    value = Fraction(text.strip())
    if not 0 <= value <= 1:
        raise ValueError(f"{text!r} is not a probability")
    return float(value)


class LatticeDims(BaseModel):
    """Size of the M x N torus of players (M rows, N columns)."""

    model_config = ConfigDict(frozen=True)

    M: int = Field(ge=3, description="Number of rows")
    N: int = Field(ge=3, description="Number of columns")

    @property
    def sites(self) -> int:
        return self.M * self.N

    @property
    def num_states(self) -> int:
        return 1 << self.sites

    @property
    def is_square(self) -> bool:
        return self.M == self.N

    @property
    def token(self) -> str:
        return f"{self.M}x{self.N}"

    @classmethod
    def parse(cls, text: str) -> LatticeDims:
        """Parse ``"3x4"`` into ``LatticeDims(M=3, N=4)``."""
        rows, sep, cols = text.strip().lower().partition("x")
        if not sep:
            raise ValueError(f"expected MxN, got {text!r}")
        return cls(M=int(rows), N=int(cols))


class LatticeState(BaseModel):
    """A {0,1} configuration of the lattice packed into an integer.

    Bit ``(i-1)*N + (j-1)`` holds the player at row i, column j (1-based).
    """

    model_config = ConfigDict(frozen=True)

    bits: int = Field(ge=0)
    dims: LatticeDims

    @model_validator(mode="after")
    def _check_width(self) -> LatticeState:
        if self.bits >> self.dims.sites:
            raise ValueError(f"bits set beyond the {self.dims.sites} lattice sites")
        return self

    @classmethod
    def zeros(cls, dims: LatticeDims) -> LatticeState:
        return cls(bits=0, dims=dims)

    @classmethod
    def ones(cls, dims: LatticeDims) -> LatticeState:
        return cls(bits=dims.num_states - 1, dims=dims)

    @classmethod
    def from_rows(cls, rows: list[list[int]] | tuple) -> LatticeState:
        """Build a state from nested rows, top row first."""
        return cls.from_array(np.asarray(rows))

    @classmethod
    def from_array(cls, array: np.ndarray) -> LatticeState:
        grid = np.asarray(array)
        if grid.ndim != 2 or not np.isin(grid, (0, 1)).all():
            raise ValueError("expected a 2-D array of zeros and ones")
        dims = LatticeDims(M=grid.shape[0], N=grid.shape[1])
        digits = "".join(str(int(v)) for v in grid.ravel()[::-1])
        return cls(bits=int(digits, 2), dims=dims)

    def to_array(self) -> np.ndarray:
        """Return the state as an int8 array of shape (M, N)."""
        digits = format(self.bits, f"0{self.dims.sites}b")[::-1]
        flat = np.frombuffer(digits.encode(), dtype=np.uint8) - ord("0")
        return flat.astype(np.int8).reshape(self.dims.M, self.dims.N)

    def to_rows(self) -> list[list[int]]:
        return self.to_array().tolist()

    def get(self, i: int, j: int) -> int:
        """Value of the player at row i, column j (1-based)."""
        if not (1 <= i <= self.dims.M and 1 <= j <= self.dims.N):
            raise ValueError(f"site ({i},{j}) outside the {self.dims.token} lattice")
        return (self.bits >> ((i - 1) * self.dims.N + (j - 1))) & 1

    @property
    def num_winners(self) -> int:
        return self.bits.bit_count()


class ParamVector(BaseModel):
    """Coin probabilities (p0, ..., p4); p_m applies when m neighbours are winners."""

    model_config = ConfigDict(frozen=True)

    p: tuple[float, float, float, float, float]

    @field_validator("p")
    @classmethod
    def _check_probabilities(cls, value: tuple) -> tuple:
        for m, pm in enumerate(value):
            if not 0.0 <= pm <= 1.0:
                raise ValueError(f"p{m}={pm} is not a probability")
        return value

    @classmethod
    def of(cls, *values: float) -> ParamVector:
        return cls(p=tuple(float(v) for v in values))

    @classmethod
    def fair(cls) -> ParamVector:
        """Parameters of game A: every coin fair."""
        return cls.of(0.5, 0.5, 0.5, 0.5, 0.5)

    @classmethod
    def parse(cls, text: str) -> ParamVector:
        """Parse ``"1/20,3/20,8/13,3/4,9/10"`` or plain decimals."""
        tokens = [t for t in text.replace(" ", "").split(",") if t]
        if len(tokens) != 5:
            raise ValueError(f"expected five probabilities, got {len(tokens)}")
        return cls.of(*(parse_probability(t) for t in tokens))

    def __getitem__(self, m: int) -> float:
        return self.p[m]

    @property
    def q(self) -> tuple[float, ...]:
        return tuple(1.0 - pm for pm in self.p)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.p, dtype=np.float64)

    @property
    def token(self) -> str:
        return ",".join(repr(pm) for pm in self.p)

    @property
    def is_monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.p, self.p[1:]))

    def dominated_by(self, other: ParamVector) -> bool:
        """True when every coordinate is <= the matching one in *other*."""
        return all(a <= b for a, b in zip(self.p, other.p))


class GameKind(str, Enum):
    B = "B"
    MIXTURE = "mixture"
    PATTERN = "pattern"


class GameSpec(BaseModel):
    """Which game is played; the coin probabilities travel alongside as a ParamVector.

    Mixture plays A with probability gamma each turn; Pattern plays A r times
    then B s times, repeating.
    """

    model_config = ConfigDict(frozen=True)

    kind: GameKind = GameKind.B
    gamma: float | None = Field(default=None, description="Probability of game A per turn")
    r: int | None = Field(default=None, description="Consecutive A turns per cycle")
    s: int | None = Field(default=None, description="Consecutive B turns per cycle")

    @model_validator(mode="after")
    def _check_variant(self) -> GameSpec:
        if self.kind is GameKind.MIXTURE:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ValueError("mixture needs 0 < gamma < 1")
            if self.r is not None or self.s is not None:
                raise ValueError("mixture takes no r, s")
        elif self.kind is GameKind.PATTERN:
            if self.r is None or self.s is None or self.r < 1 or self.s < 1:
                raise ValueError("pattern needs r >= 1 and s >= 1")
            if self.gamma is not None:
                raise ValueError("pattern takes no gamma")
        elif self.gamma is not None or self.r is not None or self.s is not None:
            raise ValueError("game B takes no gamma, r or s")
        return self

    @classmethod
    def b(cls) -> GameSpec:
        return cls()

    @classmethod
    def mixture(cls, gamma: float) -> GameSpec:
        return cls(kind=GameKind.MIXTURE, gamma=gamma)

    @classmethod
    def pattern(cls, r: int, s: int) -> GameSpec:
        return cls(kind=GameKind.PATTERN, r=r, s=s)

    @classmethod
    def parse(cls, text: str) -> GameSpec:
        """Parse ``B``, ``mix:GAMMA`` or ``pat:R,S``."""
        head, _, rest = text.strip().partition(":")
        head = head.lower()
        if head == "b" and not rest:
            return cls.b()
        if head in ("mix", "mixture"):
            return cls.mixture(float(Fraction(rest)))
        if head in ("pat", "pattern"):
            r, sep, s = rest.partition(",")
            if not sep:
                raise ValueError(f"expected pat:R,S, got {text!r}")
            return cls.pattern(int(r), int(s))
        raise ValueError(f"unknown game {text!r}; use B, mix:GAMMA or pat:R,S")

    @property
    def token(self) -> str:
        if self.kind is GameKind.MIXTURE:
            return f"mix:{self.gamma!r}"
        if self.kind is GameKind.PATTERN:
            return f"pat:{self.r},{self.s}"
        return "B"


class SignVariant(str, Enum):
    """Which transition matrix to build: P, Ṗ (profit-weighted) or P̈ (squared profit)."""

    PLAIN = "plain"
    DOT = "dot"
    DDOT = "ddot"

    @property
    def sign(self) -> float:
        return -1.0 if self is SignVariant.DOT else 1.0


class RegimeTag(str, Enum):
    ERGODIC = "ergodic"
    RESTRICTED_DROP0 = "restricted_ergodic_drop0"
    ABSORB_ZEROS = "absorb_all_zeros"
    RESTRICTED_DROP1 = "restricted_ergodic_drop1"
    ABSORB_ONES = "absorb_all_ones"
    CHECKERBOARD = "checkerboard_mean_zero"
    CASE5_ODD_CONJECTURED = "case5_odd_conjectured"
    MEAN_UNDEFINED = "mean_undefined"
    BOUNDARY_ACCESSIBLE = "boundary_accessible"

    @property
    def known_mean(self) -> float | None:
        """Mean profit fixed by the regime alone, if any."""
        return {
            RegimeTag.ABSORB_ZEROS: -1.0,
            RegimeTag.ABSORB_ONES: 1.0,
            RegimeTag.CHECKERBOARD: 0.0,
        }.get(self)


class SymmetryGroup(BaseModel):
    """Permutation group acting on lattice sites.

    ``elements[g, s]`` is the source site read into site s by element g, so
    applying g to x gives ``y[s] = x[elements[g, s]]``. Element 0 is the identity.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: LatticeDims
    generators: tuple[str, ...]
    elements: np.ndarray

    @property
    def order(self) -> int:
        return int(self.elements.shape[0])


class OrbitTable(BaseModel):
    """Equivalence classes of lattice states under a symmetry group.

    Classes are indexed in increasing order of their minimum-bits representative,
    so the all-zeros class is always index 0.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: LatticeDims
    use_transpose: bool = False
    group_order: int = Field(ge=1)
    class_of: np.ndarray = Field(description="Class index of every state, int32")
    representative: np.ndarray = Field(description="Minimum-bits member of each class, int64")
    class_size: np.ndarray = Field(description="Number of states in each class, int64")

    @property
    def num_classes(self) -> int:
        return int(self.representative.shape[0])

    def class_index(self, state: LatticeState) -> int:
        return int(self.class_of[state.bits])


class ReducedChain(BaseModel):
    """Lumped transition matrix over orbit classes for one parameter vector."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dims: LatticeDims
    params: ParamVector
    variant: SignVariant = SignVariant.PLAIN
    orbit_table: OrbitTable
    matrix: Any = Field(description="scipy.sparse CSR matrix of shape (K, K)")

    @property
    def num_classes(self) -> int:
        return self.orbit_table.num_classes


class EquilibriumStats(BaseModel):
    """Stationary mean and variance of the per-turn profit of a game."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dims: LatticeDims
    game: GameSpec
    params: ParamVector
    mean: float
    variance: float | None = None
    regime: RegimeTag = RegimeTag.ERGODIC
    num_classes: int
    residual: float = Field(default=0.0, description="max |pi P - pi| of the solved chain")
    stationary: np.ndarray | None = Field(default=None, exclude=True)

    def to_record(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "M": self.dims.M,
            "N": self.dims.N,
            "game": self.game.token,
            "params": list(self.params.p),
            "mu": self.mean,
            "sigma2": self.variance,
            "regime": self.regime.value,
            "num_classes": self.num_classes,
            "residual": self.residual,
        }


class SimConfig(BaseModel):
    """Options for one simulated run."""

    n: int = Field(ge=1, description="Number of recorded turns")
    warmup: int | None = Field(default=None, ge=0, description="Discarded turns; default 10 x mixing bound")
    block_constant: float | None = Field(default=None, gt=0, description="c in b = floor(c n^(1/3))")
    seed: int = Field(default=0, ge=0, lt=2**64)
    initial_state: LatticeState | None = None
    trace_stride: int | None = Field(default=None, ge=1, description="Record S_n every this many turns")


class SimResult(BaseModel):
    """Outcome of a simulated run: point estimates plus the run's provenance."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dims: LatticeDims
    game: GameSpec
    params: ParamVector
    n: int
    warmup: int
    block_size: int
    block_constant: float
    seed: int
    mean_hat: float
    var_hat: float
    std_error: float
    game_a_turns: int = 0
    final_state: LatticeState | None = Field(default=None, exclude=True)
    trace: list[tuple[int, int]] = Field(default_factory=list, exclude=True)

    def to_record(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "M": self.dims.M,
            "N": self.dims.N,
            "game": self.game.token,
            "params": list(self.params.p),
            "n": self.n,
            "l": self.warmup,
            "b": self.block_size,
            "c": self.block_constant,
            "seed": self.seed,
            "mean_hat": self.mean_hat,
            "var_hat": self.var_hat,
            "std_error": self.std_error,
            "game_a_turns": self.game_a_turns,
        }


class CouplingResult(BaseModel):
    """Cumulative profits of two chains driven by the same random draws."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    path: np.ndarray
    path_prime: np.ndarray
    dominance: bool = Field(description="S_n <= S'_n held at every turn")


class RegionClass(str, Enum):
    PARRONDO = "parrondo"
    ANTI_PARRONDO = "anti_parrondo"
    NEITHER = "neither"
    UNDEFINED = "undefined"


class CrossSectionSpec(BaseModel):
    """A grid through the five-dimensional parameter cube.

    ``fixed`` pins some coordinates; ``axes`` lists the varying ones with their
    resolution, each spanning [0, 1] uniformly.
    """

    model_config = ConfigDict(frozen=True)

    dims: LatticeDims
    fixed: dict[str, float] = Field(default_factory=dict)
    axes: tuple[tuple[str, int], ...]
    game_for_c: GameSpec = Field(default_factory=lambda: GameSpec.mixture(0.5))
    turns_per_cell: int | None = Field(default=None, ge=1, description="Simulate cells instead of solving")
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_coordinates(self) -> CrossSectionSpec:
        axis_names = [name for name, _ in self.axes]
        if len(set(axis_names)) != len(axis_names):
            raise ValueError("axis names repeat")
        if set(axis_names) & set(self.fixed):
            raise ValueError("a coordinate is both fixed and varying")
        if set(axis_names) | set(self.fixed) != set(PARAM_NAMES):
            raise ValueError(f"fixed and axes must cover exactly {', '.join(PARAM_NAMES)}")
        for name, resolution in self.axes:
            if resolution < 2:
                raise ValueError(f"axis {name} needs at least 2 points")
        for name, value in self.fixed.items():
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} is not a probability")
        if self.game_for_c.kind is GameKind.B:
            raise ValueError("game C must be a mixture or a pattern")
        return self

    @property
    def axis_names(self) -> list[str]:
        return [name for name, _ in self.axes]

    @property
    def num_cells(self) -> int:
        return int(np.prod([resolution for _, resolution in self.axes]))


class RegionCell(BaseModel):
    values: tuple[float, ...] = Field(description="Coordinates along the grid axes, in axis order")
    mu_b: float | None = None
    mu_c: float | None = None
    region: RegionClass


class RegionGrid(BaseModel):
    spec: CrossSectionSpec
    cells: list[RegionCell] = Field(default_factory=list)

    def counts(self) -> dict[str, int]:
        tally = {region.value: 0 for region in RegionClass}
        for cell in self.cells:
            tally[cell.region.value] += 1
        return tally


class VolumeReport(BaseModel):
    """Monte Carlo volume of the Parrondo and anti-Parrondo regions in the (p1, p3, p2) cube."""

    dims: LatticeDims
    p0: float
    p4: float
    game: GameSpec
    samples: int
    seed: int
    vol_parrondo: float
    se_parrondo: float
    vol_anti: float
    se_anti: float
    undefined: int = 0

    def to_record(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "M": self.dims.M,
            "N": self.dims.N,
            "p0": self.p0,
            "p4": self.p4,
            "game": self.game.token,
            "samples": self.samples,
            "seed": self.seed,
            "vol_parrondo": self.vol_parrondo,
            "se_parrondo": self.se_parrondo,
            "vol_anti": self.vol_anti,
            "se_anti": self.se_anti,
            "undefined": self.undefined,
        }


class ConditionKind(str, Enum):
    BASIC = "basic"
    ANNIHILATING = "annihilating"
    EITHER = "either"


class ConditionGame(str, Enum):
    B = "B"
    HALF_MIXTURE = "half-mixture"


class ConditionFraction(BaseModel):
    condition: ConditionKind
    game: ConditionGame
    samples: int
    seed: int
    fraction: float
    std_error: float


class ProbeRow(BaseModel):
    """Means of games B and C at one lattice size."""

    dims: LatticeDims
    mode: str
    mu_b: float | None = None
    se_b: float | None = None
    mu_c: float | None = None
    se_c: float | None = None


class ProfileRow(BaseModel):
    """Means and neighbour-count weights along a sweep of p2."""

    p2: float
    mu_b: float | None = None
    mu_c: float | None = None
    weights: tuple[float, ...] | None = None
