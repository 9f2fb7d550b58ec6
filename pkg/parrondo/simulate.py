"""Monte Carlo play of games B and C with streaming block-variance estimation.

One run is a serial chain of turns. Draws come from ``RngStreams`` in batches of
``EngineConfig.chunk_size`` and are played by a numba kernel; the profits of a
batch feed a ``BlockVarianceAccumulator`` and are then discarded.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import partial

import numba as nb
import numpy as np
from loguru import logger

from parrondo.config import EngineConfig
from parrondo.errors import DomainError, MeanUndefined
from parrondo.exact import FAIR, classify_regime, mixture_params
from parrondo.lattice import neighbor_count, site_index
from parrondo.models import (
    CouplingResult,
    GameKind,
    GameSpec,
    LatticeDims,
    LatticeState,
    ParamVector,
    RegimeTag,
    SimConfig,
    SimResult,
)
from parrondo.rng import RngStreams

DEFAULT_EPSILON = 0.001
WARMUP_FACTOR = 10


def mixing_warmup(dims: LatticeDims, eps: float) -> int:
    """Mixing-time bound ceil(MN (ln M + ln N + ln(1/eps))) of game A."""
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps={eps} outside (0, 1]")
    return math.ceil(dims.sites * (math.log(dims.M) + math.log(dims.N) + math.log(1.0 / eps)))


def default_warmup(dims: LatticeDims) -> int:
    return WARMUP_FACTOR * mixing_warmup(dims, DEFAULT_EPSILON)


def default_block_constant(dims: LatticeDims) -> float:
    return 10.0 if dims.sites <= 100 else math.sqrt(dims.sites)


def block_size(n: int, c: float) -> int:
    """floor(c * n^(1/3)), clipped to [1, n]."""
    target = c**3 * n
    b = int(c * n ** (1 / 3))
    while (b + 1) ** 3 <= target:
        b += 1
    while b > 0 and b**3 > target:
        b -= 1
    return max(1, min(b, n))


class BlockVarianceAccumulator:
    """Overlapping-block variance estimator fed in chunks.

    Keeps the last b - 1 profits so block sums can straddle chunks. Sums are
    held as Python integers and the estimate is formed in exact arithmetic.
    """

    def __init__(self, b: int) -> None:
        if b < 1:
            raise DomainError(f"block size {b} < 1")
        self.b = b
        self.n = 0
        self.total = 0
        self._blocks = 0
        self._block_sum = 0
        self._block_squares = 0
        self._tail = np.zeros(0, dtype=np.int64)

    def update(self, profits: np.ndarray) -> None:
        chunk = np.asarray(profits, dtype=np.int64).ravel()
        self.n += chunk.size
        self.total += int(chunk.sum())
        window = np.concatenate([self._tail, chunk])
        if window.size >= self.b:
            cumulative = np.concatenate([[0], np.cumsum(window)])
            sums = cumulative[self.b :] - cumulative[: -self.b]
            self._blocks += sums.size
            self._block_sum += int(sums.sum())
            self._block_squares += int(np.dot(sums, sums))
        self._tail = window[-(self.b - 1) :] if self.b > 1 else window[:0]

    @property
    def mean(self) -> float:
        return self.total / self.n if self.n else 0.0

    def variance(self) -> float:
        """(b / (n-b+1)) * sum_i (s_i/b - mean)^2 over all n-b+1 blocks.

        Raises:
            DomainError: If fewer than b profits were seen.
        """
        if self.n < self.b:
            raise DomainError(f"block size {self.b} exceeds the {self.n} observations")
        b = self.b
        mean = Fraction(self.total, self.n)
        squares = (
            Fraction(self._block_squares, b * b)
            - 2 * mean * Fraction(self._block_sum, b)
            + self._blocks * mean * mean
        )
        return float(Fraction(b, self._blocks) * squares)


def block_variance(profits: np.ndarray | Iterable[np.ndarray], b: int) -> float:
    """Block estimate of the CLT variance of a +-1 profit stream.

    Args:
        profits: One array of profits, or an iterable of arrays (or scalars) read in order.
        b: Block size, at most the number of profits.
    """
    accumulator = BlockVarianceAccumulator(b)
    chunks = [profits] if isinstance(profits, np.ndarray) else profits
    for chunk in chunks:
        accumulator.update(chunk)
    return accumulator.variance()


@nb.njit(cache=True)
def _play(state, p_a, p_b, r, period, turn0, rows, cols, coins, profits):
    """Play one batch in place; returns how many turns used game A's coins."""
    M, N = state.shape
    a_turns = 0
    for k in range(rows.shape[0]):
        i = rows[k]
        j = cols[k]
        m = state[(i + 1) % M, j] + state[(i - 1) % M, j] + state[i, (j + 1) % N] + state[i, (j - 1) % N]
        if (turn0 + k) % period < r:
            prob = p_a[m]
            a_turns += 1
        else:
            prob = p_b[m]
        if coins[k] <= prob:
            state[i, j] = 1
            profits[k] = 1
        else:
            state[i, j] = 0
            profits[k] = -1
    return a_turns


def _schedule(spec: GameSpec, p: ParamVector) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Coins for A turns, coins for B turns, A turns per period, period length."""
    if spec.kind is GameKind.MIXTURE:
        return FAIR.array, mixture_params(p, spec.gamma).array, 0, 1
    if spec.kind is GameKind.PATTERN:
        return FAIR.array, p.array, spec.r, spec.r + spec.s
    return FAIR.array, p.array, 0, 1


def _chunks(total: int, size: int) -> Iterator[int]:
    done = 0
    while done < total:
        count = min(size, total - done)
        yield count
        done += count


def _initial_array(dims: LatticeDims, initial: LatticeState | None) -> np.ndarray:
    if initial is None:
        return np.zeros((dims.M, dims.N), dtype=np.int64)
    if initial.dims != dims:
        raise DomainError(f"initial state is {initial.dims.token}, lattice is {dims.token}")
    return initial.to_array().astype(np.int64)


def step(x: LatticeState, p_effective: ParamVector, streams: RngStreams) -> tuple[LatticeState, int]:
    """One turn: pick a site, toss its coin, record the result there.

    Returns:
        The new state and the profit, +1 or -1.
    """
    if streams.dims != x.dims:
        raise DomainError(f"streams drawn for {streams.dims.token}, state is {x.dims.token}")
    rows, cols = streams.sites(1)
    u = float(streams.uniforms(1)[0])
    i, j = int(rows[0]) + 1, int(cols[0]) + 1
    k = site_index(x.dims, i, j)
    if u <= p_effective[neighbor_count(x, i, j)]:
        return LatticeState(bits=x.bits | (1 << k), dims=x.dims), 1
    return LatticeState(bits=x.bits & ~(1 << k), dims=x.dims), -1


def simulate_game(
    dims: LatticeDims,
    spec: GameSpec,
    p: ParamVector,
    cfg: SimConfig,
    config: EngineConfig | None = None,
) -> SimResult:
    """Play *cfg.n* recorded turns after a warm-up and estimate mean and variance.

    Args:
        dims: Lattice size; any size works.
        spec: Game B, a mixture or a pattern.
        p: Coins of game B.
        cfg: Turn counts, block constant, seed and start state.
        config: Batch size for the random draws.

    Returns:
        SimResult, bit-identical for identical arguments.

    Raises:
        MeanUndefined: If game B is asked to run with p0 = 0 and p4 = 1.
    """
    config = config or EngineConfig()
    if spec.kind is GameKind.B and classify_regime(p, dims, strict=False) is RegimeTag.MEAN_UNDEFINED:
        logger.error("Refusing to simulate game B with p0=0, p4=1")
        raise MeanUndefined("p0 = 0 and p4 = 1; the long-run mean depends on the start")
    warmup = default_warmup(dims) if cfg.warmup is None else cfg.warmup
    c = cfg.block_constant or default_block_constant(dims)
    b = block_size(cfg.n, c)
    streams = RngStreams(cfg.seed, dims)
    state = _initial_array(dims, cfg.initial_state)
    p_a, p_b, r, period = _schedule(spec, p)
    buffer = np.empty(config.chunk_size, dtype=np.int64)

    turn = 0
    for count in _chunks(warmup, config.chunk_size):
        rows, cols = streams.sites(count)
        _play(state, p_a, p_b, r, period, turn, rows, cols, streams.uniforms(count), buffer[:count])
        turn += count

    accumulator = BlockVarianceAccumulator(b)
    trace: list[tuple[int, int]] = []
    a_turns = 0
    for count in _chunks(cfg.n, config.chunk_size):
        rows, cols = streams.sites(count)
        profits = buffer[:count]
        a_turns += _play(state, p_a, p_b, r, period, turn, rows, cols, streams.uniforms(count), profits)
        if cfg.trace_stride:
            played = accumulator.n
            path = accumulator.total + np.cumsum(profits)
            marks = np.arange(count)[(played + np.arange(1, count + 1)) % cfg.trace_stride == 0]
            trace.extend((played + int(k) + 1, int(path[k])) for k in marks)
        accumulator.update(profits)
        turn += count

    var_hat = accumulator.variance()
    result = SimResult(
        dims=dims,
        game=spec,
        params=p,
        n=cfg.n,
        warmup=warmup,
        block_size=b,
        block_constant=c,
        seed=cfg.seed,
        mean_hat=accumulator.mean,
        var_hat=var_hat,
        std_error=math.sqrt(var_hat / cfg.n),
        game_a_turns=a_turns,
        final_state=LatticeState.from_array(state),
        trace=trace,
    )
    logger.info(
        "Simulated {} {} for {} turns: mean {:.6g} +- {:.2g}",
        dims.token,
        spec.token,
        cfg.n,
        result.mean_hat,
        result.std_error,
    )
    return result


def parallel_map(func: Callable, items: Sequence, workers: int) -> list:
    """Ordered map over *items*, in a process pool when *workers* > 1."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items, chunksize=chunksize))


def simulate_many(
    dims: LatticeDims,
    spec: GameSpec,
    p: ParamVector,
    cfgs: Sequence[SimConfig],
    workers: int = 1,
    config: EngineConfig | None = None,
) -> list[SimResult]:
    """Independent runs, one per SimConfig, returned in input order."""
    return parallel_map(partial(simulate_game, dims, spec, p, config=config), list(cfgs), workers)


def coupled_paths(
    dims: LatticeDims,
    p: ParamVector,
    p_prime: ParamVector,
    n: int,
    seed: int,
    *,
    initial_state: LatticeState | None = None,
    config: EngineConfig | None = None,
) -> CouplingResult:
    """Run game B at p and at p' on the same (I, J, U) draws from the same start.

    When p is monotone and p <= p' coordinatewise, S_k <= S'_k for every k.
    """
    if n < 1:
        raise DomainError(f"n={n} < 1")
    config = config or EngineConfig()
    if not (p.is_monotone and p.dominated_by(p_prime)):
        logger.debug("Coupling outside the monotone ordered case; dominance is not guaranteed")
    streams = RngStreams(seed, dims)
    state = _initial_array(dims, initial_state)
    state_prime = state.copy()
    path = np.empty(n, dtype=np.int64)
    path_prime = np.empty(n, dtype=np.int64)
    profits = np.empty(config.chunk_size, dtype=np.int64)
    profits_prime = np.empty(config.chunk_size, dtype=np.int64)
    done = total = total_prime = 0
    for count in _chunks(n, config.chunk_size):
        rows, cols = streams.sites(count)
        coins = streams.uniforms(count)
        _play(state, FAIR.array, p.array, 0, 1, 0, rows, cols, coins, profits[:count])
        _play(state_prime, FAIR.array, p_prime.array, 0, 1, 0, rows, cols, coins, profits_prime[:count])
        path[done : done + count] = total + np.cumsum(profits[:count])
        path_prime[done : done + count] = total_prime + np.cumsum(profits_prime[:count])
        total, total_prime = int(path[done + count - 1]), int(path_prime[done + count - 1])
        done += count
    return CouplingResult(path=path, path_prime=path_prime, dominance=bool(np.all(path <= path_prime)))
