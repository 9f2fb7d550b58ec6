"""Parrondo and anti-Parrondo regions: grid scans, volumes and ergodicity conditions."""

from __future__ import annotations

import itertools
import math
from functools import partial

import numpy as np
from loguru import logger

from parrondo.config import EngineConfig
from parrondo.errors import CapacityExceeded, DomainError, RegimeNotErgodic, UnsupportedBoundary
from parrondo.exact import lambda_weights, mean_profit
from parrondo.models import (
    PARAM_NAMES,
    ConditionFraction,
    ConditionGame,
    ConditionKind,
    CrossSectionSpec,
    GameSpec,
    LatticeDims,
    ParamVector,
    ProbeRow,
    ProfileRow,
    RegionCell,
    RegionClass,
    RegionGrid,
    SimConfig,
    VolumeReport,
)
from parrondo.simulate import parallel_map, simulate_game

ZERO_TOLERANCE = 1e-12
SAMPLE_CHUNK = 1 << 20
GAME_B = GameSpec.b()


def classify_cell(mu_b: float | None, mu_c: float | None, tol: float = ZERO_TOLERANCE) -> RegionClass:
    """Parrondo when mu_B <= 0 < mu_C, anti-Parrondo when mu_B >= 0 > mu_C.

    Values within *tol* of zero count as zero.
    """
    if mu_b is None or mu_c is None:
        return RegionClass.UNDEFINED
    if mu_b <= tol and mu_c > tol:
        return RegionClass.PARRONDO
    if mu_b >= -tol and mu_c < -tol:
        return RegionClass.ANTI_PARRONDO
    return RegionClass.NEITHER


def _exact_mean(dims: LatticeDims, game: GameSpec, p: ParamVector, config: EngineConfig) -> float | None:
    try:
        return mean_profit(dims, game, p, config=config)
    except (RegimeNotErgodic, UnsupportedBoundary) as exc:
        logger.debug("No mean for {} at {}: {}", game.token, p.token, exc)
        return None


def exact_pair(
    dims: LatticeDims,
    game_for_c: GameSpec,
    config: EngineConfig,
    p: ParamVector,
) -> tuple[float | None, float | None]:
    """(mu_B, mu_C) at p, None where the mean is undefined."""
    return _exact_mean(dims, GAME_B, p, config), _exact_mean(dims, game_for_c, p, config)


def _cell_seed(seed: int, index: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, index, stream]).generate_state(1, dtype=np.uint64)[0])


def simulated_pair(
    dims: LatticeDims,
    game_for_c: GameSpec,
    turns: int,
    seed: int,
    config: EngineConfig,
    indexed: tuple[int, ParamVector],
) -> tuple[float | None, float | None]:
    """(mu_B, mu_C) estimated by simulation; seeds derive from the cell index."""
    index, p = indexed
    means: list[float | None] = []
    for stream, game in enumerate((GAME_B, game_for_c)):
        cfg = SimConfig(n=turns, seed=_cell_seed(seed, index, stream))
        try:
            means.append(simulate_game(dims, game, p, cfg, config).mean_hat)
        except RegimeNotErgodic:
            means.append(None)
    return means[0], means[1]


def grid_points(spec: CrossSectionSpec) -> list[tuple[tuple[float, ...], ParamVector]]:
    """Every cell of the grid as (axis coordinates, full parameter vector), C order."""
    axes = [np.linspace(0.0, 1.0, resolution) for _, resolution in spec.axes]
    points = []
    for coords in itertools.product(*axes):
        values = dict(spec.fixed)
        values.update(zip(spec.axis_names, (float(c) for c in coords)))
        points.append((tuple(float(c) for c in coords), ParamVector.of(*(values[n] for n in PARAM_NAMES))))
    return points


def scan_cross_section(
    spec: CrossSectionSpec,
    config: EngineConfig | None = None,
    workers: int | None = None,
) -> RegionGrid:
    """Evaluate mu_B and mu_C on every grid cell and classify it.

    Exact when M*N is within the exact cap; above it only with an explicit
    ``turns_per_cell`` budget, by simulation.

    Raises:
        CapacityExceeded: If the lattice is too large and no turn budget is set.
    """
    config = config or EngineConfig()
    workers = workers or config.workers
    points = grid_points(spec)
    if spec.dims.sites <= config.exact_cap:
        evaluate = partial(exact_pair, spec.dims, spec.game_for_c, config)
        pairs = parallel_map(evaluate, [p for _, p in points], workers)
    elif spec.turns_per_cell is not None:
        logger.info("Simulating {} cells of {} turns each", len(points), spec.turns_per_cell)
        evaluate = partial(simulated_pair, spec.dims, spec.game_for_c, spec.turns_per_cell, spec.seed, config)
        pairs = parallel_map(evaluate, list(enumerate(p for _, p in points)), workers)
    else:
        raise CapacityExceeded(
            f"{spec.dims.token} exceeds the exact cap {config.exact_cap}; "
            "pass turns_per_cell for a simulation-backed scan"
        )
    cells = [
        RegionCell(values=coords, mu_b=mu_b, mu_c=mu_c, region=classify_cell(mu_b, mu_c))
        for (coords, _), (mu_b, mu_c) in zip(points, pairs)
    ]
    grid = RegionGrid(spec=spec, cells=cells)
    logger.info("Scanned {} cells on {}: {}", len(cells), spec.dims.token, grid.counts())
    return grid


def _binomial_se(fraction: float, samples: int) -> float:
    return math.sqrt(fraction * (1.0 - fraction) / samples)


def estimate_region_volume(
    dims: LatticeDims,
    p0: float,
    p4: float,
    game_for_c: GameSpec,
    samples: int,
    seed: int,
    *,
    config: EngineConfig | None = None,
    workers: int | None = None,
) -> VolumeReport:
    """Share of the (p1, p3, p2) cube in each region, by uniform sampling.

    Raises:
        CapacityExceeded: If M*N is above the exact cap.
        DomainError: If *samples* < 1 or p0, p4 are not probabilities.
    """
    config = config or EngineConfig()
    workers = workers or config.workers
    if dims.sites > config.exact_cap:
        raise CapacityExceeded(f"{dims.token} exceeds the exact cap {config.exact_cap}")
    if samples < 1:
        raise DomainError(f"samples={samples} < 1")
    if not (0.0 <= p0 <= 1.0 and 0.0 <= p4 <= 1.0):
        raise DomainError(f"p0={p0}, p4={p4} must be probabilities")
    rng = np.random.Generator(np.random.Philox(seed))
    cube = rng.random((samples, 3))
    points = [ParamVector.of(p0, p1, p2, p3, p4) for p1, p3, p2 in cube.tolist()]
    pairs = parallel_map(partial(exact_pair, dims, game_for_c, config), points, workers)
    regions = [classify_cell(mu_b, mu_c) for mu_b, mu_c in pairs]
    parrondo = sum(region is RegionClass.PARRONDO for region in regions) / samples
    anti = sum(region is RegionClass.ANTI_PARRONDO for region in regions) / samples
    report = VolumeReport(
        dims=dims,
        p0=p0,
        p4=p4,
        game=game_for_c,
        samples=samples,
        seed=seed,
        vol_parrondo=parrondo,
        se_parrondo=_binomial_se(parrondo, samples),
        vol_anti=anti,
        se_anti=_binomial_se(anti, samples),
        undefined=sum(region is RegionClass.UNDEFINED for region in regions),
    )
    logger.info("Volumes on {} at p0={}, p4={}: parrondo {:.6f}, anti {:.6f}", dims.token, p0, p4, parrondo, anti)
    return report


# Ergodicity conditions act on arrays of shape (..., 5) so fractions vectorise.


def basic_estimate_holds(p: np.ndarray) -> np.ndarray:
    """max_m |p_{m+1} - p_m| < 1/4."""
    return np.max(np.abs(np.diff(p, axis=-1)), axis=-1) < 0.25


def annihilating_holds(p: np.ndarray) -> np.ndarray:
    p0, p1, p2, p3, p4 = np.moveaxis(np.asarray(p, dtype=np.float64), -1, 0)
    lhs = (
        np.abs(p0 + 4 * p1 + 6 * p2 + 4 * p3 + p4 - 8)
        + 4 * np.abs(p0 + 2 * p1 - 2 * p3 - p4)
        + 6 * np.abs(p0 - 2 * p2 + p4)
        + 4 * np.abs(p0 - 2 * p1 + 2 * p3 - p4)
        + np.abs(p0 - 4 * p1 + 6 * p2 - 4 * p3 + p4)
    )
    return lhs < 8


def check_basic_estimate(p: ParamVector) -> bool:
    return bool(basic_estimate_holds(p.array))


def check_annihilating(p: ParamVector) -> bool:
    return bool(annihilating_holds(p.array))


def _condition_mask(condition: ConditionKind, p: np.ndarray) -> np.ndarray:
    if condition is ConditionKind.BASIC:
        return basic_estimate_holds(p)
    if condition is ConditionKind.ANNIHILATING:
        return annihilating_holds(p)
    return basic_estimate_holds(p) | annihilating_holds(p)


def estimate_condition_fraction(
    condition: ConditionKind,
    game: ConditionGame,
    samples: int,
    seed: int,
) -> ConditionFraction:
    """Share of the unit 5-cube where a sufficient ergodicity condition holds.

    For the half mixture the condition is checked at the blended coins
    1/4 + p/2.
    """
    if samples < 1:
        raise DomainError(f"samples={samples} < 1")
    rng = np.random.Generator(np.random.Philox(seed))
    hits = 0
    remaining = samples
    while remaining:
        count = min(SAMPLE_CHUNK, remaining)
        p = rng.random((count, 5))
        if game is ConditionGame.HALF_MIXTURE:
            p = 0.25 + 0.5 * p
        hits += int(_condition_mask(condition, p).sum())
        remaining -= count
    fraction = hits / samples
    return ConditionFraction(
        condition=condition,
        game=game,
        samples=samples,
        seed=seed,
        fraction=fraction,
        std_error=_binomial_se(fraction, samples),
    )


def _probe_simulated(task: tuple[LatticeDims, GameSpec, ParamVector, SimConfig], config: EngineConfig):
    dims, game, p, cfg = task
    result = simulate_game(dims, game, p, cfg, config)
    return result.mean_hat, result.std_error


def convergence_probe(
    p: ParamVector,
    game_for_c: GameSpec,
    dims_list: list[LatticeDims],
    mode: str = "exact",
    *,
    n: int | None = None,
    seed: int = 0,
    config: EngineConfig | None = None,
    workers: int | None = None,
) -> list[ProbeRow]:
    """mu_B and mu_C at each lattice size, to see where they settle.

    Args:
        mode: ``"exact"`` (M*N within the cap) or ``"simulate"`` (needs *n*).

    Raises:
        CapacityExceeded: If an exact size is above the cap.
        DomainError: On an unknown mode or a simulation without *n*.
    """
    config = config or EngineConfig()
    workers = workers or config.workers
    if mode == "exact":
        rows = []
        for dims in dims_list:
            if dims.sites > config.exact_cap:
                raise CapacityExceeded(f"{dims.token} exceeds the exact cap {config.exact_cap}")
            mu_b, mu_c = exact_pair(dims, game_for_c, config, p)
            rows.append(ProbeRow(dims=dims, mode=mode, mu_b=mu_b, mu_c=mu_c))
        return rows
    if mode != "simulate":
        raise DomainError(f"unknown probe mode {mode!r}")
    if n is None:
        raise DomainError("simulated probes need a turn count n")
    tasks = [
        (dims, game, p, SimConfig(n=n, seed=seed))
        for dims in dims_list
        for game in (GAME_B, game_for_c)
    ]
    estimates = parallel_map(partial(_probe_simulated, config=config), tasks, workers)
    return [
        ProbeRow(dims=dims, mode=mode, mu_b=b[0], se_b=b[1], mu_c=c[0], se_c=c[1])
        for dims, b, c in zip(dims_list, estimates[0::2], estimates[1::2])
    ]


def p2_profile(
    dims: LatticeDims,
    p: ParamVector,
    grid: list[float],
    *,
    config: EngineConfig | None = None,
) -> list[ProfileRow]:
    """mu_B, mu of the half mixture and neighbour-count weights as p2 varies."""
    config = config or EngineConfig()
    rows = []
    half = GameSpec.mixture(0.5)
    for p2 in grid:
        point = ParamVector.of(p[0], p[1], p2, p[3], p[4])
        try:
            lam = lambda_weights(dims, point, config=config)
            weights = tuple(float(w) for w in lam)
            mu_b = float(lam @ (2.0 * point.array - 1.0))
        except (RegimeNotErgodic, UnsupportedBoundary):
            weights, mu_b = None, None
        rows.append(ProfileRow(p2=p2, mu_b=mu_b, mu_c=_exact_mean(dims, half, point, config), weights=weights))
    return rows

