"""CLI interface for the Parrondo lattice engine."""

import functools
import json
from fractions import Fraction
from pathlib import Path

import click
import numpy as np
from loguru import logger

from parrondo.config import EngineConfig, RunConfig, load_config
from parrondo.errors import CapacityExceeded, ConvergenceError, DomainError
from parrondo.models import (
    PARAM_NAMES,
    ConditionGame,
    ConditionKind,
    CrossSectionSpec,
    GameSpec,
    LatticeDims,
    ParamVector,
    SimConfig,
    parse_probability,
)

EXIT_DOMAIN = 3
EXIT_CAPACITY = 4
EXIT_CONVERGENCE = 5
LOG_FORMAT = "{time:HH:mm:ss} | {level: <7} | {message}"


class _ParsedType(click.ParamType):
    """Wrap a ``parse`` function; its ValueError becomes a usage error."""

    def parse(self, text: str):
        raise NotImplementedError

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            return self.parse(value)
        except (ValueError, ArithmeticError) as exc:
            self.fail(f"{value!r}: {exc}", param, ctx)


class DimsType(_ParsedType):
    name = "MxN"

    def parse(self, text: str) -> LatticeDims:
        return LatticeDims.parse(text)


class ParamsType(_ParsedType):
    name = "p0,p1,p2,p3,p4"

    def parse(self, text: str) -> ParamVector:
        return ParamVector.parse(text)


class GameType(_ParsedType):
    name = "B|mix:GAMMA|pat:R,S"

    def parse(self, text: str) -> GameSpec:
        return GameSpec.parse(text)


class ProbabilityType(_ParsedType):
    name = "probability"

    def parse(self, text: str) -> float:
        return parse_probability(text)


class CountType(_ParsedType):
    """Positive integer; accepts scientific notation such as ``1e9``."""

    name = "count"

    def __init__(self, minimum: int = 1) -> None:
        self.minimum = minimum

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            value = str(value)
        return super().convert(value, param, ctx)

    def parse(self, text: str) -> int:
        value = Fraction(text.strip())
        if value.denominator != 1:
            raise ValueError("not an integer")
        if value < self.minimum:
            raise ValueError(f"must be at least {self.minimum}")
        return int(value)


DIMS = DimsType()
PARAMS = ParamsType()
GAME = GameType()
PROBABILITY = ProbabilityType()
COUNT = CountType()


def _guarded(func):
    """Turn engine errors into their exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CapacityExceeded as exc:
            click.echo(f"Error: {exc}", err=True)
            raise SystemExit(EXIT_CAPACITY)
        except DomainError as exc:
            click.echo(f"Error: {exc}", err=True)
            raise SystemExit(EXIT_DOMAIN)
        except ConvergenceError as exc:
            click.echo(f"Error: {exc}", err=True)
            raise SystemExit(EXIT_CONVERGENCE)

    return wrapper


def _config(ctx: click.Context, cap: int | None = None) -> EngineConfig:
    config: EngineConfig = ctx.obj
    return config.model_copy(update={"exact_cap": cap}) if cap else config


def _record(ctx: click.Context, output: Path | None) -> None:
    """Write ``<output>.run.yaml`` so ``parrondo replay`` can repeat this command."""
    if output is None:
        return
    from parrondo.storage import run_config_path, save_run_config

    options = {
        param.opts[0].lstrip("-"): RunConfig.token(ctx.params[param.name])
        for param in ctx.command.params
        if isinstance(param, click.Option)
    }
    save_run_config(run_config_path(output), RunConfig(command=ctx.info_name, options=options))


def _echo_json(record: dict) -> None:
    click.echo(json.dumps(record, indent=2, ensure_ascii=False))


def _output_option(help_text: str):
    return click.option(
        "--output",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help=help_text,
    )


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=False),
    default=None,
    help="Path to YAML engine config file.",
)
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    envvar="PARRONDO_WORKERS",
    default=None,
    help="Worker processes for scans, volumes and probes (or set PARRONDO_WORKERS).",
)
@click.option("--verbose", is_flag=True, default=False, help="Log solver and chunk detail.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None, workers: int | None, verbose: bool) -> None:
    """Spatially dependent Parrondo games on an M x N torus."""
    logger.remove()
    logger.add(
        lambda message: click.echo(message, err=True, nl=False),
        level="DEBUG" if verbose else "INFO",
        format=LOG_FORMAT,
    )
    ctx.obj = load_config(config_path=Path(config_path) if config_path else None, workers=workers)


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size, e.g. 3x3.")
@click.option("--game", type=GAME, default="B", show_default=True, help="B, mix:GAMMA or pat:R,S.")
@click.option("--p", "params", type=PARAMS, required=True, help="p0..p4 as decimals or fractions, e.g. 1/20,3/20,8/13,3/4,9/10.")
@click.option(
    "--transpose/--no-transpose",
    default=None,
    help="Lump by transposition too (default: only on square lattices).",
)
@click.option(
    "--cap",
    type=click.IntRange(9, 25),
    default=None,
    help="Largest M*N solved exactly (default from config, 20).",
)
@click.option("--variance/--no-variance", default=True, show_default=True, help="Also solve for sigma^2.")
@_output_option("Write the JSON record here.")
@click.pass_context
@_guarded
def exact(
    ctx: click.Context,
    dims: LatticeDims,
    game: GameSpec,
    params: ParamVector,
    transpose: bool | None,
    cap: int | None,
    variance: bool,
    output: Path | None,
) -> None:
    """Solve the equilibrium mean and variance exactly."""
    from parrondo.exact import equilibrium_stats
    from parrondo.storage import save_stats

    stats = equilibrium_stats(
        dims,
        game,
        params,
        config=_config(ctx, cap),
        use_transpose=transpose,
        with_variance=variance,
    )
    _echo_json(stats.to_record())
    if output:
        save_stats(output, stats)
        _record(ctx, output)


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size, e.g. 100x100.")
@click.option("--game", type=GAME, default="B", show_default=True, help="B, mix:GAMMA or pat:R,S.")
@click.option("--p", "params", type=PARAMS, required=True, help="p0..p4 as decimals or fractions.")
@click.option("--n", type=COUNT, required=True, help="Recorded turns; 1e9 style accepted.")
@click.option("--warmup", type=CountType(minimum=0), default=None, help="Discarded turns (default 10x mixing bound).")
@click.option("--c", "block_constant", type=click.FloatRange(min=0, min_open=True), default=None, help="Block constant c in b = floor(c n^(1/3)).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write a (turn, S_n) CSV here.")
@click.option("--trace-stride", type=COUNT, default=1000, show_default=True, help="Turns between trace rows.")
@_output_option("Write the JSON record here.")
@click.pass_context
@_guarded
def simulate(
    ctx: click.Context,
    dims: LatticeDims,
    game: GameSpec,
    params: ParamVector,
    n: int,
    warmup: int | None,
    block_constant: float | None,
    seed: int,
    trace: Path | None,
    trace_stride: int,
    output: Path | None,
) -> None:
    """Play the game and report mean, block variance and standard error."""
    from parrondo.simulate import simulate_game
    from parrondo.storage import save_sim_result, save_trace

    cfg = SimConfig(
        n=n,
        warmup=warmup,
        block_constant=block_constant,
        seed=seed,
        trace_stride=trace_stride if trace else None,
    )
    result = simulate_game(dims, game, params, cfg, _config(ctx))
    _echo_json(result.to_record())
    if trace:
        save_trace(trace, result.trace)
    if output:
        save_sim_result(output, result)
        _record(ctx, output)


def _parse_fixed(values: tuple[str, ...]) -> dict[str, float]:
    fixed = {}
    for item in values:
        name, sep, value = item.partition("=")
        if not sep or name.strip() not in PARAM_NAMES:
            raise click.BadParameter(f"{item!r}; expected NAME=VALUE with NAME in p0..p4", param_hint="--fix")
        try:
            fixed[name.strip()] = parse_probability(value)
        except (ValueError, ArithmeticError) as exc:
            raise click.BadParameter(f"{item!r}: {exc}", param_hint="--fix")
    return fixed


def _parse_axes(values: tuple[str, ...]) -> tuple[tuple[str, int], ...]:
    axes = []
    for item in values:
        name, sep, resolution = item.partition(":")
        if not sep or name.strip() not in PARAM_NAMES or not resolution.strip().isdigit():
            raise click.BadParameter(f"{item!r}; expected NAME:POINTS, e.g. p1:21", param_hint="--axis")
        axes.append((name.strip(), int(resolution)))
    return tuple(axes)


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size.")
@click.option("--fix", multiple=True, help="Fixed coordinate NAME=VALUE, e.g. p0=0.1; repeatable.")
@click.option("--axis", multiple=True, help="Varying coordinate NAME:POINTS, e.g. p1:21; repeatable.")
@click.option("--game", type=GAME, default="mix:0.5", show_default=True, help="Game C: mix:GAMMA or pat:R,S.")
@click.option("--turns-per-cell", type=COUNT, default=None, help="Simulate cells (needed above the exact cap).")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), required=True, help="Prefix for PREFIX.csv and PREFIX.json.")
@click.pass_context
@_guarded
def scan(
    ctx: click.Context,
    dims: LatticeDims,
    fix: tuple[str, ...],
    axis: tuple[str, ...],
    game: GameSpec,
    turns_per_cell: int | None,
    seed: int,
    output: Path,
) -> None:
    """Classify a grid cross-section into Parrondo / anti-Parrondo cells."""
    from parrondo.regions import scan_cross_section
    from parrondo.storage import save_region_grid

    try:
        spec = CrossSectionSpec(
            dims=dims,
            fixed=_parse_fixed(fix),
            axes=_parse_axes(axis),
            game_for_c=game,
            turns_per_cell=turns_per_cell,
            seed=seed,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    config = _config(ctx)
    grid = scan_cross_section(spec, config, config.workers)
    save_region_grid(output, grid)
    _record(ctx, output)
    counts = grid.counts()
    click.echo(f"cells={len(grid.cells)} " + " ".join(f"{name}={count}" for name, count in counts.items()))


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size.")
@click.option("--p0", type=PROBABILITY, required=True)
@click.option("--p4", type=PROBABILITY, required=True)
@click.option("--game", type=GAME, default="mix:0.5", show_default=True, help="Game C: mix:GAMMA or pat:R,S.")
@click.option("--samples", type=COUNT, default=100_000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@_output_option("Write the JSON report here.")
@click.pass_context
@_guarded
def volume(
    ctx: click.Context,
    dims: LatticeDims,
    p0: float,
    p4: float,
    game: GameSpec,
    samples: int,
    seed: int,
    output: Path | None,
) -> None:
    """Estimate Parrondo and anti-Parrondo volumes in the (p1, p3, p2) cube."""
    from parrondo.regions import estimate_region_volume
    from parrondo.storage import save_volume_report

    config = _config(ctx)
    report = estimate_region_volume(dims, p0, p4, game, samples, seed, config=config, workers=config.workers)
    _echo_json(report.to_record())
    if output:
        save_volume_report(output, report)
        _record(ctx, output)


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size, M*N <= 25.")
@click.option("--transpose/--no-transpose", default=False, show_default=True, help="Include transposition (M = N only).")
@click.option("--export", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Write the class table as CSV.")
@click.pass_context
@_guarded
def orbits(ctx: click.Context, dims: LatticeDims, transpose: bool, export: Path | None) -> None:
    """Count symmetry classes of lattice states."""
    from parrondo.lattice import enumerate_orbits
    from parrondo.storage import save_orbit_table

    table = enumerate_orbits(dims, transpose, _config(ctx).enumeration_limit)
    click.echo(
        f"{dims.token} states={dims.num_states} classes={table.num_classes} group_order={table.group_order}"
    )
    if export:
        save_orbit_table(export, table)
        _record(ctx, export)


@main.command()
@click.option("--p", "params", type=PARAMS, default=None, help="Vector to test against both conditions.")
@click.option(
    "--fraction",
    type=click.Choice([kind.value for kind in ConditionKind]),
    default=None,
    help="Also estimate the share of parameter space where this condition holds.",
)
@click.option(
    "--fraction-game",
    type=click.Choice([game.value for game in ConditionGame]),
    default=ConditionGame.B.value,
    show_default=True,
)
@click.option("--samples", type=COUNT, default=1_000_000, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@_guarded
def check(
    params: ParamVector | None,
    fraction: str | None,
    fraction_game: str,
    samples: int,
    seed: int,
) -> None:
    """Evaluate the sufficient ergodicity conditions."""
    from parrondo.regions import check_annihilating, check_basic_estimate, estimate_condition_fraction

    if params is None and fraction is None:
        raise click.UsageError("Give --p, --fraction or both.")
    if params is not None:
        basic = str(check_basic_estimate(params)).lower()
        annihilating = str(check_annihilating(params)).lower()
        click.echo(f"basic={basic} annihilating={annihilating}")
    if fraction is not None:
        estimate = estimate_condition_fraction(
            ConditionKind(fraction),
            ConditionGame(fraction_game),
            samples,
            seed,
        )
        click.echo(
            f"fraction[{estimate.condition.value},{estimate.game.value}]="
            f"{estimate.fraction:.6f} se={estimate.std_error:.6f} samples={samples}"
        )


@main.command()
@click.option("--p", "params", type=PARAMS, required=True, help="p0..p4 of game B.")
@click.option("--game", type=GAME, default="mix:0.5", show_default=True, help="Game C: mix:GAMMA or pat:R,S.")
@click.option("--dims", "dims_list", type=DIMS, multiple=True, required=True, help="Lattice size; repeatable.")
@click.option("--mode", type=click.Choice(["exact", "simulate"]), default="exact", show_default=True)
@click.option("--n", type=COUNT, default=None, help="Turns per simulated entry.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@_output_option("Write the table as CSV.")
@click.pass_context
@_guarded
def probe(
    ctx: click.Context,
    params: ParamVector,
    game: GameSpec,
    dims_list: tuple[LatticeDims, ...],
    mode: str,
    n: int | None,
    seed: int,
    output: Path | None,
) -> None:
    """Tabulate mu_B and mu_C against lattice size."""
    from parrondo.regions import convergence_probe
    from parrondo.storage import save_probe

    if mode == "simulate" and n is None:
        raise click.UsageError("--mode simulate needs --n.")
    config = _config(ctx)
    rows = convergence_probe(params, game, list(dims_list), mode, n=n, seed=seed, config=config, workers=config.workers)
    for row in rows:
        parts = [f"{row.dims.token}", f"mu_B={_format(row.mu_b)}", f"mu_C={_format(row.mu_c)}"]
        if row.se_b is not None:
            parts += [f"se_B={row.se_b:.2g}", f"se_C={row.se_c:.2g}"]
        click.echo(" ".join(parts))
    if output:
        save_probe(output, rows)
        _record(ctx, output)


def _format(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.6g}"


@main.command()
@click.option("--dims", type=DIMS, required=True, help="Lattice size.")
@click.option("--p", "params", type=PARAMS, required=True, help="Base vector; its p2 is swept.")
@click.option("--points", type=CountType(minimum=2), default=101, show_default=True, help="Grid points on [0, 1].")
@_output_option("Write the profile as CSV.")
@click.pass_context
@_guarded
def profile(ctx: click.Context, dims: LatticeDims, params: ParamVector, points: int, output: Path | None) -> None:
    """Sweep p2 and report mu_B, the half-mixture mean and neighbour weights."""
    from parrondo.regions import p2_profile
    from parrondo.storage import save_profile

    rows = p2_profile(dims, params, np.linspace(0.0, 1.0, points).tolist(), config=_config(ctx))
    for row in rows:
        click.echo(f"p2={row.p2:.6g} mu_B={_format(row.mu_b)} mu_C={_format(row.mu_c)}")
    if output:
        save_profile(output, rows)
        _record(ctx, output)


@main.command()
@click.argument("run_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def replay(ctx: click.Context, run_file: Path) -> None:
    """Re-run the command recorded in a ``.run.yaml`` file."""
    from parrondo.storage import load_run_config

    try:
        run = load_run_config(run_file)
    except ValueError as exc:
        raise click.UsageError(f"{run_file}: {exc}")
    command = main.get_command(ctx, run.command)
    if command is None or run.command == "replay":
        raise click.UsageError(f"{run_file}: cannot replay command {run.command!r}")
    logger.info("Replaying {} {}", run.command, " ".join(run.to_argv()))
    with command.make_context(run.command, run.to_argv(), parent=ctx) as sub_ctx:
        command.invoke(sub_ctx)
