"""JSON, CSV and YAML persistence for results and run configurations."""

import csv
import json
from pathlib import Path

import yaml
from loguru import logger

from parrondo.config import RunConfig
from parrondo.models import (
    SCHEMA_VERSION,
    EquilibriumStats,
    OrbitTable,
    ProbeRow,
    ProfileRow,
    RegionGrid,
    SimResult,
    VolumeReport,
)


def run_config_path(output: Path) -> Path:
    """``out.json`` -> ``out.run.yaml``; the run file sits next to its output."""
    return output.with_name(f"{output.stem}.run.yaml")


def write_json(path: Path, record: dict) -> Path:
    """Write *record* as indented UTF-8 JSON with a trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    logger.info("Saved {}", path)
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    """Write a CSV file with a header row and CRLF line endings."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Saved {}", path)
    return path


def _cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def save_stats(path: Path, stats: EquilibriumStats) -> Path:
    return write_json(path, stats.to_record())


def save_sim_result(path: Path, result: SimResult) -> Path:
    return write_json(path, result.to_record())


def save_trace(path: Path, trace: list[tuple[int, int]]) -> Path:
    """Cumulative profit S_n at the sampled turns."""
    return write_csv(path, ["turn", "S_n"], trace)


def save_orbit_table(path: Path, table: OrbitTable) -> Path:
    width = (table.dims.sites + 3) // 4
    rows = (
        (index, f"{int(rep):0{width}x}", int(size))
        for index, (rep, size) in enumerate(zip(table.representative, table.class_size))
    )
    return write_csv(path, ["class_index", "representative_bits_hex", "class_size"], rows)


def save_region_grid(prefix: Path, grid: RegionGrid) -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` (one row per cell) and ``<prefix>.json`` (axes and counts).

    Returns:
        The CSV and JSON paths.
    """
    spec = grid.spec
    csv_path = write_csv(
        prefix.with_name(prefix.name + ".csv"),
        [*spec.axis_names, "mu_B", "mu_C", "class"],
        (
            [*(repr(v) for v in cell.values), _cell(cell.mu_b), _cell(cell.mu_c), cell.region.value]
            for cell in grid.cells
        ),
    )
    json_path = write_json(
        prefix.with_name(prefix.name + ".json"),
        {
            "schema": SCHEMA_VERSION,
            "M": spec.dims.M,
            "N": spec.dims.N,
            "fixed": dict(spec.fixed),
            "axes": [{"name": name, "resolution": resolution} for name, resolution in spec.axes],
            "game_C": spec.game_for_c.token,
            "turns_per_cell": spec.turns_per_cell,
            "seed": spec.seed,
            "counts": grid.counts(),
        },
    )
    return csv_path, json_path


def save_volume_report(path: Path, report: VolumeReport) -> Path:
    return write_json(path, report.to_record())


def save_probe(path: Path, rows: list[ProbeRow]) -> Path:
    return write_csv(
        path,
        ["M", "N", "mode", "mu_B", "se_B", "mu_C", "se_C"],
        (
            [r.dims.M, r.dims.N, r.mode, _cell(r.mu_b), _cell(r.se_b), _cell(r.mu_c), _cell(r.se_c)]
            for r in rows
        ),
    )


def save_profile(path: Path, rows: list[ProfileRow]) -> Path:
    def weights(row: ProfileRow) -> list[str]:
        return [_cell(w) for w in row.weights] if row.weights else [""] * 5

    return write_csv(
        path,
        ["p2", "mu_B", "mu_C", "lambda0", "lambda1", "lambda2", "lambda3", "lambda4"],
        ([repr(r.p2), _cell(r.mu_b), _cell(r.mu_c), *weights(r)] for r in rows),
    )


def save_run_config(path: Path, run: RunConfig) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(run.model_dump(), sort_keys=False, allow_unicode=True), encoding="utf-8")
    logger.debug("Run config saved: {}", path)
    return path


def load_run_config(path: Path) -> RunConfig:
    """Read a run file written by ``save_run_config``.

    Raises:
        ValueError: If the file is not a mapping or fails validation.
    """
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path} does not hold a run configuration")
    return RunConfig.model_validate(raw)
