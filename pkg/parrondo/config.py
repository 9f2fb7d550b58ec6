"""Engine configuration loaded from YAML file and/or environment variables."""

from __future__ import annotations

import os
from enum import Enum
from pathlib import Path

import yaml
from pydantic import BaseModel, Field

from parrondo.models import SCHEMA_VERSION

DEFAULT_CONFIG_PATH = Path("parrondo.yaml")
DEFAULT_EXACT_CAP = 20
ENUMERATION_LIMIT = 25


def available_parallelism() -> int:
    """CPUs this process may run on."""
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


class EngineConfig(BaseModel):
    """Numerical limits and tolerances for the exact and simulated paths.

    Values are loaded from a YAML file and can be overridden by
    environment variables or CLI arguments.
    """

    exact_cap: int = Field(
        default=DEFAULT_EXACT_CAP,
        ge=9,
        le=ENUMERATION_LIMIT,
        description="Largest M*N solved exactly; bigger lattices need simulation.",
    )
    enumeration_limit: int = Field(
        default=ENUMERATION_LIMIT,
        ge=9,
        le=ENUMERATION_LIMIT,
        description="Largest M*N whose 2^(MN) states may be enumerated.",
    )
    dense_limit: int = Field(default=256, ge=1, description="Dense LU at or below this many classes.")
    direct_limit: int = Field(
        default=50_000,
        ge=1,
        description="Sparse LU at or below this many classes, preconditioned GMRES above.",
    )
    product_limit: int = Field(
        default=5_000,
        ge=1,
        description="Materialise the A^r B^s product matrix at or below this many classes.",
    )
    solver_tol: float = Field(default=1e-12, gt=0, description="Target residual of iterative solves.")
    warn_tol: float = Field(default=1e-9, gt=0, description="Accept with a warning up to this residual.")
    gmres_restart: int = Field(default=200, ge=10)
    workers: int = Field(default_factory=available_parallelism, ge=1)
    chunk_size: int = Field(default=65_536, ge=1, description="Simulation turns drawn per RNG batch.")


def load_config(config_path: Path | None = None, **overrides) -> EngineConfig:
    """Load configuration from YAML file, env vars, and explicit overrides.

    Args:
        config_path: Path to YAML config file. Falls back to ``parrondo.yaml``
            in the current directory if it exists.
        **overrides: Explicit field values, highest priority. ``None`` values
            are ignored.

    Returns:
        Merged EngineConfig instance.
    """
    values: dict = {}

    # 1. Load from YAML file
    path = config_path or DEFAULT_CONFIG_PATH
    if path.exists():
        with open(path) as f:
            yaml_data = yaml.safe_load(f)
        if isinstance(yaml_data, dict):
            values.update(yaml_data)

    # 2. Override with environment variables
    env_workers = os.environ.get("PARRONDO_WORKERS")
    if env_workers:
        values["workers"] = int(env_workers)

    env_cap = os.environ.get("PARRONDO_EXACT_CAP")
    if env_cap:
        values["exact_cap"] = int(env_cap)

    # 3. Override with explicit arguments
    values.update({key: value for key, value in overrides.items() if value is not None})

    return EngineConfig(**values)


OptionValue = str | int | float | bool | list[str] | None


class RunConfig(BaseModel):
    """A CLI invocation frozen to YAML so ``parrondo replay`` can repeat it."""

    schema_version: int = SCHEMA_VERSION
    command: str
    options: dict[str, OptionValue] = Field(default_factory=dict)

    @staticmethod
    def token(value) -> OptionValue:
        """Reduce a parsed option value to the text form its flag accepts."""
        if value is None or isinstance(value, (bool, int, float, str)):
            return value
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, Path):
            return str(value)
        if isinstance(value, (list, tuple)):
            return [str(RunConfig.token(item)) for item in value]
        token = getattr(value, "token", None)
        if token is None:
            raise TypeError(f"cannot record option value {value!r}")
        return token

    def to_argv(self) -> list[str]:
        """Rebuild the command-line flags, in recorded order.

        Option keys are long flag names without the leading dashes.
        """
        argv: list[str] = []
        for name, value in self.options.items():
            flag = "--" + name
            if value is None:
                continue
            if isinstance(value, bool):
                argv.append(flag if value else "--no-" + name)
            elif isinstance(value, list):
                for item in value:
                    argv.extend([flag, item])
            else:
                argv.extend([flag, str(value)])
        return argv
