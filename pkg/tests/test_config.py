"""Tests for parrondo.config."""

import os
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from pydantic import ValidationError

from parrondo.config import DEFAULT_EXACT_CAP, EngineConfig, RunConfig, load_config
from parrondo.models import GameSpec, LatticeDims, ParamVector


class TestLoadConfig(unittest.TestCase):
    """Test the YAML -> env -> override layering."""

    def setUp(self) -> None:
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "parrondo.yaml"
        patcher = mock.patch.dict(os.environ, {}, clear=False)
        patcher.start()
        self.addCleanup(patcher.stop)
        self.addCleanup(self.tmp.cleanup)
        for key in ("PARRONDO_WORKERS", "PARRONDO_EXACT_CAP"):
            os.environ.pop(key, None)

    def test_defaults_without_file(self) -> None:
        config = load_config(Path(self.tmp.name) / "missing.yaml")
        self.assertEqual(config.exact_cap, DEFAULT_EXACT_CAP)
        self.assertEqual(config.enumeration_limit, 25)
        self.assertGreaterEqual(config.workers, 1)

    def test_yaml_values(self) -> None:
        self.path.write_text("exact_cap: 16\nworkers: 3\nsolver_tol: 1.0e-10\n")
        config = load_config(self.path)
        self.assertEqual(config.exact_cap, 16)
        self.assertEqual(config.workers, 3)
        self.assertEqual(config.solver_tol, 1e-10)

    def test_env_beats_yaml(self) -> None:
        self.path.write_text("workers: 3\nexact_cap: 16\n")
        os.environ["PARRONDO_WORKERS"] = "5"
        os.environ["PARRONDO_EXACT_CAP"] = "24"
        config = load_config(self.path)
        self.assertEqual(config.workers, 5)
        self.assertEqual(config.exact_cap, 24)

    def test_override_beats_env(self) -> None:
        os.environ["PARRONDO_WORKERS"] = "5"
        config = load_config(self.path, workers=2, exact_cap=None)
        self.assertEqual(config.workers, 2)
        self.assertEqual(config.exact_cap, DEFAULT_EXACT_CAP)

    def test_non_mapping_yaml_ignored(self) -> None:
        self.path.write_text("- just\n- a list\n")
        self.assertEqual(load_config(self.path).exact_cap, DEFAULT_EXACT_CAP)

    def test_cap_above_limit(self) -> None:
        with self.assertRaises(ValidationError):
            load_config(self.path, exact_cap=26)


class TestRunConfig(unittest.TestCase):
    """Test the argv reconstruction used by replay."""

    def test_token(self) -> None:
        self.assertEqual(RunConfig.token(LatticeDims(M=3, N=4)), "3x4")
        self.assertEqual(RunConfig.token(GameSpec.pattern(1, 2)), "pat:1,2")
        self.assertEqual(RunConfig.token(Path("out/a.json")), "out/a.json")
        self.assertEqual(RunConfig.token((LatticeDims(M=3, N=3), LatticeDims(M=4, N=4))), ["3x3", "4x4"])
        self.assertEqual(
            ParamVector.parse(RunConfig.token(ParamVector.of(0.05, 0.15, 0.5, 0.75, 0.9))),
            ParamVector.of(0.05, 0.15, 0.5, 0.75, 0.9),
        )

    def test_token_rejects_unknown(self) -> None:
        with self.assertRaises(TypeError):
            RunConfig.token(object())

    def test_to_argv(self) -> None:
        run = RunConfig(
            command="exact",
            options={
                "dims": "3x3",
                "game": "B",
                "transpose": None,
                "variance": False,
                "cap": 20,
                "fix": ["p0=0.1", "p4=0.9"],
            },
        )
        self.assertEqual(
            run.to_argv(),
            ["--dims", "3x3", "--game", "B", "--no-variance", "--cap", "20", "--fix", "p0=0.1", "--fix", "p4=0.9"],
        )

    def test_true_flag(self) -> None:
        self.assertEqual(RunConfig(command="orbits", options={"transpose": True}).to_argv(), ["--transpose"])


class TestEngineConfig(unittest.TestCase):
    def test_copy_with_cap(self) -> None:
        config = EngineConfig(workers=1)
        self.assertEqual(config.model_copy(update={"exact_cap": 25}).exact_cap, 25)


if __name__ == "__main__":
    unittest.main()
