"""Tests for parrondo.storage."""

import csv
import json
import tempfile
import unittest
from pathlib import Path

from parrondo.config import RunConfig
from parrondo.exact import equilibrium_stats
from parrondo.lattice import enumerate_orbits
from parrondo.models import (
    CrossSectionSpec,
    GameSpec,
    LatticeDims,
    ParamVector,
    ProbeRow,
    ProfileRow,
    RegionCell,
    RegionClass,
    RegionGrid,
    SimResult,
)
from parrondo.storage import (
    load_run_config,
    run_config_path,
    save_orbit_table,
    save_probe,
    save_profile,
    save_region_grid,
    save_run_config,
    save_sim_result,
    save_stats,
    save_trace,
)

D33 = LatticeDims(M=3, N=3)
STANDARD = ParamVector.parse("1/20,3/20,8/13,3/4,9/10")


def read_rows(path: Path) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


class TestRunConfigPath(unittest.TestCase):
    def test_sibling(self) -> None:
        self.assertEqual(run_config_path(Path("out/c44.json")), Path("out/c44.run.yaml"))
        self.assertEqual(run_config_path(Path("section")), Path("section.run.yaml"))


class TestJsonOutputs(unittest.TestCase):
    """Test JSON result files."""

    def test_stats(self) -> None:
        stats = equilibrium_stats(D33, GameSpec.b(), STANDARD)
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_stats(Path(tmpdir) / "nested" / "b33.json", stats)
            record = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(record["schema"], 1)
        self.assertEqual((record["M"], record["N"]), (3, 3))
        self.assertEqual(record["game"], "B")
        self.assertEqual(record["params"], list(STANDARD.p))
        self.assertAlmostEqual(record["mu"], -0.209606, places=6)
        self.assertEqual(record["regime"], "ergodic")
        self.assertEqual(record["num_classes"], stats.num_classes)

    def test_sim_result(self) -> None:
        result = SimResult(
            dims=D33,
            game=GameSpec.pattern(2, 2),
            params=STANDARD,
            n=1000,
            warmup=820,
            block_size=100,
            block_constant=10.0,
            seed=7,
            mean_hat=0.02,
            var_hat=4.1,
            std_error=0.064,
            game_a_turns=500,
        )
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_sim_result(Path(tmpdir) / "sim.json", result)
            text = path.read_text(encoding="utf-8")
        record = json.loads(text)
        self.assertTrue(text.endswith("}\n"))
        self.assertEqual(record["game"], "pat:2,2")
        self.assertEqual((record["l"], record["b"], record["c"]), (820, 100, 10.0))
        self.assertEqual(record["game_a_turns"], 500)


class TestCsvOutputs(unittest.TestCase):
    """Test CSV result files."""

    def test_crlf_and_header(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_trace(Path(tmpdir) / "trace.csv", [(100, -4), (200, 6)])
            raw = path.read_bytes()
            rows = read_rows(path)
        self.assertEqual(raw, b"turn,S_n\r\n100,-4\r\n200,6\r\n")
        self.assertEqual(rows[0], ["turn", "S_n"])

    def test_orbit_table(self) -> None:
        table = enumerate_orbits(D33)
        with tempfile.TemporaryDirectory() as tmpdir:
            rows = read_rows(save_orbit_table(Path(tmpdir) / "orbits.csv", table))
        self.assertEqual(rows[0], ["class_index", "representative_bits_hex", "class_size"])
        self.assertEqual(len(rows), 1 + table.num_classes)
        self.assertEqual(rows[1], ["0", "000", "1"])
        self.assertEqual(rows[-1], [str(table.num_classes - 1), "1ff", "1"])
        self.assertEqual(sum(int(row[2]) for row in rows[1:]), 512)

    def test_region_grid(self) -> None:
        spec = CrossSectionSpec(
            dims=D33,
            fixed={"p0": 0.1, "p2": 0.5, "p4": 0.9},
            axes=(("p1", 2), ("p3", 2)),
        )
        cells = [
            RegionCell(values=(0.0, 0.0), region=RegionClass.UNDEFINED),
            RegionCell(values=(0.0, 1.0), mu_b=-0.1, mu_c=0.2, region=RegionClass.PARRONDO),
            RegionCell(values=(1.0, 0.0), mu_b=0.1, mu_c=0.2, region=RegionClass.NEITHER),
            RegionCell(values=(1.0, 1.0), mu_b=0.1, mu_c=-0.2, region=RegionClass.ANTI_PARRONDO),
        ]
        with tempfile.TemporaryDirectory() as tmpdir:
            csv_path, json_path = save_region_grid(Path(tmpdir) / "section", RegionGrid(spec=spec, cells=cells))
            rows = read_rows(csv_path)
            record = json.loads(json_path.read_text(encoding="utf-8"))
        self.assertEqual(csv_path.name, "section.csv")
        self.assertEqual(rows[0], ["p1", "p3", "mu_B", "mu_C", "class"])
        self.assertEqual(rows[1], ["0.0", "0.0", "", "", "undefined"])
        self.assertEqual(rows[2][-1], "parrondo")
        self.assertEqual(record["game_C"], "mix:0.5")
        self.assertEqual(record["axes"][0], {"name": "p1", "resolution": 2})
        self.assertEqual(sum(record["counts"].values()), 4)
        self.assertEqual(record["counts"]["anti_parrondo"], 1)

    def test_probe_and_profile(self) -> None:
        probe = [ProbeRow(dims=D33, mode="exact", mu_b=-0.2, mu_c=0.01)]
        profile = [
            ProfileRow(p2=0.5, mu_b=-0.1, mu_c=0.0, weights=(0.1, 0.2, 0.4, 0.2, 0.1)),
            ProfileRow(p2=1.0),
        ]
        with tempfile.TemporaryDirectory() as tmpdir:
            probe_rows = read_rows(save_probe(Path(tmpdir) / "probe.csv", probe))
            profile_rows = read_rows(save_profile(Path(tmpdir) / "profile.csv", profile))
        self.assertEqual(probe_rows[1], ["3", "3", "exact", "-0.2", "", "0.01", ""])
        self.assertEqual(len(profile_rows[0]), 8)
        self.assertEqual(profile_rows[1][3:], ["0.1", "0.2", "0.4", "0.2", "0.1"])
        self.assertEqual(profile_rows[2], ["1.0"] + [""] * 7)


class TestRunConfigPersistence(unittest.TestCase):
    """Test run file save/load."""

    def test_save_and_load(self) -> None:
        run = RunConfig(
            command="scan",
            options={"dims": "3x3", "fix": ["p0=0.1", "p4=0.9"], "transpose": None, "variance": False, "cap": 20},
        )
        with tempfile.TemporaryDirectory() as tmpdir:
            path = save_run_config(Path(tmpdir) / "section.run.yaml", run)
            loaded = load_run_config(path)
        self.assertEqual(loaded, run)
        self.assertEqual(loaded.to_argv(), run.to_argv())

    def test_load_not_a_mapping(self) -> None:
        with tempfile.TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "bad.run.yaml"
            path.write_text("- just\n- a list\n", encoding="utf-8")
            with self.assertRaises(ValueError):
                load_run_config(path)


if __name__ == "__main__":
    unittest.main()
