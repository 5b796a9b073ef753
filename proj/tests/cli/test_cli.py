"""End-to-end checks of the foxh command-line tool."""

import csv
import json
import math
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

FOXH = os.environ.get("FOXH_BIN", "foxh")
ROOT = Path(__file__).resolve().parents[2]
CONFIGS = ROOT / "configs"
DATA = ROOT / "tests" / "data"


def run(*args, cwd=None, env=None):
    return subprocess.run([FOXH, *map(str, args)], capture_output=True, text=True, cwd=cwd, env=env)


def small_config(tmp, name, *, hurst=0.5, spec=None, decomposition=None, n_steps=64, n_paths=400, seed=42):
    doc = {
        "schema_version": "1.0",
        "process": {
            "hurst": hurst,
            "spec": spec or {"upper": [], "lower": []},
            "decomposition": decomposition or [],
        },
        "grid": {"t_max": 1.0, "n_steps": n_steps},
        "ensemble": {"n_paths": n_paths, "seed": seed},
    }
    path = Path(tmp) / name
    path.write_text(json.dumps(doc))
    return path


GGBM_SPEC = {"upper": [[0.25, 0.75]], "lower": [[0.0, 1.0]]}
GGBM_DECOMP = [{"type": "mwright", "beta": 0.75}]


class Validate(unittest.TestCase):
    def test_shipped_ggbm(self):
        res = run("validate", "--config", CONFIGS / "ggbm.json")
        self.assertEqual(res.returncode, 0, res.stderr)
        report = json.loads(res.stdout)
        self.assertAlmostEqual(report["derived_constants"]["a_star"], 0.25, places=14)
        self.assertAlmostEqual(report["derived_constants"]["K"], 1.0, places=14)
        self.assertTrue(report["moment_match"]["passed"])

    def test_all_shipped_configs_pass_and_are_berman_finite(self):
        for cfg in sorted(CONFIGS.glob("*.json")):
            with self.subTest(cfg=cfg.name):
                res = run("validate", "--config", cfg)
                self.assertEqual(res.returncode, 0, res.stderr)
                self.assertTrue(json.loads(res.stdout)["berman"]["finite"])

    def test_negative_weight(self):
        res = run("validate", "--config", DATA / "bad_weight.json")
        self.assertEqual(res.returncode, 1)
        self.assertEqual(json.loads(res.stderr)["error"], "NonPositiveWeight")

    def test_moment_mismatch(self):
        res = run("validate", "--config", DATA / "mismatch.json")
        self.assertEqual(res.returncode, 1)
        err = json.loads(res.stderr)
        self.assertEqual(err["error"], "MomentMismatch")
        self.assertEqual(err["first_failing_order"], 1)

    def test_format_errors(self):
        for name in ("malformed.json", "future_schema.json"):
            with self.subTest(name=name):
                res = run("validate", "--config", DATA / name)
                self.assertEqual(res.returncode, 2)
                self.assertEqual(json.loads(res.stderr)["error"], "SchemaError")

    def test_usage(self):
        self.assertEqual(run().returncode, 2)
        self.assertEqual(run("validate").returncode, 2)
        self.assertEqual(run("eval", "nonsense", "--config", "x", "--points", "y").returncode, 2)


class Simulate(unittest.TestCase):
    def test_byte_identical_reruns(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = small_config(tmp, "bm.json", seed=42)
            a = run("simulate", "--config", cfg, "--out", Path(tmp) / "a", "--threads", 1)
            b = run("simulate", "--config", cfg, "--out", Path(tmp) / "b", "--threads", 2)
            self.assertEqual(a.returncode, 0, a.stderr)
            self.assertEqual(b.returncode, 0, b.stderr)
            for name in ("trajectories.csv", "trajectories.json"):
                self.assertEqual((Path(tmp) / "a" / name).read_bytes(), (Path(tmp) / "b" / name).read_bytes())
            c = run("simulate", "--config", cfg, "--out", Path(tmp) / "c", "--seed", 43)
            self.assertEqual(c.returncode, 0, c.stderr)
            self.assertNotEqual((Path(tmp) / "a" / "trajectories.csv").read_bytes(),
                                (Path(tmp) / "c" / "trajectories.csv").read_bytes())

    def test_layout_and_sidecar(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = small_config(tmp, "g.json", hurst=0.375, spec=GGBM_SPEC, decomposition=GGBM_DECOMP, n_steps=16,
                               n_paths=5, seed=9)
            res = run("simulate", "--config", cfg, "--out", tmp)
            self.assertEqual(res.returncode, 0, res.stderr)
            raw = (Path(tmp) / "trajectories.csv").read_bytes()
            self.assertNotIn(b"\r", raw)
            with open(Path(tmp) / "trajectories.csv", newline="") as fh:
                rows = list(csv.reader(fh))
            self.assertEqual(rows[0], ["t"] + [f"path_{i}" for i in range(5)])
            self.assertEqual(len(rows), 1 + 17)
            self.assertTrue(all(float(v) == 0.0 for v in rows[1][1:]))
            side = json.loads((Path(tmp) / "trajectories.json").read_text())
            for key in ("hurst", "spec", "decomposition", "seed", "generator_tag", "schema_version"):
                self.assertIn(key, side)
            self.assertEqual(side["seed"], 9)
            self.assertEqual(side["hurst"], 0.375)

    def test_ggbm_summary_within_five_se(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = small_config(tmp, "g.json", hurst=0.375, spec=GGBM_SPEC, decomposition=GGBM_DECOMP, n_steps=4,
                               n_paths=20000)
            res = run("simulate", "--config", cfg, "--out", tmp)
            self.assertEqual(res.returncode, 0, res.stderr)
            order2 = json.loads(res.stdout)["summary"][0]
            self.assertEqual(order2["order"], 2)
            self.assertLess(abs(order2["z_score"]), 5.0)

    def test_zero_steps(self):
        with tempfile.TemporaryDirectory() as tmp:
            res = run("simulate", "--config", DATA / "zero_steps.json", "--out", tmp)
            self.assertEqual(res.returncode, 2)

    def test_threads_env(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = small_config(tmp, "bm.json", n_paths=10)
            env = dict(os.environ, FOXH_THREADS="2")
            self.assertEqual(run("simulate", "--config", cfg, "--out", tmp, env=env).returncode, 0)
            env["FOXH_THREADS"] = "many"
            self.assertEqual(run("simulate", "--config", cfg, "--out", tmp, env=env).returncode, 2)


class Eval(unittest.TestCase):
    def eval_rows(self, what, config, text):
        with tempfile.TemporaryDirectory() as tmp:
            points = Path(tmp) / "points.csv"
            points.write_text(text)
            res = run("eval", what, "--config", config, "--points", points)
            return res, list(csv.reader(res.stdout.splitlines()))

    def test_chf_at_zero(self):
        res, rows = self.eval_rows("chf", CONFIGS / "ggbm.json", "t,lambda\n0.5,0\n1,0\n3,0\n")
        self.assertEqual(res.returncode, 0, res.stderr)
        self.assertEqual([float(r[-1]) for r in rows[1:]], [1.0, 1.0, 1.0])

    def test_brownian_density(self):
        res, rows = self.eval_rows("density", CONFIGS / "brownian.json", "1,0\n")
        self.assertEqual(res.returncode, 0, res.stderr)
        self.assertAlmostEqual(float(rows[1][-1]), 1.0 / math.sqrt(2.0 * math.pi), places=12)

    def test_moment_ratios(self):
        res, rows = self.eval_rows("moments", CONFIGS / "ggbm.json", "1,2\n2,2\n4,2\n")
        self.assertEqual(res.returncode, 0, res.stderr)
        vals = [float(r[-1]) for r in rows[1:]]
        self.assertAlmostEqual(vals[1] / vals[0], 2.0 ** 0.75, places=12)
        self.assertAlmostEqual(vals[2] / vals[0], 4.0 ** 0.75, places=12)

    def test_covariance(self):
        res, rows = self.eval_rows("covariance", CONFIGS / "brownian.json", "0.7,2\n")
        self.assertEqual(res.returncode, 0, res.stderr)
        self.assertAlmostEqual(float(rows[1][-1]), 0.7, places=14)

    def test_arity_mismatch(self):
        res, _ = self.eval_rows("chf", CONFIGS / "ggbm.json", "1,0\n1,2,3\n")
        self.assertEqual(res.returncode, 2)
        self.assertIn("line 2", json.loads(res.stderr)["message"])
        res, _ = self.eval_rows("moments", CONFIGS / "ggbm.json", "1\n")
        self.assertEqual(res.returncode, 2)


class Analyze(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        tmp = Path(cls.tmp.name)
        bm = small_config(tmp, "bm.json", n_steps=256, n_paths=2000)
        gg = small_config(tmp, "gg.json", hurst=0.375, spec=GGBM_SPEC, decomposition=GGBM_DECOMP, n_steps=16,
                          n_paths=8000)
        for cfg, out in ((bm, "bm"), (gg, "gg")):
            res = run("simulate", "--config", cfg, "--out", tmp / out)
            assert res.returncode == 0, res.stderr
        cls.bm = tmp / "bm" / "trajectories.csv"
        cls.gg = tmp / "gg" / "trajectories.csv"

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_msd_brownian_is_normal(self):
        out = Path(self.tmp.name) / "msd"
        res = run("analyze", "msd", "--input", self.bm, "--out", out, "--plot")
        self.assertEqual(res.returncode, 0, res.stderr)
        report = json.loads(res.stdout)
        self.assertEqual(report["classification"], "normal")
        self.assertTrue((out / "msd.svg").read_text().startswith("<svg"))
        self.assertTrue((out / "msd.csv").exists())

    def test_localtime_mass(self):
        res = run("analyze", "localtime", "--input", self.bm, "--path", 3, "--from", 0.25, "--to", 0.75)
        self.assertEqual(res.returncode, 0, res.stderr)
        report = json.loads(res.stdout)
        self.assertAlmostEqual(report["mass"], report["interval_length"], delta=1e-12)
        self.assertAlmostEqual(report["interval_length"], 0.5, places=15)

    def test_qv(self):
        res = run("analyze", "qv", "--input", self.bm, "--partitions", "16,64,256")
        self.assertEqual(res.returncode, 0, res.stderr)
        rows = json.loads(res.stdout)["rows"]
        for r in rows:
            self.assertLess(abs(r["mean"] - r["expected"]), 5 * r["se"])

    def test_selfsim(self):
        res = run("analyze", "selfsim", "--input", self.gg, "--c", 2)
        self.assertEqual(res.returncode, 0, res.stderr)
        self.assertGreater(json.loads(res.stdout)["p_value"], 0.01)

    def test_schema_violation(self):
        with tempfile.TemporaryDirectory() as tmp:
            bad = Path(tmp) / "t.csv"
            lines = self.bm.read_text().splitlines()
            bad.write_text("\n".join(lines[:10]) + "\n")
            (Path(tmp) / "t.json").write_text(self.bm.with_suffix(".json").read_text())
            res = run("analyze", "msd", "--input", bad)
            self.assertEqual(res.returncode, 2)
            res = run("analyze", "msd", "--input", Path(tmp) / "missing.csv")
            self.assertEqual(res.returncode, 2)


if __name__ == "__main__":
    if len(sys.argv) > 1 and sys.argv[1].startswith("--foxh="):
        FOXH = sys.argv.pop(1).split("=", 1)[1]
    unittest.main()
