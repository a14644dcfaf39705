"""
The ``kmeq`` command line: subcommands, overrides and exit codes.
"""

import json
import logging

import pytest

from kmeq import cases, cli
from kmeq.problems import load_instance
from kmeq.utils.csvio import read_rows, read_trace

GAUSSIAN_ARGS = ["--family", "gaussian", "--m", "40", "--n", "8", "--p", "8"]
GAUSSIAN_ARGS += ["--q", "40"]


class _CliTestCase(cases._KmeqTestCase):
    def tearDown(self):
        package_logger = logging.getLogger("kmeq")
        if cli._handler is not None:
            package_logger.removeHandler(cli._handler)
            cli._handler = None
        package_logger.setLevel(logging.NOTSET)

    def kmeq(self, capsys, *argv):
        code = cli.main([str(arg) for arg in argv])
        (out, err) = capsys.readouterr()
        return (code, out, err)


class GenerateTestCase(_CliTestCase):
    def testGaussian(self, tmp_path, capsys):
        """generate writes a loadable instance with its seed in the provenance"""
        (code, _, _) = self.kmeq(
            capsys, "generate", *GAUSSIAN_ARGS, "--seed", 3, "--out", tmp_path
        )
        self.assertEqual(code, 0)
        instance = load_instance(tmp_path)
        self.assertEqual(instance.shape, (40, 8, 8, 40))
        self.assertEqual(instance.provenance.family, "gaussian")
        self.assertEqual(instance.provenance.seed, 3)

    def testBspline(self, tmp_path, capsys):
        (code, _, _) = self.kmeq(
            capsys,
            "generate",
            *["--family", "bspline", "--surface", "1", "--m", 30, "--n", 10],
            *["--out", tmp_path],
        )
        self.assertEqual(code, 0)
        instance = load_instance(tmp_path)
        self.assertEqual(instance.shape, (30, 10, 10, 30))
        assert not instance.consistent

    def testNeedsFamily(self, tmp_path, capsys):
        (code, _, err) = self.kmeq(capsys, "generate", "--out", tmp_path)
        self.assertEqual(code, 2)
        self.assertIn("kmeq: error: either --family or --instance", err)


class SolveTestCase(_CliTestCase):
    @cases.mark_methods("ARBK")
    def testFromInstance(self, tmp_path, capsys):
        instance_dir = tmp_path / "instance"
        self.kmeq(capsys, "generate", *GAUSSIAN_ARGS, "--out", instance_dir)
        (code, out, _) = self.kmeq(
            capsys,
            "solve",
            *["--instance", instance_dir, "--method", "arbk"],
            *["--tau-a", 10, "--tau-b", 10, "--rse-tol", 1e-4],
            *["--trace", tmp_path / "trace.csv", "--trace-stride", 3],
        )
        self.assertEqual(code, 0)
        record = json.loads(out)
        self.assertEqual(
            (record["method"], record["tau_a"], record["tau_b"]), ("ARBK", 10, 10)
        )
        self.assertEqual(record["termination"], "ToleranceReached")
        self.assertLessEqual(record["rse"], 1e-4)
        trace = read_trace(tmp_path / "trace.csv")
        self.assertEqual(trace[0][0], 0)
        self.assertEqual(trace[-1][0], record["iterations"])

    @cases.mark_methods("CME-RK", "LSPIA")
    @pytest.mark.parametrize("method", ["cme-rk", "LSPIA"])
    def testFromFamily(self, capsys, method):
        """solve generates the instance itself and prints one JSON record"""
        (code, out, _) = self.kmeq(
            capsys, "solve", *GAUSSIAN_ARGS, "--method", method, "--max-iters", 5
        )
        self.assertEqual(code, 0)
        record = json.loads(out)
        self.assertEqual(record["iterations"], 5)
        self.assertEqual(record["termination"], "MaxItersExceeded")
        self.assertEqual((record["m"], record["q"]), (40, 40))

    def testSeeded(self, capsys):
        """same seed, same run"""
        outputs = []
        for _ in range(2):
            (_, out, _) = self.kmeq(
                capsys,
                "solve",
                *GAUSSIAN_ARGS,
                *["--method", "GRBK(10, 10)", "--update", "alternating"],
                *["--max-iters", 50, "--seed", 4],
            )
            record = json.loads(out)
            outputs.append((record["iterations"], record["rse"]))
        self.assertEqual(outputs[0], outputs[1])

    @pytest.mark.parametrize(
        "args,message",
        [
            (["--method", "sor"], "unknown method"),
            ([], "--method is required"),
            (["--method", "arbk"], "needs tau_a and tau_b"),
            (["--method", "ARBK(50, 10)"], "block sizes"),
            (["--method", "cme-rk", "--rse-tol", 0], "rse_tol"),
        ],
    )
    def testUsageErrors(self, capsys, args, message):
        (code, _, err) = self.kmeq(capsys, "solve", *GAUSSIAN_ARGS, *args)
        self.assertEqual(code, 2)
        self.assertIn(message, err)
        self.assertIn("kmeq: error: ", err)

    def testMissingInstance(self, tmp_path, capsys):
        (code, _, err) = self.kmeq(
            capsys, "solve", "--instance", tmp_path / "nowhere", "--method", "cme-rk"
        )
        self.assertEqual(code, 1)
        self.assertIn("kmeq: error:", err)


class BenchTestCase(_CliTestCase):
    @cases.mark_methods("ARBK", "CME-RK")
    def testBench(self, tmp_path, capsys):
        """bench prints the table and fills the output directory"""
        (code, out, _) = self.kmeq(
            capsys,
            "bench",
            *GAUSSIAN_ARGS,
            *["--method", "ARBK(10,10)", "--method", "cme-rk"],
            *["--trials", 2, "--rse-tol", 1e-2, "--seed", 1, "--out", tmp_path],
        )
        self.assertEqual(code, 0)
        assert out.startswith("Methods")
        self.assertIn("ARBK(10, 10)", out)
        rows = read_rows(tmp_path / "summary.csv")
        self.assertEqual([row["method"] for row in rows], ["ARBK", "CME-RK"])
        self.assertEqual(rows[0]["trials"], "2")
        assert (tmp_path / "runs" / "001-cme-rk.json").exists()
        assert (tmp_path / "partitions" / "001-10-10-rows.txt").exists()

    def testConfigFileWithOverrides(self, tmp_path, capsys):
        """command-line flags replace the methods and trials of the file"""
        config = tmp_path / "experiment.yaml"
        config.write_text(
            "family: gaussian\n"
            "family_params: {m: 40, n: 8, p: 8, q: 40}\n"
            "methods: [CME-RK]\n"
            "trials: 10\n"
            "rse_tol: 0.01\n"
        )
        (code, _, _) = self.kmeq(
            capsys,
            *["bench", "--config", config, "--trials", 1],
            *["--method", "grbk", "--tau-a", 20, "--tau-b", 20],
            *["--out", tmp_path / "out"],
        )
        self.assertEqual(code, 0)
        rows = read_rows(tmp_path / "out" / "summary.csv")
        self.assertEqual(
            [(row["method"], row["tau_a"], row["trials"]) for row in rows],
            [("GRBK", "20", "1")],
        )

    @pytest.mark.parametrize(
        "args,message",
        [
            (["--method", "ARBK(41, 10)"], "block size 41"),
            (["--method", "cme-rk", "--trials", 0], "trials"),
            (["--method", "cme-rk", "--family", "poisson"], "unknown family"),
            ([], "at least one method"),
        ],
    )
    def testConfigErrors(self, tmp_path, capsys, args, message):
        (code, _, err) = self.kmeq(
            capsys, "bench", *GAUSSIAN_ARGS, *args, "--out", tmp_path
        )
        self.assertEqual(code, 2)
        self.assertIn(message, err)

    def testMissingConfigFile(self, tmp_path, capsys):
        """an unreadable configuration is an I/O error, status 1"""
        (code, _, _) = self.kmeq(
            capsys, "bench", "--config", tmp_path / "missing.yaml"
        )
        self.assertEqual(code, 1)


@cases.mark_methods("ARBK")
class BoundsTestCase(_CliTestCase):
    def testBounds(self, tmp_path, capsys):
        """bounds prints k,empirical,bound rows"""
        (code, out, _) = self.kmeq(
            capsys,
            "bounds",
            *GAUSSIAN_ARGS,
            *["--method", "ARBK(10, 10)", "--trials", 4],
            *["--checkpoints", "0,2,4", "--out", tmp_path],
        )
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "k,empirical,bound")
        self.assertEqual([line.split(",")[0] for line in lines[1:]], ["0", "2", "4"])
        assert (tmp_path / "bounds.csv").exists()

    def testInvalidCheckpoints(self, tmp_path, capsys):
        (code, _, err) = self.kmeq(
            capsys,
            *["bounds", *GAUSSIAN_ARGS, "--method", "ARBK(10, 10)"],
            *["--checkpoints", "0,five", "--out", tmp_path],
        )
        self.assertEqual(code, 2)
        self.assertIn("invalid checkpoints", err)

    def testSizeGuard(self, tmp_path, capsys):
        """library errors exit with status 1"""
        (code, _, err) = self.kmeq(
            capsys,
            *["bounds", "--family", "gaussian", "--m", 3000, "--n", 8, "--p", 8],
            *["--q", 40, "--method", "ARBK(100, 10)", "--out", tmp_path],
        )
        self.assertEqual(code, 1)
        self.assertIn("m=3000", err)


class SurfacesTestCase(_CliTestCase):
    def testStdout(self, capsys):
        """a header and one row per grid point"""
        (code, out, _) = self.kmeq(
            capsys, "surfaces", "--surface", 2, "--m", 3, "--q", 4
        )
        self.assertEqual(code, 0)
        lines = out.splitlines()
        self.assertEqual(lines[0], "s,t,x,y,z")
        self.assertEqual(len(lines), 1 + 12)

    def testFile(self, tmp_path, capsys):
        path = tmp_path / "surface1.csv"
        (code, out, _) = self.kmeq(
            capsys, "surfaces", "--m", 4, "--q", 4, "--out", path
        )
        self.assertEqual((code, out), (0, ""))
        rows = read_rows(path)
        self.assertEqual(len(rows), 16)
        self.assertEqual(rows[0]["s"], rows[0]["x"])

    def testUnknownSurface(self, capsys):
        (code, _, err) = self.kmeq(
            capsys, "surfaces", "--surface", 3, "--m", 4, "--q", 4
        )
        self.assertEqual(code, 2)
        self.assertIn("unknown surface", err)


class UsageTestCase(_CliTestCase):
    def testNoSubcommand(self, capsys):
        (code, _, err) = self.kmeq(capsys)
        self.assertEqual(code, 2)
        self.assertIn("usage: kmeq", err)

    def testUnknownFlag(self, capsys):
        (code, _, _) = self.kmeq(capsys, "surfaces", "--m", 4, "--q", 4, "--colour")
        self.assertEqual(code, 2)

    def testDebugLogs(self, monkeypatch, capsys):
        """KMEQ_DEBUG_LOGS switches the package logger to DEBUG, with one handler"""
        monkeypatch.setenv("KMEQ_DEBUG_LOGS", "true")
        self.kmeq(capsys, "surfaces", "--m", 2, "--q", 2)
        self.assertEqual(logging.getLogger("kmeq").level, logging.DEBUG)
        monkeypatch.setenv("KMEQ_DEBUG_LOGS", "0")
        self.kmeq(capsys, "surfaces", "--m", 2, "--q", 2)
        self.assertEqual(logging.getLogger("kmeq").level, logging.INFO)
        self.assertEqual(
            [h for h in logging.getLogger("kmeq").handlers if h is cli._handler],
            [cli._handler],
        )
