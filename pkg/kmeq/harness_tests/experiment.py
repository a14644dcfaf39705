"""
Experiment configuration, trial orchestration, aggregation, output files and the
bound overlay.
"""

import json
import logging
import math
import statistics

import numpy as np
import pytest

from kmeq import cases, harness
from kmeq.enums import Family, Method
from kmeq.exceptions import ConfigError, SvdSizeGuardError
from kmeq.harness import (
    SUMMARY_HEADER,
    ExperimentConfig,
    MethodSpec,
    MethodSummary,
    RunRecord,
    compare_with_bounds,
    generate_instance,
    load_experiment_config,
    make_partitions,
    run_experiment,
    run_trial,
)
from kmeq.partition import Partition
from kmeq.patma import ANYFLOAT, ANYINT, StrRe
from kmeq.solvers.gradient import GradientSolver
from kmeq.utils.csvio import read_rows, read_trace

GAUSSIAN = {"m": 40, "n": 8, "p": 8, "q": 40}


def small_config(tmp_path, methods=("ARBK(10, 10)", "CME-RK"), **kwargs):
    document = {
        "family": "gaussian",
        "family_params": dict(GAUSSIAN),
        "methods": list(methods),
        "trials": 3,
        "rse_tol": 1e-2,
        "output_dir": tmp_path,
    }
    document.update(kwargs)
    return ExperimentConfig.from_mapping(document)


def record(trial, iterations, rse, termination="ToleranceReached", **kwargs):
    values = dict(
        method="ARBK",
        label="ARBK(5, 5)",
        tau_a=5,
        tau_b=5,
        trial=trial,
        seed=trial,
        m=40,
        n=8,
        p=8,
        q=40,
        iterations=iterations,
        rse=rse,
        elapsed_seconds=0.5,
        termination=termination,
    )
    values.update(kwargs)
    return RunRecord(**values)


class MethodSpecTestCase(cases._KmeqTestCase):
    @pytest.mark.parametrize(
        "value,method,taus",
        [
            ("ARBK(50, 50)", Method.ARBK, (50, 50)),
            ("grbk(30,20)", Method.GRBK, (30, 20)),
            ("CME-RK", Method.CME_RK, (None, None)),
            ("lspia", Method.GRADIENT, (None, None)),
            ({"name": "arbk", "tau_a": 4, "tau_b": "6"}, Method.ARBK, (4, 6)),
        ],
    )
    def testParse(self, value, method, taus):
        """labels, lowercase names, aliases and mappings"""
        spec = MethodSpec.parse(value)
        self.assertEqual(spec.method, method)
        self.assertEqual((spec.tau_a, spec.tau_b), taus)

    def testOptions(self):
        """keys other than name and block sizes become solver options"""
        spec = MethodSpec.parse({"name": "grbk", "tau_a": 2, "tau_b": 2, "update": "x"})
        self.assertEqual(dict(spec.options), {"update": "x"})
        assert MethodSpec.parse(spec) is spec

    def testLabels(self):
        spec = MethodSpec.parse("ARBK(50,50)")
        self.assertEqual(spec.label, "ARBK(50, 50)")
        self.assertEqual(spec.slug, "arbk-50-50")
        self.assertEqual(MethodSpec.parse("cme_rk").slug, "cme-rk")
        self.assertEqual(MethodSpec.parse("gradient").label, "LSPIA")

    @pytest.mark.parametrize(
        "value,message",
        [
            ("ARBK(50)", "cannot parse"),
            ("SOR", "unknown method"),
            ("ARBK", "needs tau_a and tau_b"),
            ("CME-RK(5, 5)", "does not take block sizes"),
            ({"tau_a": 5}, "invalid method entry"),
            (42, "invalid method entry"),
        ],
    )
    def testInvalid(self, value, message):
        with pytest.raises(ConfigError, match=message):
            MethodSpec.parse(value)


class ExperimentConfigTestCase(cases._KmeqTestCase):
    def testDefaults(self, monkeypatch, tmp_path):
        """protocol defaults; output_dir comes from KMEQ_OUT"""
        monkeypatch.setenv("KMEQ_OUT", str(tmp_path / "out"))
        config = ExperimentConfig.from_mapping(
            {"family": "Gaussian", "family_params": GAUSSIAN, "methods": ["CME-RK"]}
        )
        self.assertEqual(config.family, Family.GAUSSIAN)
        self.assertEqual((config.trials, config.rse_tol), (20, 5e-2))
        self.assertEqual((config.max_iters, config.base_seed), (100000, 0))
        self.assertEqual((config.workers, config.trace_stride), (1, 1))
        self.assertEqual(config.checkpoints, tuple(range(0, 51, 5)))
        self.assertEqual(config.output_dir, tmp_path / "out")
        assert not config.fix_instance

    def testOverrides(self, tmp_path):
        """overrides replace document fields, None overrides are ignored"""
        config = small_config(tmp_path)
        overridden = ExperimentConfig.from_mapping(
            {
                "family": "gaussian",
                "family_params": GAUSSIAN,
                "methods": ["CME-RK"],
                "trials": 3,
            },
            trials=7,
            base_seed=None,
            checkpoints=[10, 0],
        )
        self.assertEqual(overridden.trials, 7)
        self.assertEqual(overridden.base_seed, 0)
        self.assertEqual(overridden.checkpoints, (10, 0))
        self.assertEqual(config.dimensions(), (40, 8, 8, 40))

    @pytest.mark.parametrize(
        "changes,message",
        [
            ({"trials": 0}, "trials"),
            ({"workers": 0}, "workers"),
            ({"methods": []}, "at least one method"),
            ({"rse_tol": 0}, "stopping rule"),
            ({"max_iters": 0}, "stopping rule"),
            ({"checkpoints": [0, -5]}, "negative checkpoint"),
            ({"methods": ["ARBK(41, 4)"]}, r"block size 41 is not in \[1, m=40\]"),
            ({"methods": ["GRBK(4, 0)"]}, r"block size 0 is not in \[1, q=40\]"),
            ({"family": "poisson"}, "unknown family"),
            ({"colour": "red"}, "unknown configuration keys"),
            ({"trials": 2.5}, "trials must be an integer"),
            ({"workers": True}, "workers must be an integer"),
            ({"family_params": {"m": 40, "n": 8}}, "needs parameter 'p'"),
        ],
    )
    def testInvalid(self, tmp_path, changes, message):
        with pytest.raises(ConfigError, match=message):
            small_config(tmp_path, **changes)

    def testMissingFamily(self):
        with pytest.raises(ConfigError, match="configuration needs a family"):
            ExperimentConfig.from_mapping({"methods": ["CME-RK"]})

    def testSmatrixDimensions(self, tmp_path):
        """named cases are case-insensitive"""
        config = small_config(
            tmp_path, family="smatrix", family_params={"case": "i"}, methods=["CME-RK"]
        )
        self.assertEqual(config.dimensions(), (1000, 100, 100, 1000))
        with pytest.raises(ConfigError, match="unknown Smatrix case"):
            small_config(tmp_path, family="smatrix", family_params={"case": "IX"})

    def testBsplineDimensions(self, tmp_path):
        """p and q default to n and m"""
        config = small_config(
            tmp_path,
            family="bspline",
            family_params={"surface": "1", "m": 30, "n": 10},
            methods=["LSPIA"],
        )
        self.assertEqual(config.dimensions(), (30, 10, 10, 30))


class LoadConfigTestCase(cases._KmeqTestCase):
    def testYaml(self, tmp_path):
        path = tmp_path / "experiment.yaml"
        path.write_text(
            "family: gaussian\n"
            "family_params: {m: 40, n: 8, p: 8, q: 40}\n"
            "methods:\n"
            "  - ARBK(10, 10)\n"
            "  - {name: grbk, tau_a: 10, tau_b: 10, update: alternating}\n"
            "trials: 5\n"
            "rse_tol: 1e-3\n"
        )
        config = load_experiment_config(path, output_dir=tmp_path / "out")
        self.assertEqual(
            [spec.label for spec in config.methods], ["ARBK(10, 10)", "GRBK(10, 10)"]
        )
        self.assertEqual(config.methods[1].options, {"update": "alternating"})
        self.assertEqual((config.trials, config.rse_tol), (5, 1e-3))
        self.assertEqual(config.output_dir, tmp_path / "out")

    def testJson(self, tmp_path):
        path = tmp_path / "experiment.json"
        path.write_text(
            json.dumps(
                {"family": "gaussian", "family_params": GAUSSIAN, "methods": ["CME-RK"]}
            )
        )
        self.assertEqual(load_experiment_config(path).methods[0].method, Method.CME_RK)

    def testInvalidYaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("family: [gaussian\n")
        with pytest.raises(ConfigError, match="broken.yaml"):
            load_experiment_config(path)

    def testNotAMapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- gaussian\n- arbk\n")
        with pytest.raises(ConfigError, match="key-value document"):
            load_experiment_config(path)


class InstancesTestCase(cases._KmeqTestCase):
    def testGaussianPerTrial(self, tmp_path):
        """the trial seed determines the instance"""
        config = small_config(tmp_path)
        first = generate_instance(config, 3)
        again = generate_instance(config, 3)
        other = generate_instance(config, 4)
        self.assertEqual(first.provenance.seed, 3)
        assert np.array_equal(first.a, again.a)
        assert not np.array_equal(first.a, other.a)

    def testBsplineIsDeterministic(self, tmp_path):
        """fitting instances do not depend on the seed"""
        config = small_config(
            tmp_path,
            family="bspline",
            family_params={"surface": "2", "m": 20, "n": 6},
            methods=["LSPIA"],
        )
        (first, second) = (generate_instance(config, seed) for seed in (0, 1))
        self.assertEqual(first.shape, (20, 6, 6, 20))
        assert np.array_equal(first.a, second.a)
        assert np.array_equal(first.f, second.f)
        assert not first.consistent

    def testPartitions(self, tmp_path):
        """about tau indices per block, one partition per seed"""
        instance = generate_instance(small_config(tmp_path), 0)
        (s, t) = make_partitions(instance, 10, 8, 0)
        self.assertEqual((len(s), len(t)), (4, 5))
        self.assertEqual(sorted(i for block in s for i in block), list(range(40)))
        (s2, t2) = make_partitions(instance, 10, 8, 0)
        self.assertEqual((s.blocks, t.blocks), (s2.blocks, t2.blocks))
        (s3, _) = make_partitions(instance, 10, 8, 1)
        self.assertNotEqual(s.blocks, s3.blocks)


class TrialTestCase(cases._KmeqTestCase):
    @cases.mark_methods("ARBK", "GRBK")
    def testSharedPartitions(self, tmp_path):
        """methods with equal block sizes see the same partitions"""
        config = small_config(
            tmp_path, methods=["ARBK(10, 10)", "GRBK(10, 10)", "CME-RK"]
        )
        result = run_trial(config, 1)
        (records, traces) = (result.records, result.traces)
        self.assertEqual(result.trial, 1)
        self.assertEqual(list(result.partitions), [(10, 10)])
        self.assertEqual(
            [r.label for r in records], ["ARBK(10, 10)", "GRBK(10, 10)", "CME-RK"]
        )
        self.assertEqual(set(traces), {r.label for r in records})
        for r in records:
            self.assertRecordMatch(
                r.to_json(),
                {
                    "method": StrRe("ARBK|GRBK|CME-RK"),
                    "label": r.label,
                    "tau_a": r.tau_a,
                    "tau_b": r.tau_b,
                    "trial": 1,
                    "seed": 1,
                    "m": 40,
                    "n": 8,
                    "p": 8,
                    "q": 40,
                    "iterations": ANYINT,
                    "rse": ANYFLOAT,
                    "elapsed_seconds": ANYFLOAT,
                    "setup_seconds": ANYFLOAT,
                    "termination": "ToleranceReached",
                    "error_kind": "relative",
                    "failure_reason": None,
                },
            )

    @cases.mark_methods("LSPIA")
    def testSolverErrorIsRecorded(self, tmp_path, caplog):
        """a solver error fails the run, not the trial"""
        config = small_config(
            tmp_path, methods=[{"name": "gradient", "step_size": 10.0}, "CME-RK"]
        )
        with caplog.at_level(logging.ERROR, logger="kmeq"):
            result = run_trial(config, 0)
        (failed, ok) = result.records
        self.assertEqual(failed.termination, "Error")
        assert math.isnan(failed.rse)
        assert failed.failure_reason.startswith("ParameterError: ")
        assert not failed.completed and not failed.converged
        assert ok.converged
        self.assertEqual(set(result.traces), {"CME-RK"})
        assert "LSPIA failed" in caplog.text

    @cases.mark_methods("LSPIA")
    @pytest.mark.parametrize(
        "error",
        [
            FloatingPointError("overflow encountered in matmul"),
            np.linalg.LinAlgError("SVD did not converge"),
        ],
    )
    def testNumericalErrorIsRecorded(self, tmp_path, monkeypatch, error):
        """numpy errors raised inside a solve fail the run, not the experiment"""

        def step(self, state, rng):
            raise error

        monkeypatch.setattr(GradientSolver, "step", step)
        config = small_config(tmp_path, methods=["LSPIA", "CME-RK"], trials=2)
        summary = run_experiment(config)
        failures = [r for r in summary.records if r.method == "LSPIA"]
        self.assertEqual([r.termination for r in failures], ["Error", "Error"])
        self.assertEqual(
            failures[0].failure_reason, f"{type(error).__name__}: {error}"
        )
        self.assertEqual(summary["LSPIA"].failures, 2)
        self.assertEqual(summary["CME-RK"].failures, 0)

    def testFixInstance(self, tmp_path, monkeypatch):
        """random families are redrawn per trial unless fix_instance is set; the
        deterministic B-spline family is built once from the base seed"""
        seeds = []
        generate = harness.generate_instance

        def spy(config, trial_seed):
            seeds.append(trial_seed)
            return generate(config, trial_seed)

        monkeypatch.setattr(harness, "generate_instance", spy)
        for fix_instance in (False, True):
            config = small_config(
                tmp_path, methods=["CME-RK"], base_seed=10, fix_instance=fix_instance
            )
            for trial in range(3):
                run_trial(config, trial)
        self.assertEqual(seeds, [10, 11, 12, 10, 10, 10])

        seeds.clear()
        config = small_config(
            tmp_path,
            family="bspline",
            family_params={"surface": "2", "m": 20, "n": 6},
            methods=["LSPIA"],
            base_seed=10,
        )
        for trial in range(3):
            run_trial(config, trial)
        self.assertEqual(seeds, [10, 10, 10])


class SummaryTestCase(cases._KmeqTestCase):
    def testMeansOverCompletedRuns(self):
        """raised runs are failures but stay out of the means"""
        spec = MethodSpec.parse("ARBK(5, 5)")
        records = [
            record(0, 10, 0.01),
            record(1, 30, 0.03),
            record(2, 100, 0.2, termination="MaxItersExceeded"),
            record(
                3,
                0,
                float("nan"),
                termination="Error",
                failure_reason="NumericalFailure: svd",
            ),
        ]
        summary = MethodSummary.from_records(spec, records, max_iters=100)
        self.assertEqual((summary.trials, summary.failures), (4, 2))
        self.assertEqual(summary.converged, 2)
        assert summary.mean_it == pytest.approx(140 / 3)
        self.assertEqual(summary.median_it, 30.0)
        assert summary.mean_rse == pytest.approx(0.08)
        self.assertEqual(
            summary.csv_row(),
            ("ARBK", 5, 5, 4, summary.mean_rse, 30.0, summary.mean_it, 0.5, 2),
        )

    def testAllRaised(self):
        """no completed run: NaN statistics; non-block methods have empty sizes"""
        spec = MethodSpec.parse("CME-RK")
        records = [
            record(0, 0, float("nan"), termination="Error", failure_reason="x")
        ]
        summary = MethodSummary.from_records(spec, records, max_iters=100)
        assert math.isnan(summary.mean_it)
        self.assertEqual(summary.csv_row()[1:3], ("", ""))


class RunExperimentTestCase(cases._KmeqTestCase):
    @cases.mark_methods("ARBK", "CME-RK")
    def testOutputDirectory(self, tmp_path):
        """summary, table, per-run records and strided traces"""
        config = small_config(tmp_path / "out", trace_stride=4)
        summary = run_experiment(config)
        out = tmp_path / "out"

        rows = read_rows(out / "summary.csv")
        self.assertEqual(list(rows[0]), list(SUMMARY_HEADER))
        self.assertEqual([row["method"] for row in rows], ["ARBK", "CME-RK"])
        self.assertEqual((rows[0]["tau_a"], rows[1]["tau_a"]), ("10", ""))
        self.assertEqual([row["trials"] for row in rows], ["3", "3"])

        table = (out / "table.txt").read_text()
        assert table.startswith("Methods")
        assert "ARBK(10, 10)" in table and "CME-RK" in table

        for trial in range(3):
            for slug in ("arbk-10-10", "cme-rk"):
                path = out / "runs" / f"{trial:03d}-{slug}.json"
                run = json.loads(path.read_text())
                self.assertEqual(run["trial"], trial)
                trace = read_trace(out / "traces" / f"{trial:03d}-{slug}.csv")
                self.assertEqual(trace[0][0], 0)
                self.assertEqual(trace[-1][0], run["iterations"])
                assert all(k % 4 == 0 for (k, _) in trace[:-1])

        arbk = summary["ARBK(10, 10)"]
        iterations = [r.iterations for r in summary.records if r.method == "ARBK"]
        assert arbk.mean_it == pytest.approx(statistics.fmean(iterations))
        self.assertEqual(arbk.median_it, statistics.median(iterations))
        self.assertEqual(arbk.failures, 0)
        assert float(rows[0]["mean_it"]) == pytest.approx(arbk.mean_it)
        with pytest.raises(KeyError):
            summary["GRBK(10, 10)"]

    @cases.mark_methods("ARBK", "GRBK")
    def testPartitionDumps(self, tmp_path):
        """each trial writes the row and column partitions of every pair of block
        sizes, readable with Partition.from_lines"""
        config = small_config(
            tmp_path, methods=["ARBK(10, 10)", "GRBK(10, 10)", "ARBK(20, 8)", "CME-RK"]
        )
        run_experiment(config)
        names = sorted(path.name for path in (tmp_path / "partitions").iterdir())
        self.assertEqual(
            names,
            [
                f"{trial:03d}-{taus}-{kind}.txt"
                for trial in range(3)
                for taus in ("10-10", "20-8")
                for kind in ("cols", "rows")
            ],
        )
        for trial in range(3):
            instance = generate_instance(config, trial)
            for (tau_a, tau_b) in ((10, 10), (20, 8)):
                expected = make_partitions(instance, tau_a, tau_b, trial)
                for (kind, partition) in zip(("rows", "cols"), expected):
                    name = f"{trial:03d}-{tau_a}-{tau_b}-{kind}.txt"
                    path = tmp_path / "partitions" / name
                    loaded = Partition.from_lines(
                        path.read_text().splitlines(), universe_size=40
                    )
                    self.assertEqual(loaded, partition)

    def testDuplicateMethods(self, tmp_path):
        config = small_config(tmp_path, methods=["ARBK(10,10)", "arbk(10, 10)"])
        with pytest.raises(ConfigError, match="duplicate methods"):
            run_experiment(config)

    def testDeterministic(self, tmp_path):
        """same base seed, same results; CPU time aside"""
        summaries = [
            run_experiment(small_config(tmp_path / str(i), base_seed=5))
            for i in range(2)
        ]
        for (first, second) in zip(summaries[0].records, summaries[1].records):
            self.assertEqual(
                (first.label, first.iterations, first.rse),
                (second.label, second.iterations, second.rse),
            )

    def testWorkers(self, tmp_path):
        """parallel trials give the records of sequential ones"""
        (sequential, parallel) = (
            run_experiment(small_config(tmp_path / str(workers), workers=workers))
            for workers in (1, 2)
        )
        self.assertEqual(
            [(r.trial, r.label, r.iterations, r.rse) for r in sequential.records],
            [(r.trial, r.label, r.iterations, r.rse) for r in parallel.records],
        )
        assert (tmp_path / "2" / "summary.csv").exists()


@cases.mark_methods("ARBK")
class BoundOverlayTestCase(cases._KmeqTestCase):
    def testOverlay(self, tmp_path):
        """mean X error at each checkpoint next to the bound of the trial-0 pavings"""
        config = small_config(
            tmp_path,
            family_params={"m": 60, "n": 8, "p": 8, "q": 60},
            methods=["ARBK(15, 15)"],
            trials=10,
            checkpoints=[10, 0, 5],
        )
        overlay = compare_with_bounds(config)
        self.assertEqual(overlay.checkpoints, (0, 5, 10))
        self.assertEqual(len(overlay.empirical), 3)
        assert overlay.empirical[2] < overlay.empirical[0]
        assert all(bound > 0 for bound in overlay.bound)
        rows = read_rows(tmp_path / "bounds.csv")
        self.assertEqual(list(rows[0]), ["k", "empirical", "bound"])
        self.assertEqual([row["k"] for row in rows], ["0", "5", "10"])
        for (row, (k, empirical, bound)) in zip(rows, overlay.rows()):
            assert float(row["empirical"]) == pytest.approx(empirical)
            assert float(row["bound"]) == pytest.approx(bound)

    def testSingleTrialWarning(self, tmp_path, caplog):
        config = small_config(
            tmp_path, methods=["ARBK(10, 10)"], trials=1, checkpoints=[0, 1]
        )
        with caplog.at_level(logging.WARNING, logger="kmeq"):
            compare_with_bounds(config)
        assert "not an expectation estimate" in caplog.text

    @pytest.mark.parametrize(
        "methods", [["CME-RK"], ["GRBK(10, 10)"], ["ARBK(10, 10)", "ARBK(5, 5)"]]
    )
    def testNeedsOneArbkMethod(self, tmp_path, methods):
        with pytest.raises(ConfigError, match="exactly one ARBK method"):
            compare_with_bounds(small_config(tmp_path, methods=methods))

    def testSizeGuard(self, tmp_path):
        """bound overlays refuse dimensions above the full-SVD limit"""
        config = small_config(
            tmp_path,
            family_params={"m": 3000, "n": 8, "p": 8, "q": 40},
            methods=["ARBK(100, 10)"],
        )
        with pytest.raises(SvdSizeGuardError, match="m=3000"):
            compare_with_bounds(config)
        assert not (tmp_path / "bounds.csv").exists()
