"""
Method comparisons through the experiment harness: the Smatrix Case-I ordering, the
B-spline surface fit, and reproducibility of summary files.
"""

import os

import numpy as np

from kmeq import cases
from kmeq.harness import ExperimentConfig, generate_instance, run_experiment
from kmeq.utils.csvio import read_rows

CASE_I_METHODS = ["ARBK(50, 50)", "ARBK(30, 30)", "GRBK(50, 50)", "CME-RK"]

# trials are independent; a 20-trial Case-I run is several minutes on one core
CASE_I_WORKERS = min(4, os.cpu_count() or 1)


def case_i_config(output_dir, **kwargs):
    document = {
        "family": "smatrix",
        "family_params": {"case": "I"},
        "methods": CASE_I_METHODS,
        "trials": 20,
        "rse_tol": 5e-2,
        "max_iters": 100000,
        "base_seed": 0,
        "workers": CASE_I_WORKERS,
        "output_dir": output_dir,
    }
    document.update(kwargs)
    return ExperimentConfig.from_mapping(document)


def fitting_config(output_dir, methods, **kwargs):
    document = {
        "family": "bspline",
        "family_params": {"surface": "1", "m": 150, "n": 50},
        "methods": methods,
        "trials": 5,
        "max_iters": 100,
        "output_dir": output_dir,
    }
    document.update(kwargs)
    return ExperimentConfig.from_mapping(document)


@cases.slow
@cases.mark_methods("ARBK", "GRBK", "CME-RK")
class CaseOneTestCase(cases._KmeqTestCase):
    def testOrdering(self, tmp_path):
        """median IT: ARBK(50, 50) < ARBK(30, 30) < GRBK(50, 50) < CME-RK"""
        summary = run_experiment(case_i_config(tmp_path))
        (arbk50, arbk30, grbk, cme_rk) = (summary[label] for label in CASE_I_METHODS)
        self.assertEqual((arbk50.failures, arbk30.failures), (0, 0))
        self.assertLess(arbk50.median_it, arbk30.median_it)
        self.assertLess(arbk30.median_it, grbk.median_it)
        assert cme_rk.failures > 0 or grbk.median_it < cme_rk.median_it, (
            f"CME-RK median {cme_rk.median_it} not above GRBK's {grbk.median_it}"
        )
        assert 300 <= arbk50.median_it <= 4000, arbk50.median_it
        table = (tmp_path / "table.txt").read_text()
        self.assertIn("ARBK(50, 50)", table)


def without_cpu(path):
    return [
        {key: value for (key, value) in row.items() if key != "mean_cpu_s"}
        for row in read_rows(path)
    ]


@cases.slow
class ReproducibilityTestCase(cases._KmeqTestCase):
    def testSameSeedSameSummary(self, tmp_path):
        """two runs with one base seed write the same summary.csv, CPU column aside"""
        for name in ("first", "second"):
            run_experiment(
                case_i_config(
                    tmp_path / name, trials=3, max_iters=3000, base_seed=11
                )
            )
        (first, second) = (
            without_cpu(tmp_path / name / "summary.csv") for name in ("first", "second")
        )
        self.assertEqual(first, second)
        self.assertEqual(len(first), len(CASE_I_METHODS))
        for name in ("000-arbk-50-50.json", "002-cme-rk.json"):
            runs = [
                (tmp_path / directory / "runs" / name).read_text()
                for directory in ("first", "second")
            ]
            self.assertEqual(
                [line for line in runs[0].splitlines() if "seconds" not in line],
                [line for line in runs[1].splitlines() if "seconds" not in line],
            )


class FittingTestCase(cases._KmeqTestCase):
    def testPartitionOfUnity(self, tmp_path):
        """collocation rows of A and columns of B sum to 1"""
        instance = generate_instance(fitting_config(tmp_path, ["LSPIA"]), 0)
        self.assertEqual(instance.shape, (150, 50, 50, 150))
        assert np.allclose(instance.a.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert np.allclose(instance.b.sum(axis=0), 1.0, rtol=0, atol=1e-12)

    @cases.mark_methods("ARBK")
    def testArbkFitsWithinHundredIterations(self, tmp_path):
        """ARBK(50, 50) gets the Surface-1 fit to RSE 1e-1 in at most 100 iterations"""
        summary = run_experiment(
            fitting_config(tmp_path, ["ARBK(50, 50)"], rse_tol=1e-1)
        )
        arbk = summary["ARBK(50, 50)"]
        self.assertEqual(arbk.failures, 0)
        self.assertLessEqual(arbk.mean_rse, 1e-1)
        self.assertLessEqual(max(r.iterations for r in summary.records), 100)

    @cases.mark_methods("LSPIA")
    def testGradientOnWellConditionedFit(self, tmp_path):
        """the collocation matrices of the axis parameters are well conditioned, so
        the 1 / L gradient step reaches RSE 5e-2 within a few iterations"""
        summary = run_experiment(
            fitting_config(tmp_path, ["LSPIA"], rse_tol=5e-2, trials=1)
        )
        (record,) = summary.records
        self.assertEqual(record.termination, "ToleranceReached")
        self.assertLessEqual(record.iterations, 10)
        self.assertLessEqual(record.rse, 5e-2)
