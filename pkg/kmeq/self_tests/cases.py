"""Internal checks of assertion implementations."""

from typing import Any, Dict, List, Tuple

import numpy as np
import pytest

from kmeq import cases
from kmeq.patma import (
    ANYDICT,
    ANYFLOAT,
    ANYINT,
    ANYSTR,
    ANYTHING,
    Approx,
    Between,
    Either,
    RemainingKeys,
    StrRe,
    match_value,
)

RECORD: Dict[str, Any] = {
    "method": "ARBK",
    "tau_a": 10,
    "tau_b": 10,
    "iterations": 137,
    "rse": 0.0493,
    "elapsed_seconds": 0.0121,
    "termination": "ToleranceReached",
    "failure_reason": None,
}

# fmt: off
RECORD_SPECS: List[Tuple[Dict[Any, Any], bool]] = [
    (RECORD, True),
    ({"method": "ARBK", **ANYDICT}, True),
    ({"method": "GRBK", **ANYDICT}, False),
    ({"method": ANYSTR, "iterations": ANYINT, **ANYDICT}, True),
    ({"rse": Between(0, 0.05), **ANYDICT}, True),
    ({"rse": Between(0, 0.01), **ANYDICT}, False),
    ({"rse": Approx(0.05, rel=0.02), **ANYDICT}, True),
    ({"rse": Approx(0.05, rel=1e-3), **ANYDICT}, False),
    ({"termination": Either("ToleranceReached", "MaxItersExceeded"), **ANYDICT}, True),
    ({"termination": StrRe("Max.*"), **ANYDICT}, False),
    ({StrRe("tau_[ab]"): 10, RemainingKeys(ANYSTR): ANYTHING}, True),
    ({"method": "ARBK"}, False),  # unmatched remaining keys
    ({"failure_reason": ANYSTR, **ANYDICT}, False),
    ({"failure_reason": None, **ANYDICT}, True),
    ({"missing": ANYTHING, **ANYDICT}, False),
]
# fmt: on


class PatmaTestCase(cases._KmeqTestCase):
    @pytest.mark.parametrize(
        "got,expected,result",
        [
            (3, ANYINT, True),
            (3.0, ANYINT, False),
            (True, ANYINT, False),
            (3, ANYFLOAT, True),
            (float("nan"), ANYFLOAT, False),
            (float("inf"), ANYFLOAT, False),
            ("x", ANYFLOAT, False),
            (None, ANYSTR, False),
            (None, ANYTHING, True),
            (1.0 + 1e-12, Approx(1.0), True),
            (0.0, Approx(0.0, abs=1e-12), True),
            (1e-9, Approx(0.0), False),
            ("ARBK(50, 50)", StrRe(r"ARBK\(\d+, \d+\)"), True),
            ("ARBK(50, 50) ", StrRe(r"ARBK\(\d+, \d+\)"), False),
            ({"a": 1}, {"a": ANYINT}, True),
            ({"a": 1, "b": 2}, {"a": ANYINT}, False),
        ],
    )
    def test_match_value(self, got, expected, result):
        assert match_value(got, expected) is result

    @pytest.mark.parametrize(
        "spec,result",
        [pytest.param(spec, result, id=repr(spec)) for (spec, result) in RECORD_SPECS],
    )
    def test_record_matching(self, spec, result):
        if result:
            self.assertRecordMatch(RECORD, spec)
        else:
            with pytest.raises(AssertionError):
                self.assertRecordMatch(RECORD, spec)

    def test_record_matching_message(self):
        with pytest.raises(AssertionError, match="expected record to match"):
            self.assertRecordMatch(RECORD, {"method": "GRBK", **ANYDICT})
        with pytest.raises(AssertionError, match="^run 3: ARBK"):
            self.assertRecordMatch(
                RECORD,
                {"method": "GRBK", **ANYDICT},
                fail_msg="run {}: {got[method]}",
                extra_format=(3,),
            )

    def test_unsupported_operator(self):
        class Custom(cases.patma.Operator):
            pass

        with pytest.raises(NotImplementedError):
            match_value(1, Custom())


class MatrixAssertionsTestCase(cases._KmeqTestCase):
    def test_matrix_close(self):
        m = np.arange(6.0).reshape(2, 3)
        self.assertMatrixClose(m, m + 1e-13)
        with pytest.raises(AssertionError, match="differ by up to 1.000e-03"):
            self.assertMatrixClose(m, m + 1e-3)
        with pytest.raises(AssertionError, match="shape"):
            self.assertMatrixClose(m, m.T)

    def test_orthonormal_columns(self):
        (q, _) = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 3)))
        self.assertOrthonormalColumns(q)
        with pytest.raises(AssertionError, match="not orthonormal"):
            self.assertOrthonormalColumns(2 * q)

    def test_penrose(self):
        m = np.random.default_rng(1).standard_normal((5, 3))
        self.assertPenrose(m, np.linalg.pinv(m))
        with pytest.raises(AssertionError, match="Penrose condition 1"):
            self.assertPenrose(m, 2 * np.linalg.pinv(m))


class MarkersTestCase(cases._KmeqTestCase):
    def test_mark_methods(self):
        @cases.mark_methods("ARBK", "CME-RK", "LSPIA")
        def f():
            pass

        names = {mark.name for mark in f.pytestmark}
        assert names == {"arbk", "cme_rk", "gradient"}

    def test_mark_methods_unknown(self):
        with pytest.raises(ValueError):
            cases.mark_methods("SOR")
