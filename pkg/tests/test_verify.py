import copy
import json

import numpy as np
import pytest

from opideal.cli import _clean, _norm_report, selftest_battery
from opideal.config import RunConfig
from opideal.spaces import INF
from opideal.summing import OperatorMatrix
from opideal.verify import verify_report

CFG = RunConfig()


def serialized(kind, T, p):
    rep, _ = _norm_report("norm", kind, T, p, CFG)
    return json.loads(json.dumps(_clean(rep), sort_keys=True))


@pytest.fixture(scope="module")
def reports():
    return [serialized(k, T, p) for k, T, p in selftest_battery()]


def test_battery_reverifies(reports):
    for rep in reports:
        v = verify_report(rep, CFG)
        assert v.ok, (rep["kind"], v.notes)
        assert v.lower <= v.upper * (1 + 1e-6) + 1e-9


def test_inflated_lower_bound_detected(reports):
    rep = copy.deepcopy(next(r for r in reports if r["kind"] == "kappa" and r["estimate"]["lower"]))
    rep["estimate"]["lower"] *= 1.5
    v = verify_report(rep, CFG)
    assert not v.ok


def test_deflated_upper_bound_detected(reports):
    for kind in ("pi", "kappa", "qn", "nu^p"):
        rep = copy.deepcopy(next(r for r in reports if r["kind"] == kind))
        rep["estimate"]["upper"] *= 0.5
        assert not verify_report(rep, CFG).ok, kind


def test_tampered_decomposition_detected(reports):
    rep = copy.deepcopy(next(r for r in reports if r["kind"] == "nu_p"))
    left = np.array(rep["estimate"]["witness"]["upper"]["left"]["items"])
    left[0, 0] += 0.3
    rep["estimate"]["witness"]["upper"]["left"]["items"] = left.tolist()
    v = verify_report(rep, CFG)
    assert not v.ok
    assert any("residual" in n for n in v.notes)


def test_operator_swapped_detected(reports):
    rep = copy.deepcopy(next(r for r in reports if r["kind"] == "pi"))
    rep["operator"]["entries"] = (3 * np.array(rep["operator"]["entries"])).tolist()
    assert not verify_report(rep, CFG).ok


def test_infinite_p_reports():
    T = OperatorMatrix.from_array([[1.0, 2.0], [3.0, -1.0]], 2, 1)
    for kind in ("kappa", "pi"):
        assert verify_report(serialized(kind, T, INF), CFG).ok
