import json

import numpy as np
import pytest

from densitybayes.checks import REGISTRY, report_json, run_checks, substream

MODULES = ("symmat", "gleason", "odot", "tensor", "conditional", "bayes", "em_invert", "dynamics")


def test_every_module_has_properties():
    assert {p.module for p in REGISTRY.values()} == set(MODULES)


def test_full_suite_passes():
    report = run_checks(seed=0, trials=100)
    assert report["passed"], report["failures"]
    for row in report["properties"]:
        assert row["worst_residual"] <= row["threshold"]
        assert row["trials"] >= 1


def test_inject_bad_names_property():
    report = run_checks(seed=0, trials=20, inject_bad=True)
    assert not report["passed"]
    assert report["failures"] == ["gleason.density_trace"]
    row = next(r for r in report["properties"] if r["name"] == "gleason.density_trace")
    assert row["worst_residual"] == pytest.approx(0.1, abs=1e-12)


def test_byte_identical():
    a = report_json(run_checks(seed=5, trials=10))
    b = report_json(run_checks(seed=5, trials=10))
    assert a == b
    json.loads(a)


def test_substreams_independent_of_selection():
    whole = run_checks(seed=3, trials=10)
    one = run_checks(seed=3, trials=10, suite="odot.determinant")
    row = next(r for r in whole["properties"] if r["name"] == "odot.determinant")
    assert one["properties"] == [row]


def test_substream_names_differ():
    a = substream(0, "x").random(4)
    b = substream(0, "y").random(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, substream(0, "x").random(4))


def test_module_suite_and_unknown():
    report = run_checks(seed=0, trials=5, suite="tensor")
    assert {r["module"] for r in report["properties"]} == {"tensor"}
    with pytest.raises(ValueError):
        run_checks(suite="nothing")


def test_tolerance_override():
    report = run_checks(seed=0, trials=5, suite="symmat", tol=0.0)
    assert all(r["threshold"] == 0.0 for r in report["properties"])
