import math

import numpy as np
import pytest

from gamenorms.abm import SimConfig
from gamenorms.sensitivity import (
    SweepSpec, aggregate, bootstrap_ci, job_seed, run_sweep, saltelli_sample, sobol_indices,
    sweep_indices,
)

UNIT2 = SweepSpec(names=("a", "b"), ranges=((0.0, 1.0), (0.0, 1.0)), n_base=1024)


def test_count_law():
    assert saltelli_sample(SweepSpec()).shape == (3584, 5)
    assert saltelli_sample(SweepSpec(names=("a",), ranges=((0.0, 1.0),), n_base=2)).shape == (6, 1)


def test_design_ranges_and_structure():
    spec = SweepSpec()
    X = saltelli_sample(spec)
    for j, (lo, hi) in enumerate(spec.ranges):
        assert X[:, j].min() >= lo and X[:, j].max() <= hi
    d = spec.d
    blocks = X.reshape(spec.n_base, d + 2, d)
    A, B = blocks[:, 0], blocks[:, -1]
    for i in range(d):
        ABi = blocks[:, 1 + i]
        np.testing.assert_array_equal(ABi[:, i], B[:, i])
        np.testing.assert_array_equal(np.delete(ABi, i, 1), np.delete(A, i, 1))


def test_degenerate_ranges_constant():
    X = saltelli_sample(SweepSpec(names=("a", "b"), ranges=((0.3, 0.3), (2.0, 2.0)), n_base=4))
    assert np.all(X[:, 0] == 0.3) and np.all(X[:, 1] == 2.0)


def test_design_reproducible():
    np.testing.assert_array_equal(saltelli_sample(SweepSpec(seed=4)), saltelli_sample(SweepSpec(seed=4)))
    assert not np.array_equal(saltelli_sample(SweepSpec(seed=4)), saltelli_sample(SweepSpec(seed=5)))


@pytest.mark.parametrize("kw", [dict(n_base=500), dict(ranges=((1.0, 0.0),) * 5),
                                dict(outputs=("gdp",)), dict(replicates=0),
                                dict(ranges=((0.0, math.inf),) * 5)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        SweepSpec(**kw)


def test_coordinate_function():
    X = saltelli_sample(UNIT2)
    r = sobol_indices(X[:, 0], 2, 1024, B=300)
    np.testing.assert_allclose(r.S1, [1.0, 0.0], atol=0.05)
    np.testing.assert_allclose(r.ST, [1.0, 0.0], atol=0.05)
    assert r.S1_CI[0, 0] > 0.0
    assert r.S1_CI[1, 0] <= 0.0 <= r.S1_CI[1, 1]


def test_additive_function_sums_to_one():
    spec = SweepSpec(names=("a", "b", "c"), ranges=((0, 1),) * 3, n_base=1024)
    X = saltelli_sample(spec)
    y = 2 * X[:, 0] + X[:, 1] ** 2 + 0.5 * np.sin(3 * X[:, 2])
    r = sobol_indices(y, 3, 1024)
    assert r.S1.sum() == pytest.approx(1.0, abs=0.05)
    assert np.all(r.ST_raw >= r.S1_raw - 0.05)


def test_ishigami_reference_values():
    a, b = 7.0, 0.1
    spec = SweepSpec(names=("x1", "x2", "x3"), ranges=((-math.pi, math.pi),) * 3, n_base=4096)
    X = saltelli_sample(spec)
    y = np.sin(X[:, 0]) + a * np.sin(X[:, 1]) ** 2 + b * X[:, 2] ** 4 * np.sin(X[:, 0])
    # analytic decomposition
    D = a ** 2 / 8 + b * math.pi ** 4 / 5 + b ** 2 * math.pi ** 8 / 18 + 0.5
    D1 = b * math.pi ** 4 / 5 + b ** 2 * math.pi ** 8 / 50 + 0.5
    D2 = a ** 2 / 8
    D13 = b ** 2 * math.pi ** 8 * (1 / 18 - 1 / 50)
    r = sobol_indices(y, 3, 4096)
    np.testing.assert_allclose(r.S1, [D1 / D, D2 / D, 0.0], atol=0.05)
    np.testing.assert_allclose(r.ST, [(D1 + D13) / D, D2 / D, D13 / D], atol=0.05)
    assert np.all(r.ST_raw >= r.S1_raw - 0.05)


def test_constant_output_missing():
    r = sobol_indices(np.full(24, 3.0), 4, 4)
    assert np.all(np.isnan(r.S1)) and np.all(np.isnan(r.ST))
    assert r.records()[0]["S1"] is None


def test_bootstrap_degenerate_and_deterministic():
    X = saltelli_sample(UNIT2)
    y = X[:, 0] + 0.3 * X[:, 1]
    r = sobol_indices(y, 2, 1024, B=1)
    np.testing.assert_array_equal(r.S1_CI[:, 0], r.S1_raw)
    np.testing.assert_array_equal(r.S1_CI[:, 1], r.S1_raw)
    a = bootstrap_ci(y, 2, 1024, B=200, seed=0)
    b = bootstrap_ci(y, 2, 1024, B=200, seed=0)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    assert np.all(a[0][:, 0] <= a[0][:, 1])


def test_output_length_checked():
    with pytest.raises(ValueError):
        sobol_indices(np.zeros(5), 2, 4)
    with pytest.raises(ValueError):
        sobol_indices(np.r_[np.zeros(15), np.nan], 2, 4)


def test_job_seed_independent_of_order():
    assert job_seed(0, 3, 1) == job_seed(0, 3, 1)
    assert len({job_seed(0, r, k) for r in range(20) for k in range(3)}) == 60


BASE = SimConfig(n_agents=16, periods=6, track_clustering=False)
SMALL = SweepSpec(n_base=4, replicates=2)


def test_sweep_resume_matches_uninterrupted(tmp_path):
    full = run_sweep(SMALL, BASE)
    assert len(full) == 28 * 2
    part = tmp_path / "partial.csv"
    first = run_sweep(SMALL, BASE, part, max_jobs=13)
    assert len(first) == 13
    resumed = run_sweep(SMALL, BASE, part)
    assert resumed == full
    assert sweep_indices(resumed, SMALL, B=50) == sweep_indices(full, SMALL, B=50)


def test_sweep_parallel_matches_serial():
    spec = SweepSpec(n_base=2, replicates=1)
    assert run_sweep(spec, BASE, workers=2) == run_sweep(spec, BASE)


def test_aggregate_requires_complete():
    with pytest.raises(ValueError):
        aggregate([], SMALL)
