import math

import numpy as np
import pytest

from conftest import table1, table3
from contagion_is import ConfigurationError, Variant, build_policy, optimality_report, run_batches, summarize
from contagion_is.estimate import bound_rate_for


def test_summarize_known_array():
    w = np.array([[1.0, 0.0, 3.0], [0.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
    st = summarize(w, n=10)
    means = np.array([4 / 3, 2 / 3, 1.0])
    assert st.estimate == pytest.approx(1.0)
    assert st.rel_error == pytest.approx(np.std(means, ddof=1) / 1.0)
    assert st.second_moment == pytest.approx(17 / 9)
    assert st.emp_rate == pytest.approx(-math.log(17 / 9) / 10)
    assert st.hits == 6 and st.samples == 9 and not st.no_hits
    assert st.standard_error == pytest.approx(np.std(means, ddof=1) / math.sqrt(3))


def test_summarize_no_hits():
    st = summarize(np.zeros((4, 5)), n=10)
    assert st.no_hits and st.estimate == 0.0
    assert math.isnan(st.rel_error) and math.isnan(st.emp_rate)


def test_summarize_shape_checks():
    with pytest.raises(ConfigurationError):
        summarize(np.ones((1, 5)), n=10)
    with pytest.raises(ConfigurationError):
        summarize(np.ones(5), n=10)


def test_run_batches_reproducible():
    spec = table1(0.15)
    pol = build_policy(spec, Variant.OPTIMAL_1D)
    a = run_batches(spec, pol, 5, 200, seed=7)
    b = run_batches(spec, pol, 5, 200, seed=7, workers=3)
    np.testing.assert_array_equal(a.batch_means, b.batch_means)
    c = run_batches(spec, pol, 5, 200, seed=8)
    assert not np.array_equal(a.batch_means, c.batch_means)


def test_bound_rate_only_for_one_dimensional_models():
    spec = table1(0.2)
    pol = build_policy(spec, Variant.OPTIMAL_1D)
    assert bound_rate_for(spec, pol) == pytest.approx(2 * 0.14372319827328756, rel=1e-9)
    s3 = table3(0.2)
    assert bound_rate_for(s3, build_policy(s3, Variant.A_STAR)) is None


def test_optimality_report_near_twice_the_rate():
    spec = table1(0.2)
    pol = build_policy(spec, Variant.OPTIMAL_1D)
    rep = optimality_report(run_batches(spec, pol, 20, 2000, seed=1), pol, spec)
    assert rep.consistent
    assert abs(rep.gap_to_bound) < 5 / 125
    assert abs(rep.emp_rate - rep.optimal_rate) < 5 / 125


def test_optimality_report_without_hits():
    spec = table1(0.3)
    pol = build_policy(spec, "none")
    rep = optimality_report(run_batches(spec, pol, 2, 100, seed=1), pol, spec)
    assert rep.insufficient_data and rep.consistent is None


def test_relative_error_convention_for_plain_monte_carlo():
    from contagion_is import ModelSpec, exact_hit_probability

    spec = ModelSpec(a=(0.01, 0.05), w=(0.75, 0.25), b=5.0, n=8, horizon=5.0, threshold=0.25)
    p = exact_hit_probability(spec)
    N = 200
    st = run_batches(spec, build_policy(spec, "none"), 400, N, seed=3)
    assert st.rel_error == pytest.approx(math.sqrt((1 - p) / (N * p)), rel=0.1)
