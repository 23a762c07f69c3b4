import math

import numpy as np
import pytest

import oracles
from conftest import table1, table3
from contagion_is import ConfigurationError, ModelSpec, RngStreamSpec, Variant, build_policy, sample_path
from contagion_is.simulate import simulate_many, stream_uniforms


@pytest.mark.parametrize("seed,batch,sample", [(1, 0, 0), (1, 3, 17), (2**64 - 1, 7, 123456), (0, 99, 4999)])
def test_streams_match_reference_generator(seed, batch, sample):
    got = stream_uniforms(RngStreamSpec(seed, batch, sample), 5)
    np.testing.assert_array_equal(got, oracles.reference_uniforms(seed, batch, sample, 5))


def test_streams_differ_between_indices():
    u = [stream_uniforms(RngStreamSpec(1, b, s), 1)[0] for b in range(4) for s in range(4)]
    assert len(set(u)) == 16


@pytest.mark.parametrize(
    "spec,variant",
    [(table1(0.2), Variant.OPTIMAL_1D), (table1(0.1), Variant.NONE),
     (table3(0.2), Variant.A_STAR), (table3(0.2, coupling="group"), Variant.A_STAR)],
)
def test_kernel_matches_reference_paths(spec, variant):
    pol = build_policy(spec, variant)
    for sample in range(6):
        got = sample_path(spec, pol, RngStreamSpec(5, 2, sample))
        hit, lr, jumps = oracles.reference_path(
            spec.a, spec.group_sizes, spec.b, spec.n, spec.hit_count, spec.horizon, spec.coupling,
            pol.c, pol.a_eff or 1.0, 5, 2, sample,
        )
        assert got.hit == hit and got.jumps == jumps
        assert got.log_lr == pytest.approx(lr, rel=1e-12, abs=1e-12)


def test_single_path_agrees_with_batch_arrays():
    spec = table1(0.2)
    pol = build_policy(spec, Variant.OPTIMAL_1D)
    arr = simulate_many(spec, pol, 3, 10, seed=9)
    one = sample_path(spec, pol, RngStreamSpec(9, 2, 4))
    i = 2 * 10 + 4
    assert one.hit == arr.hit[i] and one.log_lr == arr.log_lr[i] and one.stop_time == arr.stop_time[i]


@pytest.mark.parametrize("workers", [2, 3, 7])
def test_output_independent_of_worker_count(workers):
    spec = table3(0.2)
    pol = build_policy(spec, Variant.A_STAR)
    ref = simulate_many(spec, pol, 4, 250, seed=42, workers=1)
    got = simulate_many(spec, pol, 4, 250, seed=42, workers=workers)
    for name in ("hit", "log_lr", "jumps", "stop_time"):
        np.testing.assert_array_equal(getattr(ref, name), getattr(got, name))


def test_monte_carlo_weights_are_indicators():
    spec = table1(0.1)
    arr = simulate_many(spec, build_policy(spec, "none"), 2, 2000, seed=3)
    w = arr.weights()
    assert set(np.unique(w)) <= {0.0, 1.0}
    assert np.all(arr.log_lr == 0.0)


def test_censored_paths_stop_past_horizon():
    spec = table1(0.3)
    arr = simulate_many(spec, build_policy(spec, "none"), 2, 500, seed=4)
    assert not arr.hit.any()
    assert np.all(arr.stop_time > spec.horizon)


def test_hits_stop_inside_horizon_at_threshold():
    spec = table1(0.2)
    arr = simulate_many(spec, build_policy(spec, Variant.OPTIMAL_1D), 2, 500, seed=4)
    assert arr.hit.any()
    assert np.all(arr.stop_time[arr.hit] <= spec.horizon)
    assert np.all(arr.jumps[arr.hit] == spec.hit_count)


def test_policy_for_other_model_rejected():
    pol = build_policy(table1(0.2), Variant.OPTIMAL_1D)
    with pytest.raises(ConfigurationError):
        simulate_many(table1(0.3), pol, 2, 10, seed=1)


@pytest.mark.parametrize("coupling", ["total", "group"])
@pytest.mark.parametrize("variant", [Variant.NONE, Variant.A_STAR])
def test_small_instance_unbiased(coupling, variant):
    spec = ModelSpec(a=(0.01, 0.05), w=(0.75, 0.25), b=5.0, n=8, horizon=5.0, threshold=0.25, coupling=coupling)
    exact = oracles.dense_hit_probability(spec.a, spec.group_sizes, spec.b, spec.n, spec.horizon,
                                          spec.hit_count, coupling)
    w = simulate_many(spec, build_policy(spec, variant), 20, 2000, seed=12).weights().reshape(20, 2000)
    means = w.mean(axis=1)
    se = means.std(ddof=1) / math.sqrt(len(means))
    assert abs(means.mean() - exact) <= 3 * se
