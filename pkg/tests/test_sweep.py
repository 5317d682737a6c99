import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcgossip.circle import PI, TWO_PI
from arcgossip.sweep import (
    LinearIncrementState,
    closing_edge_prediction,
    cyclic_sweep,
    escape_scenario,
    geometric_gap_bound,
    iterate_sweeps,
    linear_increment_update,
)

deltas_st = st.lists(
    st.floats(min_value=-PI, max_value=PI, exclude_max=True, allow_nan=False),
    min_size=3, max_size=20,
).map(lambda xs: np.array(xs))


def _brute_sweep(deltas):
    # direct sequential application of the redistribution rule; this is the
    # oracle the closed form is checked against
    d = np.array(deltas, dtype=float)
    n = len(d)
    for k in range(n - 1):
        half = 0.5 * d[k]
        d[k] = 0.0
        d[(k - 1) % n] += half
        d[(k + 1) % n] += half
    return d


def test_linear_update_n3():
    state = LinearIncrementState.from_deltas([1.0, 2.0, 3.0])
    out = linear_increment_update(state, 0)
    assert np.allclose(out.deltas, [0.0, 2.5, 3.5])
    assert out.total == state.total


def test_linear_update_zero_edge_is_noop():
    state = LinearIncrementState.from_deltas([0.5, 0.0, -0.25, 0.75])
    out = linear_increment_update(state, 1)
    assert np.array_equal(out.deltas, state.deltas)


@given(deltas_st, st.integers(min_value=0, max_value=100))
def test_linear_update_conserves_total(deltas, pick):
    state = LinearIncrementState.from_deltas(deltas)
    out = linear_increment_update(state, pick % state.n)
    assert np.sum(out.deltas) == pytest.approx(state.total, abs=1e-12 * state.n)


def test_cyclic_sweep_n3_symbolic():
    # basis vectors give the exact coefficients: halving is exact in floats
    a = cyclic_sweep(LinearIncrementState.from_deltas([1.0, 0.0, 0.0])).deltas
    assert np.array_equal(a, [0.25, 0.0, 0.75])
    b = cyclic_sweep(LinearIncrementState.from_deltas([0.0, 1.0, 0.0])).deltas
    assert np.array_equal(b, [0.5, 0.0, 0.5])
    c = cyclic_sweep(LinearIncrementState.from_deltas([0.0, 0.0, 1.0])).deltas
    assert np.array_equal(c, [0.0, 0.0, 1.0])
    # general (a, b, c) -> (b/2 + a/4, 0, c + 3a/4 + b/2)
    out = cyclic_sweep(LinearIncrementState.from_deltas([1.1, -0.4, 0.3])).deltas
    assert np.allclose(out, [-0.4 / 2 + 1.1 / 4, 0.0, 0.3 + 0.75 * 1.1 - 0.2],
                       atol=1e-15)


def test_cyclic_sweep_zero_fixed_point():
    out = cyclic_sweep(LinearIncrementState.from_deltas(np.zeros(7)))
    assert np.array_equal(out.deltas, np.zeros(7))


def test_closing_edge_prediction_n3():
    assert closing_edge_prediction([1.0, 0.0, 0.0]) == 0.75
    assert closing_edge_prediction([0.0, 1.0, 0.0]) == 0.5
    assert closing_edge_prediction([0.0, 0.0, 1.0]) == 1.0
    assert closing_edge_prediction(np.zeros(3)) == 0.0


def test_closing_edge_uniform_twist_one_sweep():
    # uniform beta on n=3: one sweep gives 2.25 * beta at the closing edge
    beta = TWO_PI / 3
    out = cyclic_sweep(LinearIncrementState.from_deltas(np.full(3, beta)))
    assert out.deltas[-1] == pytest.approx(2.25 * beta, abs=1e-14)
    assert closing_edge_prediction(np.full(3, beta)) == pytest.approx(
        2.25 * beta, abs=1e-14)


@given(deltas_st)
@settings(max_examples=200)
def test_prediction_matches_sweep(deltas):
    scale = max(1.0, float(np.max(np.abs(deltas))) if deltas.size else 1.0)
    pred = closing_edge_prediction(deltas)
    simulated = _brute_sweep(deltas)[-1]
    assert pred == pytest.approx(simulated, abs=1e-12 * scale)


def test_prediction_lower_bound_nonnegative_data():
    for n in range(3, 16):
        rngs = np.random.default_rng(n)
        d = rngs.uniform(0.0, 1.0, n)
        pred = closing_edge_prediction(d)
        lower = d[-1] + 2.0 ** (-(n - 2)) * np.sum(d[:-1])
        assert pred >= lower - 1e-12


def test_prediction_large_n_underflow_safe():
    # far past the underflow of 2^-(n-1-j): the dominant terms survive
    n = 200
    d = np.ones(n)
    pred = closing_edge_prediction(d)
    brute = _brute_sweep(d)[-1]
    assert pred == pytest.approx(brute, abs=1e-12 * n)


@given(deltas_st.filter(lambda d: np.all(d >= 0.0)))
@settings(max_examples=100)
def test_nonnegativity_preserved(deltas):
    state = LinearIncrementState.from_deltas(deltas)
    for k in range(state.n):
        state = linear_increment_update(state, k % state.n)
        assert np.all(state.deltas >= 0.0)


def test_iterate_sweeps_trivial_cases():
    trace, final = iterate_sweeps(LinearIncrementState.from_deltas(np.zeros(5)), 10)
    assert np.array_equal(trace, np.zeros(11))
    with pytest.raises(ValueError):
        iterate_sweeps(LinearIncrementState.from_deltas(np.zeros(5)), -1)


def test_monotone_accumulation_and_bound():
    for n in range(4, 17):
        beta = TWO_PI / n  # uniform twist, winding 1
        state = LinearIncrementState.from_deltas(np.full(n, beta))
        total = state.total
        trace, _ = iterate_sweeps(state, 200)
        assert np.all(np.diff(trace) >= -1e-12)
        gap0 = total - trace[0]
        for m in range(201):
            gap = total - trace[m]
            assert gap <= geometric_gap_bound(n, m, gap0) + 1e-12


def test_escape_scenario_report():
    report = escape_scenario(24, 2, 120, replay_horizon=400_000, seed=5,
                             check_stride=1)
    assert report.first_unsafe_sweep is not None
    # linear probe agrees with the wrapped replay about when the corridor
    # first fails near the closing edge (within a sweep of slack)
    actual_sweep = report.replay_first_crossing_step // (24 - 1)
    assert abs(actual_sweep - report.first_unsafe_sweep) <= 1
    assert report.replay_final_winding == 0
    assert report.replay_winding_zero_step is not None
    # winding trace decreases monotonically at crossings
    trace = report.replay_trace_windings
    assert np.all(np.diff(np.concatenate([[2], trace])) < 0)
    # closing-edge accumulation approaches the conserved total monotonically
    closing = np.array([r.closing_delta for r in report.rows])
    pre = closing[:report.first_unsafe_sweep]
    assert np.all(np.diff(pre) >= -1e-12)


def test_escape_scenario_rejects_zero_winding():
    with pytest.raises(ValueError):
        escape_scenario(24, 0, 10)
