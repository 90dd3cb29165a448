import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalbandit.algorithms import SinglePolicy, UCBPolicy, run_linucb_m, run_single
from coalbandit.algorithms.base import CoalitionRunResult
from coalbandit.assumption_checks import (
    MORE_MERRIER_HEADER,
    RegretCurve,
    WindowGrid,
    check_log_limitation,
    check_more_merrier,
    check_strict_concavity,
    check_symmetry_empirical,
    default_log_constant,
    discrete_derivatives,
    more_merrier_table,
    parse_more_merrier_table,
)
from coalbandit.coalition_game import RegretTable
from coalbandit.coalition_game.game import members_of
from coalbandit.errors import IncompleteTableError, InvalidInputError
from coalbandit.instances import make_cyclic_synthetic
from coalbandit.rng import RngStream


def curve_of(values):
    return RegretCurve(np.asarray(values, dtype=float))


def unit_grid(T):
    return WindowGrid.product(range(4, T - 1), [1], [1])


# curves and windows

def test_curve_invariants():
    with pytest.raises(InvalidInputError):
        curve_of([1.0, 2.0])
    with pytest.raises(InvalidInputError):
        curve_of([0.0])
    c = RegretCurve.from_samples(np.ones((3, 4)))
    assert c.horizon == 4 and c.values[0] == 0.0 and c.num_reps == 3


def test_discrete_derivatives_hand_example():
    assert discrete_derivatives(curve_of([0, 3, 5, 6]), 0, 1, 1) == (3.0, -1.0)
    with pytest.raises(InvalidInputError):
        discrete_derivatives(curve_of([0, 3, 5, 6]), 1, 1, 2)


def test_discrete_derivatives_linear_and_constant():
    lin = RegretCurve.from_function(lambda t: 2.5 * t, 50)
    const = curve_of([0.0] + [4.0] * 50)
    for t, g, h in [(1, 1, 1), (5, 3, 7), (20, 10, 10)]:
        assert discrete_derivatives(lin, t, g, h)[1] == pytest.approx(0.0, abs=1e-12)
        assert discrete_derivatives(const, t, g, h) == (0.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.integers(0, 20), g=st.integers(1, 10), h=st.integers(1, 10))
def test_first_derivative_reconstructs_values(seed, t, g, h):
    values = np.concatenate([[0.0], np.cumsum(np.random.default_rng(seed).uniform(0, 1, 60))])
    curve = curve_of(values)
    r1, _ = discrete_derivatives(curve, t, g, h)
    assert abs(values[t] + h * r1 - values[t + h]) <= 1e-12 * max(1.0, values[t + h])


def test_window_grid_default_and_validation():
    grid = WindowGrid.default(1024)
    assert len(grid) > 0
    grid.validate(1024)
    assert {g for _, g, _ in grid} == {32, 64, 128}
    assert all(t >= 8 for t, _, _ in grid)
    with pytest.raises(InvalidInputError):
        WindowGrid.product([100], [10], [10]).validate(110)
    with pytest.raises(InvalidInputError):
        WindowGrid([]).validate(100)


# concavity

def test_sqrt_curve_is_strictly_concave():
    T = 200
    report = check_strict_concavity(RegretCurve.from_function(lambda t: 10 * np.sqrt(t), T), unit_grid(T))
    assert report.passed
    assert report.stats["max_r2"] < 0
    assert report.stats["upsilon_floor"] > 0


def test_linear_curve_fails_every_window():
    T = 100
    grid = unit_grid(T)
    report = check_strict_concavity(RegretCurve.from_function(lambda t: 3.0 * t, T), grid)
    assert len(report.violations) == len(grid)


def test_convex_curve_records_positive_r2():
    T = 100
    report = check_strict_concavity(RegretCurve.from_function(lambda t: t.astype(float) ** 2, T), unit_grid(T))
    assert not report.passed
    assert all(v.value > 0 for v in report.violations)


# log limitation

def test_log_curve_within_log_limitation():
    T = 400
    curve = RegretCurve.from_function(lambda t: np.log(np.maximum(t, 1)), T)
    assert check_log_limitation(curve, 1.0, 0.1, unit_grid(T)).passed


def test_cliff_fails_log_limitation():
    T = 100
    t = np.arange(T + 1, dtype=float)
    values = np.where(t <= 50, 2.0 * t, 100.0)
    report = check_log_limitation(curve_of(values), 1.0, 0.1, unit_grid(T))
    assert [v.t for v in report.violations] == [49]


def test_constant_curve_passes_log_limitation():
    curve = curve_of([0.0] + [7.0] * 100)
    assert check_log_limitation(curve, 1.0, 0.1, unit_grid(100)).passed
    assert default_log_constant(25) == 250


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), c1=st.floats(0.01, 10), c2=st.floats(0.01, 10), k1=st.floats(0, 3), k2=st.floats(0, 3))
def test_checks_are_monotone_in_thresholds(seed, c1, c2, k1, k2):
    rng = np.random.default_rng(seed)
    samples = np.cumsum(rng.uniform(0, 1, size=(5, 120)) * np.linspace(1, 0.2, 120), axis=1)
    curve = RegretCurve.from_samples(samples)
    grid = WindowGrid.product([5, 20, 40, 80], [4, 10], [4, 10])
    lo_c, hi_c = sorted((c1, c2))
    lo_k, hi_k = sorted((k1, k2))
    strict = check_log_limitation(curve, lo_c, 0.1, grid, k=lo_k)
    loose = check_log_limitation(curve, hi_c, 0.1, grid, k=hi_k)
    assert len(loose.violations) <= len(strict.violations)
    if strict.passed:
        assert loose.passed
    # A window is flagged only when r2 clears zero by k standard errors, so larger k is looser.
    assert len(check_strict_concavity(curve, grid, k=hi_k).violations) <= len(
        check_strict_concavity(curve, grid, k=lo_k).violations
    )


# more the merrier

def _table(n, fn, se=0.1):
    entries = {(m, a): (fn(m, a), se, 10) for m in range(1, 2**n) for a in members_of(m)}
    return RegretTable.from_entries(n, entries)


def test_more_merrier_single_violation_ratio():
    values = {(1, 0): 5.0, (2, 1): 5.0, (3, 0): 6.0, (3, 1): 4.0}
    table = _table(2, lambda m, a: values[(m, a)])
    report = check_more_merrier(table, k=0.0)
    assert len(report.violations) == 1
    v = report.violations[0]
    assert (v.agent, v.coalition, v.sub_coalition) == (0, 3, 1)
    assert v.ratio == pytest.approx(1.2)


def test_more_merrier_monotone_table_passes():
    table = _table(4, lambda m, a: 10.0 / bin(m).count("1") + a)
    report = check_more_merrier(table)
    assert report.passed
    # Pairs (a, S ⊊ Q) with a in S: 4 agents x sum over Q' of (2^|Q'| - 1).
    assert report.checked == 4 * sum(2 ** bin(q).count("1") - 1 for q in range(8))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4))
def test_more_merrier_k_extremes(seed, n):
    rng = np.random.default_rng(seed)
    table = _table(n, lambda m, a: float(rng.uniform(0, 10)), se=0.5)
    assert check_more_merrier(table, k=math.inf).passed
    increasing = _table(n, lambda m, a: float(bin(m).count("1")), se=0.5)
    assert not check_more_merrier(increasing, k=0.0).passed


def test_more_merrier_requires_complete_table():
    table = RegretTable.from_entries(2, {(3, 0): (1.0, 0.0, 1), (3, 1): (1.0, 0.0, 1)})
    with pytest.raises(IncompleteTableError):
        check_more_merrier(table)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 4))
def test_more_merrier_table_is_lossless(seed, n):
    rng = np.random.default_rng(seed)
    table = _table(n, lambda m, a: float(rng.uniform(0, 10)), se=float(rng.uniform(0, 1)))
    report = check_more_merrier(table)
    labels = [f"g{i}" for i in range(n)]
    for lab in (None, labels):
        text = more_merrier_table(report, lab)
        lines = text.splitlines()
        assert tuple(c.strip() for c in lines[0].split("|")) == MORE_MERRIER_HEADER
        assert len(lines) == len(report.violations) + 1
        assert parse_more_merrier_table(text, lab) == report.violations
    with pytest.raises(InvalidInputError):
        parse_more_merrier_table("nope\n")


# trajectory symmetry

def _linucb_runner(coalition, instance, rng):
    return run_linucb_m(coalition, instance, rng=rng)


def test_symmetry_identity_same_seed_is_exact():
    inst = make_cyclic_synthetic().with_horizon(64)
    report = check_symmetry_empirical(_linucb_runner, inst, range(5), 3, seed=4, permuted_seed=4)
    assert report.passed
    np.testing.assert_array_equal(report.stats["original"], report.stats["relabeled"])


def test_symmetry_cyclic_instance_passes():
    inst = make_cyclic_synthetic().with_horizon(256)
    report = check_symmetry_empirical(_linucb_runner, inst, [1, 2, 3, 4, 0], 20, tol=3.0, seed=11)
    assert report.passed, report.violations


class _Stubborn(SinglePolicy):
    """Always plays the last action."""

    def select(self) -> int:
        return self.num_actions - 1


def _parity_runner(coalition, instance, rng):
    # Even-indexed agents learn, odd-indexed agents never do.
    trajectories = {}
    for a in coalition:
        policy = UCBPolicy() if a % 2 == 0 else _Stubborn()
        trajectories[a] = run_single(policy, instance, a, instance.horizon, rng)
    return CoalitionRunResult(tuple(coalition), trajectories)


def test_symmetry_detects_parity_conditioned_runner():
    inst = make_cyclic_synthetic().with_horizon(200)
    report = check_symmetry_empirical(_parity_runner, inst, [1, 2, 3, 4, 0], 10, seed=2)
    assert not report.passed


def test_symmetry_rejects_zero_reps():
    with pytest.raises(InvalidInputError):
        check_symmetry_empirical(_linucb_runner, make_cyclic_synthetic(), range(5), 0)


def test_curve_from_runs():
    inst = make_cyclic_synthetic().with_horizon(30)
    runs = [run_linucb_m([0, 1], inst, rng=RngStream(0).for_run(3, r)) for r in range(4)]
    curve = RegretCurve.from_runs(runs, 1)
    expected = np.mean([r.regret_curve(1) for r in runs], axis=0)
    np.testing.assert_allclose(curve.values[1:], expected, atol=1e-12)
    assert curve.num_reps == 4
