import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalbandit.algorithms import (
    LinUCBParams,
    PooledDataset,
    default_explore_len,
    detmax_action,
    detmax_index,
    greedy_decide,
    linucb_decide,
    pooled_ols,
    run_algorithm,
    run_greedy,
    run_linucb_m,
    run_metc,
)
from coalbandit.algorithms.pooling import detmax_values, solve_ridge
from coalbandit.bandit_env import ProblemInstance, StaticProfile
from coalbandit.errors import InvalidConfigError, InvalidInputError, SingularDesignError
from coalbandit.instances import make_cyclic_synthetic
from coalbandit.rng import RngStream

from support import gap_instance, heterogeneous_instance


def _histories(result):
    return {
        a: [(np.asarray(x), float(y)) for x, y in zip(traj.actions, traj.rewards)]
        for a, traj in result.trajectories.items()
    }


# detmax

def test_detmax_prefers_unexplored_direction():
    e = np.eye(2)
    gram = np.outer(e[0], e[0])
    np.testing.assert_allclose(detmax_values(e, gram), [3.0, 4.0])
    assert detmax_index(e, gram) == 1
    np.testing.assert_array_equal(detmax_action(e, gram), e[1])


def test_detmax_singleton_and_ties():
    assert detmax_index(np.array([[0.3, -0.2]]), np.zeros((2, 2))) == 0
    dup = np.array([[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]])
    assert detmax_index(dup, np.zeros((2, 2))) == 0
    assert detmax_index(dup, np.diag([0.0, 5.0])) == 1


def test_detmax_empty_set():
    with pytest.raises(InvalidInputError):
        detmax_index(np.zeros((0, 2)), np.zeros((2, 2)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), K=st.integers(1, 6), d=st.integers(1, 4))
def test_detmax_matches_explicit_determinants(seed, K, d):
    rng = np.random.default_rng(seed)
    actions = rng.normal(size=(K, d))
    B = rng.normal(size=(d, d))
    gram = B @ B.T
    dets = detmax_values(actions, gram)
    i = detmax_index(actions, gram)
    assert dets[i] >= dets.max() * (1 - 1e-9)


# pooled OLS

def test_pooled_ols_noiseless_interpolation():
    e = np.eye(2)
    pool = PooledDataset.build([(e[0], 0.7)], [[(e[1], 0.3)]])
    est = pooled_ols(pool, 0.0)
    np.testing.assert_allclose(est.theta_hat, [0.7, 0.3], atol=1e-12)
    np.testing.assert_allclose(est.gram @ est.theta_hat, est.moment, atol=1e-12)


def test_pooled_ols_ridge_zeroes_unexplored_coordinate():
    pool = PooledDataset.build([(np.eye(2)[0], 0.7)], [[]])
    est = pooled_ols(pool, 1e-6)
    assert est.theta_hat[1] == 0.0
    assert est.theta_hat[0] == pytest.approx(0.7, abs=1e-5)


def test_pooled_ols_singular_design():
    pool = PooledDataset.build([(np.eye(2)[0], 0.7)], [[]])
    with pytest.raises(SingularDesignError):
        pooled_ols(pool, 0.0)
    with pytest.raises(SingularDesignError):
        pooled_ols(PooledDataset.build([], []), 0.0, dim=2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(3, 20))
def test_pooled_ols_order_invariance(seed, n):
    rng = np.random.default_rng(seed)
    samples = [(rng.normal(size=3), float(rng.normal())) for _ in range(n)]
    perm = rng.permutation(n)
    a = pooled_ols(PooledDataset.build(samples, [[]] * n), 0.5)
    b = pooled_ols(PooledDataset.build([samples[i] for i in perm], [[]] * n), 0.5)
    np.testing.assert_allclose(a.theta_hat, b.theta_hat, atol=1e-12)
    assert np.isfinite(np.linalg.cond(a.gram))
    # Independent oracle: lstsq on the ridge-augmented system.
    X = np.array([x for x, _ in samples])
    y = np.array([v for _, v in samples])
    Xa = np.vstack([X, math.sqrt(0.5) * np.eye(3)])
    ya = np.concatenate([y, np.zeros(3)])
    np.testing.assert_allclose(a.theta_hat, np.linalg.lstsq(Xa, ya, rcond=None)[0], atol=1e-10)


def test_pooled_dataset_drops_attribution():
    e = np.eye(2)
    p = PooledDataset.build([(e[0], 1.0)], [[(e[1], 2.0), (e[0], 3.0)]])
    q = PooledDataset.build([(e[0], 1.0)], [[(e[0], 3.0), (e[1], 2.0)]])
    assert p == q
    with pytest.raises(InvalidInputError):
        PooledDataset.build([(e[0], 1.0)], [])


# M-ETC

def test_default_explore_len():
    assert default_explore_len(1024) == 102
    for n in (2, 3, 10):
        assert default_explore_len(n ** 3) == n * n
    for T in range(2, 3000, 37):
        n = default_explore_len(T)
        assert n ** 3 >= T * T > (n - 1) ** 3


def test_metc_exploration_ignores_noise_seed():
    inst = make_cyclic_synthetic()
    a = run_metc([0, 1, 2], inst, rng=RngStream(1))
    b = run_metc([0, 1, 2], inst, rng=RngStream(2))
    T0 = a.diagnostics["explore_len"]
    for agent in (0, 1, 2):
        assert np.array_equal(
            a.trajectories[agent].action_indices[:T0], b.trajectories[agent].action_indices[:T0]
        )
    assert not np.array_equal(a.trajectories[0].rewards, b.trajectories[0].rewards)


def test_metc_exploration_depends_only_on_own_actions():
    # An agent's exploration sequence is the same whatever coalition it sits in.
    inst = make_cyclic_synthetic()
    solo = run_metc([1], inst, explore_len=60, rng=RngStream(0))
    group = run_metc([0, 1, 3], inst, explore_len=60, rng=RngStream(5))
    assert np.array_equal(
        solo.trajectories[1].action_indices[:60], group.trajectories[1].action_indices[:60]
    )


def test_metc_noiseless_recovers_theta():
    from coalbandit.instances import SyntheticSpec, make_synthetic

    inst = make_synthetic(SyntheticSpec(noise_std=0.0, horizon=400))
    res = run_metc(list(range(5)), inst, explore_len=30, ridge=0.0, rng=RngStream(0))
    np.testing.assert_allclose(res.diagnostics["theta_hat"], inst.theta_star, atol=1e-10)
    for traj in res.trajectories.values():
        assert np.all(traj.gaps[30:] == 0.0)


def test_metc_config_errors():
    inst = gap_instance([0.0, 0.2], horizon=10)
    with pytest.raises(InvalidConfigError):
        run_metc([0], inst, explore_len=10)
    with pytest.raises(InvalidConfigError):
        run_metc([0], inst, explore_len=0)


def test_metc_larger_coalition_not_worse():
    inst = heterogeneous_instance(horizon=1024)
    reps = 50
    for sub, sup in [((0,), (0, 1)), ((0,), (0, 1, 2)), ((0, 1), (0, 1, 2))]:
        small = np.array([[run_metc(sub, inst, rng=RngStream(2024).for_run(1, r)).final_regret(a)
                           for a in sub] for r in range(reps)])
        big = np.array([[run_metc(sup, inst, rng=RngStream(2024).for_run(2, r)).final_regret(a)
                         for a in sub] for r in range(reps)])
        se = np.hypot(small.std(0, ddof=1), big.std(0, ddof=1)) / np.sqrt(reps)
        assert np.all(big.mean(0) <= small.mean(0) + 3 * se + 1e-12)


# LinUCB

def _reference_linucb(inst, agent, params, noise):
    """Straight single-agent LinUCB from the textbook formula."""
    d = inst.dim
    V = params.ridge * np.eye(d)
    b = np.zeros(d)
    picks = []
    for t in range(1, inst.horizon + 1):
        X = inst.action_set(agent, t).actions
        theta = np.linalg.solve(V, b)
        beta = inst.noise_std * math.sqrt(
            2 * math.log(1 / params.delta) + np.linalg.slogdet(V)[1] - d * math.log(params.ridge)
        ) + math.sqrt(params.ridge) * params.theta_bound
        scores = [x @ theta + beta * math.sqrt(x @ np.linalg.solve(V, x)) for x in X]
        i = int(np.argmax(scores))
        picks.append(i)
        y = X[i] @ inst.theta_star + noise[t - 1]
        V += np.outer(X[i], X[i])
        b += X[i] * y
    return picks


def test_linucb_size_one_matches_reference():
    from coalbandit.algorithms.base import draw_noise
    from coalbandit.instances import SyntheticSpec, make_synthetic

    inst = make_synthetic(SyntheticSpec(horizon=120))
    params = LinUCBParams()
    rng = RngStream(3)
    res = run_linucb_m([2], inst, params, rng)
    noise = draw_noise(inst, rng, 2, inst.horizon)
    assert res.trajectories[2].action_indices.tolist() == _reference_linucb(inst, 2, params, noise)


def test_linucb_gram_eigenvalues_non_decreasing():
    inst = make_cyclic_synthetic()
    res = run_linucb_m([0, 1], inst, rng=RngStream(0), record_gram_eigs=True)
    eigs = res.diagnostics["gram_eigenvalues"]
    assert np.all(np.diff(eigs, axis=0) >= -1e-9)


def test_linucb_pair_not_worse_than_singleton():
    inst = gap_instance([0.0, 0.2, 0.5], num_agents=2, horizon=400)
    reps = 20
    pair = [run_linucb_m([0, 1], inst, rng=RngStream(5).for_run(3, r)).final_regret(0) for r in range(reps)]
    solo = [run_linucb_m([0], inst, rng=RngStream(5).for_run(1, r)).final_regret(0) for r in range(reps)]
    se = np.hypot(np.std(pair, ddof=1), np.std(solo, ddof=1)) / np.sqrt(reps)
    assert np.mean(pair) <= np.mean(solo) + 3 * se


def test_linucb_params_validation():
    with pytest.raises(InvalidConfigError):
        LinUCBParams(delta=0)
    with pytest.raises(InvalidConfigError):
        LinUCBParams(ridge=0)


# Greedy

def test_greedy_oracle_prior_has_zero_regret():
    from coalbandit.instances import SyntheticSpec, make_synthetic

    inst = make_synthetic(SyntheticSpec(noise_std=0.0, horizon=200))
    res = run_greedy(range(5), inst, rng=RngStream(0), prior=inst.theta_star)
    assert res.total_regret == 0.0


def test_greedy_one_dimension_switches_after_first_sample():
    inst = ProblemInstance(np.array([0.5]), StaticProfile([np.array([[1.0], [2.0]])]), 20, 0.0)
    res = run_greedy([0], inst, rng=RngStream(0))
    idx = res.trajectories[0].action_indices
    assert idx[0] == 0  # theta_hat = 0 ties, lowest index
    assert np.all(idx[1:] == 1)


def test_greedy_rejects_bad_config():
    inst = gap_instance([0.0, 0.2])
    with pytest.raises(InvalidConfigError):
        run_greedy([0], inst, ridge=0.0)
    with pytest.raises(InvalidConfigError):
        run_greedy([0], inst, warmup=-1)


# Decision functions against the incremental runners, and pool anonymity

@pytest.mark.parametrize("algo", ["linucb", "greedy"])
def test_decide_functions_reproduce_runs(algo):
    inst = make_cyclic_synthetic().with_horizon(40)
    members = [0, 1, 3]
    if algo == "linucb":
        params = LinUCBParams()
        res = run_linucb_m(members, inst, params, RngStream(6))
        decide = lambda pool, X: linucb_decide(pool, X, params, inst.noise_std)  # noqa: E731
    else:
        res = run_greedy(members, inst, 1.0, RngStream(6))
        decide = lambda pool, X: greedy_decide(pool, X, 1.0)  # noqa: E731
    hist = _histories(res)
    for t in range(1, 41, 7):
        for a in members:
            pool = PooledDataset.from_histories(a, hist, t - 1)
            X = inst.action_set(a, t).actions
            assert decide(pool, X) == res.trajectories[a].action_indices[t - 1]


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), steps=st.integers(1, 12))
def test_relabelled_pools_give_same_action(seed, steps):
    rng = np.random.default_rng(seed)
    d = 3
    own = [(rng.normal(size=d), float(rng.normal())) for _ in range(steps)]
    partners = {b: [(rng.normal(size=d), float(rng.normal())) for _ in range(steps)] for b in (1, 2, 3)}
    order = rng.permutation([1, 2, 3])
    by_agent = [[partners[b][s] for b in (1, 2, 3)] for s in range(steps)]
    shuffled = [[partners[b][s] for b in order] for s in range(steps)]
    p = PooledDataset.build(own, by_agent)
    q = PooledDataset.build(own, shuffled)
    X = rng.normal(size=(5, d))
    assert linucb_decide(p, X, LinUCBParams(), 1.0) == linucb_decide(q, X, LinUCBParams(), 1.0)
    assert greedy_decide(p, X, 1.0) == greedy_decide(q, X, 1.0)
    est_p, est_q = pooled_ols(p, 1.0), pooled_ols(q, 1.0)
    np.testing.assert_allclose(est_p.theta_hat, est_q.theta_hat, atol=1e-12)


def test_solve_ridge_rejects_negative():
    with pytest.raises(InvalidInputError):
        solve_ridge(np.eye(2), np.zeros(2), -1.0)


def test_run_algorithm_dispatch():
    inst = gap_instance([0.0, 0.2], num_agents=2, horizon=30)
    for name in ("mul+ucb", "mul+etc", "mul+egreedy", "metc", "linucb-m", "greedy"):
        res = run_algorithm(name, [0, 1], inst, RngStream(0))
        assert set(res.trajectories) == {0, 1}
        assert all(len(tr) == 30 for tr in res.trajectories.values())
    with pytest.raises(InvalidConfigError):
        run_algorithm("oracle", [0], inst, RngStream(0))
