import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalbandit.algorithms import (
    EpsilonGreedyPolicy,
    ExploreThenCommitPolicy,
    UCBPolicy,
    run_mul,
    run_single,
)
from coalbandit.errors import InvalidInputError, UnsupportedInstanceError
from coalbandit.instances import make_cyclic_synthetic
from coalbandit.rng import RngStream

from support import gap_instance


def test_m1_is_bit_identical_to_single():
    inst = gap_instance([0.0, 0.2, 0.5], num_agents=2, horizon=300)
    for policy in (UCBPolicy(), ExploreThenCommitPolicy(5), EpsilonGreedyPolicy(0.2)):
        stream = RngStream(3).for_run(2, 4)
        mul = run_mul(policy, [1], inst, stream)
        single = run_single(policy, inst, 1, 300, stream)
        assert mul.trajectories[1].identical_to(single)
        assert np.array_equal(mul.trajectories[1].gaps, single.gaps)


def test_tau_bar_bounds_small_case():
    inst = gap_instance([0.0, 0.2, 0.5], num_agents=2, horizon=10)
    res = run_mul(UCBPolicy(), [0, 1], inst, RngStream(0))
    assert 14 <= res.diagnostics["tau_bar"] <= 20


@settings(max_examples=40, deadline=None)
@given(
    m=st.integers(1, 4),
    K=st.integers(1, 5),
    T=st.integers(1, 60),
    seed=st.integers(0, 2**32 - 1),
    policy=st.sampled_from([UCBPolicy(), ExploreThenCommitPolicy(2), EpsilonGreedyPolicy(0.3)]),
)
def test_buffer_conservation_and_legality(m, K, T, seed, policy):
    gaps = np.linspace(0.0, 0.6, K)
    inst = gap_instance(gaps, num_agents=m, horizon=T)
    res = run_mul(policy, list(range(m)), inst, RngStream(seed))
    d = res.diagnostics
    assert d["filled"] == m * T
    assert d["buffer_residue"] == d["filled"] - d["tau_bar"]
    assert m * T - m * K <= d["tau_bar"] <= m * T
    assert d["buffer_residue"] <= m * K
    first = res.trajectories[0].action_indices
    for a in range(m):
        assert np.array_equal(res.trajectories[a].action_indices, first)
        assert len(res.trajectories[a]) == T


def test_buffers_are_consumed_fifo():
    # Per action, the policy sees rewards in play order with agents in coalition order.
    inst = gap_instance([0.0, 0.3], num_agents=2, horizon=30)
    seen = {0: [], 1: []}

    class Spy(UCBPolicy):
        def update(self, index, reward):
            seen[index].append(reward)
            super().update(index, reward)

    res = run_mul(Spy(), [0, 1], inst, RngStream(8))
    idx = res.trajectories[0].action_indices
    for k in (0, 1):
        steps = np.flatnonzero(idx == k)
        produced = [res.trajectories[a].rewards[t] for t in steps for a in (0, 1)]
        assert seen[k] == produced[: len(seen[k])]
        assert len(produced) - len(seen[k]) == res.diagnostics["buffer_residue_by_action"][k]


def test_mul_rejects_heterogeneous_sets():
    with pytest.raises(UnsupportedInstanceError):
        run_mul(UCBPolicy(), [0, 1], make_cyclic_synthetic(), RngStream(0))


def test_mul_rejects_empty_coalition():
    inst = gap_instance([0.0, 0.2], num_agents=2)
    with pytest.raises(InvalidInputError):
        run_mul(UCBPolicy(), [], inst, RngStream(0))


def test_mul_regret_close_to_single_agent_smoke():
    # m=2, K=3: coalition regret at T tracks the single agent at 2T within mK
    inst = gap_instance([0.0, 0.2, 0.5], num_agents=2, horizon=500)
    mul, sin = [], []
    for r in range(20):
        mul.append(run_mul(UCBPolicy(), [0, 1], inst, RngStream(1).for_run(3, r)).total_regret)
        sin.append(run_single(UCBPolicy(), inst, 0, 1000, RngStream(2).for_run(1, r)).gaps.sum())
    se = np.hypot(np.std(mul, ddof=1), np.std(sin, ddof=1)) / np.sqrt(20)
    assert abs(np.mean(mul) - np.mean(sin)) <= 6 + 3 * se
