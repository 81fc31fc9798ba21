import numpy as np
import pytest

from cropmarl.base_policy import (
    bellman_residual,
    greedy_policy,
    solve_base_policy,
    solve_value_function,
    value_table_to_csv,
)
from cropmarl.market import MarketRewardFunction, PriceCurve, build_random_mdp
from cropmarl.mdp import (
    InitialDistribution,
    Model,
    TimeGrid,
    TransitionTable,
)
from cropmarl.sim import discounted_returns, simulate

from conftest import make_chain_model, make_zero_reward_model

HARVEST = 1


def single_state_model(horizon=3, reward_value=5.0):
    """One harvestable state; harvesting self-loops and pays every step."""
    trans = np.zeros((horizon, 1, 1), dtype=np.int64)
    reward = MarketRewardFunction(
        PriceCurve.constant([-1.0], [reward_value + 1.0], horizon, 1.0),
        np.array([0]), harvest_action=0,
    )
    return Model(1, TimeGrid(horizon), 1, 1, TransitionTable(trans),
                 InitialDistribution.point_mass(1, 1, 0), reward)


class TestSolveValueFunction:
    def test_chain_hand_induction(self, chain_model):
        vf = solve_value_function(chain_model, 0.9)
        assert vf.value(1, 1) == pytest.approx(98.0)
        assert vf.value(1, 0) == 0.0
        assert vf.value(2, 1) == pytest.approx(98.0)
        assert vf.value(3, 1) == 0.0  # nothing beyond the horizon

    def test_zero_model(self):
        vf = solve_value_function(make_zero_reward_model(), 0.9)
        assert np.all(vf.values == 0.0)

    def test_undiscounted_arithmetic_series(self):
        vf = solve_value_function(single_state_model(horizon=3, reward_value=5.0), 1.0)
        assert vf.value(1, 0) == pytest.approx(15.0)

    def test_gamma_validation(self, chain_model):
        with pytest.raises(ValueError, match="gamma"):
            solve_value_function(chain_model, 0.0)


class TestGreedyPolicy:
    def test_chain_harvests_when_mature(self, chain_model):
        base = solve_base_policy(chain_model, 0.9)
        assert base.action(1, 1) == HARVEST

    def test_zero_model_ties_break_low(self):
        m = make_zero_reward_model()
        base = solve_base_policy(m, 0.9)
        assert np.all(base.act == 0)

    def test_waits_for_the_better_price(self):
        # 98 now vs 300 next step at gamma 0.5: 0.5 * 300 = 150 > 98 -> Wait
        m = make_chain_model(horizon=2, b_by_t=[100.0, 302.0])
        base = solve_base_policy(m, 0.5)
        assert base.action(1, 1) == 0
        assert base.values.value(1, 1) == pytest.approx(150.0)

    def test_greedy_attains_bellman_maximum(self):
        m = build_random_mdp(7, 4, 2, TimeGrid(6), 1, seed=3)
        gamma = 0.85
        base = greedy_policy(m, solve_value_function(m, gamma), gamma)
        for t in range(1, m.horizon + 1):
            for s in range(m.n_states):
                qs = [
                    m.reward.single_agent_reward(t, s, a)
                    + gamma * base.values.value(t + 1, m.transitions.successor(t, s, a))
                    for a in range(m.n_actions)
                ]
                a_star = base.action(t, s)
                assert qs[a_star] == pytest.approx(max(qs), abs=1e-12)


class TestBellmanResidual:
    def test_residual_tiny_on_random_models(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            m = build_random_mdp(int(rng.integers(2, 9)), int(rng.integers(1, 5)), 2,
                                 TimeGrid(int(rng.integers(1, 11))), 1, seed=seed)
            vf = solve_value_function(m, 0.9)
            assert bellman_residual(m, vf, 0.9) <= 1e-9


def test_following_base_policy_realizes_its_value():
    # simulation cross-check: the greedy policy's simulated single-agent
    # return equals v(1, s_1) exactly (d = 1 throughout since n = 1)
    for seed in range(5):
        m = build_random_mdp(6, 3, 2, TimeGrid(7), 1, seed=seed)
        gamma = 0.9
        base = solve_base_policy(m, gamma)
        traj = simulate(m, base.as_joint_policy(m), seed)
        g = discounted_returns(traj, gamma)[0]
        s1 = int(traj.states[0, 0])
        assert g == pytest.approx(base.values.value(1, s1), rel=1e-9, abs=1e-9)


def test_value_table_csv(tmp_path, chain_model):
    base = solve_base_policy(chain_model, 0.9)
    path = tmp_path / "values.csv"
    value_table_to_csv(base, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,state,value,greedy_action"
    assert len(lines) == 1 + chain_model.horizon * chain_model.n_states
