import numpy as np
import pytest

from cropmarl.market import build_random_mdp
from cropmarl.mdp import (
    InitialDistribution,
    JointPolicy,
    Model,
    TimeGrid,
    TransitionTable,
    apply_transition,
    model_from_json,
    model_to_json,
    policy_lookup,
    validate_model,
)

from conftest import make_tiny_greenhouse


def test_time_grid_validation():
    TimeGrid(1, 1)
    with pytest.raises(ValueError):
        TimeGrid(0)
    with pytest.raises(ValueError):
        TimeGrid(5, 0)


class TestApplyTransition:
    def test_wait_in_empty_self_loops(self, tiny_greenhouse):
        m = tiny_greenhouse
        empty = m.state_index("Empty")
        assert apply_transition(m, 1, empty, m.action_index("Wait")) == empty

    def test_harvest_clears_greenhouse(self, tiny_greenhouse):
        m = tiny_greenhouse
        mature = m.state_index("Mature(tomato,0)")
        assert apply_transition(m, 1, mature, m.action_index("Harvest")) == m.state_index("Empty")

    def test_growing_ages_by_one(self):
        # growth duration 3 > 2: Growing(c,1) ages to Growing(c,2) under Wait
        m = make_tiny_greenhouse(horizon=6, growth=3)
        g1 = m.state_index("Growing(tomato,1)")
        g2 = m.state_index("Growing(tomato,2)")
        assert apply_transition(m, 3, g1, m.action_index("Wait")) == g2

    @pytest.mark.parametrize("t,s,a,field", [
        (0, 0, 0, "timestep"), (5, 0, 0, "timestep"),
        (1, -1, 0, "state"), (1, 99, 0, "state"),
        (1, 0, -1, "action"), (1, 0, 99, "action"),
    ])
    def test_out_of_range_arguments(self, tiny_greenhouse, t, s, a, field):
        with pytest.raises(ValueError, match=field):
            apply_transition(tiny_greenhouse, t, s, a)

    def test_totality_and_determinism(self):
        m = build_random_mdp(6, 3, 2, TimeGrid(5), 1, seed=3)
        for t in range(1, 6):
            for s in range(6):
                for a in range(3):
                    nxt = apply_transition(m, t, s, a)
                    assert 0 <= nxt < 6
                    assert apply_transition(m, t, s, a) == nxt


class TestJointPolicy:
    def test_store_load_identity(self, tiny_greenhouse):
        policy = JointPolicy.constant(tiny_greenhouse, 0)
        policy.table[0, 0, 0] = 2
        assert policy_lookup(policy, 0, 1, 0) == 2

    def test_constant_policy(self, tiny_greenhouse):
        policy = JointPolicy.constant(tiny_greenhouse, 1)
        for t in range(1, tiny_greenhouse.horizon + 1):
            for s in range(tiny_greenhouse.n_states):
                assert policy_lookup(policy, 0, t, s) == 1

    def test_seeded_random_reproducible(self, tiny_greenhouse):
        p1 = JointPolicy.random(tiny_greenhouse, 42)
        p2 = JointPolicy.random(tiny_greenhouse, 42)
        assert np.array_equal(p1.table, p2.table)

    def test_totality(self, tiny_greenhouse):
        policy = JointPolicy.random(tiny_greenhouse, 0)
        for t in range(1, tiny_greenhouse.horizon + 1):
            for s in range(tiny_greenhouse.n_states):
                a = policy_lookup(policy, 0, t, s)
                assert 0 <= a < tiny_greenhouse.n_actions

    def test_out_of_range(self, tiny_greenhouse):
        policy = JointPolicy.constant(tiny_greenhouse, 0)
        with pytest.raises(ValueError, match="agent"):
            policy_lookup(policy, 5, 1, 0)
        with pytest.raises(ValueError, match="timestep"):
            policy_lookup(policy, 0, 0, 0)


class TestValidateModel:
    def test_well_formed_model_is_clean(self, tiny_greenhouse):
        assert validate_model(tiny_greenhouse) == []

    def test_initials_not_summing_to_one(self, tiny_greenhouse):
        m = tiny_greenhouse
        probs = m.initials.probs.copy()
        probs[0] *= 0.9
        bad = Model(m.n_agents, m.time, m.n_states, m.n_actions, m.transitions,
                    InitialDistribution(probs), m.reward, m.labels)
        problems = validate_model(bad)
        assert len(problems) == 1
        assert "agent 0" in problems[0]

    def test_transition_out_of_range(self, tiny_greenhouse):
        m = tiny_greenhouse
        table = m.transitions.table.copy()
        table[1, 2, 0] = m.n_states
        bad = Model(m.n_agents, m.time, m.n_states, m.n_actions,
                    TransitionTable(table), m.initials, m.reward, m.labels)
        problems = validate_model(bad)
        assert len(problems) == 1
        assert "t=2" in problems[0] and "s=2" in problems[0] and "a=0" in problems[0]

    def test_initial_distributions_of_builders_are_valid(self):
        m = build_random_mdp(5, 2, 2, TimeGrid(4), 3, seed=0)
        probs = m.initials.probs
        assert np.all(probs >= 0)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-12)


class TestSerialization:
    def test_round_trip_is_bit_exact(self):
        m = build_random_mdp(7, 3, 2, TimeGrid(6), 2, seed=11)
        text = model_to_json(m)
        m2 = model_from_json(text)
        assert model_to_json(m2) == text
        assert np.array_equal(m.transitions.table, m2.transitions.table)
        assert np.array_equal(m.initials.probs, m2.initials.probs)
        assert m.labels == m2.labels
        assert np.array_equal(m.reward.harvestable, m2.reward.harvestable)
        assert np.array_equal(m.reward.price.a, m2.reward.price.a)
        assert np.array_equal(m.reward.price.b, m2.reward.price.b)

    def test_schema_fields_present(self, tiny_greenhouse):
        import json

        doc = json.loads(model_to_json(tiny_greenhouse))
        for key in ("n_agents", "horizon", "days_per_step", "n_states", "n_actions",
                    "labels", "transitions", "initials"):
            assert key in doc
        T, S, A = tiny_greenhouse.horizon, tiny_greenhouse.n_states, tiny_greenhouse.n_actions
        assert len(doc["transitions"]) == T
        assert len(doc["transitions"][0]) == S
        assert len(doc["transitions"][0][0]) == A
