"""Shared hand-built fixtures.

chain_model is the 2-state workhorse: Empty (absorbing, index 0) and
Mature (index 1, sells crop 0). Wait keeps Mature mature, Harvest clears
it. With price a = -2, b = 100, slope 1 a lone harvest pays 98.
"""

from __future__ import annotations

import numpy as np
import pytest

from cropmarl.market import (
    CropSpec,
    MarketRewardFunction,
    PriceCurve,
    build_greenhouse_model,
)
from cropmarl.mdp import InitialDistribution, Model, TimeGrid, TransitionTable

EMPTY, MATURE = 0, 1
WAIT, HARVEST = 0, 1


def make_chain_model(horizon: int = 2, n_agents: int = 1, b_by_t=None,
                     a: float = -2.0, slope: float = 1.0) -> Model:
    trans = np.zeros((horizon, 2, 2), dtype=np.int64)
    trans[:, MATURE, WAIT] = MATURE
    trans[:, MATURE, HARVEST] = EMPTY
    a_arr = np.full((horizon, 1), a)
    if b_by_t is None:
        b_arr = np.full((horizon, 1), 100.0)
    else:
        b_arr = np.asarray(b_by_t, dtype=np.float64).reshape(horizon, 1)
    reward = MarketRewardFunction(
        PriceCurve(a_arr, b_arr, slope), np.array([-1, 0]), harvest_action=HARVEST
    )
    return Model(
        n_agents=n_agents,
        time=TimeGrid(horizon),
        n_states=2,
        n_actions=2,
        transitions=TransitionTable(trans),
        initials=InitialDistribution.point_mass(n_agents, 2, MATURE),
        reward=reward,
    )


def make_zero_reward_model(horizon: int = 3, n_states: int = 3, n_actions: int = 2,
                           n_agents: int = 1) -> Model:
    """No harvestable state anywhere: every reward is 0."""
    rng = np.random.default_rng(7)
    trans = rng.integers(0, n_states, size=(horizon, n_states, n_actions))
    reward = MarketRewardFunction(
        PriceCurve(np.full((horizon, 1), -1.0), np.full((horizon, 1), 10.0), 1.0),
        np.full(n_states, -1), harvest_action=0,
    )
    return Model(
        n_agents=n_agents,
        time=TimeGrid(horizon),
        n_states=n_states,
        n_actions=n_actions,
        transitions=TransitionTable(trans),
        initials=InitialDistribution.uniform(n_agents, n_states),
        reward=reward,
    )


def make_tiny_greenhouse(horizon: int = 4, n_agents: int = 1, growth: int = 2,
                         window: int = 2, slope: float = 1.0,
                         plant_window=(1, 2)) -> Model:
    crops = [CropSpec("tomato", plant_window, growth, window)]
    curve = PriceCurve.constant([-2.0], [100.0], horizon, slope)
    return build_greenhouse_model(crops, curve, TimeGrid(horizon), n_agents)


@pytest.fixture
def chain_model() -> Model:
    return make_chain_model()


@pytest.fixture
def tiny_greenhouse() -> Model:
    return make_tiny_greenhouse()
