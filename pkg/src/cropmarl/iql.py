"""Independent Q-Learning.

Each agent learns its own tabular Q-function from episodes simulated in
the shared market, treating the other agents as part of the environment.
Q-tables are indexed by (state, action) only, shared across timesteps;
the non-stationarity this ignores is exactly IQL's documented weakness.

Q-values can be warm-started from the base policy's value function via a
one-step backup at t = 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .base_policy import solve_value_function
from .market import joint_reward, single_agent_reward_table
from .mdp import ActionId, JointPolicy, Model
from .sim import sample_initial_states


@dataclass
class IqlParams:
    alpha: float = 0.1
    epsilon: float = 0.1
    episodes: int = 1000
    gamma: float = 0.9
    warm_start: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.episodes < 1:
            raise ValueError(f"episodes must be >= 1, got {self.episodes}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


def init_q_tables(model: Model, params: IqlParams) -> np.ndarray:
    """One (S, A) Q-table per agent, stacked as (n, S, A).

    Warm start backs the base-policy values up one step at t = 1:
    Q(s, a) = r1(1, s, a) + gamma * v(2, P_1(s, a)). Cold start is zeros.
    """
    n, S, A = model.n_agents, model.n_states, model.n_actions
    if not params.warm_start:
        return np.zeros((n, S, A))
    values = solve_value_function(model, params.gamma)
    r1 = single_agent_reward_table(model)
    q0 = r1[0] + params.gamma * values.values[1][model.transitions.table[0]]
    return np.tile(q0, (n, 1, 1))


def epsilon_greedy(q_row: np.ndarray, epsilon: float, rng: np.random.Generator) -> ActionId:
    """Uniform action with probability epsilon, else argmax (ties -> lowest)."""
    if rng.random() < epsilon:
        return int(rng.integers(len(q_row)))
    return int(np.argmax(q_row))


def q_update(q_table: np.ndarray, s: int, a: int, r: float, s_next: int,
             params: IqlParams) -> float:
    """Standard one-step Q-learning backup on one agent's table, in place."""
    target = r + params.gamma * float(q_table[s_next].max())
    q_table[s, a] += params.alpha * (target - q_table[s, a])
    return float(q_table[s, a])


@dataclass
class IqlResult:
    policy: JointPolicy
    q_tables: np.ndarray              # (n, S, A)
    episode_rewards: list[float]      # undiscounted total joint reward per episode


def train_iql_detailed(model: Model, params: IqlParams) -> IqlResult:
    n, T = model.n_agents, model.horizon
    rng = np.random.default_rng(params.seed)
    q = init_q_tables(model, params)
    trans = model.transitions.table

    episode_rewards: list[float] = []
    for _ in range(params.episodes):
        states = sample_initial_states(model, rng)
        total = 0.0
        for t in range(1, T + 1):
            actions = [epsilon_greedy(q[i, states[i]], params.epsilon, rng) for i in range(n)]
            rewards = joint_reward(model, t, states, actions)
            next_states = [int(trans[t - 1, states[i], actions[i]]) for i in range(n)]
            for i in range(n):
                q_update(q[i], states[i], actions[i], float(rewards[i]), next_states[i], params)
            total += float(rewards.sum())
            states = next_states
        episode_rewards.append(total)

    # greedy extraction; the learned table is shared across timesteps
    greedy = q.argmax(axis=2)  # (n, S)
    table = np.repeat(greedy[:, None, :], T, axis=1)
    return IqlResult(JointPolicy(table), q, episode_rewards)


def train_iql(model: Model, params: IqlParams) -> JointPolicy:
    return train_iql_detailed(model, params).policy


def q_tables_to_csv(q_tables: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["agent", "state", "action", "q_value"])
        n, S, A = q_tables.shape
        for i in range(n):
            for s in range(S):
                for a in range(A):
                    writer.writerow([i, s, a, repr(float(q_tables[i, s, a]))])


def training_log_to_csv(episode_rewards: list[float], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["episode", "total_reward"])
        for ep, total in enumerate(episode_rewards, start=1):
            writer.writerow([ep, repr(total)])
