"""Single-agent optimal base policy.

Solves the single-agent view of the model (agent alone in the market, so
every valid harvest sells at the d = 1 price) over time-expanded states
(s, t) by exact backward induction, then extracts the greedy policy. The
finite-horizon deterministic Bellman fixed point computed here coincides
with the linear-programming formulation of the same problem, which remains
the correctness contract (see the Bellman-residual test).

Used to warm-start Q-tables and as the default behavior driving rollout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .market import single_agent_reward_table
from .mdp import ActionId, JointPolicy, Model, StateId


class ValueFunction:
    """Expected discounted reward-to-go v(t, s) for t = 1..T+1; v(T+1, .) = 0."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"value table must be 2-d (T+1, S), got shape {values.shape}")
        self.values = values

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 1

    def value(self, t: int, s: StateId) -> float:
        if not 1 <= t <= self.horizon + 1:
            raise ValueError(f"timestep {t} out of range [1, {self.horizon + 1}]")
        return float(self.values[t - 1, s])


@dataclass
class BasePolicy:
    """Optimal single-agent values and the greedy action table act(t, s)."""

    values: ValueFunction
    act: np.ndarray  # (T, S) int

    def action(self, t: int, s: StateId) -> ActionId:
        return int(self.act[t - 1, s])

    def as_joint_policy(self, model: Model) -> JointPolicy:
        """Broadcast the single-agent policy to every agent."""
        return JointPolicy(np.tile(self.act, (model.n_agents, 1, 1)))


def solve_value_function(model: Model, gamma: float) -> ValueFunction:
    """Optimal single-agent value function under the d = 1 reward view."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    T, S = model.horizon, model.n_states
    r1 = single_agent_reward_table(model)
    trans = model.transitions.table
    values = np.zeros((T + 1, S))
    for t in range(T, 0, -1):
        q = r1[t - 1] + gamma * values[t][trans[t - 1]]
        values[t - 1] = q.max(axis=1)
    return ValueFunction(values)


def greedy_policy(model: Model, values: ValueFunction, gamma: float) -> BasePolicy:
    """Greedy action per (t, s); ties broken toward the lowest action index."""
    T, S = model.horizon, model.n_states
    r1 = single_agent_reward_table(model)
    trans = model.transitions.table
    act = np.empty((T, S), dtype=np.int64)
    for t in range(T, 0, -1):
        q = r1[t - 1] + gamma * values.values[t][trans[t - 1]]
        act[t - 1] = q.argmax(axis=1)
    return BasePolicy(values, act)


def solve_base_policy(model: Model, gamma: float) -> BasePolicy:
    return greedy_policy(model, solve_value_function(model, gamma), gamma)


def bellman_residual(model: Model, values: ValueFunction, gamma: float) -> float:
    """Max |v(t,s) - max_a [r1 + gamma v(t+1, P_t(s,a))]| over all (t, s).

    Written as a plain loop, independent of the vectorized solver path.
    """
    reward_fn = model.reward
    worst = 0.0
    for t in range(1, model.horizon + 1):
        for s in range(model.n_states):
            best = -np.inf
            for a in range(model.n_actions):
                r = reward_fn.single_agent_reward(t, s, a)
                nxt = model.transitions.successor(t, s, a)
                best = max(best, r + gamma * values.value(t + 1, nxt))
            worst = max(worst, abs(values.value(t, s) - best))
    return worst


def value_table_to_csv(base: BasePolicy, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "state", "value", "greedy_action"])
        T, S = base.act.shape
        for t in range(1, T + 1):
            for s in range(S):
                writer.writerow([t, s, repr(base.values.value(t, s)), base.action(t, s)])
