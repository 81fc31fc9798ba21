"""Multi-agent rollout: sequential one-step lookahead over the base policy.

At every timestep the agents commit actions one at a time. Agent i scores
each candidate action by the stage reward it yields alongside the already
committed actions (agents after i assumed to follow the base policy) plus
the discounted reward accumulated by jointly simulating all agents under
the base policy for the rest of the horizon. The joint continuation keeps
market crowding honest in the lookahead; with a single agent it coincides
with the precomputed value table, which is used as a fast path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base_policy import BasePolicy
from .market import joint_reward
from .mdp import ActionId, JointPolicy, Model, StateId
from .sim import Trajectory, sample_initial_states


@dataclass
class RolloutParams:
    gamma: float = 0.9
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")


def base_continuation_value(base: BasePolicy, t_next: int, s: StateId) -> float:
    """Reward-to-go of the base policy from (t_next, s); 0 past the horizon."""
    return base.values.value(t_next, s)


def q_factor(model: Model, base: BasePolicy, t: int, joint_state: Sequence[StateId],
             committed: Sequence[ActionId], candidate: ActionId,
             params: RolloutParams) -> float:
    """Expected discounted reward over [t, T] for the agent now deciding.

    Agents before it play their committed actions, it plays the candidate,
    agents after it play the base policy; from t+1 on, everyone follows
    the base policy.
    """
    i = len(committed)
    n, T = model.n_agents, model.horizon
    gamma = params.gamma
    trans = model.transitions.table
    act = base.act

    stage = list(committed) + [candidate] + [
        int(act[t - 1, joint_state[j]]) for j in range(i + 1, n)
    ]
    total = float(joint_reward(model, t, joint_state, stage)[i])
    if t == T:
        return total

    states = [int(trans[t - 1, joint_state[j], stage[j]]) for j in range(n)]
    if n == 1:
        # single agent: the continuation equals the base value table exactly
        return total + gamma * base_continuation_value(base, t + 1, states[0])

    disc = gamma
    for k in range(t + 1, T + 1):
        actions = [int(act[k - 1, s]) for s in states]
        total += disc * float(joint_reward(model, k, states, actions)[i])
        if k < T:
            states = [int(trans[k - 1, states[j], actions[j]]) for j in range(n)]
        disc *= gamma
    return total


@dataclass
class RolloutDecision:
    t: int
    agent: int
    state: int
    chosen_action: int
    best_q: float
    base_action: int


def rollout_step(model: Model, base: BasePolicy, t: int,
                 joint_state: Sequence[StateId], params: RolloutParams,
                 decisions: list[RolloutDecision] | None = None) -> list[ActionId]:
    """Commit one improved action per agent, in ascending agent order."""
    committed: list[ActionId] = []
    for i in range(model.n_agents):
        best_q = -np.inf
        best_a = 0
        for a in range(model.n_actions):
            q = q_factor(model, base, t, joint_state, committed, a, params)
            if q > best_q:  # strict: ties keep the lowest action index
                best_q = q
                best_a = a
        if decisions is not None:
            decisions.append(RolloutDecision(
                t, i, int(joint_state[i]), best_a, best_q,
                int(base.act[t - 1, joint_state[i]]),
            ))
        committed.append(best_a)
    return committed


@dataclass
class RolloutResult:
    policy: JointPolicy
    trajectory: Trajectory
    decisions: list[RolloutDecision]


def run_rollout_detailed(model: Model, base: BasePolicy,
                         params: RolloutParams) -> RolloutResult:
    T, n = model.horizon, model.n_agents
    rng = np.random.default_rng(params.seed)
    states = sample_initial_states(model, rng)
    trans = model.transitions.table

    # executed decisions overwrite the base policy on visited states
    policy_table = np.tile(base.act, (n, 1, 1))
    state_hist = np.empty((T, n), dtype=np.int64)
    action_hist = np.empty((T, n), dtype=np.int64)
    reward_hist = np.empty((T, n))
    decisions: list[RolloutDecision] = []

    for t in range(1, T + 1):
        actions = rollout_step(model, base, t, states, params, decisions)
        for i in range(n):
            policy_table[i, t - 1, states[i]] = actions[i]
        rewards = joint_reward(model, t, states, actions)
        state_hist[t - 1] = states
        action_hist[t - 1] = actions
        reward_hist[t - 1] = rewards
        states = [int(trans[t - 1, states[i], actions[i]]) for i in range(n)]

    return RolloutResult(
        JointPolicy(policy_table),
        Trajectory(state_hist, action_hist, reward_hist),
        decisions,
    )


def run_rollout(model: Model, base: BasePolicy,
                params: RolloutParams) -> tuple[JointPolicy, Trajectory]:
    result = run_rollout_detailed(model, base, params)
    return result.policy, result.trajectory


def decision_log_to_csv(decisions: list[RolloutDecision], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "agent", "state", "chosen_action", "best_q", "base_action"])
        for d in decisions:
            writer.writerow([d.t, d.agent, d.state, d.chosen_action,
                             repr(d.best_q), d.base_action])
