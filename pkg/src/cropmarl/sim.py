"""Simulation engine: policy rollouts, discounted returns, welfare, fairness.

Transitions are deterministic, so the only randomness in a simulation is
the draw of initial states; expectations over initial states are estimated
by averaging returns over independent seeds (default 16).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .market import joint_reward
from .mdp import JointPolicy, Model

DEFAULT_EVAL_SEED_COUNT = 16


@dataclass
class Trajectory:
    """One simulated horizon: per-timestep joint states, actions, rewards.

    Row t-1 of each array holds the values at timestep t.
    """

    states: np.ndarray   # (T, n) int
    actions: np.ndarray  # (T, n) int
    rewards: np.ndarray  # (T, n) float

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    @property
    def n_agents(self) -> int:
        return self.states.shape[1]


def sample_initial_states(model: Model, rng: np.random.Generator) -> list[int]:
    states = []
    for i in range(model.n_agents):
        states.append(int(rng.choice(model.n_states, p=model.initials.probs[i])))
    return states


def simulate(model: Model, policy: JointPolicy, seed: int) -> Trajectory:
    """Unroll the joint policy over the horizon. Pure in (model, policy, seed)."""
    T, n = model.horizon, model.n_agents
    rng = np.random.default_rng(seed)
    states = sample_initial_states(model, rng)

    state_hist = np.empty((T, n), dtype=np.int64)
    action_hist = np.empty((T, n), dtype=np.int64)
    reward_hist = np.empty((T, n))
    trans = model.transitions.table
    for t in range(1, T + 1):
        actions = [int(policy.table[i, t - 1, states[i]]) for i in range(n)]
        rewards = joint_reward(model, t, states, actions)
        state_hist[t - 1] = states
        action_hist[t - 1] = actions
        reward_hist[t - 1] = rewards
        states = [int(trans[t - 1, states[i], actions[i]]) for i in range(n)]
    return Trajectory(state_hist, action_hist, reward_hist)


def discounted_returns(traj: Trajectory, gamma: float) -> np.ndarray:
    """Per-agent discounted return of one trajectory (single-sample estimate)."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    weights = gamma ** np.arange(traj.horizon)
    return weights @ traj.rewards


def welfare(g: Sequence[float]) -> tuple[float, float | None]:
    """Product welfare U = prod(g_i + 1) and, when defined, its log form.

    The log form sum(log(g_i + 1)) exists only when every g_i > -1; its
    absence is not an error.
    """
    g = np.asarray(g, dtype=np.float64)
    u = float(np.prod(g + 1.0))
    if np.all(g > -1.0):
        return u, float(np.sum(np.log(g + 1.0)))
    return u, None


@dataclass
class FairnessReport:
    total: float
    min: float
    max: float
    coefficient_of_variation: float
    welfare: float
    log_welfare: float | None


def fairness_metrics(g: Sequence[float]) -> FairnessReport:
    g = np.asarray(g, dtype=np.float64)
    mean = float(g.mean())
    cv = 0.0 if mean == 0.0 else float(g.std() / mean)
    u, log_u = welfare(g)
    return FairnessReport(
        total=float(g.sum()),
        min=float(g.min()),
        max=float(g.max()),
        coefficient_of_variation=cv,
        welfare=u,
        log_welfare=log_u,
    )


@dataclass
class PolicyEvaluation:
    """Seed-averaged evaluation of a joint policy."""

    mean_returns: np.ndarray        # per-agent, discounted at gamma
    mean_undiscounted: np.ndarray   # per-agent, gamma = 1
    report: FairnessReport          # computed on mean_returns


def evaluate_policy(model: Model, policy: JointPolicy, gamma: float,
                    eval_seeds: Sequence[int]) -> PolicyEvaluation:
    """Average returns over evaluation seeds; welfare of the averaged returns."""
    if not eval_seeds:
        raise ValueError("at least one evaluation seed is required")
    disc = np.zeros(model.n_agents)
    undisc = np.zeros(model.n_agents)
    for seed in eval_seeds:
        traj = simulate(model, policy, seed)
        disc += discounted_returns(traj, gamma)
        undisc += traj.rewards.sum(axis=0)
    disc /= len(eval_seeds)
    undisc /= len(eval_seeds)
    return PolicyEvaluation(disc, undisc, fairness_metrics(disc))


def trajectory_to_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "agent", "state", "action", "reward"])
        for t in range(1, traj.horizon + 1):
            for i in range(traj.n_agents):
                writer.writerow([
                    t, i,
                    int(traj.states[t - 1, i]),
                    int(traj.actions[t - 1, i]),
                    repr(float(traj.rewards[t - 1, i])),
                ])
