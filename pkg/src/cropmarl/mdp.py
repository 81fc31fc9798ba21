"""Core containers for the shared finite-horizon multi-agent MDP.

States and actions are dense integer indices with a side table of
human-readable labels; all planners operate on indices. Timesteps are
1-based everywhere in the public API (t = 1..T), matching the way the
planning horizon is usually written down; internal arrays store row
``t - 1``.

Everything here is immutable after construction and safe to share
across concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .market import MarketRewardFunction

StateId = int
ActionId = int


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Discrete planning horizon; each timestep spans a fixed number of days."""

    horizon: int
    days_per_step: int = 14

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.days_per_step < 1:
            raise ValueError(f"days_per_step must be >= 1, got {self.days_per_step}")


@dataclass(frozen=True)
class Labels:
    """Human-readable names for state and action indices."""

    states: tuple[str, ...]
    actions: tuple[str, ...]

    @staticmethod
    def default(n_states: int, n_actions: int) -> "Labels":
        return Labels(
            states=tuple(f"s{i}" for i in range(n_states)),
            actions=tuple(f"a{i}" for i in range(n_actions)),
        )


class TransitionTable:
    """Dense deterministic transition map (t, state, action) -> state.

    Stored as a (T, |S|, |A|) integer array; total over its index ranges.
    """

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 3:
            raise ValueError(f"transition table must be 3-d (T,S,A), got shape {table.shape}")
        self.table = _freeze(table)

    @property
    def horizon(self) -> int:
        return self.table.shape[0]

    def successor(self, t: int, s: StateId, a: ActionId) -> StateId:
        """Raw successor lookup; range checks live in apply_transition."""
        return int(self.table[t - 1, s, a])


class InitialDistribution:
    """Per-agent probability vectors over the common state space."""

    def __init__(self, probs: np.ndarray):
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim != 2:
            raise ValueError(f"initials must be 2-d (agents, states), got shape {probs.shape}")
        self.probs = _freeze(probs)

    @staticmethod
    def point_mass(n_agents: int, n_states: int, state: StateId) -> "InitialDistribution":
        probs = np.zeros((n_agents, n_states))
        probs[:, state] = 1.0
        return InitialDistribution(probs)

    @staticmethod
    def uniform(n_agents: int, n_states: int) -> "InitialDistribution":
        return InitialDistribution(np.full((n_agents, n_states), 1.0 / n_states))


@dataclass
class Model:
    """The shared multi-agent MDP: one greenhouse MDP replicated for n agents,
    coupled only through the market reward function."""

    n_agents: int
    time: TimeGrid
    n_states: int
    n_actions: int
    transitions: TransitionTable
    initials: InitialDistribution
    reward: "MarketRewardFunction | None" = None
    labels: Labels | None = None

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.labels is None:
            self.labels = Labels.default(self.n_states, self.n_actions)

    @property
    def horizon(self) -> int:
        return self.time.horizon

    def state_index(self, label: str) -> StateId:
        return self.labels.states.index(label)

    def action_index(self, label: str) -> ActionId:
        return self.labels.actions.index(label)


class JointPolicy:
    """Per-agent, per-timestep state -> action table, dense and total."""

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 3:
            raise ValueError(f"policy table must be 3-d (agents,T,S), got shape {table.shape}")
        self.table = table

    @property
    def n_agents(self) -> int:
        return self.table.shape[0]

    @property
    def horizon(self) -> int:
        return self.table.shape[1]

    @staticmethod
    def constant(model: Model, action: ActionId) -> "JointPolicy":
        if not 0 <= action < model.n_actions:
            raise ValueError(f"action {action} out of range [0, {model.n_actions})")
        shape = (model.n_agents, model.horizon, model.n_states)
        return JointPolicy(np.full(shape, action, dtype=np.int64))

    @staticmethod
    def random(model: Model, seed: int) -> "JointPolicy":
        rng = np.random.default_rng(seed)
        shape = (model.n_agents, model.horizon, model.n_states)
        return JointPolicy(rng.integers(0, model.n_actions, size=shape))

    def copy(self) -> "JointPolicy":
        return JointPolicy(self.table.copy())


def apply_transition(model: Model, t: int, s: StateId, a: ActionId) -> StateId:
    """Deterministic successor of (s, a) at timestep t. Pure."""
    if not 1 <= t <= model.horizon:
        raise ValueError(f"timestep {t} out of range [1, {model.horizon}]")
    if not 0 <= s < model.n_states:
        raise ValueError(f"state {s} out of range [0, {model.n_states})")
    if not 0 <= a < model.n_actions:
        raise ValueError(f"action {a} out of range [0, {model.n_actions})")
    return model.transitions.successor(t, s, a)


def policy_lookup(policy: JointPolicy, i: int, t: int, s: StateId) -> ActionId:
    """Action recommended to agent i in state s at timestep t. Pure."""
    n, horizon, n_states = policy.table.shape
    if not 0 <= i < n:
        raise ValueError(f"agent {i} out of range [0, {n})")
    if not 1 <= t <= horizon:
        raise ValueError(f"timestep {t} out of range [1, {horizon}]")
    if not 0 <= s < n_states:
        raise ValueError(f"state {s} out of range [0, {n_states})")
    return int(policy.table[i, t - 1, s])


def validate_model(model: Model) -> list[str]:
    """Diagnostic sweep over the model. Violations are data, not errors."""
    problems: list[str] = []
    T, S, A = model.horizon, model.n_states, model.n_actions

    table = model.transitions.table
    if table.shape != (T, S, A):
        problems.append(
            f"transition table shape {table.shape} does not match (T,S,A)=({T},{S},{A})"
        )
    else:
        bad = np.argwhere((table < 0) | (table >= S))
        for t_idx, s, a in bad:
            problems.append(
                f"transition (t={t_idx + 1}, s={s}, a={a}) points to state "
                f"{table[t_idx, s, a]} outside [0, {S})"
            )

    probs = model.initials.probs
    if probs.shape != (model.n_agents, S):
        problems.append(
            f"initials shape {probs.shape} does not match (agents, states)=({model.n_agents},{S})"
        )
    else:
        for i in range(model.n_agents):
            row = probs[i]
            if np.any(row < 0):
                problems.append(f"initial distribution of agent {i} has negative entries")
            total = float(row.sum())
            if abs(total - 1.0) > 1e-12:
                problems.append(
                    f"initial distribution of agent {i} sums to {total!r}, expected 1"
                )

    if model.reward is not None:
        problems.extend(model.reward.validate(T, S, A))

    return problems


def model_to_dict(model: Model) -> dict:
    doc = {
        "n_agents": model.n_agents,
        "horizon": model.horizon,
        "days_per_step": model.time.days_per_step,
        "n_states": model.n_states,
        "n_actions": model.n_actions,
        "labels": {
            "states": list(model.labels.states),
            "actions": list(model.labels.actions),
        },
        "transitions": model.transitions.table.tolist(),
        "initials": model.initials.probs.tolist(),
    }
    if model.reward is not None:
        doc["market"] = model.reward.to_dict()
    return doc


def model_from_dict(doc: dict) -> Model:
    reward = None
    if "market" in doc and doc["market"] is not None:
        from .market import MarketRewardFunction

        reward = MarketRewardFunction.from_dict(doc["market"])
    return Model(
        n_agents=int(doc["n_agents"]),
        time=TimeGrid(int(doc["horizon"]), int(doc["days_per_step"])),
        n_states=int(doc["n_states"]),
        n_actions=int(doc["n_actions"]),
        transitions=TransitionTable(np.asarray(doc["transitions"], dtype=np.int64)),
        initials=InitialDistribution(np.asarray(doc["initials"], dtype=np.float64)),
        reward=reward,
        labels=Labels(
            states=tuple(doc["labels"]["states"]),
            actions=tuple(doc["labels"]["actions"]),
        ),
    )


def model_to_json(model: Model) -> str:
    # json round-trips float64 exactly via repr, so serialization is bit-exact
    return json.dumps(model_to_dict(model), indent=2)


def model_from_json(text: str) -> Model:
    return model_from_dict(json.loads(text))


def save_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))
        fh.write("\n")


def load_model(path) -> Model:
    with open(path) as fh:
        return model_from_json(fh.read())
