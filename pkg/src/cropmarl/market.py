"""Crop/market reward model.

Prices follow a linear supply curve per (timestep, crop): the more agents
that sell a crop in the same timestep, the lower the price, scaled by a
global slope coefficient. Agents earn the market price only on a valid
harvest (HARVEST action in a harvestable state); everything else pays 0.
Prices may go negative under oversupply; that is intentional and the
algorithms must cope with it.

Also houses the two model builders: the parametric greenhouse environment
and the generic seeded random MDP used for runtime benchmarking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mdp import (
    ActionId,
    InitialDistribution,
    Labels,
    Model,
    StateId,
    TimeGrid,
    TransitionTable,
    _freeze,
)

CropId = int

WAIT = 0
HARVEST = 1


class PriceCurve:
    """Per-(timestep, crop) linear price parameters plus the market slope.

    price = a * (slope_coefficient * d) + b  for d >= 1 sellers.
    a < 0 and b > 0 by construction, so price strictly decreases in d.
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, slope_coefficient: float):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape or a.ndim != 2:
            raise ValueError(f"price parameters must share a 2-d (T,C) shape, got {a.shape} and {b.shape}")
        self.a = _freeze(a)
        self.b = _freeze(b)
        self.slope_coefficient = float(slope_coefficient)

    @property
    def horizon(self) -> int:
        return self.a.shape[0]

    @property
    def n_crops(self) -> int:
        return self.a.shape[1]

    @staticmethod
    def constant(a_by_crop: Sequence[float], b_by_crop: Sequence[float], horizon: int,
                 slope_coefficient: float) -> "PriceCurve":
        """Time-invariant parameters; one (a, b) pair per crop."""
        a = np.tile(np.asarray(a_by_crop, dtype=np.float64), (horizon, 1))
        b = np.tile(np.asarray(b_by_crop, dtype=np.float64), (horizon, 1))
        return PriceCurve(a, b, slope_coefficient)


def price(curve: PriceCurve, t: int, c: CropId, d: int) -> float:
    """Market price of crop c at timestep t when d agents supply it."""
    if d < 1:
        raise ValueError(f"price is only quoted with at least one seller, got d={d}")
    return float(curve.a[t - 1, c] * (curve.slope_coefficient * d) + curve.b[t - 1, c])


class MarketRewardFunction:
    """Joint reward R_t: rewards valid harvesters at the supply-adjusted price.

    ``harvestable[s]`` is the crop a valid HARVEST in state s sells, or -1
    when state s is not harvestable.
    """

    def __init__(self, price_curve: PriceCurve, harvestable: np.ndarray, harvest_action: ActionId):
        harvestable = np.asarray(harvestable, dtype=np.int64)
        if harvestable.ndim != 1:
            raise ValueError(f"harvestable must be 1-d over states, got shape {harvestable.shape}")
        self.price = price_curve
        self.harvestable = _freeze(harvestable)
        self.harvest_action = int(harvest_action)

    def harvestable_crop(self, s: StateId) -> CropId | None:
        c = int(self.harvestable[s])
        return c if c >= 0 else None

    def is_valid_harvest(self, s: StateId, a: ActionId) -> bool:
        return a == self.harvest_action and self.harvestable[s] >= 0

    def single_agent_reward(self, t: int, s: StateId, a: ActionId) -> float:
        """Reward when the agent is alone in the market (d = 1)."""
        if not self.is_valid_harvest(s, a):
            return 0.0
        return price(self.price, t, int(self.harvestable[s]), 1)

    def validate(self, horizon: int, n_states: int, n_actions: int) -> list[str]:
        problems = []
        if self.price.horizon < horizon:
            problems.append(
                f"price curve covers {self.price.horizon} timesteps, model horizon is {horizon}"
            )
        if np.any(self.price.a >= 0):
            problems.append("price slope parameters a must all be negative")
        if np.any(self.price.b <= 0):
            problems.append("price intercept parameters b must all be positive")
        if self.price.slope_coefficient <= 0:
            problems.append(f"slope_coefficient must be positive, got {self.price.slope_coefficient!r}")
        if self.harvestable.shape[0] != n_states:
            problems.append(
                f"harvestable table covers {self.harvestable.shape[0]} states, model has {n_states}"
            )
        elif np.any((self.harvestable < -1) | (self.harvestable >= self.price.n_crops)):
            problems.append("harvestable table references crops outside the price curve")
        if not 0 <= self.harvest_action < n_actions:
            problems.append(
                f"harvest action {self.harvest_action} out of range [0, {n_actions})"
            )
        return problems

    def to_dict(self) -> dict:
        return {
            "a": self.price.a.tolist(),
            "b": self.price.b.tolist(),
            "slope_coefficient": self.price.slope_coefficient,
            "n_crops": self.price.n_crops,
            "harvestable": self.harvestable.tolist(),
            "harvest_action": self.harvest_action,
        }

    @staticmethod
    def from_dict(doc: dict) -> "MarketRewardFunction":
        curve = PriceCurve(
            np.asarray(doc["a"], dtype=np.float64),
            np.asarray(doc["b"], dtype=np.float64),
            float(doc["slope_coefficient"]),
        )
        return MarketRewardFunction(
            curve,
            np.asarray(doc["harvestable"], dtype=np.int64),
            int(doc["harvest_action"]),
        )


def count_valid_harvests(reward: MarketRewardFunction, joint_state: Sequence[StateId],
                         joint_action: Sequence[ActionId]) -> dict[CropId, int]:
    """Number of agents making a valid harvest of each crop this timestep."""
    counts: dict[int, int] = {}
    for s, a in zip(joint_state, joint_action):
        if a == reward.harvest_action:
            c = int(reward.harvestable[s])
            if c >= 0:
                counts[c] = counts.get(c, 0) + 1
    return counts


def joint_reward(model: Model, t: int, joint_state: Sequence[StateId],
                 joint_action: Sequence[ActionId]) -> np.ndarray:
    """Per-agent reward vector at timestep t. Pure.

    Only valid harvesters earn anything; each is paid the market price of
    its crop given how many agents harvested that crop this timestep.
    """
    n = model.n_agents
    if len(joint_state) != n or len(joint_action) != n:
        raise ValueError(
            f"joint state/action must have length {n}, got {len(joint_state)} and {len(joint_action)}"
        )
    reward_fn = model.reward
    if reward_fn is None:
        raise ValueError("model has no market reward function attached")
    counts = count_valid_harvests(reward_fn, joint_state, joint_action)
    out = np.zeros(n)
    for idx in range(n):
        s, a = joint_state[idx], joint_action[idx]
        if a == reward_fn.harvest_action:
            c = int(reward_fn.harvestable[s])
            if c >= 0:
                out[idx] = price(reward_fn.price, t, c, counts[c])
    return out


def single_agent_reward_table(model: Model) -> np.ndarray:
    """Dense (T, S, A) table of rewards under the d=1 single-seller view."""
    T, S, A = model.horizon, model.n_states, model.n_actions
    reward_fn = model.reward
    table = np.zeros((T, S, A))
    for s in range(S):
        c = reward_fn.harvestable_crop(s)
        if c is None:
            continue
        for t in range(1, T + 1):
            table[t - 1, s, reward_fn.harvest_action] = price(reward_fn.price, t, c, 1)
    return table


@dataclass(frozen=True)
class CropSpec:
    """Seasonality and growth parameters of one crop.

    plant_window: timesteps at which planting is allowed.
    growth_duration: timesteps from planting until the crop matures.
    harvest_window: timesteps the mature crop stays harvestable before spoiling.
    """

    name: str
    plant_window: frozenset[int]
    growth_duration: int
    harvest_window: int

    def __init__(self, name: str, plant_window, growth_duration: int, harvest_window: int):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "plant_window", frozenset(int(t) for t in plant_window))
        object.__setattr__(self, "growth_duration", int(growth_duration))
        object.__setattr__(self, "harvest_window", int(harvest_window))
        if not self.plant_window:
            raise ValueError(f"crop {name!r}: plant_window must be nonempty")
        if self.growth_duration < 1:
            raise ValueError(f"crop {name!r}: growth_duration must be >= 1")
        if self.harvest_window < 1:
            raise ValueError(f"crop {name!r}: harvest_window must be >= 1")


def build_greenhouse_model(crops: Sequence[CropSpec], price_curve: PriceCurve,
                           time: TimeGrid, n_agents: int,
                           initials: InitialDistribution | None = None,
                           seed: int = 0) -> Model:
    """Build the parametric greenhouse MDP.

    State space: Empty, plus Growing(c, age) for each pre-maturity age and
    Mature(c, age) for each timestep of the harvest window. Actions: Wait,
    Harvest, and Plant(c) per crop. Invalid actions behave as Wait, so every
    policy table is total over S x A.

    The construction is fully deterministic; ``seed`` is accepted for
    interface parity with build_random_mdp and reserved for stochastic
    initial-state defaults.
    """
    if not crops:
        raise ValueError("at least one crop is required")
    T = time.horizon
    for crop in crops:
        bad = [t for t in crop.plant_window if not 1 <= t <= T]
        if bad:
            raise ValueError(
                f"crop {crop.name!r}: plant_window timesteps {sorted(bad)} outside [1, {T}]"
            )
    if price_curve.n_crops != len(crops):
        raise ValueError(
            f"price curve has {price_curve.n_crops} crops, {len(crops)} specs given"
        )
    if price_curve.horizon < T:
        raise ValueError(
            f"price curve covers {price_curve.horizon} timesteps, horizon is {T}"
        )

    state_labels = ["Empty"]
    growing_index: dict[tuple[int, int], int] = {}
    mature_index: dict[tuple[int, int], int] = {}
    harvestable = [-1]
    for c, crop in enumerate(crops):
        for k in range(1, crop.growth_duration):
            growing_index[(c, k)] = len(state_labels)
            state_labels.append(f"Growing({crop.name},{k})")
            harvestable.append(-1)
        for m in range(crop.harvest_window):
            mature_index[(c, m)] = len(state_labels)
            state_labels.append(f"Mature({crop.name},{m})")
            harvestable.append(c)

    action_labels = ["Wait", "Harvest"] + [f"Plant({crop.name})" for crop in crops]
    n_states = len(state_labels)
    n_actions = len(action_labels)
    EMPTY = 0

    def grown_state(c: int) -> int:
        crop = crops[c]
        return mature_index[(c, 0)] if crop.growth_duration == 1 else growing_index[(c, 1)]

    # aging under Wait is the same at every timestep; only Plant is seasonal
    wait_next = np.empty(n_states, dtype=np.int64)
    wait_next[EMPTY] = EMPTY
    for (c, k), idx in growing_index.items():
        crop = crops[c]
        wait_next[idx] = (
            mature_index[(c, 0)] if k + 1 == crop.growth_duration
            else growing_index[(c, k + 1)]
        )
    for (c, m), idx in mature_index.items():
        crop = crops[c]
        wait_next[idx] = (
            EMPTY if m + 1 == crop.harvest_window else mature_index[(c, m + 1)]
        )

    table = np.empty((T, n_states, n_actions), dtype=np.int64)
    for t in range(1, T + 1):
        # default: every action behaves as Wait
        table[t - 1] = wait_next[:, None]
        for s in range(n_states):
            if harvestable[s] >= 0:
                table[t - 1, s, HARVEST] = EMPTY
        for c, crop in enumerate(crops):
            if t in crop.plant_window:
                table[t - 1, EMPTY, 2 + c] = grown_state(c)

    if initials is None:
        initials = InitialDistribution.point_mass(n_agents, n_states, EMPTY)

    reward = MarketRewardFunction(price_curve, np.asarray(harvestable), HARVEST)
    return Model(
        n_agents=n_agents,
        time=time,
        n_states=n_states,
        n_actions=n_actions,
        transitions=TransitionTable(table),
        initials=initials,
        reward=reward,
        labels=Labels(states=tuple(state_labels), actions=tuple(action_labels)),
    )


def build_random_mdp(n_states: int, n_actions: int, n_crops: int, time: TimeGrid,
                     n_agents: int, seed: int, slope_coefficient: float = 1.0,
                     harvest_probability: float = 0.3) -> Model:
    """Generic seeded MDP for runtime experiments.

    Deterministic transitions drawn uniformly per (t, s, a); each state is
    independently harvestable for a uniformly drawn crop with probability
    0.3; price parameters drawn a in [-5, -1], b in [50, 150] per (t, c).
    Action 0 is designated as the harvest action. Fully reproducible from
    the seed.
    """
    if min(n_states, n_actions, n_crops, n_agents) < 1:
        raise ValueError("all counts must be >= 1")
    rng = np.random.default_rng(seed)
    T = time.horizon
    table = rng.integers(0, n_states, size=(T, n_states, n_actions))
    harvestable = np.full(n_states, -1, dtype=np.int64)
    for s in range(n_states):
        if rng.random() < harvest_probability:
            harvestable[s] = rng.integers(0, n_crops)
    a = rng.uniform(-5.0, -1.0, size=(T, n_crops))
    b = rng.uniform(50.0, 150.0, size=(T, n_crops))
    reward = MarketRewardFunction(PriceCurve(a, b, slope_coefficient), harvestable,
                                  harvest_action=0)
    return Model(
        n_agents=n_agents,
        time=time,
        n_states=n_states,
        n_actions=n_actions,
        transitions=TransitionTable(table),
        initials=InitialDistribution.uniform(n_agents, n_states),
        reward=reward,
    )


def crops_from_config(cfg: list[dict]) -> list[CropSpec]:
    return [
        CropSpec(
            name=c.get("name", f"crop{idx}"),
            plant_window=c["plant_window"],
            growth_duration=c["growth_duration"],
            harvest_window=c["harvest_window"],
        )
        for idx, c in enumerate(cfg)
    ]


def price_from_config(cfg: dict, n_crops: int, horizon: int,
                      slope_coefficient: float) -> PriceCurve:
    """Price block: per-crop scalars or full [t][c] arrays for a and b."""
    a_arr = np.asarray(cfg["a"], dtype=np.float64)
    b_arr = np.asarray(cfg["b"], dtype=np.float64)
    if a_arr.ndim == 1:
        if a_arr.shape[0] != n_crops or b_arr.shape[0] != n_crops:
            raise ValueError(f"per-crop price vectors must have length {n_crops}")
        return PriceCurve.constant(a_arr, b_arr, horizon, slope_coefficient)
    return PriceCurve(a_arr, b_arr, slope_coefficient)


def greenhouse_from_config(cfg: dict) -> Model:
    """Build a greenhouse model from its JSON configuration document.

    Schema: crops (plant_window, growth_duration, harvest_window each),
    price (a, b), slope_coefficient (default 500), n_agents, horizon,
    days_per_step (default 14).
    """
    crops = crops_from_config(cfg["crops"])
    horizon = int(cfg["horizon"])
    slope = float(cfg.get("slope_coefficient", 500.0))
    curve = price_from_config(cfg["price"], len(crops), horizon, slope)
    time = TimeGrid(horizon, int(cfg.get("days_per_step", 14)))
    return build_greenhouse_model(crops, curve, time, int(cfg["n_agents"]),
                                  seed=int(cfg.get("seed", 0)))
