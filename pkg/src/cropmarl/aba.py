"""Agent-by-Agent policy optimization.

Coordinate descent over single-agent policies: repeatedly pick one agent,
hold everyone else's policy fixed, and replace the chosen agent's policy
with the one maximizing a first-order approximation of the welfare gain.
The approximation linearizes U = prod(g_j + 1) around the trajectory of
the current joint policy, pricing a substitution of agent i's stage-(t)
state/action by its effect on every agent's reward, weighted by
dU/dr_{t,j} = U / (g_j + 1) * gamma^(t-1).

The single-agent subproblem is solved exactly by backward dynamic
programming over time-expanded states. Welfare across iterations is
logged, not asserted: the linearization can overshoot, so true welfare
need not improve monotonically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .market import joint_reward
from .mdp import JointPolicy, Model
from .sim import Trajectory, discounted_returns, simulate, welfare


class WelfareSingularityError(RuntimeError):
    """Raised when some g_j = -1 makes the welfare derivative undefined."""


@dataclass
class AbaParams:
    gamma: float = 0.9
    max_iterations: int | None = None   # default 20 * n_agents, set at train time
    delta: float = 0.1
    agent_selection: str = "random"     # "random" | "cyclic"
    init: str = "random"                # "random" | "constant"
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.agent_selection not in ("random", "cyclic"):
            raise ValueError(f"unknown agent_selection {self.agent_selection!r}")
        if self.init not in ("random", "constant"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class LinearizationContext:
    """Evaluation point of the welfare linearization: the trajectory of the
    current joint policy and the returns/welfare it realizes."""

    trajectory: Trajectory
    g: np.ndarray
    welfare: float
    gamma: float

    @staticmethod
    def from_trajectory(traj: Trajectory, gamma: float) -> "LinearizationContext":
        g = discounted_returns(traj, gamma)
        u, _ = welfare(g)
        return LinearizationContext(traj, g, u, gamma)

    @staticmethod
    def from_policy(model: Model, policy: JointPolicy, seed: int,
                    gamma: float) -> "LinearizationContext":
        return LinearizationContext.from_trajectory(simulate(model, policy, seed), gamma)


def welfare_gradient(ctx: LinearizationContext, t: int, j: int) -> float:
    """dU/dr_{t,j} evaluated at the context: U / (g_j + 1) * gamma^(t-1)."""
    denom = float(ctx.g[j]) + 1.0
    if denom == 0.0:
        raise WelfareSingularityError(
            f"agent {j} has return -1; welfare derivative undefined"
        )
    return ctx.welfare / denom * ctx.gamma ** (t - 1)


def _gradient_vector(ctx: LinearizationContext, t: int) -> np.ndarray:
    denom = ctx.g + 1.0
    if np.any(denom == 0.0):
        j = int(np.argwhere(denom == 0.0)[0, 0])
        raise WelfareSingularityError(
            f"agent {j} has return -1; welfare derivative undefined"
        )
    return ctx.welfare / denom * ctx.gamma ** (t - 1)


def linear_coefficient(ctx: LinearizationContext, model: Model, i: int, t: int,
                       s: int, a: int) -> float:
    """First-order welfare effect of substituting agent i's stage-(t) pair
    with (s, a): (substituted - current) reward difference dotted with the
    welfare gradient. Exactly 0 at the trajectory's own (s, a)."""
    cur_states = ctx.trajectory.states[t - 1]
    cur_actions = ctx.trajectory.actions[t - 1]
    cur_rewards = ctx.trajectory.rewards[t - 1]
    sub_states = cur_states.copy()
    sub_actions = cur_actions.copy()
    sub_states[i] = s
    sub_actions[i] = a
    sub_rewards = joint_reward(model, t, sub_states, sub_actions)
    grads = _gradient_vector(ctx, t)
    return float((sub_rewards - cur_rewards) @ grads)


def _coefficient_table(model: Model, ctx: LinearizationContext, i: int) -> np.ndarray:
    """Dense (T, S, A) table of linear coefficients for agent i.

    The substituted reward vector depends on (s, a) only through whether the
    substitution is a valid harvest and of which crop, so all S*A pairs
    collapse into at most n_crops + 1 classes per timestep; each class costs
    one joint_reward evaluation. Keeps an outer iteration linear in
    T * (|S||A| + n), matching the algorithm's stated complexity.
    """
    T, S, A = model.horizon, model.n_states, model.n_actions
    reward_fn = model.reward
    harvestable = reward_fn.harvestable
    h_act = reward_fn.harvest_action

    table = np.empty((T, S, A))
    for t in range(1, T + 1):
        grads = _gradient_vector(ctx, t)
        cur_states = ctx.trajectory.states[t - 1]
        cur_actions = ctx.trajectory.actions[t - 1]
        cur_rewards = ctx.trajectory.rewards[t - 1]
        class_value: dict[int, float] = {}
        for s in range(S):
            crop = int(harvestable[s])
            for a in range(A):
                key = crop if (a == h_act and crop >= 0) else -1
                if key not in class_value:
                    sub_states = cur_states.copy()
                    sub_actions = cur_actions.copy()
                    sub_states[i] = s
                    sub_actions[i] = a
                    sub_rewards = joint_reward(model, t, sub_states, sub_actions)
                    class_value[key] = float((sub_rewards - cur_rewards) @ grads)
                table[t - 1, s, a] = class_value[key]
    return table


def optimize_single_agent(model: Model, ctx: LinearizationContext,
                          i: int) -> tuple[np.ndarray, np.ndarray]:
    """Best-response policy slice for agent i against the fixed context.

    Backward pass over time-expanded states: DP_T(s) = max_a C(s, a) and
    DP_t(s) = max_a [C(s, a) + DP_{t+1}(P_t(s, a))]. Returns the argmax
    policy (ties -> lowest action) and the DP table, both shaped (T, S).
    """
    T, S = model.horizon, model.n_states
    coeff = _coefficient_table(model, ctx, i)
    trans = model.transitions.table
    dp = np.empty((T, S))
    act = np.empty((T, S), dtype=np.int64)
    future = np.zeros(S)  # no welfare improvement beyond the horizon
    for t in range(T, 0, -1):
        q = coeff[t - 1] + future[trans[t - 1]]
        dp[t - 1] = q.max(axis=1)
        act[t - 1] = q.argmax(axis=1)
        future = dp[t - 1]
    return act, dp


@dataclass
class AbaIteration:
    iteration: int
    agent: int
    welfare_before: float
    welfare_after: float


@dataclass
class AbaResult:
    policy: JointPolicy
    log: list[AbaIteration]
    welfare_history: list[float]  # realized welfare before each iteration + final


_SINGULARITY_RETRIES = 5


def _context_with_retries(model: Model, policy: JointPolicy, seed: int,
                          gamma: float) -> LinearizationContext:
    """Build the linearization context, re-simulating with fresh seeds if a
    return lands exactly on the -1 singularity."""
    for attempt in range(_SINGULARITY_RETRIES):
        ctx = LinearizationContext.from_policy(model, policy, seed + attempt, gamma)
        if not np.any(ctx.g + 1.0 == 0.0):
            return ctx
    raise WelfareSingularityError(
        f"returns kept hitting -1 after {_SINGULARITY_RETRIES} re-simulations; "
        "the welfare objective is undefined at this policy"
    )


def train_aba_detailed(model: Model, params: AbaParams) -> AbaResult:
    n = model.n_agents
    max_iterations = params.max_iterations
    if max_iterations is None:
        max_iterations = 20 * n
    rng = np.random.default_rng([params.seed, 1])  # agent-selection stream
    eval_seed = params.seed  # one fixed evaluation seed per training run

    if params.init == "random":
        policy = JointPolicy.random(model, params.seed)
    else:
        policy = JointPolicy.constant(model, 0)

    log: list[AbaIteration] = []
    history: list[float] = []
    for iteration in range(1, max_iterations + 1):
        ctx = _context_with_retries(model, policy, eval_seed, params.gamma)
        history.append(ctx.welfare)
        # improvement realized over the last full sweep of n iterations
        if iteration > n and history[-1] - history[-1 - n] < params.delta:
            break
        if params.agent_selection == "cyclic":
            agent = (iteration - 1) % n
        else:
            agent = int(rng.integers(n))
        best_slice, _ = optimize_single_agent(model, ctx, agent)
        policy.table[agent] = best_slice
        log.append(AbaIteration(iteration, agent, ctx.welfare, 0.0))

    final_ctx = _context_with_retries(model, policy, eval_seed, params.gamma)
    history.append(final_ctx.welfare)
    for row, after in zip(log, history[1:]):
        row.welfare_after = after
    return AbaResult(policy, log, history)


def train_aba(model: Model, params: AbaParams) -> JointPolicy:
    return train_aba_detailed(model, params).policy


def aba_log_to_csv(log: list[AbaIteration], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "selected_agent", "welfare_before", "welfare_after"])
        for row in log:
            writer.writerow([row.iteration, row.agent,
                             repr(row.welfare_before), repr(row.welfare_after)])
