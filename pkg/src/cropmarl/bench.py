"""Experiment harness: builds benchmark instances, runs the four headline
experiments (joint reward, runtime scaling, slope sweep, discount sweep)
across the three planners, and emits CSV result rows.

Desk-scale defaults keep every experiment in CI-friendly territory; the
paper_scale flag restores the full-size grid (horizon 26, agent counts up
to 20, larger training budgets). All non-timing outputs are pure functions
of the configuration: model, training, and evaluation seeds are derived
deterministically from each grid point's seed.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aba import AbaParams, train_aba
from .base_policy import solve_base_policy
from .iql import IqlParams, train_iql
from .market import (
    CropSpec,
    PriceCurve,
    build_greenhouse_model,
    build_random_mdp,
    crops_from_config,
    price_from_config,
)
from .mdp import Model, TimeGrid
from .rollout import RolloutParams, run_rollout
from .sim import discounted_returns, evaluate_policy, welfare

EXPERIMENTS = ("joint-reward", "runtime", "slope-sweep", "discount-sweep", "simulate")
POLICY_NAMES = ("iql", "aba", "rollout")

RESULT_COLUMNS = [
    "experiment", "policy", "n_agents", "gamma", "slope_coefficient",
    "seed", "agent_id", "return", "total_reward", "welfare", "runtime_ms",
]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


def default_crops(horizon: int) -> list[CropSpec]:
    """Synthetic benchmark crops.

    Single-timestep harvest windows make staggered planting the only way to
    avoid oversupply, so coordination has to happen in time, not just across
    crops. Prices are in units of one lakh rupees, keeping worst-case returns
    well above the g = -1 welfare singularity even when oversupply pushes
    prices negative.
    """
    return [
        CropSpec("premium", range(1, max(2, horizon - 2)), growth_duration=2, harvest_window=1),
        CropSpec("staple", range(1, max(2, horizon - 4)), growth_duration=4, harvest_window=1),
    ]


DEFAULT_CROP_PRICES = {
    "a": [-2.5e-4, -2.0e-4],
    "b": [0.25, 0.20],
}


def desk_greenhouse_model(n_agents: int, horizon: int, slope_coefficient: float,
                          days_per_step: int = 14) -> Model:
    crops = default_crops(horizon)
    curve = PriceCurve.constant(DEFAULT_CROP_PRICES["a"], DEFAULT_CROP_PRICES["b"],
                                horizon, slope_coefficient)
    return build_greenhouse_model(crops, curve, TimeGrid(horizon, days_per_step), n_agents)


@dataclass
class ExperimentConfig:
    experiment: str
    policies: list[str]
    agent_counts: list[int]
    gammas: list[float]               # length 1 unless discount-sweep
    slope_coefficients: list[float]   # length 1 unless slope-sweep
    horizon: int
    days_per_step: int
    seeds: list[int]
    model: dict
    eval_seed_count: int
    iql: dict = field(default_factory=dict)
    aba: dict = field(default_factory=dict)
    output: str | None = None
    paper_scale: bool = False


def _as_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def config_from_dict(doc: dict, paper_scale: bool = False) -> ExperimentConfig:
    """Parse and validate a configuration document, filling defaults.

    paper_scale restores the full-size experiment grid for any field the
    document does not set explicitly.
    """
    paper_scale = bool(doc.get("paper_scale", paper_scale))
    experiment = doc.get("experiment", "joint-reward")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: unknown kind {experiment!r}, expected one of {EXPERIMENTS}")

    policies = list(doc.get("policies", POLICY_NAMES))
    if not policies:
        raise ConfigError("policies: must be nonempty")
    for p in policies:
        if p not in POLICY_NAMES:
            raise ConfigError(f"policies: unknown policy {p!r}, expected subset of {POLICY_NAMES}")

    seeds = [int(s) for s in _as_list(doc.get("seeds", [0]))]
    if not seeds:
        raise ConfigError("seeds: must be nonempty")

    if experiment in ("slope-sweep", "discount-sweep", "simulate"):
        default_agents = [2]
    elif experiment == "runtime" or paper_scale:
        default_agents = [5, 10, 15, 20]
    else:
        default_agents = [5]
    agent_counts = [int(n) for n in _as_list(doc.get("agent_counts", default_agents))]
    if not agent_counts or min(agent_counts) < 1:
        raise ConfigError("agent_counts: must be a nonempty list of counts >= 1")

    default_gamma: object = 0.9
    if experiment == "discount-sweep":
        default_gamma = [0.3, 0.45, 0.6, 0.75, 0.9]
    gammas = [float(g) for g in _as_list(doc.get("gamma", default_gamma))]
    if not gammas:
        raise ConfigError("gamma: sweep list must be nonempty")
    for g in gammas:
        if not 0.0 < g <= 1.0:
            raise ConfigError(f"gamma: {g} outside (0, 1]")
    if experiment != "discount-sweep" and len(gammas) != 1:
        raise ConfigError("gamma: list form is only valid for the discount-sweep experiment")

    default_slope: object = 500.0
    if experiment == "slope-sweep":
        default_slope = [500.0, 750.0, 1000.0, 1250.0, 1500.0]
    slopes = [float(s) for s in _as_list(doc.get("slope_coefficients", default_slope))]
    if not slopes:
        raise ConfigError("slope_coefficients: sweep list must be nonempty")
    for s in slopes:
        if s <= 0:
            raise ConfigError(f"slope_coefficients: {s} must be positive")
    if experiment != "slope-sweep" and len(slopes) != 1:
        raise ConfigError("slope_coefficients: list form is only valid for the slope-sweep experiment")

    model = dict(doc.get("model", {}))
    default_kind = "random-mdp" if experiment == "runtime" else "greenhouse"
    kind = model.setdefault("kind", default_kind)
    if kind not in ("greenhouse", "random-mdp"):
        raise ConfigError(f"model.kind: unknown kind {kind!r}")
    if experiment == "runtime" and kind != "random-mdp":
        raise ConfigError("model.kind: the runtime experiment runs on the random-mdp builder")
    if kind == "greenhouse" and ("crops" in model) != ("price" in model):
        raise ConfigError("model.crops: custom greenhouse models need both crops and price")

    if "horizon" in doc:
        horizon = int(doc["horizon"])
    elif paper_scale:
        horizon = 26
    elif experiment == "runtime":
        horizon = 8
    else:
        horizon = 12
    if horizon < 1:
        raise ConfigError(f"horizon: must be >= 1, got {horizon}")

    days = int(doc.get("days_per_step", 14))
    if days < 1:
        raise ConfigError(f"days_per_step: must be >= 1, got {days}")

    eval_count = int(doc.get("eval_seeds", 16))
    if eval_count < 1:
        raise ConfigError(f"eval_seeds: must be >= 1, got {eval_count}")

    iql = dict(doc.get("iql", {}))
    bad = set(iql) - {"alpha", "epsilon", "episodes", "warm_start"}
    if bad:
        raise ConfigError(f"iql.{sorted(bad)[0]}: unknown or top-level-only parameter")
    iql.setdefault("episodes", 1000 if paper_scale else 500)
    aba = dict(doc.get("aba", {}))
    bad = set(aba) - {"max_iterations", "delta", "agent_selection", "init"}
    if bad:
        raise ConfigError(f"aba.{sorted(bad)[0]}: unknown or top-level-only parameter")

    return ExperimentConfig(
        experiment=experiment,
        policies=policies,
        agent_counts=agent_counts,
        gammas=gammas,
        slope_coefficients=slopes,
        horizon=horizon,
        days_per_step=days,
        seeds=seeds,
        model=model,
        eval_seed_count=eval_count,
        iql=iql,
        aba=aba,
        output=doc.get("output"),
        paper_scale=paper_scale,
    )


@dataclass(frozen=True)
class GridPoint:
    n_agents: int
    gamma: float
    slope_coefficient: float
    seed: int


def _grid(config: ExperimentConfig) -> list[GridPoint]:
    points = []
    if config.experiment == "discount-sweep":
        xs = [(config.agent_counts[0], g, config.slope_coefficients[0]) for g in config.gammas]
    elif config.experiment == "slope-sweep":
        xs = [(config.agent_counts[0], config.gammas[0], s) for s in config.slope_coefficients]
    else:
        xs = [(n, config.gammas[0], config.slope_coefficients[0]) for n in config.agent_counts]
    for n, g, s in xs:
        for seed in config.seeds:
            points.append(GridPoint(n, g, s, seed))
    return points


def _build_model(config: ExperimentConfig, point: GridPoint) -> Model:
    spec = config.model
    time = TimeGrid(config.horizon, config.days_per_step)
    if spec["kind"] == "random-mdp":
        return build_random_mdp(
            n_states=int(spec.get("n_states", 10)),
            n_actions=int(spec.get("n_actions", 3)),
            n_crops=int(spec.get("n_crops", 3)),
            time=time,
            n_agents=point.n_agents,
            seed=point.seed,
            slope_coefficient=float(spec.get("slope_coefficient", 1.0)),
        )
    if "crops" in spec:
        crops = crops_from_config(spec["crops"])
        curve = price_from_config(spec["price"], len(crops), config.horizon,
                                  point.slope_coefficient)
        return build_greenhouse_model(crops, curve, time, point.n_agents)
    return desk_greenhouse_model(point.n_agents, config.horizon,
                                 point.slope_coefficient, config.days_per_step)


def _derived_seeds(point: GridPoint, policy_index: int,
                   eval_count: int) -> tuple[int, list[int]]:
    """Training seed per (point, policy); evaluation seeds shared across
    policies at a point so every planner faces the same initial states."""
    train_seed = int(np.random.SeedSequence([point.seed, policy_index + 1]).generate_state(1)[0])
    eval_seeds = [int(x) for x in np.random.SeedSequence([point.seed, 0]).generate_state(eval_count)]
    return train_seed, eval_seeds


@dataclass
class ResultRow:
    experiment: str
    policy: str
    n_agents: int
    gamma: float
    slope_coefficient: float
    seed: int
    agent_id: int          # -1 for the aggregate row
    return_: float
    total_reward: float
    welfare: float
    runtime_ms: float

    def as_record(self) -> list:
        return [
            self.experiment, self.policy, self.n_agents,
            repr(self.gamma), repr(self.slope_coefficient), self.seed,
            self.agent_id, repr(self.return_), repr(self.total_reward),
            repr(self.welfare), repr(self.runtime_ms),
        ]


def _rows_for_policy(config: ExperimentConfig, point: GridPoint, policy_name: str,
                     mean_disc: np.ndarray, mean_undisc: np.ndarray,
                     runtime_ms: float) -> list[ResultRow]:
    u, _ = welfare(mean_disc)
    common = dict(
        experiment=config.experiment, policy=policy_name, n_agents=point.n_agents,
        gamma=point.gamma, slope_coefficient=point.slope_coefficient,
        seed=point.seed, welfare=u, runtime_ms=runtime_ms,
    )
    rows = [
        ResultRow(agent_id=i, return_=float(mean_disc[i]),
                  total_reward=float(mean_undisc[i]), **common)
        for i in range(point.n_agents)
    ]
    rows.append(ResultRow(agent_id=-1, return_=float(mean_disc.sum()),
                          total_reward=float(mean_undisc.sum()), **common))
    return rows


def _run_point(config: ExperimentConfig, point: GridPoint) -> list[ResultRow]:
    model = _build_model(config, point)
    eval_count = 1 if config.experiment == "simulate" else config.eval_seed_count
    rows: list[ResultRow] = []
    for policy_index, name in enumerate(config.policies):
        train_seed, eval_seeds = _derived_seeds(point, policy_index, eval_count)
        if name == "iql":
            params = IqlParams(gamma=point.gamma, seed=train_seed, **config.iql)
            start = time.perf_counter()
            policy = train_iql(model, params)
            elapsed = time.perf_counter() - start
            ev = evaluate_policy(model, policy, point.gamma, eval_seeds)
            mean_disc, mean_undisc = ev.mean_returns, ev.mean_undiscounted
        elif name == "aba":
            params = AbaParams(gamma=point.gamma, seed=train_seed, **config.aba)
            start = time.perf_counter()
            policy = train_aba(model, params)
            elapsed = time.perf_counter() - start
            ev = evaluate_policy(model, policy, point.gamma, eval_seeds)
            mean_disc, mean_undisc = ev.mean_returns, ev.mean_undiscounted
        else:
            # rollout plans online: every evaluation episode is a fresh plan,
            # so base-policy solving and all planning runs are the timed phase
            start = time.perf_counter()
            base = solve_base_policy(model, point.gamma)
            disc = np.zeros(point.n_agents)
            undisc = np.zeros(point.n_agents)
            for es in eval_seeds:
                _, traj = run_rollout(model, base, RolloutParams(point.gamma, es))
                disc += discounted_returns(traj, point.gamma)
                undisc += traj.rewards.sum(axis=0)
            elapsed = time.perf_counter() - start
            mean_disc, mean_undisc = disc / len(eval_seeds), undisc / len(eval_seeds)
        rows.extend(_rows_for_policy(config, point, name, mean_disc, mean_undisc,
                                     elapsed * 1000.0))
    return rows


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Run the configured experiment grid and return all result rows.

    MARL_THREADS caps worker concurrency across grid points; the runtime
    experiment is always serialized to keep timing measurements clean.
    """
    points = _grid(config)
    workers = int(os.environ.get("MARL_THREADS", "1") or "1")
    if workers > 1 and config.experiment != "runtime":
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda p: _run_point(config, p), points))
    else:
        chunks = [_run_point(config, p) for p in points]
    return [row for chunk in chunks for row in chunk]


def write_results(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow(row.as_record())


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RESULT_COLUMNS:
            raise ValueError(f"unexpected results header: {header}")
        rows = []
        for rec in reader:
            rows.append(ResultRow(
                experiment=rec[0], policy=rec[1], n_agents=int(rec[2]),
                gamma=float(rec[3]), slope_coefficient=float(rec[4]),
                seed=int(rec[5]), agent_id=int(rec[6]), return_=float(rec[7]),
                total_reward=float(rec[8]), welfare=float(rec[9]),
                runtime_ms=float(rec[10]),
            ))
        return rows
