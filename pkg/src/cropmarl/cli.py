"""Command-line interface.

Subcommands:
  bench     run an experiment grid from a JSON config and write result CSV
  train     train one policy on the configured model and save it as JSON
  simulate  roll out a policy on the configured model and dump the trajectory

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
MARL_THREADS caps worker concurrency for bench grids.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench
from .aba import AbaParams, train_aba_detailed, aba_log_to_csv
from .base_policy import solve_base_policy
from .bench import ConfigError, config_from_dict, run_experiment, write_results
from .iql import IqlParams, train_iql_detailed, training_log_to_csv
from .mdp import JointPolicy, Model
from .rollout import RolloutParams, run_rollout
from .sim import simulate, trajectory_to_csv


def _load_config(path: str | None, paper_scale: bool) -> bench.ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config: file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON in {path}: {exc}")
    return config_from_dict(doc, paper_scale=paper_scale)


def policy_to_json(policy: JointPolicy) -> str:
    n, horizon, n_states = policy.table.shape
    return json.dumps({
        "n_agents": n,
        "horizon": horizon,
        "n_states": n_states,
        "table": policy.table.tolist(),
    }, indent=2)


def policy_from_json(text: str) -> JointPolicy:
    doc = json.loads(text)
    return JointPolicy(np.asarray(doc["table"], dtype=np.int64))


def _train_policy(model: Model, name: str, gamma: float, seed: int,
                  config: bench.ExperimentConfig, log_path: str | None) -> JointPolicy:
    if name == "iql":
        result = train_iql_detailed(model, IqlParams(gamma=gamma, seed=seed, **config.iql))
        if log_path:
            training_log_to_csv(result.episode_rewards, log_path)
        return result.policy
    if name == "aba":
        result = train_aba_detailed(model, AbaParams(gamma=gamma, seed=seed, **config.aba))
        if log_path:
            aba_log_to_csv(result.log, log_path)
        return result.policy
    base = solve_base_policy(model, gamma)
    policy, _ = run_rollout(model, base, RolloutParams(gamma, seed))
    return policy


def _cmd_bench(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.paper_scale)
    if args.seed is not None:
        config.seeds = [args.seed]
    rows = run_experiment(config)
    out = args.out or config.output or "results.csv"
    write_results(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.paper_scale)
    point = bench.GridPoint(config.agent_counts[0], config.gammas[0],
                            config.slope_coefficients[0],
                            args.seed if args.seed is not None else config.seeds[0])
    model = bench._build_model(config, point)
    policy = _train_policy(model, args.policy, point.gamma, point.seed, config, args.log)
    out = args.out or f"{args.policy}_policy.json"
    with open(out, "w") as fh:
        fh.write(policy_to_json(policy))
        fh.write("\n")
    print(f"wrote policy to {out}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.paper_scale)
    point = bench.GridPoint(config.agent_counts[0], config.gammas[0],
                            config.slope_coefficients[0],
                            args.seed if args.seed is not None else config.seeds[0])
    model = bench._build_model(config, point)
    if args.policy_file:
        with open(args.policy_file) as fh:
            policy = policy_from_json(fh.read())
    elif args.policy == "base":
        policy = solve_base_policy(model, point.gamma).as_joint_policy(model)
    else:
        policy = _train_policy(model, args.policy, point.gamma, point.seed, config, None)
    traj = simulate(model, policy, point.seed)
    out = args.out or "trajectory.csv"
    trajectory_to_csv(traj, out)
    print(f"wrote trajectory to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cropmarl",
        description="Multi-agent planners for market-coupled crop scheduling",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON experiment config path")
        p.add_argument("--out", help="output file path")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--paper-scale", action="store_true",
                       help="restore the full-size experiment defaults")

    p_bench = sub.add_parser("bench", help="run an experiment grid, write results CSV")
    common(p_bench)
    p_bench.set_defaults(func=_cmd_bench)

    p_train = sub.add_parser("train", help="train a policy, write policy JSON")
    common(p_train)
    p_train.add_argument("--policy", choices=("iql", "aba", "rollout"), required=True)
    p_train.add_argument("--log", help="optional path for the training log CSV")
    p_train.set_defaults(func=_cmd_train)

    p_sim = sub.add_parser("simulate", help="simulate a policy, write trajectory CSV")
    common(p_sim)
    p_sim.add_argument("--policy", choices=("iql", "aba", "rollout", "base"),
                       default="base")
    p_sim.add_argument("--policy-file", help="load a saved policy JSON instead of training")
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
