"""Multi-agent planning for market-coupled crop scheduling.

A library and CLI implementing three planners on a shared finite-horizon
multi-agent MDP whose agents interact only through congestion-priced crop
markets: independent tabular Q-learning, agent-by-agent welfare
optimization, and multi-agent rollout over a single-agent base policy.
"""

from .aba import (
    AbaParams,
    LinearizationContext,
    WelfareSingularityError,
    linear_coefficient,
    optimize_single_agent,
    train_aba,
    train_aba_detailed,
    welfare_gradient,
)
from .base_policy import (
    BasePolicy,
    ValueFunction,
    bellman_residual,
    greedy_policy,
    solve_base_policy,
    solve_value_function,
)
from .bench import (
    ConfigError,
    ExperimentConfig,
    ResultRow,
    config_from_dict,
    desk_greenhouse_model,
    run_experiment,
    write_results,
)
from .iql import IqlParams, epsilon_greedy, init_q_tables, q_update, train_iql, train_iql_detailed
from .market import (
    CropSpec,
    MarketRewardFunction,
    PriceCurve,
    build_greenhouse_model,
    build_random_mdp,
    count_valid_harvests,
    joint_reward,
    price,
)
from .mdp import (
    InitialDistribution,
    JointPolicy,
    Labels,
    Model,
    TimeGrid,
    TransitionTable,
    apply_transition,
    load_model,
    model_from_json,
    model_to_json,
    policy_lookup,
    save_model,
    validate_model,
)
from .rollout import (
    RolloutParams,
    base_continuation_value,
    q_factor,
    rollout_step,
    run_rollout,
    run_rollout_detailed,
)
from .sim import (
    FairnessReport,
    Trajectory,
    discounted_returns,
    evaluate_policy,
    fairness_metrics,
    simulate,
    trajectory_to_csv,
    welfare,
)

__version__ = "0.1.0"
