import csv

from cropmarl_figures.render import RESULT_COLUMNS


def write_rows(path, rows):
    """Write a schema-exact bench result CSV from dict rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([row[c] for c in RESULT_COLUMNS])


def aggregate_row(policy, n_agents, total, gamma=0.9, slope=500.0, seed=0,
                  runtime_ms=100.0, experiment="joint-reward"):
    return {
        "experiment": experiment, "policy": policy, "n_agents": n_agents,
        "gamma": gamma, "slope_coefficient": slope, "seed": seed,
        "agent_id": -1, "return": total * 0.8, "total_reward": total,
        "welfare": 1.0 + total, "runtime_ms": runtime_ms,
    }


def per_agent_row(policy, n_agents, agent_id, value, **kwargs):
    row = aggregate_row(policy, n_agents, value, **kwargs)
    row["agent_id"] = agent_id
    return row
