"""Plan length and planning time as the instance grows along two axes:
number of goals (hostsets fixed) and number of hostsets (goals fixed).

    python scripts/scalability.py --hostsets 100
"""
import argparse
import statistics
import time

from stratplan.grounding import ground
from stratplan.netadmin import DomainConfig, generate_domain, generate_problem
from stratplan.planner import plan_metric


def measure(domain, config, n_hostsets, n_goals, budget):
    t0 = time.monotonic()
    task = ground(domain, generate_problem(config, n_hostsets, n_goals, 0))
    t1 = time.monotonic()
    plan = plan_metric(task, budget)
    t2 = time.monotonic()
    return len(task.actions), len(plan), plan.nodes_expanded, t1 - t0, t2 - t1


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--hostsets", type=int, default=100)
    ap.add_argument("--goals", type=int, nargs="+", default=[1, 5, 10, 25, 50, 75, 100])
    ap.add_argument("--budget", type=float, default=10.0)
    args = ap.parse_args()
    config = DomainConfig()
    domain = generate_domain(config)

    header = f"{'hostsets':>8} {'goals':>6} {'ground':>7} {'length':>7} {'expanded':>9} {'ground s':>9} {'plan s':>7}"
    print("axis: goals")
    print(header)
    xs, ys = [], []
    for g in args.goals:
        n_ground, length, expanded, tg, tp = measure(domain, config, args.hostsets, g, args.budget)
        xs.append(g)
        ys.append(length)
        print(f"{args.hostsets:>8} {g:>6} {n_ground:>7} {length:>7} {expanded:>9} {tg:>9.2f} {tp:>7.2f}")
    if len(xs) > 1:
        print(f"R^2 of length vs goals: {statistics.correlation(xs, ys) ** 2:.4f}")

    print("\naxis: hostsets (1 goal)")
    print(header)
    for n in (1, 10, 50, 100, 200):
        n_ground, length, expanded, tg, tp = measure(domain, config, n, 1, args.budget)
        print(f"{n:>8} {1:>6} {n_ground:>7} {length:>7} {expanded:>9} {tg:>9.2f} {tp:>7.2f}")


if __name__ == "__main__":
    main()
