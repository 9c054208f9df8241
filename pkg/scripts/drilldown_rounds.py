"""Rounds-to-resolution of the default simulated investigation across seeds.

    python scripts/drilldown_rounds.py --seeds 0 1 2 3 4 --roots 20
"""
import argparse
import statistics
import time

from stratplan.engine import EngineConfig, RoundEngine, initial_world, sim_roots
from stratplan.report import PUBLISHED_REFERENCE, build_report


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 7, 42])
    ap.add_argument("--roots", type=int, default=20)
    ap.add_argument("--hosts-per-root", type=int, default=8)
    args = ap.parse_args()

    bound = 2 * (8 + 4 + 2)
    print(f"{'seed':>6} {'rounds':>7} {'median':>7} {'max':>4} {'diff/plan':>10} {'secs':>6}")
    medians = []
    for seed in args.seeds:
        t0 = time.monotonic()
        config = EngineConfig(seed=seed)
        engine = RoundEngine(config, initial_world(config.domain, sim_roots(args.roots, args.hosts_per_root)))
        agg = build_report(engine.run())["aggregates"]
        rtr = agg["rounds_to_resolution"]
        medians.append(rtr["median"])
        ratio = agg["mean_diff_size"] / agg["mean_plan_size"]
        print(f"{seed:>6} {agg['total_rounds']:>7} {rtr['median']:>7} {rtr['max']:>4} {ratio:>10.1%} "
              f"{time.monotonic() - t0:>6.1f}")
    print(f"\nmedian of medians {statistics.median(medians)}; hard bound {bound}; "
          f"published reference {PUBLISHED_REFERENCE['rounds_to_resolution']} (production data, not comparable)")


if __name__ == "__main__":
    main()
