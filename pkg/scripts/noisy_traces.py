"""Detection quality of the trace backend as spurious signals are added.

Reports precision and recall per noise level; nothing here is a pass/fail
check, since there is no reference curve to hold it against.

    python scripts/noisy_traces.py --noise 0 0.05 0.1 0.2 --seeds 0 1 2
"""
import argparse
import statistics

from stratplan.engine import EngineConfig, RoundEngine, initial_world
from stratplan.report import build_report
from stratplan.traces import TraceConfig, generate_traces, trace_roots


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.02, 0.05, 0.1, 0.2])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--hosts", type=int, default=100)
    ap.add_argument("--anomalies", type=int, default=5)
    ap.add_argument("--hours", type=float, default=24.0)
    args = ap.parse_args()

    print(f"{'noise':>6} {'precision':>10} {'recall':>7} {'false flags':>12} {'rounds':>7}")
    for noise in args.noise:
        precision, recall, false_flags, rounds = [], [], [], []
        for seed in args.seeds:
            config = TraceConfig(n_hosts=args.hosts, n_anomalies=args.anomalies, duration_hours=args.hours,
                                 noise=noise)
            traces, truth = generate_traces(config, seed)
            engine_config = EngineConfig(backend="traces", seed=seed)
            engine = RoundEngine(engine_config, initial_world(engine_config.domain, trace_roots(traces.hosts)),
                                 traces=traces)
            agg = build_report(engine.run(), truth.labels)["aggregates"]
            det = agg["detection"]
            precision.append(det["precision"])
            recall.append(det["recall"])
            false_flags.append(det["false_flags"])
            rounds.append(agg["total_rounds"])
        print(f"{noise:>6.2f} {statistics.fmean(precision):>10.3f} {statistics.fmean(recall):>7.3f} "
              f"{statistics.fmean(false_flags):>12.1f} {statistics.fmean(rounds):>7.1f}")


if __name__ == "__main__":
    main()
