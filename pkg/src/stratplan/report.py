"""Reports computed from an investigation log.

A report is a pure projection of the log: every figure is recomputed from
round records, nothing else is consulted (except an optional ground-truth
map used for detection quality).  "Per week" style rates are expressed per
1,000 simulated minutes of execution time.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics

from .engine import InvestigationLog

REPORT_FORMAT = "report-v1"
CSV_COLUMNS = ("round", "plan_size", "diff_added", "diff_canceled", "diff_size", "executed",
               "sensing_action", "planning_ms", "tactical_ms", "execution_ms", "other_ms")
BUCKET_MINUTES = 1000

# Figures published for the original production deployment, shown beside the
# measured values for orientation only; they are not targets.
PUBLISHED_REFERENCE = {
    "rounds_to_resolution": "14-15",
    "mean_diff_size": 6.1,
    "typical_plan_size": 120,
    "mean_flags_per_flagged_host": 4.96,
    "overhead_fraction": 0.0665,
}


def _series(log: InvestigationLog) -> list[dict]:
    rows = []
    for rec in log.records:
        t = rec["timings"]
        rows.append({
            "round": rec["round"],
            "plan_size": rec["plan_size"],
            "diff_added": len(rec["diff"]["added"]),
            "diff_canceled": len(rec["diff"]["canceled"]),
            "diff_size": rec["diff_size"],
            "executed": len(rec["executed"]),
            "sensing_action": rec["sensing_action"] or "",
            "planning_ms": t["planning_ms"],
            "tactical_ms": t["tactical_ms"],
            "execution_ms": t["execution_ms"],
            "other_ms": t["other_ms"],
        })
    return rows


def _mean(xs) -> float:
    xs = list(xs)
    return statistics.fmean(xs) if xs else 0.0


def build_report(log: InvestigationLog, ground_truth: dict[str, str] | None = None) -> dict:
    series = _series(log)
    members: dict[str, list[str]] = {}
    parents: dict[str, str | None] = {}
    roots: list[str] = []
    for rec in log.records:
        for ev in rec.get("events", []):
            if ev["type"] == "created":
                members[ev["hostset"]] = ev["members"]
                parents[ev["hostset"]] = ev["parent"]
                if ev["parent"] is None:
                    roots.append(ev["hostset"])
    first = log.first_seen()
    resolved = log.resolutions()
    has_children = {p for p in parents.values() if p is not None}

    rtr = {}
    for r in roots:
        if r in resolved and r in first:
            rtr[r] = resolved[r][0] - first[r] + 1
    flag_counts: dict[str, int] = {}
    flagged_leaf_hosts: set[str] = set()
    for h, (_, status) in resolved.items():
        if status != "flagged":
            continue
        for m in members.get(h, []):
            flag_counts[m] = flag_counts.get(m, 0) + 1
        if h not in has_children:
            flagged_leaf_hosts.update(members.get(h, []))
    all_hosts = {m for r in roots for m in members.get(r, [])}

    planning = sum(row["planning_ms"] for row in series)
    tactical = sum(row["tactical_ms"] for row in series)
    execution = sum(row["execution_ms"] for row in series)
    other = sum(row["other_ms"] for row in series)
    total = planning + tactical + execution + other

    buckets: dict[int, int] = {}
    clock = 0.0
    for rec in log.records:
        b = int(math.floor(clock / BUCKET_MINUTES))
        buckets[b] = buckets.get(b, 0) + 1
        clock += rec.get("simulated_minutes", 0.0)

    values = sorted(rtr.values())
    aggregates = {
        "total_rounds": len(log),
        "hostsets_analyzed": len(members),
        "hosts_total": len(all_hosts),
        "hosts_flagged": len(flagged_leaf_hosts),
        "mean_flags_per_flagged_host": _mean(flag_counts[h] for h in flagged_leaf_hosts),
        "rounds_to_resolution": {
            "per_root": {r: rtr[r] for r in sorted(rtr)},
            "median": statistics.median(values) if values else 0,
            "max": max(values, default=0),
            "min": min(values, default=0),
            "unresolved_roots": sorted(set(roots) - set(rtr)),
        },
        "mean_plan_size": _mean(row["plan_size"] for row in series),
        "mean_diff_size": _mean(row["diff_size"] for row in series),
        "deployments": sum(len(rec.get("deployments", [])) for rec in log.records),
        "simulated_minutes": clock,
        "rounds_per_1000_minutes": [buckets[b] for b in sorted(buckets)],
        "time_ms": {"planning": planning, "tactical": tactical, "execution": execution, "other": other},
        "overhead_fraction": (planning + tactical + other) / total if total else 0.0,
    }
    if ground_truth is not None:
        anomalous = {h for h, k in ground_truth.items() if k != "none"}
        hits = flagged_leaf_hosts & anomalous
        aggregates["detection"] = {
            "anomalous_hosts": len(anomalous),
            "true_flags": len(hits),
            "false_flags": len(flagged_leaf_hosts - anomalous),
            "recall": len(hits) / len(anomalous) if anomalous else 1.0,
            "precision": len(hits) / len(flagged_leaf_hosts) if flagged_leaf_hosts else 1.0,
        }
    return {
        "format": REPORT_FORMAT,
        "published_reference": PUBLISHED_REFERENCE,
        "aggregates": aggregates,
        "series": series,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report["series"]:
        writer.writerow(row)
    return buf.getvalue()
