"""Synthetic network traces with injected anomalies, and the trace backend
that resolves sensing actions from them.

Three record kinds are produced per host: DNS queries, flow summaries and
sampled-flow digests.  Arrivals are Poisson at the configured hourly rates.
Anomalies rewrite the matching host's records:

* ``volume``: flow bytes multiplied by ``volume_factor`` (tcp signal),
* ``blacklist-contact``: some DNS queries go to blacklisted domains (http signal),
* ``geo-spread``: flows reach at least ``geo_prefixes`` distinct /24 prefixes
  (smtp signal).

The backend is a pure function of the traces and thresholds.
"""
from __future__ import annotations

import gzip
import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError, StratPlanError
from .rng import keyed_random, shuffled, uniform_index
from .sensing import (SensingManifest, SensingOutcome, flag_outcome, partition_outcome,
                      refine_outcome)
from .world import WorldState

ANOMALY_KINDS = ("volume", "blacklist-contact", "geo-spread")
SIGNAL_PROTOCOL = {"volume": "tcp", "blacklist-contact": "http", "geo-spread": "smtp"}
RECORD_KINDS = ("dns", "flow", "sampledflow")


class MissingTraces(StratPlanError):
    pass


@dataclass
class TraceConfig:
    n_hosts: int = 100
    duration_hours: float = 24.0
    rates: dict[str, float] = field(default_factory=lambda: {"dns": 20.0, "flow": 30.0, "sampledflow": 5.0})
    n_anomalies: int = 5
    anomaly_kinds: tuple[str, ...] = ANOMALY_KINDS
    volume_factor: float = 10.0
    blacklist_fraction: float = 0.1
    geo_prefixes: int = 30
    clean_prefixes: int = 6
    # chance that a clean host picks up a spurious signal; 0 keeps runs noiseless
    noise: float = 0.0
    blacklist: tuple[str, ...] = ("malware-cdn.example", "bad-updates.example", "phish-login.example",
                                  "c2-relay.example", "dropper.example")
    benign_domains: tuple[str, ...] = tuple(f"site{i:02d}.example" for i in range(40))

    def validate(self) -> None:
        problems = []
        if self.n_hosts < 1:
            problems.append("n_hosts must be at least 1")
        if self.duration_hours < 1:
            problems.append("duration_hours must be at least 1")
        if not 0 <= self.n_anomalies <= self.n_hosts:
            problems.append("n_anomalies must lie in [0, n_hosts]")
        for k in self.anomaly_kinds:
            if k not in ANOMALY_KINDS:
                problems.append(f"unknown anomaly kind {k!r}")
        if self.n_anomalies and not self.anomaly_kinds:
            problems.append("anomalies requested but no kinds allowed")
        for k in RECORD_KINDS:
            if self.rates.get(k, 0) < 0:
                problems.append(f"negative rate for {k}")
        if not 0 <= self.noise <= 1:
            problems.append("noise must lie in [0, 1]")
        if problems:
            raise ConfigError("; ".join(problems))


@dataclass(frozen=True)
class Thresholds:
    volume_z: float = 8.0
    blacklist_hits: int = 1
    geo_prefixes: int = 20
    # trailing window for the volume baseline; None uses the whole trace
    baseline_window_hours: float | None = None


@dataclass
class GroundTruth:
    labels: dict[str, str]

    def anomalous(self) -> set[str]:
        return {h for h, k in self.labels.items() if k != "none"}

    def dumps(self) -> str:
        return json.dumps(self.labels, indent=1, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text: str) -> "GroundTruth":
        return cls(dict(json.loads(text)))


@dataclass
class TraceSet:
    hosts: tuple[str, ...]
    duration_hours: float
    records: dict[str, list[dict]]
    blacklist: frozenset[str]
    _signals: dict | None = field(default=None, repr=False, compare=False)

    def count(self, kind: str) -> int:
        return len(self.records.get(kind, []))

    def signals(self, thresholds: Thresholds) -> dict[str, dict[str, float]]:
        """Per-host signal strengths keyed by protocol (tcp, http, smtp)."""
        key = thresholds.baseline_window_hours
        if self._signals is not None and self._signals[0] == key:
            return self._signals[1]
        start = 0.0 if key is None else max(0.0, self.duration_hours - key) * 3600
        volume = {h: 0.0 for h in self.hosts}
        prefixes: dict[str, set[str]] = {h: set() for h in self.hosts}
        hits = {h: 0 for h in self.hosts}
        for r in self.records.get("flow", []):
            if r["ts"] >= start:
                volume[r["host"]] += r["bytes"]
            prefixes[r["host"]].add(r["peer"].rsplit(".", 1)[0])
        for r in self.records.get("dns", []):
            if r["domain"] in self.blacklist:
                hits[r["host"]] += 1
        med = statistics.median(volume.values())
        mad = statistics.median(abs(v - med) for v in volume.values())
        sigma = max(1.4826 * mad, 0.01 * med, 1.0)
        out = {
            h: {"tcp": (volume[h] - med) / sigma, "http": float(hits[h]), "smtp": float(len(prefixes[h]))}
            for h in self.hosts
        }
        self._signals = (key, out)
        return out

    def fired(self, host: str, thresholds: Thresholds) -> frozenset[str]:
        sig = self.signals(thresholds)[host]
        out = set()
        if sig["tcp"] >= thresholds.volume_z:
            out.add("tcp")
        if sig["http"] >= thresholds.blacklist_hits:
            out.add("http")
        if sig["smtp"] >= thresholds.geo_prefixes:
            out.add("smtp")
        return frozenset(out)

    def save(self, directory: str | Path, compress: bool = False) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for kind in RECORD_KINDS:
            lines = "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records.get(kind, []))
            if compress:
                # mtime fixed so compressed files are byte-reproducible
                with open(directory / f"{kind}.ndjson.gz", "wb") as fh:
                    with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0) as gz:
                        gz.write(lines.encode())
            else:
                (directory / f"{kind}.ndjson").write_text(lines, encoding="utf-8")
        (directory / "blacklist.txt").write_text("".join(d + "\n" for d in sorted(self.blacklist)))
        meta = {"hosts": list(self.hosts), "duration_hours": self.duration_hours}
        (directory / "traces.json").write_text(json.dumps(meta, indent=1) + "\n")

    @classmethod
    def load(cls, directory: str | Path) -> "TraceSet":
        directory = Path(directory)
        try:
            meta = json.loads((directory / "traces.json").read_text())
        except FileNotFoundError:
            raise MissingTraces(f"no traces.json in {directory}") from None
        records = {}
        for kind in RECORD_KINDS:
            plain, packed = directory / f"{kind}.ndjson", directory / f"{kind}.ndjson.gz"
            if plain.exists():
                text = plain.read_text(encoding="utf-8")
            elif packed.exists():
                text = gzip.decompress(packed.read_bytes()).decode("utf-8")
            else:
                raise MissingTraces(f"no {kind} records in {directory}")
            records[kind] = [json.loads(line) for line in text.splitlines() if line.strip()]
        blacklist = frozenset(
            line.strip() for line in (directory / "blacklist.txt").read_text().splitlines() if line.strip())
        return cls(tuple(meta["hosts"]), float(meta["duration_hours"]), records, blacklist)


def host_names(n: int) -> list[str]:
    width = max(3, len(str(n)))
    return [f"host{i:0{width}d}" for i in range(1, n + 1)]


def _arrivals(rng, rate_per_hour: float, duration_s: float) -> list[float]:
    """Poisson arrival times via exponential gaps (inverse-CDF, stable across versions)."""
    if rate_per_hour <= 0:
        return []
    rate = rate_per_hour / 3600.0
    out, t = [], 0.0
    while True:
        t += -math.log(1.0 - rng.random()) / rate
        if t >= duration_s:
            return out
        out.append(round(t, 3))


def _ip(prefix: tuple[int, int, int], last: int) -> str:
    return f"{prefix[0]}.{prefix[1]}.{prefix[2]}.{last}"


def generate_traces(config: TraceConfig | None = None, seed: int = 0,
                    labels: dict[str, str] | None = None) -> tuple[TraceSet, GroundTruth]:
    """Generate traces; ``labels`` pins the anomaly kind per host, otherwise
    ``n_anomalies`` hosts are drawn by seed and given kinds in rotation."""
    config = config or TraceConfig()
    config.validate()
    hosts = host_names(config.n_hosts)
    if labels is None:
        pick = shuffled(keyed_random(seed, "anomalous-hosts"), hosts)[:config.n_anomalies]
        kinds = config.anomaly_kinds
        labels = {h: kinds[i % len(kinds)] for i, h in enumerate(sorted(pick))}
    else:
        unknown = set(labels) - set(hosts)
        if unknown:
            raise ConfigError(f"labels for unknown hosts: {sorted(unknown)[:3]}")
        if sum(1 for k in labels.values() if k != "none") > config.n_anomalies:
            raise ConfigError("labels exceed the anomaly budget")
    truth = GroundTruth({h: labels.get(h, "none") for h in hosts})
    duration_s = config.duration_hours * 3600.0
    # the shared pool of internal-facing prefixes clean hosts talk to
    pool = [(10, 20, i) for i in range(max(config.clean_prefixes * 4, 8))]
    foreign = [(100 + i // 200, i % 200, 7) for i in range(config.geo_prefixes)]
    records: dict[str, list[dict]] = {k: [] for k in RECORD_KINDS}
    protocols = ("http", "tcp", "smtp")
    for h in hosts:
        kind = truth.labels[h]
        rng = keyed_random(seed, "host", h)
        own = [pool[uniform_index(rng, len(pool))] for _ in range(config.clean_prefixes)]
        noisy = config.noise > 0 and kind == "none" and rng.random() < config.noise
        noisy_kind = ANOMALY_KINDS[uniform_index(rng, len(ANOMALY_KINDS))] if noisy else None
        effective = kind if kind != "none" else noisy_kind

        dns = []
        for ts in _arrivals(keyed_random(seed, "dns", h), config.rates.get("dns", 0), duration_s):
            domain = config.benign_domains[uniform_index(rng, len(config.benign_domains))]
            if effective == "blacklist-contact" and rng.random() < config.blacklist_fraction:
                domain = config.blacklist[uniform_index(rng, len(config.blacklist))]
            dns.append({"kind": "dns", "host": h, "ts": ts, "domain": domain})
        if effective == "blacklist-contact" and not any(r["domain"] in config.blacklist for r in dns):
            ts = round(rng.random() * duration_s, 3)
            dns.append({"kind": "dns", "host": h, "ts": ts, "domain": config.blacklist[0]})
        records["dns"].extend(dns)

        flows = []
        for i, ts in enumerate(_arrivals(keyed_random(seed, "flow", h), config.rates.get("flow", 0), duration_s)):
            nbytes = 1000 + int(rng.random() * 4000)
            proto = protocols[uniform_index(rng, 3)]
            if effective == "geo-spread":
                prefix = foreign[i % len(foreign)]
                proto = "smtp"
            else:
                prefix = own[uniform_index(rng, len(own))]
            if effective == "volume":
                nbytes = int(nbytes * config.volume_factor)
                proto = "tcp"
            flows.append({"kind": "flow", "host": h, "ts": ts, "peer": _ip(prefix, 1 + uniform_index(rng, 254)),
                          "bytes": nbytes, "protocol": proto})
        if effective == "geo-spread":
            # guarantee the spread even for a host with very few flows
            for i in range(len(flows), len(foreign)):
                ts = round(rng.random() * duration_s, 3)
                flows.append({"kind": "flow", "host": h, "ts": ts, "peer": _ip(foreign[i], 1),
                              "bytes": 1000, "protocol": "smtp"})
        records["flow"].extend(flows)

        for ts in _arrivals(keyed_random(seed, "sampledflow", h), config.rates.get("sampledflow", 0), duration_s):
            digest = f"{int(rng.random() * 2**32):08x}"
            records["sampledflow"].append({"kind": "sampledflow", "host": h, "ts": ts, "digest": digest})

    for kind in RECORD_KINDS:
        records[kind].sort(key=lambda r: (r["ts"], r["host"]))
    traces = TraceSet(tuple(hosts), float(config.duration_hours), records, frozenset(config.blacklist))
    return traces, truth


def expected_counts(config: TraceConfig) -> dict[str, float]:
    """Closed-form expected record counts (rates x duration x hosts)."""
    return {k: config.rates.get(k, 0) * config.duration_hours * config.n_hosts for k in RECORD_KINDS}


def analyze_traces(action: tuple[str, ...], added, state: WorldState, traces: TraceSet,
                   thresholds: Thresholds, manifest: SensingManifest) -> SensingOutcome:
    """Resolve a sensing action from traces; no randomness involved."""
    name, *args = action
    schema = manifest.entry(name)
    hostset = args[0]
    info = state.hostsets[hostset]
    members = tuple(info.members)
    known = set(traces.hosts)
    missing = [m for m in members if m not in known]
    if missing:
        raise MissingTraces(f"no traces for {missing[:3]} in {hostset}")
    added = frozenset(added)
    if not members:
        return SensingOutcome(tuple(action), hostset, remove_facts=added, discard=True)

    if schema.kind == "partition-by-protocol":
        order = [p for p, _ in schema.inclusion]
        buckets: dict[str, list[str]] = {p: [] for p in order}
        for m in members:
            fired = traces.fired(m, thresholds)
            for p in order:
                if p in fired:
                    buckets[p].append(m)
                    break
        spec = [(p, buckets[p]) for p in order if buckets[p]]
        return partition_outcome(action, hostset, added, spec, schema, info.level)

    p = schema.protocol
    firing = [m for m in members if p in traces.fired(m, thresholds)]
    if schema.kind == "refine-split" and info.level < schema.max_depth and len(members) >= 2:
        groups: dict[frozenset[str], list[str]] = {}
        for m in firing:
            groups.setdefault(traces.fired(m, thresholds), []).append(m)
        parts = [groups[k] for k in sorted(groups, key=sorted)]
        if len(parts) == 1 and len(parts[0]) > 1:
            parts = [[m] for m in parts[0]]
        return refine_outcome(action, hostset, added, parts, schema, info.level)
    return flag_outcome(action, hostset, added, bool(firing))


def trace_roots(hosts, n_roots: int = 10) -> dict[str, tuple[str, ...]]:
    """Split the host universe into ``n_roots`` contiguous root hostsets."""
    hosts = list(hosts)
    n_roots = max(1, min(n_roots, len(hosts)))
    size, extra = divmod(len(hosts), n_roots)
    out, start = {}, 0
    width = max(3, len(str(n_roots)))
    for i in range(n_roots):
        end = start + size + (1 if i < extra else 0)
        out[f"h{i + 1:0{width}d}"] = tuple(hosts[start:end])
        start = end
    return out


def config_to_json(config: TraceConfig) -> dict:
    data = asdict(config)
    data["anomaly_kinds"] = list(config.anomaly_kinds)
    data["blacklist"] = list(config.blacklist)
    data["benign_domains"] = list(config.benign_domains)
    return data
