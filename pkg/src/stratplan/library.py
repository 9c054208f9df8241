"""Default analytic component library and strategic-action tag mapping.

The library has 65 components, 49 on the stream platform and 16 on the batch
platform.  Tags are chosen so every action of the default drill-down domain
composes into a flow from the raw feeds listed in ``SOURCE_TAGS``.
"""
from __future__ import annotations

from .netadmin import DomainConfig, generate_domain
from .tactical import Component

SOURCE_TAGS = frozenset({"netflow", "dns", "ipfix", "sflow", "blacklist-feed"})

H = ("hostset", "hostset")
P = ("protocol", "protocol")
D = ("distancefunction", "distancefunction")

# id, platform, inputs, outputs, cost, parameters
_TABLE = (
    # feed parsers
    ("netflow-parser", "stream", "netflow", "flow-records", 1, ()),
    ("ipfix-parser", "stream", "ipfix", "flow-records", 1, ()),
    ("sflow-sampler", "stream", "sflow", "flow-records sampled-packets", 2, ()),
    ("dns-parser", "stream", "dns", "dns-records", 1, ()),
    ("dns-response-parser", "stream", "dns", "dns-responses", 1, ()),
    ("blacklist-loader", "stream", "blacklist-feed", "blacklist-set", 1, ()),
    ("blacklist-normalizer", "stream", "blacklist-set", "blacklist-domains", 1, ()),
    # setup chain
    ("window-selector", "stream", "flow-records", "windowed-flows", 1, (H,)),
    ("flow-summarizer", "stream", "windowed-flows", "flow-summary", 2, (H,)),
    ("dns-summarizer", "stream", "dns-records", "dns-summary", 2, (H,)),
    ("blacklist-matcher", "stream", "dns-records blacklist-set", "blacklist-hits", 2, (H,)),
    ("frequent-host-counter", "stream", "flow-summary", "frequent-hosts", 2, (H,)),
    ("traffic-aggregator", "stream", "flow-summary", "aggregate-traffic", 3, (H,)),
    ("threshold-filter", "stream", "aggregate-traffic", "threshold-flags", 1, (H,)),
    ("protocol-grouper", "stream", "flow-summary", "protocol-groups", 2, (H,)),
    ("protocol-classifier", "stream", "protocol-groups threshold-flags", "protocol-partition", 3, (H,)),
    # protocol traffic filters
    ("http-filter", "stream", "flow-records", "http-traffic", 1, (H, P)),
    ("tcp-filter", "stream", "flow-records", "tcp-traffic", 1, (H, P)),
    ("smtp-filter", "stream", "flow-records", "smtp-traffic", 1, (H, P)),
    ("http-dns-correlator", "stream", "dns-records http-traffic", "http-hosts", 2, (H,)),
    ("smtp-relay-tracker", "stream", "smtp-traffic", "smtp-relays", 2, (H,)),
    ("tcp-port-profiler", "stream", "tcp-traffic", "port-profile", 2, (H,)),
    # model comparison and refinement
    ("model-builder", "stream", "flow-records", "traffic-model", 3, ()),
    ("zscore-comparator", "stream", "traffic-model flow-records", "model-compare", 2, (H, D)),
    ("entropy-comparator", "stream", "traffic-model port-profile", "model-compare entropy-score", 3, (H, D)),
    ("hostset-splitter", "stream", "model-compare", "split", 1, (H,)),
    ("anomaly-marker", "stream", "model-compare", "anomaly-mark", 1, (H,)),
    ("report-writer", "stream", "anomaly-mark", "report", 1, (H,)),
    ("admin-notifier", "stream", "report", "admin-notify", 1, (H,)),
    # auxiliary stream analytics
    ("geoip-enricher", "stream", "flow-records", "geo-tags", 2, ()),
    ("geo-spread-scorer", "stream", "geo-tags", "geo-spread", 2, (H,)),
    ("peer-counter", "stream", "flow-records", "peer-counts", 1, (H,)),
    ("byte-counter", "stream", "flow-records", "byte-counts", 1, (H,)),
    ("packet-digester", "stream", "sampled-packets", "packet-digests", 1, ()),
    ("payload-sampler", "stream", "sampled-packets", "payload-samples", 2, ()),
    ("dns-entropy-scorer", "stream", "dns-records", "dns-entropy", 2, (H,)),
    ("nxdomain-counter", "stream", "dns-responses", "nxdomain-counts", 1, (H,)),
    ("fast-flux-detector", "stream", "dns-responses", "fast-flux", 3, (H,)),
    ("beacon-detector", "stream", "windowed-flows", "beacons", 3, (H,)),
    ("port-scan-detector", "stream", "flow-records", "port-scans", 2, (H,)),
    ("volume-spike-detector", "stream", "byte-counts", "volume-spikes", 2, (H,)),
    ("session-reassembler", "stream", "flow-records", "sessions", 3, ()),
    ("ttl-analyzer", "stream", "sampled-packets", "ttl-profile", 2, ()),
    ("asn-mapper", "stream", "flow-records", "asn-tags", 1, ()),
    ("watchlist-joiner", "stream", "blacklist-hits frequent-hosts", "watchlist", 2, (H,)),
    ("alert-deduplicator", "stream", "anomaly-mark", "dedup-alerts", 1, ()),
    ("ticket-creator", "stream", "report", "ticket", 1, (H,)),
    ("hostset-annotator", "stream", "split", "split-annotations", 1, (H,)),
    ("stream-archiver", "stream", "flow-records", "archive", 1, ()),
    # batch jobs
    ("pig-flow-loader", "batch", "netflow", "flow-records", 2, ()),
    ("pig-dns-loader", "batch", "dns", "dns-records", 2, ()),
    ("pig-daily-aggregator", "batch", "flow-records", "daily-aggregate", 4, ()),
    ("pig-baseline-builder", "batch", "daily-aggregate", "traffic-model", 5, ()),
    ("pig-host-history", "batch", "flow-records", "host-history", 4, (H,)),
    ("pig-frequent-hosts", "batch", "host-history", "frequent-hosts", 3, (H,)),
    ("pig-blacklist-join", "batch", "dns-records blacklist-set", "blacklist-hits", 3, (H,)),
    ("pig-geo-rollup", "batch", "geo-tags", "geo-rollup", 3, ()),
    ("pig-protocol-census", "batch", "flow-records", "protocol-census", 3, ()),
    ("pig-top-talkers", "batch", "daily-aggregate", "top-talkers", 3, ()),
    ("pig-dns-history", "batch", "dns-records", "dns-history", 3, ()),
    ("pig-model-refresh", "batch", "host-history", "traffic-model", 5, ()),
    ("pig-report-export", "batch", "report", "report-archive", 2, ()),
    ("pig-asn-rollup", "batch", "asn-tags", "asn-rollup", 3, ()),
    ("pig-session-stats", "batch", "sessions", "session-stats", 4, ()),
    ("pig-retention-pruner", "batch", "archive", "pruned-archive", 2, ()),
)


def default_library() -> list[Component]:
    return [
        Component(cid, platform, frozenset(inputs.split()), frozenset(outputs.split()), cost, params)
        for cid, platform, inputs, outputs, cost, params in _TABLE
    ]


_SETUP_TAGS = {
    "select-time-window": ["windowed-flows"],
    "gather-flow-records": ["flow-summary"],
    "gather-dns-records": ["dns-summary"],
    "extract-blacklist": ["blacklist-hits"],
    "check-global-frequent-hosts": ["frequent-hosts"],
    "aggregate-traffic": ["aggregate-traffic"],
    "apply-thresholds": ["threshold-flags"],
    "group-by-protocol": ["protocol-groups"],
}


def _tags_for(name: str, protocols) -> list[str]:
    if name in _SETUP_TAGS:
        return _SETUP_TAGS[name]
    if name.startswith("prepare-stage-"):
        return ["flow-summary"]
    if name == "sense-gather-final-protocols":
        return ["protocol-partition"]
    if name == "pop-to-admin":
        return ["report", "admin-notify"]
    for p in protocols:
        traffic = f"{p}-traffic"
        if name == f"filter-{p}" or name.startswith(f"enrich-{p}-"):
            return [traffic]
        if name == f"compare-{p}":
            return [traffic, "model-compare"]
        if name == f"sense-refine-{p}":
            return [traffic, "model-compare", "split"]
        if name == f"mark-anomalous-{p}":
            return ["anomaly-mark", traffic]
    raise KeyError(name)


def default_mapping(config: DomainConfig | None = None) -> dict[str, dict]:
    """Action name -> {tags, params} for every schema of the generated domain.

    Parameter names are the types of the schema's parameters, so
    ``pop-to-admin(h7)`` binds ``hostset=h7``.
    """
    config = config or DomainConfig()
    domain = generate_domain(config)
    mapping = {}
    for schema in domain.actions:
        mapping[schema.name] = {
            "tags": sorted(_tags_for(schema.name, config.protocols)),
            "params": [t for _, t in schema.parameters],
        }
    return mapping
