"""Generator for the network-administration drill-down domain.

The domain is a linear setup chain that prepares a hostset and groups its
traffic by protocol, a protocol sensor that decides which protocol looks
anomalous, one analysis branch per protocol ending in a refinement sensor and
an anomaly mark, and a terminal escalation action ``pop-to-admin``.  Both a
metric variant (costs on ``total-cost``) and a temporal variant (durations)
are produced from the same schemas.

Schemas are declared goal-first (escalation, then the branches from last
step to first, then the sensor, then the setup chain backwards).  The
planner breaks ties on the lower action id, so this order makes it finish
work already under way on a hostset before opening a new one.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError
from .pddl import Atom, ActionSchema, Domain, Predicate, Problem
from .rng import keyed_random, shuffled
from .sensing import OutcomeSchema, SensingManifest

DOMAIN_NAME = "netadmin"
PROTOCOL_SENSOR = "sense-gather-final-protocols"
POP = "pop-to-admin"
TYPES = ("hostset", "protocol", "distancefunction", "timewindow", "trafficmodel",
         "blacklist", "threshold", "report")
CATEGORIES = ("setup", "branch", "sensing", "pop")

# (name, output predicate, extra typed parameter, static predicate guarding it)
SETUP_CATALOG = (
    ("select-time-window", "windowed", ("?w", "timewindow"), "window-open"),
    ("gather-flow-records", "flows-gathered", None, None),
    ("gather-dns-records", "dns-gathered", None, None),
    ("extract-blacklist", "extracted-blacklist", ("?b", "blacklist"), "blacklist-loaded"),
    ("check-global-frequent-hosts", "frequent-hosts-checked", None, None),
    ("aggregate-traffic", "aggregated", ("?m", "trafficmodel"), "model-ready"),
    ("apply-thresholds", "thresholded", ("?t", "threshold"), "threshold-set"),
)
GROUPING = ("group-by-protocol", "protocol-grouped", None, None)

# fixed objects: (name, type, static predicate that holds for it)
FIXED_OBJECTS = (
    ("zscore-distance", "distancefunction", "distance-available"),
    ("window-24h", "timewindow", "window-open"),
    ("baseline-model", "trafficmodel", "model-ready"),
    ("malware-domains", "blacklist", "blacklist-loaded"),
    ("volume-threshold", "threshold", "threshold-set"),
    ("admin-report", "report", "report-ready"),
)

_NAME = re.compile(r"[a-z][a-z0-9-]*\Z")


@dataclass
class DomainConfig:
    protocols: list[str] = field(default_factory=lambda: ["http", "tcp", "smtp"])
    setup_chain_length: int = 8
    branch_length: int | dict[str, int] = 4
    # keys are categories (setup, branch, sensing, pop) or schema names
    costs: dict[str, Fraction] = field(default_factory=dict)
    durations: dict[str, Fraction] = field(default_factory=dict)
    seed: int = 0
    # simulator outcome parameters written into the sensing manifest
    protocol_inclusion: float = 0.5
    child_counts: tuple[float, ...] = (0.1, 0.3, 0.4, 0.2)
    max_depth: int = 2
    flag_probability: float = 0.5

    def validate(self) -> None:
        problems = []
        if not self.protocols:
            problems.append("at least one protocol is required")
        if len(set(self.protocols)) != len(self.protocols):
            problems.append("duplicate protocols")
        reserved = {name for name, _, _ in FIXED_OBJECTS}
        for p in self.protocols:
            if not isinstance(p, str) or not _NAME.match(p) or p in reserved:
                problems.append(f"invalid protocol name {p!r}")
        if self.setup_chain_length < 1:
            problems.append("setup_chain_length must be at least 1")
        for p in self.protocols:
            if self.branch_length_of(p) < 2:
                problems.append(f"branch_length for {p} must be at least 2")
        for table in (self.costs, self.durations):
            for k, v in table.items():
                if Fraction(v) < 0:
                    problems.append(f"negative value for {k}")
        if problems:
            raise ConfigError("; ".join(problems))

    def branch_length_of(self, protocol: str) -> int:
        if isinstance(self.branch_length, dict):
            return self.branch_length.get(protocol, 4)
        return self.branch_length


DEFAULT_COSTS = {"setup": Fraction(1), "branch": Fraction(5), "sensing": Fraction(10), "pop": Fraction(1)}
DEFAULT_DURATIONS = {"setup": Fraction(1), "branch": Fraction(5), "sensing": Fraction(15), "pop": Fraction(1)}


def _lookup(table: dict, defaults: dict, name: str, category: str) -> Fraction:
    if name in table:
        return Fraction(table[name])
    if category in table:
        return Fraction(table[category])
    return defaults[category]


def _a(pred: str, *args: str) -> Atom:
    return Atom(pred, tuple(args))


@dataclass(frozen=True)
class _Stage:
    name: str
    category: str
    parameters: tuple[tuple[str, str], ...]
    pre: tuple[Atom, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...] = ()


def setup_chain(length: int) -> list[tuple[str, str, tuple[str, str] | None, str | None]]:
    """Names and output predicates of a setup chain of the given length."""
    if length <= len(SETUP_CATALOG) + 1:
        return list(SETUP_CATALOG[:length - 1]) + [GROUPING]
    extra = [(f"prepare-stage-{i}", f"stage-{i}-done", None, None)
             for i in range(1, length - len(SETUP_CATALOG))]
    return list(SETUP_CATALOG) + extra + [GROUPING]


def _branch_stages(p: str, n: int) -> tuple[list[_Stage], Atom]:
    """Stages of protocol branch ``p`` with ``n`` actions, plus the re-entry
    atom (over ``?s``) that a refined child hostset receives."""
    s = ("?s", "hostset")
    stages: list[_Stage] = []
    entry = (_a("protocol-candidate", "?s", "?p"), _a(f"is-{p}", "?p"))
    n_pre = n - 2
    out: Atom | None = None
    if n_pre >= 1:
        stages.append(_Stage(f"filter-{p}", "branch", (s, ("?p", "protocol")), entry,
                             (_a(f"filtered-{p}", "?s"),)))
        out = _a(f"filtered-{p}", "?s")
    for k in range(1, n_pre - 1):
        nxt = _a(f"enriched-{p}-{k}", "?s")
        stages.append(_Stage(f"enrich-{p}-{k}", "branch", (s,), (out,), (nxt,)))
        out = nxt
    if n_pre >= 2:
        reentry = out
        compared = _a(f"compared-{p}", "?s", "?d")
        stages.append(_Stage(
            f"compare-{p}", "branch", (s, ("?d", "distancefunction"), ("?m", "trafficmodel")),
            (out, _a("model-ready", "?m"), _a("distance-available", "?d")), (compared,)))
        sense_params = (s, ("?d", "distancefunction"))
        sense_pre: tuple[Atom, ...] = (compared,)
        sense_del: tuple[Atom, ...] = (compared,)
    elif n_pre == 1:
        reentry = entry[0]
        sense_params, sense_pre, sense_del = (s,), (out,), (out,)
    else:
        reentry = entry[0]
        sense_params = (s, ("?p", "protocol"))
        sense_pre, sense_del = entry, (entry[0],)
    refined = _a(f"refined-{p}", "?s")
    stages.append(_Stage(f"sense-refine-{p}", "sensing", sense_params, sense_pre, (refined,), sense_del))
    stages.append(_Stage(f"mark-anomalous-{p}", "branch", (s, ("?r", "report")),
                         (refined, _a("report-ready", "?r")), (_a("anomalous", "?s"),)))
    return stages, reentry


def _all_stages(config: DomainConfig) -> tuple[list[_Stage], list[_Stage], list[list[_Stage]], _Stage]:
    s = ("?s", "hostset")
    setup: list[_Stage] = []
    prev = _a("unprocessed", "?s")
    for i, (name, out, extra, static) in enumerate(setup_chain(config.setup_chain_length)):
        params = (s,) + ((extra,) if extra else ())
        pre = (prev,) + ((_a(static, extra[0]),) if static else ())
        add = (_a(out, "?s"),)
        if name == "check-global-frequent-hosts":
            add = add + (_a("checked-global-frequent-hosts"),)
        delete = (_a("unprocessed", "?s"),) if i == 0 else ()
        setup.append(_Stage(name, "setup", params, pre, add, delete))
        prev = _a(out, "?s")
    sensor = _Stage(PROTOCOL_SENSOR, "sensing", (s, ("?p", "protocol")), (prev,),
                    (_a("protocol-candidate", "?s", "?p"),), (prev,))
    branches = [_branch_stages(p, config.branch_length_of(p))[0] for p in config.protocols]
    pop = _Stage(POP, "pop", (s,), (_a("anomalous", "?s"),), (_a("investigated", "?s"),))
    return setup, [sensor], branches, pop


def _predicates(config: DomainConfig) -> tuple[Predicate, ...]:
    s = ("?s", "hostset")
    preds = [Predicate("unprocessed", (s,))]
    for _, out, _, _ in setup_chain(config.setup_chain_length):
        preds.append(Predicate(out, (s,)))
        if out == "frequent-hosts-checked":
            preds.append(Predicate("checked-global-frequent-hosts"))
    preds.append(Predicate("protocol-candidate", (s, ("?p", "protocol"))))
    preds.append(Predicate("obtained-from", (("?s1", "hostset"), ("?s2", "hostset"))))
    for p in config.protocols:
        preds.append(Predicate(f"is-{p}", (("?p", "protocol"),)))
        n_pre = config.branch_length_of(p) - 2
        if n_pre >= 1:
            preds.append(Predicate(f"filtered-{p}", (s,)))
        for k in range(1, n_pre - 1):
            preds.append(Predicate(f"enriched-{p}-{k}", (s,)))
        if n_pre >= 2:
            preds.append(Predicate(f"compared-{p}", (s, ("?d", "distancefunction"))))
        preds.append(Predicate(f"refined-{p}", (s,)))
    preds.append(Predicate("anomalous", (s,)))
    preds.append(Predicate("investigated", (s,)))
    for _, t, static in FIXED_OBJECTS:
        preds.append(Predicate(static, ((f"?{t[0]}", t),)))
    return tuple(preds)


def generate_domain(config: DomainConfig | None = None, variant: str = "metric") -> Domain:
    config = config or DomainConfig()
    config.validate()
    if variant not in ("metric", "temporal"):
        raise ConfigError(f"unknown domain variant {variant!r}")
    setup, sensor, branches, pop = _all_stages(config)
    ordered = [pop]
    for branch in reversed(branches):
        ordered.extend(reversed(branch))
    ordered.extend(sensor)
    ordered.extend(reversed(setup))
    actions = []
    for st in ordered:
        cost = _lookup(config.costs, DEFAULT_COSTS, st.name, st.category)
        duration = _lookup(config.durations, DEFAULT_DURATIONS, st.name, st.category)
        actions.append(ActionSchema(
            name=st.name,
            parameters=st.parameters,
            precondition=st.pre,
            add=frozenset(st.add),
            delete=frozenset(st.delete),
            cost=cost if variant == "metric" else Fraction(0),
            duration=duration if variant == "temporal" else Fraction(0),
            sensing=st.category == "sensing",
        ))
    reqs = (":strips", ":typing", ":action-costs") if variant == "metric" else (":strips", ":typing", ":durative-actions")
    return Domain(
        name=DOMAIN_NAME,
        requirements=reqs,
        types=tuple((t, "object") for t in TYPES),
        predicates=_predicates(config),
        actions=tuple(actions),
    )


def schema_categories(config: DomainConfig) -> dict[str, str]:
    """Map each schema name to its cost category (setup, branch, sensing, pop)."""
    setup, sensor, branches, pop = _all_stages(config)
    stages = setup + sensor + [st for b in branches for st in b] + [pop]
    return {st.name: st.category for st in stages}


def sensing_manifest(config: DomainConfig | None = None) -> SensingManifest:
    config = config or DomainConfig()
    config.validate()
    entries = {
        PROTOCOL_SENSOR: OutcomeSchema(
            kind="partition-by-protocol",
            inclusion=tuple((p, config.protocol_inclusion) for p in config.protocols),
        )
    }
    for p in config.protocols:
        _, reentry = _branch_stages(p, config.branch_length_of(p))
        entries[f"sense-refine-{p}"] = OutcomeSchema(
            kind="refine-split",
            protocol=p,
            child_counts=tuple(config.child_counts),
            max_depth=config.max_depth,
            flag_probability=config.flag_probability,
            reentry=reentry.predicate,
        )
    return SensingManifest(entries)


# --------------------------------------------------------------------------
# problems


def static_objects(config: DomainConfig) -> list[tuple[str, str]]:
    objs = [(p, "protocol") for p in config.protocols]
    objs.extend((name, t) for name, t, _ in FIXED_OBJECTS)
    return objs


def static_facts(config: DomainConfig) -> set[Atom]:
    facts = {_a(f"is-{p}", p) for p in config.protocols}
    facts.update(_a(static, name) for name, _, static in FIXED_OBJECTS)
    return facts


def hostset_names(n: int) -> list[str]:
    width = max(3, len(str(n)))
    return [f"h{i:0{width}d}" for i in range(1, n + 1)]


def generate_problem(config: DomainConfig | None = None, n_hostsets: int = 1, n_goals: int = 1,
                     seed: int | None = None, variant: str = "metric") -> Problem:
    config = config or DomainConfig()
    config.validate()
    if not 1 <= n_goals <= n_hostsets:
        raise ConfigError("need 1 <= n_goals <= n_hostsets")
    seed = config.seed if seed is None else seed
    hosts = hostset_names(n_hostsets)
    chosen = sorted(shuffled(keyed_random(seed, "goals", n_hostsets), hosts)[:n_goals])
    objects = [(h, "hostset") for h in hosts] + static_objects(config)
    init = {_a("unprocessed", h) for h in hosts} | static_facts(config)
    metric = "minimize-total-cost" if variant == "metric" else "minimize-makespan"
    return Problem(
        name=f"{DOMAIN_NAME}-{n_hostsets}-{n_goals}-{seed}",
        domain_name=DOMAIN_NAME,
        objects=tuple(objects),
        init=frozenset(init),
        goal=tuple(_a("investigated", h) for h in chosen),
        metric=metric,
        total_cost=Fraction(0) if variant == "metric" else None,
    )


# --------------------------------------------------------------------------
# causal graph


@dataclass(frozen=True)
class CausalGraph:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]

    def successors(self, node: str) -> list[str]:
        return sorted({b for a, b, _ in self.edges if a == node})

    def predecessors(self, node: str) -> list[str]:
        return sorted({a for a, b, _ in self.edges if b == node})

    def out_degree(self, node: str) -> int:
        return len(self.successors(node))

    def in_degree(self, node: str) -> int:
        return len(self.predecessors(node))


def _unifies(a: Atom, b: Atom) -> bool:
    if a.predicate != b.predicate or len(a.args) != len(b.args):
        return False
    return all(x.startswith("?") or y.startswith("?") or x == y for x, y in zip(a.args, b.args))


def causal_graph(domain: Domain) -> CausalGraph:
    """Edge (a1, a2, e) whenever add effect e of a1 unifies with a precondition of a2."""
    edges = []
    for a1 in domain.actions:
        for e in sorted(a1.add, key=str):
            for a2 in domain.actions:
                if any(_unifies(e, p) for p in a2.precondition):
                    edges.append((a1.name, a2.name, str(e)))
    return CausalGraph(tuple(a.name for a in domain.actions), tuple(edges))
