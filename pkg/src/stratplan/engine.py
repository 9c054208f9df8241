"""The plan, sense, replan loop.

Each round rebuilds a planning problem from the world state (goals are the
unresolved frontier hostsets), plans from scratch, diffs the plan against
what was still outstanding from the previous round, deploys and executes the
plan up to and including its first sensing action, and resolves that
sensing action through a backend (the simulator or the trace analyzer).

Round records carry simulated timings derived from search effort, flow
sizes and action durations, so a log is a pure function of the run inputs
and replays byte for byte.  ``EngineConfig.wall_clock`` swaps in measured
times for profiling.
"""
from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import StratPlanError
from .grounding import GroundTask, ground
from .library import SOURCE_TAGS, default_library, default_mapping
from .netadmin import (DomainConfig, POP, generate_domain, sensing_manifest, static_facts,
                       static_objects)
from .pddl import Atom, Problem
from .planner import (Plan, PlanningError, plan_metric, plan_optimal, plan_to_json, precedes,
                      schedule_temporal)
from .rng import keyed_random
from .sensing import BackendError, SensingManifest, SensingOutcome, simulate_outcome
from .tactical import DeploymentRegistry, action_to_goal_tags, compose
from .traces import Thresholds, TraceSet, analyze_traces
from .world import Hostset, WorldState, check_world

MODES = ("metric", "optimal", "temporal")
BACKENDS = ("sim", "traces")
LOG_FORMAT = "investigation-log-v1"

Instance = tuple  # (schema name, *args)


class PlanningFailed(StratPlanError):
    pass


class RoundLimitExceeded(StratPlanError):
    def __init__(self, limit: int, log: "InvestigationLog"):
        super().__init__(f"investigation not finished after {limit} rounds")
        self.log = log


class CorruptLog(StratPlanError):
    pass


@dataclass(frozen=True)
class TimingModel:
    """Simulated cost of each round phase, in milliseconds."""

    per_node_generated: float = 0.02
    per_node_expanded: float = 0.05
    planning_base: float = 5.0
    per_component: float = 2.0
    ms_per_minute: float = 60_000.0
    other: float = 10.0


@dataclass
class EngineConfig:
    domain: DomainConfig = field(default_factory=DomainConfig)
    mode: str = "metric"
    backend: str = "sim"
    seed: int = 0
    rounds_max: int = 10_000
    time_budget: float = 10.0
    thresholds: Thresholds = field(default_factory=Thresholds)
    timing: TimingModel = field(default_factory=TimingModel)
    wall_clock: bool = False
    check_invariants: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown planner mode {self.mode!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.rounds_max < 1:
            raise ValueError("rounds_max must be positive")


def instance_label(instance: Sequence[str]) -> str:
    return f"({' '.join(instance)})"


def parse_label(label: str) -> Instance:
    return tuple(label.strip("()").split())


@dataclass(frozen=True)
class PlanDiff:
    canceled: frozenset
    added: frozenset
    retained: frozenset

    @property
    def size(self) -> int:
        return len(self.canceled) + len(self.added)

    def to_json(self) -> dict:
        return {
            "added": sorted(instance_label(i) for i in self.added),
            "canceled": sorted(instance_label(i) for i in self.canceled),
            "retained": len(self.retained),
        }


def diff_plans(previous: Iterable[Instance], current: Iterable[Instance]) -> PlanDiff:
    """Set difference on action instances; positions are ignored."""
    prev = frozenset(tuple(i) for i in previous)
    cur = frozenset(tuple(i) for i in current)
    return PlanDiff(canceled=prev - cur, added=cur - prev, retained=prev & cur)


def plan_instances(plan: Plan, task: GroundTask) -> list[Instance]:
    return [task.actions[a].instance for a in plan.actions]


def executed_prefix(plan: Plan, task: GroundTask, sensing: Callable[[str], bool]) -> tuple[int, ...]:
    """Plan prefix up to and including the first sensing action."""
    out = []
    for aid in plan.actions:
        out.append(aid)
        if sensing(task.actions[aid].name):
            break
    return tuple(out)


# --------------------------------------------------------------------------
# world construction


def initial_world(config: DomainConfig, roots: dict[str, Sequence[str]]) -> WorldState:
    world = WorldState()
    for name, t in static_objects(config):
        world.add_object(name, t)
    world.facts |= static_facts(config)
    for h, members in roots.items():
        world.add_object(h, "hostset")
        world.hostsets[h] = Hostset(members=tuple(members))
        world.facts.add(Atom("unprocessed", (h,)))
    return world


def sim_roots(n_roots: int = 20, hosts_per_root: int = 8) -> dict[str, tuple[str, ...]]:
    width = max(3, len(str(n_roots)))
    hwidth = max(4, len(str(n_roots * hosts_per_root)))
    out = {}
    for r in range(n_roots):
        out[f"h{r + 1:0{width}d}"] = tuple(
            f"host{r * hosts_per_root + k + 1:0{hwidth}d}" for k in range(hosts_per_root))
    return out


def build_problem(world: WorldState, goals: Sequence[str], variant: str = "metric",
                  domain_name: str = "netadmin") -> Problem:
    """State-manager step: the problem for this round over the active hostsets."""
    objects = []
    present = set()
    for t, names in world.objects.items():
        for n in names:
            if t == "hostset" and world.hostsets.get(n, Hostset(())).status != "active":
                continue
            objects.append((n, t))
            present.add(n)
    init = frozenset(a for a in world.facts if all(x in present for x in a.args))
    return Problem(
        name="round",
        domain_name=domain_name,
        objects=tuple(objects),
        init=init,
        goal=tuple(Atom("investigated", (h,)) for h in goals),
        metric="minimize-total-cost" if variant == "metric" else "minimize-makespan",
        total_cost=Fraction(0) if variant == "metric" else None,
    )


# --------------------------------------------------------------------------
# log


@dataclass
class InvestigationLog:
    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> None:
        if self.records and record["round"] <= self.records[-1]["round"]:
            raise ValueError("round indices must increase")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def first_seen(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for rec in self.records:
            for ev in rec.get("events", []):
                if ev["type"] == "first-seen":
                    out.setdefault(ev["hostset"], rec["round"])
        return out

    def resolutions(self) -> dict[str, tuple[int, str]]:
        out: dict[str, tuple[int, str]] = {}
        for rec in self.records:
            for ev in rec.get("events", []):
                if ev["type"] == "resolved":
                    out[ev["hostset"]] = (rec["round"], ev["status"])
        return out

    def roots(self) -> list[str]:
        out = []
        for rec in self.records:
            for ev in rec.get("events", []):
                if ev["type"] == "created" and ev["parent"] is None:
                    out.append(ev["hostset"])
        return out

    def dumps(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    @classmethod
    def loads(cls, text: str) -> "InvestigationLog":
        log = cls()
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptLog(f"line {n}: {exc}") from None
            if not isinstance(rec, dict) or "round" not in rec or "plan_size" not in rec:
                raise CorruptLog(f"line {n}: not a round record")
            try:
                log.append(rec)
            except ValueError:
                raise CorruptLog(f"line {n}: round indices not increasing") from None
        return log


# --------------------------------------------------------------------------
# engine


class RoundEngine:
    """Owns the world state of one investigation and advances it round by round."""

    def __init__(self, config: EngineConfig, world: WorldState, goals: Sequence[str] | None = None,
                 manifest: SensingManifest | None = None, traces: TraceSet | None = None,
                 library=None, mapping: dict | None = None, registry: DeploymentRegistry | None = None):
        config.validate()
        self.config = config
        self.world = world
        self.goal_roots = list(goals) if goals is not None else world.roots()
        self.variant = "temporal" if config.mode == "temporal" else "metric"
        self.domain = generate_domain(config.domain, self.variant)
        durations = generate_domain(config.domain, "temporal")
        self.durations = {a.name: a.duration for a in durations.actions}
        self.manifest = manifest or sensing_manifest(config.domain)
        self.sensing = {a.name for a in self.domain.actions if a.sensing} | set(self.manifest.entries)
        if config.backend == "traces" and traces is None:
            raise BackendError("the trace backend needs a TraceSet")
        self.traces = traces
        self.library = library if library is not None else default_library()
        self.mapping = mapping if mapping is not None else default_mapping(config.domain)
        self.registry = registry if registry is not None else DeploymentRegistry()
        self.outstanding: list[Instance] = []
        self.round_index = 0
        self.seen: set[str] = set()
        self.finished = False
        self._pending_events: list[dict] = [
            {"type": "created", "hostset": h, "parent": None, "members": list(world.hostsets[h].members)}
            for h in self.goal_roots
        ]

    # -- goals ------------------------------------------------------------
    def goals(self) -> list[str]:
        roots = set(self.goal_roots)
        return [h for h in self.world.frontier() if self.world.root_of(h) in roots]

    # -- planning ---------------------------------------------------------
    def _plan(self, task: GroundTask) -> Plan:
        mode = self.config.mode
        try:
            if mode == "optimal":
                return plan_optimal(task, self.config.time_budget)
            if mode == "temporal":
                return plan_metric(task, self.config.time_budget, weight="duration")
            return plan_metric(task, self.config.time_budget)
        except PlanningError as exc:
            raise PlanningFailed(f"round {self.round_index}: {exc}") from exc

    # -- state updates ----------------------------------------------------
    def _resolve(self, h: str, status: str, events: list[dict]) -> None:
        info = self.world.hostsets[h]
        if info.status != "active":
            return
        info.status = status
        info.resolved_round = self.round_index
        events.append({"type": "resolved", "hostset": h, "status": status, "members": len(info.members)})
        parent = info.parent
        if parent is not None:
            pinfo = self.world.hostsets[parent]
            kids = [self.world.hostsets[c] for c in pinfo.children]
            if all(k.status != "active" for k in kids):
                agg = "flagged" if any(k.status == "flagged" for k in kids) else "discarded"
                self._resolve(parent, agg, events)

    def _touch(self, instance: Instance, events: list[dict]) -> None:
        for arg in instance[1:]:
            if arg in self.world.hostsets and arg not in self.seen:
                self.seen.add(arg)
                events.append({"type": "first-seen", "hostset": arg})

    def _apply_outcome(self, outcome: SensingOutcome, events: list[dict]) -> None:
        w = self.world
        w.facts -= outcome.remove_facts
        parent = w.hostsets[outcome.hostset]
        for c in outcome.children:
            w.add_object(c.name, "hostset")
            w.hostsets[c.name] = Hostset(members=c.members, parent=outcome.hostset, level=c.level,
                                         protocol=c.protocol, created_round=self.round_index)
            parent.children.append(c.name)
            events.append({"type": "created", "hostset": c.name, "parent": outcome.hostset,
                           "members": list(c.members)})
        w.facts |= outcome.add_facts
        if outcome.discard:
            self._resolve(outcome.hostset, "discarded", events)

    def _sense(self, instance: Instance, added: frozenset[Atom]) -> SensingOutcome:
        if self.config.backend == "traces":
            return analyze_traces(instance, added, self.world, self.traces, self.config.thresholds,
                                  self.manifest)
        rng = keyed_random(self.config.seed, self.round_index, *instance)
        return simulate_outcome(instance, added, self.world, self.manifest, rng)

    # -- one round ----------------------------------------------------------
    def run_round(self) -> dict:
        self.round_index += 1
        r = self.round_index
        t0 = time.perf_counter()
        events, self._pending_events = self._pending_events, []
        goals = self.goals()
        problem = build_problem(self.world, goals, self.variant, self.domain.name)
        task = ground(self.domain, problem)
        t_plan0 = time.perf_counter()
        plan = self._plan(task)
        t_plan1 = time.perf_counter()
        current = plan_instances(plan, task)
        diff = diff_plans(self.outstanding, current)
        prefix = executed_prefix(plan, task, lambda n: n in self.sensing)

        # tactical step: compose and deploy a flow per executed action
        t_tac0 = time.perf_counter()
        deployed = []
        components = 0
        for inst in diff.canceled:
            dep = self.registry.running_for(inst)
            if dep is not None:
                self.registry.cancel(dep)
        for aid in prefix:
            inst = task.actions[aid].instance
            tags, params = action_to_goal_tags(inst, self.mapping)
            flow = compose(tags, self.library, SOURCE_TAGS, params)
            components += flow.size
            deployed.append(self.registry.deploy(flow, inst, r))
        t_tac1 = time.perf_counter()

        # execute the prefix
        total_cost = self.world.fluents.get("total-cost", Fraction(0))
        sensed = None
        outcome = None
        for aid in prefix:
            a = task.actions[aid]
            inst = a.instance
            self._touch(inst, events)
            dele = {task.facts[f] for f in a.delete}
            add = {task.facts[f] for f in a.add}
            self.world.facts -= dele
            self.world.facts |= add
            total_cost += self._cost_of(a.name)
            if a.name == POP:
                self._resolve(inst[1], "flagged", events)
            if a.name in self.sensing:
                sensed = inst
                outcome = self._sense(inst, frozenset(add))
                self._apply_outcome(outcome, events)
        self.world.fluents["total-cost"] = total_cost
        for dep in deployed:
            self.registry.complete(dep)
        self.outstanding = current[len(prefix):]

        exec_steps = [dataclasses.replace(task.actions[aid], duration=self.durations[task.actions[aid].name])
                      for aid in prefix]
        makespan = _makespan(exec_steps)
        t1 = time.perf_counter()
        if self.config.wall_clock:
            timings = {
                "planning_ms": round((t_plan1 - t_plan0) * 1000, 3),
                "tactical_ms": round((t_tac1 - t_tac0) * 1000, 3),
                "execution_ms": round(float(makespan) * self.config.timing.ms_per_minute, 3),
                "other_ms": round(((t1 - t0) - (t_plan1 - t_plan0) - (t_tac1 - t_tac0)) * 1000, 3),
            }
        else:
            tm = self.config.timing
            timings = {
                "planning_ms": round(tm.planning_base + tm.per_node_generated * plan.nodes_generated
                                     + tm.per_node_expanded * plan.nodes_expanded, 3),
                "tactical_ms": round(tm.per_component * components, 3),
                "execution_ms": round(float(makespan) * tm.ms_per_minute, 3),
                "other_ms": tm.other,
            }
        schedule = schedule_temporal(plan, task) if self.config.mode == "temporal" else None
        record = {
            "format": LOG_FORMAT,
            "round": r,
            "goals": len(goals),
            "plan": plan_to_json(plan, task, schedule),
            "plan_size": len(plan),
            "diff": diff.to_json(),
            "diff_size": diff.size,
            "executed": [instance_label(task.actions[aid].instance) for aid in prefix],
            "sensing_action": instance_label(sensed) if sensed else None,
            "outcome": outcome.to_json() if outcome else None,
            "outcome_digest": outcome.digest() if outcome else None,
            "deployments": deployed,
            "events": events,
            "timings": timings,
            "simulated_minutes": float(makespan),
            "terminated": False,
        }
        if self.config.check_invariants:
            check_world(self.world)
        if not self.goals():
            self.finished = True
            record["terminated"] = True
        return record

    def _cost_of(self, name: str) -> Fraction:
        return self.domain.action(name).cost

    def run(self, on_round: Callable[["RoundEngine", dict], None] | None = None) -> InvestigationLog:
        log = InvestigationLog()
        while True:
            if self.round_index >= self.config.rounds_max:
                raise RoundLimitExceeded(self.config.rounds_max, log)
            record = self.run_round()
            log.append(record)
            if on_round is not None:
                on_round(self, record)
            if self.finished:
                return log


def _makespan(steps) -> Fraction:
    """Critical-path length of a sequence of ground actions."""
    if not steps:
        return Fraction(0)
    ends: list[Fraction] = []
    for j, b in enumerate(steps):
        start = Fraction(0)
        for i in range(j):
            if precedes(steps[i], b) and ends[i] > start:
                start = ends[i]
        ends.append(start + b.duration)
    return max(ends)


def run_investigation(world: WorldState, goals: Sequence[str] | None = None,
                      config: EngineConfig | None = None, **kwargs) -> InvestigationLog:
    """Run rounds until every goal hostset is resolved.

    Raises :class:`RoundLimitExceeded` (carrying the partial log) when the
    round limit is reached first.
    """
    engine = RoundEngine(config or EngineConfig(), world, goals, **kwargs)
    return engine.run()
