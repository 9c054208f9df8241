"""Tag-based composition of analytic flows and the simulated deployment
registry.

A strategic action becomes a goal tag set; ``compose`` searches breadth-first
over the tag sets reachable from the source tags for the fewest components
whose outputs cover the goal.  Among flows of equal size the one with the
lexicographically smallest component-id sequence (in application order)
wins, which makes composition deterministic.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import StratPlanError

PLATFORMS = ("stream", "batch")
STATES = ("running", "completed", "canceled")


class TacticalError(StratPlanError):
    pass


class UnmappedAction(TacticalError, KeyError):
    pass


class Unsatisfiable(TacticalError):
    pass


class DuplicateDeployment(TacticalError):
    pass


class UnknownDeployment(TacticalError, KeyError):
    pass


class InvalidTransition(TacticalError):
    pass


@dataclass(frozen=True)
class Component:
    id: str
    platform: str
    input_tags: frozenset[str]
    output_tags: frozenset[str]
    cost: Fraction = Fraction(1)
    parameters: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "input_tags", frozenset(self.input_tags))
        object.__setattr__(self, "output_tags", frozenset(self.output_tags))
        object.__setattr__(self, "cost", Fraction(self.cost))
        if not self.output_tags:
            raise ValueError(f"component {self.id} has no output tags")
        if self.platform not in PLATFORMS:
            raise ValueError(f"component {self.id}: unknown platform {self.platform!r}")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "platform": self.platform,
            "inputs": sorted(self.input_tags),
            "outputs": sorted(self.output_tags),
            "cost": str(self.cost),
            "parameters": {k: v for k, v in self.parameters},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Component":
        return cls(
            id=data["id"],
            platform=data["platform"],
            input_tags=frozenset(data.get("inputs", ())),
            output_tags=frozenset(data["outputs"]),
            cost=Fraction(data.get("cost", "1")),
            parameters=tuple(data.get("parameters", {}).items()),
        )


def check_library(library) -> dict[str, Component]:
    by_id: dict[str, Component] = {}
    for c in library:
        if c.id in by_id:
            raise ValueError(f"duplicate component id {c.id}")
        by_id[c.id] = c
    return by_id


def dump_library(library) -> str:
    return json.dumps([c.to_json() for c in library], indent=1) + "\n"


def load_library(text: str) -> list[Component]:
    library = [Component.from_json(d) for d in json.loads(text)]
    check_library(library)
    return library


@dataclass(frozen=True)
class FlowNode:
    component: str
    parameters: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Flow:
    """Component instances in application order; edge sources are node
    indices or ``-1`` for the source tags."""

    nodes: tuple[FlowNode, ...]
    edges: tuple[tuple[int, int, frozenset[str]], ...]
    source_tags: frozenset[str]
    terminal_tags: frozenset[str]

    @property
    def size(self) -> int:
        return len(self.nodes)

    def component_ids(self) -> tuple[str, ...]:
        return tuple(n.component for n in self.nodes)

    def cost(self, library) -> Fraction:
        by_id = {c.id: c for c in library}
        return sum((by_id[n.component].cost for n in self.nodes), Fraction(0))

    def to_json(self) -> dict:
        return {
            "nodes": [{"component": n.component, "parameters": dict(n.parameters)} for n in self.nodes],
            "edges": [[a, b, sorted(t)] for a, b, t in self.edges],
            "terminal": sorted(self.terminal_tags),
        }


# --------------------------------------------------------------------------
# strategic action -> goal tags


def action_to_goal_tags(instance, mapping: dict) -> tuple[frozenset[str], dict[str, str]]:
    """Tags and bound parameters for a strategic action instance (name, *args).

    ``mapping[name]`` holds ``tags`` and ``params`` (parameter names matched
    positionally to the action's arguments).
    """
    name, *args = instance
    try:
        entry = mapping[name]
    except KeyError:
        raise UnmappedAction(name) from None
    names = entry.get("params", [])
    params = {k: v for k, v in zip(names, args)}
    return frozenset(entry["tags"]), params


# --------------------------------------------------------------------------
# composition


def _build_flow(sequence, by_id, sources, params) -> Flow:
    nodes, edges = [], []
    producer: dict[str, int] = {t: -1 for t in sources}
    available = set(sources)
    for i, cid in enumerate(sequence):
        comp = by_id[cid]
        bound = tuple((k, params[k]) for k, _ in comp.parameters if k in params)
        nodes.append(FlowNode(cid, bound))
        incoming: dict[int, set[str]] = {}
        for t in sorted(comp.input_tags):
            incoming.setdefault(producer[t], set()).add(t)
        for src in sorted(incoming):
            edges.append((src, i, frozenset(incoming[src])))
        for t in comp.output_tags:
            producer.setdefault(t, i)
        available |= comp.output_tags
    return Flow(tuple(nodes), tuple(edges), frozenset(sources), frozenset(available))


def compose(goal_tags, library, source_tags, params: dict[str, str] | None = None,
            max_components: int = 64) -> Flow:
    goal = frozenset(goal_tags)
    sources = frozenset(source_tags)
    by_id = check_library(library)
    if not by_id:
        raise ValueError("empty component library")
    params = params or {}
    # Only components producing a tag the goal transitively needs can sit in
    # a minimal flow, and only those tags matter for the search state.
    relevant = set(goal)
    changed = True
    while changed:
        changed = False
        for c in by_id.values():
            if c.output_tags & relevant and not c.input_tags <= relevant:
                relevant |= c.input_tags
                changed = True
    comps = sorted((c for c in by_id.values() if c.output_tags & relevant), key=lambda c: c.id)
    outputs = {c.id: c.output_tags & relevant for c in comps}
    start = sources & relevant
    # frontier: tag set -> lexicographically smallest sequence reaching it
    frontier: dict[frozenset[str], tuple[str, ...]] = {start: ()}
    seen = {start}
    for _depth in range(max_components + 1):
        hits = [seq for tags, seq in frontier.items() if goal <= tags]
        if hits:
            return _build_flow(min(hits), by_id, sources, params)
        nxt: dict[frozenset[str], tuple[str, ...]] = {}
        for tags, seq in frontier.items():
            for c in comps:
                if c.input_tags <= tags and not outputs[c.id] <= tags:
                    new = tags | outputs[c.id]
                    if new in seen:
                        continue
                    cand = seq + (c.id,)
                    if new not in nxt or cand < nxt[new]:
                        nxt[new] = cand
        if not nxt:
            break
        seen.update(nxt)
        frontier = nxt
    raise Unsatisfiable(f"no flow covers {sorted(goal)} from {sorted(sources)}")


def flow_problems(flow: Flow, library, goal_tags) -> list[str]:
    """Independent validator: acyclicity, input coverage, goal coverage."""
    by_id = {c.id: c for c in library}
    problems = []
    n = len(flow.nodes)
    preds: dict[int, list[tuple[int, frozenset[str]]]] = {i: [] for i in range(n)}
    for a, b, tags in flow.edges:
        if not (-1 <= a < n and 0 <= b < n):
            problems.append(f"edge ({a}, {b}) out of range")
            continue
        preds[b].append((a, tags))
    # Kahn's algorithm for acyclicity
    indeg = {i: sum(1 for a, _ in preds[i] if a >= 0) for i in range(n)}
    ready = [i for i in range(n) if indeg[i] == 0]
    order = []
    while ready:
        i = ready.pop()
        order.append(i)
        for a, b, _ in flow.edges:
            if a == i:
                indeg[b] -= 1
                if indeg[b] == 0:
                    ready.append(b)
    if len(order) != n:
        problems.append("flow has a cycle")
    produced: set[str] = set()
    for i, node in enumerate(flow.nodes):
        comp = by_id.get(node.component)
        if comp is None:
            problems.append(f"node {i}: unknown component {node.component}")
            continue
        covered: set[str] = set()
        for a, tags in preds[i]:
            offered = flow.source_tags if a == -1 else by_id[flow.nodes[a].component].output_tags
            if not tags <= offered:
                problems.append(f"node {i}: edge from {a} carries tags its source does not produce")
            covered |= tags
        if not comp.input_tags <= covered:
            problems.append(f"node {i} ({comp.id}): inputs {sorted(comp.input_tags - covered)} not covered")
        produced |= comp.output_tags
    terminal = set(flow.source_tags) | produced
    if not frozenset(goal_tags) <= terminal:
        problems.append(f"goal tags {sorted(set(goal_tags) - terminal)} not produced")
    return problems


# --------------------------------------------------------------------------
# deployment registry


@dataclass
class Deployment:
    id: str
    instance: tuple[str, ...]
    flow: Flow
    state: str = "running"
    round: int | None = None


@dataclass
class DeploymentRegistry:
    """Thread-safe registry; at most one running deployment per action instance."""

    deployments: dict[str, Deployment] = field(default_factory=dict)
    _running: dict[tuple[str, ...], str] = field(default_factory=dict, repr=False)
    _counter: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def deploy(self, flow: Flow, instance, round_index: int | None = None) -> str:
        instance = tuple(instance)
        with self._lock:
            if instance in self._running:
                raise DuplicateDeployment(f"{instance} already running as {self._running[instance]}")
            self._counter += 1
            dep_id = f"dep-{self._counter:06d}"
            self.deployments[dep_id] = Deployment(dep_id, instance, flow, "running", round_index)
            self._running[instance] = dep_id
            return dep_id

    def _finish(self, dep_id: str, state: str) -> None:
        with self._lock:
            dep = self.deployments.get(dep_id)
            if dep is None:
                raise UnknownDeployment(dep_id)
            if dep.state != "running":
                raise InvalidTransition(f"{dep_id} is {dep.state}, cannot become {state}")
            dep.state = state
            del self._running[dep.instance]

    def cancel(self, dep_id: str) -> None:
        self._finish(dep_id, "canceled")

    def complete(self, dep_id: str) -> None:
        self._finish(dep_id, "completed")

    def running_for(self, instance) -> str | None:
        with self._lock:
            return self._running.get(tuple(instance))

    def count(self, state: str | None = None) -> int:
        with self._lock:
            return sum(1 for d in self.deployments.values() if state is None or d.state == state)

    def problems(self) -> list[str]:
        with self._lock:
            running: dict[tuple[str, ...], list[str]] = {}
            for d in self.deployments.values():
                if d.state not in STATES:
                    return [f"{d.id}: unknown state {d.state}"]
                if d.state == "running":
                    running.setdefault(d.instance, []).append(d.id)
            out = [f"{inst} has running deployments {ids}" for inst, ids in running.items() if len(ids) > 1]
            if {k: v[0] for k, v in running.items()} != self._running:
                out.append("running index out of sync")
            return out

    def dumps(self) -> str:
        with self._lock:
            data = [
                {"id": d.id, "instance": list(d.instance), "state": d.state, "round": d.round,
                 "components": list(d.flow.component_ids())}
                for d in self.deployments.values()
            ]
        return json.dumps(data, indent=1) + "\n"

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")
