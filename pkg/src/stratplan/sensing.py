"""Sensing outcomes: the manifest of possible outcomes per sensing action and
the pseudo-random simulator backend that draws from it.

An outcome describes how the world changes once a sensing action's data
arrives: which child hostsets appear (and with which members), which facts
are added or withdrawn, and whether the sensed hostset is discarded or kept
for escalation.  The deterministic effects of the action itself are applied
by the round engine before the outcome is resolved.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ConfigError, StratPlanError
from .pddl import Atom
from .rng import categorical, shuffled, uniform_index
from .world import WorldState

MANIFEST_FORMAT = "sensing-manifest-v1"
KINDS = ("partition-by-protocol", "refine-split", "flag-decision")
ASSIGNMENTS = ("shuffle-chunks", "round-robin")


class NoManifestEntry(StratPlanError, KeyError):
    pass


class BackendError(StratPlanError):
    pass


@dataclass(frozen=True)
class OutcomeSchema:
    """Generation parameters for one sensing action's outcomes.

    ``partition-by-protocol`` includes each protocol independently with its
    probability and spreads the members uniformly over the included ones.
    ``refine-split`` draws a child count from ``child_counts`` (weights for
    0, 1, 2, 3 children) while the hostset is above ``max_depth`` splits and
    has at least two members; otherwise it falls back to a flag decision.
    ``reentry`` is the predicate a refined child receives so the planner
    resumes the branch just before the comparison step.
    """

    kind: str
    protocol: str | None = None
    inclusion: tuple[tuple[str, float], ...] = ()
    child_counts: tuple[float, ...] = (0.1, 0.3, 0.4, 0.2)
    assignment: str = "shuffle-chunks"
    max_depth: int = 2
    flag_probability: float = 0.5
    candidate: str = "protocol-candidate"
    reentry: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "inclusion", tuple((p, float(q)) for p, q in self.inclusion))
        object.__setattr__(self, "child_counts", tuple(float(w) for w in self.child_counts))
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.kind not in KINDS:
            out.append(f"unknown outcome kind {self.kind!r}")
        for p, q in self.inclusion:
            if not 0.0 <= q <= 1.0:
                out.append(f"inclusion probability for {p} outside [0, 1]")
        if len(self.child_counts) != 4 or any(w < 0 for w in self.child_counts):
            out.append("child_counts must hold 4 nonnegative weights (0..3 children)")
        elif abs(sum(self.child_counts) - 1.0) > 1e-9:
            out.append("child_counts must sum to 1")
        if self.assignment not in ASSIGNMENTS:
            out.append(f"unknown assignment rule {self.assignment!r}")
        if not 0.0 <= self.flag_probability <= 1.0:
            out.append("flag_probability outside [0, 1]")
        if self.max_depth < 0:
            out.append("max_depth must be nonnegative")
        if self.kind == "partition-by-protocol" and not self.inclusion:
            out.append("partition-by-protocol needs at least one protocol")
        if self.kind == "refine-split" and self.reentry is None:
            out.append("refine-split needs a reentry predicate")
        return out

    def to_json(self) -> dict:
        data: dict = {"kind": self.kind}
        if self.kind == "partition-by-protocol":
            data["inclusion"] = {p: q for p, q in self.inclusion}
            data["candidate"] = self.candidate
        else:
            data["protocol"] = self.protocol
            data["flag_probability"] = self.flag_probability
        if self.kind == "refine-split":
            data["child_counts"] = list(self.child_counts)
            data["assignment"] = self.assignment
            data["max_depth"] = self.max_depth
            data["reentry"] = self.reentry
        return data

    @classmethod
    def from_json(cls, data: dict) -> "OutcomeSchema":
        try:
            kind = data["kind"]
            kwargs: dict = {"kind": kind}
            if "inclusion" in data:
                kwargs["inclusion"] = tuple(data["inclusion"].items())
            for key in ("protocol", "flag_probability", "assignment", "max_depth", "reentry", "candidate"):
                if key in data:
                    kwargs[key] = data[key]
            if "child_counts" in data:
                kwargs["child_counts"] = tuple(data["child_counts"])
        except (KeyError, AttributeError, TypeError) as exc:
            raise ConfigError(f"malformed outcome schema: {exc!r}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class SensingManifest:
    entries: dict[str, OutcomeSchema] = field(default_factory=dict)
    version: str = MANIFEST_FORMAT

    def entry(self, action_name: str) -> OutcomeSchema:
        try:
            return self.entries[action_name]
        except KeyError:
            raise NoManifestEntry(action_name) from None

    def dumps(self) -> str:
        data = {
            "format": self.version,
            "entries": {name: schema.to_json() for name, schema in self.entries.items()},
        }
        return json.dumps(data, indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SensingManifest":
        data = json.loads(text)
        if data.get("format") != MANIFEST_FORMAT:
            raise ConfigError(f"unsupported manifest format {data.get('format')!r}")
        return cls({name: OutcomeSchema.from_json(e) for name, e in data["entries"].items()})


@dataclass(frozen=True)
class NewHostset:
    name: str
    members: tuple[str, ...]
    protocol: str | None
    level: int


@dataclass(frozen=True)
class SensingOutcome:
    action: tuple[str, ...]
    hostset: str
    children: tuple[NewHostset, ...] = ()
    add_facts: frozenset[Atom] = frozenset()
    remove_facts: frozenset[Atom] = frozenset()
    discard: bool = False
    flag: bool | None = None

    def to_json(self) -> dict:
        return {
            "action": list(self.action),
            "hostset": self.hostset,
            "children": [
                {"name": c.name, "members": list(c.members), "protocol": c.protocol, "level": c.level}
                for c in self.children
            ],
            "add": sorted(str(a) for a in self.add_facts),
            "remove": sorted(str(a) for a in self.remove_facts),
            "discard": self.discard,
            "flag": self.flag,
        }

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def outcome_problems(outcome: SensingOutcome, parent_members: Iterable[str],
                     known_objects: Iterable[str]) -> list[str]:
    """Check the conservation and reference invariants of an outcome."""
    parent = set(parent_members)
    problems = []
    seen: set[str] = set()
    for c in outcome.children:
        cm = set(c.members)
        if cm & seen:
            problems.append(f"child {c.name} overlaps a sibling")
        if not cm <= parent:
            problems.append(f"child {c.name} holds hosts outside {outcome.hostset}")
        seen |= cm
    names = set(known_objects) | {c.name for c in outcome.children}
    for atom in outcome.add_facts | outcome.remove_facts:
        for arg in atom.args:
            if arg not in names:
                problems.append(f"fact {atom} references unknown object {arg}")
    return problems


def _chunks(items: list[str], k: int) -> list[list[str]]:
    size, extra = divmod(len(items), k)
    out, start = [], 0
    for i in range(k):
        end = start + size + (1 if i < extra else 0)
        out.append(items[start:end])
        start = end
    return out


def _split(hostset: str, parts: list[list[str]], protocols: list[str | None], level: int) -> tuple[NewHostset, ...]:
    children = []
    for i, (part, protocol) in enumerate(zip(parts, protocols), start=1):
        if part:
            children.append(NewHostset(f"{hostset}-{i}", tuple(sorted(part)), protocol, level))
    return tuple(children)


def partition_outcome(action, hostset, added, children_spec, schema, level) -> SensingOutcome:
    """Outcome for a protocol partition given ``children_spec`` of (protocol, members)."""
    if not children_spec:
        return SensingOutcome(tuple(action), hostset, remove_facts=frozenset(added), discard=True)
    children = _split(hostset, [m for _, m in children_spec], [p for p, _ in children_spec], level)
    facts = set()
    for c in children:
        facts.add(Atom(schema.candidate, (c.name, c.protocol)))
        facts.add(Atom("obtained-from", (c.name, hostset)))
    return SensingOutcome(tuple(action), hostset, children, frozenset(facts), frozenset(added))


def refine_outcome(action, hostset, added, parts, schema, level) -> SensingOutcome:
    parts = [p for p in parts if p]
    if not parts:
        return SensingOutcome(tuple(action), hostset, remove_facts=frozenset(added), discard=True)
    children = _split(hostset, parts, [schema.protocol] * len(parts), level + 1)
    facts = set()
    for c in children:
        # a two-step branch re-enters at the protocol candidate itself
        args = (c.name, schema.protocol) if schema.reentry == schema.candidate else (c.name,)
        facts.add(Atom(schema.reentry, args))
        facts.add(Atom("obtained-from", (c.name, hostset)))
    return SensingOutcome(tuple(action), hostset, children, frozenset(facts), frozenset(added))


def flag_outcome(action, hostset, added, keep: bool) -> SensingOutcome:
    if keep:
        return SensingOutcome(tuple(action), hostset, flag=True)
    return SensingOutcome(tuple(action), hostset, remove_facts=frozenset(added), discard=True, flag=False)


def simulate_outcome(action: tuple[str, ...], added: Iterable[Atom], state: WorldState,
                     manifest: SensingManifest, rng) -> SensingOutcome:
    """Draw the outcome of sensing action ``action`` (name plus arguments).

    ``added`` holds the action's own add effects, which stand for the pending
    result and are withdrawn whenever the outcome supersedes them.  ``rng``
    must be a stream keyed on (seed, round, action) so the draw is isolated
    from everything else that happens in the run.
    """
    name, *args = action
    schema = manifest.entry(name)
    hostset = args[0]
    info = state.hostsets[hostset]
    members = tuple(info.members)
    added = frozenset(added)
    if not members:
        return SensingOutcome(tuple(action), hostset, remove_facts=added, discard=True)

    if schema.kind == "partition-by-protocol":
        included = [p for p, q in schema.inclusion if rng.random() < q]
        if not included:
            return partition_outcome(action, hostset, added, [], schema, info.level)
        buckets: dict[str, list[str]] = {p: [] for p in included}
        for m in members:
            buckets[included[uniform_index(rng, len(included))]].append(m)
        spec = [(p, buckets[p]) for p in included if buckets[p]]
        return partition_outcome(action, hostset, added, spec, schema, info.level)

    if schema.kind == "refine-split" and info.level < schema.max_depth and len(members) >= 2:
        k = min(categorical(rng, schema.child_counts), len(members))
        if k == 0:
            return refine_outcome(action, hostset, added, [], schema, info.level)
        if schema.assignment == "shuffle-chunks":
            parts = _chunks(shuffled(rng, members), k)
        else:
            parts = [list(members[i::k]) for i in range(k)]
        return refine_outcome(action, hostset, added, parts, schema, info.level)

    # flag-decision, or a refine-split that reached its depth limit
    return flag_outcome(action, hostset, added, rng.random() < schema.flag_probability)
