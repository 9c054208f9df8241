"""World state kept between rounds: planner-visible facts plus the hostset
registry (the metadata store's host membership), with validation and
versioned JSON snapshots."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import StratPlanError
from .pddl import Atom

SNAPSHOT_FORMAT = "worldstate-v1"
STATUSES = ("active", "flagged", "discarded")


class SnapshotError(StratPlanError):
    pass


class VersionMismatch(SnapshotError):
    pass


class CorruptSnapshot(SnapshotError):
    pass


class InvariantViolation(StratPlanError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations[:5]) + (" ..." if len(violations) > 5 else ""))


@dataclass
class Hostset:
    members: tuple[str, ...]
    parent: str | None = None
    status: str = "active"
    children: list[str] = field(default_factory=list)
    level: int = 0
    protocol: str | None = None
    created_round: int = 0
    resolved_round: int | None = None

    @property
    def is_split(self) -> bool:
        return bool(self.children)


@dataclass
class WorldState:
    objects: dict[str, list[str]] = field(default_factory=dict)
    facts: set[Atom] = field(default_factory=set)
    fluents: dict[str, Fraction] = field(default_factory=lambda: {"total-cost": Fraction(0)})
    hostsets: dict[str, Hostset] = field(default_factory=dict)

    def add_object(self, name: str, type_name: str) -> None:
        names = self.objects.setdefault(type_name, [])
        if name not in names:
            names.append(name)

    def frontier(self) -> list[str]:
        """Active hostsets that have not been split: the current goal set."""
        return [h for h, info in self.hostsets.items() if info.status == "active" and not info.children]

    def active(self) -> list[str]:
        return [h for h, info in self.hostsets.items() if info.status == "active"]

    def roots(self) -> list[str]:
        return [h for h, info in self.hostsets.items() if info.parent is None]

    def root_of(self, hostset: str) -> str:
        while self.hostsets[hostset].parent is not None:
            hostset = self.hostsets[hostset].parent
        return hostset

    def descendants(self, hostset: str) -> list[str]:
        out = []
        stack = list(self.hostsets[hostset].children)
        while stack:
            h = stack.pop()
            out.append(h)
            stack.extend(self.hostsets[h].children)
        return out

    def copy(self) -> "WorldState":
        return restore(snapshot(self))


def validate_world(state: WorldState) -> list[str]:
    """Return every hostset-registry invariant violation (empty when valid)."""
    problems: list[str] = []
    hs = state.hostsets
    for h, info in hs.items():
        if info.status not in STATUSES:
            problems.append(f"{h}: unknown status {info.status!r}")
        if info.parent is not None:
            if info.parent not in hs:
                problems.append(f"{h}: parent {info.parent} does not exist")
            elif h not in hs[info.parent].children:
                problems.append(f"{h}: not listed among the children of {info.parent}")
        for c in info.children:
            if c not in hs:
                problems.append(f"{h}: child {c} does not exist")
            elif hs[c].parent != h:
                problems.append(f"{h}: child {c} names {hs[c].parent} as parent")
        # cycle check along the parent chain
        seen = {h}
        p = info.parent
        while p is not None and p in hs:
            if p in seen:
                problems.append(f"{h}: obtained-from cycle through {p}")
                break
            seen.add(p)
            p = hs[p].parent
        members = set(info.members)
        if len(members) != len(info.members):
            problems.append(f"{h}: duplicate members")
        union: set[str] = set()
        for c in info.children:
            if c not in hs:
                continue
            cm = set(hs[c].members)
            if cm & union:
                problems.append(f"{h}: children overlap on {sorted(cm & union)[:3]}")
            union |= cm
        if not union <= members:
            problems.append(f"{h}: children hold hosts outside the parent: {sorted(union - members)[:3]}")
        if info.status in ("flagged", "discarded"):
            for d in state.descendants(h) if all(c in hs for c in info.children) else []:
                if hs[d].status == "active":
                    problems.append(f"{h}: resolved as {info.status} but descendant {d} is active")
                    break
            if info.resolved_round is None:
                problems.append(f"{h}: resolved without a resolution round")
    # conservation: every host of a root sits in exactly one leaf or split residue
    for root in state.roots():
        placed: dict[str, str] = {}
        stack = [root]
        while stack:
            h = stack.pop()
            if h not in hs:
                continue
            info = hs[h]
            child_members = set()
            for c in info.children:
                if c in hs:
                    child_members |= set(hs[c].members)
            for m in info.members:
                if m not in child_members:
                    if m in placed:
                        problems.append(f"host {m} placed twice under root {root} ({placed[m]}, {h})")
                    placed[m] = h
            stack.extend(info.children)
        if set(placed) != set(hs[root].members):
            problems.append(f"root {root}: hosts not conserved")
    for atom in state.facts:
        if atom.predicate == "obtained-from" and len(atom.args) == 2:
            child, parent = atom.args
            if child in hs and hs[child].parent != parent:
                problems.append(f"fact {atom} contradicts the registry")
    return problems


def check_world(state: WorldState) -> None:
    problems = validate_world(state)
    if problems:
        raise InvariantViolation(problems)


def snapshot(state: WorldState) -> str:
    data = {
        "format": SNAPSHOT_FORMAT,
        "objects": {t: list(names) for t, names in state.objects.items()},
        "facts": sorted([a.predicate, *a.args] for a in state.facts),
        "fluents": {k: str(v) for k, v in sorted(state.fluents.items())},
        "hostsets": {
            h: {
                "members": list(info.members),
                "parent": info.parent,
                "status": info.status,
                "children": list(info.children),
                "level": info.level,
                "protocol": info.protocol,
                "created_round": info.created_round,
                "resolved_round": info.resolved_round,
            }
            for h, info in state.hostsets.items()
        },
    }
    return json.dumps(data, sort_keys=False, separators=(",", ":")) + "\n"


def restore(text: str) -> WorldState:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptSnapshot(f"unreadable snapshot: {exc}") from None
    if not isinstance(data, dict) or "format" not in data:
        raise CorruptSnapshot("snapshot lacks a format tag")
    if data["format"] != SNAPSHOT_FORMAT:
        raise VersionMismatch(f"expected {SNAPSHOT_FORMAT}, found {data['format']!r}")
    try:
        state = WorldState(
            objects={t: list(names) for t, names in data["objects"].items()},
            facts={Atom(f[0], tuple(f[1:])) for f in data["facts"]},
            fluents={k: Fraction(v) for k, v in data["fluents"].items()},
            hostsets={
                h: Hostset(
                    members=tuple(info["members"]),
                    parent=info["parent"],
                    status=info["status"],
                    children=list(info["children"]),
                    level=int(info["level"]),
                    protocol=info["protocol"],
                    created_round=int(info["created_round"]),
                    resolved_round=info["resolved_round"],
                )
                for h, info in data["hostsets"].items()
            },
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CorruptSnapshot(f"malformed snapshot: {exc!r}") from None
    return state
