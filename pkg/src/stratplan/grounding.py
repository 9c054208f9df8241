"""Grounding of a lifted Domain/Problem pair into a propositional task."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import CapacityExceeded
from .pddl import ActionSchema, Atom, Domain, Problem

DEFAULT_MAX_GROUND_ACTIONS = 1_000_000


@dataclass(frozen=True)
class GroundAction:
    id: int
    name: str
    args: tuple[str, ...]
    pre: frozenset[int]
    add: frozenset[int]
    delete: frozenset[int]
    cost: Fraction
    duration: Fraction
    sensing: bool

    @property
    def instance(self) -> tuple[str, ...]:
        """Identity of the action instance: schema name plus argument tuple."""
        return (self.name, *self.args)

    def label(self) -> str:
        return f"({' '.join(self.instance)})"


@dataclass(frozen=True)
class GroundTask:
    facts: tuple[Atom, ...]
    init: frozenset[int]
    goal: frozenset[int]
    actions: tuple[GroundAction, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(self.facts)})

    def fact_id(self, atom: Atom) -> int:
        return self._index[atom]

    def has_fact(self, atom: Atom) -> bool:
        return atom in self._index

    def atoms(self, ids) -> list[Atom]:
        return [self.facts[i] for i in sorted(ids)]

    def find_action(self, name: str, args: tuple[str, ...]) -> GroundAction:
        for a in self.actions:
            if a.name == name and a.args == tuple(args):
                return a
        raise KeyError((name, *args))


def _substitute(atom: Atom, binding: dict[str, str]) -> Atom:
    return Atom(atom.predicate, tuple(binding.get(a, a) for a in atom.args))


def static_predicates(domain: Domain) -> set[str]:
    """Predicates that no action schema adds."""
    added = {atom.predicate for a in domain.actions for atom in a.add}
    return {p.name for p in domain.predicates} - added


def _ground_schema(schema: ActionSchema, domain: Domain, problem: Problem,
                   statics: set[str], init: frozenset[Atom]):
    candidates = []
    for _, t in schema.parameters:
        candidates.append(sorted(problem.objects_of(domain, t)))
    var_names = [v for v, _ in schema.parameters]
    # static precondition atoms checked as soon as all their variables are bound
    static_pre = [a for a in schema.precondition if a.predicate in statics]
    check_at: dict[int, list[Atom]] = {}
    for atom in static_pre:
        positions = [var_names.index(x) for x in atom.args if x.startswith("?")]
        check_at.setdefault(max(positions, default=-1), []).append(atom)
    for atom in check_at.get(-1, []):
        if atom not in init:
            return
    binding: dict[str, str] = {}

    def rec(i: int):
        if i == len(var_names):
            yield tuple(binding[v] for v in var_names)
            return
        for obj in candidates[i]:
            binding[var_names[i]] = obj
            if all(_substitute(a, binding) in init for a in check_at.get(i, [])):
                yield from rec(i + 1)
        binding.pop(var_names[i], None)

    yield from rec(0)


def ground(domain: Domain, problem: Problem,
           max_actions: int = DEFAULT_MAX_GROUND_ACTIONS) -> GroundTask:
    """Enumerate every type-consistent instantiation of every schema.

    Instantiations whose static preconditions (predicates never added by any
    schema) are false in the initial state are pruned.  Actions are ordered by
    schema declaration order, then lexicographically by argument tuple.
    """
    statics = static_predicates(domain)
    init_atoms = problem.init
    lifted: list[tuple[ActionSchema, tuple[str, ...]]] = []
    for schema in domain.actions:
        for args in _ground_schema(schema, domain, problem, statics, init_atoms):
            lifted.append((schema, args))
            if len(lifted) > max_actions:
                raise CapacityExceeded(
                    f"more than {max_actions} ground actions (at schema {schema.name})")

    instantiated = []
    atoms: set[Atom] = set(init_atoms) | set(problem.goal)
    for schema, args in lifted:
        binding = dict(zip((v for v, _ in schema.parameters), args))
        pre = [_substitute(a, binding) for a in schema.precondition]
        add = {_substitute(a, binding) for a in schema.add}
        delete = {_substitute(a, binding) for a in schema.delete} - add
        atoms.update(pre)
        atoms.update(add)
        atoms.update(delete)
        instantiated.append((schema, args, pre, add, delete))

    pred_order = {p.name: i for i, p in enumerate(domain.predicates)}
    facts = tuple(sorted(atoms, key=lambda a: (pred_order.get(a.predicate, len(pred_order)), a.args)))
    index = {a: i for i, a in enumerate(facts)}
    actions = tuple(
        GroundAction(
            id=i,
            name=schema.name,
            args=args,
            pre=frozenset(index[a] for a in pre),
            add=frozenset(index[a] for a in add),
            delete=frozenset(index[a] for a in delete),
            cost=schema.cost,
            duration=schema.duration,
            sensing=schema.sensing,
        )
        for i, (schema, args, pre, add, delete) in enumerate(instantiated)
    )
    return GroundTask(
        facts=facts,
        init=frozenset(index[a] for a in init_atoms),
        goal=frozenset(index[a] for a in problem.goal),
        actions=actions,
    )
