"""Reference implementations used only by the tests.

Each one is written independently of the package code it checks: brute
force where the package searches, plain frozensets where it uses bitmasks,
networkx where it computes longest paths by hand.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from fractions import Fraction

import networkx as nx

from stratplan.grounding import GroundAction, GroundTask
from stratplan.pddl import Atom


def random_task(rng: random.Random, n_facts: int = 7, n_actions: int = 10,
                costs=(1, 2), durations=(1, 2, 3)) -> GroundTask:
    facts = tuple(Atom(f"f{i}") for i in range(n_facts))
    actions = []
    for aid in range(n_actions):
        pre = frozenset(rng.sample(range(n_facts), rng.randint(0, 2)))
        add = frozenset(rng.sample(range(n_facts), rng.randint(1, 2)))
        delete = frozenset(rng.sample(range(n_facts), rng.randint(0, 2))) - add
        actions.append(GroundAction(
            id=aid, name=f"a{aid}", args=(), pre=pre, add=add, delete=delete,
            cost=Fraction(rng.choice(costs)), duration=Fraction(rng.choice(durations)), sensing=False))
    init = frozenset(rng.sample(range(n_facts), rng.randint(0, 3)))
    goal = frozenset(rng.sample(range(n_facts), rng.randint(1, 3)))
    return GroundTask(facts, init, goal, tuple(actions))


def shortest_unit_length(task: GroundTask, limit: int = 64) -> int | None:
    """Breadth-first search ignoring costs; None when the goal is unreachable."""
    start = frozenset(task.init)
    if task.goal <= start:
        return 0
    frontier = deque([(start, 0)])
    seen = {start}
    while frontier:
        state, depth = frontier.popleft()
        if depth >= limit:
            continue
        for a in task.actions:
            if a.pre <= state:
                nxt = (state - a.delete) | a.add
                if nxt in seen:
                    continue
                if task.goal <= nxt:
                    return depth + 1
                seen.add(nxt)
                frontier.append((nxt, depth + 1))
    return None


def replay(task: GroundTask, action_ids) -> frozenset[int] | None:
    """Final state of a plan, or None when some step is inapplicable."""
    state = frozenset(task.init)
    for aid in action_ids:
        a = task.actions[aid]
        if not a.pre <= state:
            return None
        state = (state - a.delete) | a.add
    return state


def achieves_goal(task: GroundTask, action_ids) -> bool:
    final = replay(task, action_ids)
    return final is not None and task.goal <= final


def precedence_pairs(steps) -> list[tuple[int, int]]:
    pairs = []
    for j in range(len(steps)):
        for i in range(j):
            a, b = steps[i], steps[j]
            if (a.add & b.pre) or (a.delete & b.pre) or ((a.add | a.delete) & (b.add | b.delete)) \
                    or (a.pre & b.delete):
                pairs.append((i, j))
    return pairs


def longest_path_makespan(steps) -> Fraction:
    """Critical path through the precedence DAG via networkx."""
    if not steps:
        return Fraction(0)
    g = nx.DiGraph()
    g.add_node("start")
    g.add_node("end")
    for i, s in enumerate(steps):
        g.add_edge("start", i, weight=0)
        g.add_edge(i, "end", weight=s.duration)
    for i, j in precedence_pairs(steps):
        g.add_edge(i, j, weight=steps[i].duration)
    return Fraction(nx.dag_longest_path_length(g, weight="weight"))


def naive_ground_count(domain, problem) -> int:
    """Count type-consistent instantiations, minus those whose static
    preconditions are false in init."""
    added = {atom.predicate for a in domain.actions for atom in a.add}
    statics = {p.name for p in domain.predicates} - added
    objects = list(problem.objects)
    total = 0
    for schema in domain.actions:
        pools = [[o for o, t in objects if domain.is_subtype(t, ptype)] for _, ptype in schema.parameters]
        for combo in itertools.product(*pools):
            binding = dict(zip((v for v, _ in schema.parameters), combo))
            ok = True
            for atom in schema.precondition:
                if atom.predicate in statics:
                    g = Atom(atom.predicate, tuple(binding.get(x, x) for x in atom.args))
                    if g not in problem.init:
                        ok = False
                        break
            total += ok
    return total


def dfs_longest_path_nodes(nodes, edges) -> int:
    """Longest path (in nodes) of a DAG by memoized depth-first search."""
    succ: dict[str, set[str]] = {n: set() for n in nodes}
    for a, b, _ in edges:
        succ[a].add(b)
    memo: dict[str, int] = {}

    def depth(n, stack=()):
        if n in stack:
            raise ValueError("cycle")
        if n not in memo:
            memo[n] = 1 + max((depth(m, stack + (n,)) for m in succ[n]), default=0)
        return memo[n]

    return max(depth(n) for n in nodes)


def min_flow_size(goal, library, sources) -> int | None:
    """Smallest component subset that can all fire and covers the goal.

    Tags only accumulate, so a subset is feasible iff repeatedly firing any
    member whose inputs are present eventually fires every member.
    """
    goal = frozenset(goal)
    library = list(library)
    for k in range(len(library) + 1):
        for combo in itertools.combinations(library, k):
            tags = set(sources)
            pending = list(combo)
            progress = True
            while pending and progress:
                progress = False
                for c in list(pending):
                    if c.input_tags <= tags:
                        tags |= c.output_tags
                        pending.remove(c)
                        progress = True
            if not pending and goal <= tags:
                return k
    return None


def diff_oracle(previous, current) -> tuple[set, set]:
    prev = {tuple(x) for x in previous}
    cur = {tuple(x) for x in current}
    canceled = {x for x in prev if x not in cur}
    added = {x for x in cur if x not in prev}
    return canceled, added
