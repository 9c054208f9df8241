"""Search over ground tasks: greedy metric planning, cost-optimal planning,
an exhaustive test oracle, and critical-path scheduling of sequential plans.

All searches are single-threaded and break ties deterministically, so the
same GroundTask always produces the same plan.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .errors import CapacityExceeded, StratPlanError
from .grounding import GroundAction, GroundTask

DEFAULT_TIME_BUDGET = 10.0
ORACLE_MAX_ACTIONS = 64
ORACLE_MAX_DEPTH = 12

INF = float("inf")


class PlanningError(StratPlanError):
    pass


class Unsolvable(PlanningError):
    """The goal is unreachable from the initial state."""


class PlannerTimeout(PlanningError):
    """The search exceeded its wall-clock budget."""


class PlanInvalid(StratPlanError):
    """A plan is not executable or does not reach the goal."""


@dataclass(frozen=True)
class Plan:
    actions: tuple[int, ...]
    total_cost: Fraction
    nodes_generated: int = 0
    nodes_expanded: int = 0

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class ScheduledPlan:
    entries: tuple[tuple[Fraction, Fraction, int], ...]
    makespan: Fraction
    precedence: tuple[tuple[int, int], ...] = field(default=(), compare=False)

    def start_of(self, position: int) -> Fraction:
        return self.entries[position][0]


def _weight_fn(weight: str) -> Callable[[GroundAction], Fraction]:
    if weight == "cost":
        return lambda a: a.cost
    if weight == "duration":
        return lambda a: a.duration
    raise ValueError(f"unknown weight {weight!r}")


def _mask(ids) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


# --------------------------------------------------------------------------
# search-side compilation of a task


class _Compiled:
    """Bitmask view of a task restricted to goal-relevant actions.

    Facts that no kept action adds or deletes are constants.  The remaining
    facts are partitioned into components linked through actions; the additive
    heuristic decomposes exactly over those components, so a successor only
    needs the component touched by the applied action to be re-evaluated.
    """

    def __init__(self, task: GroundTask, weight: str):
        self.task = task
        w = _weight_fn(weight)
        relevant = set(task.goal)
        achievers: dict[int, list[GroundAction]] = {}
        for a in task.actions:
            for f in a.add:
                achievers.setdefault(f, []).append(a)
        stack = list(relevant)
        while stack:
            f = stack.pop()
            for a in achievers.get(f, ()):
                for p in a.pre:
                    if p not in relevant:
                        relevant.add(p)
                        stack.append(p)
        init = task.init
        candidate = [a for a in task.actions if a.add & relevant]
        changing = set()
        for a in candidate:
            changing.update(a.add)
            changing.update(a.delete)
        constant_true = {f for f in init if f not in changing}
        # actions needing a fact that is false initially and never added are dead
        kept = [a for a in candidate
                if all(p in constant_true or p in changing for p in a.pre)
                and (a.add & relevant) - constant_true]
        self.actions = kept
        self.weights = {a.id: w(a) for a in kept}
        self.relevant = relevant
        self.constant = constant_true

        parent = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                if rx < ry:
                    parent[ry] = rx
                else:
                    parent[rx] = ry

        def dyn(a):
            return sorted(f for f in (a.pre | a.add | a.delete) if f in relevant and f not in constant_true)

        for a in kept:
            fs = dyn(a)
            for f in fs:
                parent.setdefault(f, f)
            for f in fs[1:]:
                union(fs[0], f)
        for g in task.goal:
            if g not in constant_true:
                parent.setdefault(g, g)

        roots = sorted({find(f) for f in parent})
        comp_of_root = {r: i for i, r in enumerate(roots)}
        self.n_comp = len(roots)
        self.comp_mask = [0] * self.n_comp
        self.comp_facts: list[list[int]] = [[] for _ in roots]
        for f in sorted(parent):
            c = comp_of_root[find(f)]
            self.comp_mask[c] |= 1 << f
            self.comp_facts[c].append(f)
        self.comp_actions: list[list[GroundAction]] = [[] for _ in roots]
        self.action_comp: dict[int, int] = {}
        for a in kept:
            c = comp_of_root[find(dyn(a)[0])]
            self.comp_actions[c].append(a)
            self.action_comp[a.id] = c
        self.comp_goals: list[list[int]] = [[] for _ in roots]
        for g in sorted(task.goal):
            if g not in constant_true:
                self.comp_goals[comp_of_root[find(g)]].append(g)

        self.pre = {a.id: _mask(a.pre) for a in kept}
        self.add = {a.id: _mask(a.add) for a in kept}
        self.dele = {a.id: _mask(a.delete) for a in kept}
        self.init = _mask(task.init)
        self.goal = _mask(task.goal)
        self._h_memo: list[dict[int, float]] = [dict() for _ in roots]
        self._app_memo: list[dict[int, tuple[int, ...]]] = [dict() for _ in roots]
        self._pre_lists = {a.id: [p for p in a.pre if p not in constant_true] for a in kept}

    def h_comp(self, c: int, state: int) -> float:
        key = state & self.comp_mask[c]
        memo = self._h_memo[c]
        v = memo.get(key)
        if v is not None:
            return v
        goals = self.comp_goals[c]
        if not goals:
            memo[key] = 0.0
            return 0.0
        cost = {f: 0.0 for f in self.comp_facts[c] if key >> f & 1}
        acts = self.comp_actions[c]
        changed = True
        while changed:
            changed = False
            for a in acts:
                total = float(self.weights[a.id])
                for p in self._pre_lists[a.id]:
                    pc = cost.get(p)
                    if pc is None:
                        break
                    total += pc
                else:
                    for f in a.add:
                        old = cost.get(f)
                        if old is None or total < old:
                            cost[f] = total
                            changed = True
        h = 0.0
        for g in goals:
            gc = cost.get(g)
            if gc is None:
                h = INF
                break
            h += gc
        memo[key] = h
        return h

    def h(self, state: int) -> float:
        return sum(self.h_comp(c, state) for c in range(self.n_comp))

    def applicable_in(self, c: int, state: int) -> tuple[int, ...]:
        key = state & self.comp_mask[c]
        memo = self._app_memo[c]
        v = memo.get(key)
        if v is None:
            pre = self.pre
            v = tuple(a.id for a in self.comp_actions[c] if (state & pre[a.id]) == pre[a.id])
            memo[key] = v
        return v

    def apply(self, state: int, aid: int) -> int:
        return (state & ~self.dele[aid]) | self.add[aid]


def _reconstruct(parents: list[int], acts: list[int], node: int) -> tuple[int, ...]:
    out = []
    while parents[node] >= 0:
        out.append(acts[node])
        node = parents[node]
    return tuple(reversed(out))


def _plan_cost(task: GroundTask, actions) -> Fraction:
    return sum((task.actions[a].cost for a in actions), Fraction(0))


# --------------------------------------------------------------------------
# greedy best-first search on h_add


def plan_metric(task: GroundTask, time_budget: float = DEFAULT_TIME_BUDGET,
                weight: str = "cost") -> Plan:
    """Greedy best-first search ordered by the additive heuristic.

    Open-list ties go to the lower accumulated weight, then to the lower id of
    the generating action.  The resulting plan is executable but not
    necessarily cost-optimal.
    """
    if task.goal <= task.init:
        return Plan((), Fraction(0), 1, 0)
    cc = _Compiled(task, weight)
    deadline = time.monotonic() + time_budget
    comp_h = [cc.h_comp(c, cc.init) for c in range(cc.n_comp)]
    h0 = sum(comp_h)
    if h0 == INF:
        raise Unsolvable("goal unreachable under delete relaxation")
    parents = [-1]
    acts = [-1]
    states = [cc.init]
    gvals = [Fraction(0)]
    hvals = [h0]
    seen = {cc.init}
    counter = itertools.count()
    heap = [(h0, Fraction(0), -1, next(counter), 0)]
    generated = 1
    expanded = 0
    goal = cc.goal
    weights = cc.weights
    while heap:
        _, g, _, _, node = heapq.heappop(heap)
        state = states[node]
        if state & goal == goal:
            plan = _reconstruct(parents, acts, node)
            return Plan(plan, _plan_cost(task, plan), generated, expanded)
        expanded += 1
        if expanded & 255 == 0 and time.monotonic() > deadline:
            raise PlannerTimeout(f"no plan within {time_budget} s ({expanded} expansions)")
        h_parent = hvals[node]
        for c in range(cc.n_comp):
            app = cc.applicable_in(c, state)
            if not app:
                continue
            hc_old = cc.h_comp(c, state)
            for aid in app:
                child = cc.apply(state, aid)
                if child in seen:
                    continue
                seen.add(child)
                hc_new = cc.h_comp(c, child)
                if hc_new == INF:
                    continue
                h_child = h_parent - hc_old + hc_new
                g_child = g + weights[aid]
                idx = len(states)
                states.append(child)
                parents.append(node)
                acts.append(aid)
                gvals.append(g_child)
                hvals.append(h_child)
                generated += 1
                heapq.heappush(heap, (h_child, g_child, aid, next(counter), idx))
    raise Unsolvable(f"search space exhausted after {expanded} expansions")


# --------------------------------------------------------------------------
# uniform-cost search


def plan_optimal(task: GroundTask, time_budget: float = DEFAULT_TIME_BUDGET,
                 weight: str = "cost") -> Plan:
    """Cost-optimal plan by uniform-cost search (ties: lower action id)."""
    if task.goal <= task.init:
        return Plan((), Fraction(0), 1, 0)
    cc = _Compiled(task, weight)
    deadline = time.monotonic() + time_budget
    weights = cc.weights
    best = {cc.init: Fraction(0)}
    parents = [-1]
    acts = [-1]
    states = [cc.init]
    counter = itertools.count()
    heap = [(Fraction(0), -1, next(counter), 0)]
    closed = set()
    generated = 1
    expanded = 0
    goal = cc.goal
    order = sorted(cc.action_comp)
    pre = cc.pre
    while heap:
        g, _, _, node = heapq.heappop(heap)
        state = states[node]
        if state in closed or best.get(state, g) < g:
            continue
        if state & goal == goal:
            plan = _reconstruct(parents, acts, node)
            return Plan(plan, _plan_cost(task, plan), generated, expanded)
        closed.add(state)
        expanded += 1
        if expanded & 255 == 0 and time.monotonic() > deadline:
            raise PlannerTimeout(f"no optimal plan within {time_budget} s ({expanded} expansions)")
        for aid in order:
            if state & pre[aid] != pre[aid]:
                continue
            child = cc.apply(state, aid)
            if child in closed:
                continue
            g_child = g + weights[aid]
            if g_child >= best.get(child, INF):
                continue
            best[child] = g_child
            idx = len(states)
            states.append(child)
            parents.append(node)
            acts.append(aid)
            generated += 1
            heapq.heappush(heap, (g_child, aid, next(counter), idx))
    raise Unsolvable(f"search space exhausted after {expanded} expansions")


# --------------------------------------------------------------------------
# exhaustive oracle


def plan_oracle(task: GroundTask, depth_bound: int) -> Plan:
    """Minimum-cost plan among all action sequences of length <= depth_bound.

    Enumerates sequences breadth-first by length, discarding a sequence only
    when an equal-or-shorter one already reached the same state at no greater
    cost.  Independent of the compiled search machinery above: it works on
    plain frozensets and considers every ground action.
    """
    if len(task.actions) > ORACLE_MAX_ACTIONS:
        raise CapacityExceeded(f"oracle limited to {ORACLE_MAX_ACTIONS} ground actions")
    if depth_bound > ORACLE_MAX_DEPTH or depth_bound < 0:
        raise CapacityExceeded(f"oracle depth bound must be within 0..{ORACLE_MAX_DEPTH}")
    goal = task.goal
    start = frozenset(task.init)
    best_cost: dict[frozenset, Fraction] = {start: Fraction(0)}
    layer: dict[frozenset, tuple[Fraction, tuple[int, ...]]] = {start: (Fraction(0), ())}
    incumbent: tuple[Fraction, int, tuple[int, ...]] | None = None
    if goal <= start:
        incumbent = (Fraction(0), 0, ())
    for depth in range(1, depth_bound + 1):
        nxt: dict[frozenset, tuple[Fraction, tuple[int, ...]]] = {}
        for state, (cost, seq) in sorted(layer.items(), key=lambda kv: (kv[1][0], kv[1][1])):
            for a in task.actions:
                if not a.pre <= state:
                    continue
                succ = (state - a.delete) | a.add
                c = cost + a.cost
                # best_cost only holds strictly shorter sequences at this point
                if best_cost.get(succ, INF) <= c:
                    continue
                cand = (c, seq + (a.id,))
                old = nxt.get(succ)
                if old is None or cand < old:
                    nxt[succ] = cand
        for succ, (c, seq) in nxt.items():
            if c < best_cost.get(succ, INF):
                best_cost[succ] = c
            if goal <= succ:
                key = (c, len(seq), seq)
                if incumbent is None or key < incumbent:
                    incumbent = key
        layer = nxt
        if not layer:
            break
    if incumbent is None:
        raise Unsolvable(f"no plan of length <= {depth_bound}")
    cost, _, seq = incumbent
    return Plan(seq, cost, 0, 0)


# --------------------------------------------------------------------------
# validation and scheduling


def validate_plan(plan: Plan | tuple[int, ...], task: GroundTask) -> frozenset[int]:
    """Replay a plan from the initial state; return the final state.

    Raises :class:`PlanInvalid` on an inapplicable step or an unmet goal.
    """
    ids = plan.actions if isinstance(plan, Plan) else tuple(plan)
    state = set(task.init)
    for pos, aid in enumerate(ids):
        if not 0 <= aid < len(task.actions):
            raise PlanInvalid(f"step {pos}: unknown action id {aid}")
        a = task.actions[aid]
        missing = a.pre - state
        if missing:
            atoms = ", ".join(str(task.facts[f]) for f in sorted(missing))
            raise PlanInvalid(f"step {pos} {a.label()}: unmet preconditions {atoms}")
        state -= a.delete
        state |= a.add
    unmet = task.goal - state
    if unmet:
        atoms = ", ".join(str(task.facts[f]) for f in sorted(unmet))
        raise PlanInvalid(f"goal not reached: {atoms}")
    if isinstance(plan, Plan) and plan.total_cost != _plan_cost(task, ids):
        raise PlanInvalid("total_cost does not equal the sum of action costs")
    return frozenset(state)


def precedes(a: GroundAction, b: GroundAction) -> bool:
    """Ordering constraint between an earlier action a and a later action b."""
    eff_a = a.add | a.delete
    return bool(
        a.add & b.pre
        or a.delete & b.pre
        or eff_a & (b.add | b.delete)
        or a.pre & b.delete
    )


def schedule_temporal(plan: Plan | tuple[int, ...], task: GroundTask) -> ScheduledPlan:
    """Earliest-start schedule of a sequential plan under its precedence relation."""
    ids = plan.actions if isinstance(plan, Plan) else tuple(plan)
    steps = [task.actions[i] for i in ids]
    touched: dict[int, list[int]] = {}
    starts: list[Fraction] = []
    edges: list[tuple[int, int]] = []
    for j, b in enumerate(steps):
        cands = set()
        for f in b.pre | b.add | b.delete:
            cands.update(touched.get(f, ()))
        start = Fraction(0)
        for i in sorted(cands):
            a = steps[i]
            if precedes(a, b):
                edges.append((i, j))
                end = starts[i] + a.duration
                if end > start:
                    start = end
        starts.append(start)
        for f in b.pre | b.add | b.delete:
            touched.setdefault(f, []).append(j)
    entries = tuple((starts[k], steps[k].duration, ids[k]) for k in range(len(steps)))
    makespan = max((s + d for s, d, _ in entries), default=Fraction(0))
    return ScheduledPlan(entries, makespan, tuple(edges))


# --------------------------------------------------------------------------
# serialization


def json_number(value) -> int | float:
    value = Fraction(value)
    if value.denominator == 1:
        return int(value)
    return float(value)


def plan_to_json(plan: Plan, task: GroundTask, schedule: ScheduledPlan | None = None) -> dict:
    actions = []
    for pos, aid in enumerate(plan.actions):
        a = task.actions[aid]
        entry = {
            "name": a.name,
            "args": list(a.args),
            "cost": json_number(a.cost),
            "duration": json_number(a.duration),
        }
        if schedule is not None:
            entry["start"] = json_number(schedule.entries[pos][0])
        actions.append(entry)
    out = {"actions": actions, "total_cost": json_number(plan.total_cost)}
    if schedule is not None:
        out["makespan"] = json_number(schedule.makespan)
    out["nodes_generated"] = plan.nodes_generated
    out["nodes_expanded"] = plan.nodes_expanded
    return out


def plan_from_json(data: dict, task: GroundTask) -> Plan:
    """Resolve a serialized plan back to action ids of ``task``."""
    index = {(a.name, a.args): a.id for a in task.actions}
    ids = []
    for step in data["actions"]:
        key = (step["name"], tuple(step["args"]))
        if key not in index:
            raise PlanInvalid(f"action {key} does not exist in the task")
        ids.append(index[key])
    return Plan(tuple(ids), _plan_cost(task, ids),
                data.get("nodes_generated", 0), data.get("nodes_expanded", 0))
