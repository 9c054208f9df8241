"""Data model, parser and emitter for the STRIPS-with-costs PDDL subset.

Accepted requirements are ``:strips :typing :action-costs :durative-actions``.
Preconditions are positive conjunctions, effects are add/delete lists plus an
optional ``(increase (total-cost) N)``.  A durative action with ``at start``
conditions and ``at end`` effects is folded into the same :class:`ActionSchema`
with its constant duration recorded.  Everything else is rejected with
:class:`UnsupportedFeature`.

Identifiers are case-insensitive and canonicalized to lowercase.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import StratPlanError

SUPPORTED_REQUIREMENTS = (":strips", ":typing", ":action-costs", ":durative-actions")
METRICS = ("minimize-total-cost", "minimize-makespan", "none")
SENSING_PREFIX = "sense-"
MAX_ARITY = 4

_IDENT = re.compile(r"[a-z][a-z0-9-]*\Z")
_NUMBER = re.compile(r"[0-9]+(\.[0-9]+)?\Z")


class PDDLError(StratPlanError):
    """Base class for PDDL parse and validation errors."""


class PDDLSyntaxError(PDDLError):
    """Malformed text; carries a 1-based line/column and the offending token."""

    def __init__(self, message: str, line: int, column: int, token: str = ""):
        self.line = line
        self.column = column
        self.token = token
        super().__init__(f"line {line}, column {column}: {message}"
                         + (f" (near {token!r})" if token else ""))


class UnsupportedFeature(PDDLError):
    """A PDDL construct outside the accepted subset."""


class PDDLTypeError(PDDLError):
    """Arity or type mismatch, undeclared type or unbound variable."""


class UnknownPredicate(PDDLError):
    pass


class UnknownObject(PDDLError):
    pass


# --------------------------------------------------------------------------
# data model


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    @property
    def is_ground(self) -> bool:
        return not any(a.startswith("?") for a in self.args)

    def __str__(self) -> str:
        if not self.args:
            return f"({self.predicate})"
        return f"({self.predicate} {' '.join(self.args)})"


@dataclass(frozen=True)
class Predicate:
    name: str
    parameters: tuple[tuple[str, str], ...] = ()

    @property
    def arity(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[tuple[str, str], ...] = ()
    precondition: tuple[Atom, ...] = ()
    add: frozenset[Atom] = frozenset()
    delete: frozenset[Atom] = frozenset()
    cost: Fraction = Fraction(0)
    duration: Fraction = Fraction(0)
    sensing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "add", frozenset(self.add))
        object.__setattr__(self, "delete", frozenset(self.delete))
        object.__setattr__(self, "cost", Fraction(self.cost))
        object.__setattr__(self, "duration", Fraction(self.duration))


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple[str, ...] = (":strips", ":typing")
    types: tuple[tuple[str, str], ...] = ()
    predicates: tuple[Predicate, ...] = ()
    actions: tuple[ActionSchema, ...] = ()

    @property
    def durative(self) -> bool:
        return ":durative-actions" in self.requirements

    @property
    def uses_costs(self) -> bool:
        return ":action-costs" in self.requirements

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise UnknownPredicate(name)

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def type_parent(self) -> dict[str, str]:
        return dict(self.types)

    def is_subtype(self, sub: str, sup: str) -> bool:
        parents = self.type_parent()
        t = sub
        while True:
            if t == sup:
                return True
            if t == "object" or t not in parents:
                return sup == "object"
            t = parents[t]


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...] = ()
    init: frozenset[Atom] = frozenset()
    goal: tuple[Atom, ...] = ()
    metric: str = "none"
    total_cost: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "init", frozenset(self.init))

    def objects_of(self, domain: Domain, type_name: str) -> list[str]:
        return [o for o, t in self.objects if domain.is_subtype(t, type_name)]


# --------------------------------------------------------------------------
# tokenizer / s-expressions


@dataclass(frozen=True)
class _Tok:
    text: str
    line: int
    col: int


class _List(list):
    line: int = 0
    col: int = 0


def _tokenize(text: str) -> Iterator[_Tok]:
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield _Tok(ch, line, col)
            i += 1
            col += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield _Tok(text[i:j], line, col)
            col += j - i
            i = j


def _read_sexpr(text: str) -> _List:
    stack: list[_List] = []
    result: _List | None = None
    for tok in _tokenize(text):
        if tok.text == "(":
            node = _List()
            node.line, node.col = tok.line, tok.col
            if stack:
                stack[-1].append(node)
            elif result is not None:
                raise PDDLSyntaxError("unexpected text after the top-level form", tok.line, tok.col, tok.text)
            stack.append(node)
        elif tok.text == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced closing parenthesis", tok.line, tok.col, tok.text)
            node = stack.pop()
            if not stack:
                result = node
        else:
            if not stack:
                raise PDDLSyntaxError("token outside of any form", tok.line, tok.col, tok.text)
            stack[-1].append(tok)
    if stack:
        open_node = stack[-1]
        raise PDDLSyntaxError("unbalanced opening parenthesis", open_node.line, open_node.col, "(")
    if result is None:
        raise PDDLSyntaxError("empty input", 1, 1)
    return result


def _where(node) -> tuple[int, int]:
    return node.line, node.col


def _word(node, what: str) -> str:
    if not isinstance(node, _Tok):
        raise PDDLSyntaxError(f"expected {what}, found a list", *_where(node), "(")
    return node.text.lower()


def _ident(node, what: str = "identifier") -> str:
    name = _word(node, what)
    if not _IDENT.match(name):
        raise PDDLSyntaxError(f"invalid {what}", node.line, node.col, node.text)
    return name


def _var(node) -> str:
    name = _word(node, "variable")
    if not name.startswith("?") or not _IDENT.match(name[1:]):
        raise PDDLSyntaxError("invalid variable", node.line, node.col, node.text)
    return name


def _number(node) -> Fraction:
    text = _word(node, "number")
    if not _NUMBER.match(text):
        raise PDDLSyntaxError("expected a nonnegative number", node.line, node.col, node.text)
    return Fraction(text)


def _head(node) -> str | None:
    if isinstance(node, _List) and node and isinstance(node[0], _Tok):
        return node[0].text.lower()
    return None


def _expect_list(node, what: str) -> _List:
    if not isinstance(node, _List):
        raise PDDLSyntaxError(f"expected {what}", node.line, node.col, node.text)
    return node


def _typed_list(items: Sequence, item_parser) -> list[tuple[str, str]]:
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    i = 0
    while i < len(items):
        tok = items[i]
        if isinstance(tok, _Tok) and tok.text == "-":
            if i + 1 >= len(items):
                raise PDDLSyntaxError("missing type after '-'", tok.line, tok.col, "-")
            type_node = items[i + 1]
            if isinstance(type_node, _List):
                if _head(type_node) == "either":
                    raise UnsupportedFeature("'either' types are not supported")
                raise PDDLSyntaxError("expected a type name", *_where(type_node), "(")
            type_name = _ident(type_node, "type name")
            if not pending:
                raise PDDLSyntaxError("type annotation without names", tok.line, tok.col, "-")
            out.extend((p, type_name) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(item_parser(tok))
        i += 1
    out.extend((p, "object") for p in pending)
    return out


def _split_keywords(items: Sequence, start: int) -> list[tuple[_Tok, object]]:
    pairs = []
    i = start
    while i < len(items):
        key = items[i]
        if not isinstance(key, _Tok) or not key.text.startswith(":"):
            raise PDDLSyntaxError("expected a keyword", *_where(key), getattr(key, "text", "("))
        if i + 1 >= len(items):
            raise PDDLSyntaxError("keyword without a value", key.line, key.col, key.text)
        pairs.append((key, items[i + 1]))
        i += 2
    return pairs


# --------------------------------------------------------------------------
# domain parsing


_UNSUPPORTED_HEADS = {
    "or": "disjunctive conditions",
    "not": "negative preconditions",
    "imply": "implications",
    "exists": "existential quantifiers",
    "forall": "universal quantifiers",
    "when": "conditional effects",
    "=": "equality constraints",
    "decrease": "numeric effects other than total-cost increase",
    "assign": "numeric effects other than total-cost increase",
    "scale-up": "numeric effects other than total-cost increase",
    "scale-down": "numeric effects other than total-cost increase",
    ">": "numeric conditions",
    "<": "numeric conditions",
    ">=": "numeric conditions",
    "<=": "numeric conditions",
    "preference": "preferences",
}


class _DomainBuilder:
    def __init__(self):
        self.name = ""
        self.requirements: list[str] = []
        self.types: list[tuple[str, str]] = []
        self.predicates: dict[str, Predicate] = {}
        self.actions: list[ActionSchema] = []

    # type helpers, usable before the Domain is frozen
    def declared_type(self, name: str) -> bool:
        return name == "object" or any(t == name for t, _ in self.types)

    def is_subtype(self, sub: str, sup: str) -> bool:
        parents = dict(self.types)
        t = sub
        while True:
            if t == sup:
                return True
            if t == "object" or t not in parents:
                return sup == "object"
            t = parents[t]


def _check_atom(builder, atom: Atom, node, bindings: dict[str, str], where: str) -> None:
    if atom.predicate not in builder.predicates:
        raise UnknownPredicate(f"{where}: undeclared predicate {atom.predicate!r}")
    pred = builder.predicates[atom.predicate]
    if pred.arity != len(atom.args):
        raise PDDLTypeError(
            f"{where}: {atom.predicate} expects {pred.arity} arguments, got {len(atom.args)}")
    for arg, (_, ptype) in zip(atom.args, pred.parameters):
        if arg not in bindings:
            if arg.startswith("?"):
                raise PDDLTypeError(f"{where}: variable {arg} is not a parameter")
            raise UnknownObject(f"{where}: undeclared object {arg!r}")
        if not builder.is_subtype(bindings[arg], ptype):
            raise PDDLTypeError(
                f"{where}: {arg} of type {bindings[arg]} does not fit {atom.predicate} slot of type {ptype}")


def _parse_atom(node, allow_vars: bool) -> Atom:
    node = _expect_list(node, "an atom")
    if not node:
        raise PDDLSyntaxError("empty atom", *_where(node), "()")
    head = _head(node)
    if head is None:
        raise PDDLSyntaxError("atom must start with a predicate name", *_where(node), "(")
    if head in _UNSUPPORTED_HEADS:
        raise UnsupportedFeature(f"{_UNSUPPORTED_HEADS[head]} (line {node.line})")
    pred = _ident(node[0], "predicate name")
    args = []
    for a in node[1:]:
        text = _word(a, "argument")
        if text.startswith("?"):
            if not allow_vars:
                raise PDDLSyntaxError("variable in a ground atom", a.line, a.col, a.text)
            args.append(_var(a))
        else:
            args.append(_ident(a, "object name"))
    if len(args) > MAX_ARITY:
        raise UnsupportedFeature(f"predicate arity above {MAX_ARITY} (line {node.line})")
    return Atom(pred, tuple(args))


def _conjuncts(node) -> list:
    node = _expect_list(node, "a condition")
    head = _head(node)
    if not node:
        return []
    if head == "and":
        out = []
        for sub in node[1:]:
            out.extend(_conjuncts(sub))
        return out
    return [node]


def _parse_precondition(node, builder, bindings, where) -> tuple[Atom, ...]:
    atoms = []
    for c in _conjuncts(node):
        atom = _parse_atom(c, allow_vars=True)
        _check_atom(builder, atom, c, bindings, where)
        if atom not in atoms:
            atoms.append(atom)
    return tuple(atoms)


def _parse_literal(node, builder, bindings, where, add, delete) -> Fraction | None:
    head = _head(node)
    if head == "not":
        if len(node) != 2:
            raise PDDLSyntaxError("'not' takes exactly one atom", *_where(node), "not")
        atom = _parse_atom(node[1], allow_vars=True)
        _check_atom(builder, atom, node[1], bindings, where)
        delete.add(atom)
        return None
    if head == "increase":
        if len(node) != 3 or _head(node[1]) != "total-cost" or len(node[1]) != 1:
            raise UnsupportedFeature(f"only (increase (total-cost) N) is supported (line {node.line})")
        return _number(node[2])
    atom = _parse_atom(node, allow_vars=True)
    _check_atom(builder, atom, node, bindings, where)
    add.add(atom)
    return None


def _finish_schema(name, params, pre, add, delete, cost, duration, where) -> ActionSchema:
    clash = add & delete
    if clash:
        raise PDDLTypeError(f"{where}: atoms both added and deleted: {sorted(map(str, clash))}")
    return ActionSchema(
        name=name,
        parameters=tuple(params),
        precondition=pre,
        add=frozenset(add),
        delete=frozenset(delete),
        cost=cost,
        duration=duration,
        sensing=name.startswith(SENSING_PREFIX),
    )


def _parse_params(node, builder, where) -> list[tuple[str, str]]:
    params = _typed_list(_expect_list(node, "a parameter list"), _var)
    seen = set()
    for v, t in params:
        if v in seen:
            raise PDDLTypeError(f"{where}: duplicate parameter {v}")
        seen.add(v)
        if not builder.declared_type(t):
            raise PDDLTypeError(f"{where}: undeclared type {t!r}")
    return params


def _parse_action(node, builder) -> ActionSchema:
    name = _ident(node[1], "action name")
    where = f"action {name}"
    params: list[tuple[str, str]] = []
    pre_node = effect_node = None
    for key, value in _split_keywords(node, 2):
        k = key.text.lower()
        if k == ":parameters":
            params = _parse_params(value, builder, where)
        elif k == ":precondition":
            pre_node = value
        elif k == ":effect":
            effect_node = value
        else:
            raise UnsupportedFeature(f"{where}: keyword {k}")
    bindings = dict(params)
    pre = _parse_precondition(pre_node, builder, bindings, where) if pre_node is not None else ()
    add: set[Atom] = set()
    delete: set[Atom] = set()
    cost = Fraction(0)
    seen_cost = False
    if effect_node is not None:
        for lit in _conjuncts(effect_node):
            c = _parse_literal(lit, builder, bindings, where, add, delete)
            if c is not None:
                if seen_cost:
                    raise UnsupportedFeature(f"{where}: more than one total-cost increase")
                cost, seen_cost = c, True
    return _finish_schema(name, params, pre, add, delete, cost, Fraction(0), where)


def _strip_timed(node, allowed: str, where: str):
    head = _head(node)
    if head not in ("at", "over"):
        raise UnsupportedFeature(f"{where}: untimed element in a durative action (line {node.line})")
    if head == "over" or len(node) != 3:
        raise UnsupportedFeature(f"{where}: only 'at {allowed}' is supported (line {node.line})")
    when = _word(node[1], "time specifier")
    if when != allowed:
        raise UnsupportedFeature(f"{where}: only 'at {allowed}' is supported, got 'at {when}' (line {node.line})")
    return node[2]


def _parse_durative(node, builder) -> ActionSchema:
    name = _ident(node[1], "action name")
    where = f"durative action {name}"
    params: list[tuple[str, str]] = []
    duration = None
    cond_node = effect_node = None
    for key, value in _split_keywords(node, 2):
        k = key.text.lower()
        if k == ":parameters":
            params = _parse_params(value, builder, where)
        elif k == ":duration":
            value = _expect_list(value, "a duration constraint")
            if _head(value) != "=" or len(value) != 3 or _word(value[1], "?duration") != "?duration":
                raise UnsupportedFeature(f"{where}: only (= ?duration N) is supported")
            duration = _number(value[2])
        elif k == ":condition":
            cond_node = value
        elif k == ":effect":
            effect_node = value
        else:
            raise UnsupportedFeature(f"{where}: keyword {k}")
    if duration is None:
        raise PDDLSyntaxError(f"{where}: missing :duration", *_where(node), name)
    bindings = dict(params)
    pre: list[Atom] = []
    if cond_node is not None:
        for c in _conjuncts(cond_node):
            inner = _strip_timed(c, "start", where)
            atom = _parse_atom(inner, allow_vars=True)
            _check_atom(builder, atom, inner, bindings, where)
            if atom not in pre:
                pre.append(atom)
    add: set[Atom] = set()
    delete: set[Atom] = set()
    cost = Fraction(0)
    seen_cost = False
    if effect_node is not None:
        for lit in _conjuncts(effect_node):
            inner = _strip_timed(lit, "end", where)
            c = _parse_literal(inner, builder, bindings, where, add, delete)
            if c is not None:
                if seen_cost:
                    raise UnsupportedFeature(f"{where}: more than one total-cost increase")
                cost, seen_cost = c, True
    return _finish_schema(name, params, tuple(pre), add, delete, cost, duration, where)


def _check_define(root, kind: str) -> str:
    if _head(root) != "define" or len(root) < 2:
        raise PDDLSyntaxError("expected (define ...)", *_where(root), "(")
    header = _expect_list(root[1], f"({kind} name)")
    if _head(header) != kind or len(header) != 2:
        raise PDDLSyntaxError(f"expected ({kind} <name>)", *_where(header), "(")
    return _ident(header[1], f"{kind} name")


def parse_domain(text: str) -> Domain:
    root = _read_sexpr(text)
    builder = _DomainBuilder()
    builder.name = _check_define(root, "domain")
    for section in root[2:]:
        section = _expect_list(section, "a domain section")
        head = _head(section)
        if head == ":requirements":
            for r in section[1:]:
                req = _word(r, "requirement")
                if req not in SUPPORTED_REQUIREMENTS:
                    raise UnsupportedFeature(f"requirement {req}")
                if req not in builder.requirements:
                    builder.requirements.append(req)
        elif head == ":types":
            for name, parent in _typed_list(section[1:], lambda t: _ident(t, "type name")):
                if name == "object":
                    continue
                if builder.declared_type(name):
                    raise PDDLTypeError(f"type {name!r} declared twice")
                builder.types.append((name, parent))
            for name, parent in builder.types:
                if not builder.declared_type(parent):
                    raise PDDLTypeError(f"type {name!r} has undeclared parent {parent!r}")
            _check_forest(builder.types)
        elif head == ":predicates":
            for p in section[1:]:
                p = _expect_list(p, "a predicate declaration")
                pname = _ident(p[0], "predicate name") if p else None
                if pname is None:
                    raise PDDLSyntaxError("empty predicate declaration", *_where(p), "()")
                params = _typed_list(p[1:], _var)
                if len(params) > MAX_ARITY:
                    raise UnsupportedFeature(f"predicate {pname} has arity above {MAX_ARITY}")
                for _, t in params:
                    if not builder.declared_type(t):
                        raise PDDLTypeError(f"predicate {pname}: undeclared type {t!r}")
                if pname in builder.predicates:
                    raise PDDLTypeError(f"predicate {pname} declared twice")
                builder.predicates[pname] = Predicate(pname, tuple(params))
        elif head == ":functions":
            items = list(section[1:])
            if items and isinstance(items[-1], _Tok) and len(items) >= 2 and _word(items[-2], "-") == "-":
                if _word(items[-1], "function type") != "number":
                    raise UnsupportedFeature("only numeric functions are supported")
                items = items[:-2]
            for f in items:
                if _head(f) != "total-cost" or len(f) != 1:
                    raise UnsupportedFeature("the only supported function is (total-cost)")
        elif head == ":action":
            if len(section) < 2:
                raise PDDLSyntaxError("action without a name", *_where(section), ":action")
            builder.actions.append(_parse_action(section, builder))
        elif head == ":durative-action":
            if len(section) < 2:
                raise PDDLSyntaxError("action without a name", *_where(section), ":durative-action")
            builder.actions.append(_parse_durative(section, builder))
        elif head in (":constants", ":derived", ":constraints"):
            raise UnsupportedFeature(f"section {head}")
        else:
            raise PDDLSyntaxError("unknown domain section", *_where(section), head or "(")
    names = [a.name for a in builder.actions]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise PDDLTypeError(f"duplicate action names: {sorted(dupes)}")
    return Domain(
        name=builder.name,
        requirements=tuple(builder.requirements),
        types=tuple(builder.types),
        predicates=tuple(builder.predicates.values()),
        actions=tuple(builder.actions),
    )


def _check_forest(types: Iterable[tuple[str, str]]) -> None:
    parents = dict(types)
    for start in parents:
        seen = {start}
        t = parents[start]
        while t != "object":
            if t in seen:
                raise PDDLTypeError(f"type hierarchy has a cycle through {t!r}")
            seen.add(t)
            t = parents.get(t, "object")


# --------------------------------------------------------------------------
# problem parsing


def parse_problem(text: str, domain: Domain) -> Problem:
    root = _read_sexpr(text)
    name = _check_define(root, "problem")
    builder = _DomainBuilder()
    builder.types = list(domain.types)
    builder.predicates = {p.name: p for p in domain.predicates}
    domain_name = None
    objects: list[tuple[str, str]] = []
    init: set[Atom] = set()
    goal: list[Atom] = []
    metric = "none"
    total_cost = None
    for section in root[2:]:
        section = _expect_list(section, "a problem section")
        head = _head(section)
        if head == ":domain":
            if len(section) != 2:
                raise PDDLSyntaxError("expected (:domain <name>)", *_where(section), ":domain")
            domain_name = _ident(section[1], "domain name")
            if domain_name != domain.name:
                raise PDDLTypeError(f"problem targets domain {domain_name!r}, not {domain.name!r}")
        elif head == ":objects":
            for obj, t in _typed_list(section[1:], lambda o: _ident(o, "object name")):
                if not builder.declared_type(t):
                    raise PDDLTypeError(f"object {obj}: undeclared type {t!r}")
                if any(o == obj for o, _ in objects):
                    raise PDDLTypeError(f"object {obj} declared twice")
                objects.append((obj, t))
        elif head == ":init":
            bindings = dict(objects)
            for item in section[1:]:
                item = _expect_list(item, "an init fact")
                if _head(item) == "=":
                    if len(item) != 3 or _head(item[1]) != "total-cost" or len(item[1]) != 1:
                        raise UnsupportedFeature(f"only (= (total-cost) N) is supported in :init (line {item.line})")
                    total_cost = _number(item[2])
                    continue
                atom = _parse_atom(item, allow_vars=False)
                _check_atom(builder, atom, item, bindings, "init")
                init.add(atom)
        elif head == ":goal":
            if len(section) != 2:
                raise PDDLSyntaxError("expected (:goal <condition>)", *_where(section), ":goal")
            bindings = dict(objects)
            for c in _conjuncts(section[1]):
                atom = _parse_atom(c, allow_vars=False)
                _check_atom(builder, atom, c, bindings, "goal")
                if atom not in goal:
                    goal.append(atom)
        elif head == ":metric":
            if len(section) != 3 or _word(section[1], "metric direction") != "minimize":
                raise UnsupportedFeature("only (:metric minimize ...) is supported")
            target = _head(section[2])
            if target == "total-cost":
                metric = "minimize-total-cost"
            elif target == "total-time":
                metric = "minimize-makespan"
            else:
                raise UnsupportedFeature(f"metric expression {target}")
        else:
            raise PDDLSyntaxError("unknown problem section", *_where(section), head or "(")
    if domain_name is None:
        raise PDDLSyntaxError("missing (:domain ...)", *_where(root), "define")
    return Problem(
        name=name,
        domain_name=domain_name,
        objects=tuple(objects),
        init=frozenset(init),
        goal=tuple(goal),
        metric=metric,
        total_cost=total_cost,
    )


# --------------------------------------------------------------------------
# emission


def format_number(value) -> str:
    """Exact decimal text for a rational; rejects non-terminating expansions."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        raise ValueError(f"{value} has no finite decimal expansion")
    digits = max(twos, fives)
    scaled = value * 10 ** digits
    sign = "-" if scaled < 0 else ""
    whole = abs(scaled.numerator)
    s = str(whole).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}".rstrip("0").rstrip(".")


def _typed_text(items: Sequence[tuple[str, str]]) -> str:
    """Group consecutive same-typed names: ``a b - t c - u``."""
    parts: list[str] = []
    i = 0
    while i < len(items):
        t = items[i][1]
        j = i
        while j < len(items) and items[j][1] == t:
            j += 1
        parts.extend(n for n, _ in items[i:j])
        parts.extend(["-", t])
        i = j
    return " ".join(parts)


def _sorted_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms, key=str)


def emit_domain(domain: Domain) -> str:
    lines = [f"(define (domain {domain.name})"]
    if domain.requirements:
        lines.append(f"  (:requirements {' '.join(domain.requirements)})")
    if domain.types:
        lines.append("  (:types")
        for name, parent in domain.types:
            lines.append(f"    {name} - {parent}")
        lines.append("  )")
    if domain.predicates:
        lines.append("  (:predicates")
        for p in domain.predicates:
            if p.parameters:
                lines.append(f"    ({p.name} {_typed_text(p.parameters)})")
            else:
                lines.append(f"    ({p.name})")
        lines.append("  )")
    if domain.uses_costs:
        lines.append("  (:functions (total-cost) - number)")
    for a in domain.actions:
        lines.extend(_emit_action(a, domain))
    lines.append(")")
    return "\n".join(lines) + "\n"


def _emit_action(a: ActionSchema, domain: Domain) -> list[str]:
    params = f"({_typed_text(a.parameters)})" if a.parameters else "()"
    pre = " ".join(str(x) for x in a.precondition)
    effects = [str(x) for x in _sorted_atoms(a.add)]
    effects += [f"(not {x})" for x in _sorted_atoms(a.delete)]
    cost_eff = f"(increase (total-cost) {format_number(a.cost)})" if domain.uses_costs else None
    if domain.durative:
        cond = " ".join(f"(at start {x})" for x in a.precondition)
        eff = [f"(at end {e})" for e in effects]
        if cost_eff:
            eff.append(f"(at end {cost_eff})")
        return [
            f"  (:durative-action {a.name}",
            f"    :parameters {params}",
            f"    :duration (= ?duration {format_number(a.duration)})",
            f"    :condition (and{' ' + cond if cond else ''})",
            f"    :effect (and{' ' + ' '.join(eff) if eff else ''}))",
        ]
    if cost_eff:
        effects.append(cost_eff)
    return [
        f"  (:action {a.name}",
        f"    :parameters {params}",
        f"    :precondition (and{' ' + pre if pre else ''})",
        f"    :effect (and{' ' + ' '.join(effects) if effects else ''}))",
    ]


def emit_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})", f"  (:domain {problem.domain_name})"]
    if problem.objects:
        lines.append("  (:objects")
        i = 0
        objs = problem.objects
        while i < len(objs):
            j = i
            while j < len(objs) and objs[j][1] == objs[i][1]:
                j += 1
            lines.append(f"    {_typed_text(objs[i:j])}")
            i = j
        lines.append("  )")
    lines.append("  (:init")
    for atom in _sorted_atoms(problem.init):
        lines.append(f"    {atom}")
    if problem.total_cost is not None:
        lines.append(f"    (= (total-cost) {format_number(problem.total_cost)})")
    lines.append("  )")
    lines.append(f"  (:goal (and{''.join(' ' + str(g) for g in problem.goal)}))")
    if problem.metric == "minimize-total-cost":
        lines.append("  (:metric minimize (total-cost))")
    elif problem.metric == "minimize-makespan":
        lines.append("  (:metric minimize (total-time))")
    lines.append(")")
    return "\n".join(lines) + "\n"
