from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from stratplan.netadmin import DomainConfig, generate_domain, generate_problem
from stratplan.pddl import (Atom, PDDLSyntaxError, PDDLTypeError, UnknownObject, UnknownPredicate,
                            UnsupportedFeature, emit_domain, emit_problem, format_number,
                            parse_domain, parse_problem)

MINIMAL = """
(define (domain tiny)
  (:requirements :strips)
  (:predicates (done))
  (:action finish :parameters () :precondition (and) :effect (done)))
"""

TYPED = """
(define (domain Typed)
  (:requirements :strips :typing :action-costs)
  (:types hostset protocol - object)
  (:predicates (seen ?s - hostset) (link ?a ?b - hostset) (uses ?s - hostset ?p - protocol))
  (:functions (total-cost) - number)
  (:action LOOK
    :parameters (?s - hostset ?p - protocol)
    :precondition (and (uses ?s ?p))
    :effect (and (seen ?s) (increase (total-cost) 2.5))))
"""


def test_minimal_domain():
    d = parse_domain(MINIMAL)
    assert d.name == "tiny"
    assert len(d.actions) == 1
    assert d.types == ()
    assert d.actions[0].add == frozenset({Atom("done")})


def test_case_is_canonicalized():
    d = parse_domain(TYPED)
    assert d.name == "typed"
    assert d.actions[0].name == "look"
    assert d.actions[0].cost == Fraction(5, 2)


def test_unbalanced_paren_reports_line():
    text = "\n".join([
        "(define (domain broken)",
        "  (:requirements :strips)",
        "  (:predicates (p))",
        "  (:action a",
        "    :parameters ()",
        "    :precondition (and)",
        "    :effect (and (p))",
    ])
    with pytest.raises(PDDLSyntaxError) as info:
        parse_domain(text)
    assert info.value.line in (1, 4)
    text7 = "\n".join(["(define (domain x)", "(:requirements :strips)", "(:predicates (p))",
                       "(:action a", ":parameters ()", ":effect (p)))", "  (extra"])
    with pytest.raises(PDDLSyntaxError) as info:
        parse_domain(text7)
    assert info.value.line == 7


def test_stray_close_paren_location():
    with pytest.raises(PDDLSyntaxError) as info:
        parse_domain("(define (domain x))\n  )")
    assert (info.value.line, info.value.column) == (2, 3)
    assert info.value.token == ")"


@pytest.mark.parametrize("effect", ["(when (p) (q))", "(forall (?x) (p))"])
def test_unsupported_effects(effect):
    text = f"(define (domain x) (:predicates (p) (q)) (:action a :parameters () :effect {effect}))"
    with pytest.raises(UnsupportedFeature):
        parse_domain(text)


@pytest.mark.parametrize("pre", ["(or (p) (q))", "(not (p))", "(exists (?x) (p))"])
def test_unsupported_preconditions(pre):
    text = f"(define (domain x) (:predicates (p) (q)) (:action a :parameters () :precondition {pre} :effect (q)))"
    with pytest.raises(UnsupportedFeature):
        parse_domain(text)


def test_unsupported_requirement():
    with pytest.raises(UnsupportedFeature):
        parse_domain("(define (domain x) (:requirements :adl))")


def test_arity_mismatch_is_type_error():
    text = "(define (domain x) (:predicates (p ?a)) (:action a :parameters (?v) :effect (p ?v ?v)))"
    with pytest.raises(PDDLTypeError):
        parse_domain(text)


def test_undeclared_variable_is_type_error():
    text = "(define (domain x) (:predicates (p ?a)) (:action a :parameters () :effect (p ?v)))"
    with pytest.raises(PDDLTypeError):
        parse_domain(text)


def test_wrong_object_type_in_problem():
    d = parse_domain(TYPED)
    text = "(define (problem q) (:domain typed) (:objects a - hostset t - protocol) (:init (uses t a)) (:goal (and)))"
    with pytest.raises(PDDLTypeError):
        parse_problem(text, d)


def test_problem_with_empty_goal_is_satisfied():
    d = parse_domain(TYPED)
    p = parse_problem("(define (problem q) (:domain typed) (:objects h1 - hostset) (:init) (:goal (and)))", d)
    assert p.goal == ()
    assert set(p.goal) <= p.init
    assert parse_problem(emit_problem(p), d) == p


def test_unknown_predicate_and_object():
    d = parse_domain(TYPED)
    with pytest.raises(UnknownPredicate):
        parse_problem("(define (problem q) (:domain typed) (:objects h - hostset) (:init (bogus h)) (:goal (and)))", d)
    with pytest.raises(UnknownObject):
        parse_problem("(define (problem q) (:domain typed) (:objects h - hostset) (:init (seen g)) (:goal (and)))", d)


def test_durative_action_folds_into_schema():
    text = """
    (define (domain t) (:requirements :strips :durative-actions)
      (:predicates (a) (b))
      (:durative-action go :parameters () :duration (= ?duration 7)
        :condition (and (at start (a)))
        :effect (and (at end (b)) (at end (not (a))))))"""
    d = parse_domain(text)
    act = d.actions[0]
    assert act.duration == 7
    assert act.precondition == (Atom("a"),)
    assert act.add == {Atom("b")} and act.delete == {Atom("a")}
    assert parse_domain(emit_domain(d)) == d


def test_over_all_is_unsupported():
    text = """(define (domain t) (:requirements :durative-actions) (:predicates (a))
      (:durative-action go :parameters () :duration (= ?duration 1)
        :condition (over all (a)) :effect (at end (a))))"""
    with pytest.raises(UnsupportedFeature):
        parse_domain(text)


def test_generated_domain_has_22_schemas():
    d = parse_domain(emit_domain(generate_domain()))
    assert len(d.actions) == 22


def test_generated_problem_objects():
    config = DomainConfig()
    p = generate_problem(config, n_hostsets=3, n_goals=2, seed=4)
    d = generate_domain(config)
    parsed = parse_problem(emit_problem(p), d)
    assert len(parsed.objects_of(d, "hostset")) == 3
    assert parsed.objects_of(d, "protocol") == ["http", "tcp", "smtp"]
    assert parsed.objects_of(d, "distancefunction") == ["zscore-distance"]


def test_emission_is_deterministic():
    a = generate_domain(DomainConfig())
    b = generate_domain(DomainConfig())
    assert emit_domain(a) == emit_domain(b)


@pytest.mark.parametrize("value,text", [(Fraction(3), "3"), (Fraction(1, 4), "0.25"), (Fraction(5, 2), "2.5")])
def test_format_number(value, text):
    assert format_number(value) == text


def test_format_number_rejects_repeating():
    with pytest.raises(ValueError):
        format_number(Fraction(1, 3))


@st.composite
def configs(draw):
    protocols = draw(st.lists(st.sampled_from(["http", "tcp", "smtp", "dns", "ftp"]), min_size=1,
                              max_size=4, unique=True))
    return DomainConfig(
        protocols=protocols,
        setup_chain_length=draw(st.integers(1, 11)),
        branch_length=draw(st.integers(2, 6)),
        costs={"branch": Fraction(draw(st.integers(0, 40)), 4)},
    )


@settings(max_examples=40, deadline=None)
@given(configs(), st.sampled_from(["metric", "temporal"]), st.integers(1, 6), st.integers(0, 2**32))
def test_round_trip_generated(config, variant, n, seed):
    d = generate_domain(config, variant)
    text = emit_domain(d)
    again = parse_domain(text)
    assert again == d
    assert emit_domain(again) == text
    p = generate_problem(config, n, max(1, n // 2), seed, variant)
    ptext = emit_problem(p)
    assert parse_problem(ptext, d) == p
    assert emit_problem(parse_problem(ptext, d)) == ptext


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="()abc?- \n:", max_size=60))
def test_parser_never_crashes_unexpectedly(text):
    from stratplan.pddl import PDDLError
    try:
        d = parse_domain(text)
    except PDDLError:
        return
    for a in d.actions:
        assert not (a.add & a.delete)
