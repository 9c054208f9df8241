import pytest

from oracles import naive_ground_count
from stratplan.errors import CapacityExceeded
from stratplan.grounding import ground
from stratplan.netadmin import DomainConfig, generate_domain, generate_problem
from stratplan.pddl import parse_domain, parse_problem

DOMAIN = """
(define (domain g) (:requirements :strips :typing)
  (:types hostset)
  (:predicates (ready ?h - hostset) (allowed ?h - hostset) (done ?h - hostset))
  (:action check :parameters (?h - hostset) :precondition (and) :effect (done ?h))
  (:action gated :parameters (?h - hostset) :precondition (allowed ?h) :effect (done ?h)))
"""


def test_one_parameter_two_objects():
    d = parse_domain(DOMAIN)
    p = parse_problem("(define (problem q) (:domain g) (:objects a b - hostset) (:init) (:goal (and)))", d)
    t = ground(d, p)
    checks = [a for a in t.actions if a.name == "check"]
    assert [a.args for a in checks] == [("a",), ("b",)]


def test_static_precondition_prunes():
    d = parse_domain(DOMAIN)
    p = parse_problem("(define (problem q) (:domain g) (:objects a b - hostset) (:init) (:goal (and)))", d)
    assert not [a for a in ground(d, p).actions if a.name == "gated"]
    p2 = parse_problem("(define (problem q) (:domain g) (:objects a b - hostset) (:init (allowed b)) (:goal (and)))", d)
    assert [a.args for a in ground(d, p2).actions if a.name == "gated"] == [("b",)]


def test_capacity_ceiling():
    d = parse_domain(DOMAIN)
    p = parse_problem("(define (problem q) (:domain g) (:objects a b c - hostset) (:init) (:goal (and)))", d)
    with pytest.raises(CapacityExceeded):
        ground(d, p, max_actions=2)


@pytest.mark.parametrize("n", [1, 5])
def test_netadmin_count_matches_naive_enumeration(n):
    config = DomainConfig()
    d = generate_domain(config)
    p = generate_problem(config, n, n, 0)
    assert len(ground(d, p).actions) == naive_ground_count(d, p)


def test_ordering_is_schema_then_arguments():
    config = DomainConfig()
    d = generate_domain(config)
    t = ground(d, generate_problem(config, 4, 2, 1))
    order = {a.name: i for i, a in enumerate(d.actions)}
    keys = [(order[a.name], a.args) for a in t.actions]
    assert keys == sorted(keys)
    assert [a.id for a in t.actions] == list(range(len(t.actions)))
