import pytest
from hypothesis import given, settings, strategies as st

from oracles import dfs_longest_path_nodes
from stratplan.errors import ConfigError
from stratplan.grounding import ground
from stratplan.netadmin import (POP, PROTOCOL_SENSOR, TYPES, DomainConfig, causal_graph, generate_domain,
                                generate_problem, sensing_manifest)
from stratplan.pddl import Atom, emit_problem
from stratplan.planner import plan_metric, validate_plan


def test_default_shape():
    d = generate_domain()
    assert len(d.actions) == 22
    assert sum(a.sensing for a in d.actions) == 4
    assert len(TYPES) == 8
    assert {"hostset", "protocol", "distancefunction"} <= set(TYPES)
    preds = {p.name for p in d.predicates}
    assert {"extracted-blacklist", "obtained-from", "checked-global-frequent-hosts"} <= preds


def test_single_protocol_shape():
    assert len(generate_domain(DomainConfig(protocols=["http"])).actions) == 14


def test_causal_graph_split_and_merge():
    g = causal_graph(generate_domain())
    assert g.out_degree(PROTOCOL_SENSOR) == 3
    assert g.in_degree(POP) == 3


def test_causal_graph_trivial_cases():
    from stratplan.pddl import parse_domain
    d = parse_domain("""(define (domain c) (:predicates (p) (q))
      (:action a :parameters () :effect (p))
      (:action b :parameters () :precondition (p) :effect (q))
      (:action z :parameters () :precondition (q) :effect (and)))""")
    g = causal_graph(d)
    assert ("a", "b", "(p)") in g.edges
    assert g.out_degree("z") == 0


def _acyclic_edges(g):
    return [e for e in g.edges if e[0] != e[1]]


def test_causal_graph_longest_path():
    g = causal_graph(generate_domain())
    assert dfs_longest_path_nodes(g.nodes, _acyclic_edges(g)) == 8 + 1 + 4 + 1


def test_variants_differ_only_in_annotations():
    m = generate_domain(variant="metric")
    t = generate_domain(variant="temporal")
    assert [a.name for a in m.actions] == [a.name for a in t.actions]
    for a, b in zip(m.actions, t.actions):
        assert (a.parameters, a.precondition, a.add, a.delete) == (b.parameters, b.precondition, b.add, b.delete)


def test_manifest_keys_match_sensing_schemas():
    config = DomainConfig()
    d = generate_domain(config)
    sensing = {a.name for a in d.actions if a.sensing}
    prefixed = {a.name for a in d.actions if a.name.startswith("sense-")}
    assert set(sensing_manifest(config).entries) == sensing == prefixed


def test_problem_basics():
    p = generate_problem(DomainConfig(), 1, 1, 0)
    assert p.goal == (Atom("investigated", ("h001",)),)
    assert emit_problem(generate_problem(DomainConfig(), 7, 3, 9)) == emit_problem(generate_problem(DomainConfig(), 7, 3, 9))


@pytest.mark.parametrize("bad", [
    dict(protocols=[]), dict(protocols=["http", "http"]), dict(setup_chain_length=0), dict(branch_length=1),
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        generate_domain(DomainConfig(**bad))


def test_goal_count_bounds():
    with pytest.raises(ConfigError):
        generate_problem(DomainConfig(), 2, 3, 0)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["http", "tcp", "smtp", "dns"]), min_size=1, max_size=4, unique=True),
       st.integers(1, 9), st.integers(2, 5), st.integers(1, 3), st.integers(0, 1000))
def test_plans_end_in_pop_to_admin_per_goal(protocols, setup, branch, n, seed):
    config = DomainConfig(protocols=protocols, setup_chain_length=setup, branch_length=branch)
    d = generate_domain(config)
    assert len(d.actions) == setup + 1 + len(protocols) * branch + 1
    t = ground(d, generate_problem(config, n, n, seed))
    p = plan_metric(t)
    validate_plan(p, t)
    pops = {t.actions[i].args[0] for i in p.actions if t.actions[i].name == POP}
    assert len(pops) == n
    g = causal_graph(d)
    assert g.out_degree(PROTOCOL_SENSOR) == len(protocols)
    assert g.in_degree(POP) == len(protocols)
