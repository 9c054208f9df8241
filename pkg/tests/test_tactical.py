import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import min_flow_size
from stratplan.library import SOURCE_TAGS, default_library, default_mapping
from stratplan.netadmin import generate_domain
from stratplan.tactical import (Component, DeploymentRegistry, DuplicateDeployment, InvalidTransition,
                                UnknownDeployment, UnmappedAction, Unsatisfiable, action_to_goal_tags,
                                compose, dump_library, flow_problems, load_library)

LIB = default_library()
MAP = default_mapping()


def comp(cid, inputs, outputs, platform="stream"):
    return Component(cid, platform, frozenset(inputs.split()), frozenset(outputs.split()))


def test_default_library_size():
    assert len(LIB) == 65
    assert sum(c.platform == "stream" for c in LIB) == 49
    assert load_library(dump_library(LIB)) == LIB


def test_mapping_lookups():
    tags, params = action_to_goal_tags(("pop-to-admin", "h7"), MAP)
    assert tags == {"report", "admin-notify"} and params == {"hostset": "h7"}
    tags, params = action_to_goal_tags(("sense-refine-http", "h3"), MAP)
    assert tags == {"http-traffic", "model-compare", "split"} and params["hostset"] == "h3"
    with pytest.raises(UnmappedAction):
        action_to_goal_tags(("no-such-action", "h1"), MAP)


def test_every_default_action_composes():
    for schema in generate_domain().actions:
        tags, _ = action_to_goal_tags((schema.name,), MAP)
        flow = compose(tags, LIB, SOURCE_TAGS)
        assert flow_problems(flow, LIB, tags) == []
        # a component producing none of the needed tags can be dropped from any
        # feasible subset, so enumerating the rest is still exhaustive
        relevant = [c for c in LIB if c.output_tags & _needed(tags)]
        assert flow.size == min_flow_size(tags, relevant, SOURCE_TAGS)


def _needed(goal):
    rel = set(goal)
    changed = True
    while changed:
        changed = False
        for c in LIB:
            if c.output_tags & rel and not c.input_tags <= rel:
                rel |= c.input_tags
                changed = True
    return rel


def test_single_component_flow():
    lib = [comp("a", "src", "goal")]
    flow = compose({"goal"}, lib, {"src"})
    assert flow.component_ids() == ("a",)


def test_two_stage_pipeline():
    lib = [comp("parser", "raw", "records"), comp("agg", "records", "summary"), comp("noise", "raw", "junk")]
    flow = compose({"summary"}, lib, {"raw"})
    assert flow.component_ids() == ("parser", "agg")
    assert min_flow_size({"summary"}, lib, {"raw"}) == 2
    assert flow.edges == ((-1, 0, frozenset({"raw"})), (0, 1, frozenset({"records"})))


def test_unsatisfiable_goal():
    with pytest.raises(Unsatisfiable):
        compose({"nowhere"}, [comp("a", "src", "goal")], {"src"})


def test_ties_break_lexicographically():
    lib = [comp("zeta", "src", "goal"), comp("alpha", "src", "goal")]
    assert compose({"goal"}, lib, {"src"}).component_ids() == ("alpha",)


def test_parameters_are_bound():
    lib = [Component("a", "batch", frozenset({"src"}), frozenset({"goal"}), 1, (("hostset", "hostset"),))]
    flow = compose({"goal"}, lib, {"src"}, {"hostset": "h9"})
    assert flow.nodes[0].parameters == (("hostset", "h9"),)


def test_registry_lifecycle():
    reg = DeploymentRegistry()
    flow = compose({"goal"}, [comp("a", "src", "goal")], {"src"})
    d = reg.deploy(flow, ("x", "h1"))
    with pytest.raises(DuplicateDeployment):
        reg.deploy(flow, ("x", "h1"))
    reg.cancel(d)
    assert reg.deployments[d].state == "canceled"
    with pytest.raises(InvalidTransition):
        reg.complete(d)
    with pytest.raises(UnknownDeployment):
        reg.cancel("dep-999999")
    d2 = reg.deploy(flow, ("x", "h1"))
    reg.complete(d2)
    assert reg.count("completed") == 1 and reg.problems() == []


TAGS = [f"t{i}" for i in range(8)]


@st.composite
def libraries(draw):
    n = draw(st.integers(1, 12))
    lib = []
    for i in range(n):
        ins = draw(st.sets(st.sampled_from(TAGS), max_size=2))
        outs = draw(st.sets(st.sampled_from(TAGS), min_size=1, max_size=2))
        lib.append(Component(f"c{i:02d}", "stream", frozenset(ins), frozenset(outs)))
    goal = draw(st.sets(st.sampled_from(TAGS), min_size=1, max_size=3))
    sources = draw(st.sets(st.sampled_from(TAGS[:3]), max_size=2))
    return lib, goal, sources


@settings(max_examples=100, deadline=None)
@given(libraries())
def test_compose_is_minimal_and_valid(case):
    lib, goal, sources = case
    best = min_flow_size(goal, lib, sources)
    try:
        flow = compose(goal, lib, sources)
    except Unsatisfiable:
        assert best is None
        return
    assert flow.size == best
    assert flow_problems(flow, lib, goal) == []
    assert compose(goal, list(reversed(lib)), sources) == flow


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_registry_fuzz(seed):
    rng = random.Random(seed)
    reg = DeploymentRegistry()
    flow = compose({"goal"}, [comp("a", "src", "goal")], {"src"})
    instances = [("act", f"h{i}") for i in range(5)]
    for _ in range(300):
        op = rng.choice(("deploy", "cancel", "complete"))
        try:
            if op == "deploy":
                reg.deploy(flow, rng.choice(instances))
            else:
                ids = list(reg.deployments) or ["dep-000000"]
                getattr(reg, op)(rng.choice(ids))
        except (DuplicateDeployment, InvalidTransition, UnknownDeployment):
            pass
        assert reg.problems() == []
