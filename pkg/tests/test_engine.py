import pytest
from hypothesis import given, settings, strategies as st

from conftest import run_sim
from oracles import diff_oracle
from stratplan.engine import (CorruptLog, EngineConfig, InvestigationLog, RoundEngine, RoundLimitExceeded,
                              diff_plans, initial_world, parse_label, sim_roots)
from stratplan.netadmin import DomainConfig
from stratplan.world import snapshot, validate_world


def instances(record):
    return [(a["name"], *a["args"]) for a in record["plan"]["actions"]]


def outstanding(record):
    return instances(record)[len(record["executed"]):]


def test_no_goals_terminates_immediately():
    config = EngineConfig()
    world = initial_world(config.domain, sim_roots(1, 3))
    before = snapshot(world)
    engine = RoundEngine(config, world, goals=[])
    rec = engine.run_round()
    assert rec["plan_size"] == 0 and rec["diff_size"] == 0 and rec["terminated"]
    assert snapshot(engine.world) == before


def test_first_round_adds_whole_plan():
    config = EngineConfig(seed=1)
    engine = RoundEngine(config, initial_world(config.domain, sim_roots(2, 4)))
    rec = engine.run_round()
    assert rec["diff"]["canceled"] == []
    assert sorted(rec["diff"]["added"]) == sorted({f"({' '.join(i)})" for i in instances(rec)})


def test_diff_examples():
    a = [("x", "h1"), ("y", "h1")]
    d = diff_plans(a, list(reversed(a)))
    assert d.size == 0 and len(d.retained) == 2
    assert diff_plans([], a).added == frozenset(a)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcdefgh"), st.sampled_from(["h1", "h2", "h3"])), max_size=120),
       st.lists(st.tuples(st.sampled_from("abcdefgh"), st.sampled_from(["h1", "h2", "h3"])), max_size=120))
def test_diff_matches_set_oracle(prev, cur):
    d = diff_plans(prev, cur)
    canceled, added = diff_oracle(prev, cur)
    assert set(d.canceled) == canceled and set(d.added) == added


def test_logged_diffs_match_oracle(sim_seed7):
    _, log = sim_seed7
    previous = []
    for rec in log.records:
        canceled, added = diff_oracle(previous, instances(rec))
        assert {parse_label(x) for x in rec["diff"]["canceled"]} == canceled
        assert {parse_label(x) for x in rec["diff"]["added"]} == added
        previous = outstanding(rec)


def test_executed_prefix_rule(sim_seed7):
    engine, log = sim_seed7
    for rec in log.records:
        names = [parse_label(x)[0] for x in rec["executed"]]
        sensing = [i for i, n in enumerate(names) if n in engine.sensing]
        assert len(sensing) <= 1
        if sensing:
            assert sensing[0] == len(names) - 1
            assert rec["sensing_action"] == rec["executed"][-1]
        assert rec["executed"] == [f"({' '.join(i)})" for i in instances(rec)[:len(names)]]


def test_deployments_recount(sim_seed7):
    engine, log = sim_seed7
    assert engine.registry.count() == sum(len(r["executed"]) for r in log.records)
    assert engine.registry.count("running") == 0
    assert engine.registry.problems() == []


def test_monotone_resolution(sim_seed7):
    _, log = sim_seed7
    resolved = set()
    for rec in log.records:
        # hostsets resolved in earlier rounds never come back into a plan
        touched = {arg for inst in instances(rec) for arg in inst[1:]}
        assert not touched & resolved
        for ev in rec["events"]:
            if ev["type"] == "resolved":
                assert ev["hostset"] not in resolved
                resolved.add(ev["hostset"])


def test_single_hostset_replays():
    a = run_sim(42, 1, 8)[1]
    b = run_sim(42, 1, 8)[1]
    assert len(a) == len(b) and a.dumps() == b.dumps()


def test_empty_split_discards_without_pop():
    config = EngineConfig(domain=DomainConfig(protocol_inclusion=0.0), seed=3)
    engine = RoundEngine(config, initial_world(config.domain, sim_roots(1, 5)))
    log = engine.run()
    assert all("pop-to-admin" not in x for r in log.records for x in r["executed"])
    assert engine.world.hostsets["h001"].status == "discarded"


def test_round_limit_carries_partial_log():
    config = EngineConfig(rounds_max=2)
    engine = RoundEngine(config, initial_world(config.domain, sim_roots(3, 8)))
    with pytest.raises(RoundLimitExceeded) as info:
        engine.run()
    assert len(info.value.log) == 2


@pytest.mark.parametrize("mode", ["optimal", "temporal"])
def test_other_modes_terminate(mode):
    engine, log = run_sim(2, 2, 4, mode=mode)
    assert log.records[-1]["terminated"]
    assert validate_world(engine.world) == []
    if mode == "temporal":
        assert "makespan" in log.records[0]["plan"]


def test_log_round_trip(sim_seed7):
    _, log = sim_seed7
    assert InvestigationLog.loads(log.dumps()).dumps() == log.dumps()


@pytest.mark.parametrize("text", ["{not json", '{"round": 1}', '{"round":2,"plan_size":0}\n{"round":1,"plan_size":0}'])
def test_corrupt_logs(text):
    with pytest.raises(CorruptLog):
        InvestigationLog.loads(text)


def test_wall_clock_timings_are_recorded():
    _, log = run_sim(1, 1, 3, wall_clock=True)
    assert all(r["timings"]["planning_ms"] >= 0 for r in log.records)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4), st.integers(1, 9))
def test_runs_preserve_invariants(seed, n_roots, hosts):
    engine, log = run_sim(seed, n_roots, hosts, check_invariants=True)
    assert log.records[-1]["terminated"]
    assert validate_world(engine.world) == []
