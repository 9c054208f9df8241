import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import run_sim
from stratplan.engine import EngineConfig, RoundEngine, initial_world, sim_roots
from stratplan.netadmin import DomainConfig
from stratplan.world import (CorruptSnapshot, Hostset, InvariantViolation, VersionMismatch, check_world,
                             restore, snapshot, validate_world)


def fresh():
    return initial_world(DomainConfig(), sim_roots(3, 4))


def test_fresh_state_round_trips():
    w = fresh()
    assert restore(snapshot(w)) == w
    assert validate_world(w) == []


def test_mid_investigation_round_trip():
    config = EngineConfig(seed=5)
    engine = RoundEngine(config, initial_world(config.domain, sim_roots(20, 8)))
    while len(engine.world.hostsets) < 50:
        engine.run_round()
    w = engine.world
    assert restore(snapshot(w)) == w
    assert snapshot(restore(snapshot(w))) == snapshot(w)


def test_truncated_snapshot():
    text = snapshot(fresh())
    with pytest.raises(CorruptSnapshot):
        restore(text[: len(text) // 2])


def test_wrong_version():
    data = json.loads(snapshot(fresh()))
    data["format"] = "worldstate-v0"
    with pytest.raises(VersionMismatch):
        restore(json.dumps(data))


def test_missing_field_is_corrupt():
    data = json.loads(snapshot(fresh()))
    del data["hostsets"]
    with pytest.raises(CorruptSnapshot):
        restore(json.dumps(data))


def _split(w, parent, parts):
    for i, part in enumerate(parts, 1):
        name = f"{parent}-{i}"
        w.add_object(name, "hostset")
        w.hostsets[name] = Hostset(members=tuple(part), parent=parent, level=w.hostsets[parent].level + 1)
        w.hostsets[parent].children.append(name)


def test_validator_catches_overlap_and_escape():
    w = fresh()
    root = w.roots()[0]
    m = w.hostsets[root].members
    _split(w, root, [m[:2], m[1:3]])
    assert any("overlap" in p for p in validate_world(w))
    w2 = fresh()
    _split(w2, root, [("intruder",)])
    assert any("outside" in p for p in validate_world(w2))
    with pytest.raises(InvariantViolation):
        check_world(w2)


def test_validator_catches_active_under_resolved():
    w = fresh()
    root = w.roots()[0]
    m = w.hostsets[root].members
    _split(w, root, [m[:2]])
    w.hostsets[root].status = "discarded"
    w.hostsets[root].resolved_round = 3
    assert any("descendant" in p for p in validate_world(w))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_random_partitions_keep_invariants(data):
    w = initial_world(DomainConfig(), sim_roots(2, 10))
    for _ in range(data.draw(st.integers(1, 8))):
        leaves = [h for h in w.frontier() if len(w.hostsets[h].members) >= 1]
        if not leaves:
            break
        h = data.draw(st.sampled_from(leaves))
        members = list(w.hostsets[h].members)
        labels = data.draw(st.lists(st.integers(0, 3), min_size=len(members), max_size=len(members)))
        parts = [[m for m, lab in zip(members, labels) if lab == k] for k in range(4)]
        _split(w, h, [p for p in parts if p])
    assert validate_world(w) == []
    assert restore(snapshot(w)) == w


def test_invariants_hold_each_round():
    engine, log = run_sim(seed=3, n_roots=4, hosts_per_root=6, check_invariants=True)
    assert log.records[-1]["terminated"]
    assert validate_world(engine.world) == []
    for h, info in engine.world.hostsets.items():
        assert info.status in ("flagged", "discarded") or info.children
