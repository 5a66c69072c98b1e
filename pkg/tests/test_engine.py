from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replisim.engine import (
    ORPHAN_FLAG,
    STALE_COPY,
    ConsistencyError,
    Locus,
    audit_total,
    check_consistency,
    make_policy,
    route,
    run,
)
from replisim.model import ConfigError, ReplisimError, Request, SystemConfig
from replisim.orad import ENTERED, ObjectState, OradPolicy
from replisim.workloads import WorkloadSpec, gen_fixed, fixture_sequences

CFG = SystemConfig.default()


def test_empty_sequence_costs_nothing():
    result = run(CFG, "orad", [])
    assert result.total_cost == 0 and result.steps == [] and result.transitions == []


def test_single_saving_read():
    result = run(CFG, "orad", [Request.read("p3", "o2")])
    assert result.total_cost == 17
    assert [(t.kind, t.node, t.object) for t in result.transitions] == [(ENTERED, "p3", "o2")]
    assert result.steps[0].locus is Locus.SERVER


def test_unknown_policy():
    with pytest.raises(ConfigError):
        make_policy("lru", CFG)


# -- routing --------------------------------------------------------------------


def test_route_cases():
    state = ObjectState.initial("o1", CFG)
    state.data_list.add("p1")
    state.temp_holders.add("p2")
    assert route(Request.read("p1", "o1"), state) is Locus.LOCAL_DATA
    assert route(Request.write("p1", "o1"), state) is Locus.LOCAL_DATA
    assert route(Request.read("p2", "o1"), state) is Locus.LOCAL_TEMP
    assert route(Request.write("p2", "o1"), state) is Locus.SERVER
    assert route(Request.read("p3", "o1"), state) is Locus.SERVER
    assert route(Request.read("s1", "o1"), state) is Locus.LOCAL_DATA


# -- consistency checking -------------------------------------------------------


def test_fresh_state_is_consistent():
    assert check_consistency(OradPolicy(CFG).states) == []


def test_flag_without_copy_is_reported():
    policy = OradPolicy(CFG)
    state = policy.states["o1"]
    state.set_flag("p5", 1)
    kinds = {v.kind for v in check_consistency(policy.states)}
    assert ORPHAN_FLAG in kinds


def test_skipped_invalidation_is_caught(monkeypatch):
    # p1 reads, then one remote write pushes it out to a temporary copy;
    # the next write must invalidate it, so hide the flag from the server.
    seq = [Request.read("p1", "o1"), Request.write("p2", "o1")]
    policy = OradPolicy(CFG)
    run(CFG, policy, seq)
    assert policy.states["o1"].temp_holders == {"p1"}
    monkeypatch.setattr(ObjectState, "raised_flags", property(lambda self: []))
    with pytest.raises(ConsistencyError) as info:
        run(CFG, policy, [Request.write("p2", "o1")])
    assert info.value.violations[0].kind == STALE_COPY
    assert info.value.violations[0].index == 0


def test_unknown_node_names_position():
    seq = [Request.read("p1", "o1"), Request.read("p8", "o1")]
    with pytest.raises(ReplisimError, match="position 1"):
        run(CFG, "orad", seq)


# -- determinism and accounting -------------------------------------------------


@pytest.mark.parametrize("policy", ["orad", "adrw", "sa"])
def test_runs_are_deterministic(policy):
    seq = gen_fixed(WorkloadSpec.for_config(CFG, "fixed_size", 500, 0.5, 3))
    a, b = run(CFG, policy, seq), run(CFG, policy, seq)
    assert a.total_cost == b.total_cost
    assert [s.charges for s in a.steps] == [s.charges for s in b.steps]


def test_running_total_is_prefix_sum():
    seq = fixture_sequences()["A"]
    result = run(CFG, "orad", seq)
    acc = 0
    for step in result.steps:
        acc += sum(u for _, u in step.charges)
        assert step.running_total == acc
    assert acc == result.total_cost == result.ledger.running_total


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 2**32),
    st.floats(0.0, 1.0),
    st.sampled_from(["orad", "adrw", "sa"]),
    st.booleans(),
    st.integers(1, 12),
)
def test_audit_matches_handler_charges(seed, p, policy, replicate_all, k):
    cfg = SystemConfig.default(replicate_all=replicate_all, window_capacity=k)
    seq = gen_fixed(WorkloadSpec.for_config(cfg, "fixed_size", 200, p, seed))
    result = run(cfg, policy, seq)
    assert audit_total(cfg, policy, seq, result.transitions) == result.total_cost


def test_invalidate_all_clears_outstanding_flags():
    seq = gen_fixed(WorkloadSpec.for_config(CFG, "fixed_size", 1500, 0.5, 8))
    policy = OradPolicy(CFG)
    result = run(CFG, policy, seq)
    assert result.flag_toggles == 2 * result.inv_sent + result.outstanding_flags
    policy.invalidate_all()
    assert result.outstanding_flags == 0
    assert result.flag_toggles == 2 * result.inv_sent
    assert check_consistency(policy.states) == []
