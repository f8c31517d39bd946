import itertools

import pytest

from trustb.errors import AxiomViolation, GuardFailed, ScenarioError
from trustb.kernel import Env, check_function_kind, eval_pred_frame, powerset_elements
from trustb.models import BoundSpec, machine_setup, make_instantiation
from trustb.runtime import (
    State,
    enumerate_transitions,
    event_enabled,
    fire_event,
    guard_report,
    initial_state,
    invariant_report,
    param_bindings,
    reachable_states,
    replay,
    state_universe,
)
from trustb.values import EMPTY_SET, TRUE, Atom, PairV, SetV, mkatoms, mkset


def setup(level=0, bounds=BoundSpec(2, 2, 2), variant="base"):
    return machine_setup(level, bounds, variant)


# --- states ------------------------------------------------------


def test_state_equality_and_update():
    s1 = State({"x": Atom("a"), "y": EMPTY_SET})
    s2 = State({"y": EMPTY_SET, "x": Atom("a")})
    assert s1 == s2
    assert hash(s1) == hash(s2)
    s3 = s1.updated({"x": Atom("b")})
    assert s3 != s1
    assert s1.values["x"] == Atom("a")


def test_initial_state_all_empty():
    tm, inst, env = setup(2)
    init = initial_state(tm, env)
    assert set(init.values) == set(tm.var_order)
    assert all(v == EMPTY_SET for v in init.values.values())


# --- guards ------------------------------------------------------


def u(name):
    return Atom(name)


def grp(*names):
    return mkatoms(names)


def test_guard_report_evaluates_every_guard():
    tm, inst, env = setup(0)
    init = initial_state(tm, env)
    binding = {"i": u("u1"), "j": grp("v1"), "t": u("t1")}
    rep = guard_report(tm, "trust", init, binding, env)
    assert [lbl for lbl, _ok in rep.guards] == [f"grd{i}" for i in range(1, 7)]
    assert rep.failing == ["grd4"]  # nothing allocated yet; all others hold
    assert not rep.enabled


def test_guard_report_empty_group_fails_grd6_too():
    tm, inst, env = setup(0)
    init = initial_state(tm, env)
    rep = guard_report(tm, "trust", init, {"i": u("u1"), "j": EMPTY_SET, "t": u("t1")}, env)
    assert "grd6" in rep.failing
    assert "grd4" in rep.failing


def test_fire_event_checks_guards():
    tm, inst, env = setup(0)
    init = initial_state(tm, env)
    with pytest.raises(GuardFailed):
        fire_event(tm, "trust", init, {"i": u("u1"), "j": grp("v1"), "t": u("t1")}, env)


def test_fire_event_union_semantics():
    tm, inst, env = setup(0)
    at = mkset([PairV(grp("v1"), u("t1"))])
    pre = State({"agent_task": at, "trustor_trustee_task": EMPTY_SET})
    binding = {"i": u("u1"), "j": grp("v1"), "t": u("t1")}
    post = fire_event(tm, "trust", pre, binding, env)
    triple = PairV(u("u1"), PairV(grp("v1"), u("t1")))
    assert post.values["trustor_trustee_task"] == mkset([triple])
    assert post.values["agent_task"] == at
    # firing the same triple again is stuttering
    post2 = fire_event(tm, "trust", post, binding, env)
    assert post2 == post


def test_fire_event_reads_pre_state_simultaneously():
    # the updated variable's old value feeds the right-hand side exactly once
    tm, inst, env = setup(0)
    at = mkset([PairV(grp("v1"), u("t1")), PairV(grp("v2"), u("t2"))])
    t1 = PairV(u("u1"), PairV(grp("v1"), u("t1")))
    pre = State({"agent_task": at, "trustor_trustee_task": mkset([t1])})
    binding = {"i": u("u2"), "j": grp("v2"), "t": u("t2")}
    post = fire_event(tm, "trust", pre, binding, env)
    t2 = PairV(u("u2"), PairV(grp("v2"), u("t2")))
    assert post.values["trustor_trustee_task"] == mkset([t1, t2])


# --- parameter bindings ------------------------------------------------------


def test_param_bindings_cover_typed_space_in_order():
    tm, inst, env = setup(0)
    init = initial_state(tm, env)
    info = tm.event("trust")
    bindings = list(param_bindings(info, init, env))
    # i from trustors (2), j from pow(trustees) (4), t from tasks (2)
    assert len(bindings) == 2 * 4 * 2
    # deterministic order with the last parameter varying fastest
    ts = [b["t"] for b in bindings]
    assert ts[0] != ts[1]
    assert bindings == list(param_bindings(info, init, env))


def test_enumerate_transitions_from_seeded_state():
    tm, inst, env = setup(0)
    at = mkset([PairV(grp("v1"), u("t1"))])
    pre = State({"agent_task": at, "trustor_trustee_task": EMPTY_SET})
    trans = enumerate_transitions(tm, pre, env)
    # only j={v1}, t=t1 passes grd4; both trustors may fire
    assert len(trans) == 2
    assert {tr.binding_dict()["i"] for tr in trans} == {u("u1"), u("u2")}
    for tr in trans:
        assert tr.event == "trust"
        assert tr.post.values["trustor_trustee_task"] != EMPTY_SET


# --- the typed state universe ------------------------------------------------------


def universe_size(level, bounds, variant="base"):
    tm, inst, env = machine_setup(level, bounds, variant)
    return sum(1 for _ in state_universe(tm, env))


def test_universe_size_level0_oracle():
    # agent_task: pow(trustees) +-> TASKS has sum_k C(4,k) 2^k options;
    # trustor_trustee_task then has (k+1)^2 options given k allocated pairs
    expected = sum(
        len(list(itertools.combinations(range(4), k))) * (2**k) * (k + 1) ** 2
        for k in range(5)
    )
    assert expected == 1161
    assert universe_size(0, BoundSpec(2, 2, 2)) == 1161


def test_universe_size_level1_and_2():
    # knowledge multiplies by 2^(2*2); commitments by 2^|record|
    assert universe_size(1, BoundSpec(2, 2, 2)) == 1161 * 16
    assert universe_size(2, BoundSpec(2, 2, 2)) == 56_592
    assert universe_size(2, BoundSpec(2, 2, 1)) == 7_424
    assert universe_size(1, BoundSpec(2, 2, 1)) == 2_560
    assert universe_size(2, BoundSpec(1, 2, 1), "rel") == 1_024


def test_universe_states_satisfy_declared_typing():
    tm, inst, env = setup(0, BoundSpec(1, 2, 1))
    frame = dict(env.bindings)
    seen = set()
    for state in state_universe(tm, env):
        frame.update(state.values)
        assert eval_pred_frame(tm.invariant("inv1").pred, frame, env.powerset_bound)
        assert eval_pred_frame(tm.invariant("inv2").pred, frame, env.powerset_bound)
        key = state.key(tm.var_order)
        assert key not in seen
        seen.add(key)


def test_universe_dependent_domains():
    # every trust record value points at a currently allocated pair
    tm, inst, env = setup(0, BoundSpec(1, 1, 1))
    for state in state_universe(tm, env):
        at = state.values["agent_task"]
        ttt = state.values["trustor_trustee_task"]
        for pair in ttt.elements:
            assert pair.right in at.elements


def test_universe_deterministic_order():
    tm, inst, env = setup(0, BoundSpec(1, 2, 1))
    first = [s.key(tm.var_order) for s in state_universe(tm, env)]
    second = [s.key(tm.var_order) for s in state_universe(tm, env)]
    assert first == second


# --- reachability ------------------------------------------------------


def test_reachable_is_initial_state_only():
    # no event changes agent_task, knowledge or commitments, and trust
    # cannot fire while nothing is allocated
    for level in (0, 1, 2):
        tm, inst, env = setup(level, BoundSpec(2, 2, 1))
        reach = reachable_states(tm, env)
        assert reach == [initial_state(tm, env)]


def test_replay_reproduces_trace():
    tm, inst, env = setup(0)
    at = mkset([PairV(grp("v1"), u("t1"))])
    pre = State({"agent_task": at, "trustor_trustee_task": EMPTY_SET})
    binding = {"i": u("u1"), "j": grp("v1"), "t": u("t1")}
    post = fire_event(tm, "trust", pre, binding, env)
    trace = replay(tm, env, [("trust", binding)], start=pre)
    assert trace.final == post
    bad = {"i": u("u1"), "j": grp("v2"), "t": u("t1")}
    with pytest.raises(GuardFailed):
        replay(tm, env, [("trust", bad)], start=pre)


# --- instantiation ------------------------------------------------------


def test_instantiation_validate_accepts_disjoint():
    tm, inst, env = setup(0)
    inst.validate(tm.context)


def test_overlap_violates_partition():
    tm, inst, env = setup(0)
    bad = make_instantiation(("u1",), ("u1", "v1"), ("t1",))
    with pytest.raises(AxiomViolation):
        bad.validate(tm.context)


def test_overlap_fine_without_partition():
    tm, inst, env = machine_setup(0, BoundSpec(1, 2, 1), "nopart", overlap=True)
    assert Atom("u1") in env.bindings["trustees"].elements


def test_invariant_report_on_initial_state():
    tm, inst, env = setup(2, BoundSpec(1, 1, 1))
    report = invariant_report(tm, initial_state(tm, env), env)
    as_dict = dict(report)
    assert as_dict["inv1"] and as_dict["inv2"] and as_dict["inv3"]
    assert not as_dict["inv4"]  # the refined form demands trust from the start


def test_event_enabled_matches_guard_report():
    tm, inst, env = setup(1, BoundSpec(1, 1, 1))
    for state in state_universe(tm, env):
        info = tm.event("trust")
        for binding in param_bindings(info, state, env):
            rep = guard_report(tm, "trust", state, binding, env)
            assert rep.enabled == event_enabled(tm, "trust", state, binding, env)
