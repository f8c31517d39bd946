"""Proof obligations and their discharge by bounded enumeration.

Obligation kinds and naming:

* `event/label/INV`   the event preserves the invariant with that label;
  `INITIALISATION/label/INV` states establishment instead.
* `event/grdN/GRD`    the concrete event's guards imply the abstract
  guard grdN of the event it refines.
* `event/var/SIM`     the concrete event changes an abstract variable
  exactly as the abstract event it refines does.

Hypotheses.  For a preservation obligation the hypothesis is: the
instantiation's axioms, every invariant in the machine's resolved scope
EXCEPT the goal invariant itself, and the event's guards.  Assuming the
goal in its own pre-state is deliberately avoided: an invariant that is
monotone in the updated variables can never fail under that assumption,
and scopes whose invariants are jointly unsatisfiable at the chosen
bounds would make every obligation pass vacuously.  The establishment
form used here keeps each obligation falsifiable on exactly the states
where the remaining invariants hold.  Guard-strengthening and simulation
obligations keep the full invariant scope in their hypothesis.

Discharge enumerates all (state, binding) pairs at the chosen bounds in
canonical order: a verdict is `discharged` when the goal held in every
hypothesis-satisfying case, `failed` with the first counterexample
otherwise, and `vacuous` when no case satisfied the hypothesis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import NotSuperposition
from .kernel import Env, eval_expr_frame, eval_pred_frame
from .runtime import (
    State,
    domain_candidates,
    initial_state,
    param_bindings,
    reachable_states,
    state_universe,
)
from .syntax import (
    INIT_EVENT,
    Expr,
    Pred,
    free_idents_expr,
    free_idents_pred,
)
from .typecheck import EventInfo, TypedMachine

ALL_STATES = "all_invariant_states"
REACHABLE = "reachable_only"
STATE_SOURCES = (ALL_STATES, REACHABLE)

DISCHARGED = "discharged"
FAILED = "failed"
VACUOUS = "vacuous"


@dataclass(frozen=True)
class ProofObligation:
    name: str
    machine: str
    event: str
    kind: str  # "INV", "GRD" or "SIM"
    label: str  # invariant label, abstract guard label, or variable
    goal: Pred | None = None
    sim_expr: Expr | None = None  # abstract right-hand side for SIM
    note: str = ""


@dataclass
class Counterexample:
    """The first hypothesis-satisfying case on which a goal came out false."""

    state: State | None  # pre-state; None for an establishment obligation
    binding: tuple[tuple[str, "object"], ...]
    post: State | None
    expected: object | None = None  # SIM only: value the abstract action requires
    actual: object | None = None  # SIM only: value the concrete event produced

    def binding_dict(self) -> dict:
        return dict(self.binding)


@dataclass
class DischargeReport:
    po: ProofObligation
    verdict: str
    cases: int
    counterexample: Counterexample | None = None
    note: str = ""
    elapsed: float = 0.0


def _goal_note(goal: Pred, tm: TypedMachine) -> str:
    if not (free_idents_pred(goal) & set(tm.variables)):
        return "goal references no machine variables"
    return ""


def generate_pos(
    tm: TypedMachine,
    include_refinement: bool = False,
    exclude_labels: frozenset[str] = frozenset(),
) -> list[ProofObligation]:
    """All obligations for a machine, in a fixed order: per event in
    machine order, invariants in scope order, then guard strengthening,
    then simulation."""
    scope = [(lbl, inv) for lbl, inv, _o in tm.invariant_scope if lbl not in exclude_labels]
    pos: list[ProofObligation] = []
    for name, info in tm.events.items():
        for lbl, inv in scope:
            pos.append(
                ProofObligation(
                    name=f"{name}/{lbl}/INV",
                    machine=tm.name,
                    event=name,
                    kind="INV",
                    label=lbl,
                    goal=inv.pred,
                    note=_goal_note(inv.pred, tm),
                )
            )
        if include_refinement and info.abstract is not None and not info.ast.is_init:
            for g in info.abstract.guards:
                pos.append(
                    ProofObligation(
                        name=f"{name}/{g.label}/GRD",
                        machine=tm.name,
                        event=name,
                        kind="GRD",
                        label=g.label,
                        goal=g.pred,
                    )
                )
            for act in info.abstract.actions:
                pos.append(
                    ProofObligation(
                        name=f"{name}/{act.variable}/SIM",
                        machine=tm.name,
                        event=name,
                        kind="SIM",
                        label=act.variable,
                        sim_expr=act.expr,
                    )
                )
    return pos


def refinement_pos(tm: TypedMachine) -> list[ProofObligation]:
    return [po for po in generate_pos(tm, include_refinement=True) if po.kind != "INV"]


# --- the discharge engine ------------------------------------------------------


class _Working:
    __slots__ = ("po", "cases", "failed", "counterexample")

    def __init__(self, po: ProofObligation):
        self.po = po
        self.cases = 0
        self.failed = False
        self.counterexample: Counterexample | None = None


def _state_iter(tm: TypedMachine, env: Env, state_source: str) -> Iterator[State]:
    if state_source == ALL_STATES:
        return state_universe(tm, env)
    if state_source == REACHABLE:
        return iter(reachable_states(tm, env))
    raise ValueError(f"unknown state source {state_source!r}; use one of {STATE_SOURCES}")


def _static_bindings(info: EventInfo, tm: TypedMachine, env: Env) -> list[dict] | None:
    """Parameter bindings precomputed once if no domain mentions a variable."""
    vars_ = set(tm.variables)
    for dexpr in info.param_domains.values():
        if free_idents_expr(dexpr) & vars_:
            return None
    bound = env.powerset_bound
    frame = dict(env.bindings)
    params = info.ast.params
    out: list[dict] = []

    def walk(k: int, binding: dict) -> None:
        if k == len(params):
            out.append(dict(binding))
            return
        name = params[k]
        for v in domain_candidates(info.param_domains[name], frame, bound):
            frame[name] = v
            binding[name] = v
            walk(k + 1, binding)
        frame.pop(name, None)
        binding.pop(name, None)

    walk(0, {})
    return out


def discharge_all(
    tm: TypedMachine,
    env: Env,
    pos: Iterable[ProofObligation] | None = None,
    state_source: str = ALL_STATES,
    exclude_labels: frozenset[str] = frozenset(),
) -> list[DischargeReport]:
    """Discharge a batch of obligations in one pass over the state space.

    Per state the invariant scope is evaluated once; a preservation
    obligation's hypothesis then reduces to `the only false invariant, if
    any, is the goal itself` plus the event's guards.  Counterexamples
    are the first in enumeration order, and case counts are exact.
    """
    started = time.perf_counter()
    if pos is None:
        pos = generate_pos(tm, include_refinement=True, exclude_labels=exclude_labels)
    pos = list(pos)

    scope = [
        (lbl, inv.pred)
        for lbl, inv, _o in tm.invariant_scope
        if lbl not in exclude_labels
    ]
    bound = env.powerset_bound

    init_pos = [po for po in pos if po.event == INIT_EVENT]
    event_pos: dict[str, list[_Working]] = {}
    working: dict[str, _Working] = {}
    for po in pos:
        if po.event == INIT_EVENT:
            continue
        w = _Working(po)
        working[po.name] = w
        event_pos.setdefault(po.event, []).append(w)

    reports: list[DischargeReport] = []

    # Establishment: a single case from the initial state, axioms assumed.
    if init_pos:
        init = initial_state(tm, env)
        frame0 = dict(env.bindings)
        frame0.update(init.values)
        for po in init_pos:
            ok = eval_pred_frame(po.goal, frame0, bound)
            ce = None if ok else Counterexample(None, (), init)
            reports.append(
                DischargeReport(po, DISCHARGED if ok else FAILED, 1, ce, po.note)
            )

    if working:
        events = [
            (name, tm.events[name], event_pos[name])
            for name in tm.events
            if name in event_pos
        ]
        static = {name: _static_bindings(info, tm, env) for name, info, _w in events}
        frame = dict(env.bindings)
        for state in _state_iter(tm, env, state_source):
            frame.update(state.values)
            false_invs = [lbl for lbl, pred in scope if not eval_pred_frame(pred, frame, bound)]
            if len(false_invs) > 1:
                continue
            sole_false = false_invs[0] if false_invs else None
            for name, info, ws in events:
                # With one false invariant, the only obligation whose
                # hypothesis can hold is the one that excludes it: the
                # preservation obligation for that very label.
                if sole_false is None:
                    targets = ws
                else:
                    targets = [
                        w for w in ws if w.po.kind == "INV" and w.po.label == sole_false
                    ]
                if not targets:
                    continue
                bindings = static[name]
                if bindings is None:
                    bindings = param_bindings(info, state, env)
                guards = info.ast.guards
                actions = info.ast.actions
                for binding in bindings:
                    frame.update(binding)
                    enabled = True
                    for g in guards:
                        if not eval_pred_frame(g.pred, frame, bound):
                            enabled = False
                            break
                    if enabled:
                        post_frame = None
                        post_changes = None
                        for w in targets:
                            w.cases += 1
                            if w.failed:
                                continue
                            po = w.po
                            if po.kind == "GRD":
                                if eval_pred_frame(po.goal, frame, bound):
                                    continue
                                post_state = None
                            else:
                                if post_changes is None:
                                    post_changes = {
                                        a.variable: eval_expr_frame(a.expr, frame, bound)
                                        for a in actions
                                    }
                                    post_frame = dict(frame)
                                    post_frame.update(post_changes)
                                if po.kind == "INV":
                                    if eval_pred_frame(po.goal, post_frame, bound):
                                        continue
                                else:  # SIM
                                    expected = eval_expr_frame(po.sim_expr, frame, bound)
                                    actual = post_frame[po.label]
                                    if expected == actual:
                                        continue
                                post_state = State(
                                    {v: post_frame[v] for v in tm.var_order}
                                )
                            w.failed = True
                            ce = Counterexample(
                                State(dict(state.values)),
                                tuple(sorted(binding.items())),
                                post_state,
                            )
                            if po.kind == "SIM":
                                ce.expected = expected
                                ce.actual = actual
                            w.counterexample = ce
                    for p in binding:
                        frame.pop(p, None)

        for po in pos:
            if po.event == INIT_EVENT:
                continue
            w = working[po.name]
            if w.failed:
                verdict = FAILED
            elif w.cases == 0:
                verdict = VACUOUS
            else:
                verdict = DISCHARGED
            reports.append(
                DischargeReport(po, verdict, w.cases, w.counterexample, po.note)
            )

    elapsed = time.perf_counter() - started
    by_name = {po.name: k for k, po in enumerate(pos)}
    reports.sort(key=lambda r: by_name[r.po.name])
    for r in reports:
        r.elapsed = elapsed
    return reports


def discharge(
    tm: TypedMachine,
    po: ProofObligation,
    env: Env,
    state_source: str = ALL_STATES,
) -> DischargeReport:
    return discharge_all(tm, env, [po], state_source)[0]


def check_machine(
    tm: TypedMachine,
    env: Env,
    state_source: str = ALL_STATES,
    exclude_labels: frozenset[str] = frozenset(),
) -> list[DischargeReport]:
    """Establishment and preservation obligations only."""
    pos = [
        po
        for po in generate_pos(tm, exclude_labels=exclude_labels)
        if po.kind == "INV"
    ]
    return discharge_all(tm, env, pos, state_source, exclude_labels)


def check_refinement(
    tm: TypedMachine,
    env: Env,
    state_source: str = ALL_STATES,
) -> list[DischargeReport]:
    """Guard-strengthening and simulation obligations against tm's abstraction.

    Raises NotSuperposition when the machines do not even line up
    structurally (missing abstraction, lost parameters).
    """
    if tm.refines is None:
        raise NotSuperposition(f"machine '{tm.name}' refines nothing")
    for info in tm.events.values():
        if info.abstract is None or info.ast.is_init:
            continue
        lost = [p for p in info.abstract.params if p not in info.ast.params]
        if lost:
            raise NotSuperposition(
                f"event '{info.name}' drops abstract parameters: {', '.join(lost)}"
            )
    pos = refinement_pos(tm)
    return discharge_all(tm, env, pos, state_source)


# --- vacuous guard detection ------------------------------------------------------


@dataclass
class VacuityReport:
    """Whether a guard ever evaluated false on invariant-satisfying cases.

    A guard that never does is vacuous at these bounds: removing it
    admits no new behaviour, so it contributes nothing to the model's
    meaning here.  A vacuous guard with zero cases means no state even
    satisfied the invariants, which the caller should treat as its own
    warning.
    """

    event: str
    guard: str
    vacuous: bool
    cases: int
    witness: Counterexample | None = None


def detect_vacuous_guards(
    tm: TypedMachine,
    env: Env,
    state_source: str = ALL_STATES,
) -> list[VacuityReport]:
    bound = env.powerset_bound
    scope = [(lbl, inv.pred) for lbl, inv, _o in tm.invariant_scope]
    events = [
        (name, info) for name, info in tm.events.items() if not info.ast.is_init
    ]
    results: dict[tuple[str, str], VacuityReport] = {}
    for name, info in events:
        for g in info.ast.guards:
            results[(name, g.label)] = VacuityReport(name, g.label, True, 0)
    static = {name: _static_bindings(info, tm, env) for name, info in events}

    frame = dict(env.bindings)
    for state in _state_iter(tm, env, state_source):
        frame.update(state.values)
        if not all(eval_pred_frame(pred, frame, bound) for _lbl, pred in scope):
            continue
        for name, info in events:
            bindings = static[name]
            if bindings is None:
                bindings = param_bindings(info, state, env)
            for binding in bindings:
                frame.update(binding)
                for g in info.ast.guards:
                    rep = results[(name, g.label)]
                    rep.cases += 1
                    if not eval_pred_frame(g.pred, frame, bound) and rep.witness is None:
                        rep.vacuous = False
                        rep.witness = Counterexample(
                            State(dict(state.values)),
                            tuple(sorted(binding.items())),
                            None,
                        )
                for p in binding:
                    frame.pop(p, None)
    return list(results.values())


# --- goal-invariant queries ------------------------------------------------------


@dataclass
class GoalInvariantReport:
    """Where a designated goal invariant holds at the chosen bounds.

    The label is removed from the proof scope entirely; this report
    says on how many typed states (and whether on any reachable state)
    the predicate is actually true, which is information rather than an
    obligation.
    """

    label: str
    holds: int
    states: int
    holds_reachable: int
    reachable: int


def goal_invariant_report(
    tm: TypedMachine, env: Env, label: str
) -> GoalInvariantReport:
    pred = tm.invariant(label).pred
    bound = env.powerset_bound
    frame = dict(env.bindings)
    holds = 0
    total = 0
    for state in state_universe(tm, env):
        frame.update(state.values)
        total += 1
        if eval_pred_frame(pred, frame, bound):
            holds += 1
    holds_reach = 0
    reach = reachable_states(tm, env)
    for state in reach:
        frame.update(state.values)
        if eval_pred_frame(pred, frame, bound):
            holds_reach += 1
    return GoalInvariantReport(label, holds, total, holds_reach, len(reach))
