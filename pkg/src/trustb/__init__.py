"""Bounded verification kernel for a layered machine model of actual trust.

The package parses context/machine specifications in a compact dialect,
elaborates and typechecks them, generates invariant-preservation,
guard-strengthening and simulation proof obligations, and discharges
them by exhaustive enumeration at small bounds.  A built-in three-level
model (strategic, epistemic, commitment trust) ships with the package,
along with a scenario runner and an explained per-guard trust query API.
"""

from .errors import (
    ApplicationOutsideDomain,
    AxiomViolation,
    BoundExceeded,
    DuplicateLabel,
    FunctionalityViolation,
    GuardFailed,
    MissingTypeInvariant,
    MultipleAssignment,
    NonFiniteQuantifierDomain,
    NotARelation,
    NotFunctional,
    NotSuperposition,
    ParseError,
    ScenarioError,
    TrustbError,
    TrustDenied,
    TypeMismatch,
    UnboundIdentifier,
    UndeclaredAtom,
    UnresolvedReference,
)
from .values import FALSE, TRUE, Atom, BoolV, PairV, SetV, canon, mkatoms, mkset
from .kernel import DEFAULT_POWERSET_BOUND, Env, eval_expr, eval_pred
from .dsl import parse_expression, parse_file, parse_predicate, pretty_print
from .typecheck import TypedContext, TypedMachine, TypedModel, elaborate
from .runtime import (
    GuardReport,
    Instantiation,
    State,
    Trace,
    Transition,
    enumerate_transitions,
    event_enabled,
    fire_event,
    guard_report,
    initial_state,
    invariant_report,
    reachable_states,
    replay,
    state_universe,
)
from .po import (
    ALL_STATES,
    DISCHARGED,
    FAILED,
    REACHABLE,
    VACUOUS,
    Counterexample,
    DischargeReport,
    GoalInvariantReport,
    ProofObligation,
    VacuityReport,
    check_machine,
    check_refinement,
    detect_vacuous_guards,
    discharge,
    discharge_all,
    generate_pos,
    goal_invariant_report,
    refinement_pos,
)
from .models import (
    DEFAULT_BOUNDS,
    TRUST_EVENT,
    BoundSpec,
    Mutation,
    TrustDecision,
    TrustLevel,
    TrustState,
    build_model,
    builtin_source,
    builtin_units,
    export_state,
    import_state,
    machine_name,
    machine_setup,
    make_instantiation,
)
from .scenario import Scenario, ScenarioResult, parse_scenario, run_scenario, run_scenario_text

__version__ = "0.1.0"

__all__ = [
    "ALL_STATES",
    "Atom",
    "AxiomViolation",
    "ApplicationOutsideDomain",
    "BoolV",
    "BoundExceeded",
    "BoundSpec",
    "Counterexample",
    "DEFAULT_BOUNDS",
    "DEFAULT_POWERSET_BOUND",
    "DISCHARGED",
    "DischargeReport",
    "DuplicateLabel",
    "Env",
    "FAILED",
    "FALSE",
    "FunctionalityViolation",
    "GoalInvariantReport",
    "GuardFailed",
    "GuardReport",
    "Instantiation",
    "MissingTypeInvariant",
    "MultipleAssignment",
    "Mutation",
    "NonFiniteQuantifierDomain",
    "NotARelation",
    "NotFunctional",
    "NotSuperposition",
    "PairV",
    "ParseError",
    "ProofObligation",
    "REACHABLE",
    "Scenario",
    "ScenarioError",
    "ScenarioResult",
    "SetV",
    "State",
    "TRUE",
    "TRUST_EVENT",
    "Trace",
    "Transition",
    "TrustDecision",
    "TrustDenied",
    "TrustLevel",
    "TrustState",
    "TrustbError",
    "TypeMismatch",
    "TypedContext",
    "TypedMachine",
    "TypedModel",
    "UnboundIdentifier",
    "UndeclaredAtom",
    "UnresolvedReference",
    "VACUOUS",
    "VacuityReport",
    "build_model",
    "builtin_source",
    "builtin_units",
    "canon",
    "check_machine",
    "check_refinement",
    "detect_vacuous_guards",
    "discharge",
    "discharge_all",
    "elaborate",
    "enumerate_transitions",
    "eval_expr",
    "eval_pred",
    "event_enabled",
    "export_state",
    "fire_event",
    "generate_pos",
    "goal_invariant_report",
    "guard_report",
    "import_state",
    "initial_state",
    "invariant_report",
    "machine_name",
    "machine_setup",
    "make_instantiation",
    "mkatoms",
    "mkset",
    "parse_expression",
    "parse_file",
    "parse_predicate",
    "parse_scenario",
    "pretty_print",
    "reachable_states",
    "refinement_pos",
    "replay",
    "run_scenario",
    "run_scenario_text",
    "state_universe",
]
