"""Evaluator for the closed expression language over finite set values.

Evaluation is pure: the same expression under the same environment always
yields the same value, and nothing here mutates an environment a caller
handed in.  Quantifiers expand by enumerating their declared domains, which
must be given syntactically as the leading membership conjuncts of the
quantifier body (for a universal whose body is an implication, the leading
conjuncts of its left-hand side).

Powersets and relation/function spaces enumerate in a fixed canonical
order so that every downstream search is deterministic.  Enumerations are
capped: a powerset may have at most 2**bound members, with bound 12 by
default and configurable per environment.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Mapping

from .errors import (
    ApplicationOutsideDomain,
    BoundExceeded,
    NonFiniteQuantifierDomain,
    NotARelation,
    NotFunctional,
    UnboundIdentifier,
)
from .syntax import (
    And,
    Difference,
    Dom,
    EmptySetLit,
    Equal,
    Exists,
    Expr,
    FnSpace,
    Forall,
    FunApp,
    Ident,
    Image,
    Implies,
    Maplet,
    Member,
    NotEqual,
    NotMember,
    Partition,
    Pow,
    Pred,
    SetEnum,
    Subset,
    Union,
    conjuncts,
)
from .values import (
    BOOL_SET,
    EMPTY_SET,
    FALSE,
    TRUE,
    Atom,
    BoolV,
    PairV,
    SetV,
    Value,
    value_sorted,
)

DEFAULT_POWERSET_BOUND = 12

_BUILTINS: dict[str, Value] = {"BOOL": BOOL_SET, "TRUE": TRUE, "FALSE": FALSE}


class Env:
    """An immutable-by-convention binding of identifiers to values.

    BOOL, TRUE and FALSE are pre-bound unless the caller overrides them.
    """

    __slots__ = ("bindings", "powerset_bound")

    def __init__(
        self,
        bindings: Mapping[str, Value] | None = None,
        powerset_bound: int = DEFAULT_POWERSET_BOUND,
    ):
        merged = dict(_BUILTINS)
        if bindings:
            merged.update(bindings)
        self.bindings = merged
        self.powerset_bound = powerset_bound

    def extended(self, extra: Mapping[str, Value]) -> "Env":
        env = Env.__new__(Env)
        env.bindings = {**self.bindings, **extra}
        env.powerset_bound = self.powerset_bound
        return env


# --- core set operations ------------------------------------------------------

_pow_cache: dict[tuple[SetV, int], tuple[SetV, ...]] = {}


def powerset_elements(s: SetV, bound: int = DEFAULT_POWERSET_BOUND) -> tuple[SetV, ...]:
    """All subsets of s in canonical order: by bitmask over sorted elements."""
    if type(s) is not SetV:
        raise NotARelation(f"powerset needs a set, got {s!r}")
    if len(s) > bound:
        raise BoundExceeded("powerset base", len(s), bound)
    key = (s, bound)
    cached = _pow_cache.get(key)
    if cached is not None:
        return cached
    elems = s.sorted_elements()
    n = len(elems)
    subsets = []
    for mask in range(1 << n):
        subsets.append(SetV(elems[k] for k in range(n) if mask >> k & 1))
    result = tuple(subsets)
    if len(_pow_cache) < 4096:
        _pow_cache[key] = result
    return result


def powerset(s: SetV, bound: int = DEFAULT_POWERSET_BOUND) -> SetV:
    return SetV(powerset_elements(s, bound))


def relational_image(r: SetV, s: SetV) -> SetV:
    """r[s]: the set of right components of pairs in r whose left is in s."""
    if type(r) is not SetV:
        raise NotARelation(f"image needs a relation, got {r!r}")
    if type(s) is not SetV:
        raise NotARelation(f"image argument must be a set, got {s!r}")
    out = []
    members = s.elements
    for p in r.elements:
        if type(p) is not PairV:
            raise NotARelation(f"image over a set containing non-pair {p!r}")
        if p.left in members:
            out.append(p.right)
    return SetV(out)


def domain_of(r: SetV) -> SetV:
    if type(r) is not SetV:
        raise NotARelation(f"dom needs a relation, got {r!r}")
    out = []
    for p in r.elements:
        if type(p) is not PairV:
            raise NotARelation(f"dom over a set containing non-pair {p!r}")
        out.append(p.left)
    return SetV(out)


def apply_function(f: SetV, x: Value) -> Value:
    """Function application through the pair graph of f."""
    if type(f) is not SetV:
        raise NotARelation(f"application needs a relation, got {f!r}")
    found = None
    count = 0
    for p in f.elements:
        if type(p) is not PairV:
            raise NotARelation(f"application over a set containing non-pair {p!r}")
        if p.left == x:
            count += 1
            if count > 1:
                raise NotFunctional(f"{f!r} maps {x!r} to more than one value")
            found = p.right
    if count == 0:
        raise ApplicationOutsideDomain(repr(f), repr(x))
    return found


def check_function_kind(r: Value, dom_set: SetV, ran_set: SetV, kind: str) -> bool:
    """Whether r is a relation / partial function / total function dom -> ran.

    kind is one of "rel", "pfun", "tfun".  Non-set r is simply not a member
    of any relation space, so the answer is False rather than an error.
    """
    if type(r) is not SetV:
        return False
    dom_members = dom_set.elements
    ran_members = ran_set.elements
    seen_lefts: set[Value] = set()
    functional = True
    for p in r.elements:
        if type(p) is not PairV:
            return False
        if p.left not in dom_members or p.right not in ran_members:
            return False
        if p.left in seen_lefts:
            functional = False
        seen_lefts.add(p.left)
    if kind == "rel":
        return True
    if not functional:
        return False
    if kind == "pfun":
        return True
    if kind == "tfun":
        return seen_lefts == set(dom_members)
    raise ValueError(f"unknown function kind {kind!r}")


def enumerate_fn_space(
    kind: str, dom_set: SetV, ran_set: SetV, bound: int = DEFAULT_POWERSET_BOUND
) -> tuple[SetV, ...]:
    """All members of a relation space, in canonical order.

    The cardinality cap mirrors the powerset bound: at most 2**bound
    members may be enumerated.
    """
    cap = 1 << bound
    dom_elems = dom_set.sorted_elements()
    ran_elems = ran_set.sorted_elements()
    d, r = len(dom_elems), len(ran_elems)
    if kind == "rel":
        pairs = [PairV(a, b) for a in dom_elems for b in ran_elems]
        n = len(pairs)
        if 1 << n > cap:
            raise BoundExceeded("relation space", n, bound)
        return tuple(
            SetV(pairs[k] for k in range(n) if mask >> k & 1) for mask in range(1 << n)
        )
    if kind == "pfun":
        if (r + 1) ** d > cap:
            raise BoundExceeded("partial-function space", (r + 1) ** d, bound)
        options = [[None] + [PairV(a, b) for b in ran_elems] for a in dom_elems]
    elif kind == "tfun":
        if d > 0 and r**d > cap:
            raise BoundExceeded("total-function space", r**d, bound)
        options = [[PairV(a, b) for b in ran_elems] for a in dom_elems]
        if r == 0 and d > 0:
            return ()
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    out = []
    for choice in itertools.product(*options):
        out.append(SetV(p for p in choice if p is not None))
    return tuple(out)


# --- expression evaluation ------------------------------------------------------


def eval_expr(e: Expr, env: Env) -> Value:
    return _eval_expr(e, env.bindings, env.powerset_bound)


def eval_pred(p: Pred, env: Env) -> bool:
    return _eval_pred(p, env.bindings, env.powerset_bound)


def eval_expr_frame(e: Expr, frame: dict, bound: int = DEFAULT_POWERSET_BOUND) -> Value:
    """Evaluate against a plain bindings dict; the caller owns the frame."""
    return _eval_expr(e, frame, bound)


def eval_pred_frame(p: Pred, frame: dict, bound: int = DEFAULT_POWERSET_BOUND) -> bool:
    return _eval_pred(p, frame, bound)


def _lookup(frame: dict, name: str) -> Value:
    try:
        return frame[name]
    except KeyError:
        raise UnboundIdentifier(name) from None


def _eval_expr(e: Expr, frame: dict, bound: int) -> Value:
    t = type(e)
    if t is Ident:
        return _lookup(frame, e.name)
    if t is Maplet:
        return PairV(_eval_expr(e.left, frame, bound), _eval_expr(e.right, frame, bound))
    if t is SetEnum:
        return SetV(_eval_expr(item, frame, bound) for item in e.items)
    if t is EmptySetLit:
        return EMPTY_SET
    if t is Union:
        left = _as_set(_eval_expr(e.left, frame, bound), "union")
        right = _as_set(_eval_expr(e.right, frame, bound), "union")
        return SetV(left.elements | right.elements)
    if t is Difference:
        left = _as_set(_eval_expr(e.left, frame, bound), "difference")
        right = _as_set(_eval_expr(e.right, frame, bound), "difference")
        return SetV(left.elements - right.elements)
    if t is Image:
        rel = _eval_expr(e.rel, frame, bound)
        arg = _eval_expr(e.arg, frame, bound)
        return relational_image(rel, arg)
    if t is Dom:
        return domain_of(_eval_expr(e.rel, frame, bound))
    if t is Pow:
        return powerset(_as_set(_eval_expr(e.base, frame, bound), "powerset"), bound)
    if t is FunApp:
        fn = _eval_expr(e.fn, frame, bound)
        arg = _eval_expr(e.arg, frame, bound)
        return apply_function(fn, arg)
    if t is FnSpace:
        dom_set = _as_set(_eval_expr(e.dom, frame, bound), "relation space")
        ran_set = _as_set(_eval_expr(e.ran, frame, bound), "relation space")
        return SetV(enumerate_fn_space(e.kind, dom_set, ran_set, bound))
    raise TypeError(f"not an expression node: {e!r}")


def _as_set(v: Value, op: str) -> SetV:
    if type(v) is not SetV:
        raise NotARelation(f"{op} needs a set, got {v!r}")
    return v


def _eval_pred(p: Pred, frame: dict, bound: int) -> bool:
    t = type(p)
    if t is Member:
        return _eval_member(p.item, p.container, frame, bound)
    if t is NotMember:
        return not _eval_member(p.item, p.container, frame, bound)
    if t is And:
        return _eval_pred(p.left, frame, bound) and _eval_pred(p.right, frame, bound)
    if t is Implies:
        return (not _eval_pred(p.left, frame, bound)) or _eval_pred(p.right, frame, bound)
    if t is Equal:
        return _eval_expr(p.left, frame, bound) == _eval_expr(p.right, frame, bound)
    if t is NotEqual:
        return _eval_expr(p.left, frame, bound) != _eval_expr(p.right, frame, bound)
    if t is Subset:
        left = _as_set(_eval_expr(p.left, frame, bound), "subset")
        right = _as_set(_eval_expr(p.right, frame, bound), "subset")
        return left.elements <= right.elements
    if t is Partition:
        whole = _as_set(_eval_expr(p.whole, frame, bound), "partition")
        parts = [_as_set(_eval_expr(q, frame, bound), "partition") for q in p.parts]
        union: set = set()
        total = 0
        for part in parts:
            union |= part.elements
            total += len(part.elements)
        return union == whole.elements and total == len(union)
    if t is Forall:
        return _eval_quantifier(p.vars, p.body, frame, bound, is_forall=True)
    if t is Exists:
        return _eval_quantifier(p.vars, p.body, frame, bound, is_forall=False)
    raise TypeError(f"not a predicate node: {p!r}")


def _eval_member(item: Expr, container: Expr, frame: dict, bound: int) -> bool:
    tc = type(container)
    if tc is Pow:
        # x : pow(S) is a subset test; the powerset itself is never built.
        base = _as_set(_eval_expr(container.base, frame, bound), "powerset")
        v = _eval_expr(item, frame, bound)
        return type(v) is SetV and v.elements <= base.elements
    if tc is FnSpace:
        dom_set = _as_set(_eval_expr(container.dom, frame, bound), "relation space")
        ran_set = _as_set(_eval_expr(container.ran, frame, bound), "relation space")
        v = _eval_expr(item, frame, bound)
        return check_function_kind(v, dom_set, ran_set, container.kind)
    cv = _eval_expr(container, frame, bound)
    if type(cv) is not SetV:
        raise NotARelation(f"membership container is not a set: {cv!r}")
    return _eval_expr(item, frame, bound) in cv.elements


def quantifier_domains(vars: tuple[str, ...], body: Pred, is_forall: bool) -> list[Expr]:
    """The domain expression for each bound variable, read syntactically.

    The k-th leading conjunct of the body (of the implication's left side,
    for a universal written as typing => claim) must be `vars[k] : D`.
    """
    if is_forall and type(body) is Implies:
        chain = conjuncts(body.left)
    else:
        chain = conjuncts(body)
    if len(chain) < len(vars):
        raise NonFiniteQuantifierDomain(
            f"expected {len(vars)} typing conjuncts, found {len(chain)}"
        )
    domains: list[Expr] = []
    for k, name in enumerate(vars):
        c = chain[k]
        if type(c) is Member and type(c.item) is Ident and c.item.name == name:
            domains.append(c.container)
        else:
            raise NonFiniteQuantifierDomain(
                f"quantified variable '{name}' is not typed by conjunct {k + 1}"
            )
    return domains


def _domain_values(dom_expr: Expr, frame: dict, bound: int) -> list[Value]:
    if type(dom_expr) is Pow:
        base = _as_set(_eval_expr(dom_expr.base, frame, bound), "powerset")
        return list(powerset_elements(base, bound))
    v = _eval_expr(dom_expr, frame, bound)
    if type(v) is not SetV:
        raise NonFiniteQuantifierDomain(f"quantifier domain is not a set: {v!r}")
    return v.sorted_elements()


def _eval_quantifier(
    vars: tuple[str, ...], body: Pred, frame: dict, bound: int, is_forall: bool
) -> bool:
    domains = quantifier_domains(vars, body, is_forall)
    local = dict(frame)

    def walk(k: int) -> bool:
        if k == len(vars):
            return _eval_pred(body, local, bound)
        for v in _domain_values(domains[k], local, bound):
            local[vars[k]] = v
            result = walk(k + 1)
            if is_forall and not result:
                return False
            if not is_forall and result:
                return True
        return is_forall

    return walk(0)
