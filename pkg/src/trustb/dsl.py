"""Concrete syntax for contexts and machines.

The surface language is the ASCII form shown below; common mathematical
glyphs are accepted as aliases and normalised during lexing.

    CONTEXT cntx0
    SETS AGENTS TASKS
    CONSTANTS trustors trustees
    AXIOMS
      @axm1: trustors <: AGENTS
      @axm2: trustees <: AGENTS
    END

    MACHINE M0
    SEES cntx0
    VARIABLES agent_task
    INVARIANTS
      @inv1: agent_task : pow(trustees) +-> TASKS
    EVENT INITIALISATION
    THEN
      @act1: agent_task := {}
    END
    END

Predicates:   P & Q   P => Q   !x, y . P   #x . P   partition(S, a, b)
              e : S   e /: S   e <: S   e = f   e /= f
Expressions:  x   {}   {a, b}   e |-> f   e \/ f   e \ f   pow(e)   dom(e)
              r[e]   f(e)   S <-> T   S +-> T   S --> T

Comments run from // to end of line.  `pretty_print` renders parsed trees
back to this ASCII form; parsing that output yields an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DuplicateLabel, MultipleAssignment, ParseError
from .syntax import (
    Action,
    And,
    ContextAST,
    Difference,
    Dom,
    EmptySetLit,
    Equal,
    EventAST,
    Exists,
    Expr,
    FnSpace,
    Forall,
    FunApp,
    Ident,
    Image,
    Implies,
    Labeled,
    MachineAST,
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
)

MAX_NESTING = 200

_KEYWORDS = {
    "CONTEXT",
    "EXTENDS",
    "SETS",
    "CONSTANTS",
    "AXIOMS",
    "MACHINE",
    "REFINES",
    "SEES",
    "VARIABLES",
    "INVARIANTS",
    "EVENT",
    "ANY",
    "WHERE",
    "THEN",
    "END",
}

# Multi-character operators, longest first so prefixes never win early.
_OPERATORS = [
    ":=",
    "|->",
    "<->",
    "+->",
    "-->",
    "<:",
    "/:",
    "/=",
    "=>",
    "\\/",
    "\\",
    ":",
    "=",
    "&",
    "!",
    "#",
    ".",
    ",",
    "(",
    ")",
    "{",
    "}",
    "[",
    "]",
    "@",
]

# Mathematical glyphs lex as their ASCII spelling.
_UNICODE_ALIASES = {
    "∈": ":",  # element of
    "∉": "/:",
    "⊆": "<:",
    "↦": "|->",
    "∪": "\\/",
    "∖": "\\",
    "≠": "/=",
    "∧": "&",
    "⇒": "=>",
    "∀": "!",
    "∃": "#",
    "↔": "<->",
    "⇸": "+->",
    "→": "-->",
    "≔": ":=",
    "·": ".",
    "∅": "EMPTYSET",
    "ℙ": "POW",
}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "kw", "eof", or the normalised operator text
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in _UNICODE_ALIASES:
            alias = _UNICODE_ALIASES[ch]
            if alias == "EMPTYSET":
                tokens.append(Token("{", "{", line, col))
                tokens.append(Token("}", "}", line, col))
            elif alias == "POW":
                tokens.append(Token("ident", "pow", line, col))
            else:
                tokens.append(Token(alias, alias, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            kind = "kw" if word in _KEYWORDS else "ident"
            tokens.append(Token(kind, word, line, col))
            col += i - start
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token(op, op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise ParseError(line, col, f"unexpected character {ch!r}")
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0
        self.depth = 0

    # -- token helpers

    def peek(self, ahead: int = 0) -> Token:
        j = min(self.i + ahead, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise ParseError(
                tok.line, tok.col, f"expected {want!r}, found {tok.text or 'end of input'!r}",
                expected=want,
            )
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(
                tok.line, tok.col, f"expected {what}, found {tok.text or 'end of input'!r}",
                expected=what,
            )
        return self.next()

    def _enter(self, tok: Token) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING:
            raise ParseError(tok.line, tok.col, "expression nesting too deep")

    def _leave(self) -> None:
        self.depth -= 1

    # -- top level

    def parse_file(self) -> list[ContextAST | MachineAST]:
        units: list[ContextAST | MachineAST] = []
        while not self.at("eof"):
            if self.at("kw", "CONTEXT"):
                units.append(self.parse_context())
            elif self.at("kw", "MACHINE"):
                units.append(self.parse_machine())
            else:
                tok = self.peek()
                raise ParseError(
                    tok.line, tok.col,
                    f"expected CONTEXT or MACHINE, found {tok.text or 'end of input'!r}",
                )
        if not units:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "empty input")
        return units

    def parse_context(self) -> ContextAST:
        self.expect("kw", "CONTEXT")
        name = self.expect_ident("context name").text
        extends: list[str] = []
        sets: list[str] = []
        constants: list[str] = []
        axioms: list[Labeled] = []
        if self.at("kw", "EXTENDS"):
            self.next()
            extends = self.ident_list("context name")
        if self.at("kw", "SETS"):
            self.next()
            sets = self.ident_list("carrier set name")
        if self.at("kw", "CONSTANTS"):
            self.next()
            constants = self.ident_list("constant name")
        if self.at("kw", "AXIOMS"):
            self.next()
            axioms = self.labeled_predicates()
        self.expect("kw", "END")
        return ContextAST(name, tuple(extends), tuple(sets), tuple(constants), tuple(axioms))

    def parse_machine(self) -> MachineAST:
        self.expect("kw", "MACHINE")
        name = self.expect_ident("machine name").text
        refines = None
        if self.at("kw", "REFINES"):
            self.next()
            refines = self.expect_ident("machine name").text
        sees: list[str] = []
        if self.at("kw", "SEES"):
            self.next()
            sees = self.ident_list("context name")
        variables: list[str] = []
        if self.at("kw", "VARIABLES"):
            self.next()
            variables = self.ident_list("variable name")
        invariants: list[Labeled] = []
        if self.at("kw", "INVARIANTS"):
            self.next()
            invariants = self.labeled_predicates()
        events: list[EventAST] = []
        seen_events: set[str] = set()
        while self.at("kw", "EVENT"):
            ev = self.parse_event()
            if ev.name in seen_events:
                tok = self.peek()
                raise DuplicateLabel(tok.line, tok.col, ev.name)
            seen_events.add(ev.name)
            events.append(ev)
        self.expect("kw", "END")
        return MachineAST(
            name, tuple(sees), refines, tuple(variables), tuple(invariants), tuple(events)
        )

    def parse_event(self) -> EventAST:
        self.expect("kw", "EVENT")
        name = self.expect_ident("event name").text
        refines_event = None
        if self.at("kw", "REFINES"):
            self.next()
            refines_event = self.expect_ident("event name").text
        params: list[str] = []
        if self.at("kw", "ANY"):
            self.next()
            params = self.ident_list("parameter name")
        guards: list[Labeled] = []
        if self.at("kw", "WHERE"):
            self.next()
            guards = self.labeled_predicates()
        self.expect("kw", "THEN")
        actions = self.labeled_actions()
        self.expect("kw", "END")
        return EventAST(name, tuple(params), tuple(guards), tuple(actions), refines_event)

    def ident_list(self, what: str) -> list[str]:
        names = [self.expect_ident(what).text]
        while self.at("ident"):
            names.append(self.next().text)
        return names

    def labeled_predicates(self) -> list[Labeled]:
        out: list[Labeled] = []
        seen: set[str] = set()
        while self.at("@"):
            at = self.next()
            label = self.expect_ident("label").text
            if label in seen:
                raise DuplicateLabel(at.line, at.col, label)
            seen.add(label)
            self.expect(":")
            out.append(Labeled(label, self.parse_pred(), pos=(at.line, at.col)))
        if not out:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "expected at least one @label: clause")
        return out

    def labeled_actions(self) -> list[Action]:
        out: list[Action] = []
        seen_labels: set[str] = set()
        assigned: set[str] = set()
        while self.at("@"):
            at = self.next()
            label = self.expect_ident("label").text
            if label in seen_labels:
                raise DuplicateLabel(at.line, at.col, label)
            seen_labels.add(label)
            self.expect(":")
            var = self.expect_ident("variable name").text
            self.expect(":=")
            if var in assigned:
                raise MultipleAssignment(at.line, at.col, var)
            assigned.add(var)
            out.append(Action(label, var, self.parse_expr(), pos=(at.line, at.col)))
        if not out:
            tok = self.peek()
            raise ParseError(tok.line, tok.col, "expected at least one @label: action")
        return out

    # -- predicates

    def parse_pred(self) -> Pred:
        tok = self.peek()
        self._enter(tok)
        try:
            return self.implication()
        finally:
            self._leave()

    def implication(self) -> Pred:
        left = self.conjunction()
        if self.at("=>"):
            tok = self.next()
            right = self.parse_pred()
            return Implies(left, right, pos=(tok.line, tok.col))
        return left

    def conjunction(self) -> Pred:
        left = self.atom_pred()
        while self.at("&"):
            tok = self.next()
            right = self.atom_pred()
            left = And(left, right, pos=(tok.line, tok.col))
        return left

    def atom_pred(self) -> Pred:
        tok = self.peek()
        self._enter(tok)
        try:
            if tok.kind == "!":
                self.next()
                vars = self.quantvar_list()
                self.expect(".")
                return Forall(tuple(vars), self.parse_pred(), pos=(tok.line, tok.col))
            if tok.kind == "#":
                self.next()
                vars = self.quantvar_list()
                self.expect(".")
                return Exists(tuple(vars), self.parse_pred(), pos=(tok.line, tok.col))
            if tok.kind == "ident" and tok.text == "partition" and self.peek(1).kind == "(":
                self.next()
                self.next()
                whole = self.parse_expr()
                parts: list[Expr] = []
                while self.at(","):
                    self.next()
                    parts.append(self.parse_expr())
                self.expect(")")
                return Partition(whole, tuple(parts), pos=(tok.line, tok.col))
            if tok.kind == "(":
                return self.paren_or_relational()
            return self.relational()
        finally:
            self._leave()

    def paren_or_relational(self) -> Pred:
        """A '(' may open a grouped predicate or a parenthesised expression.

        Try the relational reading first (covers `(a |-> b) : S`); fall back
        to a grouped predicate (covers `(#x . P)`).  Report whichever
        attempt got further.
        """
        mark = self.i
        try:
            return self.relational()
        except ParseError as rel_err:
            rel_pos = self.i
            self.i = mark
            try:
                self.expect("(")
                inner = self.parse_pred()
                self.expect(")")
                return inner
            except ParseError as grp_err:
                if self.i > rel_pos:
                    raise grp_err from None
                raise rel_err from None

    def quantvar_list(self) -> list[str]:
        names = [self.expect_ident("quantified variable").text]
        while self.at(","):
            self.next()
            names.append(self.expect_ident("quantified variable").text)
        return names

    def relational(self) -> Pred:
        left = self.parse_expr()
        tok = self.peek()
        pos = (tok.line, tok.col)
        if tok.kind == ":":
            self.next()
            return Member(left, self.parse_expr(), pos=pos)
        if tok.kind == "/:":
            self.next()
            return NotMember(left, self.parse_expr(), pos=pos)
        if tok.kind == "<:":
            self.next()
            return Subset(left, self.parse_expr(), pos=pos)
        if tok.kind == "=":
            self.next()
            return Equal(left, self.parse_expr(), pos=pos)
        if tok.kind == "/=":
            self.next()
            return NotEqual(left, self.parse_expr(), pos=pos)
        raise ParseError(
            tok.line, tok.col,
            f"expected a relational operator, found {tok.text or 'end of input'!r}",
        )

    # -- expressions

    def parse_expr(self) -> Expr:
        tok = self.peek()
        self._enter(tok)
        try:
            return self.fnspace()
        finally:
            self._leave()

    def fnspace(self) -> Expr:
        left = self.maplet()
        tok = self.peek()
        if tok.kind in ("<->", "+->", "-->"):
            kind = {"<->": "rel", "+->": "pfun", "-->": "tfun"}[tok.kind]
            self.next()
            right = self.maplet()
            return FnSpace(kind, left, right, pos=(tok.line, tok.col))
        return left

    def maplet(self) -> Expr:
        left = self.set_term()
        while self.at("|->"):
            tok = self.next()
            right = self.set_term()
            left = Maplet(left, right, pos=(tok.line, tok.col))
        return left

    def set_term(self) -> Expr:
        left = self.postfix()
        while True:
            tok = self.peek()
            if tok.kind == "\\/":
                self.next()
                left = Union(left, self.postfix(), pos=(tok.line, tok.col))
            elif tok.kind == "\\":
                self.next()
                left = Difference(left, self.postfix(), pos=(tok.line, tok.col))
            else:
                return left

    def postfix(self) -> Expr:
        e = self.primary()
        while True:
            tok = self.peek()
            if tok.kind == "[":
                self.next()
                arg = self.parse_expr()
                self.expect("]")
                e = Image(e, arg, pos=(tok.line, tok.col))
            elif tok.kind == "(":
                self.next()
                arg = self.parse_expr()
                self.expect(")")
                e = FunApp(e, arg, pos=(tok.line, tok.col))
            else:
                return e

    def primary(self) -> Expr:
        tok = self.peek()
        self._enter(tok)
        try:
            if tok.kind == "ident":
                if tok.text in ("pow", "dom"):
                    self.next()
                    self.expect("(")
                    inner = self.parse_expr()
                    self.expect(")")
                    node = Pow if tok.text == "pow" else Dom
                    return node(inner, pos=(tok.line, tok.col))
                self.next()
                return Ident(tok.text, pos=(tok.line, tok.col))
            if tok.kind == "{":
                self.next()
                if self.at("}"):
                    self.next()
                    return EmptySetLit(pos=(tok.line, tok.col))
                items = [self.parse_expr()]
                while self.at(","):
                    self.next()
                    items.append(self.parse_expr())
                self.expect("}")
                return SetEnum(tuple(items), pos=(tok.line, tok.col))
            if tok.kind == "(":
                self.next()
                inner = self.parse_expr()
                self.expect(")")
                return inner
            raise ParseError(
                tok.line, tok.col,
                f"expected an expression, found {tok.text or 'end of input'!r}",
            )
        finally:
            self._leave()


# --- entry points ------------------------------------------------------


def parse_file(text: str, filename: str | None = None) -> list[ContextAST | MachineAST]:
    """Parse source text into contexts and machines, in order of appearance."""
    try:
        parser = Parser(tokenize(text))
        units = parser.parse_file()
    except ParseError as err:
        if filename is not None:
            err.filename = filename
            err.args = (err.with_file(filename),)
        raise
    return units


def parse_predicate(text: str) -> Pred:
    parser = Parser(tokenize(text))
    pred = parser.parse_pred()
    parser.expect("eof")
    return pred


def parse_expression(text: str) -> Expr:
    parser = Parser(tokenize(text))
    expr = parser.parse_expr()
    parser.expect("eof")
    return expr


# --- pretty printing ------------------------------------------------------

_FNSPACE_OPS = {"rel": "<->", "pfun": "+->", "tfun": "-->"}


def pp_expr(e: Expr, ctx: int = 0) -> str:
    """Render an expression; ctx is the binding level of the surrounding hole.

    Levels, loosest first: 0 relation-space arrows, 1 maplet, 2 union and
    difference, 3 postfix and primary.
    """
    t = type(e)
    if t is Ident:
        return e.name
    if t is EmptySetLit:
        return "{}"
    if t is SetEnum:
        return "{" + ", ".join(pp_expr(item) for item in e.items) + "}"
    if t is Pow:
        return f"pow({pp_expr(e.base)})"
    if t is Dom:
        return f"dom({pp_expr(e.rel)})"
    if t is Image:
        return f"{pp_expr(e.rel, 3)}[{pp_expr(e.arg)}]"
    if t is FunApp:
        return f"{pp_expr(e.fn, 3)}({pp_expr(e.arg)})"
    if t is Union:
        s = f"{pp_expr(e.left, 2)} \\/ {pp_expr(e.right, 3)}"
        return f"({s})" if ctx > 2 else s
    if t is Difference:
        s = f"{pp_expr(e.left, 2)} \\ {pp_expr(e.right, 3)}"
        return f"({s})" if ctx > 2 else s
    if t is Maplet:
        s = f"{pp_expr(e.left, 1)} |-> {pp_expr(e.right, 2)}"
        return f"({s})" if ctx > 1 else s
    if t is FnSpace:
        s = f"{pp_expr(e.dom, 1)} {_FNSPACE_OPS[e.kind]} {pp_expr(e.ran, 1)}"
        return f"({s})" if ctx > 0 else s
    raise TypeError(f"not an expression node: {e!r}")


def pp_pred(p: Pred, ctx: int = 0) -> str:
    """Render a predicate; ctx 0 is open position, 1 inside =>, 2 inside &."""
    t = type(p)
    if t is Member:
        return f"{pp_expr(p.item)} : {pp_expr(p.container)}"
    if t is NotMember:
        return f"{pp_expr(p.item)} /: {pp_expr(p.container)}"
    if t is Subset:
        return f"{pp_expr(p.left)} <: {pp_expr(p.right)}"
    if t is Equal:
        return f"{pp_expr(p.left)} = {pp_expr(p.right)}"
    if t is NotEqual:
        return f"{pp_expr(p.left)} /= {pp_expr(p.right)}"
    if t is Partition:
        inner = ", ".join([pp_expr(p.whole)] + [pp_expr(q) for q in p.parts])
        return f"partition({inner})"
    if t is And:
        s = f"{pp_pred(p.left, 1)} & {pp_pred(p.right, 2)}"
        return f"({s})" if ctx > 1 else s
    if t is Implies:
        s = f"{pp_pred(p.left, 1)} => {pp_pred(p.right, 0)}"
        return f"({s})" if ctx > 0 else s
    if t is Forall:
        s = f"!{', '.join(p.vars)} . {pp_pred(p.body, 0)}"
        return f"({s})" if ctx > 0 else s
    if t is Exists:
        s = f"#{', '.join(p.vars)} . {pp_pred(p.body, 0)}"
        return f"({s})" if ctx > 0 else s
    raise TypeError(f"not a predicate node: {p!r}")


def _pp_labeled(items, indent: str = "  ") -> list[str]:
    return [f"{indent}@{item.label}: {pp_pred(item.pred)}" for item in items]


def pp_event(ev: EventAST) -> list[str]:
    header = f"EVENT {ev.name}"
    if ev.refines_event:
        header += f" REFINES {ev.refines_event}"
    lines = [header]
    if ev.params:
        lines.append("ANY " + " ".join(ev.params))
    if ev.guards:
        lines.append("WHERE")
        lines.extend(_pp_labeled(ev.guards))
    lines.append("THEN")
    for act in ev.actions:
        lines.append(f"  @{act.label}: {act.variable} := {pp_expr(act.expr)}")
    lines.append("END")
    return lines


def pp_machine(m: MachineAST) -> str:
    lines = [f"MACHINE {m.name}"]
    if m.refines:
        lines.append(f"REFINES {m.refines}")
    if m.sees:
        lines.append("SEES " + " ".join(m.sees))
    if m.variables:
        lines.append("VARIABLES " + " ".join(m.variables))
    if m.invariants:
        lines.append("INVARIANTS")
        lines.extend(_pp_labeled(m.invariants))
    for ev in m.events:
        lines.extend(pp_event(ev))
    lines.append("END")
    return "\n".join(lines)


def pp_context(c: ContextAST) -> str:
    lines = [f"CONTEXT {c.name}"]
    if c.extends:
        lines.append("EXTENDS " + " ".join(c.extends))
    if c.sets:
        lines.append("SETS " + " ".join(c.sets))
    if c.constants:
        lines.append("CONSTANTS " + " ".join(c.constants))
    if c.axioms:
        lines.append("AXIOMS")
        lines.extend(_pp_labeled(c.axioms))
    lines.append("END")
    return "\n".join(lines)


def pretty_print(unit) -> str:
    if isinstance(unit, MachineAST):
        return pp_machine(unit)
    if isinstance(unit, ContextAST):
        return pp_context(unit)
    if isinstance(unit, list):
        return "\n\n".join(pretty_print(u) for u in unit)
    raise TypeError(f"cannot pretty-print {unit!r}")
