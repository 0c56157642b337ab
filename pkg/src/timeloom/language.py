"""Rule language: concrete syntax, AST, validation, and stratification.

A rule file is a sequence of `.`-terminated statements. Predicates are
declared before use with their kind and data arity:

    decl atemporal ab/1.
    decl observation adm/2.
    decl nonpersistent abth/2.
    decl persistent tkith/2.
    decl meta gestdiab/1.

Simple-event rules derive existence, termination, and window facts from
atemporal and observation atoms:

    exists(abth(P, D), T, 1) :- adm(P, D, T), ab(D).
    ends(abth(P, D), T, 1) :- stop(P, D, T).
    window(abth(P, D), 48) :- adm(P, D, T), ab(D).

Meta-event rules combine annotated event atoms, comparisons, and interval
builtins; constraints forbid fact combinations:

    meta gestdiab(P, inter([T1,T2],[T3,T4]), min(L1,L2)) :-
        preg(P, [T1,T2], L1), hyperglyc(P, [T3,T4], L2),
        not prediabatonset(P, [T3,T4], _).
    constraint :- tkith(P, D, [T1,T2]), allergic(P, D).

Variables start with an uppercase letter, `_` is a fresh wildcard, `*` is the
ongoing interval end, and `#` starts a comment.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Union

from .errors import (
    ArityMismatch,
    DuplicateDeclaration,
    MissingWindowRule,
    NotStratified,
    ParseError,
    SafetyViolation,
    SortError,
    UndeclaredPredicate,
)
from .model import (
    FN_NAMES,
    Const,
    FnApp,
    IntervalFn,
    IntervalTerm,
    Nat,
    SortKind,
    StarTerm,
    Term,
    Var,
    term_vars,
)

ALLEN_BUILTINS = (
    "before", "meets", "overlaps", "starts", "during", "finishes", "equals",
    "after", "met_by", "overlapped_by", "started_by", "contains", "finished_by",
)
EXTREMUM_BUILTINS = ("start", "end")

KEYWORDS = frozenset(
    ("decl", "atemporal", "observation", "nonpersistent", "persistent", "meta",
     "exists", "exists_pers", "ends", "window", "constraint", "not", "inter")
    + FN_NAMES + ALLEN_BUILTINS + EXTREMUM_BUILTINS
)


class PredKind(enum.Enum):
    ATEMPORAL = "atemporal"
    OBSERVATION = "observation"
    NONPERSISTENT = "nonpersistent"
    PERSISTENT = "persistent"
    META = "meta"


EVENT_KINDS = (PredKind.NONPERSISTENT, PredKind.PERSISTENT, PredKind.META)
SIMPLE_KINDS = (PredKind.NONPERSISTENT, PredKind.PERSISTENT)


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arity: int
    kind: PredKind


# ---------------------------------------------------------------------------
# Atoms and literals


@dataclass(frozen=True)
class AtemporalAtom:
    pred: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class ObservationAtom:
    pred: str
    args: tuple[Term, ...]
    t: Term


@dataclass(frozen=True)
class EventAtom:
    """An event atom without a confidence position (constraint bodies)."""

    pred: str
    args: tuple[Term, ...]
    interval: Term


@dataclass(frozen=True)
class AnnEventAtom:
    """An event atom with a confidence position (meta rule bodies)."""

    pred: str
    args: tuple[Term, ...]
    interval: Term
    level: Term


@dataclass(frozen=True)
class Comparison:
    op: str  # "!=", "<", "<="
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class AllenTest:
    """Exact Allen-relation test between two interval terms."""

    name: str
    a: Term
    b: Term


@dataclass(frozen=True)
class ExtremumTest:
    """start(p(x),T) / end(p(x),T): T equals the least start (greatest end)
    over all stored intervals for that event instance, at any level."""

    name: str  # "start" or "end"
    pred: str
    args: tuple[Term, ...]
    t: Term


Atom = Union[AtemporalAtom, ObservationAtom, EventAtom, AnnEventAtom,
             Comparison, AllenTest, ExtremumTest]


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False


# ---------------------------------------------------------------------------
# Rules


@dataclass(frozen=True)
class ExistenceRule:
    pred: str
    args: tuple[Term, ...]
    t: Term
    level: int
    body: tuple[Literal, ...]
    line: int = field(default=0, compare=False)
    var_sorts: Mapping[str, SortKind] = field(default=None, compare=False)


@dataclass(frozen=True)
class TerminationRule:
    pred: str
    args: tuple[Term, ...]
    t: Term
    level: int
    body: tuple[Literal, ...]
    line: int = field(default=0, compare=False)
    var_sorts: Mapping[str, SortKind] = field(default=None, compare=False)


@dataclass(frozen=True)
class WindowRule:
    pred: str
    args: tuple[Term, ...]
    w: Term
    body: tuple[Literal, ...]
    line: int = field(default=0, compare=False)
    var_sorts: Mapping[str, SortKind] = field(default=None, compare=False)


@dataclass(frozen=True)
class MetaRule:
    pred: str
    args: tuple[Term, ...]
    interval: Term
    level: Term
    body: tuple[Literal, ...]
    line: int = field(default=0, compare=False)
    var_sorts: Mapping[str, SortKind] = field(default=None, compare=False)


@dataclass(frozen=True)
class Constraint:
    body: tuple[Literal, ...]
    line: int = field(default=0, compare=False)
    var_sorts: Mapping[str, SortKind] = field(default=None, compare=False)


Rule = Union[ExistenceRule, TerminationRule, WindowRule, MetaRule, Constraint]


@dataclass(frozen=True, eq=False)
class TES:
    """A validated rule set: declarations, rules, constraints, and strata."""

    decls: Mapping[str, PredicateDecl]
    existence: tuple[ExistenceRule, ...]
    termination: tuple[TerminationRule, ...]
    windows: tuple[WindowRule, ...]
    meta_rules: tuple[MetaRule, ...]
    constraints: tuple[Constraint, ...]
    strata: tuple[tuple[str, ...], ...]

    def kind(self, pred: str) -> PredKind:
        return self.decls[pred].kind

    def is_event_pred(self, pred: str) -> bool:
        d = self.decls.get(pred)
        return d is not None and d.kind in EVENT_KINDS

    def is_simple_pred(self, pred: str) -> bool:
        d = self.decls.get(pred)
        return d is not None and d.kind in SIMPLE_KINDS

    @property
    def has_negated_event_atoms(self) -> bool:
        """True when any meta rule or constraint negates an event atom."""
        for rule in self.meta_rules + self.constraints:
            for lit in rule.body:
                if lit.negated and isinstance(lit.atom, (EventAtom, AnnEventAtom)):
                    return True
        return False

    @property
    def is_monotone(self) -> bool:
        """True when consistency is antitone under fact removal: no negated
        event atoms and no start/end aggregates in meta rules."""
        if self.has_negated_event_atoms:
            return False
        for rule in self.meta_rules:
            for lit in rule.body:
                if isinstance(lit.atom, ExtremumTest):
                    return False
        return True

    @property
    def has_domain_constraints(self) -> bool:
        return bool(self.constraints)

    def constraints_mention_meta(self) -> bool:
        for c in self.constraints:
            for lit in c.body:
                a = lit.atom
                if isinstance(a, EventAtom) and self.kind(a.pred) is PredKind.META:
                    return True
        return False

    def termination_levels(self) -> frozenset[int]:
        return frozenset(r.level for r in self.termination)

    def __eq__(self, other):
        if not isinstance(other, TES):
            return NotImplemented
        return (dict(self.decls), self.existence, self.termination, self.windows,
                self.meta_rules, self.constraints, self.strata) == \
               (dict(other.decls), other.existence, other.termination, other.windows,
                other.meta_rules, other.constraints, other.strata)


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


_PUNCT = {
    ":-": "ARROW", "<=": "LE", "!=": "NEQ", "<": "LT", "(": "LPAREN",
    ")": "RPAREN", "[": "LBRACK", "]": "RBRACK", ",": "COMMA", ".": "PERIOD",
    "/": "SLASH", "*": "STAR",
}


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c == "'":
            j = i + 1
            while j < n and text[j] not in "'\n":
                j += 1
            if j >= n or text[j] != "'":
                raise ParseError("unterminated quoted symbol", line, start_col)
            toks.append(_Token("QSYM", text[i + 1:j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        two = text[i:i + 2]
        if two in _PUNCT:
            toks.append(_Token(_PUNCT[two], two, line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT:
            toks.append(_Token(_PUNCT[c], c, line, start_col))
            i += 1
            col += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Token("NAT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word == "_":
                toks.append(_Token("WILD", word, line, start_col))
            elif word[0] == "_":
                raise ParseError(f"names may not start with underscore: {word}", line, start_col)
            elif word[0].isupper():
                toks.append(_Token("VAR", word, line, start_col))
            else:
                toks.append(_Token("IDENT", word, line, start_col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, start_col)
    toks.append(_Token("EOF", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: list[_Token]):
        self.toks = toks
        self.i = 0
        self.decls: dict[str, PredicateDecl] = {}
        self._wild = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def advance(self) -> _Token:
        t = self.toks[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def expect(self, kind: str, what: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {what or kind}, found {t.text!r}", t.line, t.col)
        return self.advance()

    def fresh_wild(self) -> Var:
        self._wild += 1
        return Var(f"_{self._wild}")

    # -- statements ---------------------------------------------------------

    def parse_program(self):
        existence: list[ExistenceRule] = []
        termination: list[TerminationRule] = []
        windows: list[WindowRule] = []
        meta_rules: list[MetaRule] = []
        constraints: list[Constraint] = []
        while self.peek().kind != "EOF":
            self._wild = 0
            t = self.peek()
            if t.kind != "IDENT":
                raise ParseError(f"expected a statement, found {t.text!r}", t.line, t.col)
            if t.text == "decl":
                self.parse_decl()
            elif t.text in ("exists", "exists_pers"):
                existence.append(self.parse_existence())
            elif t.text == "ends":
                termination.append(self.parse_termination())
            elif t.text == "window":
                windows.append(self.parse_window())
            elif t.text == "meta":
                meta_rules.append(self.parse_meta())
            elif t.text == "constraint":
                constraints.append(self.parse_constraint())
            else:
                raise ParseError(f"unknown statement keyword {t.text!r}", t.line, t.col)
        return self.decls, existence, termination, windows, meta_rules, constraints

    def parse_decl(self) -> None:
        self.advance()
        kind_tok = self.expect("IDENT", "a predicate kind")
        try:
            kind = PredKind(kind_tok.text)
        except ValueError:
            raise ParseError(f"unknown predicate kind {kind_tok.text!r}",
                             kind_tok.line, kind_tok.col) from None
        name_tok = self.expect("IDENT", "a predicate name")
        if name_tok.text in KEYWORDS:
            raise ParseError(f"{name_tok.text!r} is reserved", name_tok.line, name_tok.col)
        self.expect("SLASH")
        arity_tok = self.expect("NAT", "an arity")
        self.expect("PERIOD")
        if name_tok.text in self.decls:
            raise DuplicateDeclaration(f"predicate {name_tok.text} declared twice",
                                       name_tok.line, name_tok.col)
        self.decls[name_tok.text] = PredicateDecl(name_tok.text, int(arity_tok.text), kind)

    def _decl(self, tok: _Token) -> PredicateDecl:
        d = self.decls.get(tok.text)
        if d is None:
            raise UndeclaredPredicate(f"predicate {tok.text} is not declared", tok.line, tok.col)
        return d

    def parse_event_ref(self, want: tuple[PredKind, ...], what: str) -> tuple[PredicateDecl, tuple[Term, ...], _Token]:
        tok = self.expect("IDENT", "an event predicate")
        d = self._decl(tok)
        if d.kind not in want:
            raise ParseError(f"{tok.text} is {d.kind.value}, expected {what}", tok.line, tok.col)
        args: tuple[Term, ...] = ()
        if self.peek().kind == "LPAREN":
            self.advance()
            items = [self.parse_term(allow_wild=False)]
            while self.peek().kind == "COMMA":
                self.advance()
                items.append(self.parse_term(allow_wild=False))
            self.expect("RPAREN")
            args = tuple(items)
        if len(args) != d.arity:
            raise ArityMismatch(f"{d.name} declared with arity {d.arity}, used with {len(args)}",
                                tok.line, tok.col)
        return d, args, tok

    def parse_existence(self) -> ExistenceRule:
        kw = self.advance()
        self.expect("LPAREN")
        want = PredKind.NONPERSISTENT if kw.text == "exists" else PredKind.PERSISTENT
        d, args, _ = self.parse_event_ref((want,), f"a {want.value} event (use "
                                          + ("exists_pers" if kw.text == "exists" else "exists")
                                          + " for the other kind)")
        self.expect("COMMA")
        t = self.parse_term(allow_wild=False, allow_fn=True)
        self.expect("COMMA")
        lvl_tok = self.expect("NAT", "a confidence level literal")
        level = int(lvl_tok.text)
        if level < 1:
            raise ParseError("confidence levels start at 1", lvl_tok.line, lvl_tok.col)
        self.expect("RPAREN")
        body = self.parse_body("se")
        self.expect("PERIOD")
        return ExistenceRule(d.name, args, t, level, body, line=kw.line)

    def parse_termination(self) -> TerminationRule:
        kw = self.advance()
        self.expect("LPAREN")
        d, args, _ = self.parse_event_ref(SIMPLE_KINDS, "a simple event")
        self.expect("COMMA")
        t = self.parse_term(allow_wild=False, allow_fn=True)
        self.expect("COMMA")
        lvl_tok = self.expect("NAT", "a confidence level literal")
        level = int(lvl_tok.text)
        if level < 1:
            raise ParseError("confidence levels start at 1", lvl_tok.line, lvl_tok.col)
        self.expect("RPAREN")
        body = self.parse_body("se")
        self.expect("PERIOD")
        return TerminationRule(d.name, args, t, level, body, line=kw.line)

    def parse_window(self) -> WindowRule:
        kw = self.advance()
        self.expect("LPAREN")
        d, args, _ = self.parse_event_ref((PredKind.NONPERSISTENT,),
                                          "a nonpersistent event (persistent events take no window)")
        self.expect("COMMA")
        w = self.parse_term(allow_wild=False, allow_fn=True)
        self.expect("RPAREN")
        body = self.parse_body("se")
        self.expect("PERIOD")
        return WindowRule(d.name, args, w, body, line=kw.line)

    def parse_meta(self) -> MetaRule:
        kw = self.advance()
        tok = self.expect("IDENT", "a meta predicate")
        d = self._decl(tok)
        if d.kind is not PredKind.META:
            raise ParseError(f"{tok.text} is {d.kind.value}, expected meta", tok.line, tok.col)
        self.expect("LPAREN")
        items: list[Term] = [self.parse_term(allow_wild=False, allow_fn=True, allow_interval=True)]
        while self.peek().kind == "COMMA":
            self.advance()
            items.append(self.parse_term(allow_wild=False, allow_fn=True, allow_interval=True))
        rp = self.expect("RPAREN")
        if len(items) != d.arity + 2:
            raise ArityMismatch(
                f"meta head {d.name} needs {d.arity} data arguments plus interval and level",
                tok.line, tok.col)
        args, interval, level = tuple(items[:-2]), items[-2], items[-1]
        if not isinstance(interval, (IntervalTerm, IntervalFn, Var)):
            raise ParseError("meta head interval must be [lo,hi], inter(...), or a variable",
                             rp.line, rp.col)
        body = self.parse_body("meta")
        self.expect("PERIOD")
        return MetaRule(d.name, args, interval, level, body, line=kw.line)

    def parse_constraint(self) -> Constraint:
        kw = self.advance()
        body = self.parse_body("constraint")
        if not body:
            raise ParseError("constraint requires a body", kw.line, kw.col)
        self.expect("PERIOD")
        return Constraint(body, line=kw.line)

    # -- bodies -------------------------------------------------------------

    def parse_body(self, context: str) -> tuple[Literal, ...]:
        if self.peek().kind != "ARROW":
            return ()
        self.advance()
        lits = [self.parse_literal(context)]
        while self.peek().kind == "COMMA":
            self.advance()
            lits.append(self.parse_literal(context))
        return tuple(lits)

    def parse_literal(self, context: str) -> Literal:
        negated = False
        t = self.peek()
        if t.kind == "IDENT" and t.text == "not":
            self.advance()
            negated = True
            t = self.peek()
        if t.kind == "IDENT" and t.text in ALLEN_BUILTINS + EXTREMUM_BUILTINS:
            if context != "meta":
                raise ParseError(f"builtin {t.text} is only allowed in meta rule bodies",
                                 t.line, t.col)
            return Literal(self.parse_builtin(), negated)
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            # could still be a comparison whose left side is a constant
            if self.peek(1).kind == "LPAREN" or self.peek(1).kind not in ("NEQ", "LT", "LE"):
                return Literal(self.parse_atom(context), negated)
        if negated:
            raise ParseError("not applies to predicate atoms and builtins only", t.line, t.col)
        lhs = self.parse_term(allow_wild=False, allow_fn=True)
        op_tok = self.peek()
        if op_tok.kind not in ("NEQ", "LT", "LE"):
            raise ParseError(f"expected a comparison operator, found {op_tok.text!r}",
                             op_tok.line, op_tok.col)
        self.advance()
        rhs = self.parse_term(allow_wild=False, allow_fn=True)
        return Literal(Comparison(op_tok.text, lhs, rhs), negated)

    def parse_builtin(self) -> Atom:
        tok = self.advance()
        self.expect("LPAREN")
        if tok.text in EXTREMUM_BUILTINS:
            d, args, _ = self.parse_event_ref(EVENT_KINDS, "an event")
            self.expect("COMMA")
            t = self.parse_term(allow_wild=False)
            self.expect("RPAREN")
            return ExtremumTest(tok.text, d.name, args, t)
        a = self.parse_interval_arg()
        self.expect("COMMA")
        b = self.parse_interval_arg()
        self.expect("RPAREN")
        return AllenTest(tok.text, a, b)

    def parse_interval_arg(self) -> Term:
        t = self.peek()
        term = self.parse_term(allow_wild=False, allow_interval=True)
        if not isinstance(term, (IntervalTerm, IntervalFn, Var)):
            raise ParseError("builtin arguments must be intervals", t.line, t.col)
        return term

    def parse_atom(self, context: str) -> Atom:
        tok = self.expect("IDENT", "a predicate")
        d = self._decl(tok)
        args: list[Term] = []
        if self.peek().kind == "LPAREN":
            self.advance()
            args.append(self.parse_term(allow_interval=True))
            while self.peek().kind == "COMMA":
                self.advance()
                args.append(self.parse_term(allow_interval=True))
            self.expect("RPAREN")
        if d.kind is PredKind.ATEMPORAL:
            self._check_arity(d, len(args), tok)
            return AtemporalAtom(d.name, self._data_args(args, tok))
        if not args:
            raise ParseError(f"{d.name} needs its temporal arguments here", tok.line, tok.col)
        if d.kind is PredKind.OBSERVATION:
            self._check_arity(d, len(args) - 1, tok)
            return ObservationAtom(d.name, self._data_args(args[:-1], tok), args[-1])
        if context == "se":
            raise ParseError("event atoms are not allowed in simple-event rule bodies",
                             tok.line, tok.col)
        if context == "constraint":
            self._check_arity(d, len(args) - 1, tok,
                              note=" (constraint event atoms take no confidence argument)")
            interval = self._interval_arg(args[-1], tok)
            return EventAtom(d.name, self._data_args(args[:-1], tok), interval)
        if d.kind is PredKind.META or d.kind in SIMPLE_KINDS:
            self._check_arity(d, len(args) - 2, tok,
                              note=" (meta-rule event atoms take interval and confidence arguments)")
            interval = self._interval_arg(args[-2], tok)
            return AnnEventAtom(d.name, self._data_args(args[:-2], tok), interval, args[-1])
        raise ParseError(f"{d.name} cannot appear here", tok.line, tok.col)

    def _check_arity(self, d: PredicateDecl, n: int, tok: _Token, note: str = "") -> None:
        if n != d.arity:
            raise ArityMismatch(f"{d.name} declared with arity {d.arity}{note}", tok.line, tok.col)

    def _data_args(self, args: list[Term], tok: _Token) -> tuple[Term, ...]:
        for a in args:
            if isinstance(a, (IntervalTerm, IntervalFn, FnApp, StarTerm)):
                raise ParseError("data arguments must be constants, naturals, or variables",
                                 tok.line, tok.col)
        return tuple(args)

    def _interval_arg(self, term: Term, tok: _Token) -> Term:
        if not isinstance(term, (IntervalTerm, Var)):
            raise ParseError("the interval argument must be [lo,hi], a variable, or _",
                             tok.line, tok.col)
        return term

    # -- terms ---------------------------------------------------------------

    def parse_term(self, allow_wild: bool = True, allow_fn: bool = False,
                   allow_interval: bool = False) -> Term:
        t = self.peek()
        if t.kind == "NAT":
            self.advance()
            return Nat(int(t.text))
        if t.kind == "VAR":
            self.advance()
            return Var(t.text)
        if t.kind == "WILD":
            if not allow_wild:
                raise ParseError("wildcard is not allowed here", t.line, t.col)
            self.advance()
            return self.fresh_wild()
        if t.kind == "STAR":
            self.advance()
            return StarTerm()
        if t.kind == "QSYM":
            self.advance()
            return Const(t.text)
        if t.kind == "LBRACK":
            if not allow_interval:
                raise ParseError("interval term is not allowed here", t.line, t.col)
            self.advance()
            lo = self._endpoint(False)
            self.expect("COMMA")
            hi = self._endpoint(True)
            self.expect("RBRACK")
            return IntervalTerm(lo, hi)
        if t.kind == "IDENT":
            if t.text == "inter":
                if not allow_interval:
                    raise ParseError("interval term is not allowed here", t.line, t.col)
                self.advance()
                self.expect("LPAREN")
                items = [self.parse_term(allow_wild=False, allow_interval=True)]
                while self.peek().kind == "COMMA":
                    self.advance()
                    items.append(self.parse_term(allow_wild=False, allow_interval=True))
                self.expect("RPAREN")
                for a in items:
                    if not isinstance(a, (IntervalTerm, IntervalFn, Var)):
                        raise ParseError("inter arguments must be intervals", t.line, t.col)
                return IntervalFn(tuple(items))
            if t.text in FN_NAMES:
                if not allow_fn:
                    raise ParseError(f"{t.text}(...) is not allowed in this position",
                                     t.line, t.col)
                self.advance()
                self.expect("LPAREN")
                items = [self.parse_term(allow_wild=False, allow_fn=True)]
                while self.peek().kind == "COMMA":
                    self.advance()
                    items.append(self.parse_term(allow_wild=False, allow_fn=True))
                self.expect("RPAREN")
                if t.text in ("plus", "minus") and len(items) != 2:
                    raise ParseError(f"{t.text} takes exactly two arguments", t.line, t.col)
                if len(items) < 1:
                    raise ParseError(f"{t.text} needs at least one argument", t.line, t.col)
                return FnApp(t.text, tuple(items))
            if t.text in KEYWORDS:
                raise ParseError(f"{t.text!r} is reserved", t.line, t.col)
            self.advance()
            return Const(t.text)
        raise ParseError(f"expected a term, found {t.text!r}", t.line, t.col)

    def _endpoint(self, is_hi: bool) -> Term:
        t = self.peek()
        if t.kind == "STAR":
            if not is_hi:
                raise ParseError("* may only close an interval", t.line, t.col)
            self.advance()
            return StarTerm()
        if t.kind == "WILD":
            self.advance()
            return self.fresh_wild()
        if t.kind == "NAT":
            self.advance()
            return Nat(int(t.text))
        if t.kind == "VAR":
            self.advance()
            return Var(t.text)
        raise ParseError("interval endpoints must be naturals, variables, _, or *",
                         t.line, t.col)


# ---------------------------------------------------------------------------
# Validation: sorts and safety


_NUMERIC = (SortKind.NAT, SortKind.POSNAT, SortKind.NAT_OR_STAR)

# meet of two numeric sorts is the stricter one
_STRICTNESS = {SortKind.NAT_OR_STAR: 0, SortKind.NAT: 1, SortKind.POSNAT: 2}


def _meet(a: SortKind, b: SortKind, var: str, line: int) -> SortKind:
    if a is b:
        return a
    if a in _NUMERIC and b in _NUMERIC:
        return a if _STRICTNESS[a] >= _STRICTNESS[b] else b
    raise SortError(f"variable {var} used both as {a.value} and as {b.value}", line)


class _SortWalk:
    def __init__(self, line: int):
        self.line = line
        self.sorts: dict[str, SortKind] = {}

    def term(self, t: Term, ctx: SortKind) -> None:
        if isinstance(t, Var):
            prev = self.sorts.get(t.name)
            self.sorts[t.name] = ctx if prev is None else _meet(prev, ctx, t.name, self.line)
        elif isinstance(t, Const):
            if ctx is not SortKind.DATA:
                raise SortError(f"symbol {t.name} in a {ctx.value} position", self.line)
        elif isinstance(t, Nat):
            if ctx is SortKind.POSNAT and t.value < 1:
                raise SortError(f"{t.value} in a position requiring a positive natural", self.line)
            if ctx is SortKind.DATA or ctx in _NUMERIC:
                return
            raise SortError(f"natural {t.value} in an interval position", self.line)
        elif isinstance(t, StarTerm):
            if ctx is not SortKind.NAT_OR_STAR:
                raise SortError("* outside an interval-end or comparison position", self.line)
        elif isinstance(t, FnApp):
            if ctx is SortKind.DATA or ctx is SortKind.INTERVAL:
                raise SortError(f"{t.fn}(...) in a {ctx.value} position", self.line)
            arg_ctx = SortKind.NAT if t.fn in ("plus", "minus") else ctx
            for a in t.args:
                self.term(a, arg_ctx)
        elif isinstance(t, IntervalTerm):
            if ctx is not SortKind.INTERVAL:
                raise SortError("interval term in a non-interval position", self.line)
            self.term(t.lo, SortKind.NAT)
            self.term(t.hi, SortKind.NAT_OR_STAR)
        elif isinstance(t, IntervalFn):
            if ctx is not SortKind.INTERVAL:
                raise SortError("inter(...) in a non-interval position", self.line)
            for a in t.args:
                self.term(a, SortKind.INTERVAL)

    def atom(self, a: Atom) -> None:
        if isinstance(a, AtemporalAtom):
            for x in a.args:
                self.term(x, SortKind.DATA)
        elif isinstance(a, ObservationAtom):
            for x in a.args:
                self.term(x, SortKind.DATA)
            self.term(a.t, SortKind.NAT)
        elif isinstance(a, EventAtom):
            for x in a.args:
                self.term(x, SortKind.DATA)
            self.term(a.interval, SortKind.INTERVAL)
        elif isinstance(a, AnnEventAtom):
            for x in a.args:
                self.term(x, SortKind.DATA)
            self.term(a.interval, SortKind.INTERVAL)
            self.term(a.level, SortKind.POSNAT)
        elif isinstance(a, AllenTest):
            self.term(a.a, SortKind.INTERVAL)
            self.term(a.b, SortKind.INTERVAL)
        elif isinstance(a, ExtremumTest):
            for x in a.args:
                self.term(x, SortKind.DATA)
            self.term(a.t, SortKind.NAT if a.name == "start" else SortKind.NAT_OR_STAR)

    def comparison(self, c: Comparison) -> None:
        # operand sorts are fixed by binder positions; here we only rule out
        # ordering symbols and mixing symbols with numbers
        kinds = []
        for side in (c.lhs, c.rhs):
            if isinstance(side, Var):
                kinds.append(self.sorts.get(side.name, SortKind.DATA))
            elif isinstance(side, Const):
                kinds.append(SortKind.DATA)
            elif isinstance(side, (Nat, FnApp, StarTerm)):
                kinds.append(SortKind.NAT_OR_STAR)
        data = [k is SortKind.DATA for k in kinds]
        if c.op in ("<", "<=") and any(data):
            raise SortError(f"ordering comparison over symbols: {c.op}", self.line)
        if c.op == "!=" and any(data) != all(data):
            # symbols compare only against data-sorted operands; naturals used
            # as data values still satisfy this
            for side, k in zip((c.lhs, c.rhs), kinds):
                if k is SortKind.DATA and isinstance(side, Var):
                    return
            raise SortError("!= mixes a symbol with a numeric-only term", self.line)


def _head_positions(rule: Rule) -> list[tuple[Term, SortKind]]:
    if isinstance(rule, (ExistenceRule, TerminationRule)):
        return [(a, SortKind.DATA) for a in rule.args] + [(rule.t, SortKind.NAT)]
    if isinstance(rule, WindowRule):
        return [(a, SortKind.DATA) for a in rule.args] + [(rule.w, SortKind.POSNAT)]
    if isinstance(rule, MetaRule):
        return ([(a, SortKind.DATA) for a in rule.args]
                + [(rule.interval, SortKind.INTERVAL), (rule.level, SortKind.POSNAT)])
    return []


def _rule_name(rule: Rule) -> str:
    if isinstance(rule, Constraint):
        return "constraint"
    return f"rule for {rule.pred}"


def _binder_vars(body: tuple[Literal, ...]) -> set[str]:
    bound: set[str] = set()
    for lit in body:
        if lit.negated:
            continue
        a = lit.atom
        if isinstance(a, (AtemporalAtom, ObservationAtom, EventAtom, AnnEventAtom)):
            terms: list[Term] = list(a.args)
            if isinstance(a, ObservationAtom):
                terms.append(a.t)
            if isinstance(a, (EventAtom, AnnEventAtom)):
                terms.append(a.interval)
            if isinstance(a, AnnEventAtom):
                terms.append(a.level)
            for t in terms:
                bound.update(v.name for v in term_vars(t))
    return bound


def is_schematic_window(rule: Rule) -> bool:
    """A window rule covering every instance of its predicate: empty body,
    variable-only head arguments, and a closed window term."""
    return (isinstance(rule, WindowRule) and not rule.body
            and all(isinstance(a, Var) for a in rule.args)
            and not any(True for _ in term_vars(rule.w)))


def _validate_rule(rule: Rule) -> Rule:
    walk = _SortWalk(rule.line)
    for term, ctx in _head_positions(rule):
        walk.term(term, ctx)
    if is_schematic_window(rule):
        return replace(rule, var_sorts=dict(walk.sorts))
    for lit in rule.body:
        if not isinstance(lit.atom, Comparison):
            walk.atom(lit.atom)
    for lit in rule.body:
        if isinstance(lit.atom, Comparison):
            for side in (lit.atom.lhs, lit.atom.rhs):
                if isinstance(side, FnApp):
                    walk.term(side, SortKind.NAT)
            lit_vars = set(term_vars(lit.atom.lhs)) | set(term_vars(lit.atom.rhs))
            for v in lit_vars:
                walk.sorts.setdefault(v.name, SortKind.DATA)
            walk.comparison(lit.atom)

    bound = _binder_vars(rule.body)
    used: list[Var] = []
    for term, _ in _head_positions(rule):
        used.extend(term_vars(term))
    for lit in rule.body:
        a = lit.atom
        if isinstance(a, Comparison):
            used.extend(term_vars(a.lhs))
            used.extend(term_vars(a.rhs))
        elif isinstance(a, AllenTest):
            used.extend(term_vars(a.a))
            used.extend(term_vars(a.b))
        elif isinstance(a, ExtremumTest):
            for x in a.args:
                used.extend(term_vars(x))
            used.extend(term_vars(a.t))
        elif lit.negated:
            for v in _binder_vars((Literal(a, False),)):
                if not v.startswith("_") and v not in bound:
                    raise SafetyViolation(_rule_name(rule), v, rule.line)
    for v in used:
        if v.is_wildcard:
            raise SafetyViolation(_rule_name(rule), "_", rule.line)
        if v.name not in bound:
            raise SafetyViolation(_rule_name(rule), v.name, rule.line)
    return replace(rule, var_sorts=dict(walk.sorts))


# ---------------------------------------------------------------------------
# Stratification


def _stratify(meta_rules: tuple[MetaRule, ...], decls: Mapping[str, PredicateDecl]
              ) -> tuple[tuple[str, ...], ...]:
    meta_preds = sorted(n for n, d in decls.items() if d.kind is PredKind.META)
    edges: dict[str, set[str]] = {p: set() for p in meta_preds}
    neg_edges: set[tuple[str, str]] = set()
    for rule in meta_rules:
        for lit in rule.body:
            a = lit.atom
            if isinstance(a, AnnEventAtom) and decls[a.pred].kind is PredKind.META:
                edges[a.pred].add(rule.pred)
                if lit.negated:
                    neg_edges.add((a.pred, rule.pred))
            elif isinstance(a, ExtremumTest) and decls[a.pred].kind is PredKind.META:
                # aggregates over a predicate need it fully computed first
                edges[a.pred].add(rule.pred)
                neg_edges.add((a.pred, rule.pred))

    # Tarjan strongly connected components, deterministic by name order
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: dict[str, bool] = {}
    stack: list[str] = []
    sccs: list[tuple[str, ...]] = []
    counter = [0]

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack[v] = True
        for w in sorted(edges[v]):
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif on_stack.get(w):
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack[w] = False
                comp.append(w)
                if w == v:
                    break
            sccs.append(tuple(sorted(comp)))

    for p in meta_preds:
        if p not in index:
            strongconnect(p)

    comp_of = {p: i for i, comp in enumerate(sccs) for p in comp}
    for src, dst in neg_edges:
        if comp_of[src] == comp_of[dst]:
            raise NotStratified(sccs[comp_of[src]])

    # Tarjan emits components in reverse topological order of the condensation
    order = list(reversed(sccs))
    for rule in meta_rules:
        head_comp = comp_of[rule.pred]
        for lit in rule.body:
            a = lit.atom
            if isinstance(a, AnnEventAtom) and decls[a.pred].kind is PredKind.META \
                    and not lit.negated and comp_of[a.pred] == head_comp:
                _check_recursive_level(rule)
                break
    return tuple(order)


def _check_recursive_level(rule: MetaRule) -> None:
    def has_arith(t: Term) -> bool:
        if isinstance(t, FnApp):
            return t.fn in ("plus", "minus") or any(has_arith(a) for a in t.args)
        return False

    if has_arith(rule.level):
        raise ParseError(
            f"recursive rule for {rule.pred} may not compute confidence levels with plus/minus",
            rule.line)


# ---------------------------------------------------------------------------
# Entry points


def parse_tes(text: str) -> TES:
    """Parse and validate a rule file into a TES."""
    decls, existence, termination, windows, meta_rules, constraints = \
        _Parser(_tokenize(text)).parse_program()
    existence = tuple(_validate_rule(r) for r in existence)
    termination = tuple(_validate_rule(r) for r in termination)
    windows = tuple(_validate_rule(r) for r in windows)
    meta_rules = tuple(_validate_rule(r) for r in meta_rules)
    constraints = tuple(_validate_rule(r) for r in constraints)

    with_window = {r.pred for r in windows}
    for r in existence:
        if decls[r.pred].kind is PredKind.NONPERSISTENT and r.pred not in with_window:
            raise MissingWindowRule(r.pred)

    strata = _stratify(meta_rules, decls)
    return TES(dict(decls), existence, termination, windows, meta_rules, constraints, strata)


# ---------------------------------------------------------------------------
# Printing


def _fmt_term(t: Term) -> str:
    if isinstance(t, Const):
        if t.name and t.name[0].islower() and t.name.isidentifier() \
                and t.name not in KEYWORDS and not t.name.startswith("_"):
            return t.name
        return f"'{t.name}'"
    if isinstance(t, Nat):
        return str(t.value)
    if isinstance(t, Var):
        return "_" if t.is_wildcard else t.name
    if isinstance(t, StarTerm):
        return "*"
    if isinstance(t, FnApp):
        return f"{t.fn}({', '.join(_fmt_term(a) for a in t.args)})"
    if isinstance(t, IntervalTerm):
        return f"[{_fmt_term(t.lo)},{_fmt_term(t.hi)}]"
    if isinstance(t, IntervalFn):
        return f"inter({', '.join(_fmt_term(a) for a in t.args)})"
    raise TypeError(f"not a term: {t!r}")


def _fmt_ref(pred: str, args: tuple[Term, ...]) -> str:
    if not args:
        return pred
    return f"{pred}({', '.join(_fmt_term(a) for a in args)})"


def _fmt_atom(a: Atom) -> str:
    if isinstance(a, AtemporalAtom):
        return _fmt_ref(a.pred, a.args)
    if isinstance(a, ObservationAtom):
        return _fmt_ref(a.pred, a.args + (a.t,))
    if isinstance(a, EventAtom):
        return _fmt_ref(a.pred, a.args + (a.interval,))
    if isinstance(a, AnnEventAtom):
        return _fmt_ref(a.pred, a.args + (a.interval, a.level))
    if isinstance(a, Comparison):
        return f"{_fmt_term(a.lhs)} {a.op} {_fmt_term(a.rhs)}"
    if isinstance(a, AllenTest):
        return f"{a.name}({_fmt_term(a.a)}, {_fmt_term(a.b)})"
    if isinstance(a, ExtremumTest):
        return f"{a.name}({_fmt_ref(a.pred, a.args)}, {_fmt_term(a.t)})"
    raise TypeError(f"not an atom: {a!r}")


def _fmt_body(body: tuple[Literal, ...]) -> str:
    if not body:
        return ""
    parts = [("not " if lit.negated else "") + _fmt_atom(lit.atom) for lit in body]
    return " :- " + ", ".join(parts)


def print_tes(tes: TES) -> str:
    """Render a TES back to rule-file text; reparsing yields an equal TES."""
    out: list[str] = []
    for d in tes.decls.values():
        out.append(f"decl {d.kind.value} {d.name}/{d.arity}.")
    for r in tes.existence:
        kw = "exists" if tes.kind(r.pred) is PredKind.NONPERSISTENT else "exists_pers"
        head = f"{kw}({_fmt_ref(r.pred, r.args)}, {_fmt_term(r.t)}, {r.level})"
        out.append(f"{head}{_fmt_body(r.body)}.")
    for r in tes.termination:
        out.append(f"ends({_fmt_ref(r.pred, r.args)}, {_fmt_term(r.t)}, {r.level})"
                   f"{_fmt_body(r.body)}.")
    for r in tes.windows:
        out.append(f"window({_fmt_ref(r.pred, r.args)}, {_fmt_term(r.w)}){_fmt_body(r.body)}.")
    for r in tes.meta_rules:
        head = _fmt_ref(r.pred, r.args + (r.interval, r.level))
        out.append(f"meta {head}{_fmt_body(r.body)}.")
    for c in tes.constraints:
        out.append(f"constraint{_fmt_body(c.body)}.")
    return "\n".join(out) + "\n"
