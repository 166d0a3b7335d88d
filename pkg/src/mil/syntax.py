"""Prolog-ish clause syntax: parsing and printing.

Conventions: lowercase identifiers are symbols and uppercase ones are
variables; clauses end with a period; lists desugar to binary compound terms
with functor '.' and terminal constant [].  Inside metarule definitions the
capitalisation convention flips to MIL style: capitals in predicate position
are existentially quantified second-order variables, lowercase arguments are
universally quantified first-order variables and uppercase arguments are
existentially quantified first-order ones.
"""

from __future__ import annotations

import re
from typing import Iterator, List, Optional, Tuple

from .terms import (CONSTANT, EXISTENTIAL, FIRST, PREDICATE, SECOND, THIRD,
                    UNIVERSAL, Applied, Clause, Compound, Const, Literal,
                    Metarule, Symbol, Variable)

LIST_FUNCTOR = Symbol(".", "function")
NIL = Const(Symbol("[]", CONSTANT))


class ClauseSyntaxError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


_TOKEN = re.compile(r"""
      (?P<ws>\s+)
    | (?P<neck>:-)
    | (?P<ident>[a-zA-Z0-9_$][a-zA-Z0-9_$]*)
    | (?P<punct>[()\[\],|.])
""", re.VERBOSE)


def tokenize(text: str, line_offset: int = 1) -> List[Tuple[str, str, int, int]]:
    """Token stream of (kind, value, line, col)."""
    tokens = []
    line = line_offset
    col = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ClauseSyntaxError(f"unexpected character {text[pos]!r}",
                                    line, col)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            tokens.append((kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    return tokens


class _Parser:
    """Recursive-descent parser over a token list.

    mode: 'clause' for ordinary first-order clauses, 'metarule' for MIL-style
    second-order metarule text, 'punch' for third-order metarules.
    """

    def __init__(self, tokens, mode: str = "clause"):
        self.tokens = tokens
        self.i = 0
        self.mode = mode

    def _peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return (None, None, -1, -1)

    def _next(self):
        tok = self._peek()
        self.i += 1
        return tok

    def _expect(self, value):
        kind, got, line, col = self._next()
        if got != value:
            raise ClauseSyntaxError(f"expected {value!r}, found {got!r}",
                                    line, col)

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    # -- terms --------------------------------------------------------------

    def _variable(self, name: str, predicate_position: bool) -> Variable:
        if self.mode == "punch":
            return Variable(name, THIRD, EXISTENTIAL)
        if self.mode == "metarule":
            if predicate_position:
                return Variable(name, SECOND, EXISTENTIAL)
            return Variable(name, FIRST, EXISTENTIAL)
        return Variable(name, FIRST, UNIVERSAL)

    def parse_term(self):
        kind, value, line, col = self._next()
        if value == "[":
            return self._parse_list()
        if kind != "ident":
            raise ClauseSyntaxError(f"expected a term, found {value!r}",
                                    line, col)
        if value[0].isupper() or value[0] == "_":
            return self._variable(value, predicate_position=False)
        if self.mode == "metarule" and value[0].islower():
            # lowercase argument inside a metarule is a universal variable
            if self._peek()[1] == "(":
                return self._parse_compound(value)
            return Variable(value, FIRST, UNIVERSAL)
        if self._peek()[1] == "(":
            return self._parse_compound(value)
        return Const(Symbol(value, CONSTANT))

    def _parse_compound(self, functor: str):
        self._expect("(")
        args = [self.parse_term()]
        while self._peek()[1] == ",":
            self._next()
            args.append(self.parse_term())
        self._expect(")")
        return Compound(Symbol(functor, "function"), tuple(args))

    def _parse_list(self):
        if self._peek()[1] == "]":
            self._next()
            return NIL
        items = [self.parse_term()]
        while self._peek()[1] == ",":
            self._next()
            items.append(self.parse_term())
        tail = NIL
        if self._peek()[1] == "|":
            self._next()
            tail = self.parse_term()
        self._expect("]")
        out = tail
        for item in reversed(items):
            out = Compound(LIST_FUNCTOR, (item, out))
        return out

    # -- atoms and clauses ----------------------------------------------------

    def parse_atom(self):
        kind, value, line, col = self._next()
        if kind != "ident":
            raise ClauseSyntaxError(f"expected an atom, found {value!r}",
                                    line, col)
        is_var = value[0].isupper() or value[0] == "_"
        if self.mode == "punch" and is_var and self._peek()[1] != "(":
            return Variable(value, THIRD, EXISTENTIAL)
        if is_var:
            pred = self._variable(value, predicate_position=True)
        else:
            pred = Symbol(value, PREDICATE)
        args: tuple = ()
        if self._peek()[1] == "(":
            self._next()
            parsed = [self.parse_term()]
            while self._peek()[1] == ",":
                self._next()
                parsed.append(self.parse_term())
            self._expect(")")
            args = tuple(parsed)
        if isinstance(pred, Variable) and not args and self.mode == "metarule":
            raise ClauseSyntaxError("second-order atom needs arguments",
                                    line, col)
        return Applied(pred, args)

    def parse_clause(self) -> Clause:
        head = self.parse_atom()
        body = []
        if self._peek()[1] == ":-":
            self._next()
            body.append(self.parse_atom())
            while self._peek()[1] == ",":
                self._next()
                body.append(self.parse_atom())
        self._expect(".")
        lits = [Literal(head, True)] + [Literal(b, False) for b in body]
        return Clause(tuple(lits))


def parse_term(text: str):
    return _Parser(tokenize(text)).parse_term()


def parse_atom(text: str, mode: str = "clause"):
    return _Parser(tokenize(text), mode).parse_atom()


def parse_clause(text: str, mode: str = "clause",
                 line_offset: int = 1) -> Clause:
    return _Parser(tokenize(text, line_offset), mode).parse_clause()


def parse_metarule(text: str, taxon_hint: str = "sort",
                   line_offset: int = 1) -> Metarule:
    mode = "punch" if taxon_hint == "punch" else "metarule"
    return Metarule(parse_clause(text, mode, line_offset))


def parse_program(text: str, mode: str = "clause") -> List[Clause]:
    tokens = tokenize(text)
    parser = _Parser(tokens, mode)
    clauses = []
    while not parser.at_end():
        clauses.append(parser.parse_clause())
    return clauses


# ---------------------------------------------------------------------------
# Printing


def _list_parts(t) -> Optional[Tuple[list, object]]:
    items = []
    while isinstance(t, Compound) and t.functor == LIST_FUNCTOR \
            and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    if not items:
        return None
    return items, t


def format_term(t, var_names=None) -> str:
    var_names = var_names or {}
    if isinstance(t, Variable):
        return var_names.get(t, t.name)
    if isinstance(t, Const):
        return t.symbol.name
    parts = _list_parts(t)
    if parts:
        items, tail = parts
        inner = ",".join(format_term(i, var_names) for i in items)
        if tail == NIL:
            return f"[{inner}]"
        return f"[{inner}|{format_term(tail, var_names)}]"
    args = ",".join(format_term(a, var_names) for a in t.args)
    return f"{t.functor.name}({args})"


def format_atom(a, var_names=None) -> str:
    var_names = var_names or {}
    if isinstance(a, Variable):
        return var_names.get(a, a.name)
    name = a.pred.name if isinstance(a.pred, Symbol) \
        else var_names.get(a.pred, a.pred.name)
    if not a.args:
        return name
    return f"{name}({','.join(format_term(t, var_names) for t in a.args)})"


def format_clause(c: Clause, var_names=None) -> str:
    var_names = var_names if var_names is not None else friendly_names(c)
    head = next(l for l in c.literals if l.positive)
    body = [l for l in c.literals if not l.positive]
    text = format_atom(head.atom, var_names)
    if body:
        text += " :- " + ", ".join(format_atom(l.atom, var_names)
                                   for l in body)
    return text + "."


_SECOND_LETTERS = ["P", "Q", "R", "S", "T", "U", "V", "W"]
_UNIV_LETTERS = ["x", "y", "z", "u", "v", "w", "s", "t"]
_EXIST_LETTERS = ["X", "Y", "Z", "U", "V", "W"]


def friendly_names(target) -> dict:
    """Readable display names assigned by first occurrence: P,Q,R.. for
    second/third order, x,y,z.. for universal and X,Y,Z.. for existential
    first-order variables; first-order clauses use A,B,C style."""
    from .terms import FIRST_ORDER, clause_variables, classify

    c = target.clause if isinstance(target, Metarule) else target
    names: dict = {}
    counters = {"second": 0, "univ": 0, "exist": 0, "fo": 0}
    first_order = classify(c) == FIRST_ORDER

    def assign(v: Variable):
        if v in names:
            return
        if first_order:
            n = counters["fo"]
            counters["fo"] += 1
            pool = ["A", "B", "C", "D", "E", "F", "G", "H"]
            names[v] = pool[n] if n < len(pool) else f"V{n}"
        elif v.order in (SECOND, THIRD):
            n = counters["second"]
            counters["second"] += 1
            names[v] = _SECOND_LETTERS[n] if n < len(_SECOND_LETTERS) \
                else f"P{n}"
        elif v.quantifier == UNIVERSAL:
            n = counters["univ"]
            counters["univ"] += 1
            names[v] = _UNIV_LETTERS[n] if n < len(_UNIV_LETTERS) else f"x{n}"
        else:
            n = counters["exist"]
            counters["exist"] += 1
            names[v] = _EXIST_LETTERS[n] if n < len(_EXIST_LETTERS) \
                else f"X{n}"

    for v in clause_variables(c):
        assign(v)
    return names


def format_metarule(m: Metarule, show_name: bool = True) -> str:
    """Quantified one-line rendering, e.g.
    (Chain) ∃.P,Q,R ∀.x,y,z: P(x,y)←Q(x,z),R(z,y)"""
    names = friendly_names(m)
    existential = [names[v] for v in m.variables()
                   if v.quantifier == EXISTENTIAL]
    universal = [names[v] for v in m.variables()
                 if v.quantifier == UNIVERSAL]
    parts = []
    if show_name and m.name:
        parts.append(f"({m.name})")
    if existential:
        parts.append("∃." + ",".join(existential))
    if universal:
        parts.append("∀." + ",".join(universal))
    head = format_atom(m.head.atom, names)
    body = ",".join(format_atom(l.atom, names) for l in m.body)
    rule = head + ("←" + body if body else "")
    return " ".join(parts) + ": " + rule
