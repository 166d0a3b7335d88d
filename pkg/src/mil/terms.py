"""Symbolic substrate: terms, atoms, literals, clauses and metarules.

Everything here is immutable and hashable, so values can be shared freely
across threads and used as dict keys.  Variables carry their own order
(first/second/third) and quantifier, which makes the quantification map of a
metarule implicit in its clause.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

# Variable orders
FIRST = "first"
SECOND = "second"
THIRD = "third"

# Quantifiers
UNIVERSAL = "universal"
EXISTENTIAL = "existential"

# Symbol kinds
PREDICATE = "predicate"
FUNCTION = "function"
CONSTANT = "constant"

# Metarule taxa
PUNCH = "punch"
MATRIX = "matrix"
SORT = "sort"
FIRST_ORDER = "first_order"


class IllFormedError(ValueError):
    """Raised when a clause or metarule violates a structural invariant."""


@dataclass(frozen=True, slots=True)
class Symbol:
    """A predicate, function or constant symbol."""

    name: str
    kind: str = CONSTANT

    def __post_init__(self):
        if not self.name:
            raise IllFormedError("symbol name must be nonempty")

    def __repr__(self):
        return f"Symbol({self.name!r}, {self.kind!r})"

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Variable:
    """A variable quantified over constants (first order), predicate symbols
    (second order) or atoms (third order)."""

    name: str
    order: str = FIRST
    quantifier: str = UNIVERSAL

    def __repr__(self):
        q = "E" if self.quantifier == EXISTENTIAL else "A"
        return f"Variable({self.name!r}, {self.order}, {q})"

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    """A constant term wrapping a symbol."""

    symbol: Symbol

    def __str__(self):
        return self.symbol.name


@dataclass(frozen=True, slots=True)
class Compound:
    """A functional term F(t1, ..., tn) with n >= 1."""

    functor: Symbol
    args: tuple

    def __post_init__(self):
        if not self.args:
            raise IllFormedError("compound terms need at least one argument")

    def __str__(self):
        from .syntax import format_term

        return format_term(self)


Term = Union[Variable, Const, Compound]


@dataclass(frozen=True, slots=True)
class Applied:
    """An applied atom P(t1, ..., tn); P is a symbol or a second-order
    variable."""

    pred: Union[Symbol, Variable]
    args: tuple = ()

    def __post_init__(self):
        if isinstance(self.pred, Variable) and self.pred.order != SECOND:
            raise IllFormedError("applied atoms take second-order variables")

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self):
        from .syntax import format_atom

        return format_atom(self)


# A third-order variable stands for a whole atom, so an Atom is either an
# application or such a variable.
Atom = Union[Applied, Variable]


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __post_init__(self):
        if isinstance(self.atom, Variable) and self.atom.order != THIRD:
            raise IllFormedError("only third-order variables can be literals")

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def __str__(self):
        s = str(self.atom)
        return s if self.positive else "¬" + s


@dataclass(frozen=True, slots=True)
class Clause:
    """A clause, stored as the sequence of literals it was built from.

    Duplicate literals are retained; set semantics is applied only by the
    operations whose definitions require it (connectivity, subsumption).
    """

    literals: tuple

    def __post_init__(self):
        if not self.literals:
            raise IllFormedError("empty clause")

    @property
    def head(self) -> Literal:
        pos = [l for l in self.literals if l.positive]
        if len(pos) != 1:
            raise IllFormedError("not definite")
        return pos[0]

    @property
    def body(self) -> tuple:
        return tuple(l for l in self.literals if not l.positive)

    def is_definite(self) -> bool:
        return sum(1 for l in self.literals if l.positive) == 1

    def __str__(self):
        from .syntax import format_clause

        return format_clause(self)


def clause(head: Atom, body: Sequence[Atom] = ()) -> Clause:
    """Build a definite clause from a head atom and body atoms."""
    lits = [Literal(head, True)] + [Literal(b, False) for b in body]
    return Clause(tuple(lits))


def const(name: str) -> Const:
    return Const(Symbol(name, CONSTANT))


def pred(name: str) -> Symbol:
    return Symbol(name, PREDICATE)


# Fresh-variable supply shared by renaming and generalisation.
_counter = itertools.count(1)


def fresh_var(order: str = FIRST, quantifier: str = UNIVERSAL,
              stem: str = "_V") -> Variable:
    return Variable(f"{stem}{next(_counter)}", order, quantifier)


# ---------------------------------------------------------------------------
# Traversals


def term_variables(t: Term) -> Iterator[Variable]:
    if isinstance(t, Variable):
        yield t
    elif isinstance(t, Compound):
        for a in t.args:
            yield from term_variables(a)


def atom_variables(a: Atom) -> Iterator[Variable]:
    if isinstance(a, Variable):
        yield a
        return
    if isinstance(a.pred, Variable):
        yield a.pred
    for t in a.args:
        yield from term_variables(t)


def clause_variables(c: Clause) -> Iterator[Variable]:
    seen = set()
    for lit in c.literals:
        for v in atom_variables(lit.atom):
            if v not in seen:
                seen.add(v)
                yield v


def term_is_ground(t: Term) -> bool:
    return not any(True for _ in term_variables(t))


def atom_is_ground(a: Atom) -> bool:
    return not any(True for _ in atom_variables(a))


def first_order_terms(a: Atom) -> Iterator[Term]:
    """The argument terms of an atom (the first-order subterms that
    connectivity is judged on)."""
    if isinstance(a, Applied):
        yield from a.args


# ---------------------------------------------------------------------------
# The total literal ordering


def _term_key(t: Term):
    if isinstance(t, Variable):
        return (0, t.name)
    if isinstance(t, Const):
        return (1, t.symbol.name)
    return (2, t.functor.name, tuple(_term_key(a) for a in t.args))


def _literal_key(lit: Literal):
    a = lit.atom
    if isinstance(a, Variable):
        return (a.name, 0, ())
    name = a.pred.name
    return (name, a.arity, tuple(_term_key(t) for t in a.args))


def order_literals(c: Clause) -> tuple:
    """Order a definite clause: head first, then body literals sorted by
    predicate or variable name, ties broken by ascending arity (argument
    structure breaks any remaining ties, keeping the order total)."""
    if not c.is_definite():
        raise IllFormedError("not definite")
    head = c.head
    body = sorted(c.body, key=_literal_key)
    return (head,) + tuple(body)


def ordered_clause(c: Clause) -> Clause:
    return Clause(order_literals(c))


# ---------------------------------------------------------------------------
# Metarules


@dataclass(frozen=True, slots=True)
class Metarule:
    """A clause together with its taxon; quantification lives on the
    variables themselves."""

    clause: Clause
    name: Optional[str] = None
    taxon: str = field(init=False, default="")

    def __post_init__(self):
        object.__setattr__(self, "taxon", _classify_clause(self.clause))

    @property
    def head(self) -> Literal:
        return self.clause.head

    @property
    def body(self) -> tuple:
        return self.clause.body

    def __len__(self):
        return len(self.clause.literals)

    def variables(self) -> tuple:
        return tuple(clause_variables(self.clause))

    def existential_variables(self) -> tuple:
        return tuple(v for v in clause_variables(self.clause)
                     if v.quantifier == EXISTENTIAL)

    def universal_variables(self) -> tuple:
        return tuple(v for v in clause_variables(self.clause)
                     if v.quantifier == UNIVERSAL)

    def __str__(self):
        from .syntax import format_metarule

        return format_metarule(self)


def _classify_clause(c: Clause) -> str:
    if not c.is_definite():
        raise IllFormedError("not definite")
    atom_vars = sum(1 for l in c.literals if isinstance(l.atom, Variable))
    if atom_vars:
        if atom_vars != len(c.literals):
            raise IllFormedError("ill-formed metarule")
        return PUNCH
    second = any(isinstance(l.atom.pred, Variable) for l in c.literals)
    if not second:
        return FIRST_ORDER
    # shared = some variable occurring in two distinct literals
    for i, li in enumerate(c.literals):
        vi = set(atom_variables(li.atom))
        for lj in c.literals[i + 1:]:
            if vi & set(atom_variables(lj.atom)):
                return SORT
    return MATRIX


def classify(m: Union[Metarule, Clause]) -> str:
    """Taxon of a metarule or clause: punch, matrix, sort or first_order."""
    c = m.clause if isinstance(m, Metarule) else m
    return _classify_clause(c)


def metarule(head: Atom, body: Sequence[Atom] = (),
             name: Optional[str] = None) -> Metarule:
    return Metarule(clause(head, body), name=name)


# ---------------------------------------------------------------------------
# Substitution application


class MetaSubstitution:
    """Paired bindings: theta for universally quantified variables, Theta for
    existentially quantified ones (the capital-letter substitution)."""

    __slots__ = ("theta", "Theta")

    def __init__(self, theta: Mapping = (), Theta: Mapping = ()):
        self.theta = dict(theta)
        self.Theta = dict(Theta)
        overlap = set(self.theta) & set(self.Theta)
        if overlap:
            raise IllFormedError(f"bindings overlap on {overlap}")
        for v, t in self.theta.items():
            if v.quantifier != UNIVERSAL:
                raise IllFormedError(f"{v} is not universal")
            _check_binding(v, t)
        for v, t in self.Theta.items():
            if v.quantifier != EXISTENTIAL:
                raise IllFormedError(f"{v} is not existential")
            _check_binding(v, t)

    def mapping(self) -> dict:
        m = dict(self.theta)
        m.update(self.Theta)
        return m

    def is_empty(self) -> bool:
        return not self.theta and not self.Theta

    def __eq__(self, other):
        return (isinstance(other, MetaSubstitution)
                and self.theta == other.theta and self.Theta == other.Theta)

    def __repr__(self):
        items = [f"{v}/{t}" for v, t in self.mapping().items()]
        return "{" + ", ".join(items) + "}"


def _check_binding(v: Variable, t) -> None:
    if v.order == FIRST:
        if not isinstance(t, (Variable, Const, Compound)):
            raise IllFormedError(f"first-order {v} bound to {t!r}")
        if isinstance(t, Variable) and t.order != FIRST:
            raise IllFormedError(f"first-order {v} bound to {t!r}")
    elif v.order == SECOND:
        if not (isinstance(t, Symbol)
                or (isinstance(t, Variable) and t.order == SECOND)):
            raise IllFormedError(f"second-order {v} bound to {t!r}")
    else:
        if not (isinstance(t, Applied)
                or (isinstance(t, Variable) and t.order == THIRD)):
            raise IllFormedError(f"third-order {v} must bind an atom")


def subst_term(t: Term, m: Mapping) -> Term:
    if isinstance(t, Variable):
        return m.get(t, t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(subst_term(a, m) for a in t.args))
    return t


def subst_atom(a: Atom, m: Mapping) -> Atom:
    if isinstance(a, Variable):
        got = m.get(a, a)
        if isinstance(got, (Applied, Variable)):
            return got
        raise IllFormedError(f"third-order {a} bound to non-atom {got!r}")
    p = a.pred
    if isinstance(p, Variable):
        p = m.get(p, p)
    return Applied(p, tuple(subst_term(t, m) for t in a.args))


def apply(target, ms: Union[MetaSubstitution, Mapping]):
    """Apply a meta/substitution simultaneously; unbound variables are left
    untouched.  Accepts a clause, metarule, atom or term."""
    m = ms.mapping() if isinstance(ms, MetaSubstitution) else dict(ms)
    if isinstance(m, dict):
        for v, t in m.items():
            _check_binding(v, t)
    if isinstance(target, Metarule):
        return Metarule(apply(target.clause, m), name=target.name)
    if isinstance(target, Clause):
        return Clause(tuple(Literal(subst_atom(l.atom, m), l.positive)
                            for l in target.literals))
    if isinstance(target, (Applied,)):
        return subst_atom(target, m)
    if isinstance(target, Variable):
        if target.order == THIRD:
            return subst_atom(target, m)
        return subst_term(target, m)
    return subst_term(target, m)


# ---------------------------------------------------------------------------
# Connectivity (fully-connected check)


def fully_connected(m: Union[Metarule, Clause]) -> bool:
    """True iff every literal occurs exactly once and the graph whose edges
    join literals sharing a first-order term is connected."""
    c = m.clause if isinstance(m, Metarule) else m
    taxon = _classify_clause(c)
    if taxon == PUNCH:
        raise IllFormedError("order too high")
    lits = c.literals
    if len(set(lits)) != len(lits):
        return False
    if len(lits) == 1:
        return True
    termsets = []
    for l in lits:
        ts = set()
        for t in first_order_terms(l.atom):
            ts.add(t)
            ts.update(term_variables(t))
        termsets.append(ts)
    # union-find over literals
    parent = list(range(len(lits)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(lits)):
        for j in range(i + 1, len(lits)):
            if termsets[i] & termsets[j]:
                parent[find(i)] = find(j)
    return len({find(i) for i in range(len(lits))}) == 1


# ---------------------------------------------------------------------------
# Canonical form


_CANON_STEMS = {
    (SECOND, EXISTENTIAL): "P",
    (FIRST, UNIVERSAL): "x",
    (FIRST, EXISTENTIAL): "X",
    (THIRD, EXISTENTIAL): "A",
    # A universally quantified second/third order variable never occurs in
    # metarules in scope, but renaming must still be total.
    (SECOND, UNIVERSAL): "F",
    (THIRD, UNIVERSAL): "B",
}


def _rename_sequence(lits: Sequence[Literal]) -> tuple:
    """Rename variables by first occurrence along the literal sequence, using
    the fixed canonical scheme (P0.., x0.., X0.., A0..)."""
    mapping: dict = {}
    counters: dict = {}

    def canon(v: Variable) -> Variable:
        if v not in mapping:
            stem = _CANON_STEMS[(v.order, v.quantifier)]
            n = counters.get(stem, 0)
            counters[stem] = n + 1
            mapping[v] = Variable(f"{stem}{n}", v.order, v.quantifier)
        return mapping[v]

    def rterm(t: Term) -> Term:
        if isinstance(t, Variable):
            return canon(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(rterm(a) for a in t.args))
        return t

    out = []
    for l in lits:
        a = l.atom
        if isinstance(a, Variable):
            out.append(Literal(canon(a), l.positive))
        else:
            p = canon(a.pred) if isinstance(a.pred, Variable) else a.pred
            out.append(Literal(Applied(p, tuple(rterm(t) for t in a.args)),
                               l.positive))
    return tuple(out)


def _lit_struct_key(lit: Literal):
    a = lit.atom
    if isinstance(a, Variable):
        return (0, a.name, ())
    name = a.pred.name if isinstance(a.pred, Symbol) else a.pred.name
    tag = 1 if isinstance(a.pred, Symbol) else 2
    return (tag, name, tuple(_term_key(t) for t in a.args))


@lru_cache(maxsize=16384)
def _canonical_clause(c: Clause) -> Clause:
    # The positive literal leads; the body keeps its stored order.  Metarule
    # identity is order-sensitive: renaming the variables of
    # P(x,y) <- Q(x,z),R(z,y) can never turn it into P(x,y) <- Q(z,y),R(x,z),
    # which is a distinct metarule even though the literal sets coincide
    # after swapping Q and R.
    if c.is_definite():
        lits = (c.head,) + c.body
    else:
        lits = c.literals
    return Clause(_rename_sequence(lits))


def canonical_form(m: Union[Metarule, Clause]):
    """Canonical alpha-renaming: variables take the fixed scheme (P0.., x0..,
    X0.., A0..) by first occurrence along the head-first literal sequence.
    Two metarules are alpha-equivalent iff their canonical forms are
    identical (same type back out)."""
    if isinstance(m, Metarule):
        return Metarule(_canonical_clause(m.clause), name=m.name)
    return _canonical_clause(m)


def canonical_key(m: Union[Metarule, Clause]) -> Clause:
    """Hashable identity of a metarule or clause modulo variable renaming."""
    c = m.clause if isinstance(m, Metarule) else m
    return _canonical_clause(c)


def alpha_equivalent(a, b) -> bool:
    return canonical_key(a) == canonical_key(b)


# ---------------------------------------------------------------------------
# Encapsulation

ENCAPSULATION_SYMBOL = "m"


def _encap_term(t) -> Term:
    if isinstance(t, Symbol):
        return Const(t)
    return t


def encapsulate(m: Union[Metarule, Clause],
                symbol: str = ENCAPSULATION_SYMBOL) -> Clause:
    """Map each literal S(t1..tn) to m(S, t1..tn); predicate symbols become
    constants and the quantified predicate variables become plain first-order
    variables of the encapsulated clause."""
    c = m.clause if isinstance(m, Metarule) else m
    if _classify_clause(c) == PUNCH:
        raise IllFormedError("cannot encapsulate a punch metarule")
    esym = Symbol(symbol, PREDICATE)
    out = []
    for l in c.literals:
        a = l.atom
        if isinstance(a.pred, Symbol) and a.pred.name == symbol:
            raise IllFormedError(
                f"object-level use of reserved symbol {symbol!r}")
        p = a.pred
        if isinstance(p, Variable):
            p = Variable(p.name, FIRST, UNIVERSAL)
        else:
            p = Const(p)
        args = []
        for t in a.args:
            if isinstance(t, Variable) and t.quantifier == EXISTENTIAL:
                args.append(Variable(t.name, FIRST, UNIVERSAL))
            else:
                args.append(t)
        out.append(Literal(Applied(esym, (p, *args)), l.positive))
    return Clause(tuple(out))


def decapsulate(c: Clause, signature: Mapping,
                symbol: str = ENCAPSULATION_SYMBOL) -> Metarule:
    """Invert encapsulation.  `signature` maps variable names back to their
    original quantified variables and predicate-position constants back to
    predicate symbols (unlisted ones default to first-order universal and
    plain predicate symbols)."""
    out = []
    for l in c.literals:
        a = l.atom
        if not (isinstance(a, Applied) and isinstance(a.pred, Symbol)
                and a.pred.name == symbol and a.args):
            raise IllFormedError("not an encapsulated clause")
        pterm, *args = a.args
        if isinstance(pterm, Variable):
            p = signature.get(pterm.name,
                              Variable(pterm.name, SECOND, EXISTENTIAL))
        elif isinstance(pterm, Const):
            p = Symbol(pterm.symbol.name, PREDICATE)
        else:
            raise IllFormedError("malformed predicate position")
        new_args = []
        for t in args:
            if isinstance(t, Variable):
                new_args.append(signature.get(t.name, t))
            else:
                new_args.append(t)
        out.append(Literal(Applied(p, tuple(new_args)), l.positive))
    return Metarule(Clause(tuple(out)))


def metarule_signature(m: Metarule) -> dict:
    """The name -> variable map that lets decapsulate invert encapsulate."""
    return {v.name: v for v in clause_variables(m.clause)}


# ---------------------------------------------------------------------------
# Renaming apart (fresh copies for resolution)


def rename_apart(target, suffix: Optional[str] = None):
    """Fresh copy of a clause or metarule with all variables renamed."""
    c = target.clause if isinstance(target, Metarule) else target
    tag = suffix if suffix is not None else str(next(_counter))
    mapping = {v: Variable(f"{v.name}_{tag}", v.order, v.quantifier)
               for v in clause_variables(c)}
    renamed = apply(c, mapping)
    if isinstance(target, Metarule):
        return Metarule(renamed, name=target.name)
    return renamed
