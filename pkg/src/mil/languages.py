"""Metarule language descriptors, cardinality bounds and brute-force
enumerators.

Bounds are computed in exact rational arithmetic (fractions.Fraction), so
tests can compare enumerations against them without float artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Iterator, List, Optional, Sequence, Set, Tuple, Union

from .terms import (EXISTENTIAL, FIRST, MATRIX, SECOND, SORT, UNIVERSAL,
                    Applied, Clause, Literal, Metarule, Variable,
                    canonical_form, canonical_key, classify, fresh_var)

ENUMERATION_GUARD = 10 ** 6


class EnumerationGuardError(ValueError):
    def __init__(self, projected: int):
        super().__init__(
            f"projected enumeration of {projected} items exceeds the "
            f"{ENUMERATION_GUARD} guard")
        self.projected = projected


@dataclass(frozen=True)
class Interval:
    """An inclusive interval of natural numbers."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValueError("empty interval")

    def __contains__(self, x: int) -> bool:
        return self.lo <= x <= self.hi

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))


AritySpec = Union[int, Interval, Sequence[int], None]


@dataclass(frozen=True)
class LanguageDescriptor:
    """Names a metarule language by literal count and literal arities; either
    may be a single number or an inclusive Interval, and arities may also be
    a per-literal sequence (under the total literal ordering) or absent."""

    literal_count: Union[int, Interval]
    arities: AritySpec = None

    def __post_init__(self):
        if isinstance(self.literal_count, int):
            if self.literal_count < 1:
                raise ValueError("literal_count must be >= 1")
        elif self.literal_count.lo < 1:
            raise ValueError("literal_count must be >= 1")
        if isinstance(self.arities, (list, tuple)):
            if not isinstance(self.literal_count, int) \
                    or len(self.arities) != self.literal_count:
                raise ValueError("arity sequence length must equal the "
                                 "literal count")
            object.__setattr__(self, "arities", tuple(self.arities))

    def _count_ok(self, n: int) -> bool:
        if isinstance(self.literal_count, int):
            return n == self.literal_count
        return n in self.literal_count

    def _arity_ok(self, position: int, arity: int) -> bool:
        if self.arities is None:
            return True
        if isinstance(self.arities, int):
            return arity == self.arities
        if isinstance(self.arities, Interval):
            return arity in self.arities
        return position < len(self.arities) \
            and arity == self.arities[position]

    def matches(self, m: Union[Metarule, Clause]) -> bool:
        from .terms import order_literals

        c = m.clause if isinstance(m, Metarule) else m
        lits = order_literals(c)
        if not self._count_ok(len(lits)):
            return False
        for i, lit in enumerate(lits):
            if isinstance(lit.atom, Variable):
                continue  # punch literals carry no arity
            if not self._arity_ok(i, lit.atom.arity):
                return False
        return True


# The language of datalog metarules with at most two body literals of arity
# at most two; its fully-connected sort members are the user-facing kind.
H22 = LanguageDescriptor(literal_count=Interval(1, 3), arities=Interval(0, 2))


@dataclass(frozen=True)
class CountParams:
    """Parameters of the cardinality bounds: k = max literals per clause,
    a = matrix atom set size, n = variables per sort metarule, p = predicate
    symbols, c = constants."""

    k: int
    a: int
    n: int
    p: int
    c: int

    def __post_init__(self):
        for name in ("k", "a", "n", "p", "c"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


# ---------------------------------------------------------------------------
# Counting formulas


def punch_count(k: int) -> int:
    """Number of punch metarules of length 1..k (an equality, not a bound)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return k


def matrix_count_exact(k: int, a: int) -> int:
    """Exact number of length-k matrix metarules over an atom set of size a:
    k choices of head times the k-subsets of atoms; zero when a < k because
    matrix literals must be distinct atoms."""
    if a < k:
        return 0
    return k * comb(a, k)


def matrix_bound(k: int, a: int) -> Fraction:
    return Fraction(k * a ** k, factorial(k))


def sort_bound(n: int) -> Fraction:
    """Upper bound on sort metarules with n variable occurrences,
    (2n-1)^n / n!."""
    return Fraction((2 * n - 1) ** n, factorial(n))


def metasub_bound(p: int, c: int, k: int, n: int) -> int:
    return p ** k * c ** n


def metasub_exact(h: int, b: int, c: int, k: int, e: int) -> int:
    """Exact metasubstitution count: h head symbols, b body symbols, e
    existential variables of which k are second-order."""
    if e < k:
        raise ValueError("a length-k sort metarule has k second-order "
                         "existential variables")
    return h * b ** (k - 1) * c ** (e - k)


def ground_bound(c: int, n: int) -> int:
    return c ** n


def ground_exact(c: int, u: int) -> int:
    return c ** u


def language_bound(params: CountParams) -> Fraction:
    """Upper bound on the vl-specialisations of punch metarules of length up
    to k: the sum over i of i a^i (2n-1)^n p^i c^(2n) / (i! n!)."""
    k, a, n, p, c = params.k, params.a, params.n, params.p, params.c
    total = Fraction(0)
    for i in range(1, k + 1):
        total += Fraction(
            i * a ** i * (2 * n - 1) ** n * p ** i * c ** (2 * n),
            factorial(i) * factorial(n))
    return total


def render_bound(x, digits: int = 4) -> str:
    """Decimal rendering of an exact rational bound."""
    if isinstance(x, int):
        return str(x)
    f = Fraction(x)
    if f.denominator == 1:
        return str(f.numerator)
    text = f"{float(f):.{digits}f}".rstrip("0").rstrip(".")
    return text


# ---------------------------------------------------------------------------
# Enumerators (the oracles behind the bounds)


def set_partitions(items: Sequence) -> Iterator[List[List]]:
    """All partitions of a sequence into nonempty blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def _arity_assignments(k: int, spec: AritySpec) -> Iterator[Tuple[int, ...]]:
    import itertools

    if isinstance(spec, int):
        yield (spec,) * k
    elif isinstance(spec, Interval):
        yield from itertools.product(tuple(spec), repeat=k)
    elif spec is None:
        raise ValueError("an arity specification is required")
    else:
        seq = tuple(spec)
        if len(seq) != k:
            raise ValueError("arity sequence length must equal k")
        yield seq


def enumerate_matrix(k: int, arity_spec: AritySpec) -> Set[Metarule]:
    """All length-k matrix metarules with the given literal arities,
    deduplicated by canonical form."""
    if isinstance(arity_spec, Interval):
        projected = len(tuple(arity_spec)) ** k
    else:
        projected = 1
    if projected > ENUMERATION_GUARD:
        raise EnumerationGuardError(projected)
    out = {}
    for arities in _arity_assignments(k, arity_spec):
        lits = []
        for i, ar in enumerate(arities):
            pvar = fresh_var(SECOND, EXISTENTIAL, stem="_e")
            args = tuple(fresh_var(FIRST, UNIVERSAL, stem="_e")
                         for _ in range(ar))
            lits.append(Literal(Applied(pvar, args), positive=(i == 0)))
        m = canonical_form(Metarule(Clause(tuple(lits))))
        out[canonical_key(m)] = m
    return set(out.values())


def _first_order_positions(c: Clause) -> List[Tuple[int, int]]:
    positions = []
    for i, lit in enumerate(c.literals):
        for j, t in enumerate(lit.atom.args):
            if not isinstance(t, Variable) or t.order != FIRST:
                raise ValueError("matrix metarule arguments must be "
                                 "first-order variables")
            positions.append((i, j))
    return positions


def enumerate_sort(m: Metarule) -> Set[Metarule]:
    """All sort metarules of m's shape (same length and arities): choose
    which variable positions share a variable, and each first-order block's
    quantifier, then keep the clauses with at least one shared variable.
    Every member is subsumed by m."""
    if classify(m) != MATRIX:
        raise ValueError("enumerate_sort expects a matrix metarule")
    c = m.clause
    fo = _first_order_positions(c)
    so = list(range(len(c.literals)))
    projected = bell_number(len(fo)) * 2 ** len(fo) * bell_number(len(so))
    if projected > ENUMERATION_GUARD:
        raise EnumerationGuardError(projected)
    out = {}
    for fo_part in set_partitions(fo):
        for quant_bits in range(2 ** len(fo_part)):
            fo_map = {}
            for bi, block in enumerate(fo_part):
                q = UNIVERSAL if (quant_bits >> bi) & 1 == 0 else EXISTENTIAL
                v = Variable(f"_s{bi}", FIRST, q)
                for pos in block:
                    fo_map[pos] = v
            for so_part in set_partitions(so):
                so_map = {}
                for bi, block in enumerate(so_part):
                    v = Variable(f"_p{bi}", SECOND, EXISTENTIAL)
                    for li in block:
                        so_map[li] = v
                lits = []
                for i, lit in enumerate(c.literals):
                    args = tuple(fo_map[(i, j)]
                                 for j in range(len(lit.atom.args)))
                    lits.append(Literal(Applied(so_map[i], args),
                                        lit.positive))
                built = Metarule(Clause(tuple(lits)))
                if built.taxon != SORT:
                    continue
                key = canonical_key(built)
                if key not in out:
                    out[key] = canonical_form(built)
    return set(out.values())
