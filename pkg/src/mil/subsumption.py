"""Generality ordering between metarules and clauses.

Subsumption here extends theta-subsumption to quantified metarule variables:
C subsumes D when some meta/substitution of C's variables makes C's literal
set a subset of D's.  The search is plain exhaustive backtracking over
literal-to-literal matchings, which is complete and fast for the clause
lengths in scope (at most six literals).
"""

from __future__ import annotations

from typing import Iterator, Optional, Union

from .terms import (EXISTENTIAL, FIRST, MATRIX, PUNCH, SECOND, SORT, THIRD,
                    UNIVERSAL, Applied, Clause, Compound, Const, Literal,
                    MetaSubstitution, Metarule, Symbol, Variable, apply,
                    canonical_key, clause_variables, fresh_var, rename_apart)


def _clause_of(x: Union[Metarule, Clause]) -> Clause:
    return x.clause if isinstance(x, Metarule) else x


# -- one-way matching: left-hand variables bind, right-hand structure is rigid


def _match_term(ct, dt, mapping: dict) -> Optional[dict]:
    if isinstance(ct, Variable):
        if ct in mapping:
            return mapping if mapping[ct] == dt else None
        if isinstance(dt, Symbol) or isinstance(dt, Applied):
            return None
        out = dict(mapping)
        out[ct] = dt
        return out
    if isinstance(ct, Const):
        return mapping if ct == dt else None
    if isinstance(ct, Compound):
        if not isinstance(dt, Compound) or ct.functor != dt.functor \
                or len(ct.args) != len(dt.args):
            return None
        for a, b in zip(ct.args, dt.args):
            mapping = _match_term(a, b, mapping)
            if mapping is None:
                return None
        return mapping
    return None


def _match_pred(cp, dp, mapping: dict) -> Optional[dict]:
    if isinstance(cp, Variable):
        if cp in mapping:
            return mapping if mapping[cp] == dp else None
        if not (isinstance(dp, Symbol)
                or (isinstance(dp, Variable) and dp.order == SECOND)):
            return None
        out = dict(mapping)
        out[cp] = dp
        return out
    return mapping if cp == dp else None


def _match_literal(cl: Literal, dl: Literal, mapping: dict) -> Optional[dict]:
    if cl.positive != dl.positive:
        return None
    ca, da = cl.atom, dl.atom
    if isinstance(ca, Variable):  # third-order variable takes the whole atom
        if ca in mapping:
            return mapping if mapping[ca] == da else None
        out = dict(mapping)
        out[ca] = da
        return out
    if isinstance(da, Variable):
        return None
    if len(ca.args) != len(da.args):
        return None
    mapping = _match_pred(ca.pred, da.pred, mapping)
    if mapping is None:
        return None
    for a, b in zip(ca.args, da.args):
        mapping = _match_term(a, b, mapping)
        if mapping is None:
            return None
    return mapping


def _search(c_lits, d_lits, i: int, mapping: dict) -> Iterator[dict]:
    if i == len(c_lits):
        yield mapping
        return
    for dl in d_lits:
        got = _match_literal(c_lits[i], dl, mapping)
        if got is not None:
            yield from _search(c_lits, d_lits, i + 1, got)


def _split(mapping: dict) -> MetaSubstitution:
    theta = {v: t for v, t in mapping.items() if v.quantifier == UNIVERSAL}
    Theta = {v: t for v, t in mapping.items() if v.quantifier == EXISTENTIAL}
    return MetaSubstitution(theta, Theta)


def subsumption_witnesses(c, d) -> Iterator[MetaSubstitution]:
    """Every meta/substitution ms with apply(c, ms) a subset of d's literals,
    over c's own variables (c is renamed apart internally, so c and d may
    share names)."""
    cc, dc = _clause_of(c), _clause_of(d)
    fresh = rename_apart(cc)
    back = dict(zip(clause_variables(fresh), clause_variables(cc)))
    for mapping in _search(fresh.literals, dc.literals, 0, {}):
        orig = {}
        for v, t in mapping.items():
            ov = back[v]
            if t == ov:
                continue  # identity bindings add nothing
            orig[ov] = t
        yield _split(orig)


def meta_subsumes(c, d) -> Optional[MetaSubstitution]:
    """A witnessing meta/substitution if c subsumes d, else None."""
    for w in subsumption_witnesses(c, d):
        return w
    return None


def subsumes(c, d) -> bool:
    return meta_subsumes(c, d) is not None


# ---------------------------------------------------------------------------
# Specialisation relations


def _distinct_literals(c: Clause) -> tuple:
    seen = []
    for l in c.literals:
        if l not in seen:
            seen.append(l)
    return tuple(seen)


def _set_key(c: Clause):
    return canonical_key(Clause(_distinct_literals(c)))


def is_v_spec(m1, m2) -> bool:
    """True when some meta/substitution of m1 equals m2 (literal sets,
    compared up to variable renaming)."""
    c1, c2 = _clause_of(m1), _clause_of(m2)
    target = _set_key(c2)
    for w in subsumption_witnesses(c1, c2):
        if _set_key(apply(c1, w)) == target:
            return True
    return False


def _renaming_witnesses(c_lits, d_lits, i, mapping, used) -> Iterator[dict]:
    # like _search but bindings must form an injective variable renaming
    if i == len(c_lits):
        yield mapping
        return
    for dl in d_lits:
        got = _match_literal(c_lits[i], dl, mapping)
        if got is None:
            continue
        new = {v: t for v, t in got.items() if v not in mapping}
        ok = True
        values = set(used)
        for v, t in new.items():
            if not isinstance(t, (Variable,)) or t.order != v.order \
                    or t.quantifier != v.quantifier or t in values:
                ok = False
                break
            values.add(t)
        if ok:
            yield from _renaming_witnesses(c_lits, d_lits, i + 1, got, values)


def is_l_spec(m1, m2) -> bool:
    """True when m2 extends m1 with extra literals: some injective renaming
    of m1's variables maps its literal set into m2's."""
    c1, c2 = _clause_of(m1), _clause_of(m2)
    fresh = rename_apart(c1)
    for _ in _renaming_witnesses(fresh.literals, c2.literals, 0, {}, set()):
        return True
    return False


def is_vl_spec(m1, m2) -> bool:
    """True when the specialisation decomposes as a substitution step plus a
    literal-addition step, which is exactly subsumption."""
    return subsumes(m1, m2)


def residual_literals(m1, m2, ms: MetaSubstitution) -> tuple:
    """The literal set L with apply(m1, ms) union L = m2 (the literal-addition
    part of a subsumption witness)."""
    image = set(apply(_clause_of(m1), ms).literals)
    return tuple(l for l in _clause_of(m2).literals if l not in image)


# ---------------------------------------------------------------------------
# Generalisation up the taxonomy


def generalise_to_matrix(s: Union[Metarule, Clause]) -> Metarule:
    """Most-general metarule of the same shape: every variable occurrence is
    replaced by a new unique variable of the same order and quantification."""
    c = _clause_of(s)
    m = s if isinstance(s, Metarule) else Metarule(c)
    if m.taxon not in (SORT, MATRIX):
        raise ValueError(f"cannot generalise a {m.taxon} metarule to matrix")

    def fresh_term(t):
        if isinstance(t, Variable):
            return fresh_var(t.order, t.quantifier, stem="_m")
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(fresh_term(a) for a in t.args))
        return t

    lits = []
    for l in c.literals:
        a = l.atom
        p = fresh_var(SECOND, EXISTENTIAL, stem="_m") \
            if isinstance(a.pred, Variable) else a.pred
        lits.append(Literal(Applied(p, tuple(fresh_term(t) for t in a.args)),
                            l.positive))
    return Metarule(Clause(tuple(lits)))


def generalise_to_punch(m: Union[Metarule, Clause]) -> Metarule:
    """Replace each literal with a third-order variable; arities are
    forgotten."""
    c = _clause_of(m)
    mr = m if isinstance(m, Metarule) else Metarule(c)
    if mr.taxon not in (MATRIX, SORT):
        raise ValueError(f"cannot generalise a {mr.taxon} metarule to punch")
    lits = [Literal(fresh_var(THIRD, EXISTENTIAL, stem="_A"), l.positive)
            for l in c.literals]
    return Metarule(Clause(tuple(lits)))
