"""Learning metarules by specialising maximally-general ones.

Matrix metarules (all variables distinct) are specialised by grounding their
literals against the extended background, left to right: each literal's
variables are first bound to constants already in the substitution buffer,
which keeps the growing instance connected, then the literal is resolved and
the buffer picks up the new constants.  A look-ahead prunes groundings that
can no longer become fully connected.  Punch metarules (third-order) are
first instantiated to matrix shapes at the arities observed in the problem
and then specialised the same way, minus the look-ahead.

A fully-connected ground instance is lifted back to a sort metarule by
replacing distinct ground terms with fresh variables, same term to same
variable everywhere.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .learner import MilProblem, construct
from .resolution import (Budget, BudgetStop, Bindings, ClauseStore,
                         DEFAULT_CONFIG, ProofConfig, solve, undo,
                         unify_atoms, unify_terms, walk)
from .terms import (EXISTENTIAL, FIRST, MATRIX, PUNCH, SECOND, SORT,
                    UNIVERSAL, Applied, Clause, Literal, MetaSubstitution,
                    Metarule, Symbol, Variable, apply, atom_is_ground,
                    canonical_form, canonical_key, clause_variables,
                    fresh_var, fully_connected, rename_apart, term_is_ground)


@dataclass(frozen=True)
class ToilConfig:
    """Over-generation controls: train on a sample of E+, cap the number of
    specialisations taken per input metarule per example, and optionally
    drop examples already covered by the last learned metarule."""

    sample_rate: float = 1.0
    max_specialisations: Optional[int] = 1
    cover_set: bool = True
    rng_seed: int = 0
    look_ahead: bool = True
    invention: bool = False

    def __post_init__(self):
        if not 0 < self.sample_rate <= 1:
            raise ValueError("sample_rate must be in (0, 1]")
        if self.max_specialisations is not None \
                and self.max_specialisations < 1:
            raise ValueError("max_specialisations must be >= 1")


class SubstitutionBuffer:
    """Counts, per ground term, how many metarule variables it substitutes.
    Entries with count one mark literals not yet connected to the rest."""

    def __init__(self):
        self.counts: Dict = {}
        self._trail: List = []

    def record(self, term) -> None:
        self.counts[term] = self.counts.get(term, 0) + 1
        self._trail.append(term)

    def mark(self) -> int:
        return len(self._trail)

    def rollback(self, mark: int) -> None:
        while len(self._trail) > mark:
            t = self._trail.pop()
            if self.counts[t] == 1:
                del self.counts[t]
            else:
                self.counts[t] -= 1

    def constants(self) -> List:
        return list(self.counts)

    def singletons(self) -> List:
        return [t for t, c in self.counts.items() if c == 1]

    def __repr__(self):
        inner = ", ".join(f"{t}↦{c}" for t, c in self.counts.items())
        return "{" + inner + "}"


def look_ahead(instance, buffer: SubstitutionBuffer) -> bool:
    """True if the partially ground instance can still come out fully
    connected: every buffer constant seen exactly once needs a free
    first-order variable left to absorb it.  `instance` may be the clause
    itself or just its count of free first-order variables."""
    if isinstance(instance, int):
        free = instance
    else:
        c = instance.clause if isinstance(instance, Metarule) else instance
        free = sum(1 for v in clause_variables(c) if v.order == FIRST)
    return len(buffer.singletons()) <= free


# ---------------------------------------------------------------------------
# Lift


def lift(ms: MetaSubstitution) -> MetaSubstitution:
    """Generalise a ground meta/substitution: distinct constants bound to
    universal variables become fresh universal variables, constants bound to
    existential first-order variables become fresh existential variables,
    predicate symbols become fresh second-order variables; the same ground
    term maps to the same fresh variable throughout."""
    for v, t in itertools.chain(ms.theta.items(), ms.Theta.items()):
        if isinstance(t, Variable) or (
                not isinstance(t, Symbol) and not term_is_ground(t)):
            raise ValueError("lift needs a fully ground meta/substitution")
    fresh: Dict = {}

    def target_for(v: Variable, t):
        if t not in fresh:
            if isinstance(t, Symbol):
                fresh[t] = fresh_var(SECOND, EXISTENTIAL, stem="_LP")
            elif v.quantifier == UNIVERSAL:
                fresh[t] = fresh_var(FIRST, UNIVERSAL, stem="_Lu")
            else:
                fresh[t] = fresh_var(FIRST, EXISTENTIAL, stem="_Lw")
        return fresh[t]

    theta = {v: target_for(v, t) for v, t in ms.theta.items()}
    Theta = {v: target_for(v, t) for v, t in ms.Theta.items()}
    return MetaSubstitution(theta, Theta)


# ---------------------------------------------------------------------------
# Matrix atoms for punch instantiation


def matrix_atoms(punch: Metarule, b_star: ClauseStore,
                 targets: Sequence[Tuple[Symbol, int]] = ()
                 ) -> Tuple[Applied, ...]:
    """One second-order atom of fresh variables per distinct head arity in
    the program (target-predicate arities first)."""
    if punch.taxon != PUNCH:
        raise ValueError("matrix_atoms expects a punch metarule")
    arities: List[int] = []
    for _, ar in targets:
        if ar not in arities:
            arities.append(ar)
    for _, ar in b_star.head_symbols():
        if ar not in arities:
            arities.append(ar)
    return tuple(
        Applied(fresh_var(SECOND, EXISTENTIAL, stem="_MA"),
                tuple(fresh_var(FIRST, UNIVERSAL, stem="_MA")
                      for _ in range(ar)))
        for ar in arities)


def _store_arities(b_star: ClauseStore, e: Applied) -> List[int]:
    arities = [e.arity]
    for _, ar in b_star.head_symbols():
        if ar not in arities:
            arities.append(ar)
    return arities


def _matrix_shape(head_arity: int, body_arities: Sequence[int]) -> Metarule:
    lits = [Literal(Applied(fresh_var(SECOND, EXISTENTIAL, stem="_F"),
                            tuple(fresh_var(FIRST, UNIVERSAL, stem="_F")
                                  for _ in range(head_arity))), True)]
    for ar in body_arities:
        lits.append(Literal(
            Applied(fresh_var(SECOND, EXISTENTIAL, stem="_F"),
                    tuple(fresh_var(FIRST, UNIVERSAL, stem="_F")
                          for _ in range(ar))), False))
    return Metarule(Clause(tuple(lits)))


# ---------------------------------------------------------------------------
# Specialisation proper


@dataclass(frozen=True)
class SpecialisationRecord:
    """One derived metarule with the evidence behind it: the input metarule,
    the matrix form it was instantiated to, the ground meta/substitution and
    ground clause found by resolution, and the lifted result."""

    source: Metarule
    matrix_form: Metarule
    ground_ms: MetaSubstitution
    ground_clause: Clause
    lifted_ms: MetaSubstitution
    metarule: Metarule


def _exclude_example(b_star: ClauseStore, e: Applied) -> ClauseStore:
    fact = Clause((Literal(e, True),))
    return ClauseStore(c for c in b_star if c != fact)


def _extract_ms(form: Metarule, bindings: dict) -> Optional[MetaSubstitution]:
    theta: Dict = {}
    Theta: Dict = {}
    resolver = Bindings(bindings)
    for v in clause_variables(form.clause):
        val = resolver.resolve(v)
        if isinstance(val, Variable):
            return None
        if v.order == FIRST and not term_is_ground(val):
            return None
        if v.order == SECOND and not isinstance(val, Symbol):
            return None
        if v.quantifier == UNIVERSAL:
            theta[v] = val
        else:
            Theta[v] = val
    return MetaSubstitution(theta, Theta)


def _specialise_form(source: Metarule, form: Metarule, e: Applied,
                     store: ClauseStore, cfg: ProofConfig, budget: Budget,
                     use_look_ahead: bool, invention: Sequence[Symbol]
                     ) -> Iterator[SpecialisationRecord]:
    bindings: dict = {}
    trail: List = []
    buffer = SubstitutionBuffer()
    if not unify_atoms(form.head.atom, e, bindings, trail, cfg.occurs_check):
        return
    resolver = Bindings(bindings)
    for t in form.head.atom.args:
        if isinstance(t, Variable):
            buffer.record(resolver.resolve(t))
    body = [l.atom for l in form.body]

    def finish() -> Iterator[SpecialisationRecord]:
        if buffer.singletons():
            # a constant substituting exactly one variable leaves a literal
            # dangling, whatever the connectivity graph says
            return
        ms = _extract_ms(form, bindings)
        if ms is None:
            return
        ground = apply(form.clause, ms)
        if not fully_connected(ground):
            return
        lifted_ms = lift(ms)
        lifted = Metarule(apply(form.clause, lifted_ms.mapping()))
        if lifted.taxon != SORT:
            return
        yield SpecialisationRecord(source, form, ms, ground, lifted_ms,
                                   canonical_form(lifted))

    def ground_literal(i: int) -> Iterator[SpecialisationRecord]:
        if i == len(body):
            yield from finish()
            return
        lit = body[i]
        lit_vars = [t for t in lit.args if isinstance(t, Variable)]
        remaining_free = sum(
            sum(1 for t in body[j].args if isinstance(t, Variable))
            for j in range(i + 1, len(body)))
        options = buffer.constants() + [None]
        found = False
        for assignment in itertools.product(options, repeat=len(lit_vars)):
            if lit_vars and all(a is None for a in assignment):
                continue  # literal must touch the instance built so far
            mark = len(trail)
            try:
                if not all(a is None
                           or unify_terms(v, a, bindings, trail,
                                          cfg.occurs_check)
                           for v, a in zip(lit_vars, assignment)):
                    continue
                for _ in solve((lit,), store, bindings, trail, 0, cfg,
                               budget):
                    res = Bindings(bindings)
                    values = [res.resolve(v) for v in lit_vars]
                    if any(isinstance(t, Variable) or not term_is_ground(t)
                           for t in values):
                        continue  # resolution left the literal open
                    found = True
                    bmark = buffer.mark()
                    try:
                        for t in values:
                            buffer.record(t)
                        if use_look_ahead \
                                and not look_ahead(remaining_free, buffer):
                            continue
                        yield from ground_literal(i + 1)
                    finally:
                        buffer.rollback(bmark)
            finally:
                undo(trail, mark, bindings)
        if not found and invention:
            yield from invent_for(i, lit, lit_vars)

    def invent_for(i, lit, lit_vars) -> Iterator[SpecialisationRecord]:
        # A body literal with no grounding gets a fresh invented symbol and
        # a recursive specialisation of its own; only fully pre-bound
        # instantiations are attempted, so the recursive goal is ground.
        pred = walk(lit.pred, bindings) if isinstance(lit.pred, Variable) \
            else lit.pred
        if not isinstance(pred, Variable):
            return
        symbol, rest = invention[0], invention[1:]
        for assignment in itertools.product(buffer.constants(),
                                            repeat=len(lit_vars)):
            mark = len(trail)
            try:
                if not all(unify_terms(v, a, bindings, trail,
                                       cfg.occurs_check)
                           for v, a in zip(lit_vars, assignment)):
                    continue
                bindings[pred] = symbol
                trail.append(pred)
                goal = Bindings(bindings).resolve(lit)
                if not atom_is_ground(goal):
                    continue
                for _ in _specialise_goal(source, goal, store, cfg, budget,
                                          use_look_ahead, rest):
                    # one witness definition justifies the literal; inner
                    # metarules are not emitted, only the outer result
                    bmark = buffer.mark()
                    try:
                        for t in assignment:
                            buffer.record(t)
                        yield from ground_literal(i + 1)
                    finally:
                        buffer.rollback(bmark)
                    break
            finally:
                undo(trail, mark, bindings)

    yield from ground_literal(0)


def _specialise_goal(source: Metarule, goal: Applied, store: ClauseStore,
                     cfg: ProofConfig, budget: Budget, use_look_ahead: bool,
                     invention: Sequence[Symbol]
                     ) -> Iterator[SpecialisationRecord]:
    if source.taxon == MATRIX:
        forms = [rename_apart(source)]
    else:
        arities = _store_arities(store, goal)
        forms = [_matrix_shape(goal.arity, combo)
                 for combo in itertools.product(arities,
                                                repeat=len(source) - 1)]
    for form in forms:
        yield from _specialise_form(source, form, goal, store, cfg, budget,
                                    use_look_ahead, invention)


def specialisation_records(e: Applied, b_star: ClauseStore,
                           metarules: Sequence[Metarule],
                           invented_pool: Sequence[Symbol] = (),
                           cfg: ProofConfig = DEFAULT_CONFIG,
                           look_ahead_on: bool = True,
                           invention: bool = False
                           ) -> Iterator[SpecialisationRecord]:
    """Specialise each input metarule against one positive example, yielding
    full evidence records, deduplicated on the lifted metarule.  The example
    itself is kept out of the program while it is being specialised."""
    if not atom_is_ground(e):
        raise ValueError("examples must be ground")
    store = _exclude_example(b_star, e)
    budget = Budget(cfg.max_inferences)
    seen: Set = set()
    pool = tuple(invented_pool) if invention else ()
    try:
        for m in metarules:
            if m.taxon not in (PUNCH, MATRIX):
                raise ValueError(f"cannot specialise a {m.taxon} metarule")
            use_la = look_ahead_on and m.taxon == MATRIX
            for rec in _specialise_goal(m, e, store, cfg, budget, use_la,
                                        pool):
                key = canonical_key(rec.metarule)
                if key in seen:
                    continue
                seen.add(key)
                yield rec
    except BudgetStop:
        return


def vl_specialise(e: Applied, b_star: ClauseStore,
                  metarules: Sequence[Metarule],
                  invented_pool: Sequence[Symbol] = (),
                  cfg: ProofConfig = DEFAULT_CONFIG,
                  look_ahead_on: bool = True,
                  invention: bool = False) -> Iterator[Metarule]:
    """Stream of fully-connected sort metarules specialising the given punch
    or matrix metarules so that some instance covers `e` against b_star."""
    for rec in specialisation_records(e, b_star, metarules, invented_pool,
                                      cfg, look_ahead_on, invention):
        yield rec.metarule


# ---------------------------------------------------------------------------
# The metarule learning loop


@dataclass(frozen=True)
class ToilResult:
    metarules: Tuple[Metarule, ...]
    sample: Tuple[Applied, ...]
    records: Tuple[SpecialisationRecord, ...] = field(compare=False,
                                                      default=())

    def __iter__(self):
        return iter(self.metarules)

    def __len__(self):
        return len(self.metarules)


def _covers(metarule: Metarule, e: Applied, problem: MilProblem,
            b_star: ClauseStore) -> bool:
    stream = construct(e, b_star, [metarule], problem.invented,
                       cfg=problem.config)
    try:
        for _ in stream:
            return True
    except Exception:
        return False
    return False


def toil_learn(problem: MilProblem,
               tcfg: ToilConfig = ToilConfig()) -> ToilResult:
    """Specialise the problem's punch or matrix metarules over a sample of
    the positive examples; outputs are deduplicated by canonical form."""
    rng = random.Random(tcfg.rng_seed)
    pos = list(problem.pos)
    if tcfg.sample_rate < 1.0 and pos:
        size = max(1, math.ceil(tcfg.sample_rate * len(pos)))
        sample = rng.sample(pos, size)
    else:
        sample = pos
    b_star = problem.b_star()
    learned: Dict = {}
    records: List[SpecialisationRecord] = []
    remaining = list(sample)
    while remaining:
        e = remaining.pop(0)
        for m in problem.metarules:
            taken = 0
            for rec in specialisation_records(
                    e, b_star, [m], problem.invented, problem.config,
                    tcfg.look_ahead, tcfg.invention):
                taken += 1
                key = canonical_key(rec.metarule)
                if key not in learned:
                    learned[key] = rec.metarule
                    records.append(rec)
                    if tcfg.cover_set:
                        remaining = [x for x in remaining
                                     if not _covers(rec.metarule, x,
                                                    problem, b_star)]
                if tcfg.max_specialisations is not None \
                        and taken >= tcfg.max_specialisations:
                    break
    return ToilResult(tuple(learned.values()), tuple(sample),
                      tuple(records))
