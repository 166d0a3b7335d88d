"""Learning first-order programs from examples, background knowledge and
sort metarules.

`construct` is the resolution-based clause construction operator: it unifies
a metarule head with a goal atom, proves the body literals left to right
against the growing program, and falls back to predicate invention (a fresh
symbol from the reserved pool plus a recursive construction for it) when a
body literal has no proof.  `top_program` assembles every constructed clause
that covers a positive example and then removes the clauses responsible for
covering negative ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .datalog import GroundOracle
from .resolution import (Budget, BudgetStop, Bindings, ClauseStore,
                         DEFAULT_CONFIG, GrownTracker, ProofConfig,
                         SlicedBudget, entails, resolve, solve, undo,
                         unify_atoms, walk)
from .terms import (EXISTENTIAL, FIRST, FIRST_ORDER, PREDICATE, SECOND, SORT,
                    Applied, Atom, Clause, Literal, MetaSubstitution,
                    Metarule, Symbol, Variable, apply, atom_is_ground,
                    canonical_key, clause_variables, fresh_var, rename_apart,
                    term_is_ground)


class InventionDepthError(RuntimeError):
    """Construction needed more invented symbols than the pool offers."""


def default_invented_pool(size: int = 8) -> Tuple[Symbol, ...]:
    return tuple(Symbol(f"${i}", PREDICATE) for i in range(1, size + 1))


@dataclass(frozen=True)
class MilProblem:
    """The learning problem: positive and negative ground examples,
    background definitions, metarules, the invented-symbol pool and the proof
    budget."""

    pos: Tuple[Applied, ...]
    neg: Tuple[Applied, ...] = ()
    bk: Tuple[Clause, ...] = ()
    metarules: Tuple[Metarule, ...] = ()
    invented: Tuple[Symbol, ...] = field(default_factory=default_invented_pool)
    config: ProofConfig = DEFAULT_CONFIG

    def __post_init__(self):
        for e in itertools.chain(self.pos, self.neg):
            if not atom_is_ground(e):
                raise ValueError(f"example {e} is not ground")
        if set(self.pos) & set(self.neg):
            raise ValueError("positive and negative examples overlap")
        for c in self.bk:
            if not c.is_definite():
                raise ValueError(f"background clause {c} is not definite")

    def b_star(self) -> ClauseStore:
        """The extended background B* = B union E+ (examples as facts)."""
        store = ClauseStore(self.bk)
        for e in self.pos:
            store.add(Clause((Literal(e, True),)))
        return store

    def target_arities(self) -> List[Tuple[Symbol, int]]:
        seen: List[Tuple[Symbol, int]] = []
        for e in self.pos:
            key = (e.pred, e.arity)
            if key not in seen:
                seen.append(key)
        return seen


@dataclass(frozen=True)
class Hypothesis:
    """A learned program plus, for each clause, the metarule and
    metasubstitution it instantiates.  `inferences` counts the resolution
    steps spent constructing clauses, a machine-independent cost measure."""

    clauses: Tuple[Clause, ...]
    provenance: Dict[Clause, Tuple[Metarule, MetaSubstitution]] \
        = field(default_factory=dict, compare=False)
    budget_events: Tuple[Tuple[Applied, str], ...] = field(
        default=(), compare=False)
    inferences: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.clauses)

    def is_empty(self) -> bool:
        return not self.clauses


# ---------------------------------------------------------------------------
# Clause construction (with predicate invention)


@dataclass
class _PathState:
    pool: Tuple[Symbol, ...]
    used: int = 0
    pool_dry_hits: int = 0
    # ground goals with no construction, keyed by program size and the
    # invention symbols left; avoids re-proving the same dead end
    failed_goals: Set = field(default_factory=set)


ConstructEntry = Tuple[Metarule, MetaSubstitution, Clause]


def _metarule_theta(m_fresh: Metarule, back: Dict[Variable, Variable],
                    bindings: dict) -> Optional[MetaSubstitution]:
    """Extract the ground metasubstitution of the renamed metarule's
    existential variables, expressed over the original metarule's
    variables.  None when any existential is unbound or non-ground."""
    Theta = {}
    for v in clause_variables(m_fresh.clause):
        if v.quantifier != EXISTENTIAL:
            continue
        val = walk(v, bindings)
        if isinstance(val, Variable):
            return None
        if v.order == SECOND:
            if not isinstance(val, Symbol):
                return None
        elif v.order == FIRST:
            val = resolve(val, bindings)
            if not term_is_ground(val):
                return None
        Theta[back[v]] = val
    return MetaSubstitution({}, Theta)


def _instance_clause(m: Metarule, theta: MetaSubstitution) -> Clause:
    """The first-order clause MTheta: existential variables replaced by
    their bindings, universal variables kept (renamed fresh)."""
    inst = apply(m.clause, theta)
    univ = {v: fresh_var(v.order, v.quantifier)
            for v in clause_variables(inst)}
    return apply(inst, univ)


def _fresh_metarule(m: Metarule):
    fresh = rename_apart(m)
    back = dict(zip(clause_variables(fresh.clause),
                    clause_variables(m.clause)))
    return fresh, back


def _construct_goal(goal: Applied, store: ClauseStore,
                    metarules: Sequence[Metarule], state: _PathState,
                    cfg: ProofConfig, budget: Budget, bindings: dict,
                    trail: list) -> Iterator[List[ConstructEntry]]:
    resolved = resolve(goal, bindings)
    key = None
    if atom_is_ground(resolved):
        key = (resolved, len(store.clauses), state.used)
        if key in state.failed_goals:
            return
    produced = False
    for m in metarules:
        for solution in _construct_one(m, goal, store, metarules, state,
                                       cfg, budget, bindings, trail):
            produced = True
            yield solution
    if key is not None and not produced:
        state.failed_goals.add(key)


def _construct_one(m: Metarule, goal: Applied, store: ClauseStore,
                   metarules: Sequence[Metarule], state: _PathState,
                   cfg: ProofConfig, budget: Budget, bindings: dict,
                   trail: list) -> Iterator[List[ConstructEntry]]:
    if m.taxon not in (SORT, FIRST_ORDER):
        return
    fresh, back = _fresh_metarule(m)
    mark = len(trail)
    try:
        if unify_atoms(fresh.head.atom, goal, bindings, trail,
                       cfg.occurs_check):
            yield from _construct_body(
                m, fresh, back, [l.atom for l in fresh.body], 0, [],
                store, metarules, state, cfg, budget, bindings, trail)
    finally:
        undo(trail, mark, bindings)


def _construct_body(m: Metarule, fresh: Metarule, back: dict,
                    body: List[Applied], i: int,
                    collected: List[ConstructEntry], store: ClauseStore,
                    metarules: Sequence[Metarule], state: _PathState,
                    cfg: ProofConfig, budget: Budget, bindings: dict,
                    trail: list) -> Iterator[List[ConstructEntry]]:
    if i == len(body):
        theta = _metarule_theta(fresh, back, bindings)
        if theta is not None:
            yield collected + [(m, theta, _instance_clause(m, theta))]
        return
    lit = body[i]
    # Enumerate distinct instantiations of the literal, not distinct
    # derivations: recursive clauses in the growing program can prove the
    # same instance many ways and only the bindings matter here.
    answers: List[Applied] = []
    answer_clean: Dict[Applied, bool] = {}
    tracker = GrownTracker()
    for _ in solve((lit,), store, bindings, trail, 0, cfg, budget, tracker):
        val = resolve(lit, bindings)
        clean = tracker.count == 0
        if val not in answer_clean:
            answer_clean[val] = clean
            answers.append(val)
        elif clean:
            answer_clean[val] = True
    for ans in answers:
        mark = len(trail)
        try:
            if unify_atoms(lit, ans, bindings, trail, cfg.occurs_check):
                yield from _construct_body(m, fresh, back, body, i + 1,
                                           collected, store, metarules,
                                           state, cfg, budget, bindings,
                                           trail)
        finally:
            undo(trail, mark, bindings)
    if answers and any(answer_clean.values()):
        return
    # The literal has no proof standing on the original program: invent a
    # predicate for it when its symbol position is still open, and construct
    # a definition recursively.
    pred = walk(lit.pred, bindings) if isinstance(lit.pred, Variable) \
        else lit.pred
    if not isinstance(pred, Variable):
        return
    if state.used >= len(state.pool):
        state.pool_dry_hits += 1
        return
    symbol = state.pool[state.used]
    state.used += 1
    mark = len(trail)
    try:
        bindings[pred] = symbol
        trail.append(pred)
        for sub in _construct_goal(lit, store, metarules, state, cfg,
                                   budget, bindings, trail):
            smark = store.mark()
            try:
                for _, _, cl in sub:
                    store.add(cl, grown=True)
                yield from _construct_body(m, fresh, back, body, i + 1,
                                           collected + sub, store, metarules,
                                           state, cfg, budget, bindings,
                                           trail)
            finally:
                store.shrink(smark)
    finally:
        undo(trail, mark, bindings)
        state.used -= 1


class ConstructStream:
    """Iterator over construction solutions (lists of provenance entries,
    invented definitions first, the goal clause last).  Raises
    InventionDepthError when the pool ran dry and nothing at all could be
    built; exposes `budget_exceeded` after exhaustion."""

    def __init__(self, gen, budget: Budget, state: _PathState):
        self._gen = gen
        self._budget = budget
        self._state = state
        self._yielded = 0
        self._done = False

    @property
    def budget_exceeded(self) -> bool:
        return self._budget.hit

    @property
    def inferences(self) -> int:
        return self._budget.used

    def __iter__(self):
        return self

    def __next__(self):
        if self._done:
            raise StopIteration
        try:
            item = next(self._gen)
        except StopIteration:
            self._done = True
            if not self._yielded and self._state.pool_dry_hits:
                raise InventionDepthError("invention depth exceeded") \
                    from None
            raise
        except BudgetStop:
            self._done = True
            raise StopIteration from None
        self._yielded += 1
        return item


def construct(e: Applied, b_star: ClauseStore,
              metarules: Sequence[Metarule],
              invented_pool: Sequence[Symbol] = (),
              seed_bindings: Optional[Bindings] = None,
              cfg: ProofConfig = DEFAULT_CONFIG) -> ConstructStream:
    """Stream of metarule instantiations whose head matches `e` and whose
    body is refutable against b_star (invented definitions included, solution
    by solution).  The example's own fact is left out of the program while it
    is being constructed for, so it cannot justify itself.  Solutions are
    deduplicated on their clause sets."""
    own_fact = Clause((Literal(e, True),))
    if any(c == own_fact for c in b_star):
        b_star = b_star.without_fact(own_fact)
    state = _PathState(tuple(invented_pool))
    rules = tuple(metarules)
    # every metarule gets an equal slice of the inference budget, so one
    # metarule's dead ends cannot starve the others
    budget = SlicedBudget(cfg.max_inferences, len(rules))
    bindings: dict = dict(seed_bindings.items()) if seed_bindings else {}

    def run():
        seen = set()
        trail: list = []
        for m in rules:
            budget.new_slice()
            try:
                for solution in _construct_one(m, e, b_star, rules, state,
                                               cfg, budget, bindings,
                                               trail):
                    key = frozenset(canonical_key(cl)
                                    for _, _, cl in solution)
                    if key in seen:
                        continue
                    seen.add(key)
                    yield solution
            except BudgetStop:
                if budget.hit:
                    raise
                # this metarule's slice ran out; move to the next one

    return ConstructStream(run(), budget, state)


# ---------------------------------------------------------------------------
# Top program construction


def _prove_participants(atom: Applied, store: ClauseStore,
                        cfg: ProofConfig) -> Optional[Set[Clause]]:
    """Clauses used in the first refutation of the atom, or None if there is
    none within budget."""
    budget = Budget(cfg.max_inferences)
    bindings: dict = {}
    trail: list = []

    def dfs(goals, depth, used):
        if not goals:
            yield set(used)
            return
        if depth >= cfg.max_depth:
            return
        goal, rest = goals[0], goals[1:]
        for idx in store.candidates(goal, bindings):
            budget.step()
            clause = store.clauses[idx]
            renamed = rename_apart(clause)
            mark = len(trail)
            try:
                if unify_atoms(goal, renamed.head.atom, bindings, trail,
                               cfg.occurs_check):
                    body = tuple(l.atom for l in renamed.body)
                    yield from dfs(body + rest, depth + 1, used + [clause])
            finally:
                undo(trail, mark, bindings)

    try:
        for used in dfs((atom,), 0, []):
            return used
    except BudgetStop:
        pass
    return None


def _tautology(c: Clause) -> bool:
    """Head atom repeated in the body: such instances prove nothing new and
    only feed resolution loops."""
    head = c.head.atom
    return any(l.atom == head for l in c.body)


MAX_GENERALISE_PASSES = 1


def top_program(problem: MilProblem,
                passes: int = MAX_GENERALISE_PASSES) -> Hypothesis:
    """Generalise: collect every constructed clause over all positive
    examples.  With an invention pool, clauses learned earlier stay visible
    to later constructions (recursive invented definitions need them),
    iterated to a fixpoint or the pass limit; without one this is plain top
    program construction against the fixed B*.  Specialise: drop the clauses
    whose removal un-proves some covered negative example, to a fixpoint."""
    cfg = problem.config
    store = problem.b_star()
    collected: Dict[Clause, Tuple[Metarule, MetaSubstitution]] = {}
    keys_seen: Set[Clause] = set()
    budget_events: List[Tuple[Applied, str]] = []
    total_inferences = 0
    growing = bool(problem.invented)

    for _ in range(passes if growing else 1):
        grew = False
        for e in problem.pos:
            stream = construct(e, store, problem.metarules, problem.invented,
                               cfg=cfg)
            fresh_clauses = []
            try:
                for solution in stream:
                    for m, theta, cl in solution:
                        if _tautology(cl):
                            continue
                        key = canonical_key(cl)
                        if key in keys_seen:
                            continue
                        keys_seen.add(key)
                        collected[cl] = (m, theta)
                        fresh_clauses.append(cl)
            except InventionDepthError:
                budget_events.append((e, "invention depth exceeded"))
            if stream.budget_exceeded:
                budget_events.append((e, "inference budget exhausted"))
            total_inferences += stream.inferences
            if fresh_clauses and growing:
                grew = True
                store.extend(fresh_clauses, grown=True)
        if not grew:
            break

    clauses = list(collected)
    bk = tuple(problem.bk)
    # specialise: drop every clause that covers a negative example on its
    # own, then attribute any coverage that needs several clauses
    if problem.neg and clauses:
        keep = []
        for c in clauses:
            single = GroundOracle(bk + (c,), cfg)
            if any(single.entails(en) is True for en in problem.neg):
                continue
            keep.append(c)
        clauses = keep
    neg_set = set(problem.neg)
    while clauses and problem.neg:
        oracle = GroundOracle(bk + tuple(clauses), cfg)
        covered = [en for en in problem.neg if oracle.entails(en) is True]
        if not covered:
            break
        hyp = set(clauses)
        removals: Set[Clause] = set()
        if oracle.exact:
            # attribute each covered negative to the rule applications that
            # derive a false atom from unobjectionable premises
            for en in covered:
                removals |= oracle.blame(en, neg_set) & hyp
            if not removals:
                for en in covered:
                    removals |= oracle.support_clauses(en) & hyp
        else:
            for en in covered:
                participants = _prove_participants(
                    en, ClauseStore(bk + tuple(clauses)), cfg) or set()
                candidates = [c for c in clauses if c in participants] \
                    or clauses
                culprits = [c for c in candidates
                            if GroundOracle(
                                bk + tuple(x for x in clauses
                                           if x is not c),
                                cfg).entails(en) is not True]
                if culprits:
                    removals.update(culprits)
                else:
                    removals.update(c for c in clauses if c in participants)
        if not removals:
            budget_events.append((covered[0], "unremovable negative"))
            break
        clauses = [c for c in clauses if c not in removals]

    return Hypothesis(tuple(clauses),
                      {c: collected[c] for c in clauses},
                      tuple(budget_events), total_inferences)


def accuracy(h: Hypothesis, bk: Sequence[Clause],
             test_pos: Sequence[Applied], test_neg: Sequence[Applied],
             cfg: ProofConfig = DEFAULT_CONFIG) -> float:
    """(TP + TN) / (|pos| + |neg|); the empty hypothesis scores all negatives
    as true negatives and no positives."""
    total = len(test_pos) + len(test_neg)
    if total == 0:
        return 0.0
    if h.is_empty():
        return len(test_neg) / total
    oracle = GroundOracle(tuple(bk) + tuple(h.clauses), cfg)
    tp = sum(1 for e in test_pos if oracle.entails(e) is True)
    tn = sum(1 for e in test_neg if oracle.entails(e) is not True)
    return (tp + tn) / total


def learn(problem: MilProblem) -> Hypothesis:
    return top_program(problem)
