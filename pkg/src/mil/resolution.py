"""Unification and depth-bounded SLD resolution.

The engine works directly on clauses whose predicate positions may hold
second-order variables; unifying those positions against head symbols is
mechanically the same as resolving the encapsulated first-order program, so
metarules can sit in a program next to ordinary clauses.

Engine instances are single-threaded; a shared immutable program can back any
number of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .terms import (Applied, Atom, Clause, Compound, Const, Literal, Symbol,
                    Term, Variable, rename_apart)


@dataclass(frozen=True, slots=True)
class ProofConfig:
    """Budgets for one query: `max_depth` bounds resolution steps along a
    derivation, `max_inferences` bounds total steps over the whole search.
    `loop_check` prunes derivations that repeat an identical ground subgoal
    along one branch; such a derivation always has a shorter loop-free
    counterpart with the same answer, so no answers are lost."""

    max_depth: int = 128
    max_inferences: int = 2_000_000
    occurs_check: bool = True
    loop_check: bool = True

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_inferences < self.max_depth:
            raise ValueError("max_inferences must be >= max_depth")


DEFAULT_CONFIG = ProofConfig()


class BudgetStop(Exception):
    """Internal signal: the inference budget ran out mid-search."""


class Budget:
    __slots__ = ("limit", "used", "hit", "depth_cut")

    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0
        self.hit = False
        self.depth_cut = False

    def step(self):
        self.used += 1
        if self.used > self.limit:
            self.hit = True
            raise BudgetStop()


class SlicedBudget(Budget):
    """A budget split into equal slices, one per independent piece of work;
    a slice running dry stops only its own piece, the global limit stops
    everything.  `hit` reports the global limit only."""

    __slots__ = ("slice_limit", "slice_used")

    def __init__(self, limit: int, slices: int):
        super().__init__(limit)
        self.slice_limit = max(1, limit // max(1, slices))
        self.slice_used = 0

    def new_slice(self):
        self.slice_used = 0

    def step(self):
        self.used += 1
        self.slice_used += 1
        if self.used > self.limit:
            self.hit = True
            raise BudgetStop()
        if self.slice_used > self.slice_limit:
            raise BudgetStop()


# ---------------------------------------------------------------------------
# Bindings and unification

Value = Union[Term, Symbol, Applied]


def walk(x, bindings: Dict[Variable, Value]):
    while isinstance(x, Variable):
        nxt = bindings.get(x)
        if nxt is None:
            return x
        x = nxt
    return x


def _occurs(v: Variable, t, bindings) -> bool:
    t = walk(t, bindings)
    if t is v:
        return True
    if isinstance(t, Compound):
        return any(_occurs(v, a, bindings) for a in t.args)
    if isinstance(t, Applied):
        if isinstance(t.pred, Variable) and _occurs(v, t.pred, bindings):
            return True
        return any(_occurs(v, a, bindings) for a in t.args)
    return False


def _bind(v: Variable, value, bindings, trail) -> bool:
    bindings[v] = value
    trail.append(v)
    return True


def unify_terms(a, b, bindings, trail, occurs_check=True) -> bool:
    a = walk(a, bindings)
    b = walk(b, bindings)
    if a is b:
        return True
    if isinstance(a, Variable):
        if occurs_check and _occurs(a, b, bindings):
            return False
        return _bind(a, b, bindings, trail)
    if isinstance(b, Variable):
        if occurs_check and _occurs(b, a, bindings):
            return False
        return _bind(b, a, bindings, trail)
    if isinstance(a, Const) and isinstance(b, Const):
        return a.symbol == b.symbol
    if isinstance(a, Compound) and isinstance(b, Compound):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return False
        return all(unify_terms(x, y, bindings, trail, occurs_check)
                   for x, y in zip(a.args, b.args))
    if isinstance(a, Symbol) and isinstance(b, Symbol):
        return a == b
    return False


def unify_atoms(a: Atom, b: Atom, bindings, trail, occurs_check=True) -> bool:
    a = walk(a, bindings) if isinstance(a, Variable) else a
    b = walk(b, bindings) if isinstance(b, Variable) else b
    if isinstance(a, Variable):
        if occurs_check and _occurs(a, b, bindings):
            return False
        return _bind(a, b, bindings, trail)
    if isinstance(b, Variable):
        if occurs_check and _occurs(b, a, bindings):
            return False
        return _bind(b, a, bindings, trail)
    if len(a.args) != len(b.args):
        return False
    if not unify_terms(a.pred, b.pred, bindings, trail, occurs_check):
        return False
    return all(unify_terms(x, y, bindings, trail, occurs_check)
               for x, y in zip(a.args, b.args))


def undo(trail: list, mark: int, bindings: dict):
    while len(trail) > mark:
        del bindings[trail.pop()]


def resolve(x, bindings: dict):
    """Fully dereference a term or atom through a raw bindings dict."""
    x = walk(x, bindings)
    if isinstance(x, Compound):
        return Compound(x.functor, tuple(resolve(a, bindings)
                                         for a in x.args))
    if isinstance(x, Applied):
        p = walk(x.pred, bindings) if isinstance(x.pred, Variable) else x.pred
        return Applied(p, tuple(resolve(a, bindings) for a in x.args))
    return x


class Bindings:
    """An immutable most-general-unifier in triangular form."""

    __slots__ = ("_map",)

    def __init__(self, mapping=None):
        self._map = dict(mapping) if mapping else {}

    def __len__(self):
        return len(self._map)

    def __iter__(self):
        return iter(self._map)

    def __contains__(self, v):
        return v in self._map

    def __getitem__(self, v):
        return self._map[v]

    def items(self):
        return self._map.items()

    def walk(self, x):
        return walk(x, self._map)

    def resolve(self, x):
        """Fully dereference a term or atom through the bindings."""
        return resolve(x, self._map)

    def restrict(self, variables) -> "Bindings":
        return Bindings({v: self.resolve(v) for v in variables
                         if self.walk(v) is not v or v in self._map})

    def __eq__(self, other):
        return isinstance(other, Bindings) and self._map == other._map

    def __repr__(self):
        items = ", ".join(f"{v}/{self.resolve(v)}" for v in self._map)
        return "{" + items + "}"


def unify(a, b, start: Optional[Bindings] = None,
          occurs_check: bool = True) -> Optional[Bindings]:
    """Most general unifier of two atoms or terms, extending `start`.
    Returns None on failure."""
    bindings = dict(start.items()) if start else {}
    trail: list = []
    atoms = isinstance(a, (Applied,)) or isinstance(b, (Applied,)) or (
        isinstance(a, Variable) and a.order == "third") or (
        isinstance(b, Variable) and b.order == "third")
    ok = unify_atoms(a, b, bindings, trail, occurs_check) if atoms \
        else unify_terms(a, b, bindings, trail, occurs_check)
    return Bindings(bindings) if ok else None


# ---------------------------------------------------------------------------
# Program store


class ClauseStore:
    """An ordered definite program indexed by head symbol, arity and (for
    ground-headed clauses) first argument.  Clauses with a variable in head
    predicate position (metarules) are indexed by arity only.
    `mark`/`shrink` scope temporary additions."""

    def __init__(self, clauses: Iterable[Clause] = ()):
        self.clauses: List[Clause] = []
        self.is_ground_fact: List[bool] = []
        self.grown: List[bool] = []
        self._by_pred: Dict[Tuple[str, int], List[int]] = {}
        # (name, arity) -> {ground-first-arg: [idx]} plus a residue list of
        # clause indices whose head first argument is not ground
        self._first_arg: Dict[Tuple[str, int], Dict] = {}
        self._residue: Dict[Tuple[str, int], List[int]] = {}
        self._by_arity: Dict[int, List[int]] = {}
        for c in clauses:
            self.add(c)

    def add(self, c: Clause, grown: bool = False) -> None:
        if not c.is_definite():
            raise ValueError(f"not definite: {c}")
        head = c.head.atom
        if isinstance(head, Variable):
            raise ValueError("punch clauses cannot enter a program")
        from .terms import atom_is_ground, term_is_ground

        idx = len(self.clauses)
        self.clauses.append(c)
        self.grown.append(grown)
        self.is_ground_fact.append(not c.body and atom_is_ground(head))
        arity = head.arity
        self._by_arity.setdefault(arity, []).append(idx)
        if isinstance(head.pred, Symbol):
            key = (head.pred.name, arity)
            self._by_pred.setdefault(key, []).append(idx)
            if head.args and term_is_ground(head.args[0]):
                self._first_arg.setdefault(key, {}) \
                    .setdefault(head.args[0], []).append(idx)
            else:
                self._residue.setdefault(key, []).append(idx)

    def extend(self, clauses: Iterable[Clause], grown: bool = False) -> None:
        for c in clauses:
            self.add(c, grown=grown)

    def mark(self) -> int:
        return len(self.clauses)

    def shrink(self, mark: int) -> None:
        while len(self.clauses) > mark:
            c = self.clauses.pop()
            self.is_ground_fact.pop()
            self.grown.pop()
            head = c.head.atom
            self._by_arity[head.arity].pop()
            if isinstance(head.pred, Symbol):
                from .terms import term_is_ground

                key = (head.pred.name, head.arity)
                self._by_pred[key].pop()
                if head.args and term_is_ground(head.args[0]):
                    bucket = self._first_arg[key][head.args[0]]
                    bucket.pop()
                    if not bucket:
                        del self._first_arg[key][head.args[0]]
                else:
                    self._residue[key].pop()

    def candidates(self, goal: Applied, bindings) -> List[int]:
        p = goal.pred
        if isinstance(p, Variable):
            p = walk(p, bindings)
        arity = goal.arity
        if not isinstance(p, Symbol):
            return self._by_arity.get(arity, [])
        key = (p.name, arity)
        sym_hits = self._by_pred.get(key, [])
        var_hits = [i for i in self._by_arity.get(arity, [])
                    if isinstance(self.clauses[i].head.atom.pred, Variable)]
        if sym_hits and goal.args:
            first = walk(goal.args[0], bindings)
            if not isinstance(first, Variable):
                from .terms import term_is_ground

                resolved = Bindings(bindings).resolve(first)
                if term_is_ground(resolved):
                    sym_hits = self._first_arg.get(key, {}) \
                        .get(resolved, []) + self._residue.get(key, [])
                    if len(sym_hits) > 1:
                        sym_hits = sorted(sym_hits)
        if not var_hits:
            return sym_hits
        return sorted(sym_hits + var_hits)

    def without_fact(self, fact: Clause) -> "ClauseStore":
        out = ClauseStore()
        for i, c in enumerate(self.clauses):
            if c != fact:
                out.add(c, grown=self.grown[i])
        return out

    def head_symbols(self) -> List[Tuple[Symbol, int]]:
        """Distinct (symbol, arity) pairs of clause heads, first-seen order."""
        seen = []
        for c in self.clauses:
            head = c.head.atom
            if isinstance(head.pred, Symbol):
                key = (head.pred, head.arity)
                if key not in seen:
                    seen.append(key)
        return seen

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)


# ---------------------------------------------------------------------------
# SLD search


class GrownTracker:
    """Counts, along the current derivation, resolutions against clauses
    marked grown; zero at an answer means the proof stands on the original
    program alone."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0


def solve(goals: Tuple[Applied, ...], store: ClauseStore, bindings: dict,
          trail: list, depth: int, cfg: ProofConfig, budget: Budget,
          tracker: Optional[GrownTracker] = None) -> Iterator[int]:
    """Depth-first SLD over a goal list (leftmost selection, program order).
    Yields once per refutation; bindings hold the answer while suspended.
    Raises BudgetStop when the inference budget runs out."""
    items = tuple((g, frozenset()) for g in goals)
    yield from _solve_items(items, store, bindings, trail, depth, cfg,
                            budget, tracker)


def _solve_items(items, store: ClauseStore, bindings: dict, trail: list,
                 depth: int, cfg: ProofConfig, budget: Budget,
                 tracker: Optional[GrownTracker] = None) -> Iterator[int]:
    # each pending goal carries the set of ground ancestor goals on its
    # branch, for the loop check
    if not items:
        yield depth
        return
    if depth >= cfg.max_depth:
        budget.depth_cut = True
        return
    (goal, ancestors), rest = items[0], items[1:]
    child_anc = ancestors
    if cfg.loop_check:
        resolved = resolve(goal, bindings)
        from .terms import atom_is_ground

        if atom_is_ground(resolved):
            if resolved in ancestors:
                return
            child_anc = ancestors | {resolved}
    for idx in store.candidates(goal, bindings):
        budget.step()
        marked = tracker is not None and store.grown[idx]
        if marked:
            tracker.count += 1
        try:
            if store.is_ground_fact[idx]:
                # ground facts resolve in place, no renaming needed
                mark = len(trail)
                try:
                    if unify_atoms(goal, store.clauses[idx].head.atom,
                                   bindings, trail, cfg.occurs_check):
                        yield from _solve_items(rest, store, bindings,
                                                trail, depth + 1, cfg,
                                                budget, tracker)
                finally:
                    undo(trail, mark, bindings)
                continue
            clause = rename_apart(store.clauses[idx])
            mark = len(trail)
            try:
                if unify_atoms(goal, clause.head.atom, bindings, trail,
                               cfg.occurs_check):
                    body = tuple((l.atom, child_anc) for l in clause.body)
                    yield from _solve_items(body + rest, store, bindings,
                                            trail, depth + 1, cfg, budget,
                                            tracker)
            finally:
                undo(trail, mark, bindings)
        finally:
            if marked:
                tracker.count -= 1


class AnswerStream:
    """Iterator over refutation answers.  After exhaustion,
    `budget_exceeded` tells a cut-off search apart from a completed one and
    `inferences` reports the steps spent."""

    def __init__(self, gen, budget: Budget):
        self._gen = gen
        self._budget = budget
        self.done = False

    @property
    def budget_exceeded(self) -> bool:
        return self._budget.hit

    @property
    def depth_cut(self) -> bool:
        return self._budget.depth_cut

    @property
    def inferences(self) -> int:
        return self._budget.used

    def __iter__(self):
        return self

    def __next__(self):
        if self.done:
            raise StopIteration
        try:
            return next(self._gen)
        except (StopIteration, BudgetStop):
            self.done = True
            raise StopIteration from None


def sld_refute(goal: Iterable[Literal], program, cfg: ProofConfig
               = DEFAULT_CONFIG) -> AnswerStream:
    """Refute a goal (negative literals) against a definite program, yielding
    one Bindings per refutation, in clause order."""
    goal = tuple(goal)
    for lit in goal:
        if lit.positive:
            raise ValueError("goal literals must be negative")
    store = program if isinstance(program, ClauseStore) \
        else ClauseStore(program)
    atoms = tuple(l.atom for l in goal)
    goal_vars = []
    for a in atoms:
        from .terms import atom_variables

        for v in atom_variables(a):
            if v not in goal_vars:
                goal_vars.append(v)
    budget = Budget(cfg.max_inferences)

    def run():
        bindings: dict = {}
        trail: list = []
        for _ in solve(atoms, store, bindings, trail, 0, cfg, budget):
            yield Bindings(bindings).restrict(goal_vars)

    return AnswerStream(run(), budget)


def entails(program, ground_atom: Applied,
            cfg: ProofConfig = DEFAULT_CONFIG) -> Optional[bool]:
    """True if the program proves the ground atom, False if the search space
    is exhausted without a proof, None if the budget ran out first."""
    from .terms import atom_is_ground

    if not atom_is_ground(ground_atom):
        raise ValueError("entails needs a ground atom")
    stream = sld_refute([Literal(ground_atom, False)], program, cfg)
    for _ in stream:
        return True
    if stream.budget_exceeded or stream.depth_cut:
        return None
    return False
