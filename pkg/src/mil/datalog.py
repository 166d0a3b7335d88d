"""Exact ground entailment for function-free programs.

A naive bottom-up fixpoint over the program's constants: cheap, complete and
budget-free for the datalog fragment, which is what learned hypotheses and
their evaluation queries live in whenever no list terms are around.  Programs
outside the fragment fall back to SLD resolution at the call sites.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .terms import (Applied, Clause, Const, Literal, Symbol, Variable,
                    atom_is_ground)


def _datalog_atom(a) -> bool:
    return (isinstance(a, Applied) and isinstance(a.pred, Symbol)
            and all(isinstance(t, (Const, Variable)) for t in a.args))


def is_datalog_program(clauses: Iterable[Clause]) -> bool:
    """Function-free definite clauses whose facts are ground."""
    for c in clauses:
        if not c.is_definite():
            return False
        for lit in c.literals:
            if not _datalog_atom(lit.atom):
                return False
        if not c.body and not atom_is_ground(c.head.atom):
            return False
    return True


def _match(pattern: Applied, fact: Applied, env: dict) -> Optional[dict]:
    if pattern.pred != fact.pred or len(pattern.args) != len(fact.args):
        return None
    out = env
    copied = False
    for p, f in zip(pattern.args, fact.args):
        if isinstance(p, Variable):
            bound = out.get(p)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[p] = f
            elif bound != f:
                return None
        elif p != f:
            return None
    return out


def _instantiate(a: Applied, env: dict) -> Applied:
    return Applied(a.pred, tuple(env.get(t, t) if isinstance(t, Variable)
                                 else t for t in a.args))


def bottom_up_consequences(clauses: Iterable[Clause],
                           max_rounds: int = 10_000,
                           supports: Optional[dict] = None) -> Set[Applied]:
    """All ground atoms entailed by a function-free definite program.  When
    `supports` is given it records, per derived atom, one (clause, body
    facts) justification."""
    facts: Set[Applied] = set()
    by_pred: Dict[Tuple[str, int], List[Applied]] = {}
    rules: List[Clause] = []

    def add_fact(f: Applied, why=None) -> None:
        if f in facts:
            return
        facts.add(f)
        by_pred.setdefault((f.pred.name, f.arity), []).append(f)
        if supports is not None and why is not None:
            supports[f] = why

    for c in clauses:
        if c.body:
            rules.append(c)
        else:
            add_fact(c.head.atom)

    def join(body, i, env):
        if i == len(body):
            yield env
            return
        pat = _instantiate(body[i].atom, env)
        if atom_is_ground(pat):
            if pat in facts:
                yield from join(body, i + 1, env)
            return
        for f in by_pred.get((pat.pred.name, pat.arity), []):
            got = _match(pat, f, env)
            if got is not None:
                yield from join(body, i + 1, got)

    for _ in range(max_rounds):
        new: List[Tuple[Applied, tuple]] = []
        for rule in rules:
            for env in join(rule.body, 0, {}):
                head = _instantiate(rule.head.atom, env)
                if atom_is_ground(head) and head not in facts:
                    body_facts = tuple(_instantiate(l.atom, env)
                                       for l in rule.body)
                    new.append((head, (rule, body_facts)))
        if not new:
            return facts
        for f, why in new:
            add_fact(f, why)
    raise RuntimeError("bottom-up evaluation did not reach a fixpoint")


class GroundOracle:
    """Entailment of ground atoms against a fixed program, answered by one
    bottom-up evaluation when the program is function-free and by SLD
    otherwise."""

    def __init__(self, clauses: Iterable[Clause], cfg=None):
        from .resolution import DEFAULT_CONFIG, ClauseStore

        self.clauses = tuple(clauses)
        self.cfg = cfg or DEFAULT_CONFIG
        self._datalog = is_datalog_program(self.clauses)
        self._facts: Optional[Set[Applied]] = None
        self._supports: dict = {}
        self._store: Optional[ClauseStore] = None

    @property
    def exact(self) -> bool:
        return self._datalog

    def _evaluate(self):
        if self._facts is None:
            self._facts = bottom_up_consequences(self.clauses,
                                                 supports=self._supports)

    def entails(self, atom: Applied) -> Optional[bool]:
        if self._datalog:
            self._evaluate()
            return atom in self._facts
        from .resolution import ClauseStore, entails

        if self._store is None:
            self._store = ClauseStore(self.clauses)
        return entails(self._store, atom, self.cfg)

    def support_clauses(self, atom: Applied) -> Set[Clause]:
        """Clauses taking part in one derivation of the atom (datalog path
        only; empty set when the atom is not entailed)."""
        if not self._datalog:
            raise RuntimeError("support tracing needs the datalog path")
        self._evaluate()
        if atom not in self._facts:
            return set()
        used: Set[Clause] = set()
        stack = [atom]
        seen = set()
        while stack:
            f = stack.pop()
            if f in seen:
                continue
            seen.add(f)
            why = self._supports.get(f)
            if why is None:
                continue
            rule, body_facts = why
            used.add(rule)
            stack.extend(body_facts)
        return used

    def blame(self, atom: Applied, false_atoms: Set[Applied]) -> Set[Clause]:
        """The rules that manufacture falsehood in the atom's derivation:
        walk the recorded derivation through premises known to be false and
        blame the rule applications whose premises are all unobjectionable
        (datalog path only)."""
        if not self._datalog:
            raise RuntimeError("blame tracing needs the datalog path")
        self._evaluate()
        if atom not in self._facts:
            return set()
        memo: dict = {}

        def walk(f: Applied) -> Set[Clause]:
            if f in memo:
                return memo[f]
            memo[f] = set()  # cycle guard; supports are acyclic anyway
            why = self._supports.get(f)
            if why is None:
                return set()  # a base fact cannot be blamed on a rule
            rule, body_facts = why
            out: Set[Clause] = set()
            for b in body_facts:
                if b in false_atoms:
                    out |= walk(b)
            if not out:
                out = {rule}
            memo[f] = out
            return out

        return walk(atom)
