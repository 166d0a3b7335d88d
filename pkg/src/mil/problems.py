"""Problem files, built-in metarule libraries and dataset generators.

Problem file format (UTF-8, line oriented; sections in any order):

    %pos         one ground atom per line, trailing period
    %neg         same
    %bk          definite clauses
    %metarules   `name chain.` (library reference) or an inline definition
                 `sort P(x,y) :- Q(x,z), R(z,y).` / `punch P :- Q, R.`
    %punch 3     shorthand for punch_upto(3)
    %matrix h22  shorthand for matrix_h22()
    %invented 8  invented-symbol pool size

Lines starting with `% ` (percent space) are comments.
"""

from __future__ import annotations

import random
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .learner import MilProblem, default_invented_pool
from .resolution import DEFAULT_CONFIG, ProofConfig
from .syntax import (NIL, LIST_FUNCTOR, ClauseSyntaxError, format_atom,
                     format_clause, format_metarule, friendly_names,
                     parse_atom, parse_clause, parse_metarule)
from .terms import (CONSTANT, PREDICATE, Applied, Clause, Compound, Const,
                    Literal, Metarule, Symbol, atom_is_ground, canonical_key,
                    clause, classify, fully_connected, metarule)


class ProblemFormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"{message} (line {line})" if line else message)
        self.line = line


# ---------------------------------------------------------------------------
# Built-in metarule libraries


def _named(name: str, text: str, taxon_hint: str = "sort") -> Metarule:
    m = parse_metarule(text, taxon_hint)
    return Metarule(m.clause, name=name)


_CANONICAL_H22_DEFS = [
    ("identity", "P(x,y) :- Q(x,y)."),
    ("inverse", "P(x,y) :- Q(y,x)."),
    ("xy_xy_xy", "P(x,y) :- Q(x,y), R(x,y)."),
    ("xy_xy_yx", "P(x,y) :- Q(x,y), R(y,x)."),
    ("chain", "P(x,y) :- Q(x,z), R(z,y)."),
    ("xy_xz_yz", "P(x,y) :- Q(x,z), R(y,z)."),
    ("xy_yx_xy", "P(x,y) :- Q(y,x), R(x,y)."),
    ("xy_yx_yx", "P(x,y) :- Q(y,x), R(y,x)."),
    ("xy_yz_xz", "P(x,y) :- Q(y,z), R(x,z)."),
    ("xy_yz_zx", "P(x,y) :- Q(y,z), R(z,x)."),
    ("xy_zx_yz", "P(x,y) :- Q(z,x), R(y,z)."),
    ("xy_zx_zy", "P(x,y) :- Q(z,x), R(z,y)."),
    ("xy_zy_xz", "P(x,y) :- Q(z,y), R(x,z)."),
    ("xy_zy_zx", "P(x,y) :- Q(z,y), R(z,x)."),
]


def canonical_h22() -> Tuple[Metarule, ...]:
    """The canonical fully-connected H22 set, fourteen sort metarules."""
    return tuple(_named(n, t) for n, t in _CANONICAL_H22_DEFS)


def matrix_h22() -> Tuple[Metarule, ...]:
    return (
        _named("meta_monadic", "P(x,y) :- Q(z,u)."),
        _named("meta_dyadic", "P(x,y) :- Q(z,u), R(v,w)."),
    )


def punch_upto(k: int) -> Tuple[Metarule, ...]:
    """Punch metarules of length 2..k (TOM-2, TOM-3, ...)."""
    if k < 2:
        raise ValueError("punch_upto needs k >= 2")
    out = []
    for length in range(2, k + 1):
        heads = "PQRSTUVW"
        body = ", ".join(heads[i] for i in range(1, length))
        out.append(_named(f"tom_{length}", f"P :- {body}.", "punch"))
    return tuple(out)


def library() -> Dict[str, Metarule]:
    lib: Dict[str, Metarule] = {}
    for m in canonical_h22() + matrix_h22() + punch_upto(5):
        lib[m.name] = m
    return lib


_LIBRARY = library()
_LIBRARY_BY_KEY = {canonical_key(m): m.name for m in _LIBRARY.values()}


def lookup_metarule(name: str) -> Metarule:
    try:
        return _LIBRARY[name]
    except KeyError:
        raise ProblemFormatError(f"unknown metarule name {name!r}") from None


def library_name(m: Metarule) -> Optional[str]:
    """The library name of an alpha-equivalent built-in metarule, if any."""
    return _LIBRARY_BY_KEY.get(canonical_key(m))


# ---------------------------------------------------------------------------
# Parsing and serialising problem files

_SECTIONS = ("pos", "neg", "bk", "metarules")


def parse_problem(text: str, config: ProofConfig = DEFAULT_CONFIG) -> MilProblem:
    pos: List[Applied] = []
    neg: List[Applied] = []
    bk: List[Clause] = []
    metarules: List[Metarule] = []
    invented_size = 8
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("% "):
            continue
        if line.startswith("%"):
            parts = line[1:].split()
            directive = parts[0] if parts else ""
            if directive in _SECTIONS:
                section = directive
            elif directive == "punch":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise ProblemFormatError("%punch needs a literal count",
                                             lineno)
                metarules.extend(punch_upto(int(parts[1])))
                section = None
            elif directive == "matrix":
                if len(parts) != 2 or parts[1] != "h22":
                    raise ProblemFormatError(
                        "%matrix supports only 'h22'", lineno)
                metarules.extend(matrix_h22())
                section = None
            elif directive == "invented":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise ProblemFormatError("%invented needs a pool size",
                                             lineno)
                invented_size = int(parts[1])
                section = None
            else:
                raise ProblemFormatError(
                    f"unknown directive %{directive}", lineno)
            continue
        if section is None:
            raise ProblemFormatError(f"statement outside any section: "
                                     f"{line!r}", lineno)
        try:
            if section in ("pos", "neg"):
                c = parse_clause(line, "clause", line_offset=lineno)
                if c.body:
                    raise ProblemFormatError("examples must be atoms", lineno)
                atom = c.head.atom
                if not atom_is_ground(atom):
                    raise ProblemFormatError(
                        f"non-ground example {format_atom(atom)}", lineno)
                (pos if section == "pos" else neg).append(atom)
            elif section == "bk":
                bk.append(parse_clause(line, "clause", line_offset=lineno))
            else:
                metarules.extend(_parse_metarule_line(line, lineno))
        except ClauseSyntaxError as err:
            raise ProblemFormatError(str(err), lineno) from None
    return MilProblem(pos=tuple(pos), neg=tuple(neg), bk=tuple(bk),
                      metarules=tuple(metarules),
                      invented=default_invented_pool(invented_size),
                      config=config)


def _parse_metarule_line(line: str, lineno: int) -> List[Metarule]:
    word, _, rest = line.partition(" ")
    rest = rest.strip()
    if word == "name":
        names = rest.rstrip(".").replace(",", " ").split()
        if not names:
            raise ProblemFormatError("empty metarule reference", lineno)
        return [lookup_metarule(n) for n in names]
    if word in ("sort", "matrix", "punch"):
        hint = "punch" if word == "punch" else "sort"
        m = parse_metarule(rest, hint, line_offset=lineno)
        expected = {"sort": ("sort",), "matrix": ("matrix",),
                    "punch": ("punch",)}[word]
        if m.taxon not in expected:
            raise ProblemFormatError(
                f"metarule declared {word} but classifies as {m.taxon}",
                lineno)
        named = library_name(m)
        return [Metarule(m.clause, name=named)]
    raise ProblemFormatError(
        f"metarule lines start with name/sort/matrix/punch, got {word!r}",
        lineno)


def serialize_metarule_inline(m: Metarule) -> str:
    names = friendly_names(m)
    head = format_atom(m.head.atom, names)
    if m.body:
        body = ", ".join(format_atom(l.atom, names) for l in m.body)
        text = f"{head} :- {body}."
    else:
        text = head + "."
    return f"{m.taxon if m.taxon != 'first_order' else 'sort'} {text}"


def serialize_problem(p: MilProblem, header: str = "") -> str:
    lines: List[str] = []
    if header:
        for h in header.splitlines():
            lines.append(f"% {h}")
    lines.append("%pos")
    lines.extend(format_atom(e) + "." for e in p.pos)
    lines.append("%neg")
    lines.extend(format_atom(e) + "." for e in p.neg)
    lines.append("%bk")
    lines.extend(format_clause(c) for c in p.bk)
    lines.append("%metarules")
    for m in p.metarules:
        name = m.name if m.name in _LIBRARY else library_name(m)
        if name:
            lines.append(f"name {name}.")
        else:
            lines.append(serialize_metarule_inline(m))
    lines.append(f"%invented {len(p.invented)}")
    return "\n".join(lines) + "\n"


def check_problem(p: MilProblem) -> List[str]:
    """Invariant report: hard violations are raised by the constructors, so
    this collects the advisory ones."""
    issues = []
    for c in p.bk:
        head = c.head.atom
        if any(isinstance(t, Compound) for t in head.args):
            issues.append(f"background head {format_atom(head)} is not "
                          f"datalog (compound argument)")
    for m in p.metarules:
        if m.taxon not in ("sort", "matrix", "punch", "first_order"):
            issues.append(f"metarule {m} has unknown taxon")
        if m.taxon == "sort" and not fully_connected(m):
            issues.append(f"sort metarule {format_metarule(m)} is not "
                          f"fully connected")
    return issues


# ---------------------------------------------------------------------------
# Dataset generators


def mk_list(items: Sequence[str]):
    out = NIL
    for item in reversed(items):
        out = Compound(LIST_FUNCTOR, (Const(Symbol(item, CONSTANT)), out))
    return out


def gen_anbn(n_max: int = 3) -> MilProblem:
    """The a^n b^n grammar problem: difference-list examples for n = 1..n_max
    over terminal productions for a and b.  A single invented symbol is
    enough for its textbook three-clause solution."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    s = Symbol("s", PREDICATE)
    pos = tuple(Applied(s, (mk_list(["a"] * n + ["b"] * n), NIL))
                for n in range(1, n_max + 1))
    bk = (
        parse_clause("a([a|T],T)."),
        parse_clause("b([b|T],T)."),
    )
    return MilProblem(pos=pos, neg=(), bk=bk,
                      metarules=(lookup_metarule("chain"),),
                      invented=default_invented_pool(1),
                      config=ProofConfig(max_depth=24,
                                         max_inferences=42_000))


def gen_analogy_problems() -> Tuple[MilProblem, MilProblem]:
    """Two small problems sharing one learnable arity-3 metarule: `parents`
    over father/mother, and `bounded_by` over lt/gt facts.  The second
    problem's metarule set is left empty; it is meant to receive the
    metarule learned on the first."""
    cfg = ProofConfig(max_depth=16, max_inferences=100_000)
    parents = MilProblem(
        pos=(parse_atom("parents(kostas,dora,stassa)"),),
        neg=(),
        bk=(parse_clause("father(kostas,stassa)."),
            parse_clause("mother(dora,stassa).")),
        metarules=punch_upto(3)[1:],  # TOM-3
        invented=default_invented_pool(2),
        config=cfg)
    bounded_by = MilProblem(
        pos=(parse_atom("bounded_by(1,2,3)"),
             parse_atom("bounded_by(3,2,1)")),
        neg=(),
        bk=(parse_clause("lt(1,3)."), parse_clause("lt(1,2)."),
            parse_clause("lt(2,3)."), parse_clause("gt(2,1)."),
            parse_clause("gt(3,1)."), parse_clause("gt(3,2).")),
        metarules=(),
        invented=default_invented_pool(2),
        config=cfg)
    return parents, bounded_by


_PALETTE = ("red", "green", "blue")

NOISE_KINDS = ("none", "false_pos", "false_neg", "ambiguities")


def gen_coloured_graph(nodes: int, noise: str = "none", rate: float = 0.0,
                       seed: int = 0) -> MilProblem:
    """Adapted coloured-graph problem: a complete directed graph whose
    vertices carry colours and a generation order; conn(x,y) holds iff x and
    y share a colour.  Noise flips labels between E+ and E- at the given
    rate."""
    if nodes < 2:
        raise ValueError("nodes must be >= 2")
    if noise not in NOISE_KINDS:
        raise ValueError(f"noise must be one of {NOISE_KINDS}")
    rng = random.Random(seed)
    palette = _PALETTE[:2] if nodes < 6 else _PALETTE
    names = [f"n{i}" for i in range(1, nodes + 1)]
    colour = {}
    for i, v in enumerate(names):
        colour[v] = palette[i] if i < 2 else rng.choice(palette)
    bk: List[Clause] = []
    for i, v in enumerate(names):
        for j, w in enumerate(names):
            if v == w:
                continue
            bk.append(parse_clause(f"edge({v},{w})."))
            bk.append(parse_clause(f"{'before' if i < j else 'after'}"
                                   f"({v},{w})."))
            if colour[v] == colour[w]:
                bk.append(parse_clause(f"same_hue({v},{w})."))
    for v in names:
        bk.append(parse_clause(f"{colour[v]}({v})."))
    pos: List[Applied] = []
    neg: List[Applied] = []
    for v in names:
        for w in names:
            if v == w:
                continue
            atom = parse_atom(f"conn({v},{w})")
            (pos if colour[v] == colour[w] else neg).append(atom)
    if rate > 0:
        if noise in ("false_pos", "ambiguities"):
            flip = rng.sample(neg, max(1, round(rate * len(neg)))) \
                if neg else []
            neg = [e for e in neg if e not in flip]
            pos = pos + flip
        if noise in ("false_neg", "ambiguities"):
            flip = rng.sample(pos, max(1, round(rate * len(pos)))) \
                if pos else []
            pos = [e for e in pos if e not in flip]
            neg = neg + flip
    return MilProblem(pos=tuple(pos), neg=tuple(neg), bk=tuple(bk),
                      metarules=canonical_h22(),
                      invented=(),
                      config=ProofConfig(max_depth=5,
                                         max_inferences=60_000))


def gen_grid_world(width: int = 3, height: int = 3) -> MilProblem:
    """Adapted grid world: step facts in the four directions plus a stay
    relation, and one move(start, goal) task per ordered cell pair (so width
    * height squared examples, 81 on the default 3x3 grid)."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be >= 1")
    cells = [(x, y) for y in range(height) for x in range(width)]

    def cname(x, y):
        return f"c{x}_{y}"

    bk: List[Clause] = []
    for x, y in cells:
        if x + 1 < width:
            bk.append(parse_clause(f"step_right({cname(x, y)},"
                                   f"{cname(x + 1, y)})."))
            bk.append(parse_clause(f"step_left({cname(x + 1, y)},"
                                   f"{cname(x, y)})."))
        if y + 1 < height:
            bk.append(parse_clause(f"step_up({cname(x, y)},"
                                   f"{cname(x, y + 1)})."))
            bk.append(parse_clause(f"step_down({cname(x, y + 1)},"
                                   f"{cname(x, y)})."))
    for x, y in cells:
        bk.append(parse_clause(f"stay({cname(x, y)},{cname(x, y)})."))
    pos = tuple(parse_atom(f"move({cname(*a)},{cname(*b)})")
                for a in cells for b in cells)
    return MilProblem(pos=pos, neg=(), bk=tuple(bk),
                      metarules=canonical_h22(),
                      invented=(),
                      config=ProofConfig(max_depth=8,
                                         max_inferences=200_000))
