"""The metarule replacement experiment.

Starting from a problem's user-defined sort metarules, the experiment walks
|M|+1 steps; after the first step each run removes one more metarule, chosen
uniformly at random without replacement.  At every step two further metarule
sets are derived fresh: one by specialising matrix metarules, one by
specialising punch metarules.  Leg 1 trains on the surviving user set alone,
legs 2 and 3 on its union with each derived set.  Each leg of each step of
each run performs two learning attempts on fresh train/test splits, one
measured for accuracy and one for cost, and attempts that blow the budget
score as the empty hypothesis.
"""

from __future__ import annotations

import csv
import io
import math
import random
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .learner import Hypothesis, MilProblem, accuracy, top_program
from .problems import matrix_h22, punch_upto
from .specialise import ToilConfig, toil_learn
from .terms import Applied, Metarule

LEGS = ("no_replacement", "toil2", "toil3")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: MilProblem
    runs: int = 10
    sample_split: float = 0.5
    legs: Tuple[str, ...] = LEGS
    rng_seed: int = 0
    matrix_inputs: Tuple[Metarule, ...] = field(default_factory=matrix_h22)
    punch_inputs: Tuple[Metarule, ...] = field(
        default_factory=lambda: punch_upto(3))
    toil: ToilConfig = field(default_factory=lambda: ToilConfig(
        max_specialisations=3, cover_set=False))
    attempt_inferences: Optional[int] = None  # defaults to problem budget
    attempt_seconds: Optional[float] = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 0 < self.sample_split < 1:
            raise ValueError("sample_split must be in (0, 1)")
        for leg in self.legs:
            if leg not in LEGS:
                raise ValueError(f"unknown leg {leg!r}")


@dataclass(frozen=True)
class Attempt:
    run: int
    step: int
    leg: str
    purpose: str  # "accuracy" or "cost"
    accuracy: float
    inferences: int
    duration: float
    hypothesis_size: int
    timed_out: bool


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    attempts: Tuple[Attempt, ...]
    removal_orders: Tuple[Tuple[str, ...], ...]
    learned_sets: Dict[Tuple[int, int, str], Tuple[str, ...]]

    def mean_stderr(self, step: int, leg: str,
                    metric: str) -> Tuple[float, float]:
        purpose = "accuracy" if metric == "accuracy" else "cost"
        values = [getattr(a, metric) for a in self.attempts
                  if a.step == step and a.leg == leg
                  and a.purpose == purpose]
        mean = statistics.fmean(values)
        err = statistics.stdev(values) / math.sqrt(len(values)) \
            if len(values) > 1 else 0.0
        return mean, err

    def steps(self) -> List[int]:
        return sorted({a.step for a in self.attempts})

    def rows(self) -> List[Tuple]:
        out = []
        for step in self.steps():
            for leg in self.config.legs:
                for metric in ("accuracy", "duration", "inferences"):
                    mean, err = self.mean_stderr(step, leg, metric)
                    out.append((step, leg, metric, mean, err))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["step", "leg", "metric", "mean", "stderr"])
        for row in self.rows():
            writer.writerow(row)
        return buf.getvalue()


def _derived_seed(base: int, *parts: int) -> int:
    seed = base
    for p in parts:
        seed = (seed * 1_000_003 + p + 1) % (2 ** 31 - 1)
    return seed


def _split(items: Sequence[Applied], fraction: float,
           rng: random.Random) -> Tuple[list, list]:
    items = list(items)
    if not items:
        return [], []
    size = max(1, round(fraction * len(items)))
    size = min(size, len(items))
    train = rng.sample(items, size)
    train_set = set(train)
    test = [e for e in items if e not in train_set]
    return train, test or train


def _metarule_label(m: Metarule) -> str:
    from .problems import library_name

    return m.name or library_name(m) or str(m)


def _train_toil(problem: MilProblem, inputs: Tuple[Metarule, ...],
                tcfg: ToilConfig, seed: int) -> Tuple[Metarule, ...]:
    toil_problem = replace(problem, metarules=tuple(inputs))
    result = toil_learn(toil_problem, replace(tcfg, rng_seed=seed))
    return result.metarules


def run_replacement_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    problem = cfg.problem
    metarules = list(problem.metarules)
    k = len(metarules) + 1
    attempts: List[Attempt] = []
    removal_orders: List[Tuple[str, ...]] = []
    learned_sets: Dict[Tuple[int, int, str], Tuple[str, ...]] = {}
    budget = cfg.attempt_inferences \
        if cfg.attempt_inferences is not None \
        else problem.config.max_inferences * max(1, len(problem.pos))

    for run in range(cfg.runs):
        order_rng = random.Random(_derived_seed(cfg.rng_seed, run, 0))
        removal = order_rng.sample(metarules, len(metarules))
        removal_orders.append(tuple(_metarule_label(m) for m in removal))
        m1 = list(metarules)
        for step in range(1, k + 1):
            if step > 1:
                m1.remove(removal[step - 2])
            m2 = m3 = ()
            if "toil2" in cfg.legs:
                m2 = _train_toil(problem, cfg.matrix_inputs, cfg.toil,
                                 _derived_seed(cfg.rng_seed, run, step, 2))
                learned_sets[(run, step, "toil2")] = tuple(
                    _metarule_label(m) for m in m2)
            if "toil3" in cfg.legs:
                m3 = _train_toil(problem, cfg.punch_inputs, cfg.toil,
                                 _derived_seed(cfg.rng_seed, run, step, 3))
                learned_sets[(run, step, "toil3")] = tuple(
                    _metarule_label(m) for m in m3)
            leg_sets = {"no_replacement": tuple(m1),
                        "toil2": tuple(m1) + tuple(m2),
                        "toil3": tuple(m1) + tuple(m3)}
            for leg in cfg.legs:
                for ai, purpose in enumerate(("accuracy", "cost")):
                    rng = random.Random(_derived_seed(
                        cfg.rng_seed, run, step, LEGS.index(leg), ai))
                    train_pos, test_pos = _split(problem.pos,
                                                 cfg.sample_split, rng)
                    train_neg, test_neg = _split(problem.neg,
                                                 cfg.sample_split, rng)
                    train = replace(problem, pos=tuple(train_pos),
                                    neg=tuple(train_neg),
                                    metarules=leg_sets[leg])
                    t0 = time.perf_counter()
                    hypothesis = top_program(train)
                    duration = time.perf_counter() - t0
                    timed_out = hypothesis.inferences > budget or (
                        cfg.attempt_seconds is not None
                        and duration > cfg.attempt_seconds)
                    scored = Hypothesis(()) if timed_out else hypothesis
                    acc = accuracy(scored, problem.bk, test_pos, test_neg,
                                   problem.config)
                    attempts.append(Attempt(
                        run=run, step=step, leg=leg, purpose=purpose,
                        accuracy=acc, inferences=hypothesis.inferences,
                        duration=duration,
                        hypothesis_size=len(scored.clauses),
                        timed_out=timed_out))
    return ExperimentResult(cfg, tuple(attempts), tuple(removal_orders),
                            learned_sets)


def empty_hypothesis_baseline(problem: MilProblem,
                              split: float = 0.5) -> float:
    """Expected accuracy of the empty hypothesis on an even split: the
    negative fraction of the example set."""
    total = len(problem.pos) + len(problem.neg)
    if total == 0:
        return 0.0
    return len(problem.neg) / total
