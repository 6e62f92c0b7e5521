"""Benchmark harness: random instance suites and CSV timing rows."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .control import majority_control, max_support, stochastic_linear_max
from .election import (
    AttackConstraint,
    ElectionInstance,
    IntervalBox,
    LinearModel,
    NormBudget,
    StochasticModel,
)

CSV_FIELDS = ("instance_id", "n", "ell", "m", "p", "constraint", "objective", "wall_time")
PROBLEMS = ("max-support", "majority", "stochastic")


@dataclass(eq=False)
class Case:
    case_id: str
    instance: ElectionInstance
    constraint: AttackConstraint
    model: Optional[StochasticModel] = None


def random_case(rng, problem: str, idx: int) -> Case:
    """Small random instance of the kind used in the acceptance suites."""
    if problem == "stochastic":
        m, n, ell = int(rng.integers(2, 4)), int(rng.integers(1, 9)), int(rng.integers(2, 7))
        inst = ElectionInstance(rng.random((m, ell)), rng.random((n, ell)), rng.dirichlet(np.ones(ell)), 2.0)
        model = LinearModel(0.5, rng.random(m - 1) * 0.5 / max(n * ell, 1))
        p = float(rng.choice([1.5, 2.0, 3.0]))
        return Case(f"stochastic-{idx}", inst, NormBudget(p, float(rng.choice([0.1, 0.3]))), model)
    n, ell = int(rng.integers(1, 7)), int(rng.integers(2, 5))
    cands = np.vstack([np.ones(ell), np.zeros(ell)])
    voters = rng.integers(0, 2, size=(n, ell)).astype(float)
    inst = ElectionInstance(cands, voters, rng.dirichlet(np.ones(ell)), 2.0)
    if problem == "majority":
        return Case(f"majority-{idx}", inst, NormBudget(2.0, 0.3))
    return Case(f"max-support-{idx}", inst, IntervalBox.full(ell))


def random_suite(seed: int, count: int, problem: str):
    rng = np.random.default_rng(seed)
    return [random_case(rng, problem, i) for i in range(count)]


def describe_constraint(c: AttackConstraint) -> str:
    if isinstance(c, NormBudget):
        return f"budget(p={c.p_norm:g},B={c.B:g})"
    return "interval(" + ";".join(f"{lo:g}-{hi:g}" for lo, hi in c.intervals) + ")"


def solve_case(case: Case, problem: str, eps: float, parallel: int = 1):
    if problem == "max-support":
        sol = max_support(case.instance, case.constraint, eps, parallel=parallel)
        return sol, float(sol.votes_for_c1)
    if problem == "majority":
        sol = majority_control(case.instance, case.constraint, eps, parallel=parallel)
        return sol, sol.verdict.value
    if problem == "stochastic":
        sol = stochastic_linear_max(case.instance, case.model, case.constraint, eps)
        return sol, sol.expected_votes
    raise ValueError(f"unknown problem {problem!r}")


def bench_rows(cases: Iterable[Case], problem: str, eps: float = 1e-6, parallel: int = 1, omit_timing: bool = False):
    for case in cases:
        t0 = time.perf_counter()
        _, objective = solve_case(case, problem, eps, parallel)
        elapsed = time.perf_counter() - t0
        inst = case.instance
        yield {
            "instance_id": case.case_id,
            "n": inst.n,
            "ell": inst.ell,
            "m": inst.m,
            "p": inst.p,
            "constraint": describe_constraint(case.constraint),
            "objective": objective if isinstance(objective, str) else repr(float(objective)),
            "wall_time": "omitted" if omit_timing else f"{elapsed:.6f}",
        }


def write_csv(rows, fh) -> int:
    writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    count = 0
    for row in rows:
        writer.writerow(row)
        count += 1
    return count
