"""Programs that force a group of voters to a designated candidate.

The perturbation x must keep ``w + x`` on the simplex.  With the box
``0 <= w_k + x_k <= 1`` in place, ``||w + x||_1 = 1`` is just the linear
equality ``sum_k x_k = 1 - sum_k w_k``, so every feasible set here is a
polyhedron and only the budget objective depends on p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..election import (
    TAU_TIE,
    AttackConstraint,
    ElectionError,
    ElectionInstance,
    IntervalBox,
    NormBudget,
    pairwise_preference,
    preference_tensor,
)
from .lp import EPS_FEAS, LinearProgramSpec, Status, find_feasible_point
from .pnorm import lp_norm, minimize_norm

DELTA_STRICT = 1e-7
DEFAULT_EPS = 1e-6


@dataclass(eq=False)
class UnanimityResult:
    feasible: bool
    x: Optional[np.ndarray] = None
    norm_value: float = float("nan")
    status: Status = Status.OPTIMAL
    # B < ||x||_p <= B + eps happened (only possible for p outside {1, 2, inf})
    eps_slack: bool = False
    info: dict = field(default_factory=dict)


def _exact_p(p: float) -> bool:
    return p in (1.0, 2.0) or math.isinf(p)


def _program(w, rows, margins, lo, hi) -> LinearProgramSpec:
    # <w + x, a> >= margin  <=>  -a.x <= a.w - margin
    ell = w.shape[0]
    return LinearProgramSpec(
        np.zeros(ell),
        np.ones((1, ell)),
        [1.0 - w.sum()],
        -rows,
        rows @ w - margins,
        lo,
        hi,
    )


def _box(w, constraint):
    lo, hi = -w, 1.0 - w
    if isinstance(constraint, IntervalBox):
        lo = np.maximum(lo, constraint.lo - w)
        hi = np.minimum(hi, constraint.hi - w)
    if np.any(lo > hi):
        return None
    return lo, hi


def solve_unanimity_rows(
    w,
    rows,
    margins,
    constraint: AttackConstraint,
    eps: float = DEFAULT_EPS,
) -> UnanimityResult:
    """Find x with ``<w + x, rows[r]> >= margins[r]`` under ``constraint``.

    Budget constraints return the norm-minimal x; interval constraints any witness.
    """
    w = np.asarray(w, dtype=float)
    ell = w.shape[0]
    rows = np.asarray(rows, dtype=float).reshape(-1, ell)
    margins = np.broadcast_to(np.asarray(margins, dtype=float), (rows.shape[0],))
    box = _box(w, constraint)
    if box is None:
        return UnanimityResult(False, status=Status.INFEASIBLE)
    lo, hi = box

    zero = np.zeros(ell)
    if np.all(lo <= 0) and np.all(hi >= 0) and np.all(rows @ w >= margins):
        return UnanimityResult(True, zero, 0.0)

    spec = _program(w, rows, margins, lo, hi)
    budget = isinstance(constraint, NormBudget)
    if budget and not constraint.unbounded:
        sol = minimize_norm(spec, constraint.p_norm, eps)
    else:
        sol = find_feasible_point(spec)
    if sol.status is Status.INFEASIBLE:
        return UnanimityResult(False, status=Status.INFEASIBLE)
    if not sol.optimal or sol.max_constraint_violation > EPS_FEAS:
        # solver gave up; report as not certified feasible
        return UnanimityResult(False, sol.z, status=sol.status, info=dict(sol.info))

    x = sol.z
    slack = rows @ (w + x) - margins
    if rows.shape[0] and slack.min() < -0.5 * TAU_TIE:
        # keep tallies consistent with the tie tolerance
        return UnanimityResult(False, x, status=Status.ITERATION_LIMIT, info={"slack": float(slack.min())})
    if not budget:
        return UnanimityResult(True, x, lp_norm(x, 1.0), info=dict(sol.info))

    norm = lp_norm(x, constraint.p_norm)
    if constraint.unbounded:
        return UnanimityResult(True, x, norm)
    tol = EPS_FEAS if _exact_p(constraint.p_norm) else eps
    if norm <= constraint.B + EPS_FEAS:
        return UnanimityResult(True, x, norm, info=dict(sol.info))
    if norm <= constraint.B + tol:
        return UnanimityResult(True, x, norm, eps_slack=True, info=dict(sol.info))
    return UnanimityResult(False, x, norm, status=Status.OPTIMAL, info=dict(sol.info))


def _subset_rows(inst: ElectionInstance, tensor, D: Sequence[int]):
    if tensor is None:
        tensor = preference_tensor(inst)
    D = list(D)
    return np.asarray(tensor)[D].reshape(-1, inst.ell)


def unanimity_budget(
    inst: ElectionInstance,
    tensor,
    D: Sequence[int],
    nb: NormBudget,
    eps: float = DEFAULT_EPS,
) -> UnanimityResult:
    """Smallest ||x||_p making every voter in D choose candidate 0; feasible iff within budget."""
    return solve_unanimity_rows(inst.weights, _subset_rows(inst, tensor, D), 0.0, nb, eps)


def unanimity_interval(inst: ElectionInstance, tensor, D: Sequence[int], box: IntervalBox) -> UnanimityResult:
    """Feasibility of every voter in D choosing candidate 0 with ``w + x`` inside the box."""
    if box.intervals.shape[0] != inst.ell:
        raise ElectionError("interval box dimension does not match the instance")
    return solve_unanimity_rows(inst.weights, _subset_rows(inst, tensor, D), 0.0, box)


def assignment_rows(inst: ElectionInstance, assignment: Sequence[int], delta: float = DELTA_STRICT):
    """Rows and margins making voter j choose ``assignment[j]`` under lowest-index tie-breaking."""
    assignment = list(assignment)
    if len(assignment) != inst.n:
        raise ElectionError(f"assignment covers {len(assignment)} voters, instance has {inst.n}")
    rows, margins = [], []
    for j, ip in enumerate(assignment):
        if ip is None or not 0 <= ip < inst.m:
            raise ElectionError(f"voter {j} has no valid assigned candidate")
        for i in range(inst.m):
            if i == ip:
                continue
            rows.append(pairwise_preference(inst, j, ip, i))
            # earlier candidates win ties, so they must be beaten strictly
            margins.append(delta if i < ip else 0.0)
    return np.array(rows).reshape(-1, inst.ell), np.array(margins)


def assignment_feasibility(
    inst: ElectionInstance,
    tensor,
    assignment: Sequence[int],
    constraint: AttackConstraint,
    eps: float = DEFAULT_EPS,
    delta: float = DELTA_STRICT,
) -> UnanimityResult:
    """Can the attacker make each voter j vote for ``assignment[j]``?

    ``tensor`` is accepted for interface symmetry; the generalized preference
    vectors between arbitrary candidate pairs are computed directly.
    """
    rows, margins = assignment_rows(inst, assignment, delta)
    return solve_unanimity_rows(inst.weights, rows, margins, constraint, eps)
