"""Attack algorithms: max support, majority control, linear expected votes."""

from __future__ import annotations

import contextlib
import enum
import heapq
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .election import (
    AttackConstraint,
    ElectionError,
    ElectionInstance,
    IntervalBox,
    LinearModel,
    NormBudget,
    c1_wins,
    deterministic_tally,
    expected_votes,
    preference_tensor,
    unique_voters,
)
from .programs.lp import EPS_FEAS, LinearProgramSpec, solve_lp
from .programs.pnorm import dual_exponent, lp_norm
from .programs.unanimity import (
    DEFAULT_EPS,
    DELTA_STRICT,
    UnanimityResult,
    assignment_feasibility,
    assignment_rows,
    solve_unanimity_rows,
)

ENUMERATION_CAP = 1 << 22


class EnumerationCapExceeded(ElectionError):
    pass


class Verdict(enum.Enum):
    WIN = "win"
    WIN_WITH_EPS_SLACK = "win_with_eps_slack"
    NO_WIN = "no_win"


@dataclass(eq=False)
class AttackSolution:
    x: Optional[np.ndarray]
    votes_for_c1: Optional[int] = None
    expected_votes: Optional[float] = None
    winner: Optional[int] = None
    norm_used: float = float("nan")
    witness: object = None
    eps_used: float = 0.0
    verdict: Optional[Verdict] = None
    info: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class DedupInstance:
    voters: np.ndarray
    multiplicities: np.ndarray
    members: tuple


def dedup(inst: ElectionInstance) -> DedupInstance:
    """Group identical voters, in order of first appearance."""
    reps, mult, members = unique_voters(inst)
    return DedupInstance(reps, mult, tuple(members))


def _norm_of(x, constraint):
    if isinstance(constraint, NormBudget):
        return lp_norm(x, constraint.p_norm)
    return lp_norm(x, 1.0)


def _pool(parallel: int):
    return ProcessPoolExecutor(max_workers=parallel) if parallel > 1 else contextlib.nullcontext()


def _map(fn, items, ex):
    # ex.map keeps input order, so results do not depend on the schedule
    if ex is None or len(items) <= 1:
        return [fn(it) for it in items]
    return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# Max Support
# ---------------------------------------------------------------------------


class _SubsetProgram:
    """Picklable unanimity solve for a bitmask over the kept unique voters."""

    def __init__(self, w, rows, constraint, eps):
        self.w, self.rows, self.constraint, self.eps = w, rows, constraint, eps

    def __call__(self, mask: int) -> UnanimityResult:
        idx = [u for u in range(len(self.rows)) if mask >> u & 1]
        rows = np.concatenate([self.rows[u] for u in idx]) if idx else np.zeros((0, len(self.w)))
        return solve_unanimity_rows(self.w, rows, 0.0, self.constraint, self.eps)


def _levels(weights):
    """Yield (total, [masks]) in descending total weight; masks ascending inside a level.

    Lazy best-first walk over removal sets: the complement of a subset is what
    is removed, and removal sums are generated in increasing order.
    """
    k = len(weights)
    full = (1 << k) - 1
    total = int(sum(weights))
    order = sorted(range(k), key=lambda u: (weights[u], u))
    # heap entries: (removed weight, removed mask, last position used in `order`)
    heap = [(0, 0, -1)]
    current, bucket = None, []
    while heap:
        removed, rmask, last = heapq.heappop(heap)
        if removed != current:
            if bucket:
                yield total - current, sorted(bucket)
            current, bucket = removed, []
        bucket.append(full ^ rmask)
        nxt = last + 1
        if nxt < k:
            u = order[nxt]
            # extend with the next item, or swap the last item for it
            heapq.heappush(heap, (removed + weights[u], rmask | 1 << u, nxt))
            if last >= 0:
                v = order[last]
                heapq.heappush(heap, (removed - weights[v] + weights[u], (rmask & ~(1 << v)) | 1 << u, nxt))
    if bucket:
        yield total - current, sorted(bucket)


def max_support(
    inst: ElectionInstance,
    constraint: AttackConstraint,
    eps: float = DEFAULT_EPS,
    cap: int = ENUMERATION_CAP,
    parallel: int = 1,
) -> AttackSolution:
    """Largest multiplicity-weighted demographic the attacker can make unanimous for candidate 0.

    Demographics are enumerated in descending size; the first feasible one
    wins (ties broken by smallest bitmask over unique voters in order of first
    appearance).  Voters that cannot be won alone, and demographics holding a
    pair that cannot be won together, are skipped: the unanimity feasible set
    only shrinks as voters are added.
    """
    tensor = preference_tensor(inst)
    reps, mult, members = unique_voters(inst)
    rows_all = [tensor[list(js)[0]] for js in members]
    w = inst.weights

    with _pool(parallel) as ex:
        single = _map(_SubsetProgram(w, rows_all, constraint, eps), [1 << u for u in range(len(reps))], ex)
        kept = [u for u, r in enumerate(single) if r.feasible]
        k = len(kept)
        if k >= 63 or (1 << k) > cap:
            raise EnumerationCapExceeded(
                f"{k} unique voters can each be won; 2^{k} demographics exceed the cap {cap}"
            )
        rows = [rows_all[u] for u in kept]
        weights = [int(mult[u]) for u in kept]
        program = _SubsetProgram(w, rows, constraint, eps)

        pairs = [(1 << u) | (1 << v) for u in range(k) for v in range(u + 1, k)]
        conflict = [0] * k
        for mk, res in zip(pairs, _map(program, pairs, ex)):
            if not res.feasible:
                u, v = [i for i in range(k) if mk >> i & 1]
                conflict[u] |= 1 << v
                conflict[v] |= 1 << u

        def compatible(mk):
            return all(not (mk >> u & 1) or not (mk & conflict[u]) for u in range(k))

        solved = len(reps) + len(pairs)
        found, found_mask = None, 0
        batch = max(1, 4 * parallel)
        for _, masks in _levels(weights):
            todo = [mk for mk in masks if compatible(mk)]
            for start in range(0, len(todo), batch):
                part = todo[start:start + batch]
                results = _map(program, part, ex)
                solved += len(part)
                for mk, res in zip(part, results):
                    if res.feasible:
                        found, found_mask = res, mk
                        break
                if found is not None:
                    break
            if found is not None:
                break

    if found is None:
        raise ElectionError("the attack constraint admits no weight vector on the simplex")
    x = found.x
    tally = deterministic_tally(inst, w + x)
    D = [j for i, u in enumerate(kept) if found_mask >> i & 1 for j in members[u]]
    return AttackSolution(
        x=x,
        votes_for_c1=tally.votes_for_c1,
        winner=int(np.argmax(tally.votes)),
        norm_used=_norm_of(x, constraint),
        witness=sorted(D),
        eps_used=eps if found.eps_slack else 0.0,
        verdict=Verdict.WIN_WITH_EPS_SLACK if found.eps_slack else None,
        info={
            "demographic_size": int(sum(mult[u] for i, u in enumerate(kept) if found_mask >> i & 1)),
            "unique_voters": len(reps),
            "kept_unique_voters": k,
            "programs_solved": solved,
        },
    )


# ---------------------------------------------------------------------------
# Majority Vote
# ---------------------------------------------------------------------------


class _AssignmentProgram:
    def __init__(self, reduced, constraint, eps, delta):
        self.reduced, self.constraint, self.eps, self.delta = reduced, constraint, eps, delta

    def __call__(self, assignment):
        return assignment_feasibility(self.reduced, None, assignment, self.constraint, self.eps, self.delta)


def majority_control(
    inst: ElectionInstance,
    constraint: AttackConstraint,
    eps: float = DEFAULT_EPS,
    cap: int = ENUMERATION_CAP,
    parallel: int = 1,
    delta: float = DELTA_STRICT,
) -> AttackSolution:
    """Make candidate 0 a plurality winner (ties count as wins).

    Each group of identical voters is assigned to one candidate; winning
    assignments are checked for feasibility.  Under a norm budget the smallest
    norm wins, under an interval box the first feasible assignment in
    lexicographic order.  ``verdict`` is NO_WIN when nothing works.
    """
    w = inst.weights
    base = deterministic_tally(inst, w)
    # x = 0 is only available when the base weights already satisfy the constraint
    zero_ok = not isinstance(constraint, IntervalBox) or bool(
        np.all(w >= constraint.lo) and np.all(w <= constraint.hi)
    )
    if zero_ok and c1_wins(base):
        return AttackSolution(
            x=np.zeros(inst.ell), votes_for_c1=base.votes_for_c1, winner=0, norm_used=0.0,
            witness=[int(c) for c in base.chosen], verdict=Verdict.WIN,
        )

    reps, mult, members = unique_voters(inst)
    k = len(reps)
    if k * math.log2(inst.m) > math.log2(cap):
        raise EnumerationCapExceeded(f"{inst.m}^{k} assignments exceed the cap {cap}")
    reduced = ElectionInstance(inst.candidates, reps, w, inst.p)

    with _pool(parallel) as ex:
        # which candidates can each group be steered to at all
        single_fn = _SingleChoice(reduced, constraint, eps, delta)
        pairs = [(u, i) for u in range(k) for i in range(inst.m)]
        reach = dict(zip(pairs, _map(single_fn, pairs, ex)))
        options = [[i for i in range(inst.m) if reach[(u, i)]] for u in range(k)]
        if any(not opt for opt in options):
            return AttackSolution(x=None, verdict=Verdict.NO_WIN, info={"reason": "unreachable voter"})

        winning = []
        for combo in itertools.product(*options):
            votes = np.zeros(inst.m, dtype=int)
            for u, i in enumerate(combo):
                votes[i] += mult[u]
            if votes[0] >= votes.max():
                winning.append(combo)

        program = _AssignmentProgram(reduced, constraint, eps, delta)
        budget = isinstance(constraint, NormBudget) and not constraint.unbounded
        best, best_combo = None, None
        batch = max(1, 4 * parallel)
        for start in range(0, len(winning), batch):
            part = winning[start:start + batch]
            for combo, res in zip(part, _map(program, part, ex)):
                if not res.feasible:
                    continue
                if best is None or (budget and res.norm_value < best.norm_value):
                    best, best_combo = res, combo
            if best is not None and not budget:
                break

    if best is None:
        return AttackSolution(x=None, verdict=Verdict.NO_WIN, info={"assignments_checked": len(winning)})
    x = best.x
    tally = deterministic_tally(inst, w + x)
    assignment = [0] * inst.n
    for u, js in enumerate(members):
        for j in js:
            assignment[j] = int(best_combo[u])
    return AttackSolution(
        x=x,
        votes_for_c1=tally.votes_for_c1,
        winner=int(np.argmax(tally.votes)),
        norm_used=_norm_of(x, constraint),
        witness=assignment,
        eps_used=eps if best.eps_slack else 0.0,
        verdict=Verdict.WIN_WITH_EPS_SLACK if best.eps_slack else Verdict.WIN,
        info={"assignments_checked": len(winning)},
    )


class _SingleChoice:
    def __init__(self, reduced, constraint, eps, delta):
        self.reduced, self.constraint, self.eps, self.delta = reduced, constraint, eps, delta

    def __call__(self, pair):
        u, i = pair
        rows, margins = assignment_rows(self.reduced, [i] * self.reduced.n, self.delta)
        per = self.reduced.m - 1
        res = solve_unanimity_rows(
            self.reduced.weights, rows[u * per:(u + 1) * per], margins[u * per:(u + 1) * per],
            self.constraint, self.eps,
        )
        return res.feasible


# ---------------------------------------------------------------------------
# linear stochastic model
# ---------------------------------------------------------------------------


def linear_coefficients(inst: ElectionInstance, model: LinearModel):
    """``(b, C)`` with expected votes at ``w + x`` equal to ``b @ x + C``."""
    if model.gamma.shape != (inst.m - 1,):
        raise ElectionError(f"linear model needs {inst.m - 1} rival coefficients")
    a = preference_tensor(inst)
    b = np.einsum("jik,i->k", a, model.gamma)
    C = inst.n * model.gamma0 + float(b @ inst.weights)
    return b, C


def dual_norm_maximizer(c, p: float, R: float) -> np.ndarray:
    """Maximizer of ``c @ x`` over ``||x||_p <= R``; lowest index on ties when p = 1."""
    c = np.asarray(c, dtype=float)
    x = np.zeros_like(c)
    if R <= 0 or not np.any(c):
        return x
    if p == 1:
        k = int(np.argmax(np.abs(c)))
        x[k] = R * np.sign(c[k])
        return x
    if math.isinf(p):
        return R * np.sign(c)
    q = dual_exponent(p)
    scale = lp_norm(c, q)
    return R * np.sign(c) * (np.abs(c) / scale) ** (q - 1.0)


def _truncated_maximizer(c, p, B, lo, hi):
    """Maximize ``c @ x`` over the p-ball intersected with a box containing 0.

    Coordinates leaving the box are pinned to the violated bound and the
    closed form is recomputed on the remaining budget; a pinned coordinate
    stays pinned because the free scale only grows.  Returns (x, pinned mask).
    """
    x = np.zeros_like(c)
    pinned = np.zeros(c.shape, dtype=bool)
    for _ in range(c.shape[0] + 1):
        used = float(np.sum(np.abs(x[pinned]) ** p))
        R = max(B**p - used, 0.0) ** (1.0 / p)
        free = ~pinned
        x[free] = dual_norm_maximizer(c[free], p, R) if free.any() else 0.0
        over = free & ((x > hi) | (x < lo))
        if not over.any():
            return x, pinned
        x[over] = np.where(x[over] > hi[over], hi[over], lo[over])
        pinned |= over
    return x, pinned


def _analytic_budget(b, p, B, lo, hi, s):
    """Exact optimum of ``b @ x`` over the p-ball, the box and ``sum x = s``.

    For a fixed multiplier mu of the sum, the optimum of ``(b - mu) @ x`` over
    ball and box is the truncated closed form; its coordinate sum falls as mu
    grows, so mu is found by bisection.  ``b - mu`` are the effective
    coefficients of the repaired problem.
    """
    def at(mu):
        return _truncated_maximizer(b - mu, p, B, lo, hi)

    span = float(np.ptp(b)) + 1.0
    mu_lo, mu_hi = float(b.min()) - span, float(b.max()) + span
    for _ in range(200):
        mid = 0.5 * (mu_lo + mu_hi)
        if mid == mu_lo or mid == mu_hi:
            break
        if at(mid)[0].sum() > s:
            mu_lo = mid
        else:
            mu_hi = mid
    # pick the endpoint whose sum is closer
    cands = [(abs(at(m)[0].sum() - s), m) for m in (mu_lo, mu_hi)]
    mu = min(cands)[1]
    x, pinned = at(mu)
    return x, pinned, mu


def _stochastic_lp(b, constraint, lo, hi, s):
    ell = b.shape[0]
    if not constraint.unbounded and constraint.p_norm == 1:
        # x = xp - xm
        split = np.hstack([np.eye(ell), -np.eye(ell)])
        spec = LinearProgramSpec(
            -np.concatenate([b, -b]),
            np.ones((1, ell)) @ split,
            [s],
            np.vstack([np.ones((1, 2 * ell)), split, -split]),
            np.concatenate([[constraint.B], hi, -lo]),
            np.zeros(2 * ell),
            None,
        )
        sol = solve_lp(spec)
        return (split @ sol.z if sol.optimal else None), sol
    if not constraint.unbounded:
        lo = np.maximum(lo, -constraint.B)
        hi = np.minimum(hi, constraint.B)
    spec = LinearProgramSpec(-b, np.ones((1, ell)), [s], None, None, lo, hi)
    sol = solve_lp(spec)
    return (sol.z if sol.optimal else None), sol


def stochastic_linear_max(
    inst: ElectionInstance,
    model: LinearModel,
    constraint: AttackConstraint,
    eps: float = DEFAULT_EPS,
    cross_check: bool = True,
) -> AttackSolution:
    """Maximize expected votes for candidate 0 under a linear vote model.

    The objective is ``b @ x + C``.  Interval boxes and p in {1, inf} give a
    linear program; other p use the closed-form maximizer with box truncation
    and an exact shift enforcing ``sum x = 0``, then compare against one
    projected-gradient run and keep the better point.
    """
    if not isinstance(model, LinearModel):
        raise ElectionError("stochastic_linear_max needs a linear model")
    b, C = linear_coefficients(inst, model)
    w = inst.weights
    lo, hi, s = -w, 1.0 - w, 1.0 - w.sum()
    info: dict = {"b": b, "C": C}

    def finish(x, **extra):
        ev = expected_votes(inst, w + x, model)
        info.update(extra)
        info["out_of_range"] = ev.out_of_range
        return AttackSolution(
            x=x, expected_votes=ev.value, norm_used=_norm_of(x, constraint), eps_used=eps, info=info,
        )

    budget = isinstance(constraint, NormBudget)
    if budget and (constraint.B == 0 or not np.any(b)):
        return finish(np.zeros(inst.ell), method="constant")

    if isinstance(constraint, IntervalBox):
        lo = np.maximum(lo, constraint.lo - w)
        hi = np.minimum(hi, constraint.hi - w)
        if np.any(lo > hi):
            raise ElectionError("interval box does not meet the simplex")
        spec = LinearProgramSpec(-b, np.ones((1, inst.ell)), [s], None, None, lo, hi)
        sol = solve_lp(spec)
        if not sol.optimal:
            raise ElectionError(f"interval program not solvable: {sol.status.value}")
        return finish(sol.z, method="lp")

    p = constraint.p_norm
    if p == 1 or math.isinf(p) or constraint.unbounded:
        x, sol = _stochastic_lp(b, constraint, lo, hi, s)
        if x is None:
            raise ElectionError(f"budget program not solvable: {sol.status.value}")
        return finish(x, method="lp")

    x, pinned, mu = _analytic_budget(b, p, constraint.B, lo, hi, s)
    analytic = float(b @ x + C)
    info.update(effective_coefficients=b - mu, shift=mu, pinned=pinned, analytic_value=analytic)
    if cross_check:
        from .oracles import projected_gradient_oracle

        pgd = projected_gradient_oracle(inst, model, constraint)
        info.update(pgd_value=pgd.value, pgd_converged=pgd.converged)
        if pgd.value > analytic + 1e-12 and lp_norm(pgd.x, p) <= constraint.B + EPS_FEAS:
            return finish(pgd.x, method="pgd")
    return finish(x, method="analytic")
