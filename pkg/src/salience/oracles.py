"""Deliberately simple brute-force baselines for certifying solver output.

None of these call the solvers in ``control`` or ``programs``; they scan,
enumerate or iterate directly on the election model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Iterator, Optional

import numpy as np
from scipy.optimize import brentq

from .election import (
    TAU_TIE,
    AttackConstraint,
    ElectionError,
    ElectionInstance,
    IntervalBox,
    LinearModel,
    NormBudget,
    StochasticModel,
    SigmoidModel,
    preference_tensor,
)

OBJECTIVES = ("max_support", "majority", "expected")
GRID_CAP = 20_000_000
STRUCTURED_MAX_ELL = 24


class OracleCapExceeded(ElectionError):
    pass


@dataclass(eq=False)
class GridResult:
    w: Optional[np.ndarray]
    value: float
    scanned: int
    feasible: int


# ---------------------------------------------------------------------------
# vectorized evaluation of many weight vectors at once
# ---------------------------------------------------------------------------


def _votes_many(inst: ElectionInstance, W, tol) -> np.ndarray:
    """Votes per candidate for each column of W (ell x K); returns (K, m)."""
    dist = np.einsum("jik,kK->jiK", inst.powered_gaps(), W)
    best = dist.min(axis=1, keepdims=True)
    chosen = np.argmax(dist <= best + tol, axis=1)  # (n, K)
    votes = np.stack([(chosen == i).sum(axis=0) for i in range(inst.m)], axis=1)
    return votes


def _expected_many(inst: ElectionInstance, W, model: StochasticModel) -> np.ndarray:
    scores = np.einsum("jik,kK->jiK", preference_tensor(inst), W)
    if isinstance(model, SigmoidModel):
        if inst.m != 2:
            raise ElectionError("the sigmoid model is defined for two candidates")
        probs = 0.5 * (1.0 + np.tanh(0.5 * model.alpha * scores[:, 0, :]))
    else:
        probs = model.gamma0 + np.einsum("jiK,i->jK", scores, model.gamma)
    return probs.sum(axis=0)


def _objective_many(inst, W, objective, model, tol):
    if objective == "expected":
        if model is None:
            raise ElectionError("expected-vote objective needs a stochastic model")
        return _expected_many(inst, W, model)
    votes = _votes_many(inst, W, tol)
    if objective == "max_support":
        return votes[:, 0].astype(float)
    if objective == "majority":
        return (votes[:, 0] >= votes.max(axis=1)).astype(float)
    raise ValueError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")


def _feasible_mask(w, Wp, constraint: Optional[AttackConstraint]):
    """Columns of Wp (ell x K) satisfying the attacker constraint."""
    if constraint is None:
        return np.ones(Wp.shape[1], dtype=bool)
    if isinstance(constraint, IntervalBox):
        lo, hi = constraint.lo[:, None], constraint.hi[:, None]
        return np.all((Wp >= lo - 1e-12) & (Wp <= hi + 1e-12), axis=0)
    if constraint.unbounded:
        return np.ones(Wp.shape[1], dtype=bool)
    X = Wp - w[:, None]
    p = constraint.p_norm
    if math.isinf(p):
        norms = np.abs(X).max(axis=0)
    else:
        norms = (np.abs(X) ** p).sum(axis=0) ** (1.0 / p)
    return norms <= constraint.B + 1e-12


# ---------------------------------------------------------------------------
# simplex grid
# ---------------------------------------------------------------------------


def _compositions(total: int, parts: int) -> np.ndarray:
    """All compositions of ``total`` into ``parts`` nonnegative parts, lexicographic."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def simplex_grid(ell: int, steps: int, cap: int = GRID_CAP) -> Iterator[np.ndarray]:
    """Yield integer compositions of ``steps`` into ``ell`` parts in chunks.

    The points are exact rationals ``c / steps``; the scan order is lexicographic.
    """
    count = comb(steps + ell - 1, ell - 1)
    if count > cap:
        raise OracleCapExceeded(f"simplex grid has {count} points, cap is {cap}")
    if ell <= 2:
        yield _compositions(steps, ell)
        return
    # fix the leading coordinates so each chunk stays modest
    lead = 1 if ell <= 4 else 2
    for head in _compositions_upto(steps, lead):
        tail = _compositions(steps - int(head.sum()), ell - lead)
        yield np.hstack([np.broadcast_to(head, (tail.shape[0], lead)), tail])


def _compositions_upto(total: int, parts: int):
    for head in itertools.product(range(total + 1), repeat=parts):
        if sum(head) <= total:
            yield np.array(head, dtype=np.int64)


def grid_search(
    inst: ElectionInstance,
    constraint: Optional[AttackConstraint],
    objective: str = "max_support",
    resolution: float = 1 / 200,
    model: Optional[StochasticModel] = None,
    cap: int = GRID_CAP,
) -> GridResult:
    """Best objective over simplex grid points ``w'`` satisfying the constraint.

    The first maximizer in lexicographic scan order is reported.
    """
    steps = int(round(1.0 / resolution))
    if steps < 1 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError("resolution must be 1/N for a positive integer N")
    w = inst.weights
    best_val, best_w, scanned, feasible = -math.inf, None, 0, 0
    for chunk in simplex_grid(inst.ell, steps, cap):
        Wp = (chunk / steps).T
        scanned += Wp.shape[1]
        ok = _feasible_mask(w, Wp, constraint)
        if not ok.any():
            continue
        Wp = Wp[:, ok]
        feasible += Wp.shape[1]
        vals = _objective_many(inst, Wp, objective, model, TAU_TIE)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_w = float(vals[k]), Wp[:, k].copy()
    return GridResult(best_w, best_val, scanned, feasible)


# ---------------------------------------------------------------------------
# binary-structured weights
# ---------------------------------------------------------------------------


def _patterns(nbits: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(nbits)) & 1).astype(float)


def structured_weight_search(
    inst: ElectionInstance,
    objective: str = "max_support",
    model: Optional[StochasticModel] = None,
    constraint: Optional[AttackConstraint] = None,
    coords=None,
    fixed=(),
    chunk: int = 1 << 15,
) -> GridResult:
    """Best objective over ``w' = s / |s|`` for 0/1 patterns s.

    ``coords`` (default: every issue) are enumerated, issues in ``fixed`` are
    always 1 and the rest are 0.  Pattern codes are scanned in increasing
    order (bit r of the code is coordinate ``coords[r]``); ties keep the first.
    Comparisons use the unnormalized pattern, which is exact for binary positions.
    """
    ell = inst.ell
    coords = list(range(ell)) if coords is None else list(coords)
    fixed = list(fixed)
    if len(coords) > STRUCTURED_MAX_ELL:
        raise OracleCapExceeded(f"{len(coords)} free coordinates exceed {STRUCTURED_MAX_ELL}")
    if set(coords) & set(fixed):
        raise ValueError("a coordinate cannot be both free and fixed")
    exact = bool(np.all(np.equal(np.mod(inst.powered_gaps(), 1.0), 0.0)))
    base = np.zeros(ell)
    base[fixed] = 1.0
    total = 1 << len(coords)
    start = 0 if fixed else 1
    best_val, best_w, scanned, feasible = -math.inf, None, 0, 0
    for lo in range(start, total, chunk):
        S = np.tile(base, (min(lo + chunk, total) - lo, 1))
        S[:, coords] = _patterns(len(coords), lo, min(lo + chunk, total))
        sizes = S.sum(axis=1)
        Wp = (S / sizes[:, None]).T
        scanned += Wp.shape[1]
        ok = _feasible_mask(inst.weights, Wp, constraint)
        if not ok.any():
            continue
        feasible += int(ok.sum())
        if objective == "expected":
            vals = _objective_many(inst, Wp[:, ok], objective, model, TAU_TIE)
        else:
            # integer-valued distances when positions are binary: tol 0 is exact
            vals = _objective_many(inst, S[ok].T, objective, model, 0.0 if exact else TAU_TIE * ell)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_w = float(vals[k]), Wp[:, ok][:, k].copy()
    return GridResult(best_w, best_val, scanned, feasible)


# ---------------------------------------------------------------------------
# projected gradient for the linear expected-vote objective
# ---------------------------------------------------------------------------


def _prox_power(t, lam: float, p: float) -> np.ndarray:
    """Solve ``y + lam * p * |y|^(p-1) sign(y) = t`` elementwise."""
    a = np.abs(t)
    if lam == 0:
        return t.copy()
    if p == 2:
        u = a / (1.0 + 2.0 * lam)
    elif p == 3:
        u = 2.0 * a / (1.0 + np.sqrt(1.0 + 12.0 * lam * a))
    elif p == 1.5:
        s = 2.0 * a / (1.5 * lam + np.sqrt(2.25 * lam * lam + 4.0 * a))
        u = s * s
    else:
        lo, hi = np.zeros_like(a), a.copy()
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            over = mid + lam * p * mid ** (p - 1) > a
            hi = np.where(over, mid, hi)
            lo = np.where(over, lo, mid)
        u = 0.5 * (lo + hi)
    return np.sign(t) * u


def project_ball_box_sum(r, p: float, B: float, lo, hi, s: float) -> np.ndarray:
    """Euclidean projection onto ``{||y||_p <= B, lo <= y <= hi, sum y = s}``.

    The set must be nonempty.  Multipliers of the ball (lam) and of the sum
    (mu) are found by nested scalar root-finding.
    """
    r = np.asarray(r, dtype=float)

    def y_of(lam, mu):
        return np.clip(_prox_power(r - mu, lam, p), lo, hi)

    def inner(lam):
        # sum of y is nonincreasing in mu; clip saturates at both ends
        t_hi = hi + lam * p * np.abs(hi) ** (p - 1)
        t_lo = lo - lam * p * np.abs(lo) ** (p - 1)
        a, b = float(np.min(r - t_hi)) - 1.0, float(np.max(r - t_lo)) + 1.0
        g = lambda mu: float(y_of(lam, mu).sum() - s)
        ga, gb = g(a), g(b)
        if ga <= 0:
            return a
        if gb >= 0:
            return b
        return brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def excess(lam):
        y = y_of(lam, inner(lam))
        return float(np.sum(np.abs(y) ** p) - B**p)

    if math.isinf(B) or excess(0.0) <= 0:
        lam = 0.0
    else:
        top = 1.0
        while excess(top) > 0:
            top *= 4.0
            if top > 1e30:
                raise RuntimeError("ball multiplier bracket failed")
        lam = brentq(excess, 0.0, top, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    return y_of(lam, inner(lam))


@dataclass(eq=False)
class PGDResult:
    x: np.ndarray
    value: float
    iterations: int
    converged: bool
    gradient_mapping: float


def projected_gradient_oracle(
    inst: ElectionInstance,
    model: LinearModel,
    constraint: NormBudget,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    step: Optional[float] = None,
) -> PGDResult:
    """Maximize expected votes under a linear model by projected gradient ascent.

    Feasible set: ``||x||_p <= B`` with ``w + x`` on the simplex.  The objective
    is affine in x, so its gradient is the constant vector computed below.
    """
    if not isinstance(model, LinearModel):
        raise ElectionError("the projected-gradient oracle needs a linear model")
    p = constraint.p_norm
    if not p > 1:
        raise ElectionError("the projected-gradient oracle needs p > 1")
    w = inst.weights
    a = preference_tensor(inst)
    grad = np.einsum("jik,i->k", a, model.gamma)
    lo, hi, s = -w, 1.0 - w, 1.0 - w.sum()
    value = lambda x: float(np.sum(model.gamma0 + np.einsum("jik,k,i->j", a, w + x, model.gamma)))

    x = project_ball_box_sum(np.zeros_like(w), p, constraint.B, lo, hi, s)
    gnorm = float(np.linalg.norm(grad))
    if gnorm == 0:
        return PGDResult(x, value(x), 0, True, 0.0)
    radius = constraint.B if math.isfinite(constraint.B) else 1.0
    eta = step if step is not None else max(radius, 1e-12) / gnorm
    gm, it = math.inf, 0
    for it in range(1, max_iter + 1):
        nxt = project_ball_box_sum(x + eta * grad, p, constraint.B, lo, hi, s)
        gm = float(np.linalg.norm(nxt - x)) / eta
        x = nxt
        if gm <= tol:
            break
    return PGDResult(x, value(x), it, gm <= tol, gm)


# ---------------------------------------------------------------------------
# refining grid for small norm-minimization programs
# ---------------------------------------------------------------------------


def zoom_grid_norm_min(spec, p: float, points: int = 41, min_cell: float = 1e-10, max_rounds: int = 200):
    """Approximate ``min ||z||_p`` over a bounded inequality polytope by a refining grid.

    Every reported point is feasible, so the value is an upper bound on the
    optimum; the grid is re-centred on the incumbent and halved each round.
    Returns ``(z, value)`` or ``(None, inf)`` when no grid point is feasible.
    """
    lo, hi = np.array(spec.lo, dtype=float), np.array(spec.hi, dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("zoom grid needs finite bounds")
    if spec.A_eq.shape[0]:
        raise ValueError("zoom grid handles inequality constraints only")
    dim = lo.shape[0]
    ord_p = np.inf if math.isinf(p) else p
    best, best_val, prev = None, math.inf, None
    c_lo, c_hi = lo.copy(), hi.copy()
    for _ in range(max_rounds):
        axes = [np.linspace(c_lo[k], c_hi[k], points) for k in range(dim)]
        Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
        ok = np.all(Z @ spec.A_le.T <= spec.b_le, axis=1) if spec.A_le.shape[0] else np.ones(len(Z), bool)
        if ok.any():
            vals = np.linalg.norm(Z[ok], ord=ord_p, axis=1)
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val, best = float(vals[k]), Z[ok][k].copy()
        if best is None:
            return None, math.inf
        if prev is None:
            prev = best.copy()
        cell = (c_hi - c_lo) / (points - 1)
        if cell.max() <= min_cell:
            break
        # halve the window, but keep it wide enough to follow an incumbent
        # that is still sliding along a face
        half = np.maximum((c_hi - c_lo) / 4, 2 * np.abs(best - prev))
        prev = best.copy()
        c_lo = np.maximum(lo, best - half)
        c_hi = np.minimum(hi, best + half)
    return best, best_val
