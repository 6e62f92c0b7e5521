"""Dense two-phase simplex for small linear programs.

Bland's rule is used for both entering and leaving variables, so the pivot
sequence (and the returned vertex) is a deterministic function of the input.
The final basic solution is recomputed from the original standard-form
matrix to shed the round-off accumulated by tableau updates.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

EPS_FEAS = 1e-8
_PIVOT_TOL = 1e-11
_COST_TOL = 1e-10


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


class DimensionError(ValueError):
    pass


def _rows(a, ncols):
    if a is None:
        return np.zeros((0, ncols))
    a = np.array(a, dtype=float)
    if a.size == 0:
        return np.zeros((0, ncols))
    a = np.atleast_2d(a)
    if a.shape[1] != ncols:
        raise DimensionError(f"constraint rows have {a.shape[1]} columns, expected {ncols}")
    return a


def _vec(b, nrows, name):
    if b is None:
        b = np.zeros(0)
    b = np.atleast_1d(np.array(b, dtype=float))
    if b.shape != (nrows,):
        raise DimensionError(f"{name} has length {b.shape[0]}, expected {nrows}")
    return b


@dataclass(eq=False)
class LinearProgramSpec:
    """``minimize objective @ z`` subject to ``A_eq z = b_eq``, ``A_le z <= b_le``, ``lo <= z <= hi``."""

    objective: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_le: Optional[np.ndarray] = None
    b_le: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.atleast_1d(np.array(self.objective, dtype=float))
        if c.ndim != 1:
            raise DimensionError("objective must be a vector")
        n = c.shape[0]
        self.objective = c
        self.A_eq = _rows(self.A_eq, n)
        self.b_eq = _vec(self.b_eq, self.A_eq.shape[0], "b_eq")
        self.A_le = _rows(self.A_le, n)
        self.b_le = _vec(self.b_le, self.A_le.shape[0], "b_le")
        self.lo = np.full(n, -np.inf) if self.lo is None else _vec(self.lo, n, "lo")
        self.hi = np.full(n, np.inf) if self.hi is None else _vec(self.hi, n, "hi")
        if np.any(self.lo > self.hi):
            raise DimensionError("lower bound exceeds upper bound")

    @classmethod
    def feasibility(cls, n, **kw) -> "LinearProgramSpec":
        return cls(np.zeros(n), **kw)

    @property
    def nvars(self) -> int:
        return self.objective.shape[0]

    def violation(self, z) -> float:
        """Largest constraint violation of ``z`` (0 when feasible)."""
        z = np.asarray(z, dtype=float)
        parts = [0.0]
        if self.A_eq.shape[0]:
            parts.append(np.abs(self.A_eq @ z - self.b_eq).max())
        if self.A_le.shape[0]:
            parts.append((self.A_le @ z - self.b_le).max())
        with np.errstate(invalid="ignore"):
            parts.append(np.max(np.where(np.isfinite(self.lo), self.lo - z, -np.inf)))
            parts.append(np.max(np.where(np.isfinite(self.hi), z - self.hi, -np.inf)))
        return float(max(0.0, *parts))

    def inequality_form(self):
        """All inequalities (rows, bounds) stacked as ``G z <= h``; returns (G, h, kinds)."""
        n = self.nvars
        eye = np.eye(n)
        lo_idx = np.flatnonzero(np.isfinite(self.lo))
        hi_idx = np.flatnonzero(np.isfinite(self.hi))
        G = np.vstack([self.A_le, -eye[lo_idx], eye[hi_idx]])
        h = np.concatenate([self.b_le, -self.lo[lo_idx], self.hi[hi_idx]])
        kinds = (
            [("le", r) for r in range(self.A_le.shape[0])]
            + [("lo", int(k)) for k in lo_idx]
            + [("hi", int(k)) for k in hi_idx]
        )
        return G, h, kinds


@dataclass(eq=False)
class ProgramSolution:
    status: Status
    z: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    max_constraint_violation: float = float("nan")
    iterations: int = 0
    duals: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _StandardForm:
    """``A y = b, y >= 0`` with ``z = T y + s``."""

    def __init__(self, spec: LinearProgramSpec):
        n = spec.nvars
        cols = []  # (var index, sign)
        shift = np.zeros(n)
        ub_rows = []
        for k in range(n):
            lo, hi = spec.lo[k], spec.hi[k]
            if np.isfinite(lo):
                shift[k] = lo
                cols.append((k, 1.0))
                if np.isfinite(hi):
                    ub_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[k] = hi
                cols.append((k, -1.0))
            else:
                cols.append((k, 1.0))
                cols.append((k, -1.0))
        ny = len(cols)
        T = np.zeros((n, ny))
        for c, (k, sgn) in enumerate(cols):
            T[k, c] = sgn
        self.T, self.shift = T, shift

        A_eq = spec.A_eq @ T
        b_eq = spec.b_eq - spec.A_eq @ shift
        A_le = spec.A_le @ T
        b_le = spec.b_le - spec.A_le @ shift
        if ub_rows:
            U = np.zeros((len(ub_rows), ny))
            for r, (c, cap) in enumerate(ub_rows):
                U[r, c] = 1.0
            A_le = np.vstack([A_le, U])
            b_le = np.concatenate([b_le, [cap for _, cap in ub_rows]])
        n_le = A_le.shape[0]
        n_eq = A_eq.shape[0]
        self.ny, self.n_slack = ny, n_le
        A = np.zeros((n_eq + n_le, ny + n_le))
        A[:n_eq, :ny] = A_eq
        A[n_eq:, :ny] = A_le
        A[n_eq:, ny:] = np.eye(n_le)
        b = np.concatenate([b_eq, b_le])
        self.slack_row = {ny + r: n_eq + r for r in range(n_le)}
        self.A, self.b = A, b
        self.cost = np.concatenate([T.T @ spec.objective, np.zeros(n_le)])
        self.const = float(spec.objective @ shift)

    def to_original(self, y) -> np.ndarray:
        return self.T @ y[: self.ny] + self.shift


def _pivot(tab, r, c):
    tab[r] /= tab[r, c]
    col = tab[:, c].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])


def _simplex(tab, basis, ncols, allowed, max_iter):
    """Minimize with the cost row stored last in ``tab``; Bland's rule."""
    nrows = tab.shape[0] - 1
    for it in range(max_iter):
        cost = tab[-1, :ncols]
        enter = -1
        for c in range(ncols):
            if allowed[c] and cost[c] < -_COST_TOL:
                enter = c
                break
        if enter < 0:
            return "optimal", it
        col = tab[:nrows, enter]
        rhs = tab[:nrows, -1]
        best, leave = np.inf, -1
        for r in range(nrows):
            if col[r] > _PIVOT_TOL:
                ratio = rhs[r] / col[r]
                if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            return "unbounded", it
        _pivot(tab, leave, enter)
        basis[leave] = enter
    return "iteration_limit", max_iter


def solve_lp(spec: LinearProgramSpec, max_iter: int = 5000) -> ProgramSolution:
    """Solve a linear program exactly up to floating-point tolerance."""
    sf = _StandardForm(spec)
    A, b = sf.A.copy(), sf.b.copy()
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    nrows, nstd = A.shape

    # initial basis: slacks on rows that were not negated, artificials elsewhere
    basis = []
    art_rows = []
    for r in range(nrows):
        slack = next((c for c, rr in sf.slack_row.items() if rr == r), None)
        if slack is not None and not neg[r]:
            basis.append(slack)
        else:
            art_rows.append(r)
            basis.append(None)
    nart = len(art_rows)
    ncols = nstd + nart
    tab = np.zeros((nrows + 1, ncols + 1))
    tab[:nrows, :nstd] = A
    tab[:nrows, -1] = b
    for a, r in enumerate(art_rows):
        tab[r, nstd + a] = 1.0
        basis[r] = nstd + a

    iters = 0
    if nart:
        tab[-1, nstd:ncols] = 1.0
        for r in art_rows:
            tab[-1] -= tab[r]
        allowed = np.ones(ncols, dtype=bool)
        state, it = _simplex(tab, basis, ncols, allowed, max_iter)
        iters += it
        if state == "iteration_limit":
            return ProgramSolution(Status.ITERATION_LIMIT, iterations=iters)
        scale = max(1.0, float(np.abs(b).max(initial=0.0)))
        if -tab[-1, -1] > 1e-9 * scale:
            return ProgramSolution(Status.INFEASIBLE, iterations=iters)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(nrows):
            if basis[r] >= nstd:
                cands = np.flatnonzero(np.abs(tab[r, :nstd]) > 1e-9)
                if cands.size:
                    _pivot(tab, r, int(cands[0]))
                    basis[r] = int(cands[0])
                    keep.append(r)
            else:
                keep.append(r)
        tab = np.vstack([tab[keep], tab[-1:]])
        basis = [basis[r] for r in keep]
        A, b = A[keep], b[keep]
        nrows = len(keep)

    # phase 2 on the structural columns only
    tab = np.hstack([tab[:, :nstd], tab[:, -1:]])
    tab[-1] = 0.0
    tab[-1, :nstd] = sf.cost
    for r, bc in enumerate(basis):
        tab[-1] -= sf.cost[bc] * tab[r]
    allowed = np.ones(nstd, dtype=bool)
    state, it = _simplex(tab, basis, nstd, allowed, max_iter)
    iters += it
    if state == "iteration_limit":
        return ProgramSolution(Status.ITERATION_LIMIT, iterations=iters)
    if state == "unbounded":
        return ProgramSolution(Status.UNBOUNDED, objective_value=-np.inf, iterations=iters)

    y = np.zeros(nstd)
    if nrows:
        B = A[:, basis]
        try:
            yB = np.linalg.solve(B, b)
        except np.linalg.LinAlgError:
            yB = tab[:nrows, -1]
        y[basis] = np.maximum(yB, 0.0)
    z = sf.to_original(y)
    return ProgramSolution(
        Status.OPTIMAL,
        z=z,
        objective_value=float(spec.objective @ z),
        max_constraint_violation=spec.violation(z),
        iterations=iters,
    )


def find_feasible_point(spec: LinearProgramSpec) -> ProgramSolution:
    zero = LinearProgramSpec(np.zeros(spec.nvars), spec.A_eq, spec.b_eq, spec.A_le, spec.b_le, spec.lo, spec.hi)
    return solve_lp(zero)
