"""Minimum L_p norm over a polyhedron, for any p >= 1.

p = 1 and p = inf are linear programs, p = 2 is the active-set QP.  Other
exponents minimize the smooth surrogate ``sum |z_k|^p`` (same minimizers as
``||z||_p``) by a scaled projected-gradient method: each step projects in the
metric of the diagonal Hessian, i.e. a projected Newton step, followed by an
Armijo backtrack.  Every iterate is feasible, and the loop stops once a
Lagrangian lower bound certifies ``||z||_p - OPT <= eps``.  Convergence is
linear, so the iteration count grows with ``log(1/eps)``.
"""

from __future__ import annotations

import math

import numpy as np

from .lp import LinearProgramSpec, ProgramSolution, Status, solve_lp
from .qp import solve_qp_l2, weighted_projection


def lp_norm(x, p: float) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.abs(x).max())
    if p == 1:
        return float(np.abs(x).sum())
    return float(np.linalg.norm(x, ord=p))


def dual_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _min_l1(spec: LinearProgramSpec) -> ProgramSolution:
    # z = zp - zm with zp, zm >= 0
    n = spec.nvars
    split = np.hstack([np.eye(n), -np.eye(n)])
    G, h, _ = spec.inequality_form()
    lp = LinearProgramSpec(
        np.ones(2 * n),
        spec.A_eq @ split,
        spec.b_eq,
        G @ split,
        h,
        np.zeros(2 * n),
        None,
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        return ProgramSolution(sol.status, iterations=sol.iterations)
    z = split @ sol.z
    return ProgramSolution(Status.OPTIMAL, z, lp_norm(z, 1), spec.violation(z), sol.iterations)


def _min_linf(spec: LinearProgramSpec) -> ProgramSolution:
    # variables (z, t): minimize t with -t <= z_k <= t
    n = spec.nvars
    G, h, _ = spec.inequality_form()
    eye = np.eye(n)
    col = np.ones((n, 1))
    A_le = np.vstack(
        [
            np.hstack([G, np.zeros((G.shape[0], 1))]),
            np.hstack([eye, -col]),
            np.hstack([-eye, -col]),
        ]
    )
    b_le = np.concatenate([h, np.zeros(2 * n)])
    lp = LinearProgramSpec(
        np.concatenate([np.zeros(n), [1.0]]),
        np.hstack([spec.A_eq, np.zeros((spec.A_eq.shape[0], 1))]),
        spec.b_eq,
        A_le,
        b_le,
        np.concatenate([np.full(n, -np.inf), [0.0]]),
        None,
    )
    sol = solve_lp(lp)
    if not sol.optimal:
        return ProgramSolution(sol.status, iterations=sol.iterations)
    z = sol.z[:n]
    return ProgramSolution(Status.OPTIMAL, z, lp_norm(z, math.inf), spec.violation(z), sol.iterations)


def norm_lower_bound(spec: LinearProgramSpec, p: float, mu, lam) -> float:
    """Weak-duality lower bound on ``min ||z||_p`` from any multipliers.

    For ``lam >= 0`` on ``G z <= h`` and free ``mu`` on ``A_eq z = b_eq``,
    ``||z||_p >= -(b_eq.mu + h.lam) / ||A_eq^T mu + G^T lam||_q`` for every
    feasible z (Hölder).  Zero is always a valid bound.
    """
    G, h, _ = spec.inequality_form()
    lam = np.maximum(np.asarray(lam, dtype=float), 0.0)
    mu = np.asarray(mu, dtype=float)
    num = -(spec.b_eq @ mu + h @ lam)
    den = lp_norm(spec.A_eq.T @ mu + G.T @ lam, dual_exponent(p))
    if num <= 0 or den == 0:
        return 0.0
    return float(num / den)


def solve_pnorm_min(
    spec: LinearProgramSpec,
    p: float,
    eps: float = 1e-6,
    max_iter: int = 500,
) -> ProgramSolution:
    """Return a feasible z with ``||z||_p <= OPT + eps`` (objective of ``spec`` ignored).

    ``info["lower_bound"]`` holds the certified lower bound and ``info["gap"]``
    the final certified gap.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if p == 1:
        return _min_l1(spec)
    if math.isinf(p):
        return _min_linf(spec)
    if p == 2:
        return solve_qp_l2(spec)
    if not eps > 0:
        raise ValueError("eps must be positive")

    start = solve_qp_l2(spec)
    if start.status is Status.INFEASIBLE:
        return ProgramSolution(Status.INFEASIBLE)
    if start.z is None:
        return ProgramSolution(start.status)

    z = start.z
    f = lambda v: float(np.sum(np.abs(v) ** p))
    best_lb = norm_lower_bound(spec, p, start.duals["eq"], start.duals["ineq"])
    fz = f(z)
    status = Status.ITERATION_LIMIT
    it = 0
    for it in range(1, max_iter + 1):
        norm = fz ** (1.0 / p)
        if norm - best_lb <= eps:
            status = Status.OPTIMAL
            break
        absz = np.abs(z)
        floor = max(1e-9 * absz.max(), 1e-300)
        grad = p * np.sign(z) * absz ** (p - 1)
        curv = p * (p - 1) * np.maximum(absz, floor) ** (p - 2)
        curv = np.clip(curv, 1e-12 * curv.max(), None)
        sub = weighted_projection(spec, z - grad / curv, curv)
        if sub.z is None:
            break
        # stationarity of the subproblem: curv*(z_new - z) + grad + A^T nu = 0;
        # at a fixed point nu are multipliers for sum |z|^p
        best_lb = max(best_lb, norm_lower_bound(spec, p, sub.duals["eq"], sub.duals["ineq"]))
        d = sub.z - z
        slope = float(grad @ d)
        if slope >= 0 or np.abs(d).max() <= 1e-15 * (1 + absz.max()):
            if norm - best_lb <= eps:
                status = Status.OPTIMAL
            break
        t = 1.0
        while True:
            cand = z + t * d
            fc = f(cand)
            if fc <= fz + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if fc >= fz and t < 1e-12:
            break
        z, fz = cand, fc

    norm = fz ** (1.0 / p)
    sol = ProgramSolution(
        status,
        z=z,
        objective_value=norm,
        max_constraint_violation=spec.violation(z),
        iterations=it,
    )
    sol.info["lower_bound"] = best_lb
    sol.info["gap"] = norm - best_lb
    return sol


def minimize_norm(spec: LinearProgramSpec, p: float, eps: float = 1e-6) -> ProgramSolution:
    """Dispatch on p: exact for p in {1, 2, inf}, eps-certified otherwise."""
    return solve_pnorm_min(spec, p, eps)
