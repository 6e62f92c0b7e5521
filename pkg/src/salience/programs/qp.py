"""Minimum Euclidean norm over a polyhedron by a primal active-set method."""

from __future__ import annotations

import numpy as np

from .lp import EPS_FEAS, LinearProgramSpec, ProgramSolution, Status, find_feasible_point

EPS_KKT = 1e-6


def _independent_rows(M, tol=1e-10):
    keep: list[int] = []
    for r in range(M.shape[0]):
        if np.linalg.matrix_rank(M[keep + [r]], tol=tol) == len(keep) + 1:
            keep.append(r)
    return keep


def _min_norm_solution(M, rhs, n):
    if M.shape[0] == 0:
        return np.zeros(n)
    return np.linalg.lstsq(M, rhs, rcond=None)[0]


def kkt_residual(spec: LinearProgramSpec, z, duals) -> float:
    """Max of stationarity, sign, complementarity and feasibility residuals for min ½||z||²."""
    G, h, _ = spec.inequality_form()
    mu = duals.get("eq", np.zeros(spec.A_eq.shape[0]))
    lam = duals.get("ineq", np.zeros(G.shape[0]))
    stat = z + spec.A_eq.T @ mu + G.T @ lam
    res = [np.abs(stat).max(initial=0.0), spec.violation(z)]
    if lam.size:
        res.append(max(0.0, -lam.min()))
        res.append(np.abs(lam * (G @ z - h)).max())
    return float(max(res))


def solve_qp_l2(spec: LinearProgramSpec, max_iter: int | None = None) -> ProgramSolution:
    """Minimize ``||z||_2`` over the constraints of ``spec`` (its objective is ignored).

    Duals are reported for ``min ½||z||²``: ``duals["eq"]`` for the equality rows
    and ``duals["ineq"]`` for the rows of ``spec.inequality_form()``.
    """
    n = spec.nvars
    start = find_feasible_point(spec)
    if start.status is Status.INFEASIBLE:
        return ProgramSolution(Status.INFEASIBLE)
    if not start.optimal:
        return ProgramSolution(start.status)

    eq_rows = _independent_rows(spec.A_eq)
    E, e = spec.A_eq[eq_rows], spec.b_eq[eq_rows]
    G, h, _ = spec.inequality_form()
    scale = 1.0 + np.abs(h).max(initial=0.0) + np.abs(e).max(initial=0.0)
    tol = 1e-12 * scale
    if max_iter is None:
        max_iter = 50 * (G.shape[0] + n + 1)

    z = start.z.copy()
    work: list[int] = []
    status = Status.ITERATION_LIMIT
    lam_w = np.zeros(0)
    mu = np.zeros(E.shape[0])
    it = 0
    for it in range(1, max_iter + 1):
        M = np.vstack([E, G[work]]) if work else E
        rhs = np.concatenate([e, h[work]])
        target = _min_norm_solution(M, rhs, n)
        step = target - z
        if np.abs(step).max(initial=0.0) <= 1e-11 * (1.0 + np.abs(z).max(initial=0.0)):
            z = target
            if M.shape[0]:
                nu = np.linalg.lstsq(M.T, -z, rcond=None)[0]
            else:
                nu = np.zeros(0)
            mu, lam_w = nu[: E.shape[0]], nu[E.shape[0]:]
            if lam_w.size == 0 or lam_w.min() >= -1e-10:
                status = Status.OPTIMAL
                break
            drop = int(np.argmin(lam_w))
            work.pop(drop)
            continue
        alpha, block = 1.0, None
        Gp = G @ step
        slack = h - G @ z
        for i in range(G.shape[0]):
            if i in work or Gp[i] <= tol:
                continue
            ratio = max(slack[i], 0.0) / Gp[i]
            if ratio < alpha:
                alpha, block = ratio, i
        z = z + alpha * step
        if block is not None:
            work.append(block)

    lam = np.zeros(G.shape[0])
    if status is Status.OPTIMAL:
        lam[work] = np.maximum(lam_w, 0.0)
    # duals on the original equality rows (dependent rows get zero)
    mu_full = np.zeros(spec.A_eq.shape[0])
    mu_full[eq_rows] = mu
    duals = {"eq": mu_full, "ineq": lam}
    viol = spec.violation(z)
    sol = ProgramSolution(
        status,
        z=z,
        objective_value=float(np.linalg.norm(z)),
        max_constraint_violation=viol,
        iterations=it,
        duals=duals,
    )
    if status is Status.OPTIMAL:
        sol.info["kkt_residual"] = kkt_residual(spec, z, duals)
        if viol > EPS_FEAS:
            # never hand back an infeasible point labelled optimal
            sol.status = Status.ITERATION_LIMIT
    return sol


def weighted_projection(spec: LinearProgramSpec, center, weights, **kw) -> ProgramSolution:
    """Minimize ``sum_k weights_k (z_k - center_k)^2`` over the constraints of ``spec``.

    Solved through ``solve_qp_l2`` in the scaled variable ``u = sqrt(weights)(z - center)``;
    the returned duals refer to ``min ½ sum_k weights_k (z_k - center_k)^2`` in z-space.
    """
    c = np.asarray(center, dtype=float)
    s = np.sqrt(np.asarray(weights, dtype=float))
    inv = 1.0 / s
    scaled = LinearProgramSpec(
        np.zeros(spec.nvars),
        spec.A_eq * inv,
        spec.b_eq - spec.A_eq @ c,
        spec.A_le * inv,
        spec.b_le - spec.A_le @ c,
        s * (spec.lo - c),
        s * (spec.hi - c),
    )
    sol = solve_qp_l2(scaled, **kw)
    if sol.z is not None:
        sol.z = c + inv * sol.z
        sol.max_constraint_violation = spec.violation(sol.z)
        sol.objective_value = float(np.sum(np.asarray(weights) * (sol.z - c) ** 2))
    if "ineq" in sol.duals:
        # bound rows were scaled by s; rescale their multipliers back
        G, _, kinds = scaled.inequality_form()
        lam = sol.duals["ineq"].copy()
        for r, (kind, k) in enumerate(kinds):
            if kind in ("lo", "hi"):
                lam[r] *= s[k]
        sol.duals["ineq"] = lam
    return sol
