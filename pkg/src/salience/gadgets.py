"""Instance generators for the hardness constructions, plus their brute-force targets.

Issue indices are 0-based throughout.  For the weighted max-support
construction with ``h = ell' + 1`` issues per half, issue ``k`` and issue
``k + h`` are paired and ``(h - 1, 2h - 1)`` is the special pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .election import ElectionError, ElectionInstance, SigmoidModel

BRUTE_MAX_VARS = 20
THETA_L_MAX_ISSUES = 4096


@dataclass(frozen=True, eq=False)
class TcmsInstance:
    """Binary issue-selection instance; candidates are all-ones and all-zeros."""

    voters: np.ndarray

    def __post_init__(self):
        v = np.array(self.voters, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ElectionError("TCMS voters must be a non-empty 2-d array")
        if not np.all(np.isin(v, (0.0, 1.0))):
            raise ElectionError("TCMS positions must be 0 or 1")
        v.setflags(write=False)
        object.__setattr__(self, "voters", v)

    @property
    def n_prime(self) -> int:
        return self.voters.shape[0]

    @property
    def ell_prime(self) -> int:
        return self.voters.shape[1]

    @classmethod
    def random(cls, n_prime: int, ell_prime: int, rng) -> "TcmsInstance":
        return cls(rng.integers(0, 2, size=(n_prime, ell_prime)))


def tcms_brute(t: TcmsInstance):
    """Best vote count over nonzero 0/1 issue selections; returns (alpha, selection).

    A voter supports the all-ones candidate when it agrees with it on at least
    half of the selected issues (ties go to that candidate).  The first best
    selection in increasing bitmask order is returned.
    """
    ellp = t.ell_prime
    if ellp > BRUTE_MAX_VARS:
        raise ElectionError(f"{ellp} issues exceed the brute-force cap {BRUTE_MAX_VARS}")
    a = 2.0 * t.voters - 1.0
    best, best_sel = -1, None
    for code in range(1, 1 << ellp):
        sel = np.array([(code >> k) & 1 for k in range(ellp)], dtype=float)
        votes = int(np.sum(a @ sel >= 0))
        if votes > best:
            best, best_sel = votes, sel
    return best, best_sel


def _ones_zeros(ell: int) -> np.ndarray:
    return np.vstack([np.ones(ell), np.zeros(ell)])


def tcwms_blocks(t: TcmsInstance):
    """Voter blocks of the weighted max-support construction as (label, row, copies)."""
    n, lp = t.n_prime, t.ell_prime
    h = lp + 1
    ell = 2 * h
    blocks = []
    for v in t.voters:
        blocks.append(("V1", np.concatenate([v, [1.0], v, [0.0]]), 1))

    v2 = []
    for r in range(1, h + 1):
        # half-window: exactly h of the 2h issues (1-based k) agree with the all-ones candidate
        row = np.array([1.0 if (k + r) % ell < h else 0.0 for k in range(1, ell + 1)])
        v2.append(row)
        blocks.append(("V2", row, 8 * n * lp))
    for row in v2:
        blocks.append(("V3", 1.0 - row, 8 * n * lp))

    def paired(r, at_r, special):
        row = np.zeros(ell)
        for k in range(lp):
            row[k], row[k + h] = 1.0, 0.0
        row[r] = row[r + h] = at_r
        row[h - 1] = row[2 * h - 1] = special
        return row

    for r in range(lp):
        blocks.append(("V4", paired(r, 0.0, 1.0), 4 * n))
    for r in range(lp):
        row = paired(r, 0.0, 1.0)
        row[2 * h - 1] = 0.0  # the special pair follows the (1, 0) pattern here
        blocks.append(("V5", row, 2 * n))
    for r in range(lp):
        blocks.append(("V6", paired(r, 1.0, 0.0), 2 * n))
    return blocks


def _assemble(blocks, ell, weights=None) -> ElectionInstance:
    rows, labels = [], []
    for label, row, copies in blocks:
        rows.extend([row] * copies)
        labels.extend([label] * copies)
    w = np.full(ell, 1.0 / ell) if weights is None else weights
    return ElectionInstance(_ones_zeros(ell), np.array(rows), w, 1.0, tuple(labels))


def build_tcwms_gadget(t: TcmsInstance, weights=None) -> ElectionInstance:
    """Weighted max-support instance on ``2 ell' + 2`` issues with labels V1..V6."""
    return _assemble(tcwms_blocks(t), 2 * t.ell_prime + 2, weights)


def tcwp_block_size(n_prime: int, ell_prime: int) -> int:
    return 8 * ell_prime**2 * n_prime + 12 * ell_prime * n_prime


def build_tcwp_gadget(t: TcmsInstance, weights=None) -> ElectionInstance:
    """The max-support construction plus a V7 block of voters at the all-zeros candidate."""
    ell = 2 * t.ell_prime + 2
    blocks = tcwms_blocks(t) + [("V7", np.zeros(ell), tcwp_block_size(t.n_prime, t.ell_prime))]
    return _assemble(blocks, ell, weights)


def theta_l_layout(t: TcmsInstance):
    """Voter order and private ones-blocks for the few-voters-per-tier construction.

    Voters are visited tier by tier (number of issues agreeing with the
    all-ones candidate, from 0 upward) and numbered j = 1, 2, ...; voter j owns
    the issues ``ell' + k`` (1-based) for k in ``[(j^2+j)/2, (j^2+3j)/2]``.
    Returns (order, blocks) with 0-based half-open issue ranges.
    """
    agree = t.voters.sum(axis=1)
    order = [int(j) for r in range(t.ell_prime + 1) for j in np.flatnonzero(agree == r)]
    blocks = []
    for pos, _ in enumerate(order):
        j = pos + 1
        start = t.ell_prime + (j * j + j) // 2  # 1-based issue number
        stop = t.ell_prime + (j * j + 3 * j) // 2
        blocks.append((start - 1, stop))
    return order, blocks


def build_theta_l_gadget(t: TcmsInstance, weights=None, max_issues: int = THETA_L_MAX_ISSUES) -> ElectionInstance:
    n, lp = t.n_prime, t.ell_prime
    ell = n * n * lp * lp
    if ell > max_issues:
        raise ElectionError(f"{ell} issues exceed the cap {max_issues}")
    order, blocks = theta_l_layout(t)
    if blocks and blocks[-1][1] > ell:
        raise ElectionError(
            f"private block of voter {len(blocks)} ends at issue {blocks[-1][1]}, beyond the {ell} issues"
        )
    rows, labels = [], []
    for j, (start, stop) in zip(order, blocks):
        row = np.zeros(ell)
        row[:lp] = t.voters[j]
        row[start:stop] = 1.0
        rows.append(row)
        labels.append(f"voter:{j}")
    w = np.full(ell, 1.0 / ell) if weights is None else weights
    return ElectionInstance(_ones_zeros(ell), np.array(rows), w, 1.0, tuple(labels))


# ---------------------------------------------------------------------------
# Max-2SAT
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Max2SatFormula:
    """``clauses[j] = ((var, positive), (var, positive))`` over 0-based variables."""

    n_vars: int
    clauses: tuple

    def __post_init__(self):
        if self.n_vars < 1:
            raise ElectionError("a formula needs at least one variable")
        cl = []
        for c in self.clauses:
            if len(c) != 2:
                raise ElectionError(f"clause {c!r} must have exactly two literals")
            lits = tuple((int(v), bool(pos)) for v, pos in c)
            for v, _ in lits:
                if not 0 <= v < self.n_vars:
                    raise ElectionError(f"literal variable {v} out of range")
            if lits[0][0] == lits[1][0]:
                raise ElectionError(f"clause {c!r} repeats a variable")
            cl.append(lits)
        object.__setattr__(self, "clauses", tuple(cl))

    @classmethod
    def random(cls, n_vars: int, n_clauses: int, rng) -> "Max2SatFormula":
        clauses = []
        for _ in range(n_clauses):
            a, b = rng.choice(n_vars, size=2, replace=False)
            clauses.append(((int(a), bool(rng.integers(2))), (int(b), bool(rng.integers(2)))))
        return cls(n_vars, tuple(clauses))


def count_satisfied(phi: Max2SatFormula, assignment: Sequence[bool]) -> int:
    return sum(any(bool(assignment[v]) == pos for v, pos in c) for c in phi.clauses)


def max2sat_brute(phi: Max2SatFormula):
    """Exhaustive maximum; returns (count, first best assignment in counting order)."""
    if phi.n_vars > BRUTE_MAX_VARS:
        raise ElectionError(f"{phi.n_vars} variables exceed the brute-force cap {BRUTE_MAX_VARS}")
    best, best_assign = -1, None
    for bits in itertools.product((False, True), repeat=phi.n_vars):
        assign = bits[::-1]  # variable 0 flips fastest
        c = count_satisfied(phi, assign)
        if c > best:
            best, best_assign = c, assign
    return best, best_assign


def _logistic(z, alpha):
    return 0.5 * (1.0 + np.tanh(0.5 * alpha * z))


def beta_agreement_gap(beta1, beta2, alpha) -> float:
    """Difference of ``beta1 f(-w - 3/4) + beta2 f(w - 3/4)`` between w = 1 and w = 0."""
    at = lambda w: beta1 * _logistic(-w - 0.75, alpha) + beta2 * _logistic(w - 0.75, alpha)
    return float(at(1.0) - at(0.0))


def balanced_beta2(beta1, alpha) -> float:
    num = _logistic(-0.75, alpha) - _logistic(-1.75, alpha)
    den = _logistic(0.25, alpha) - _logistic(-0.75, alpha)
    return float(beta1 * num / den)


def clause_row(clause, ell: int) -> np.ndarray:
    """Position of the voter encoding one clause (ell variables plus one extra issue)."""
    row = np.full(ell + 1, 0.5)
    (v1, s1), (v2, s2) = clause
    if s1 and s2:
        row[v1] = row[v2] = 1.0
        row[ell] = 0.0
    elif not s1 and not s2:
        row[v1] = row[v2] = 0.0
        row[ell] = 1.0
    else:
        neg, pos = (v1, v2) if not s1 else (v2, v1)
        row[neg], row[pos] = 0.0, 1.0
    return row


@dataclass(eq=False)
class Max2SatGadget:
    instance: ElectionInstance
    model: SigmoidModel
    beta1: float
    beta2: float
    agreement_gap: float
    counts: dict


def build_max2sat_gadget(
    phi: Max2SatFormula,
    beta1: Optional[float] = None,
    beta2: Optional[float] = None,
    alpha: Optional[float] = None,
) -> Max2SatGadget:
    """Sigmoid expected-vote instance on ``ell + 1`` issues encoding a Max-2SAT formula.

    Defaults: ``alpha = beta1 = n`` (number of clauses); when ``beta2`` is not
    given it is set so the extreme values of the beta-weighted pair of terms
    agree, then rounded so that ``n^2 beta2`` is a whole number of voters.
    """
    ell, n = phi.n_vars, len(phi.clauses)
    if n < 1:
        raise ElectionError("the formula has no clauses")
    alpha = float(n if alpha is None else alpha)
    beta1 = float(n if beta1 is None else beta1)
    if beta2 is None:
        beta2 = round(n * n * balanced_beta2(beta1, alpha)) / (n * n)
    beta2 = float(beta2)
    sizes = {
        "anchor": 4 * ell * ell * n * n * (beta1 + beta2),
        "var_pos": n * n * beta1,
        "var_neg": n * n * beta2,
    }
    counts = {}
    for key, val in sizes.items():
        if abs(val - round(val)) > 1e-9 or val < 0:
            raise ElectionError(f"block {key} would hold {val} voters; choose betas giving whole counts")
        counts[key] = int(round(val))

    rows, labels = [], []
    anchor = np.zeros(ell + 1)
    anchor[ell] = 1.0
    rows.append(np.tile(anchor, (counts["anchor"], 1)))
    labels += ["anchor"] * counts["anchor"]
    for r in range(ell):
        pos = np.full(ell + 1, 0.5)
        pos[r], pos[ell] = 1.0, 0.0
        neg = np.full(ell + 1, 0.5)
        neg[r] = 0.0
        rows.append(np.tile(pos, (counts["var_pos"], 1)))
        labels += [f"var_pos:{r}"] * counts["var_pos"]
        rows.append(np.tile(neg, (counts["var_neg"], 1)))
        labels += [f"var_neg:{r}"] * counts["var_neg"]
    for j, c in enumerate(phi.clauses):
        rows.append(clause_row(c, ell)[None, :])
        labels.append(f"clause:{j}")
    w = np.zeros(ell + 1)
    w[ell] = 1.0
    inst = ElectionInstance(_ones_zeros(ell + 1), np.vstack(rows), w, 2.0, tuple(labels))
    counts["clauses"] = n
    return Max2SatGadget(inst, SigmoidModel(alpha), beta1, beta2, beta_agreement_gap(beta1, beta2, alpha), counts)


def max2sat_total_voters(ell: int, n: int, beta1: float, beta2: float) -> int:
    return int(round(4 * ell * ell * n * n * (beta1 + beta2) + ell * n * n * (beta1 + beta2) + n))
