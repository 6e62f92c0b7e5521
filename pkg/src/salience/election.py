"""Spatial election model with a shared issue-weight vector.

Candidates and voters are points in issue space; a voter prefers the
candidate at the smallest weighted distance.  Candidate index 0 is always the
attacker's preferred candidate.  All indices in this package are 0-based.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

TAU_TIE = 1e-9
TAU_SUM = 1e-9
TAU_PROB = 1e-6


class ElectionError(ValueError):
    """Raised when an instance or weight vector violates the model."""


def _as_matrix(values, name) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise ElectionError(f"{name} must be a 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ElectionError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def check_simplex(w, ell: int, tol: float = TAU_SUM) -> np.ndarray:
    """Return ``w`` as a read-only array after checking it lies on the simplex."""
    w = np.array(w, dtype=float)
    if w.shape != (ell,):
        raise ElectionError(f"weight vector must have length {ell}, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ElectionError("weight vector contains non-finite entries")
    if np.any(w < -tol) or np.any(w > 1 + tol):
        raise ElectionError("weights must lie in [0, 1]")
    if abs(w.sum() - 1.0) > tol:
        raise ElectionError(f"weights must sum to 1 (sum is {w.sum():.12g})")
    w.setflags(write=False)
    return w


@dataclass(frozen=True, eq=False)
class ElectionInstance:
    candidates: np.ndarray
    voters: np.ndarray
    weights: np.ndarray
    p: float = 2.0
    labels: Optional[tuple] = None

    def __post_init__(self):
        cands = _as_matrix(self.candidates, "candidates")
        voters = _as_matrix(self.voters, "voters")
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "voters", voters)
        if cands.shape[0] < 2:
            raise ElectionError("need at least two candidates")
        if voters.shape[0] < 1:
            raise ElectionError("need at least one voter")
        if cands.shape[1] < 1 or cands.shape[1] != voters.shape[1]:
            raise ElectionError(
                f"candidates have {cands.shape[1]} issues but voters have {voters.shape[1]}"
            )
        p_ok = isinstance(self.p, numbers.Real) and not isinstance(self.p, bool)
        if not (p_ok and self.p >= 1 and math.isfinite(self.p)):
            raise ElectionError(f"distance exponent p must be a finite real >= 1, got {self.p!r}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "weights", check_simplex(self.weights, cands.shape[1]))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != voters.shape[0]:
                raise ElectionError("one label per voter required")
            object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return self.candidates.shape[0]

    @property
    def n(self) -> int:
        return self.voters.shape[0]

    @property
    def ell(self) -> int:
        return self.candidates.shape[1]

    def with_weights(self, w) -> "ElectionInstance":
        return ElectionInstance(self.candidates, self.voters, w, self.p, self.labels)

    def is_binary(self) -> bool:
        return bool(
            np.all(np.isin(self.candidates, (0.0, 1.0))) and np.all(np.isin(self.voters, (0.0, 1.0)))
        )

    def powered_gaps(self) -> np.ndarray:
        """``|c_{i,k} - v_{j,k}|**p`` with shape (n, m, ell)."""
        return np.abs(self.candidates[None, :, :] - self.voters[:, None, :]) ** self.p


# ---------------------------------------------------------------------------
# attacker constraints and stochastic models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormBudget:
    p_norm: float
    B: float

    def __post_init__(self):
        if not (self.p_norm >= 1):
            raise ElectionError(f"budget norm exponent must be >= 1, got {self.p_norm}")
        if not (self.B >= 0):
            raise ElectionError(f"budget must be nonnegative, got {self.B}")
        object.__setattr__(self, "p_norm", float(self.p_norm))
        object.__setattr__(self, "B", float(self.B))

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.B)


@dataclass(frozen=True, eq=False)
class IntervalBox:
    intervals: np.ndarray

    def __post_init__(self):
        iv = np.array(self.intervals, dtype=float)
        if iv.ndim != 2 or iv.shape[1] != 2:
            raise ElectionError("intervals must be a sequence of (lo, hi) pairs")
        lo, hi = iv[:, 0], iv[:, 1]
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo > hi):
            raise ElectionError("each interval must satisfy 0 <= lo <= hi <= 1")
        iv.setflags(write=False)
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def full(cls, ell: int) -> "IntervalBox":
        return cls(np.tile([0.0, 1.0], (ell, 1)))

    @property
    def lo(self) -> np.ndarray:
        return self.intervals[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.intervals[:, 1]

    def __eq__(self, other):
        return isinstance(other, IntervalBox) and np.array_equal(self.intervals, other.intervals)

    def __hash__(self):
        return hash(self.intervals.tobytes())


AttackConstraint = Union[NormBudget, IntervalBox]


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``f(v_j, c_0) = gamma0 + sum_i gamma_i <w, a_j^(i)>``, evaluated unclamped."""

    gamma0: float
    gamma: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.array(self.gamma, dtype=float))
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "gamma0", float(self.gamma0))

    @classmethod
    def default_for(cls, inst: ElectionInstance) -> "LinearModel":
        # range stays in [0, 1] on the simplex because |<w, a>| <= max_k |a_k| <= ||a||_1
        if inst.m != 2:
            raise ElectionError("the default linear preset is defined for two candidates")
        a = preference_tensor(inst)[:, 0, :]
        A = float(np.abs(a).sum(axis=1).max())
        return cls(0.5, np.array([0.5 / A if A > 0 else 0.0]))

    def __eq__(self, other):
        return (
            isinstance(other, LinearModel)
            and self.gamma0 == other.gamma0
            and np.array_equal(self.gamma, other.gamma)
        )


@dataclass(frozen=True)
class SigmoidModel:
    """Logistic vote probability with sharpness ``alpha``; two candidates only."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ElectionError("sigmoid sharpness must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))


StochasticModel = Union[LinearModel, SigmoidModel]


# ---------------------------------------------------------------------------
# distances and preference vectors
# ---------------------------------------------------------------------------


def weighted_distance(inst: ElectionInstance, j: int, i: int, w=None) -> float:
    """Weighted L_p distance between voter ``j`` and candidate ``i``."""
    if not 0 <= j < inst.n:
        raise IndexError(f"voter index {j} out of range")
    if not 0 <= i < inst.m:
        raise IndexError(f"candidate index {i} out of range")
    w = inst.weights if w is None else check_simplex(w, inst.ell)
    gaps = np.abs(inst.candidates[i] - inst.voters[j]) ** inst.p
    return float(max(np.dot(w, gaps), 0.0) ** (1.0 / inst.p))


def preference_tensor(inst: ElectionInstance) -> np.ndarray:
    """Per-issue advantage of candidate 0 over each rival, shape (n, m-1, ell).

    ``a[j, i-1, k] = |c_ik - v_jk|^p - |c_0k - v_jk|^p``.  Because ``t -> t**(1/p)``
    is increasing, ``d_ij >= d_0j`` iff ``d_ij**p - d_0j**p >= 0``, and the
    difference of p-th powers is exactly ``<w, a[j, i-1]>``.  Comparisons are
    therefore done on inner products and never on roots.
    """
    gaps = inst.powered_gaps()
    a = gaps[:, 1:, :] - gaps[:, :1, :]
    a.setflags(write=False)
    return a


def pairwise_preference(inst: ElectionInstance, j: int, preferred: int, rival: int) -> np.ndarray:
    """Per-issue advantage of ``preferred`` over ``rival`` for voter ``j``."""
    v = inst.voters[j]
    return (
        np.abs(inst.candidates[rival] - v) ** inst.p
        - np.abs(inst.candidates[preferred] - v) ** inst.p
    )


def powered_distances(inst: ElectionInstance, w) -> np.ndarray:
    """``d_ij**p`` for every voter and candidate, shape (n, m)."""
    return inst.powered_gaps() @ np.asarray(w, dtype=float)


# ---------------------------------------------------------------------------
# voting
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Tally:
    votes: np.ndarray
    chosen: np.ndarray

    @property
    def votes_for_c1(self) -> int:
        return int(self.votes[0])


def choose_candidates(dist_p: np.ndarray, tol: float = TAU_TIE) -> np.ndarray:
    """Lowest-index candidate within ``tol`` of the minimum along the last axis."""
    best = dist_p.min(axis=-1, keepdims=True)
    return np.argmax(dist_p <= best + tol, axis=-1)


def deterministic_tally(inst: ElectionInstance, w=None) -> Tally:
    w = inst.weights if w is None else check_simplex(w, inst.ell)
    chosen = choose_candidates(powered_distances(inst, w))
    votes = np.bincount(chosen, minlength=inst.m)
    return Tally(votes, chosen)


def plurality_outcome(t: Union[Tally, Sequence[int]]) -> int:
    votes = t.votes if isinstance(t, Tally) else np.asarray(t)
    return int(np.argmax(votes))  # argmax returns the first maximum


def c1_wins(t: Tally) -> bool:
    return plurality_outcome(t) == 0


class VoteExpectation(NamedTuple):
    value: float
    out_of_range: bool


def vote_probabilities(inst: ElectionInstance, w, model: StochasticModel) -> np.ndarray:
    """Per-voter probability of voting for candidate 0 (unclamped for linear models)."""
    scores = np.einsum("jik,k->ji", preference_tensor(inst), np.asarray(w, dtype=float))
    if isinstance(model, SigmoidModel):
        if inst.m != 2:
            raise ElectionError("the sigmoid model is defined for two candidates")
        z = model.alpha * scores[:, 0]
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    if model.gamma.shape != (inst.m - 1,):
        raise ElectionError(f"linear model needs {inst.m - 1} rival coefficients")
    return model.gamma0 + scores @ model.gamma


def expected_votes(inst: ElectionInstance, w, model: StochasticModel) -> VoteExpectation:
    w = check_simplex(w, inst.ell)
    probs = vote_probabilities(inst, w, model)
    flagged = bool(np.any(probs < -TAU_PROB) or np.any(probs > 1 + TAU_PROB))
    return VoteExpectation(float(probs.sum()), flagged)


def unique_voters(inst: ElectionInstance):
    """Group identical voters; returns (representatives, multiplicities, members)."""
    groups: dict = {}
    for j, row in enumerate(inst.voters):
        groups.setdefault((row + 0.0).tobytes(), []).append(j)
    members = [tuple(js) for js in groups.values()]
    reps = np.array([inst.voters[js[0]] for js in members])
    mult = np.array([len(js) for js in members], dtype=int)
    return reps, mult, members
