"""Instance and solution documents (JSON) and solution re-certification."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .election import (
    TAU_SUM,
    AttackConstraint,
    ElectionError,
    ElectionInstance,
    IntervalBox,
    LinearModel,
    NormBudget,
    SigmoidModel,
    StochasticModel,
    c1_wins,
    check_simplex,
    deterministic_tally,
    expected_votes,
)
from .programs.lp import EPS_FEAS
from .programs.pnorm import lp_norm

SCHEMA_VERSION = 1

E_SYNTAX = "E_SYNTAX"
E_SCHEMA = "E_SCHEMA"
E_SIMPLEX = "E_SIMPLEX"
E_DIMENSION = "E_DIMENSION"


class ParseError(ValueError):
    def __init__(self, code: str, message: str, line: Optional[int] = None):
        self.code, self.line = code, line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{code}{where}: {message}")


@dataclass(eq=False)
class ParsedInstance:
    instance: ElectionInstance
    constraint: AttackConstraint
    model: Optional[StochasticModel] = None
    metadata: dict = field(default_factory=dict)


def _line_of(text: Optional[str], key: str) -> Optional[int]:
    if not text:
        return None
    pos = text.find(f'"{key}"')
    return None if pos < 0 else text.count("\n", 0, pos) + 1


def _number(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(v)
    return float(v)


def _enc(v: float):
    return "inf" if math.isinf(v) else float(v)


def _matrix(doc, key, text):
    val = doc.get(key)
    if not isinstance(val, list) or not val or not all(isinstance(r, list) for r in val):
        raise ParseError(E_SCHEMA, f"'{key}' must be a non-empty array of arrays", _line_of(text, key))
    widths = {len(r) for r in val}
    if len(widths) != 1:
        raise ParseError(E_DIMENSION, f"rows of '{key}' have different lengths {sorted(widths)}", _line_of(text, key))
    try:
        return np.array([[_number(x) for x in r] for r in val], dtype=float)
    except TypeError:
        raise ParseError(E_SCHEMA, f"'{key}' must hold numbers", _line_of(text, key)) from None


def parse_instance(doc, text: Optional[str] = None) -> ParsedInstance:
    """Validate an instance document (already decoded) into model objects."""
    if not isinstance(doc, dict):
        raise ParseError(E_SCHEMA, "instance document must be an object", 1)
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ParseError(E_SCHEMA, f"unsupported schema_version {version!r}", _line_of(text, "schema_version"))
    for key in ("p", "candidates", "voters", "weights", "constraint"):
        if key not in doc:
            raise ParseError(E_SCHEMA, f"missing required key '{key}'")
    cands = _matrix(doc, "candidates", text)
    voters = _matrix(doc, "voters", text)
    if cands.shape[1] != voters.shape[1]:
        raise ParseError(
            E_DIMENSION,
            f"candidates have {cands.shape[1]} issues, voters have {voters.shape[1]}",
            _line_of(text, "voters"),
        )
    ell = cands.shape[1]
    try:
        p = _number(doc["p"])
        w = np.array([_number(x) for x in doc["weights"]], dtype=float)
    except TypeError:
        raise ParseError(E_SCHEMA, "'p' and 'weights' must be numbers", _line_of(text, "weights")) from None
    if w.shape != (ell,):
        raise ParseError(E_DIMENSION, f"weights have length {w.shape[0]}, expected {ell}", _line_of(text, "weights"))
    try:
        check_simplex(w, ell, TAU_SUM)
    except ElectionError as exc:
        raise ParseError(E_SIMPLEX, str(exc), _line_of(text, "weights")) from None

    meta = doc.get("metadata") or {}
    if not isinstance(meta, dict):
        raise ParseError(E_SCHEMA, "'metadata' must be an object", _line_of(text, "metadata"))
    labels = meta.get("labels")
    try:
        inst = ElectionInstance(cands, voters, w, p, labels)
    except ElectionError as exc:
        raise ParseError(E_SCHEMA, str(exc), _line_of(text, "p")) from None

    constraint = _parse_constraint(doc["constraint"], ell, text)
    model = None
    if doc.get("stochastic") is not None:
        model = _parse_model(doc["stochastic"], inst.m, text)
    return ParsedInstance(inst, constraint, model, meta)


def _parse_constraint(c, ell, text) -> AttackConstraint:
    line = _line_of(text, "constraint")
    if not isinstance(c, dict) or c.get("type") not in ("budget", "interval"):
        raise ParseError(E_SCHEMA, "constraint type must be 'budget' or 'interval'", line)
    try:
        if c["type"] == "budget":
            return NormBudget(_number(c["p"]), _number(c["B"]))
        iv = c["intervals"]
        if not isinstance(iv, list) or any(not isinstance(r, list) or len(r) != 2 for r in iv):
            raise ParseError(E_SCHEMA, "intervals must be [lo, hi] pairs", _line_of(text, "intervals"))
        if len(iv) != ell:
            raise ParseError(E_DIMENSION, f"{len(iv)} intervals for {ell} issues", _line_of(text, "intervals"))
        return IntervalBox([[_number(a), _number(b)] for a, b in iv])
    except KeyError as exc:
        raise ParseError(E_SCHEMA, f"constraint is missing {exc}", line) from None
    except (TypeError, ElectionError) as exc:
        raise ParseError(E_SCHEMA, f"invalid constraint: {exc}", line) from None


def _parse_model(s, m, text) -> StochasticModel:
    line = _line_of(text, "stochastic")
    try:
        if s.get("type") == "linear":
            gamma = [_number(g) for g in s["gamma"]]
            if len(gamma) != m - 1:
                raise ParseError(E_DIMENSION, f"gamma needs {m - 1} entries", line)
            return LinearModel(_number(s["gamma0"]), gamma)
        if s.get("type") == "sigmoid":
            return SigmoidModel(_number(s["alpha"]))
    except (KeyError, TypeError, AttributeError, ElectionError) as exc:
        raise ParseError(E_SCHEMA, f"invalid stochastic model: {exc}", line) from None
    raise ParseError(E_SCHEMA, "stochastic type must be 'linear' or 'sigmoid'", line)


def loads_instance(text: str) -> ParsedInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(E_SYNTAX, exc.msg, exc.lineno) from None
    return parse_instance(doc, text)


def load_instance(path) -> ParsedInstance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())


def constraint_doc(c: AttackConstraint) -> dict:
    if isinstance(c, NormBudget):
        return {"type": "budget", "p": _enc(c.p_norm), "B": _enc(c.B)}
    return {"type": "interval", "intervals": c.intervals.tolist()}


def model_doc(model: Optional[StochasticModel]):
    if model is None:
        return None
    if isinstance(model, SigmoidModel):
        return {"type": "sigmoid", "alpha": model.alpha}
    return {"type": "linear", "gamma0": model.gamma0, "gamma": model.gamma.tolist()}


def instance_doc(inst: ElectionInstance, constraint: AttackConstraint, model=None, metadata=None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "p": inst.p,
        "candidates": inst.candidates.tolist(),
        "voters": inst.voters.tolist(),
        "weights": inst.weights.tolist(),
        "constraint": constraint_doc(constraint),
    }
    if model is not None:
        doc["stochastic"] = model_doc(model)
    meta = dict(metadata or {})
    if inst.labels is not None:
        meta["labels"] = list(inst.labels)
    if meta:
        doc["metadata"] = meta
    return doc


def dumps(doc) -> str:
    # repr-based float output round-trips exactly
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def instance_hash(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


def constraint_slack(inst: ElectionInstance, constraint: AttackConstraint, x) -> float:
    """Nonnegative when ``w + x`` satisfies the constraint; the margin otherwise negative."""
    x = np.asarray(x, dtype=float)
    if isinstance(constraint, NormBudget):
        if constraint.unbounded:
            return math.inf
        return constraint.B - lp_norm(x, constraint.p_norm)
    wp = inst.weights + x
    return float(min((wp - constraint.lo).min(), (constraint.hi - wp).min()))


def solution_doc(kind: str, idoc: dict, sol, eps: float) -> dict:
    parsed = parse_instance(idoc)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "instance_sha256": instance_hash(idoc),
        "instance": idoc,
        "eps": eps,
        "eps_used": sol.eps_used,
        "x": None if sol.x is None else [float(v) for v in sol.x],
    }
    if sol.x is not None:
        doc["constraint_slack"] = _enc(constraint_slack(parsed.instance, parsed.constraint, sol.x))
        doc["norm_used"] = sol.norm_used
    objective: dict = {}
    if kind == "max_support":
        objective["votes_for_c1"] = sol.votes_for_c1
    elif kind == "majority":
        objective["verdict"] = sol.verdict.value
        if sol.x is not None:
            objective["votes_for_c1"] = sol.votes_for_c1
            objective["winner"] = sol.winner
    elif kind == "stochastic":
        objective["expected_votes"] = sol.expected_votes
    else:
        raise ValueError(f"unknown solution kind {kind!r}")
    doc["objective"] = objective
    if sol.witness is not None:
        doc["witness"] = sol.witness
    return doc


@dataclass
class VerifyReport:
    ok: bool
    messages: list

    def __bool__(self):
        return self.ok


def verify_solution(doc: dict) -> VerifyReport:
    """Re-certify a solution document using only its embedded instance."""
    msgs: list = []
    try:
        idoc = doc["instance"]
        kind = doc["kind"]
        claimed = doc["objective"]
    except (KeyError, TypeError) as exc:
        return VerifyReport(False, [f"solution document is missing {exc}"])
    if instance_hash(idoc) != doc.get("instance_sha256"):
        msgs.append("instance hash does not match the embedded instance")
    parsed = parse_instance(idoc)
    inst, constraint = parsed.instance, parsed.constraint

    if doc.get("x") is None:
        if kind == "majority" and claimed.get("verdict") == "no_win":
            return VerifyReport(not msgs, msgs + ["no perturbation claimed; nothing to re-tally"])
        return VerifyReport(False, msgs + ["solution has no perturbation"])

    x = np.array(doc["x"], dtype=float)
    if x.shape != (inst.ell,):
        return VerifyReport(False, msgs + [f"x has shape {x.shape}, expected ({inst.ell},)"])
    wp = inst.weights + x
    try:
        check_simplex(wp, inst.ell, TAU_SUM)
    except ElectionError as exc:
        msgs.append(f"w + x leaves the simplex: {exc}")
        return VerifyReport(False, msgs)

    slack = constraint_slack(inst, constraint, x)
    allowance = float(doc.get("eps_used") or 0.0) + EPS_FEAS
    if slack < -allowance:
        msgs.append(f"constraint violated by {-slack:.3g}")
    recorded = doc.get("constraint_slack")
    if recorded is not None and not (math.isinf(slack) and recorded == "inf"):
        if recorded == "inf" or abs(float(recorded) - slack) > 1e-9:
            msgs.append("recorded constraint slack does not match")

    if kind in ("max_support", "majority"):
        tally = deterministic_tally(inst, wp)
        if "votes_for_c1" in claimed and tally.votes_for_c1 != claimed["votes_for_c1"]:
            msgs.append(f"re-tally gives {tally.votes_for_c1} votes, claimed {claimed['votes_for_c1']}")
        if kind == "majority":
            wins = c1_wins(tally)
            if claimed.get("verdict") in ("win", "win_with_eps_slack") and not wins:
                msgs.append("claimed win but candidate 0 does not win the re-tally")
            if claimed.get("verdict") == "no_win" and wins:
                msgs.append("claimed no win but the perturbation wins")
    elif kind == "stochastic":
        if parsed.model is None:
            return VerifyReport(False, msgs + ["instance has no stochastic model"])
        ev = expected_votes(inst, wp, parsed.model)
        if abs(ev.value - float(claimed["expected_votes"])) > 1e-9:
            msgs.append(f"re-evaluation gives {ev.value!r}, claimed {claimed['expected_votes']!r}")
    else:
        msgs.append(f"unknown solution kind {kind!r}")
    return VerifyReport(not msgs, msgs)
