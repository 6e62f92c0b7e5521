import copy
import json
import math

import numpy as np
import pytest

from salience import io
from salience.control import majority_control, max_support, stochastic_linear_max
from salience.election import ElectionInstance, IntervalBox, LinearModel, NormBudget

DOC = {
    "schema_version": 1,
    "p": 2,
    "candidates": [[1, 1], [0, 0]],
    "voters": [[1, 0], [0, 1], [0, 0]],
    "weights": [0.5, 0.5],
    "constraint": {"type": "budget", "p": 2, "B": 0.3},
}


def text(doc):
    return json.dumps(doc, indent=1)


def test_parse_minimal():
    parsed = io.loads_instance(text(DOC))
    assert parsed.instance.n == 3 and parsed.instance.ell == 2
    assert isinstance(parsed.constraint, NormBudget) and parsed.constraint.B == 0.3
    assert parsed.model is None


def test_infinite_budget_string():
    doc = dict(DOC, constraint={"type": "budget", "p": "inf", "B": "inf"})
    c = io.parse_instance(doc).constraint
    assert math.isinf(c.p_norm) and c.unbounded


@pytest.mark.parametrize(
    "mutate,code",
    [
        (lambda d: d.update(weights=[0.5, 0.6]), io.E_SIMPLEX),
        (lambda d: d.update(weights=[1.0]), io.E_DIMENSION),
        (lambda d: d.update(voters=[[1, 0, 0]]), io.E_DIMENSION),
        (lambda d: d.update(voters=[[1, 0], [1]]), io.E_DIMENSION),
        (lambda d: d.pop("candidates"), io.E_SCHEMA),
        (lambda d: d.update(p="two"), io.E_SCHEMA),
        (lambda d: d.update(constraint={"type": "box"}), io.E_SCHEMA),
        (lambda d: d.update(constraint={"type": "interval", "intervals": [[0, 1]]}), io.E_DIMENSION),
        (lambda d: d.update(schema_version=7), io.E_SCHEMA),
        (lambda d: d.update(stochastic={"type": "linear", "gamma0": 0.1, "gamma": [1, 2]}), io.E_DIMENSION),
    ],
)
def test_parse_errors(mutate, code):
    doc = copy.deepcopy(DOC)
    mutate(doc)
    with pytest.raises(io.ParseError) as exc:
        io.loads_instance(text(doc))
    assert exc.value.code == code


def test_syntax_error_has_line():
    with pytest.raises(io.ParseError) as exc:
        io.loads_instance('{\n "p": 2,\n "voters": [1,,]\n}')
    assert exc.value.code == io.E_SYNTAX and exc.value.line == 3


def test_error_line_points_at_key():
    doc = dict(DOC, weights=[0.9, 0.9])
    with pytest.raises(io.ParseError) as exc:
        io.loads_instance(text(doc))
    lines = text(doc).splitlines()
    assert '"weights"' in lines[exc.value.line - 1]


def test_round_trip_is_exact():
    rng = np.random.default_rng(0)
    inst = ElectionInstance(rng.random((3, 4)), rng.random((5, 4)), rng.dirichlet(np.ones(4)), 2.5)
    doc = io.instance_doc(inst, IntervalBox([[0, 0.5]] * 4), LinearModel(0.1, [0.01, 0.02]))
    back = io.loads_instance(io.dumps(doc))
    assert np.array_equal(back.instance.voters, inst.voters)
    assert np.array_equal(back.instance.weights, inst.weights)
    assert io.instance_doc(back.instance, back.constraint, back.model) == doc


def test_hash_ignores_formatting():
    assert io.instance_hash(DOC) == io.instance_hash(json.loads(io.dumps(DOC)))


def solved(kind="max_support"):
    parsed = io.parse_instance(DOC)
    idoc = io.instance_doc(parsed.instance, parsed.constraint)
    if kind == "max_support":
        sol = max_support(parsed.instance, parsed.constraint)
    else:
        sol = majority_control(parsed.instance, parsed.constraint)
    return io.solution_doc(kind, idoc, sol, 1e-6)


def test_verify_accepts_solver_output():
    for kind in ("max_support", "majority"):
        assert io.verify_solution(solved(kind)).ok


def test_verify_detects_tampering():
    doc = solved()
    doc["objective"]["votes_for_c1"] += 1
    assert not io.verify_solution(doc).ok
    doc = solved()
    doc["instance"]["voters"][0] = [0, 0]
    assert not io.verify_solution(doc).ok
    doc = solved()
    doc["x"] = [0.4, -0.4]
    assert not io.verify_solution(doc).ok


def test_verify_stochastic():
    doc = dict(DOC, stochastic={"type": "linear", "gamma0": 0.4, "gamma": [0.05]})
    parsed = io.parse_instance(doc)
    sol = stochastic_linear_max(parsed.instance, parsed.model, parsed.constraint)
    sdoc = io.solution_doc("stochastic", io.instance_doc(parsed.instance, parsed.constraint, parsed.model), sol, 1e-6)
    assert io.verify_solution(sdoc).ok
    sdoc["objective"]["expected_votes"] += 1e-3
    assert not io.verify_solution(sdoc).ok


def test_no_win_claim_verifies():
    doc = dict(DOC, voters=[[0, 0], [0, 0], [1, 1]], constraint={"type": "budget", "p": 2, "B": 0.1})
    parsed = io.parse_instance(doc)
    sol = majority_control(parsed.instance, parsed.constraint)
    sdoc = io.solution_doc("majority", io.instance_doc(parsed.instance, parsed.constraint), sol, 1e-6)
    assert sdoc["x"] is None and io.verify_solution(sdoc).ok
