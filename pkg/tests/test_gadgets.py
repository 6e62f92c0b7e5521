from collections import Counter

import numpy as np
import pytest

from salience.election import ElectionError, preference_tensor
from salience.gadgets import (
    Max2SatFormula,
    TcmsInstance,
    balanced_beta2,
    beta_agreement_gap,
    build_max2sat_gadget,
    build_tcwms_gadget,
    build_tcwp_gadget,
    build_theta_l_gadget,
    clause_row,
    count_satisfied,
    max2sat_brute,
    max2sat_total_voters,
    tcms_brute,
    tcwp_block_size,
    theta_l_layout,
)


def test_tcms_rejects_non_binary():
    with pytest.raises(ElectionError):
        TcmsInstance([[0.5, 1.0]])


def test_tcms_brute_small():
    t = TcmsInstance([[1, 0], [0, 1], [1, 1]])
    votes, sel = tcms_brute(t)
    # selecting both issues: voters 0 and 1 tie, voter 2 agrees
    assert votes == 3


@pytest.mark.parametrize("npr,lp", [(1, 1), (2, 1), (2, 2), (3, 2)])
def test_tcwms_block_sizes(npr, lp):
    t = TcmsInstance.random(npr, lp, np.random.default_rng(npr * 10 + lp))
    inst = build_tcwms_gadget(t)
    assert inst.ell == 2 * lp + 2
    counts = Counter(inst.labels)
    h = lp + 1
    assert counts["V1"] == npr
    assert counts["V2"] == counts["V3"] == 8 * npr * lp * h
    assert counts["V4"] == 4 * npr * lp
    assert counts["V5"] == counts["V6"] == 2 * npr * lp
    assert inst.p == 1.0
    assert np.allclose(inst.weights, 1 / inst.ell)


def test_tcwms_half_windows_and_complements():
    t = TcmsInstance([[1, 0]])
    inst = build_tcwms_gadget(t)
    labels = np.array(inst.labels)
    v2 = np.unique(inst.voters[labels == "V2"], axis=0)
    v3 = np.unique(inst.voters[labels == "V3"], axis=0)
    assert np.all(v2.sum(axis=1) == inst.ell // 2)
    assert {tuple(r) for r in 1 - v2} == {tuple(r) for r in v3}


def test_tcwms_first_block_embeds_voters():
    t = TcmsInstance([[1, 0, 1], [0, 0, 1]])
    inst = build_tcwms_gadget(t)
    v1 = inst.voters[np.array(inst.labels) == "V1"]
    assert v1.tolist()[0] == [1, 0, 1, 1, 1, 0, 1, 0]


def test_tcwp_adds_rival_block():
    t = TcmsInstance.random(2, 2, np.random.default_rng(0))
    inst = build_tcwp_gadget(t)
    labels = np.array(inst.labels)
    assert (labels == "V7").sum() == tcwp_block_size(2, 2) == 8 * 4 * 2 + 12 * 2 * 2
    assert np.all(inst.voters[labels == "V7"] == 0)
    # every V7 voter sits on the rival
    a = preference_tensor(inst)
    assert np.all(a[labels == "V7"] == -1)


def test_theta_l_layout_orders_by_agreement():
    t = TcmsInstance([[1, 1], [0, 0], [1, 0]])
    order, blocks = theta_l_layout(t)
    assert order == [1, 2, 0]
    sizes = [b - a for a, b in blocks]
    assert sizes == [2, 3, 4]
    assert all(blocks[i][1] <= blocks[i + 1][0] for i in range(len(blocks) - 1))


def test_theta_l_gadget_shape():
    t = TcmsInstance.random(3, 3, np.random.default_rng(5))
    inst = build_theta_l_gadget(t)
    assert inst.ell == 81 and inst.n == 3
    assert np.array_equal(inst.voters[:, :3][np.argsort([int(l.split(":")[1]) for l in inst.labels])], t.voters)


def test_theta_l_overflow_is_reported():
    with pytest.raises(ElectionError):
        build_theta_l_gadget(TcmsInstance([[1]]))


def test_max2sat_brute_and_count():
    phi = Max2SatFormula(2, (((0, True), (1, True)), ((0, False), (1, False)), ((0, True), (1, False))))
    assert count_satisfied(phi, [True, False]) == 3
    assert max2sat_brute(phi)[0] == 3


def test_formula_validation():
    with pytest.raises(ElectionError):
        Max2SatFormula(2, (((0, True), (0, False)),))
    with pytest.raises(ElectionError):
        Max2SatFormula(2, (((0, True), (2, False)),))


def test_clause_rows():
    assert clause_row(((0, True), (1, True)), 3).tolist() == [1, 1, 0.5, 0]
    assert clause_row(((0, False), (2, False)), 3).tolist() == [0, 0.5, 0, 1]
    assert clause_row(((1, True), (0, False)), 3).tolist() == [0, 1, 0.5, 0.5]


def test_balanced_beta2_closes_the_gap():
    for alpha in (2.0, 5.0, 10.0):
        b2 = balanced_beta2(3.0, alpha)
        assert beta_agreement_gap(3.0, b2, alpha) == pytest.approx(0.0, abs=1e-12)


def test_max2sat_gadget_counts():
    phi = Max2SatFormula.random(3, 4, np.random.default_rng(2))
    g = build_max2sat_gadget(phi, beta1=1.0, beta2=2.0, alpha=4.0)
    n = 4
    assert g.counts["anchor"] == 4 * 9 * n * n * 3
    assert g.instance.n == max2sat_total_voters(3, n, 1.0, 2.0)
    assert g.instance.ell == 4 and g.instance.p == 2.0
    assert g.instance.weights.tolist() == [0, 0, 0, 1]


def test_max2sat_gadget_rejects_fractional_blocks():
    phi = Max2SatFormula.random(2, 3, np.random.default_rng(0))
    with pytest.raises(ElectionError):
        build_max2sat_gadget(phi, beta1=1.0, beta2=0.05, alpha=2.0)
