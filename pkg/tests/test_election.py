import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from salience.election import (
    TAU_TIE,
    ElectionError,
    ElectionInstance,
    IntervalBox,
    LinearModel,
    NormBudget,
    SigmoidModel,
    c1_wins,
    check_simplex,
    deterministic_tally,
    expected_votes,
    plurality_outcome,
    preference_tensor,
    unique_voters,
    weighted_distance,
)


def two_issue(cands, voters, w=(0.5, 0.5), p=2.0):
    return ElectionInstance(np.array(cands, float), np.array(voters, float), w, p)


# weighted distance ---------------------------------------------------------


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 7.0])
def test_distance_zero_when_voter_sits_on_candidate(p):
    inst = two_issue([[0.3, 0.9], [0, 0]], [[0.3, 0.9]], w=(0.2, 0.8), p=p)
    assert weighted_distance(inst, 0, 0) == 0.0


def test_distance_p1_half_weight():
    inst = two_issue([[1, 0], [0, 1]], [[0, 0]], p=1.0)
    assert weighted_distance(inst, 0, 0) == pytest.approx(0.5, abs=1e-15)


def test_distance_p2_unit():
    inst = two_issue([[1, 1], [0, 1]], [[0, 0]], p=2.0)
    assert weighted_distance(inst, 0, 0) == pytest.approx(1.0, abs=1e-15)


def test_distance_rejects_bad_index_and_weights():
    inst = two_issue([[1, 1], [0, 1]], [[0, 0]])
    with pytest.raises(IndexError):
        weighted_distance(inst, 1, 0)
    with pytest.raises(IndexError):
        weighted_distance(inst, 0, 2)
    with pytest.raises(ElectionError):
        weighted_distance(inst, 0, 0, w=[0.6, 0.6])


# instance invariants --------------------------------------------------------


def test_instance_validation():
    with pytest.raises(ElectionError):
        two_issue([[1, 1]], [[0, 0]])  # one candidate
    with pytest.raises(ElectionError):
        two_issue([[1, 1], [0, 0]], [[0, 0]], w=(0.5, 0.4))
    with pytest.raises(ElectionError):
        two_issue([[1, 1], [0, 0]], [[0, 0]], p=0.5)
    with pytest.raises(ElectionError):
        ElectionInstance(np.ones((2, 2)), np.ones((1, 3)), [0.5, 0.5])
    with pytest.raises(ElectionError):
        IntervalBox([[0.5, 0.2]])
    with pytest.raises(ElectionError):
        NormBudget(2, -1)


def test_simplex_tolerance():
    check_simplex([0.5, 0.5 + 5e-10], 2)
    with pytest.raises(ElectionError):
        check_simplex([0.5, 0.5 + 5e-9], 2)


# preference tensor ----------------------------------------------------------


def test_tensor_agreeing_issue_is_plus_one():
    inst = two_issue([[1, 0], [0, 0]], [[1, 1]])
    assert preference_tensor(inst)[0, 0, 0] == 1.0


def test_tensor_rival_issue_is_minus_one():
    inst = two_issue([[1, 0], [0, 0]], [[0, 1]])
    assert preference_tensor(inst)[0, 0, 0] == -1.0


def test_tensor_zero_where_candidates_coincide(rng):
    cands = rng.random((3, 4))
    cands[2, 1] = cands[0, 1]
    cands[1, 3] = cands[0, 3]
    inst = ElectionInstance(cands, rng.random((5, 4)), np.full(4, 0.25), 2.5)
    a = preference_tensor(inst)
    assert np.all(a[:, 1, 1] == 0) and np.all(a[:, 0, 3] == 0)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.3])
def test_binary_tensor_entries(rng, p):
    inst = ElectionInstance(rng.integers(0, 2, (3, 5)), rng.integers(0, 2, (7, 5)), np.full(5, 0.2), p)
    assert set(np.unique(preference_tensor(inst))) <= {-1.0, 0.0, 1.0}


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    p=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
    m=st.integers(2, 4),
)
def test_inner_product_sign_matches_distances(seed, p, m):
    rng = np.random.default_rng(seed)
    inst = ElectionInstance(rng.random((m, 3)), rng.random((4, 3)), rng.dirichlet(np.ones(3)), p)
    w = inst.weights
    a = preference_tensor(inst)
    for j in range(inst.n):
        d0 = weighted_distance(inst, j, 0) ** p
        for i in range(1, m):
            di = weighted_distance(inst, j, i) ** p
            s = float(w @ a[j, i - 1])
            assert abs(s - (di - d0)) <= 1e-12
            if abs(s) > TAU_TIE:
                assert np.sign(s) == np.sign(di - d0)


# tallying -------------------------------------------------------------------


def test_voter_agreeing_everywhere_picks_c1(rng):
    inst = two_issue([[1, 0], [0, 1]], [[1, 0]])
    for _ in range(20):
        assert deterministic_tally(inst, rng.dirichlet([1, 1])).chosen[0] == 0


def test_equidistant_voter_picks_c1():
    inst = two_issue([[1, 0], [0, 1]], [[0, 0]])
    t = deterministic_tally(inst)
    assert t.chosen[0] == 0


def test_voter_on_rival_picks_rival(rng):
    inst = two_issue([[1, 1], [0, 0]], [[0, 0]])
    for _ in range(20):
        assert deterministic_tally(inst, rng.dirichlet([1, 1])).chosen[0] == 1


def test_tie_tolerance_goes_to_lower_index():
    # the rival is closer, but only by less than the tie tolerance
    inst = ElectionInstance([[1.0], [0.0]], [[0.5 - 1e-10]], [1.0], 1.0)
    assert deterministic_tally(inst).chosen[0] == 0
    inst = ElectionInstance([[1.0], [0.0]], [[0.5 - 1e-8]], [1.0], 1.0)
    assert deterministic_tally(inst).chosen[0] == 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 4), n=st.integers(1, 9))
def test_tally_counts_every_voter(seed, m, n):
    rng = np.random.default_rng(seed)
    inst = ElectionInstance(rng.random((m, 3)), rng.random((n, 3)), rng.dirichlet(np.ones(3)), 2.0)
    t = deterministic_tally(inst)
    assert t.votes.sum() == n
    assert np.array_equal(t.votes, np.bincount(t.chosen, minlength=m))


@pytest.mark.parametrize("votes,winner", [((3, 1, 1), 0), ((2, 2), 0), ((0, 5), 1), ((1, 4, 4), 1)])
def test_plurality_outcome(votes, winner):
    assert plurality_outcome(votes) == winner


def test_c1_wins_on_tie():
    inst = two_issue([[1, 1], [0, 0]], [[1, 1], [0, 0]])
    assert c1_wins(deterministic_tally(inst))


# expected votes -------------------------------------------------------------


def test_sigmoid_neutral_voter_contributes_half():
    inst = two_issue([[1, 0], [0, 1]], [[0, 0]])
    assert expected_votes(inst, inst.weights, SigmoidModel(4.0)).value == 0.5


def test_linear_affine_evaluation():
    inst = ElectionInstance([[1.0], [0.0]], [[1.0]], [1.0], 2.0)
    ev = expected_votes(inst, [1.0], LinearModel(0.5, [0.25]))
    assert ev.value == 0.75 and not ev.out_of_range


def test_identical_voters_scale_linearly(rng):
    inst1 = ElectionInstance(rng.random((2, 3)), rng.random((1, 3)), np.full(3, 1 / 3), 2.0)
    inst5 = ElectionInstance(inst1.candidates, np.repeat(inst1.voters, 5, axis=0), inst1.weights, 2.0)
    for model in (SigmoidModel(2.0), LinearModel(0.3, [0.2])):
        one = expected_votes(inst1, inst1.weights, model).value
        assert expected_votes(inst5, inst5.weights, model).value == pytest.approx(5 * one, abs=1e-12)


def test_linear_out_of_range_is_flagged_not_fatal():
    inst = ElectionInstance([[1.0], [0.0]], [[1.0]], [1.0], 2.0)
    ev = expected_votes(inst, [1.0], LinearModel(0.9, [0.5]))
    assert ev.out_of_range and ev.value == pytest.approx(1.4)


def test_default_linear_preset_stays_in_range(rng):
    inst = ElectionInstance(rng.random((2, 4)), rng.random((6, 4)), np.full(4, 0.25), 2.0)
    model = LinearModel.default_for(inst)
    for _ in range(50):
        ev = expected_votes(inst, rng.dirichlet(np.ones(4)), model)
        assert not ev.out_of_range


def test_unique_voters_groups_exactly():
    inst = ElectionInstance([[1.0, 0], [0, 1]], [[0, 1], [1, 0], [0, 1], [-0.0, 1]], [0.5, 0.5])
    reps, mult, members = unique_voters(inst)
    assert mult.tolist() == [3, 1]
    assert members == [(0, 2, 3), (1,)]
