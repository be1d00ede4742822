import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import constant_model, random_models
from hmm_entropy.errors import ModelValidationError, PrunedSequenceError, UnknownSymbolError
from hmm_entropy.hmm import (
    BeliefVector,
    HmmModel,
    Kind,
    SymbolDetail,
    adjugate,
    belief_after,
    belief_step,
    check_normal,
    classify,
    cond_prob,
    cond_prob_from,
    normalize_belief,
    restrict,
    seq_prob,
    seq_prob_from,
    stationary_series,
)
from hmm_entropy.series import TRUNCATED_ZERO, TruncSeries, add, align, div, mul

F = Fraction


def test_ordentlich_layout(ordentlich_half):
    assert ordentlich_half.states == 4
    assert ordentlich_half.phi == (0, 1, 1, 0)
    # row (0,0): pi_00 (1-eps), pi_00 eps, pi_01 (1-eps), pi_01 eps
    assert [e.coeffs for e in ordentlich_half.delta[0]] == [
        (F(1, 2), F(-1, 2)), (0, F(1, 2)), (F(1, 2), F(-1, 2)), (0, F(1, 2)),
    ]


def test_validation_rejects_bad_rows():
    with pytest.raises(ModelValidationError):
        constant_model([[F(1, 2), F(1, 3)], [1, 0]], [0, 1])


def test_validation_rejects_unused_symbol():
    with pytest.raises(ModelValidationError):
        constant_model([[1]], [0], symbols=2)


def test_validation_rejects_negative_leading_coefficient():
    with pytest.raises(ModelValidationError):
        HmmModel.from_coeffs([[[0, -1], [1, 1]], [[1], [0]]], [0, 1])


def test_stationary_is_product_of_input_and_noise(ordentlich_half):
    model = ordentlich_half.at_truncation(4)
    pi = stationary_series(model)
    length = pi.trunc_len
    expected = [
        TruncSeries.from_coeffs([F(2, 3), F(-2, 3)], length),
        TruncSeries.from_coeffs([0, F(2, 3)], length),
        TruncSeries.from_coeffs([F(1, 3), F(-1, 3)], length),
        TruncSeries.from_coeffs([0, F(1, 3)], length),
    ]
    assert list(pi.entries) == expected
    assert pi.at_zero() == (F(2, 3), 0, F(1, 3), 0)


def test_stationary_of_constant_cycle():
    model = constant_model([[0, 1], [1, 0]], [0, 1])
    assert model.stationary.at_zero() == (F(1, 2), F(1, 2))


def test_adjugate_of_constant_matrix():
    a, b, c, d = (TruncSeries.constant(v, 1) for v in (2, 3, 5, 7))
    adj = adjugate([[a, b], [c, d]])
    assert [[e.coeffs[0] for e in row] for row in adj] == [[7, -3], [-5, 2]]


def test_classification(ordentlich_half, bsc_black_hole, bec_positive):
    assert classify(bsc_black_hole).kind is Kind.BLACK_HOLE
    assert classify(ordentlich_half).kind is Kind.WEAK_BLACK_HOLE
    result = classify(bec_positive)
    assert result.kind is Kind.WEAK_BLACK_HOLE
    assert result.detail[2] is SymbolDetail.ALL_ZERO


def test_identity_is_neither_and_reducible():
    model = constant_model([[1, 0], [0, 1]], [0, 0])
    assert classify(model).kind is Kind.NEITHER
    assert classify(model).detail == (SymbolDetail.HIGHER_RANK,)
    violations = check_normal(model)
    assert any("reducible" in v for v in violations)
    assert any("weak Black Hole" in v for v in violations)


def test_normal_models_have_no_violations(ordentlich_half, bsc_black_hole, fleet):
    assert check_normal(ordentlich_half) == []
    assert check_normal(bsc_black_hole) == []
    for model in fleet:
        assert check_normal(model) == []


def test_restrict_keeps_labelled_columns(ordentlich_half):
    restricted = restrict(ordentlich_half, 1)
    for row in restricted:
        assert row[0].is_truncated_zero() and row[3].is_truncated_zero()
    assert restricted[0][1] == ordentlich_half.delta[0][1]
    with pytest.raises(UnknownSymbolError):
        restrict(ordentlich_half, 2)


def test_seq_prob_single_symbol(ordentlich_half):
    p = seq_prob(ordentlich_half.at_truncation(4), (0,))
    assert p.coeffs[:2] == (F(2, 3), F(-1, 3))


def test_seq_prob_needs_a_flip_for_two_ones(ordentlich_half):
    p = seq_prob(ordentlich_half.at_truncation(4), (1, 1))
    assert p.order() == 1
    assert p.coeffs[1] == F(2, 3)


def test_seq_probs_sum_to_one(ordentlich_half):
    model = ordentlich_half.at_truncation(4)
    probs = [seq_prob(model, z) for z in itertools.product(range(2), repeat=3)]
    probs = align(*probs)
    total = probs[0]
    for p in probs[1:]:
        total = add(total, p)
    assert total == TruncSeries.one(total.trunc_len)


def test_cond_prob_is_ratio(ordentlich_half):
    model = ordentlich_half.at_truncation(5)
    c = cond_prob(model, (1,), 1)
    assert c.order() == 1
    assert c.coeffs[1] == 2


def test_belief_from_vertex(ordentlich_half):
    model = ordentlich_half.at_truncation(4)
    start = BeliefVector.vertex(2, model.states, 4)
    # from hidden state (1, 0) the input must return to 0
    assert seq_prob_from(model, start, (0,)).coeffs[:2] == (1, -1)
    assert cond_prob_from(model, start, (), 1).coeffs[:2] == (0, 1)


def test_belief_step_prunes_impossible_symbol():
    model = constant_model([[0, 1], [1, 0]], [0, 1])
    mass, belief = belief_step(model.stationary, model, 0)
    assert mass.coeffs[0] == F(1, 2)
    assert belief.at_zero() == (1, 0)
    with pytest.raises(PrunedSequenceError):
        belief_after(model, (0, 0))
    with pytest.raises(UnknownSymbolError):
        belief_step(model.stationary, model, 3)


def test_normalize_belief():
    eps = TruncSeries.monomial(1, 1, 3)
    belief = normalize_belief([eps, TruncSeries.one(3)])
    assert belief.entries[0].coeffs == (0, 1, -1, 1)
    assert belief.entries[1].coeffs == (1, -1, 1, -1)


def test_belief_must_sum_to_one():
    with pytest.raises(ModelValidationError):
        BeliefVector((TruncSeries.constant(F(1, 2), 2), TruncSeries.constant(F(1, 3), 2)))


def test_numeric_instantiation(ordentlich_half):
    matrix = ordentlich_half.numeric(0.1)
    assert matrix.shape == (4, 4)
    np.testing.assert_allclose(matrix.sum(axis=1), 1.0)
    assert matrix[0, 1] == pytest.approx(0.05)
    assert matrix[2, 0] == pytest.approx(0.9)


sequences = st.lists(st.integers(0, 1), max_size=8).map(tuple)


@settings(max_examples=60, deadline=None)
@given(random_models(), sequences, st.integers(0, 1))
def test_cond_prob_is_ratio_of_sequence_probabilities(model, z, last):
    model = model.at_truncation(6)
    p = seq_prob(model, z)
    order = p.order()
    assume(order is not TRUNCATED_ZERO and order <= 2)
    c = cond_prob(model, z, last)
    ratio = div(seq_prob(model, z + (last,)), p)
    common = min(c.trunc_len, ratio.trunc_len)
    assert c.truncate(common) == ratio.truncate(common)


@settings(max_examples=60, deadline=None)
@given(random_models(), sequences)
def test_cond_probs_sum_to_one(model, z):
    model = model.at_truncation(6)
    p = seq_prob(model, z)
    order = p.order()
    assume(order is not TRUNCATED_ZERO and order <= 2)
    total = None
    for c in align(*(cond_prob(model, z, a) for a in range(model.symbols))):
        total = c if total is None else add(total, c)
    assert total == TruncSeries.one(total.trunc_len)


@settings(max_examples=40, deadline=None)
@given(random_models(positive=True), sequences, st.integers(0, 3))
def test_black_hole_beliefs_forget_their_start(model, z, start):
    model = model.at_truncation(4)
    assert classify(model).kind is Kind.BLACK_HOLE
    vertex = BeliefVector.vertex(start % model.states, model.states, model.trunc_len)
    for a in range(model.symbols):
        _, from_pi = belief_step(model.stationary, model, a)
        _, from_vertex = belief_step(vertex, model, a)
        assert from_pi.at_zero() == from_vertex.at_zero()
        assert cond_prob(model, z, a).order() == 0


@settings(max_examples=40, deadline=None)
@given(random_models(max_states=5))
def test_stationary_series_is_invariant(model):
    model = model.at_truncation(5)
    pi = stationary_series(model)
    for j in range(model.states):
        total = None
        for i in range(model.states):
            term = mul(*align(pi.entries[i], model.delta[i][j]))
            total = term if total is None else add(*align(total, term))
        assert total == pi.entries[j].truncate(total.trunc_len)


def test_stationary_without_unique_limit_uses_adjugate():
    # Delta(0) is the identity; pi(eps) = (1/2, 1/2) for every eps > 0
    model = HmmModel.from_coeffs([[[1, -1], [0, 1]], [[0, 1], [1, -1]]], [0, 1], trunc_len=3)
    pi = stationary_series(model)
    half = TruncSeries.constant(F(1, 2), pi.trunc_len)
    assert pi.entries == (half, half)
