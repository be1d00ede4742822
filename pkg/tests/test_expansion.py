import itertools
import math
from fractions import Fraction

import mpmath
import pytest

from conftest import constant_model, ordentlich
from hmm_entropy.config import get_series_slack
from hmm_entropy.errors import (
    ExpansionError,
    HorizonError,
    ModelValidationError,
    OrderGuardError,
    TruncationStarvationError,
)
from hmm_entropy.expansion import (
    ExpansionDiagnostics,
    ExpansionResult,
    _with_slack,
    birch_lower,
    birch_upper,
    compare_bounds,
    enumerate_sequences,
    expand,
    horizon,
    stabilization_check,
    working_trunc_len,
)
from hmm_entropy.hmm import seq_prob
from hmm_entropy.numeric import exact_hn
from hmm_entropy.series import TRUNCATED_ZERO, LogSeries, TruncSeries, evaluate

F = Fraction


def binary_entropy(p: float) -> float:
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def test_horizon_and_truncation():
    assert horizon(0) == 6
    assert horizon(2) == 18
    assert working_trunc_len(1, 4) == 8


def test_enumeration_matches_brute_force(ordentlich_half):
    n, k = 3, 0
    streamed = dict(enumerate_sequences(ordentlich_half, n, k))
    working = ordentlich_half.at_truncation(working_trunc_len(k, get_series_slack()))
    expected = {}
    for z in itertools.product(range(2), repeat=n + 1):
        p = seq_prob(working, z)
        order = p.order()
        if order is not TRUNCATED_ZERO and order <= k + 1:
            expected[z] = p
    assert list(streamed) == sorted(streamed)
    assert set(streamed) == set(expected)
    for z, p in streamed.items():
        common = min(p.trunc_len, expected[z].trunc_len)
        assert p.truncate(common) == expected[z].truncate(common)


def test_enumeration_drops_forbidden_pairs(ordentlich_half):
    # "11" is impossible at eps = 0; "111" needs two flips
    streamed = [z for z, _ in enumerate_sequences(ordentlich_half, 2, 0)]
    assert (0, 1, 1) in streamed
    assert (1, 1, 1) not in streamed


@pytest.mark.parametrize("p", [F(1, 4), F(1, 2), F(3, 4)])
def test_ordentlich_first_log_coefficient(p):
    result = expand(ordentlich(p), 0)
    assert result.f == (-p * (2 - p) / (1 + p),)
    assert result.g == ()
    assert result.n0 == 6
    assert result.h0 == pytest.approx(binary_entropy(float(p)) / (1 + float(p)), rel=1e-12)


def test_expand_verify_records_agreement(ordentlich_half):
    result = expand(ordentlich_half, 0, verify=True)
    assert result.f == (F(-1, 2),)
    assert result.diagnostics.bound_agreement is True
    assert result.diagnostics.lower_sequences > 0


def test_black_hole_has_no_log_term(bsc_black_hole):
    result = expand(bsc_black_hole, 0)
    assert result.f == (0,)


def test_iid_source_is_flat(iid_uniform):
    upper = birch_upper(iid_uniform, 6, 0)
    lower = birch_lower(iid_uniform, 6, 0)
    assert upper.plain[0] == pytest.approx(math.log(2))
    assert compare_bounds(upper, lower, 0) == []
    assert expand(iid_uniform, 0).diagnostics.sequences == 2 ** 7


def test_one_state_model(one_state):
    result = expand(one_state, 0)
    assert result.h0 == 0
    assert result.f == (0,)


def test_horizon_is_enforced(ordentlich_half):
    with pytest.raises(HorizonError):
        birch_upper(ordentlich_half, 5, 0)
    with pytest.raises(HorizonError):
        birch_lower(ordentlich_half, 6, -1)
    with pytest.raises(HorizonError):
        expand(ordentlich_half, 0, n=4)


def test_longer_horizon_keeps_log_coefficient(ordentlich_half):
    assert expand(ordentlich_half, 0, n=8).f == (F(-1, 2),)


def test_order_guard(monkeypatch, ordentlich_half):
    monkeypatch.setenv("HMM_ENTROPY_MAX_K", "0")
    with pytest.raises(OrderGuardError):
        expand(ordentlich_half, 1)


def test_non_normal_model_is_rejected():
    model = constant_model([[1, 0], [0, 1]], [0, 0])
    with pytest.raises(ModelValidationError, match="reducible"):
        expand(model, 0)


def test_discarded_mass_is_beyond_reported_order(ordentlich_half):
    diagnostics = expand(ordentlich_half, 0).diagnostics
    assert diagnostics.discarded_order is None or diagnostics.discarded_order >= 2
    assert diagnostics.pruned > 0
    assert diagnostics.trunc_len == working_trunc_len(0, diagnostics.slack)


def test_threads_do_not_change_result(ordentlich_half):
    assert expand(ordentlich_half, 0, threads=2) == expand(ordentlich_half, 0, threads=1)


def test_extended_precision_agrees(monkeypatch, ordentlich_half):
    monkeypatch.setattr(mpmath.mp, "dps", mpmath.mp.dps)
    double = expand(ordentlich_half, 0)
    monkeypatch.setenv("HMM_ENTROPY_PRECISION", "extended")
    extended = expand(ordentlich_half, 0)
    assert extended.f == double.f
    assert float(extended.h0) == pytest.approx(double.h0, rel=1e-12)


def test_slack_doubles_on_starvation():
    seen = []

    def run(slack):
        seen.append(slack)
        if slack < 16:
            raise TruncationStarvationError("starved")
        return slack

    assert _with_slack(run, slack=4) == 16
    assert seen == [4, 8, 16]


def test_slack_gives_up(monkeypatch):
    monkeypatch.setenv("HMM_ENTROPY_SLACK_RETRIES", "1")

    def run(slack):
        raise TruncationStarvationError(f"starved at {slack}")

    with pytest.raises(TruncationStarvationError, match="starved at 8"):
        _with_slack(run, slack=4)


def test_compare_bounds_reports_both_parts():
    upper = LogSeries(plain=(0.5, 0.25), logpart=TruncSeries.from_coeffs([0, F(-1, 2), 1], 2))
    lower = LogSeries(plain=(0.5, 0.3), logpart=TruncSeries.from_coeffs([0, F(-1, 3), 1], 2))
    problems = compare_bounds(upper, lower, 1)
    assert len(problems) == 2
    assert problems[0].startswith("eps^1 log eps")
    assert problems[1].startswith("eps^1:")


def test_result_shape_is_checked():
    with pytest.raises(ExpansionError):
        ExpansionResult(k=1, h0=0.0, f=(F(1),), g=(), n0=12)


def test_surviving_constant_log_coefficient_is_an_error():
    series = LogSeries(plain=(0.0,), logpart=TruncSeries.from_coeffs([1, 0], 1))
    with pytest.raises(ExpansionError):
        ExpansionResult.from_log_series(series, 0, 6)


def test_result_document_round_trip(ordentlich_half):
    result = expand(ordentlich_half, 0)
    doc = result.to_document()
    assert doc["f"] == ["-1/2"]
    assert ExpansionResult.from_document(doc) == result
    with pytest.raises(ExpansionError):
        ExpansionResult.from_document({"format": "other"})


def test_diagnostics_defaults():
    assert ExpansionDiagnostics().bound_agreement is None


def test_fleet_bounds_agree_at_order_zero(fleet):
    for model in fleet[:5]:
        result = expand(model, 0, verify=True)
        assert result.diagnostics.bound_agreement is True


def test_stabilization_at_order_zero(ordentlich_half):
    report = stabilization_check(ordentlich_half, n=5, k=0, trials=12, seed=7)
    assert report.guaranteed_degree == 4
    assert report.pairs_checked > 0
    assert report.ok, [str(c) for c in report.counterexamples]


def test_stabilization_rejects_unknown_variant(ordentlich_half):
    with pytest.raises(ValueError):
        stabilization_check(ordentlich_half, n=5, k=0, trials=1, seed=0, variants=("shuffle",))


def test_stabilization_below_guaranteed_range_checks_nothing(ordentlich_half):
    report = stabilization_check(ordentlich_half, n=3, k=1, trials=6, seed=1)
    assert report.guaranteed_degree < 0
    assert report.ok



@pytest.mark.slow
@pytest.mark.parametrize("name,k", [
    ("ordentlich_half", 1),
    ("bec_positive", 0),
    ("ge_positive", 0),
])
def test_exact_entropy_lies_between_bounds(request, monkeypatch, name, k):
    model = request.getfixturevalue(name)
    n = horizon(k)
    monkeypatch.setenv("HMM_ENTROPY_MAX_LEAVES", str(model.symbols ** (n + 1)))
    eps = 1e-4
    tol = 100 * eps ** (k + 1)
    exact = exact_hn(model, n, eps)
    assert evaluate(birch_lower(model, n, k), eps) - tol <= exact
    assert exact <= evaluate(birch_upper(model, n, k), eps) + tol


def test_divided_result_scales_every_coefficient():
    result = ExpansionResult(k=1, h0=1.0, f=(F(-1, 2), F(1, 3)), g=(0.5,), n0=12)
    halved = result.divided(2)
    assert halved.h0 == 0.5
    assert halved.f == (F(-1, 4), F(1, 6))
    assert halved.g == (0.25,)
    assert result.divided(1) is result
