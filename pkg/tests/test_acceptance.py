"""
Long end-to-end runs; deselected by default, run with `pytest -m slow`.
"""
from fractions import Fraction

import pytest

from conftest import ordentlich
from hmm_entropy.expansion import (
    birch_lower,
    birch_upper,
    compare_bounds,
    expand,
    horizon,
    stabilization_check,
)
from hmm_entropy.numeric import McConfig, eval_expansion, exact_hn, mc_entropy, remainder_law

pytestmark = pytest.mark.slow


def assert_same_coefficients(a, b, tolerance=1e-9):
    assert a.f == b.f
    assert a.h0 == pytest.approx(b.h0, abs=tolerance)
    assert a.g == pytest.approx(b.g, abs=tolerance)


def test_black_hole_has_no_log_terms_at_order_two(bsc_black_hole):
    result = expand(bsc_black_hole, 2)
    assert result.f == (0, 0, 0)
    assert result.n0 == 18


@pytest.mark.parametrize("k", [0, 1])
def test_preset_bounds_agree(k, ordentlich_half, bec_positive, ge_positive):
    n = horizon(k)
    for model in (ordentlich_half, bec_positive, ge_positive):
        assert compare_bounds(birch_upper(model, n, k), birch_lower(model, n, k), k) == []


@pytest.mark.parametrize("k", [0, 1])
def test_fleet_bounds_agree(k, fleet):
    n = horizon(k)
    for model in fleet:
        assert compare_bounds(birch_upper(model, n, k), birch_lower(model, n, k), k) == []


@pytest.mark.parametrize("k", [0, 1])
def test_horizon_stability(k, fleet):
    n = horizon(k)
    for model in fleet:
        assert_same_coefficients(expand(model, k, n=n), expand(model, k, n=n + 2))


def test_stabilization_on_fleet(ordentlich_half, fleet):
    for i, model in enumerate([ordentlich_half] + fleet[:4]):
        for n, k in ((6, 0), (10, 1)):
            report = stabilization_check(model, n=n, k=k, trials=200, seed=100 + i)
            assert report.pairs_checked > 0
            assert report.ok, [str(c) for c in report.counterexamples]


@pytest.mark.parametrize("k", [0, 1])
def test_remainder_scaling(k):
    model = ordentlich(Fraction(1, 2))
    result = expand(model, k)
    eps = [1e-3, 1e-4]
    errors = [exact_hn(model, result.n0, e) - eval_expansion(result, e) for e in eps]
    assert remainder_law(errors, eps, k) == []


@pytest.mark.parametrize("preset,n", [("bsc", 14), ("bec", 14)])
def test_monte_carlo_agrees_with_exact(preset, n, ordentlich_half, bec_positive, monkeypatch):
    model = ordentlich_half if preset == "bsc" else bec_positive
    monkeypatch.setenv("HMM_ENTROPY_MAX_LEAVES", str(model.symbols ** (n + 1)))
    eps = 1e-2
    run = mc_entropy(model, McConfig(samples=10 ** 6, seed=2024, eps=eps))
    exact = exact_hn(model, n, eps)
    assert abs(run.estimate - exact) <= 3 * run.stderr
