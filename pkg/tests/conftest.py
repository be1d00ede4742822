from fractions import Fraction
from typing import List

import numpy as np
import pytest
from hypothesis import strategies as st

from hmm_entropy.channels import MarkovInput, bec_model, bsc_model, ge_model
from hmm_entropy.hmm import HmmModel

FLEET_SEED = 2024
FLEET_SIZE = 20


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs (deselect with -m 'not slow')")


def ordentlich_input(p) -> MarkovInput:
    p = Fraction(p)
    return MarkovInput.from_matrix([[1 - p, p], [1, 0]])


def ordentlich(p) -> HmmModel:
    """BSC fed by the chain [[1-p, p], [1, 0]]: a weak Black Hole."""
    return bsc_model(ordentlich_input(p))


def positive_input() -> MarkovInput:
    return MarkovInput.from_matrix([[Fraction(1, 3), Fraction(2, 3)], [Fraction(1, 2), Fraction(1, 2)]])


def constant_model(delta, phi, symbols=None) -> HmmModel:
    return HmmModel.from_coeffs([[[c] for c in row] for row in delta], phi,
                                symbols=symbols, trunc_len=0)


def random_weak_black_hole(rng: np.random.Generator, states: int, symbols: int = 2,
                           positive: bool = False) -> HmmModel:
    """
    Delta(eps) = (1 - eps) Delta(0) + eps R with Delta(0)[i][j] = alpha_i(phi(j)) beta_j.

    beta sums to one within each symbol class and alpha_i is a distribution
    over symbols, so every Delta_a(0) is zero or rank one. R is strictly
    positive, which makes Delta(eps) irreducible for eps > 0. With positive
    set every alpha_i(a) > 0 and the model is a Black Hole.
    """
    phi = list(range(symbols)) + [int(a) for a in rng.integers(0, symbols, size=states - symbols)]
    alpha = []
    for _ in range(states):
        row = [int(w) for w in rng.integers(1 if positive else 0, 3, size=symbols)]
        if not any(row):
            row[int(rng.integers(symbols))] = 1
        alpha.append([Fraction(w, sum(row)) for w in row])
    raw_beta = [int(w) for w in rng.integers(1, 4, size=states)]
    class_total = {a: sum(raw_beta[j] for j in range(states) if phi[j] == a) for a in range(symbols)}
    beta = [Fraction(raw_beta[j], class_total[phi[j]]) for j in range(states)]
    delta = []
    for i in range(states):
        raw_r = [int(w) for w in rng.integers(1, 4, size=states)]
        row = []
        for j in range(states):
            base = alpha[i][phi[j]] * beta[j]
            r = Fraction(raw_r[j], sum(raw_r))
            row.append([base, r - base])
        delta.append(row)
    return HmmModel.from_coeffs(delta, phi, symbols=symbols, trunc_len=1)


def random_models(positive: bool = False, max_states: int = 4):
    """Hypothesis strategy over seeded random (weak) Black Holes."""
    return st.builds(
        lambda seed, states: random_weak_black_hole(np.random.default_rng(seed), states,
                                                    positive=positive),
        st.integers(0, 2 ** 32 - 1),
        st.integers(2, max_states),
    )


def weak_black_hole_fleet(size: int = FLEET_SIZE, seed: int = FLEET_SEED) -> List[HmmModel]:
    rng = np.random.default_rng(seed)
    return [random_weak_black_hole(rng, int(rng.integers(2, 5))) for _ in range(size)]


@pytest.fixture
def ordentlich_half() -> HmmModel:
    return ordentlich(Fraction(1, 2))


@pytest.fixture
def bsc_black_hole() -> HmmModel:
    return bsc_model(positive_input())


@pytest.fixture
def bec_positive() -> HmmModel:
    return bec_model(positive_input())


@pytest.fixture
def ge_positive() -> HmmModel:
    return ge_model(positive_input(), Fraction(1, 2), Fraction(1, 2), Fraction(2))


@pytest.fixture
def one_state() -> HmmModel:
    return constant_model([[1]], [0])


@pytest.fixture
def iid_uniform() -> HmmModel:
    half = Fraction(1, 2)
    return constant_model([[half, half], [half, half]], [0, 1])


@pytest.fixture
def fleet() -> List[HmmModel]:
    return weak_black_hole_fleet()
