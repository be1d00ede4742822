"""Numeric oracles at a fixed eps.

exact_hn sums the Birch upper bound H_n(Z) over every sequence with float
beliefs, mc_entropy estimates H(Z) from one long sampled path, and
eval_expansion evaluates an ExpansionResult. Both oracles walk their own
float kernels rather than the TruncSeries tree of the expansion, so they
cross-check it independently.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numba
import numpy as np

from .config import get_bootstrap_config, get_enumeration_budget
from .errors import BudgetExceededError, McConfigError, NumericError, UnderflowError
from .expansion import ExpansionResult
from .hmm import HmmModel

logger = logging.getLogger(__name__)

GENERATOR = "PCG64"
SIMPLEX_TOLERANCE = 1e-12
REMAINDER_FLOOR = 1e-13


def numeric_stationary(matrix: np.ndarray) -> np.ndarray:
    """
    Stationary row vector of a stochastic matrix by least squares on
    pi (P - I) = 0, sum(pi) = 1.

    Raises:
        NumericError: If the solution is not a probability vector.
    """
    n = matrix.shape[0]
    a = np.vstack([matrix.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.any(pi < -1e-12) or not np.allclose(pi @ matrix, pi, atol=1e-10):
        raise NumericError(f"no stationary distribution found (got {pi})")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _instantiate(model: HmmModel, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    if not eps > 0:
        raise NumericError(f"eps must be positive, got {eps}")
    matrix = model.numeric(eps)
    if np.any(matrix < 0) or not np.allclose(matrix.sum(axis=1), 1.0, atol=1e-12):
        raise NumericError(f"Delta({eps}) is not stochastic")
    return matrix, numeric_stationary(matrix)


# =============================================================================
# Exact finite-horizon entropy
# =============================================================================

@numba.njit(cache=True)
def _hn_tree(restricted, pi, n):
    # Depth-first over z_{-n}..z_{-1}; one belief row per level, zero-mass branches skipped.
    symbols = restricted.shape[0]
    b = restricted.shape[1]
    beliefs = np.empty((n + 1, b))
    probs = np.empty(n + 1)
    choice = np.zeros(n + 1, dtype=np.int64)
    nxt = np.empty(b)
    beliefs[0, :] = pi
    probs[0] = 1.0
    total = 0.0
    depth = 0
    while depth >= 0:
        if depth == n:
            acc = 0.0
            for a in range(symbols):
                mass = 0.0
                for j in range(b):
                    for i in range(b):
                        mass += beliefs[n, i] * restricted[a, i, j]
                if mass > 0.0:
                    acc += mass * math.log(mass)
            total -= probs[n] * acc
            depth -= 1
            continue
        a = choice[depth]
        if a == symbols:
            depth -= 1
            continue
        choice[depth] = a + 1
        mass = 0.0
        for j in range(b):
            s = 0.0
            for i in range(b):
                s += beliefs[depth, i] * restricted[a, i, j]
            nxt[j] = s
            mass += s
        if not mass > 0.0:
            continue
        for j in range(b):
            beliefs[depth + 1, j] = nxt[j] / mass
        probs[depth + 1] = probs[depth] * mass
        choice[depth + 1] = 0
        depth += 1
    return total


def exact_hn(model: HmmModel, n: int, eps: float) -> float:
    """
    H_n(Z) = H(Z_0 | Z_{-n}^{-1}) at a fixed eps, in nats.

    All A^{n+1} sequences are visited depth first with normalized float
    beliefs, holding one belief per level; zero-probability branches are
    dropped.

    Raises:
        BudgetExceededError: If A^{n+1} exceeds HMM_ENTROPY_MAX_LEAVES.
    """
    budget = get_enumeration_budget()
    if model.symbols ** (n + 1) > budget:
        raise BudgetExceededError(
            f"{model.symbols}^{n + 1} sequences exceed the budget {budget} (HMM_ENTROPY_MAX_LEAVES)"
        )
    matrix, pi = _instantiate(model, eps)
    phi = np.asarray(model.phi)
    restricted = np.stack([matrix * (phi == a)[None, :] for a in range(model.symbols)])
    return float(_hn_tree(restricted, pi, n)) + 0.0


# =============================================================================
# Monte Carlo entropy rate
# =============================================================================

@dataclass(frozen=True)
class McConfig:
    """
    Monte Carlo run parameters.

    Attributes:
        samples (int): Path length N after burn-in, at least 1000.
        burnin (int): Discarded initial steps.
        seed (int): Seed of the numpy PCG64 generator.
        eps (float): Noise level in (0, 1/2].
    """

    samples: int
    burnin: int = 1000
    seed: int = 0
    eps: float = 0.01

    def __post_init__(self):
        if self.samples < 1000:
            raise McConfigError(f"samples must be at least 1000, got {self.samples}")
        if self.burnin < 0:
            raise McConfigError(f"burn-in must be non-negative, got {self.burnin}")
        if not 0 < self.eps <= 0.5:
            raise McConfigError(f"eps must lie in (0, 1/2], got {self.eps}")


@dataclass(frozen=True)
class McResult:
    estimate: float
    stderr: float
    diagnostics: dict = field(default_factory=dict)


@numba.njit(cache=True)
def _sample_states(cdf, initial_cdf, uniforms):
    # Inverse-CDF sampling of the hidden path; uniforms[0] draws the start.
    n = len(uniforms)
    states = np.empty(n, dtype=np.int64)
    b = cdf.shape[0]
    state = 0
    while state < b - 1 and uniforms[0] > initial_cdf[state]:
        state += 1
    states[0] = state
    for t in range(1, n):
        u = uniforms[t]
        nxt = 0
        while nxt < b - 1 and u > cdf[state, nxt]:
            nxt += 1
        state = nxt
        states[t] = state
    return states


@numba.njit(cache=True)
def _forward_log_masses(matrix, phi, pi, outputs):
    # Normalized forward recursion; returns (log masses, failing step, max simplex deviation).
    n = len(outputs)
    b = matrix.shape[0]
    log_masses = np.zeros(n)
    belief = pi.copy()
    nxt = np.zeros(b)
    deviation = 0.0
    for t in range(n):
        z = outputs[t]
        total = 0.0
        for j in range(b):
            acc = 0.0
            if phi[j] == z:
                for i in range(b):
                    acc += belief[i] * matrix[i, j]
            nxt[j] = acc
            total += acc
        if not total > 0.0 or not math.isfinite(total):
            return log_masses, t, deviation
        log_masses[t] = math.log(total)
        s = 0.0
        for j in range(b):
            belief[j] = nxt[j] / total
            s += belief[j]
        if abs(s - 1.0) > deviation:
            deviation = abs(s - 1.0)
    return log_masses, -1, deviation


def block_bootstrap_stderr(values: np.ndarray, seed: int) -> Tuple[float, int]:
    """
    Standard error of the mean by non-overlapping block bootstrap.

    Block length is N^block_exponent (sqrt(N) by default); the bootstrap
    generator is seeded with (seed, 1) so it never shares a stream with
    the path sampler.
    """
    config = get_bootstrap_config()
    n = len(values)
    block = max(1, int(n ** config["block_exponent"]))
    n_blocks = n // block
    if n_blocks < 2:
        return 0.0, block
    means = values[: n_blocks * block].reshape(n_blocks, block).mean(axis=1)
    rng = np.random.default_rng([seed, 1])
    picks = rng.integers(0, n_blocks, size=(config["resamples"], n_blocks))
    return float(means[picks].mean(axis=1).std(ddof=1)), block


def mc_entropy(model: HmmModel, cfg: McConfig) -> McResult:
    """
    Estimate H(Z) at cfg.eps as -(1/N) log p(z_1^N) along one sampled path.

    The hidden path starts from the stationary distribution and all
    uniforms are drawn up front from numpy's PCG64 generator, so a seed
    reproduces the estimate bit for bit on one platform.

    Raises:
        UnderflowError: If a forward mass vanishes despite normalization.
    """
    matrix, pi = _instantiate(model, cfg.eps)
    phi = np.asarray(model.phi, dtype=np.int64)
    rng = np.random.default_rng(cfg.seed)
    uniforms = rng.random(cfg.burnin + cfg.samples)

    cdf = np.cumsum(matrix, axis=1)
    states = _sample_states(cdf, np.cumsum(pi), uniforms)
    outputs = phi[states[cfg.burnin:]]

    log_masses, failed, deviation = _forward_log_masses(matrix, phi, pi, outputs)
    if failed >= 0:
        raise UnderflowError(f"forward mass vanished at step {failed} of {cfg.samples}")
    if deviation > SIMPLEX_TOLERANCE:
        logger.warning("forward beliefs left the simplex by %.3e", deviation)

    contributions = -log_masses
    estimate = float(contributions.mean()) + 0.0
    stderr, block = block_bootstrap_stderr(contributions, cfg.seed)
    return McResult(
        estimate=estimate,
        stderr=stderr,
        diagnostics={
            "generator": GENERATOR,
            "seed": cfg.seed,
            "samples": cfg.samples,
            "burnin": cfg.burnin,
            "eps": cfg.eps,
            "block_length": block,
            "simplex_deviation": float(deviation),
        },
    )


# =============================================================================
# Expansion evaluation
# =============================================================================

def eval_expansion(result: ExpansionResult, eps: float) -> float:
    """h0 + sum f_j eps^j log eps + sum g_j eps^j."""
    if not eps > 0:
        raise NumericError(f"eps must be positive, got {eps}")
    log_eps = math.log(eps)
    value = float(result.h0)
    for j, f in enumerate(result.f, start=1):
        value += float(f) * eps ** j * log_eps
    for j, g in enumerate(result.g, start=1):
        value += float(g) * eps ** j
    return value


def remainder_law(errors: Sequence[float], eps: Sequence[float], k: int) -> List[str]:
    """
    Check that the truncation error shrinks like eps^{k+1}.

    For consecutive eps_big > eps_small, err(eps_big) / err(eps_small)
    must be at least (eps_big / eps_small)^{k+1} / 2. Errors below 1e-13
    are at rounding level and pass.

    Returns:
        List[str]: One message per violated pair; empty when the law holds.
    """
    pairs = sorted(zip(eps, errors), reverse=True)
    failures = []
    for (big, err_big), (small, err_small) in zip(pairs, pairs[1:]):
        if abs(err_small) < REMAINDER_FLOOR:
            continue
        required = (big / small) ** (k + 1) / 2
        ratio = abs(err_big) / abs(err_small)
        if ratio < required:
            failures.append(
                f"err({big:g})/err({small:g}) = {ratio:.3g} < {required:.3g}"
            )
    return failures
