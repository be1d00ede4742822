"""Asymptotic expansion of the entropy rate around a weak Black Hole.

The entropy rate is expanded as

    H(Z) = H(Z)|_{eps=0} + sum_{j=1}^{k+1} f_j eps^j log eps
                         + sum_{j=1}^{k} g_j eps^j + O(eps^{k+1})

by evaluating the Birch upper bound H_n(Z) = H(Z_0 | Z_{-n}^{-1}) at the
horizon n0 = 6k+6 in the LogSeries ring. Only sequences with
ord(p(z)) <= k+1 contribute; the conditional of each is truncated to
degree 2k+1 before its logarithm is expanded. f_j come out as exact
rationals, g_j and the constant term as reals.

The lower bound H(Z_0 | Z_{-n}^{-1}, Y_{-n-1}) is computed the same way,
with the sequence tree rooted once per hidden state, and must agree with
the upper bound on every reported coefficient.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .config import (
    get_agreement_tolerance,
    get_max_order,
    get_series_slack,
    get_slack_retries,
    get_thread_count,
)
from .errors import (
    BoundAgreementError,
    ExpansionError,
    HorizonError,
    ModelValidationError,
    OrderGuardError,
    TruncationStarvationError,
)
from .hmm import (
    BeliefVector,
    HmmModel,
    Kind,
    _normalize_columns,
    check_normal,
    classify,
    normalize_belief,
    propagate,
)
from .modelfile import format_rational, parse_rational
from .series import (
    TRUNCATED_ZERO,
    LogSeries,
    RealContext,
    TruncSeries,
    add,
    align,
    log_expand,
    mul,
    order_exceeds,
    real_context,
)

logger = logging.getLogger(__name__)

RESULT_FORMAT = "hmm-entropy/expansion"
RESULT_VERSION = 1


def horizon(k: int) -> int:
    """n0 = 6k+6, the horizon at which the coefficients are read off."""
    return 6 * k + 6


def working_trunc_len(k: int, slack: int) -> int:
    """Series truncation L = 2k+2+S used inside the expansion."""
    return 2 * k + 2 + slack


# =============================================================================
# Results
# =============================================================================

@dataclass(frozen=True)
class ExpansionDiagnostics:
    """
    Bookkeeping of one expansion run.

    Attributes:
        sequences (int): Sequences z_{-n}^0 kept (ord(p) <= k+1).
        pruned (int): Branches cut during the tree walk.
        trunc_len (int): Working series truncation L.
        slack (int): Slack S that succeeded.
        discarded_order (Optional[int]): ord(1 - sum of kept p(z)); None
            when zero to the computed degree. Always >= k+2.
        discarded_trunc_len (int): Degree to which the discarded mass is known.
        lower_sequences (int): Kept sequences in the lower-bound walk.
        bound_agreement (Optional[bool]): Upper/lower verdict when verified.
    """

    sequences: int = 0
    pruned: int = 0
    trunc_len: int = 0
    slack: int = 0
    discarded_order: Optional[int] = None
    discarded_trunc_len: int = 0
    lower_sequences: int = 0
    bound_agreement: Optional[bool] = None


@dataclass(frozen=True)
class ExpansionResult:
    """
    Coefficients of the entropy-rate expansion to order k.

    Attributes:
        k (int): Requested order.
        h0: H(Z) at eps = 0, in nats.
        f (Tuple[Fraction, ...]): f_1..f_{k+1}, coefficients of eps^j log eps.
        g (Tuple, ...): g_1..g_k, coefficients of eps^j.
        n0 (int): Horizon used.
        diagnostics (ExpansionDiagnostics): Counts and verification verdict.
    """

    k: int
    h0: float
    f: Tuple[Fraction, ...]
    g: Tuple[float, ...]
    n0: int
    diagnostics: ExpansionDiagnostics = field(default_factory=ExpansionDiagnostics)

    def __post_init__(self):
        if len(self.f) != self.k + 1 or len(self.g) != self.k:
            raise ExpansionError(
                f"order {self.k} needs {self.k + 1} f and {self.k} g coefficients, "
                f"got {len(self.f)} and {len(self.g)}"
            )

    @classmethod
    def from_log_series(cls, series: LogSeries, k: int, n0: int,
                        diagnostics: Optional[ExpansionDiagnostics] = None) -> "ExpansionResult":
        if series.logpart.coeffs[0] != 0:
            raise ExpansionError(
                f"constant log(eps) coefficient {series.logpart.coeffs[0]} survived summation"
            )
        return cls(
            k=k,
            h0=series.plain[0],
            f=tuple(series.logpart.coeffs[1: k + 2]),
            g=tuple(series.plain[1: k + 1]),
            n0=n0,
            diagnostics=diagnostics or ExpansionDiagnostics(),
        )

    def divided(self, m: int) -> "ExpansionResult":
        """Coefficients of H / m, for a rate measured per block of m symbols."""
        if m == 1:
            return self
        return replace(self, h0=self.h0 / m, f=tuple(c / m for c in self.f),
                       g=tuple(c / m for c in self.g))

    def to_document(self) -> dict:
        """
        Stable serialization: exact "num/den" strings for f, decimal strings
        for h0 and g.
        """
        d = self.diagnostics
        return {
            "format": RESULT_FORMAT,
            "version": RESULT_VERSION,
            "k": self.k,
            "n0": self.n0,
            "h0": _decimal(self.h0),
            "f": [format_rational(c) for c in self.f],
            "g": [_decimal(c) for c in self.g],
            "diagnostics": {
                "sequences": d.sequences,
                "pruned": d.pruned,
                "trunc_len": d.trunc_len,
                "slack": d.slack,
                "discarded_order": d.discarded_order,
                "discarded_trunc_len": d.discarded_trunc_len,
                "lower_sequences": d.lower_sequences,
                "bound_agreement": d.bound_agreement,
            },
        }

    @classmethod
    def from_document(cls, doc: dict) -> "ExpansionResult":
        if doc.get("format") != RESULT_FORMAT:
            raise ExpansionError(f"not an expansion document: {doc.get('format')!r}")
        return cls(
            k=doc["k"],
            h0=float(doc["h0"]),
            f=tuple(parse_rational(c) for c in doc["f"]),
            g=tuple(float(c) for c in doc["g"]),
            n0=doc["n0"],
            diagnostics=ExpansionDiagnostics(**doc.get("diagnostics", {})),
        )


def _decimal(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


# =============================================================================
# Sequence tree
# =============================================================================

@dataclass(frozen=True)
class Leaf:
    """
    A kept sequence of the tree walk.

    Attributes:
        symbols (Tuple[int, ...]): z_{-n}^0, oldest first.
        prob (TruncSeries): Joint probability, root weight included.
        cond (TruncSeries): Conditional of the last symbol given the rest.
    """

    symbols: Tuple[int, ...]
    prob: TruncSeries
    cond: TruncSeries


@dataclass
class WalkStats:
    leaves: int = 0
    pruned: int = 0


def _walk(model: HmmModel, x: BeliefVector, prob: TruncSeries, depth: int, cap: int,
          prefix: Tuple[int, ...], stats: WalkStats) -> Iterator[Leaf]:
    # Depth-first, lexicographic; a branch is cut once ord(prob) > cap.
    for a in range(model.symbols):
        mass, columns = propagate(x, model, a)
        joint = mul(*align(prob, mass))
        if joint.is_truncated_zero() and joint.trunc_len < cap:
            raise TruncationStarvationError(
                f"prefix {prefix + (a,)} is zero only to degree {joint.trunc_len} < {cap}"
            )
        joint_order = joint.order()
        if order_exceeds(joint_order, cap):
            stats.pruned += 1
            continue
        assert prob.order() <= joint_order, "sequence order decreased along an extension"
        path = prefix + (a,)
        if len(path) == depth:
            stats.leaves += 1
            yield Leaf(path, joint, mass)
        else:
            yield from _walk(model, _normalize_columns(model, mass, columns), joint,
                             depth, cap, path, stats)


def enumerate_sequences(model: HmmModel, n: int, k: int) -> Iterator[Tuple[Tuple[int, ...], TruncSeries]]:
    """
    Stream the sequences z of length n+1 with ord(p(z)) <= k+1.

    Args:
        model (HmmModel): A normally parameterized model.
        n (int): Horizon; sequences have n+1 symbols.
        k (int): Order cap; branches with ord > k+1 are pruned.

    Yields:
        Tuple[Tuple[int, ...], TruncSeries]: (z, p(z)) in lexicographic order.
    """
    working = model.at_truncation(working_trunc_len(k, get_series_slack()))
    pi = working.stationary
    stats = WalkStats()
    for leaf in _walk(working, pi, TruncSeries.one(pi.trunc_len), n + 1, k + 1, (), stats):
        yield leaf.symbols, leaf.prob


def _entropy_term(leaf: Leaf, k: int, ctx: RealContext) -> LogSeries:
    # -p(z) log p^{<2k+1>}(z_0 | z^{-1}) in the window (eps^k, eps^{k+1} log eps)
    if leaf.prob.trunc_len < k + 1 or leaf.cond.trunc_len < 2 * k + 1:
        raise TruncationStarvationError(
            f"sequence {leaf.symbols}: p known to degree {leaf.prob.trunc_len}, "
            f"conditional to {leaf.cond.trunc_len}; need {k + 1} and {2 * k + 1}"
        )
    logged = log_expand(leaf.cond.truncate(2 * k + 1), ctx)
    return -logged.scaled_by(leaf.prob.truncate(k + 1), ctx).truncate(k, k + 1)


# =============================================================================
# Birch bounds
# =============================================================================

@dataclass(frozen=True)
class _Block:
    """One lexicographic block: a root belief and the first symbol."""

    root: BeliefVector
    weight: TruncSeries
    first: int


@dataclass(frozen=True)
class _Partial:
    series: LogSeries
    kept_mass: TruncSeries
    leaves: int
    pruned: int


def _block_partial(args) -> _Partial:
    model, block, n, k, ctx = args
    if ctx.extended:
        mpmath.mp.dps = ctx.dps
    stats = WalkStats()
    total = LogSeries.zero(k, k + 1, ctx)
    kept = None
    x, weight = block.root, block.weight
    mass, columns = propagate(x, model, block.first)
    joint = mul(*align(weight, mass))
    cap = k + 1
    if joint.is_truncated_zero() and joint.trunc_len < cap:
        raise TruncationStarvationError(
            f"block {block.first} is zero only to degree {joint.trunc_len} < {cap}"
        )
    if order_exceeds(joint.order(), cap):
        return _Partial(total, TruncSeries.zero(joint.trunc_len), 0, 1)
    leaves = _walk(model, _normalize_columns(model, mass, columns), joint, n + 1, cap,
                   (block.first,), stats)
    for leaf in leaves:
        total = total + _entropy_term(leaf, k, ctx)
        kept = leaf.prob if kept is None else add(*align(kept, leaf.prob))
    if kept is None:
        kept = TruncSeries.zero(joint.trunc_len)
    return _Partial(total, kept, stats.leaves, stats.pruned)


def _tree_sum(parts: List, combine: Callable = lambda a, b: a + b):
    # Fixed binary-tree reduction over the lexicographic block order.
    while len(parts) > 1:
        parts = [combine(parts[i], parts[i + 1]) if i + 1 < len(parts) else parts[i]
                 for i in range(0, len(parts), 2)]
    return parts[0]


def _blocks(model: HmmModel, lower: bool, k: int) -> Tuple[List[_Block], int]:
    pi = model.stationary
    blocks = []
    pruned_roots = 0
    if not lower:
        roots = [(pi, TruncSeries.one(pi.trunc_len))]
    else:
        roots = []
        for y, weight in enumerate(pi.entries):
            if order_exceeds(weight.order(), k + 1):
                pruned_roots += 1
                continue
            roots.append((BeliefVector.vertex(y, model.states, pi.trunc_len), weight))
    for root, weight in roots:
        for a in range(model.symbols):
            blocks.append(_Block(root=root, weight=weight, first=a))
    return blocks, pruned_roots


def _birch(model: HmmModel, n: int, k: int, lower: bool, slack: int,
           threads: int) -> Tuple[LogSeries, ExpansionDiagnostics]:
    length = working_trunc_len(k, slack)
    working = model.at_truncation(length)
    ctx = real_context()
    blocks, pruned_roots = _blocks(working, lower, k)
    jobs = [(working, block, n, k, ctx) for block in blocks]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            partials = list(pool.map(_block_partial, jobs))
    else:
        partials = [_block_partial(job) for job in jobs]

    series = _tree_sum([p.series for p in partials])
    kept = _tree_sum([p.kept_mass for p in partials], lambda a, b: add(*align(a, b)))
    discarded = add(*align(TruncSeries.one(kept.trunc_len), -kept))
    discarded_order = discarded.order()
    if discarded_order is not TRUNCATED_ZERO and discarded_order <= k + 1:
        raise ExpansionError(
            f"discarded probability has order {discarded_order} <= k+1; pruning lost mass"
        )
    diagnostics = ExpansionDiagnostics(
        sequences=sum(p.leaves for p in partials),
        pruned=sum(p.pruned for p in partials) + pruned_roots,
        trunc_len=length,
        slack=slack,
        discarded_order=None if discarded_order is TRUNCATED_ZERO else discarded_order,
        discarded_trunc_len=discarded.trunc_len,
    )
    logger.debug("%s bound n=%d k=%d: %d sequences kept, %d pruned (L=%d)",
                 "lower" if lower else "upper", n, k, diagnostics.sequences,
                 diagnostics.pruned, length)
    return series, diagnostics


def _with_slack(run: Callable[[int], Tuple[LogSeries, ExpansionDiagnostics]],
                slack: Optional[int] = None) -> Tuple[LogSeries, ExpansionDiagnostics]:
    slack = get_series_slack() if slack is None else slack
    retries = get_slack_retries()
    for attempt in range(retries + 1):
        try:
            return run(slack)
        except TruncationStarvationError as e:
            if attempt == retries:
                raise
            logger.warning("truncation starved with slack %d (%s); retrying with %d",
                           slack, e, 2 * slack)
            slack *= 2
    raise AssertionError("unreachable")


def _check_horizon(n: int, k: int) -> None:
    if k < 0:
        raise HorizonError(f"order k must be non-negative, got {k}")
    if n < horizon(k):
        raise HorizonError(f"horizon n={n} is below n0=6k+6={horizon(k)}")


def _threads(threads: Optional[int]) -> int:
    return get_thread_count() if threads is None else max(1, threads)


def birch_upper(model: HmmModel, n: int, k: int, threads: Optional[int] = None) -> LogSeries:
    """
    Expansion of H_n(Z) = -sum p(z_{-n}^0) log p(z_0 | z_{-n}^{-1}).

    Returns:
        LogSeries: plain part to eps^k, log part to eps^{k+1}.

    Raises:
        HorizonError: If n < 6k+6.
    """
    _check_horizon(n, k)
    series, _ = _with_slack(lambda s: _birch(model, n, k, False, s, _threads(threads)))
    return series


def birch_lower(model: HmmModel, n: int, k: int, threads: Optional[int] = None) -> LogSeries:
    """
    Expansion of H(Z_0 | Z_{-n}^{-1}, Y_{-n-1}).

    The tree is rooted at every hidden state y with belief e_y and weight
    pi_y(eps).

    Raises:
        HorizonError: If n < 6k+6.
    """
    _check_horizon(n, k)
    series, _ = _with_slack(lambda s: _birch(model, n, k, True, s, _threads(threads)))
    return series


def compare_bounds(upper: LogSeries, lower: LogSeries, k: int,
                   tolerance: Optional[float] = None) -> List[str]:
    """
    Disagreements between two bound expansions on the reported window.

    Log coefficients eps^0..eps^{k+1} must be equal exactly, plain
    coefficients eps^0..eps^k within the tolerance.
    """
    tolerance = get_agreement_tolerance() if tolerance is None else tolerance
    problems = []
    for j in range(k + 2):
        if upper.logpart.coeffs[j] != lower.logpart.coeffs[j]:
            problems.append(f"eps^{j} log eps: upper {upper.logpart.coeffs[j]} "
                            f"!= lower {lower.logpart.coeffs[j]}")
    for j in range(k + 1):
        gap = abs(float(upper.plain[j] - lower.plain[j]))
        if gap > tolerance:
            problems.append(f"eps^{j}: upper {upper.plain[j]} vs lower {lower.plain[j]} "
                            f"(gap {gap:.3e})")
    return problems


def expand(model: HmmModel, k: int, verify: bool = False, n: Optional[int] = None,
           threads: Optional[int] = None) -> ExpansionResult:
    """
    Expand H(Z) to order k around eps = 0.

    Args:
        model (HmmModel): A normally parameterized model.
        k (int): Order; f_1..f_{k+1} and g_1..g_k are returned.
        verify (bool): Also compute the lower bound and require agreement.
        n (Optional[int]): Horizon; defaults to n0 = 6k+6.
        threads (Optional[int]): Worker cap; defaults to HMM_ENTROPY_THREADS.

    Returns:
        ExpansionResult: The coefficients and run diagnostics.

    Raises:
        ModelValidationError: If the model is not normally parameterized.
        OrderGuardError: If k exceeds the configured guard.
        BoundAgreementError: If verification finds a disagreement.
    """
    violations = check_normal(model)
    if violations:
        raise ModelValidationError("model is not normally parameterized: " + "; ".join(violations))
    guard = get_max_order()
    if k > guard:
        raise OrderGuardError(f"k={k} exceeds the guard {guard} (set HMM_ENTROPY_MAX_K)")
    n = horizon(k) if n is None else n
    _check_horizon(n, k)
    workers = _threads(threads)

    upper, diagnostics = _with_slack(lambda s: _birch(model, n, k, False, s, workers))
    if verify:
        lower, lower_diag = _with_slack(
            lambda s: _birch(model, n, k, True, s, workers), slack=diagnostics.slack
        )
        problems = compare_bounds(upper, lower, k)
        diagnostics = replace(diagnostics, lower_sequences=lower_diag.sequences,
                              bound_agreement=not problems)
        if problems:
            raise BoundAgreementError(
                "upper and lower Birch expansions disagree (model or series precision): "
                + "; ".join(problems)
            )

    result = ExpansionResult.from_log_series(upper, k, n, diagnostics)
    if classify(model).kind is Kind.BLACK_HOLE and any(result.f):
        raise ExpansionError(f"Black Hole model produced log coefficients {result.f}")
    return result


# =============================================================================
# Stabilization of conditional coefficients
# =============================================================================

@dataclass(frozen=True)
class Counterexample:
    """
    Two conditionals sharing a suffix whose coefficients differ in the
    guaranteed range.
    """

    variant: str
    first: Tuple[int, ...]
    second: Tuple[int, ...]
    degree: int
    first_coeff: Fraction
    second_coeff: Fraction

    def __str__(self) -> str:
        return (f"[{self.variant}] {self.first} vs {self.second}: b_{self.degree} "
                f"{self.first_coeff} != {self.second_coeff}")


@dataclass(frozen=True)
class StabilizationReport:
    """
    Outcome of stabilization_check.

    Attributes:
        n (int): Shared suffix covers z_{-n}^0.
        k (int): Order bound on the prefix-conditional probabilities.
        guaranteed_degree (int): n - 4k - 1; coefficients b_0..b_d are compared.
        pairs_checked (int): Pairs that met the order conditions.
        skipped (int): Sampled pairs rejected by the order conditions.
        counterexamples (Tuple[Counterexample, ...]): Every disagreement found.
    """

    n: int
    k: int
    guaranteed_degree: int
    pairs_checked: int
    skipped: int
    counterexamples: Tuple[Counterexample, ...]

    @property
    def ok(self) -> bool:
        return not self.counterexamples


VARIANTS = ("prefix", "vertex", "mapping")


def _random_walk(model: HmmModel, x: BeliefVector, length: int, budget: int,
                 rng: np.random.Generator) -> Optional[Tuple[Tuple[int, ...], BeliefVector, int]]:
    # Random path whose probability from x keeps order <= budget.
    path = []
    spent = 0
    for _ in range(length):
        options = []
        for a in range(model.symbols):
            mass, columns = propagate(x, model, a)
            o = mass.order()
            if o is not TRUNCATED_ZERO and spent + o <= budget:
                options.append((a, o, mass, columns))
        if not options:
            return None
        a, o, mass, columns = options[int(rng.integers(len(options)))]
        path.append(a)
        spent += o
        x = _normalize_columns(model, mass, columns)
    return tuple(path), x, spent


def _suffix_conditional(model: HmmModel, x: BeliefVector, suffix: Sequence[int],
                        k: int) -> Optional[TruncSeries]:
    # p_x(z_0 | z_{-n}^{-1}) when ord(p_x(z_{-n}^{-1})) <= k, else None.
    spent = 0
    for a in suffix[:-1]:
        mass, columns = propagate(x, model, a)
        o = mass.order()
        if o is TRUNCATED_ZERO:
            return None
        spent += o
        if spent > k:
            return None
        x = _normalize_columns(model, mass, columns)
    mass, _ = propagate(x, model, suffix[-1])
    return mass


def _random_start(model: HmmModel, trunc_len: int, rng: np.random.Generator) -> BeliefVector:
    # v(eps) proportional to a + b eps with random nonnegative rationals.
    weights = []
    for _ in range(model.states):
        a = Fraction(int(rng.integers(0, 4)), int(rng.integers(1, 5)))
        b = Fraction(int(rng.integers(0, 4)), int(rng.integers(1, 5)))
        weights.append(TruncSeries.from_coeffs([a, b], trunc_len))
    if all(w.is_truncated_zero() for w in weights):
        weights[0] = TruncSeries.one(trunc_len)
    return normalize_belief(weights)


def stabilization_check(model: HmmModel, n: int, k: int, trials: int, seed: int,
                        max_prefix: int = 3, variants: Sequence[str] = VARIANTS,
                        slack: Optional[int] = None) -> StabilizationReport:
    """
    Sample suffix-sharing pairs and compare their conditional expansions.

    Variants cycle per trial: 'prefix' prepends independent random
    prefixes to a shared suffix from pi; 'vertex' additionally starts the
    first sequence at a hidden state y; 'mapping' starts both at random
    analytic beliefs v(eps), v^(eps). In every case coefficients
    b_0..b_{n-4k-1} of p(z_0 | ...) must agree whenever both
    prefix-conditional probabilities of z_{-n}^{-1} have order <= k.

    Args:
        model (HmmModel): A normally parameterized model.
        n (int): The shared suffix is z_{-n}^0 (n+1 symbols).
        k (int): Order bound.
        trials (int): Number of sampled pairs.
        seed (int): Seed of the numpy PCG64 generator.
        max_prefix (int): Longest extra prefix m - n.
        variants (Sequence[str]): Subset of 'prefix', 'vertex', 'mapping'.
        slack (Optional[int]): Extra truncation beyond n + 2k + 2.

    Returns:
        StabilizationReport: Counts and every counterexample, verbatim.
    """
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ValueError(f"unknown stabilization variants {sorted(unknown)}")
    slack = get_series_slack() if slack is None else slack
    guaranteed = n - 4 * k - 1
    working = model.at_truncation(n + 2 * k + 2 + slack)
    pi = working.stationary
    rng = np.random.default_rng(seed)
    checked = skipped = 0
    counterexamples: List[Counterexample] = []

    for trial in range(trials):
        variant = variants[trial % len(variants)]
        if variant == "mapping":
            starts = (_random_start(working, pi.trunc_len, rng), _random_start(working, pi.trunc_len, rng))
            prefix_lengths = (0, 0)
        elif variant == "vertex":
            y = int(rng.choice([i for i, w in enumerate(pi.entries) if not w.is_truncated_zero()]))
            starts = (BeliefVector.vertex(y, working.states, pi.trunc_len), pi)
            prefix_lengths = tuple(int(rng.integers(0, max_prefix + 1)) for _ in range(2))
        else:
            starts = (pi, pi)
            prefix_lengths = tuple(int(rng.integers(0, max_prefix + 1)) for _ in range(2))

        # Prefixes keep their own order <= k so truncation stays bounded.
        walked = [_random_walk(working, s, m, k, rng) for s, m in zip(starts, prefix_lengths)]
        if any(w is None for w in walked):
            skipped += 1
            continue
        (prefix1, x1, _), (prefix2, x2, _) = walked
        shared = _random_walk(working, x1, n, k, rng)
        if shared is None:
            skipped += 1
            continue
        head, before_last, _ = shared
        last_options = [a for a in range(working.symbols)
                        if not propagate(before_last, working, a)[0].is_truncated_zero()]
        if not last_options:
            skipped += 1
            continue
        suffix = head + (int(rng.choice(last_options)),)

        cond1 = _suffix_conditional(working, x1, suffix, k)
        cond2 = _suffix_conditional(working, x2, suffix, k)
        if cond1 is None or cond2 is None:
            skipped += 1
            continue
        checked += 1
        if guaranteed < 0:
            continue
        if min(cond1.trunc_len, cond2.trunc_len) < guaranteed:
            raise TruncationStarvationError(
                f"conditionals known to degree {min(cond1.trunc_len, cond2.trunc_len)}, "
                f"need {guaranteed}; raise the slack"
            )
        for j in range(guaranteed + 1):
            if cond1.coeffs[j] != cond2.coeffs[j]:
                counterexamples.append(Counterexample(
                    variant=variant, first=prefix1 + suffix, second=prefix2 + suffix,
                    degree=j, first_coeff=cond1.coeffs[j], second_coeff=cond2.coeffs[j],
                ))
                break

    if counterexamples:
        logger.warning("stabilization: %d counterexamples in %d pairs",
                       len(counterexamples), checked)
    return StabilizationReport(n=n, k=k, guaranteed_degree=guaranteed, pairs_checked=checked,
                               skipped=skipped, counterexamples=tuple(counterexamples))
