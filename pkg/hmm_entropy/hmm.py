"""Hidden Markov models with series-valued transition matrices.

A model is a B x B matrix Delta(eps) of TruncSeries plus a labelling phi of
states by output symbols 0..A-1. Everything a sequence probability needs
is built here: the restrictions Delta_a, the stationary series pi(eps),
belief propagation and the conditional expansions p(z_0 | z_{-n}^{-1}).

Sequences are stored oldest symbol first.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import linalg
from .errors import (
    ModelValidationError,
    PrunedSequenceError,
    StationaryError,
    UnknownSymbolError,
)
from .series import (
    TRUNCATED_ZERO,
    TruncSeries,
    add,
    align,
    div,
    evaluate,
    mul,
)

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[TruncSeries, ...], ...]


@dataclass(frozen=True)
class HmmModel:
    """
    Hidden Markov chain Z = phi(Y) with Y driven by Delta(eps).

    Entries of delta are polynomials in eps stored at a common truncation.

    Attributes:
        delta (Matrix): B x B transition matrix of TruncSeries.
        phi (Tuple[int, ...]): Output symbol of each hidden state.
        symbols (int): Output alphabet size A; every symbol labels a state.
    """

    delta: Matrix
    phi: Tuple[int, ...]
    symbols: int

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(tuple(row) for row in self.delta))
        object.__setattr__(self, "phi", tuple(int(a) for a in self.phi))
        self._validate()

    def _validate(self) -> None:
        b = len(self.delta)
        if b == 0:
            raise ModelValidationError("a model needs at least one hidden state")
        if any(len(row) != b for row in self.delta):
            raise ModelValidationError("delta must be square")
        lengths = {entry.trunc_len for row in self.delta for entry in row}
        if len(lengths) != 1:
            raise ModelValidationError(f"delta entries have mixed truncations {sorted(lengths)}")
        if len(self.phi) != b:
            raise ModelValidationError(f"phi has {len(self.phi)} labels for {b} states")
        if self.symbols < 1:
            raise ModelValidationError("output alphabet must be non-empty")
        bad = [a for a in self.phi if not 0 <= a < self.symbols]
        if bad:
            raise ModelValidationError(f"phi uses symbols outside 0..{self.symbols - 1}: {bad}")
        unused = sorted(set(range(self.symbols)) - set(self.phi))
        if unused:
            raise ModelValidationError(f"symbols {unused} label no state")
        one = TruncSeries.one(self.trunc_len)
        for i, row in enumerate(self.delta):
            for j, entry in enumerate(row):
                if entry.leading() < 0:
                    raise ModelValidationError(
                        f"delta[{i}][{j}] has negative leading coefficient {entry.leading()}"
                    )
            total = TruncSeries.zero(self.trunc_len)
            for entry in row:
                total = total + entry
            if total != one:
                raise ModelValidationError(f"row {i} of delta sums to {total}, not 1")

    @classmethod
    def from_coeffs(cls, delta: Sequence[Sequence[Sequence]], phi: Sequence[int],
                    symbols: Optional[int] = None, trunc_len: Optional[int] = None) -> "HmmModel":
        """
        Build a model from polynomial coefficient lists.

        Args:
            delta: delta[i][j] lists the coefficients of eps^0, eps^1, ...
            phi: Output symbol of each state.
            symbols: Alphabet size; defaults to max(phi) + 1.
            trunc_len: Stored truncation; defaults to the longest list.
        """
        if trunc_len is None:
            trunc_len = max(len(c) for row in delta for c in row) - 1
        if symbols is None:
            symbols = max(phi) + 1
        matrix = tuple(
            tuple(TruncSeries.from_coeffs(c, trunc_len) for c in row) for row in delta
        )
        return cls(delta=matrix, phi=tuple(phi), symbols=symbols)

    @property
    def states(self) -> int:
        return len(self.delta)

    @property
    def trunc_len(self) -> int:
        return self.delta[0][0].trunc_len

    def at_truncation(self, trunc_len: int) -> "HmmModel":
        if trunc_len == self.trunc_len:
            return self
        matrix = tuple(tuple(e.resize(trunc_len) for e in row) for row in self.delta)
        return HmmModel(delta=matrix, phi=self.phi, symbols=self.symbols)

    @cached_property
    def columns_by_symbol(self) -> Tuple[Tuple[int, ...], ...]:
        return tuple(
            tuple(j for j, a in enumerate(self.phi) if a == symbol)
            for symbol in range(self.symbols)
        )

    @cached_property
    def support(self) -> Tuple[Tuple[bool, ...], ...]:
        """Edge (i, j) is present iff delta[i][j] is not TruncatedZero."""
        return tuple(tuple(not e.is_truncated_zero() for e in row) for row in self.delta)

    @cached_property
    def _incoming(self) -> Tuple[Tuple[Tuple[int, TruncSeries], ...], ...]:
        # For each column j, the (i, delta[i][j]) pairs with a nonzero entry.
        return tuple(
            tuple((i, self.delta[i][j]) for i in range(self.states) if self.support[i][j])
            for j in range(self.states)
        )

    @cached_property
    def stationary(self) -> "BeliefVector":
        return stationary_series(self)

    def at_zero(self) -> List[List[Fraction]]:
        """Degree-0 coefficient matrix Delta(0)."""
        return [[e.coeffs[0] for e in row] for row in self.delta]

    def numeric(self, eps: float) -> np.ndarray:
        """Delta(eps) as a float array."""
        return np.array(
            [[float(evaluate(e, float(eps))) for e in row] for row in self.delta],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class BeliefVector:
    """
    Point of the simplex W as a function of eps.

    Attributes:
        entries (Tuple[TruncSeries, ...]): One series per hidden state, all at
            the same truncation and summing to the constant series 1.
    """

    entries: Tuple[TruncSeries, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        lengths = {e.trunc_len for e in self.entries}
        if len(lengths) != 1:
            raise ModelValidationError(f"belief entries have mixed truncations {sorted(lengths)}")
        total = TruncSeries.zero(self.trunc_len)
        for e in self.entries:
            if e.leading() < 0:
                raise ModelValidationError(f"belief entry {e} has negative leading coefficient")
            total = total + e
        if total != TruncSeries.one(self.trunc_len):
            raise ModelValidationError(f"belief sums to {total}, not 1")

    @classmethod
    def vertex(cls, state: int, states: int, trunc_len: int) -> "BeliefVector":
        zero = TruncSeries.zero(trunc_len)
        one = TruncSeries.one(trunc_len)
        return cls(tuple(one if i == state else zero for i in range(states)))

    @property
    def trunc_len(self) -> int:
        return self.entries[0].trunc_len

    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.entries) if not e.is_truncated_zero())

    def at_zero(self) -> Tuple[Fraction, ...]:
        return tuple(e.coeffs[0] for e in self.entries)


def normalize_belief(weights: Sequence[TruncSeries]) -> BeliefVector:
    """
    Normalize a nonnegative series vector onto the simplex.

    Each entry is divided by the sum with the order shift of div, so
    unnormalized start vectors v(eps) become beliefs.
    """
    weights = align(*weights)
    total = weights[0]
    for w in weights[1:]:
        total = add(total, w)
    return BeliefVector(tuple(div(w, total) for w in weights))


# =============================================================================
# Restriction and classification
# =============================================================================

class Kind(str, Enum):
    BLACK_HOLE = "BlackHole"
    WEAK_BLACK_HOLE = "WeakBlackHole"
    NEITHER = "Neither"


class SymbolDetail(str, Enum):
    ALL_ZERO = "AllZero"
    RANK_ONE_POSITIVE_COLUMNS = "RankOnePositiveColumns"
    RANK_ONE_OTHER = "RankOneOther"
    HIGHER_RANK = "HigherRank"


@dataclass(frozen=True)
class Classification:
    """
    Black Hole classification of Delta(0).

    Attributes:
        kind (Kind): BlackHole, WeakBlackHole or Neither.
        detail (Tuple[SymbolDetail, ...]): Verdict for each output symbol.
    """

    kind: Kind
    detail: Tuple[SymbolDetail, ...]


def _check_symbol(model: HmmModel, a: int) -> None:
    if not 0 <= a < model.symbols:
        raise UnknownSymbolError(f"symbol {a} is outside 0..{model.symbols - 1}")


def restrict(model: HmmModel, a: int) -> Matrix:
    """
    Delta_a: the columns of states labelled a, zeros elsewhere.

    Raises:
        UnknownSymbolError: If a is not in the alphabet.
    """
    _check_symbol(model, a)
    zero = TruncSeries.zero(model.trunc_len)
    return tuple(
        tuple(e if model.phi[j] == a else zero for j, e in enumerate(row))
        for row in model.delta
    )


def _symbol_detail(matrix: List[List[Fraction]]) -> SymbolDetail:
    r = linalg.rank(matrix)
    if r == 0:
        return SymbolDetail.ALL_ZERO
    if r > 1:
        return SymbolDetail.HIGHER_RANK
    for j in range(len(matrix[0])):
        column = [row[j] for row in matrix]
        if any(c == 0 for c in column) and any(c != 0 for c in column):
            return SymbolDetail.RANK_ONE_OTHER
    return SymbolDetail.RANK_ONE_POSITIVE_COLUMNS


def classify(model: HmmModel) -> Classification:
    """
    Classify Delta(0) as a Black Hole, a weak Black Hole, or neither.

    The rank of every Delta_a(0) is computed exactly over the rationals; a
    rank-one Delta_a(0) whose columns are each strictly positive or all
    zero counts towards a Black Hole.
    """
    base = model.at_zero()
    details = []
    for a in range(model.symbols):
        cols = set(model.columns_by_symbol[a])
        matrix = [[row[j] if j in cols else Fraction(0) for j in range(model.states)]
                  for row in base]
        details.append(_symbol_detail(matrix))
    if all(d is SymbolDetail.RANK_ONE_POSITIVE_COLUMNS for d in details):
        kind = Kind.BLACK_HOLE
    elif all(d is not SymbolDetail.HIGHER_RANK for d in details):
        kind = Kind.WEAK_BLACK_HOLE
    else:
        kind = Kind.NEITHER
    return Classification(kind=kind, detail=tuple(details))


def check_normal(model: HmmModel) -> List[str]:
    """
    List violations of normal parameterization; empty means the model is normal.

    Analytic entries hold by representation. Irreducibility for eps > 0 is
    decided on the support graph of delta, and Delta(0) must be a weak
    Black Hole (a Black Hole included).
    """
    violations = []
    if not linalg.is_strongly_connected(model.support):
        violations.append("Delta(eps) is reducible: support graph is not strongly connected")
    classification = classify(model)
    if classification.kind is Kind.NEITHER:
        ranks = [f"{a}:{d.value}" for a, d in enumerate(classification.detail)
                 if d is SymbolDetail.HIGHER_RANK]
        violations.append(f"Delta(0) is not a weak Black Hole (higher rank for {', '.join(ranks)})")
    return violations


# =============================================================================
# Stationary series
# =============================================================================

def _determinant(matrix: Sequence[Sequence[TruncSeries]], rows: Tuple[int, ...],
                 cols: Tuple[int, ...], memo: Dict) -> TruncSeries:
    # Laplace expansion along the first remaining row, memoized on (rows, cols).
    key = (rows, cols)
    cached = memo.get(key)
    if cached is not None:
        return cached
    if not rows:
        result = TruncSeries.one(matrix[0][0].trunc_len)
    else:
        r, rest = rows[0], rows[1:]
        result = TruncSeries.zero(matrix[0][0].trunc_len)
        for k, c in enumerate(cols):
            entry = matrix[r][c]
            if entry.is_truncated_zero():
                continue
            minor = _determinant(matrix, rest, cols[:k] + cols[k + 1:], memo)
            term = mul(entry, minor)
            result = result - term if k % 2 else result + term
    memo[key] = result
    return result


def adjugate(matrix: Sequence[Sequence[TruncSeries]]) -> List[List[TruncSeries]]:
    """
    Adjugate of a series matrix by division-free cofactor expansion.

    adj[i][j] = (-1)^(i+j) det(matrix without row j and column i).
    """
    n = len(matrix)
    memo: Dict = {}
    every = tuple(range(n))
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        cols = every[:i] + every[i + 1:]
        for j in range(n):
            rows = every[:j] + every[j + 1:]
            minor = _determinant(matrix, rows, cols, memo)
            adj[i][j] = -minor if (i + j) % 2 else minor
    return adj


def _stationary_by_orders(model: HmmModel) -> Optional[BeliefVector]:
    # p_0 (I - D_0) = 0 with sum 1, then p_k (I - D_0) = sum_{j>=1} p_{k-j} D_j with sum 0.
    # None when D_0 has no unique stationary vector.
    n = model.states
    length = model.trunc_len
    system = [[(1 if i == j else 0) - model.delta[i][j].coeffs[0] for i in range(n)]
              for j in range(n)]
    system[-1] = [Fraction(1)] * n
    try:
        inv = linalg.inverse(system)
    except ModelValidationError:
        return None
    terms: List[List[Fraction]] = []
    for k in range(length + 1):
        rhs = [Fraction(0)] * n
        for j in range(1, k + 1):
            prev = terms[k - j]
            for i in range(n):
                if not prev[i]:
                    continue
                row = model.delta[i]
                for col in range(n):
                    c = row[col].coeffs[j]
                    if c:
                        rhs[col] += prev[i] * c
        rhs[-1] = Fraction(int(k == 0))
        terms.append([sum((w * r for w, r in zip(inv_row, rhs) if r), Fraction(0))
                      for inv_row in inv])
    return BeliefVector(tuple(TruncSeries(tuple(terms[k][i] for k in range(length + 1)))
                              for i in range(n)))


def stationary_series(model: HmmModel) -> BeliefVector:
    """
    Stationary vector pi(eps) of Delta(eps).

    When Delta(0) has a unique stationary vector, pi is solved order by
    order against the fixed matrix I - Delta(0) and is known to degree L.
    Otherwise it is a normalized row of adj(I - Delta(eps)): among rows
    whose entry sum has the smallest order, the lowest index is used, and
    the sum is divided out with the order shift of div, so pi is known to
    degree L - ord(row sum).

    Raises:
        StationaryError: If every adjugate row is zero to the truncation.
    """
    pi = _stationary_by_orders(model)
    if pi is not None:
        logger.debug("pi(eps) solved order by order to degree %d", pi.trunc_len)
        return pi
    n = model.states
    length = model.trunc_len
    one = TruncSeries.one(length)
    zero = TruncSeries.zero(length)
    i_minus_delta = [
        [(one if i == j else zero) - model.delta[i][j] for j in range(n)] for i in range(n)
    ]
    adj = adjugate(i_minus_delta)
    sums = []
    for row in adj:
        total = zero
        for e in row:
            total = total + e
        sums.append(total)
    candidates = [(s.order(), i) for i, s in enumerate(sums) if s.order() is not TRUNCATED_ZERO]
    if not candidates:
        raise StationaryError(
            f"every row of adj(I - Delta) vanishes to degree {length}; raise the truncation"
        )
    _, best = min(candidates)
    pi = BeliefVector(tuple(div(e, sums[best]) for e in adj[best]))
    if logger.isEnabledFor(logging.DEBUG):
        for _, other in candidates:
            alt = BeliefVector(tuple(div(e, sums[other]) for e in adj[other]))
            common = min(alt.trunc_len, pi.trunc_len)
            if any(a.truncate(common) != b.truncate(common)
                   for a, b in zip(alt.entries, pi.entries)):
                raise StationaryError(f"adjugate rows {best} and {other} disagree after normalization")
        logger.debug("pi(eps) from adjugate row %d, known to degree %d", best, pi.trunc_len)
    return pi


# =============================================================================
# Belief propagation
# =============================================================================

def propagate(x: BeliefVector, model: HmmModel, a: int) -> Tuple[TruncSeries, Dict[int, TruncSeries]]:
    """
    Unnormalized step x Delta_a.

    Returns:
        Tuple[TruncSeries, Dict[int, TruncSeries]]: The mass x Delta_a 1 and
            the nonzero-column entries of x Delta_a, all at the belief's
            truncation.
    """
    length = min(x.trunc_len, model.trunc_len)
    entries = x.entries
    mass = TruncSeries.zero(length)
    columns = {}
    for j in model.columns_by_symbol[a]:
        acc = None
        for i, d in model._incoming[j]:
            xi = entries[i]
            if xi.is_truncated_zero():
                continue
            term = mul(xi.truncate(length), d.truncate(length))
            acc = term if acc is None else add(acc, term)
        if acc is not None:
            columns[j] = acc
            mass = add(mass, acc)
    return mass, columns


def _normalize_columns(model: HmmModel, mass: TruncSeries,
                       columns: Dict[int, TruncSeries]) -> BeliefVector:
    normalized = {j: div(v, mass) for j, v in columns.items()}
    length = next(iter(normalized.values())).trunc_len
    zero = TruncSeries.zero(length)
    return BeliefVector(tuple(normalized.get(j, zero) for j in range(model.states)))


def belief_step(x: BeliefVector, model: HmmModel, a: int) -> Tuple[TruncSeries, BeliefVector]:
    """
    One belief update x -> x Delta_a / (x Delta_a 1).

    Args:
        x (BeliefVector): Current belief.
        model (HmmModel): The model.
        a (int): Next output symbol.

    Returns:
        Tuple[TruncSeries, BeliefVector]: The mass r_a(x) = x Delta_a 1 and
            the next belief f_a(x).

    Raises:
        UnknownSymbolError: If a is not in the alphabet.
        PrunedSequenceError: If the mass is zero to the computed order.
    """
    _check_symbol(model, a)
    mass, columns = propagate(x, model, a)
    if mass.is_truncated_zero():
        raise PrunedSequenceError(
            f"symbol {a} has zero probability through degree {mass.trunc_len}"
        )
    return mass, _normalize_columns(model, mass, columns)


def seq_prob_from(model: HmmModel, x: BeliefVector, z: Iterable[int]) -> TruncSeries:
    """p_x(z) = x Delta_{z_0} ... Delta_{z_n} 1 from an arbitrary start belief."""
    prob = TruncSeries.one(x.trunc_len)
    for a in z:
        _check_symbol(model, a)
        mass, columns = propagate(x, model, a)
        prob = mul(*align(prob, mass))
        if mass.is_truncated_zero():
            return prob
        x = _normalize_columns(model, mass, columns)
    return prob


def seq_prob(model: HmmModel, z: Sequence[int]) -> TruncSeries:
    """
    Probability series p(z) of a symbol sequence (oldest first).

    Computed as the product of belief-step masses from pi(eps). A
    TruncatedZero result means ord(p(z)) exceeds the computed order.
    """
    return seq_prob_from(model, model.stationary, z)


def belief_after(model: HmmModel, z: Sequence[int],
                 start: Optional[BeliefVector] = None) -> Tuple[TruncSeries, BeliefVector]:
    """
    Consume z and return (p_start(z), belief after z).

    Raises:
        PrunedSequenceError: If some prefix of z has zero probability.
    """
    x = model.stationary if start is None else start
    prob = TruncSeries.one(x.trunc_len)
    for a in z:
        mass, x = belief_step(x, model, a)
        prob = mul(*align(prob, mass))
    return prob, x


def cond_prob_from(model: HmmModel, x: BeliefVector, z: Sequence[int], last: int) -> TruncSeries:
    """p_x(last | z): the belief after z, pushed through Delta_last 1."""
    _, belief = belief_after(model, z, start=x)
    _check_symbol(model, last)
    mass, _ = propagate(belief, model, last)
    return mass


def cond_prob(model: HmmModel, z: Sequence[int], last: int) -> TruncSeries:
    """
    Conditional expansion p(last | z) = x_{-1} Delta_last 1.

    Its coefficients are the b_j(z last) of the stabilization results.

    Raises:
        PrunedSequenceError: If p(z) is zero to the computed order.
    """
    return cond_prob_from(model, model.stationary, z, last)
