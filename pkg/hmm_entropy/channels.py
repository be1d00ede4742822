"""Markov inputs through memoryless channels, realized as hidden Markov models.

A memoryless channel with an i.i.d. state C (probabilities q_c) and a noise
variable E drawn from p(e | x, c) turns a first-order input X into the
hidden chain Y = (X, C, E) with

    Delta[(x, c, e), (y, d, f)] = Pi[x][y] * q_d * p(f | y, d)

and output Z = Phi(x, c, e). An input of order m is grouped into
non-overlapping m-blocks first: the hidden state is (X-block, C-block,
E-block), the output is the Z-block over |Z|^m symbols, and the entropy
rate of Z is that of the block process divided by m. The three presets are
the binary symmetric channel, the binary erasure channel and the
Gilbert-Elliott channel.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import linalg
from .config import get_series_slack
from .errors import ChannelSpecError, ModelValidationError
from .expansion import ExpansionResult, expand, working_trunc_len
from .hmm import HmmModel
from .series import LogSeries, TruncSeries, log_expand, real_context

logger = logging.getLogger(__name__)

ERASURE = 2

History = Tuple[int, ...]


# =============================================================================
# Markov inputs
# =============================================================================

@dataclass(frozen=True)
class MarkovInput:
    """
    Input chain X of order m over symbols 0..alphabet-1.

    Attributes:
        order (int): Memory m >= 1.
        alphabet (int): |X|.
        transitions (Dict[History, Tuple[Fraction, ...]]): For every history
            a_{-m}..a_{-1} (oldest first), the distribution of the next symbol.
    """

    order: int
    alphabet: int
    transitions: Dict[History, Tuple[Fraction, ...]]

    def __post_init__(self):
        if self.order < 1 or self.alphabet < 1:
            raise ChannelSpecError("input order and alphabet must be positive")
        histories = set(itertools.product(range(self.alphabet), repeat=self.order))
        if set(self.transitions) != histories:
            raise ChannelSpecError(f"transitions must cover all {len(histories)} histories")
        cleaned = {}
        for history, row in self.transitions.items():
            row = tuple(Fraction(p) for p in row)
            if len(row) != self.alphabet or any(p < 0 for p in row):
                raise ChannelSpecError(f"history {history}: {row} is not a distribution")
            if sum(row) != 1:
                raise ChannelSpecError(f"history {history}: probabilities sum to {sum(row)}")
            cleaned[tuple(history)] = row
        object.__setattr__(self, "transitions", cleaned)
        # Irreducibility of the lift.
        blocked_markov(self)

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence]) -> "MarkovInput":
        """First-order input from a square transition matrix."""
        n = len(matrix)
        return cls(order=1, alphabet=n,
                   transitions={(i,): tuple(Fraction(p) for p in row) for i, row in enumerate(matrix)})

    @property
    def blocks(self) -> List[History]:
        return list(itertools.product(range(self.alphabet), repeat=self.order))


def blocked_markov(source: MarkovInput) -> List[List[Fraction]]:
    """
    Order-1 lift of an order-m chain onto overlapping m-blocks, in
    lexicographic order.

    Block (a_1, ..., a_m) moves to (a_2, ..., a_m, b) with probability
    P(b | a_1..a_m); every other entry is a structural zero.

    Raises:
        ChannelSpecError: If the lifted chain is reducible.
    """
    blocks = list(itertools.product(range(source.alphabet), repeat=source.order))
    index = {b: i for i, b in enumerate(blocks)}
    lifted = [[Fraction(0)] * len(blocks) for _ in blocks]
    for i, history in enumerate(blocks):
        for b, p in enumerate(source.transitions[history]):
            lifted[i][index[history[1:] + (b,)]] += p
    support = [[p != 0 for p in row] for row in lifted]
    if not linalg.is_strongly_connected(support):
        raise ChannelSpecError("input chain is reducible")
    return lifted


def block_chain(source: MarkovInput) -> List[List[Fraction]]:
    """
    First-order chain on non-overlapping m-blocks, in lexicographic order.

    Block B moves to B' with probability prod_t P(b'_t | the m symbols
    before it in B B').

    Raises:
        ChannelSpecError: If the block chain is reducible, which happens
            when the period of the input shares a factor with m.
    """
    m = source.order
    blocks = source.blocks
    chain = []
    for block in blocks:
        row = []
        for nxt in blocks:
            window = block + nxt
            p = Fraction(1)
            for t in range(m):
                p *= source.transitions[window[t:t + m]][nxt[t]]
                if not p:
                    break
            row.append(p)
        chain.append(row)
    if not linalg.is_strongly_connected([[p != 0 for p in row] for row in chain]):
        raise ChannelSpecError(f"input chain on non-overlapping {m}-blocks is reducible")
    return chain


def block_symbol(symbols: Sequence[int], alphabet: int) -> int:
    """Mixed-radix code of an output block, oldest symbol most significant."""
    code = 0
    for z in symbols:
        code = code * alphabet + z
    return code


def split_block_symbol(code: int, alphabet: int, order: int) -> History:
    """Inverse of block_symbol for blocks of the given length."""
    symbols = []
    for _ in range(order):
        code, z = divmod(code, alphabet)
        symbols.append(z)
    return tuple(reversed(symbols))


def markov_entropy(source: MarkovInput) -> float:
    """Entropy rate -sum_i pi_i sum_j P_ij log P_ij of the input, in nats."""
    lifted = blocked_markov(source)
    pi = linalg.stationary_vector(lifted)
    total = 0.0
    for weight, row in zip(pi, lifted):
        for p in row:
            if p:
                total -= float(weight) * float(p) * math.log(float(p))
    return total


def symbol_marginal(source: MarkovInput) -> List[Fraction]:
    """Stationary probability of each input symbol."""
    pi = linalg.stationary_vector(blocked_markov(source))
    marginal = [Fraction(0)] * source.alphabet
    for weight, block in zip(pi, source.blocks):
        marginal[block[-1]] += weight
    return marginal


# =============================================================================
# Memoryless channels
# =============================================================================

@dataclass(frozen=True)
class MemorylessChannelSpec:
    """
    A memoryless channel with an i.i.d. channel state.

    Attributes:
        state_probs (Tuple[Fraction, ...]): q_c for every channel state c.
        noise (Tuple): noise[x][c][e] = p(e | x, c) as TruncSeries in eps.
        output (Tuple): output[x][c][e] = Phi(x, c, e).
        symbols (int): Output alphabet size |Z|.
    """

    state_probs: Tuple[Fraction, ...]
    noise: Tuple[Tuple[Tuple[TruncSeries, ...], ...], ...]
    output: Tuple[Tuple[Tuple[int, ...], ...], ...]
    symbols: int

    def __post_init__(self):
        q = tuple(Fraction(p) for p in self.state_probs)
        object.__setattr__(self, "state_probs", q)
        if not q or any(p < 0 for p in q) or sum(q) != 1:
            raise ChannelSpecError(f"channel state probabilities {q} are not a distribution")
        if len(self.noise) != len(self.output):
            raise ChannelSpecError("noise and output tables disagree on the input alphabet")
        lengths = {p.trunc_len for per_x in self.noise for per_c in per_x for p in per_c}
        if len(lengths) != 1:
            raise ChannelSpecError(f"noise series have mixed truncations {sorted(lengths)}")
        length = lengths.pop()
        for x, (per_x, out_x) in enumerate(zip(self.noise, self.output)):
            if len(per_x) != len(q) or len(out_x) != len(q):
                raise ChannelSpecError(f"input {x}: expected {len(q)} channel states")
            for c, (dist, out) in enumerate(zip(per_x, out_x)):
                if len(dist) != self.errors or len(out) != self.errors:
                    raise ChannelSpecError(f"p(. | {x}, {c}) must cover {self.errors} noise values")
                total = TruncSeries.zero(length)
                for e, p in enumerate(dist):
                    if p.leading() < 0:
                        raise ChannelSpecError(f"p({e} | {x}, {c}) = {p} is negative near 0")
                    total = total + p
                if total != TruncSeries.one(length):
                    raise ChannelSpecError(f"p(. | {x}, {c}) sums to {total}, not 1")
                bad = [z for z in out if not 0 <= z < self.symbols]
                if bad:
                    raise ChannelSpecError(f"outputs {bad} outside 0..{self.symbols - 1}")

    @property
    def inputs(self) -> int:
        return len(self.noise)

    @property
    def errors(self) -> int:
        return len(self.noise[0][0])

    @property
    def trunc_len(self) -> int:
        return self.noise[0][0][0].trunc_len

    def output_prob(self, x: int, c: int, z: int) -> TruncSeries:
        """p(z | x, c) = sum of p(e | x, c) over e with Phi(x, c, e) = z."""
        total = TruncSeries.zero(self.trunc_len)
        for e, p in enumerate(self.noise[x][c]):
            if self.output[x][c][e] == z:
                total = total + p
        return total

    def channel_prob(self, x: int, z: int) -> TruncSeries:
        """p(z | x) = sum_c q_c p(z | x, c)."""
        total = TruncSeries.zero(self.trunc_len)
        for c, q in enumerate(self.state_probs):
            if q:
                total = total + self.output_prob(x, c, z) * q
        return total

    def embedding(self) -> Tuple[int, ...]:
        """
        The one-to-one map z(x) with p(z(x) | x, c)(0) = 1 for every c.

        Raises:
            ChannelSpecError: If some input has no such output, or two
                inputs share one.
        """
        image = []
        for x in range(self.inputs):
            candidates = [
                z for z in range(self.symbols)
                if all(self.output_prob(x, c, z).coeffs[0] == 1 for c in range(len(self.state_probs)))
            ]
            if not candidates:
                raise ChannelSpecError(f"input {x} has no noiseless output at eps = 0")
            image.append(candidates[0])
        if len(set(image)) != len(image):
            raise ChannelSpecError(f"noiseless outputs {image} are not one-to-one")
        return tuple(image)


def output_noise_spec(spec: MemorylessChannelSpec) -> MemorylessChannelSpec:
    """
    Rewrite a channel so that its noise variable is the output itself.

    E' = X x C x Z with p(e' = (x, c, z) | x, c) = p(z | x, c) and
    Phi(x, c, (x, c, z)) = z; the output process is unchanged.
    """
    triples = list(itertools.product(range(spec.inputs), range(len(spec.state_probs)),
                                     range(spec.symbols)))
    zero = TruncSeries.zero(spec.trunc_len)
    noise = tuple(
        tuple(
            tuple(spec.output_prob(x, c, z) if (x, c) == (x2, c2) else zero for x2, c2, z in triples)
            for c in range(len(spec.state_probs))
        )
        for x in range(spec.inputs)
    )
    output = tuple(
        tuple(tuple(z for _, _, z in triples) for _ in spec.state_probs)
        for _ in range(spec.inputs)
    )
    return MemorylessChannelSpec(state_probs=spec.state_probs, noise=noise, output=output,
                                 symbols=spec.symbols)


def build_memoryless(source: MarkovInput, spec: MemorylessChannelSpec) -> HmmModel:
    """
    Hidden Markov model of a Markov input sent through a memoryless channel.

    An input of order m is read in non-overlapping m-blocks. Hidden states
    are (X-block, (c_1, e_1), ..., (c_m, e_m)) in lexicographic order, and
    state (B, C, E) emits the block symbol of Phi(b_t, c_t, e_t). A state
    whose column is identically zero (some q_c = 0 or p(e | x, c) = 0) can
    never be entered and is left out. Noise entries are polynomials, so the
    model is stored at truncation m L to keep every product exact. Each
    Delta_a(0) then has a single input block in its nonzero columns, which
    makes the model a weak Black Hole whenever the embedding exists.

    Raises:
        ChannelSpecError: If the alphabets disagree, the eps = 0 embedding
            does not exist, the block chain is reducible, or the result is
            not a valid model.
    """
    if spec.inputs != source.alphabet:
        raise ChannelSpecError(
            f"channel expects {spec.inputs} input symbols, the input has {source.alphabet}"
        )
    spec.embedding()
    m = source.order
    chain = block_chain(source)
    blocks = source.blocks
    length = spec.trunc_len * m
    zero = TruncSeries.zero(length)

    # (c, e, q_c p(e | x, c)) for every input symbol x
    steps = [
        [(c, e, spec.noise[x][c][e].resize(length) * q)
         for c, q in enumerate(spec.state_probs) if q
         for e in range(spec.errors) if not spec.noise[x][c][e].is_truncated_zero()]
        for x in range(spec.inputs)
    ]
    states = []
    for b, block in enumerate(blocks):
        for picks in itertools.product(*(steps[x] for x in block)):
            weight = TruncSeries.one(length)
            for _, _, factor in picks:
                weight = weight * factor
            z = block_symbol([spec.output[x][c][e] for x, (c, e, _) in zip(block, picks)],
                             spec.symbols)
            states.append((b, z, weight))
    logger.debug("memoryless channel: %d hidden states kept of %d",
                 len(states), len(blocks) * (len(spec.state_probs) * spec.errors) ** m)

    delta = [
        [weight * chain[src][dst] if chain[src][dst] else zero for dst, _, weight in states]
        for src, _, _ in states
    ]
    phi = [z for _, z, _ in states]
    try:
        return HmmModel(delta=tuple(tuple(row) for row in delta), phi=tuple(phi),
                        symbols=spec.symbols ** m)
    except ModelValidationError as e:
        raise ChannelSpecError(f"channel does not define a valid model: {e}")


# =============================================================================
# Presets
# =============================================================================

def _affine(c0, c1, trunc_len: int) -> TruncSeries:
    return TruncSeries.from_coeffs([Fraction(c0), Fraction(c1)], trunc_len)


def _require_binary(source: MarkovInput, name: str) -> None:
    if source.alphabet != 2:
        raise ChannelSpecError(f"{name} needs a binary input, got alphabet {source.alphabet}")


def bsc_spec(trunc_len: int = 1) -> MemorylessChannelSpec:
    flip = _affine(0, 1, trunc_len)
    keep = _affine(1, -1, trunc_len)
    return MemorylessChannelSpec(
        state_probs=(Fraction(1),),
        noise=(((keep, flip),), ((keep, flip),)),
        output=(((0, 1),), ((1, 0),)),
        symbols=2,
    )


def bsc_model(source: MarkovInput, trunc_len: int = 1) -> HmmModel:
    """
    Z = X xor E with p(E = 1) = eps.

    Hidden states (x, e) are ordered (0,0), (0,1), (1,0), (1,1) for a
    first-order input.
    """
    _require_binary(source, "bsc")
    return build_memoryless(source, bsc_spec(trunc_len))


def bec_spec(trunc_len: int = 1) -> MemorylessChannelSpec:
    erase = _affine(0, 1, trunc_len)
    keep = _affine(1, -1, trunc_len)
    return MemorylessChannelSpec(
        state_probs=(Fraction(1),),
        noise=(((keep, erase),), ((keep, erase),)),
        output=(((0, ERASURE),), ((1, ERASURE),)),
        symbols=3,
    )


def bec_model(source: MarkovInput, trunc_len: int = 1) -> HmmModel:
    """Z = X, or the erasure symbol 2 with probability eps."""
    _require_binary(source, "bec")
    return build_memoryless(source, bec_spec(trunc_len))


def ge_spec(q0, q1, kappa, trunc_len: int = 1) -> MemorylessChannelSpec:
    q0, q1, kappa = Fraction(q0), Fraction(q1), Fraction(kappa)
    if q0 < 0 or q1 < 0 or q0 + q1 != 1:
        raise ChannelSpecError(f"channel state probabilities {q0}, {q1} must sum to 1")
    if kappa <= 0:
        raise ChannelSpecError(f"kappa must be positive, got {kappa}")
    # eps_0 = eps, eps_1 = kappa * eps
    crossover = (_affine(0, 1, trunc_len), _affine(0, kappa, trunc_len))
    per_state = tuple((_affine(1, -crossover[c].coeffs[1], trunc_len), crossover[c]) for c in range(2))
    return MemorylessChannelSpec(
        state_probs=(q0, q1),
        noise=(per_state, per_state),
        output=(((0, 1), (0, 1)), ((1, 0), (1, 0))),
        symbols=2,
    )


def ge_model(source: MarkovInput, q0, q1, kappa, trunc_len: int = 1) -> HmmModel:
    """
    Gilbert-Elliott channel: crossover eps in state 0, kappa * eps in state 1.

    Hidden states (x, c, e) are lexicographic: 8 for a first-order input.
    """
    _require_binary(source, "ge")
    return build_memoryless(source, ge_spec(q0, q1, kappa, trunc_len))


# =============================================================================
# Mutual information
# =============================================================================

@dataclass(frozen=True)
class MutualInformation:
    """
    H(Z) and H(Z | X) expansions; I(X, Z) is their difference.

    Attributes:
        output_entropy (ExpansionResult): Expansion of H(Z).
        noise_entropy (ExpansionResult): Expansion of H(Z | X).
    """

    output_entropy: ExpansionResult
    noise_entropy: ExpansionResult

    def difference(self) -> ExpansionResult:
        """Expansion of I(X, Z) = H(Z) - H(Z | X)."""
        hz, hzx = self.output_entropy, self.noise_entropy
        return ExpansionResult(
            k=hz.k,
            h0=hz.h0 - hzx.h0,
            f=tuple(a - b for a, b in zip(hz.f, hzx.f)),
            g=tuple(a - b for a, b in zip(hz.g, hzx.g)),
            n0=hz.n0,
            diagnostics=hz.diagnostics,
        )


def conditional_entropy(source: MarkovInput, spec: MemorylessChannelSpec, k: int,
                        slack: Optional[int] = None) -> ExpansionResult:
    """
    H(Z | X) = -sum_{x, z} p(x) p(z | x) log p(z | x) in the LogSeries ring.

    The channel is memoryless with an i.i.d. state, so this per-symbol
    sum is exact; it is reported in the same window as H(Z).
    """
    slack = get_series_slack() if slack is None else slack
    length = working_trunc_len(k, slack)
    ctx = real_context()
    marginal = symbol_marginal(source)
    total = LogSeries.zero(k, k + 1, ctx)
    for x, px in enumerate(marginal):
        if not px:
            continue
        for z in range(spec.symbols):
            p = spec.channel_prob(x, z).resize(length)
            if p.is_truncated_zero():
                continue
            term = log_expand(p, ctx).scaled_by(p * px, ctx).truncate(k, k + 1)
            total = total + (-term)
    return ExpansionResult.from_log_series(total, k, n0=0)


def output_entropy(source: MarkovInput, spec: MemorylessChannelSpec, k: int,
                   verify: bool = False, threads: Optional[int] = None) -> ExpansionResult:
    """
    Expansion of H(Z) per output symbol.

    The model of build_memoryless emits one block of m symbols per step,
    so its expansion is divided by the input order m.

    Raises:
        ChannelSpecError: If the channel or the block chain is invalid.
        ExpansionError: As expand.
    """
    model = build_memoryless(source, spec)
    return expand(model, k, verify=verify, threads=threads).divided(source.order)


def mutual_information_expansion(source: MarkovInput, spec: MemorylessChannelSpec, k: int,
                                 verify: bool = False, threads: Optional[int] = None) -> MutualInformation:
    """
    Expansions of H(Z) and H(Z | X) for a Markov input over a memoryless channel.

    Raises:
        ChannelSpecError: If the channel is invalid.
        ExpansionError: As expand.
    """
    entropy = output_entropy(source, spec, k, verify=verify, threads=threads)
    return MutualInformation(output_entropy=entropy,
                             noise_entropy=conditional_entropy(source, spec, k))
