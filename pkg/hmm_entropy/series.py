"""Truncated power series in eps with exact rational coefficients.

Two types live here. TruncSeries holds c_0 + c_1 eps + ... + c_L eps^L with
Fraction coefficients; every probability in the package is one of these.
LogSeries holds a(eps) + b(eps) log(eps) where a has real coefficients and
b has exact ones; entropy expansions accumulate in it.

Values are immutable and every operation is a pure function.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple, Union

import mpmath

from .config import get_extended_dps, get_real_precision
from .errors import (
    NonProbabilityError,
    SeriesDivisionError,
    SeriesError,
    SeriesZeroDivisionError,
    TruncationMismatchError,
)

logger = logging.getLogger(__name__)

_ZERO = Fraction(0)
_ONE = Fraction(1)


class TruncatedZero:
    """
    Order of a series whose coefficients all vanish through its truncation.

    Downstream code reads it as "order greater than L"; it is never equal
    to an integer order.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "TruncatedZero"

    def __reduce__(self):
        return (TruncatedZero, ())


TRUNCATED_ZERO = TruncatedZero()

Order = Union[int, TruncatedZero]


def order_exceeds(order: Order, bound: int) -> bool:
    """True when an order (possibly TruncatedZero) is strictly above bound."""
    return order is TRUNCATED_ZERO or order > bound


# =============================================================================
# Real coefficient arithmetic
# =============================================================================

@dataclass(frozen=True)
class RealContext:
    """
    Arithmetic used for the real-valued (plain) part of a LogSeries.

    Attributes:
        precision (str): 'double' for Python floats, 'extended' for mpmath.
        dps (int): mpmath decimal digits when precision is 'extended'.
    """

    precision: str = "double"
    dps: int = 50

    @property
    def extended(self) -> bool:
        return self.precision == "extended"

    @property
    def zero(self):
        return mpmath.mpf(0) if self.extended else 0.0

    def real(self, value: Fraction):
        if self.extended:
            return mpmath.mpf(value.numerator) / value.denominator
        return value.numerator / value.denominator

    def log(self, value: Fraction):
        if value <= 0:
            raise NonProbabilityError(f"log of non-positive value {value}")
        if self.extended:
            return mpmath.log(self.real(value))
        approx = value.numerator / value.denominator
        if approx == 0.0 or math.isinf(approx):
            return math.log(value.numerator) - math.log(value.denominator)
        return math.log(approx)


def real_context() -> RealContext:
    """
    Build the RealContext selected by HMM_ENTROPY_PRECISION.

    In extended mode the global mpmath working precision is set to
    HMM_ENTROPY_DPS digits.
    """
    precision = get_real_precision()
    dps = get_extended_dps()
    if precision == "extended":
        mpmath.mp.dps = dps
    return RealContext(precision=precision, dps=dps)


# =============================================================================
# TruncSeries
# =============================================================================

@dataclass(frozen=True)
class TruncSeries:
    """
    Power series c_0 + c_1 eps + ... + c_L eps^L, known exactly up to eps^L.

    Attributes:
        coeffs (Tuple[Fraction, ...]): c_0..c_L; the length is L+1.
    """

    coeffs: Tuple[Fraction, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise SeriesError("a truncated series needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))

    @classmethod
    def _wrap(cls, coeffs: Tuple[Fraction, ...]) -> "TruncSeries":
        # Skips coefficient conversion; callers pass Fractions already.
        series = object.__new__(cls)
        object.__setattr__(series, "coeffs", coeffs)
        return series

    # --- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, trunc_len: int) -> "TruncSeries":
        return cls._wrap((_ZERO,) * (trunc_len + 1))

    @classmethod
    def constant(cls, value, trunc_len: int) -> "TruncSeries":
        return cls._wrap((Fraction(value),) + (_ZERO,) * trunc_len)

    @classmethod
    def one(cls, trunc_len: int) -> "TruncSeries":
        return cls.constant(_ONE, trunc_len)

    @classmethod
    def monomial(cls, value, degree: int, trunc_len: int) -> "TruncSeries":
        coeffs = [_ZERO] * (trunc_len + 1)
        if degree <= trunc_len:
            coeffs[degree] = Fraction(value)
        return cls._wrap(tuple(coeffs))

    @classmethod
    def from_coeffs(cls, coeffs: Iterable, trunc_len: int) -> "TruncSeries":
        """
        Build a series from polynomial coefficients, padding or cutting to L.

        Coefficients past the supplied list are taken to be zero.
        """
        values = [Fraction(c) for c in coeffs][: trunc_len + 1]
        values += [_ZERO] * (trunc_len + 1 - len(values))
        return cls._wrap(tuple(values))

    # --- inspection -----------------------------------------------------------

    @property
    def trunc_len(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, degree: int) -> Fraction:
        return self.coeffs[degree]

    def order(self) -> Order:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return TRUNCATED_ZERO

    def is_truncated_zero(self) -> bool:
        return not any(self.coeffs)

    def leading(self) -> Fraction:
        """Coefficient at index order(); zero for a TruncatedZero series."""
        for c in self.coeffs:
            if c:
                return c
        return _ZERO

    # --- resizing -------------------------------------------------------------

    def truncate(self, trunc_len: int) -> "TruncSeries":
        if trunc_len > self.trunc_len:
            raise TruncationMismatchError(
                f"cannot extend a series known to degree {self.trunc_len} to {trunc_len}"
            )
        if trunc_len == self.trunc_len:
            return self
        return TruncSeries._wrap(self.coeffs[: trunc_len + 1])

    def resize(self, trunc_len: int) -> "TruncSeries":
        """
        Cut or zero-pad to a new length.

        Padding is only sound for polynomial entries such as model
        parameters, never for computed quotients.
        """
        if trunc_len <= self.trunc_len:
            return self.truncate(trunc_len)
        return TruncSeries._wrap(self.coeffs + (_ZERO,) * (trunc_len - self.trunc_len))

    # --- arithmetic -----------------------------------------------------------

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        return add(self, other)

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return add(self, -other)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries._wrap(tuple(-c for c in self.coeffs))

    def __mul__(self, other):
        if isinstance(other, TruncSeries):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, value) -> "TruncSeries":
        value = Fraction(value)
        return TruncSeries._wrap(tuple(c * value for c in self.coeffs))

    def evaluate(self, eps):
        return evaluate(self, eps)

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if not c:
                continue
            terms.append(str(c) if i == 0 else f"{c}*eps^{i}")
        body = " + ".join(terms) if terms else "0"
        return f"{body} + O(eps^{self.trunc_len + 1})"


def align(*series: TruncSeries) -> Tuple[TruncSeries, ...]:
    """Truncate every operand to the shortest truncation among them."""
    length = min(s.trunc_len for s in series)
    return tuple(s.truncate(length) for s in series)


def _check_same_length(a: TruncSeries, b: TruncSeries, op: str) -> None:
    if a.trunc_len != b.trunc_len:
        raise TruncationMismatchError(
            f"{op}: truncation lengths differ ({a.trunc_len} vs {b.trunc_len})"
        )


def add(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    _check_same_length(a, b, "add")
    return TruncSeries._wrap(tuple(x + y for x, y in zip(a.coeffs, b.coeffs)))


def _cauchy(a: Sequence[Fraction], b: Sequence[Fraction], n_terms: int) -> Tuple[Fraction, ...]:
    out = [_ZERO] * n_terms
    for i, ai in enumerate(a[:n_terms]):
        if not ai:
            continue
        for j in range(min(len(b), n_terms - i)):
            bj = b[j]
            if bj:
                out[i + j] += ai * bj
    return tuple(out)


def mul(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    """Cauchy product c_n = sum_{i+j=n} a_i b_j, kept for n <= L."""
    _check_same_length(a, b, "mul")
    return TruncSeries._wrap(_cauchy(a.coeffs, b.coeffs, len(a.coeffs)))


def div(f: TruncSeries, g: TruncSeries) -> TruncSeries:
    """
    Quotient f/g as a power series.

    Both operands are cut to the shorter truncation L. When ord(g) = m > 0
    the common factor eps^m is removed from both before the recursion
    h_0 g_i + h_1 g_{i-1} + ... + h_i g_0 = f_i, so the quotient is known
    to degree L - m.

    Args:
        f (TruncSeries): Numerator.
        g (TruncSeries): Denominator, not zero to its truncation.

    Returns:
        TruncSeries: h with h*g == f through degree L - m.

    Raises:
        SeriesZeroDivisionError: If g is zero to its truncation.
        SeriesDivisionError: If ord(f) < ord(g).
    """
    f, g = align(f, g)
    m = g.order()
    if m is TRUNCATED_ZERO:
        raise SeriesZeroDivisionError("division by a series that is zero to its truncation")
    fo = f.order()
    if fo is not TRUNCATED_ZERO and fo < m:
        raise SeriesDivisionError(
            f"ord(numerator)={fo} < ord(denominator)={m}: quotient is not a power series"
        )
    fs = f.coeffs[m:]
    gs = g.coeffs[m:]
    g0 = gs[0]
    h = []
    for i in range(len(fs)):
        acc = fs[i]
        for j in range(max(0, i - len(gs) + 1), i):
            gij = gs[i - j]
            if gij and h[j]:
                acc -= h[j] * gij
        h.append(acc / g0)
    return TruncSeries._wrap(tuple(h))


def order(s: TruncSeries) -> Order:
    """Index of the first nonzero coefficient, or TRUNCATED_ZERO."""
    return s.order()


# =============================================================================
# LogSeries
# =============================================================================

@dataclass(frozen=True)
class LogSeries:
    """
    Formal sum plain(eps) + logpart(eps) * log(eps).

    The two parts carry independent windows: plain is known to degree
    len(plain) - 1 and logpart to logpart.trunc_len.

    Attributes:
        plain (Tuple): Real coefficients (float or mpmath.mpf).
        logpart (TruncSeries): Exact coefficients multiplying log(eps).
    """

    plain: Tuple
    logpart: TruncSeries

    @classmethod
    def zero(cls, plain_len: int, log_len: int, ctx: RealContext = None) -> "LogSeries":
        ctx = ctx or real_context()
        return cls(plain=(ctx.zero,) * (plain_len + 1), logpart=TruncSeries.zero(log_len))

    @property
    def plain_len(self) -> int:
        return len(self.plain) - 1

    @property
    def log_len(self) -> int:
        return self.logpart.trunc_len

    def truncate(self, plain_len: int, log_len: int) -> "LogSeries":
        if plain_len > self.plain_len:
            raise TruncationMismatchError(
                f"plain part known to degree {self.plain_len}, {plain_len} requested"
            )
        return LogSeries(plain=tuple(self.plain[: plain_len + 1]),
                         logpart=self.logpart.truncate(log_len))

    def __add__(self, other: "LogSeries") -> "LogSeries":
        n = min(self.plain_len, other.plain_len)
        plain = tuple(x + y for x, y in zip(self.plain[: n + 1], other.plain[: n + 1]))
        return LogSeries(plain=plain, logpart=add(*align(self.logpart, other.logpart)))

    def __neg__(self) -> "LogSeries":
        return LogSeries(plain=tuple(-c for c in self.plain), logpart=-self.logpart)

    def scaled_by(self, p: TruncSeries, ctx: RealContext = None) -> "LogSeries":
        """
        Multiply by an exact series p.

        The plain window shrinks to min(plain_len, L_p) and the log window
        to min(log_len, L_p).
        """
        ctx = ctx or real_context()
        n = min(self.plain_len, p.trunc_len)
        plain = [ctx.zero] * (n + 1)
        for i in range(n + 1):
            pi = p.coeffs[i]
            if not pi:
                continue
            w = ctx.real(pi)
            for j in range(n + 1 - i):
                plain[i + j] += w * self.plain[j]
        logpart = mul(*align(p, self.logpart))
        return LogSeries(plain=tuple(plain), logpart=logpart)

    def evaluate(self, eps):
        return evaluate(self, eps)

    def __str__(self) -> str:
        plain = ", ".join(repr(c) for c in self.plain)
        return f"LogSeries(plain=[{plain}], logpart={self.logpart})"


def log_expand(p: TruncSeries, ctx: RealContext = None) -> LogSeries:
    """
    Expand log p(eps) as m log(eps) + log u(0) + log(u(eps)/u(0)).

    Writes p = eps^m u(eps) with u(0) > 0. The series log(u/u(0)) is the
    log(1+x) composition, computed exactly through the recurrence
    n y_n u_0 = n u_n - sum_{j=1}^{n-1} j y_j u_{n-j} and converted to reals.

    Args:
        p (TruncSeries): A probability-like series.
        ctx (RealContext): Real arithmetic; defaults to real_context().

    Returns:
        LogSeries: plain known to degree L - m, logpart the constant m
            known to degree L.

    Raises:
        NonProbabilityError: If p is zero to its truncation or its
            leading coefficient is not positive.
    """
    ctx = ctx or real_context()
    m = p.order()
    if m is TRUNCATED_ZERO:
        raise NonProbabilityError("log of a series that is zero to its truncation")
    u = p.coeffs[m:]
    u0 = u[0]
    if u0 < 0:
        raise NonProbabilityError(f"leading coefficient {u0} is negative")
    y = [_ZERO]
    for n in range(1, len(u)):
        acc = n * u[n]
        for j in range(1, n):
            if u[n - j] and y[j]:
                acc -= j * y[j] * u[n - j]
        y.append(acc / (n * u0))
    plain = (ctx.log(u0),) + tuple(ctx.real(c) for c in y[1:])
    return LogSeries(plain=plain, logpart=TruncSeries.constant(m, p.trunc_len))


def evaluate(s: Union[TruncSeries, LogSeries], eps):
    """
    Horner evaluation at eps; a LogSeries adds logpart(eps) * log(eps).

    Raises:
        SeriesError: If eps <= 0 for a LogSeries with a nonzero log part.
    """
    if isinstance(s, TruncSeries):
        acc = 0
        for c in reversed(s.coeffs):
            acc = acc * eps + c
        return acc
    acc = 0
    for c in reversed(s.plain):
        acc = acc * eps + c
    if s.logpart.is_truncated_zero():
        return acc
    if eps <= 0:
        raise SeriesError("log(eps) is undefined for eps <= 0")
    if isinstance(eps, mpmath.mpf) or isinstance(acc, mpmath.mpf):
        eps = mpmath.mpf(eps)
        weight = mpmath.mpf(0)
        for c in reversed(s.logpart.coeffs):
            weight = weight * eps + mpmath.mpf(c.numerator) / c.denominator
        return acc + weight * mpmath.log(eps)
    return acc + float(evaluate(s.logpart, eps)) * math.log(eps)
