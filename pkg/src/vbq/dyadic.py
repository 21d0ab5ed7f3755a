"""Exact arithmetic on dyadic code points ``n / 2**R`` with odd ``n``.

The rate ``R`` counts every bit of the binary fraction ``0.b1...bR``,
including the terminal 1.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidArgumentError, NonCanonicalError, ParseError

MAX_RATE = 60

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True, order=False)
class CodePoint:
    numerator: int
    rate: int

    def __post_init__(self):
        n, r = self.numerator, self.rate
        if not 1 <= r <= MAX_RATE:
            raise InvalidArgumentError(f"rate must be in [1, {MAX_RATE}], got {r}")
        if not 1 <= n < (1 << r):
            raise InvalidArgumentError(f"numerator {n} out of range for rate {r}")
        if n % 2 == 0:
            raise NonCanonicalError(f"{n}/2^{r} is not canonical (even numerator)")

    @classmethod
    def from_fraction(cls, value):
        """Canonical code point for an exact dyadic ``value`` in (0, 1)."""
        value = Fraction(value)
        if not 0 < value < 1:
            raise InvalidArgumentError(f"{value} is not in (0, 1)")
        den = value.denominator
        if den & (den - 1):
            raise InvalidArgumentError(f"{value} is not dyadic")
        return cls(value.numerator, den.bit_length() - 1)

    @classmethod
    def from_grid(cls, n, r):
        """Canonicalize ``n / 2**r`` by stripping trailing zero bits."""
        if n <= 0 or n >= (1 << r):
            raise InvalidArgumentError(f"{n}/2^{r} is a boundary value")
        shift = (n & -n).bit_length() - 1
        return cls(n >> shift, r - shift)

    @property
    def value(self):
        return math.ldexp(self.numerator, -self.rate)

    @property
    def fraction(self):
        return Fraction(self.numerator, 1 << self.rate)

    def to_bits(self):
        return format(self.numerator, f"0{self.rate}b")

    def sort_key(self):
        return (self.rate, self.numerator)

    def to_wire(self):
        """Rate byte followed by the numerator in ceil(R/8) big-endian bytes."""
        nbytes = (self.rate + 7) // 8
        return bytes([self.rate]) + self.numerator.to_bytes(nbytes, "big")

    @classmethod
    def read_wire(cls, buf, offset=0):
        if offset >= len(buf):
            raise ParseError("truncated code point")
        rate = buf[offset]
        nbytes = (rate + 7) // 8
        end = offset + 1 + nbytes
        if end > len(buf):
            raise ParseError("truncated code point numerator")
        return cls(int.from_bytes(bytes(buf[offset + 1:end]), "big"), rate), end

    def __repr__(self):
        return f"CodePoint({self.numerator}/2^{self.rate})"


HALF = CodePoint(1, 1)


def from_bits(bits):
    """Code point for the binary fraction ``0.b1 b2 ... bR``.

    ``bits`` is a string like ``"111"`` or a sequence of 0/1 ints.
    """
    if isinstance(bits, str):
        seq = bits
        if any(c not in "01" for c in seq):
            raise InvalidArgumentError(f"not a bit string: {bits!r}")
        digits = [int(c) for c in seq]
    else:
        digits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in digits):
            raise InvalidArgumentError("bits must be 0 or 1")
    if not digits:
        raise InvalidArgumentError("empty bit sequence")
    if digits[-1] != 1:
        raise NonCanonicalError("bit sequence must end in 1")
    n = 0
    for b in digits:
        n = (n << 1) | b
    return CodePoint(n, len(digits))


def _grid_value(n, r):
    if n == 0:
        return ZERO
    if n == (1 << r):
        return ONE
    return CodePoint.from_grid(n, r)


def neighbors_at_rate(target, r):
    """Closest rate-``r`` grid values at or below / at or above ``target``.

    Returns ``(left, right)``. Each is a canonical :class:`CodePoint`, or the
    boundary ``ZERO``/``ONE`` (a :class:`~fractions.Fraction`), which callers
    must reject.
    """
    if not 1 <= r <= MAX_RATE:
        raise InvalidArgumentError(f"rate must be in [1, {MAX_RATE}], got {r}")
    t = Fraction(target)
    if not 0 < t < 1:
        raise InvalidArgumentError(f"target must lie in (0, 1), got {target}")
    scaled = t * (1 << r)
    lo = math.floor(scaled)
    hi = math.ceil(scaled)
    return _grid_value(lo, r), _grid_value(hi, r)


def shortest_in_interval(lo, hi):
    """Code point in ``[lo, hi)`` with minimal rate, ties to the smaller value."""
    lo = Fraction(lo)
    hi = Fraction(hi)
    if not 0 <= lo < hi <= 1:
        raise InvalidArgumentError(f"need 0 <= lo < hi <= 1, got [{lo}, {hi})")
    for r in range(1, MAX_RATE + 1):
        scale = 1 << r
        n = math.ceil(lo * scale)
        if n % 2 == 0:
            n += 1
        if n < scale and Fraction(n, scale) < hi:
            return CodePoint(n, r)
    raise InvalidArgumentError(f"interval [{lo}, {hi}) is narrower than the 2^-{MAX_RATE} grid")


def value_of(point):
    """Exact value of a code point or boundary."""
    return point.fraction if isinstance(point, CodePoint) else Fraction(point)
