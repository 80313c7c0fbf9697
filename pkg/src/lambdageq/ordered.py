"""Ordered values in Z^n and Q^n under the right-lexicographic order.

Coordinate 1 is the smallest (Archimedean) component, so an ordinary integer
k embeds as (k, 0, ..., 0).  Comparison looks at the highest nonzero index
first.
"""

from fractions import Fraction
from functools import total_ordering
import re


class RankMismatch(ValueError):
    """Raised when values of different rank meet in one operation."""


@total_ordering
class _Vector:
    __slots__ = ("coords",)
    _scalar = None

    def __init__(self, coords):
        object.__setattr__(self, "coords", tuple(self._scalar(c) for c in coords))
        if not self.coords:
            raise ValueError("rank must be at least 1")

    def __setattr__(self, name, value):
        raise AttributeError("ordered values are immutable")

    @property
    def rank(self):
        return len(self.coords)

    def _check(self, other):
        if not isinstance(other, _Vector):
            return NotImplemented
        if other.rank != self.rank:
            raise RankMismatch(f"rank {self.rank} vs rank {other.rank}")
        return other

    def _result_type(self, other):
        if isinstance(self, LambdaRational) or isinstance(other, LambdaRational):
            return LambdaRational
        return LambdaScalar

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        cls = self._result_type(other)
        return cls(a + b for a, b in zip(self.coords, other.coords))

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        cls = self._result_type(other)
        return cls(a - b for a, b in zip(self.coords, other.coords))

    def __neg__(self):
        return type(self)(-a for a in self.coords)

    def __mul__(self, k):
        if isinstance(k, _Vector):
            return NotImplemented
        if isinstance(k, Fraction) and not isinstance(self, LambdaRational):
            return LambdaRational(a * k for a in self.coords)
        return type(self)(a * k for a in self.coords)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, _Vector):
            return NotImplemented
        return self.rank == other.rank and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __lt__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return compare(self, other) < 0

    def __bool__(self):
        return any(self.coords)

    def sign(self):
        for c in reversed(self.coords):
            if c:
                return 1 if c > 0 else -1
        return 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __repr__(self):
        return f"{type(self).__name__}({list(self.coords)})"

    def __str__(self):
        return "[" + ",".join(str(c) for c in self.coords) + "]"


class LambdaScalar(_Vector):
    """Element of Z^n."""

    __slots__ = ()
    _scalar = int

    @classmethod
    def zero(cls, rank):
        return cls([0] * rank)

    @classmethod
    def unit(cls, rank, index=1):
        """The vector with a single 1 at the 1-based `index`."""
        coords = [0] * rank
        coords[index - 1] = 1
        return cls(coords)

    @classmethod
    def of_int(cls, k, rank):
        return cls([k] + [0] * (rank - 1))

    def is_finite(self):
        """True when the value lies in the first convex subgroup."""
        return height(self) <= 1


class LambdaRational(_Vector):
    """Element of Q^n, the divisible hull of Z^n."""

    __slots__ = ()
    _scalar = Fraction

    def is_integral(self):
        return all(c.denominator == 1 for c in self.coords)

    def to_scalar(self):
        if not self.is_integral():
            raise ValueError(f"{self} is not in Z^n")
        return LambdaScalar(int(c) for c in self.coords)


def compare(a, b):
    """Return -1, 0 or 1 according to the right-lexicographic order."""
    if a.rank != b.rank:
        raise RankMismatch(f"rank {a.rank} vs rank {b.rank}")
    for x, y in zip(reversed(a.coords), reversed(b.coords)):
        if x != y:
            return -1 if x < y else 1
    return 0


def height(a):
    """Largest 1-based index with a nonzero coordinate; 0 for the zero value."""
    for i in range(a.rank, 0, -1):
        if a.coords[i - 1]:
            return i
    return 0


def project(a, k):
    """Zero out coordinates 1..k (the quotient by the k-th convex subgroup)."""
    if not 0 <= k <= a.rank:
        raise ValueError(f"projection level {k} outside [0, {a.rank}]")
    return type(a)([0] * k + list(a.coords[k:]))


def halve(a):
    return LambdaRational(Fraction(c, 2) for c in a.coords)


def as_rational(a):
    return a if isinstance(a, LambdaRational) else LambdaRational(a.coords)


_VECTOR = re.compile(r"^\[\s*(-?\d+(?:/\d+)?(?:\s*,\s*-?\d+(?:/\d+)?)*)\s*\]$")


def parse_vector(text, rank=None):
    """Parse a `[a1,...,an]` literal.  Fractions give a LambdaRational."""
    m = _VECTOR.match(text.strip())
    if not m:
        raise ValueError(f"bad vector literal: {text!r}")
    parts = [p.strip() for p in m.group(1).split(",")]
    if rank is not None and len(parts) != rank:
        raise RankMismatch(f"literal {text!r} has rank {len(parts)}, expected {rank}")
    if any("/" in p for p in parts):
        return LambdaRational(Fraction(p) for p in parts)
    return LambdaScalar(int(p) for p in parts)
