"""Exact rational linear combinations of logarithms of positive rationals.

Every closed-form determinant in this package is a finite sum
``sum q_i * log(r_i)`` with rational ``q_i`` and positive rational ``r_i``.
Factoring each ``r_i`` into primes gives a canonical coordinate vector over
``{log 2, log 3, log 5, ...}``, and since logarithms of distinct primes are
linearly independent over Q, two combinations are equal as real numbers
exactly when their prime vectors agree.  That makes identity checks exact.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping

import mpmath
from sympy import factorint

Rational = Fraction | int


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to Fraction (never floats)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@lru_cache(maxsize=4096)
def _factor(k: int) -> tuple[tuple[int, int], ...]:
    return tuple(sorted((int(p), int(e)) for p, e in factorint(k).items()))


class LogCombination:
    """Immutable ``sum_p coeff_p * log(p)`` over primes ``p``."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, Rational] | None = None):
        clean = {}
        for p, c in (terms or {}).items():
            c = as_fraction(c)
            if c:
                clean[int(p)] = c
        self._terms = dict(sorted(clean.items()))

    @classmethod
    def log(cls, x: Rational, coeff: Rational = 1) -> "LogCombination":
        """``coeff * log(x)`` for a positive rational ``x``."""
        x = as_fraction(x)
        if x <= 0:
            raise ValueError(f"log of non-positive rational {x}")
        coeff = as_fraction(coeff)
        terms: dict[int, Fraction] = {}
        for part, sign in ((x.numerator, 1), (x.denominator, -1)):
            for p, e in _factor(part):
                terms[p] = terms.get(p, Fraction(0)) + sign * e * coeff
        return cls(terms)

    @classmethod
    def zero(cls) -> "LogCombination":
        return cls()

    @classmethod
    def sum(cls, items: Iterable["LogCombination"]) -> "LogCombination":
        total: dict[int, Fraction] = {}
        for item in items:
            for p, c in item._terms.items():
                total[p] = total.get(p, Fraction(0)) + c
        return cls(total)

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    def __add__(self, other: "LogCombination") -> "LogCombination":
        if not isinstance(other, LogCombination):
            return NotImplemented
        return LogCombination.sum((self, other))

    def __neg__(self) -> "LogCombination":
        return LogCombination({p: -c for p, c in self._terms.items()})

    def __sub__(self, other: "LogCombination") -> "LogCombination":
        if not isinstance(other, LogCombination):
            return NotImplemented
        return self + (-other)

    def __mul__(self, k) -> "LogCombination":
        if isinstance(k, LogCombination):
            return NotImplemented
        k = as_fraction(k)
        return LogCombination({p: c * k for p, c in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, k) -> "LogCombination":
        return self * (1 / as_fraction(k))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogCombination):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(tuple(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    def exp_rational(self) -> Fraction | None:
        """``exp(self)`` when it is rational (all coefficients integral), else None."""
        out = Fraction(1)
        for p, c in self._terms.items():
            if c.denominator != 1:
                return None
            out *= Fraction(p) ** int(c)
        return out

    def evaluate(self, precision: int = 256) -> mpmath.mpf:
        with mpmath.workprec(precision + 16):
            total = mpmath.mpf(0)
            for p, c in self._terms.items():
                total += mpmath.mpf(c.numerator) / c.denominator * mpmath.log(p)
        with mpmath.workprec(precision):
            return +total

    def __float__(self) -> float:
        return float(self.evaluate(64))

    def to_json(self) -> dict[str, str]:
        return {str(p): str(c) for p, c in self._terms.items()}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "LogCombination":
        return cls({int(p): Fraction(c) for p, c in data.items()})

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for p, c in self._terms.items():
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            body = f"log({p})" if mag == 1 else f"{mag}*log({p})"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"LogCombination({self})"


def log_of(x: Rational, coeff: Rational = 1) -> LogCombination:
    return LogCombination.log(x, coeff)
