"""Rational-coefficient polynomials and their preimage sets.

A preimage set ``R^{-1}(w)`` is the multiset of roots of ``R(z) - w``.  When
``w`` is rational the polynomial is factored over Q first, so rational roots
(and their multiplicities) come out exact; the irreducible remainder, and
every non-rational ``w``, goes through a high-precision numeric solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import sympy

from .errors import ComplexSpectrum, NonConvergence, ZeroNotSimpleRoot
from .logs import as_fraction

GUARD_BITS = 32

_X = sympy.Symbol("x")


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def to_mp(x):
    """Convert an exact rational or mpmath number to an mpmath number."""
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return mpmath.mpf(x)
    return x


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with exact rational coefficients, constant term first."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = [as_fraction(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs or (len(coeffs) == 1 and coeffs[0] == 0):
            raise ValueError("the zero polynomial has no degree")
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def of(cls, *coeffs) -> "Polynomial":
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> Fraction:
        return self.coefficients[-1]

    def coefficient(self, k: int) -> Fraction:
        return self.coefficients[k] if k < len(self.coefficients) else Fraction(0)

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            raise ValueError("derivative of a constant is the zero polynomial")
        return Polynomial(tuple(k * c for k, c in enumerate(self.coefficients) if k))

    def minus_constant(self, w: Fraction) -> "Polynomial":
        coeffs = list(self.coefficients)
        coeffs[0] -= as_fraction(w)
        return Polynomial(tuple(coeffs))

    def compose(self, other: "Polynomial") -> "Polynomial":
        """``self(other(z))`` computed exactly."""
        result = [Fraction(0)]
        for c in reversed(self.coefficients):
            result = _poly_mul(result, other.coefficients)
            result[0] += c
        return Polynomial(tuple(result))

    def __call__(self, z, precision: int = 256):
        return evaluate(self, z, precision)

    def __str__(self) -> str:
        terms = []
        for k, c in enumerate(self.coefficients):
            if c == 0:
                continue
            power = "" if k == 0 else ("z" if k == 1 else f"z^{k}")
            terms.append(f"{c}{'*' if power else ''}{power}")
        return " + ".join(terms) if terms else "0"


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def evaluate(p: Polynomial, z, precision: int = 256):
    """Horner evaluation; exact for rational ``z``, else at ``precision`` bits."""
    if is_exact(z):
        acc = Fraction(0)
        for c in reversed(p.coefficients):
            acc = acc * z + c
        return acc
    with mpmath.workprec(precision):
        acc = mpmath.mpf(0)
        for c in reversed(p.coefficients):
            acc = acc * z + to_mp(c)
        return +acc


@dataclass(frozen=True)
class RootSet:
    """Roots of ``p(z) - w`` with multiplicities.

    ``roots`` holds ``(value, multiplicity)`` pairs.  Values are ``Fraction``
    when exact, ``mpf`` when certified real and ``mpc`` otherwise.
    """

    roots: tuple[tuple[object, int], ...]
    precision: int

    @property
    def degree(self) -> int:
        return sum(k for _, k in self.roots)

    def values(self) -> list:
        return [v for v, k in self.roots for _ in range(k)]

    @property
    def is_real(self) -> bool:
        return not any(isinstance(v, mpmath.mpc) for v, _ in self.roots)

    def real_roots(self) -> tuple[tuple[object, int], ...]:
        if not self.is_real:
            bad = [v for v, _ in self.roots if isinstance(v, mpmath.mpc)]
            raise ComplexSpectrum(f"non-real preimages {[mpmath.nstr(b, 8) for b in bad]}")
        return self.roots


def _quadratic_roots(a, b, c, precision: int):
    """Both roots of a z^2 + b z + c without cancellation."""
    disc = b * b - 4 * a * c
    scale = abs(b * b) + abs(4 * a * c)
    if abs(disc) <= scale * mpmath.ldexp(1, -precision):
        r = -b / (2 * a)
        return [(r, 2)]
    if isinstance(disc, mpmath.mpf) and disc > 0:
        s = mpmath.sqrt(disc)
        q = -(b + s) / 2 if b >= 0 else -(b - s) / 2
    else:
        s = mpmath.sqrt(mpmath.mpc(disc))
        q1, q2 = -(b + s) / 2, -(b - s) / 2
        q = q1 if abs(q1) >= abs(q2) else q2
    if q == 0:
        return [(mpmath.mpf(0), 2)]
    return [(q / a, 1), (c / q, 1)]


def _newton_polish(coeffs_desc, z, steps: int = 8):
    dcoeffs = [c * (len(coeffs_desc) - 1 - i) for i, c in enumerate(coeffs_desc[:-1])]
    for _ in range(steps):
        f = mpmath.polyval(coeffs_desc, z)
        df = mpmath.polyval(dcoeffs, z)
        if df == 0:
            break
        step = f / df
        z = z - step
        if abs(step) <= abs(z) * mpmath.eps:
            break
    return z


def _numeric_roots(coeffs_asc: Sequence, precision: int, max_steps: int):
    """Roots of a polynomial with mpmath coefficients, as (value, mult) pairs."""
    coeffs = [to_mp(c) for c in coeffs_asc]
    deg = len(coeffs) - 1
    if deg == 1:
        return [(-coeffs[0] / coeffs[1], 1)]
    if deg == 2:
        return _quadratic_roots(coeffs[2], coeffs[1], coeffs[0], precision)
    desc = list(reversed(coeffs))
    try:
        raw = mpmath.polyroots(desc, maxsteps=max_steps, extraprec=precision)
    except mpmath.libmp.NoConvergence as exc:
        raise NonConvergence(f"polyroots failed for degree {deg}: {exc}") from exc
    polished = [_newton_polish(desc, r) for r in raw]
    # merge clusters that are numerically one multiple root
    tol = mpmath.ldexp(1, -precision // 3)
    merged: list[list] = []
    for r in sorted(polished, key=lambda z: (mpmath.re(z), mpmath.im(z))):
        for entry in merged:
            if abs(entry[0] - r) <= tol * max(1, abs(r)):
                entry[0] = (entry[0] * entry[1] + r) / (entry[1] + 1)
                entry[1] += 1
                break
        else:
            merged.append([r, 1])
    return [(v, k) for v, k in merged]


def _certify(coeffs_asc, roots, precision: int):
    """Check residuals and snap roots with negligible imaginary part to the real line."""
    mp_coeffs = [to_mp(c) for c in coeffs_asc]
    desc = list(reversed(mp_coeffs))
    real_tol = mpmath.ldexp(1, -(precision // 2))
    out = []
    for value, mult in roots:
        size = max(1, abs(value))
        scale = sum(abs(c) * size**i for i, c in enumerate(mp_coeffs))
        # a root of multiplicity k is only determined to ~eps^(1/k)
        residual_tol = scale * mpmath.ldexp(1, -(precision // (2 * mult)))
        if abs(mpmath.polyval(desc, value)) > residual_tol:
            raise NonConvergence(f"root {mpmath.nstr(value, 10)} has residual above tolerance")
        if isinstance(value, mpmath.mpc):
            if abs(value.imag) <= real_tol * size:
                value = mpmath.mpf(value.real)
        out.append((value, mult))
    return out


def preimages(p: Polynomial, w, precision: int = 256, max_steps: int = 400) -> RootSet:
    """All ``d`` roots of ``p(z) - w`` with multiplicity.

    Parameters
    ----------
    p : Polynomial
        Degree at least 2.
    w : Fraction, int, mpf or mpc
        Target value.  Exact rationals take the factor-over-Q path, which
        yields exact rational roots with certified multiplicities.
    precision : int
        Working precision in bits for non-rational roots.

    Raises
    ------
    NonConvergence
        If a numeric root fails its residual test after refinement.
    """
    if p.degree < 2:
        raise ValueError("preimages needs a polynomial of degree >= 2")
    with mpmath.workprec(precision + GUARD_BITS):
        if is_exact(w):
            q = p.minus_constant(Fraction(w))
            poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator)
                               for c in reversed(q.coefficients)], _X, domain="QQ")
            _, factors = poly.factor_list()
            roots: list[tuple[object, int]] = []
            for factor, mult in factors:
                fc = [Fraction(int(c.p), int(c.q)) for c in reversed(factor.all_coeffs())]
                if len(fc) == 2:
                    roots.append((-fc[0] / fc[1], mult))
                else:
                    numeric = _numeric_roots(fc, precision, max_steps)
                    numeric = _certify(fc, numeric, precision)
                    roots.extend((v, k * mult) for v, k in numeric)
        else:
            coeffs = [to_mp(c) for c in p.coefficients]
            coeffs[0] = coeffs[0] - w
            roots = _certify(coeffs, _numeric_roots(coeffs, precision, max_steps), precision)
    total = sum(k for _, k in roots)
    if total != p.degree:
        raise NonConvergence(f"found {total} roots for a degree-{p.degree} polynomial")
    return RootSet(tuple(sorted(roots, key=_sort_key)), precision)


def _sort_key(item):
    v = item[0]
    if isinstance(v, mpmath.mpc):
        return (float(v.real), float(v.imag))
    return (float(to_mp(v)), 0.0)


def nonzero_root_product(p: Polynomial) -> Fraction:
    """Product of the nonzero roots of ``p`` read off the coefficients (Vieta).

    For ``p(z) = a_d z^d + ... + a_1 z`` with ``a_1 != 0`` this is
    ``(-1)^(d-1) a_1 / a_d``.
    """
    if p.coefficient(0) != 0:
        raise ValueError("polynomial must vanish at 0")
    a1 = p.coefficient(1)
    if a1 == 0:
        raise ZeroNotSimpleRoot("0 is a multiple root (linear coefficient vanishes)")
    return (-1) ** (p.degree - 1) * a1 / p.leading


def root_multiplicity(p: Polynomial, z, target=0, precision: int = 256) -> int:
    """Multiplicity of ``z`` as a root of ``p - target`` (0 if not a root)."""
    coeffs = list(p.coefficients)
    exact = is_exact(z) and is_exact(target)
    if exact:
        coeffs[0] -= Fraction(target)
    else:
        with mpmath.workprec(precision):
            coeffs = [to_mp(c) for c in coeffs]
            coeffs[0] = coeffs[0] - to_mp(target)
    tol = mpmath.ldexp(1, -(precision // 2))
    k = 0
    while coeffs:
        if exact:
            value = Fraction(0)
            for c in reversed(coeffs):
                value = value * z + c
            vanishes = value == 0
        else:
            with mpmath.workprec(precision):
                value = mpmath.polyval(list(reversed(coeffs)), to_mp(z))
            vanishes = abs(value) <= tol
        if not vanishes:
            break
        k += 1
        coeffs = [i * c for i, c in enumerate(coeffs)][1:]
    return k


def polyroots_reference(p: Polynomial, precision: int = 256) -> list:
    """All roots of ``p`` from mpmath's simultaneous iteration, no exact path.

    Used only as an independent cross-check of :func:`preimages`.
    """
    with mpmath.workprec(precision + GUARD_BITS):
        desc = [to_mp(c) for c in reversed(p.coefficients)]
        return list(mpmath.polyroots(desc, maxsteps=400, extraprec=2 * precision))


def product(values: Iterable):
    out = 1
    for v in values:
        out = out * v
    return out
