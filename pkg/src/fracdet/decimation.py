"""Spectral-decimation systems and the exact spectra they generate.

Sign convention: seeds ``w`` are stored as the polynomial sees them
(``w < 0``); eigenvalues of the graph Laplacian are ``-w >= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import mpmath

from .errors import (
    BranchDivergence,
    MultiplicityMismatch,
    UnknownEigenvalue,
)
from .logs import as_fraction
from .poly import (
    Polynomial,
    evaluate,
    is_exact,
    nonzero_root_product,
    preimages,
    root_multiplicity,
    to_mp,
)

VALIDATION_LEVELS = 8


class SeedKind(str, Enum):
    A = "A"
    B1 = "B1"
    B0 = "B0"


class Case(str, Enum):
    GENERIC = "generic"
    ONE_DIMENSIONAL = "one_dimensional"


@dataclass(frozen=True)
class MultiplicityRule:
    """Multiplicity of a seed eigenvalue as a function of the level.

    A / B1 seeds: ``c0`` at level 0, ``c1`` at level 1, ``c * m**n`` after.
    B0 seeds: 0 at level 0, ``c * m**n + j`` for ``n >= 1`` (``c`` is c_0).
    """

    kind: SeedKind
    c: Fraction
    c0: int = 0
    c1: int = 0
    j: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c", as_fraction(self.c))

    def at(self, n: int, m: int) -> Fraction:
        if n < 0:
            return Fraction(0)
        if self.kind is SeedKind.B0:
            return Fraction(0) if n == 0 else self.c * m**n + self.j
        if n == 0:
            return Fraction(self.c0)
        if n == 1:
            return Fraction(self.c1)
        return self.c * m**n


@dataclass(frozen=True)
class Seed:
    w: Fraction
    rule: MultiplicityRule

    def __post_init__(self):
        object.__setattr__(self, "w", as_fraction(self.w))


@dataclass(frozen=True)
class VertexCountLaw:
    """``|V_n| = K * base**n`` with optional exact low-level overrides."""

    K: int
    base: int
    overrides: tuple[tuple[int, int], ...] = ()

    def __call__(self, n: int) -> int:
        for level, count in self.overrides:
            if level == n:
                return count
        return self.K * self.base**n


@dataclass(frozen=True)
class DecimationSystem:
    R: Polynomial
    m: int
    case: Case
    vertex_count: VertexCountLaw
    set_A: tuple[Seed, ...] = ()
    set_B1: tuple[Seed, ...] = ()
    b0_rule: MultiplicityRule | None = None
    declared_B0: tuple[Fraction, ...] | None = None
    g0: Fraction | None = None
    name: str = field(default="", compare=False)

    @property
    def lambda_(self) -> Fraction:
        return self.R.coefficient(1)

    @property
    def d(self) -> int:
        return self.R.degree

    @property
    def a_d(self) -> Fraction:
        return self.R.leading

    @property
    def j(self) -> int:
        """Coefficient of ``n log(lambda)``: the B0 constant, or 1 in one dimension."""
        if self.case is Case.ONE_DIMENSIONAL:
            return 1
        return self.b0_rule.j if self.b0_rule else 0

    def spectral_dimension(self, precision: int = 128) -> mpmath.mpf:
        with mpmath.workprec(precision):
            return 2 * mpmath.log(self.m) / mpmath.log(to_mp(self.lambda_))

    def B0(self, precision: int = 256) -> tuple[tuple[object, int], ...]:
        """The multiset ``R^{-1}(0) minus {0}`` as (value, multiplicity) pairs."""
        return _b0_roots(self.R, precision)

    def seeds(self) -> Iterable[Seed]:
        yield from self.set_A
        yield from self.set_B1


@lru_cache(maxsize=256)
def _b0_roots(R: Polynomial, precision: int):
    out = []
    removed = False
    for value, mult in preimages(R, 0, precision).roots:
        if is_exact(value) and value == 0 and not removed:
            removed = True
            mult -= 1
        if mult:
            out.append((value, mult))
    return tuple(out)


@dataclass(frozen=True)
class Violation:
    clause: str
    message: str

    def __str__(self) -> str:
        return f"[{self.clause}] {self.message}"


def _close(a, b, precision: int) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    with mpmath.workprec(precision):
        a, b = to_mp(a), to_mp(b)
        return abs(a - b) <= mpmath.ldexp(1, -(precision // 2)) * max(1, abs(a))


def as_system(obj) -> DecimationSystem:
    """Accept a DecimationSystem or anything carrying one as ``.system``."""
    return obj if isinstance(obj, DecimationSystem) else obj.system


def multiplicity_total(system: DecimationSystem, n: int) -> Fraction:
    """Total number of eigenvalues at level ``n`` predicted by the rules alone."""
    system = as_system(system)
    d, m = system.d, system.m
    if system.case is Case.ONE_DIMENSIONAL:
        return Fraction(2 * d**n)
    total = Fraction(1)
    total += sum(s.rule.at(n, m) for s in system.set_A)
    for s in system.set_B1:
        total += sum(d**k * s.rule.at(n - k, m) for k in range(n + 1))
    if system.b0_rule is not None:
        total += (d - 1) * sum(d**k * system.b0_rule.at(n - k, m) for k in range(n + 1))
    return total


def validate(system: DecimationSystem, precision: int = 256) -> list[Violation]:
    """Check every structural invariant; returns the violations (empty = valid)."""
    system = as_system(system)
    out: list[Violation] = []
    R = system.R
    if R.degree < 2:
        out.append(Violation("degree", "R must have degree at least 2"))
        return out
    if R.coefficient(0) != 0:
        out.append(Violation("R(0)", "R(0) must vanish"))
    lam = system.lambda_
    if lam <= 1:
        out.append(Violation("lambda", "R'(0) must exceed 1"))
    if system.m < 2:
        out.append(Violation("m", "m must be at least 2"))
    if out:
        return out

    b0 = system.B0(precision)
    if system.declared_B0 is not None:
        declared = sorted(system.declared_B0)
        computed = [v for v, k in b0 for _ in range(k)]
        same = len(declared) == len(computed) and all(
            _close(a, b, precision) for a, b in zip(declared, sorted(computed, key=to_mp))
        )
        if not same:
            out.append(Violation("B0", "B₀ ≠ R⁻¹(0)∖{0}"))
    with mpmath.workprec(precision):
        vieta = to_mp(nonzero_root_product(R))
        numeric = mpmath.fprod(to_mp(v) ** k for v, k in b0)
        if abs(vieta - numeric) > mpmath.ldexp(1, -(precision // 2)) * max(1, abs(vieta)):
            out.append(Violation("vieta_product", "nonzero roots of R disagree with the Vieta product"))

    b0_values = [v for v, _ in b0]
    for kind, seeds in (("A", system.set_A), ("B1", system.set_B1)):
        expected = SeedKind.A if kind == "A" else SeedKind.B1
        for s in seeds:
            if s.rule.kind is not expected:
                out.append(Violation("rule-kind", f"seed {s.w} in {kind} carries a {s.rule.kind.value} rule"))
            if s.w >= 0:
                out.append(Violation("sign", f"seed {s.w} in {kind} must be negative"))
            # B1 seeds may coincide with B0 values (basilica at p = 1/4); the
            # multiplicities simply add.  A seeds have no preiterates and must not.
            if expected is SeedKind.A and any(_close(s.w, b, precision) for b in b0_values):
                out.append(Violation("disjoint", f"seed {s.w} in A also lies in B0"))
    for a in system.set_A:
        if any(a.w == b.w for b in system.set_B1):
            out.append(Violation("disjoint", f"seed {a.w} lies in both A and B1"))

    d, m = system.d, system.m
    if system.case is Case.GENERIC:
        if d == m:
            out.append(Violation("case", "generic case requires d != m"))
        elif d > m:
            out.append(Violation("case", "log d / log lambda must not exceed d_S / 2 (need d < m)"))
        if system.b0_rule is None:
            out.append(Violation("B0-rule", "generic systems need a B0 multiplicity rule"))
        elif system.b0_rule.kind is not SeedKind.B0:
            out.append(Violation("rule-kind", "B0 rule must have kind B0"))
        elif system.b0_rule.j not in (0, 1, 2):
            out.append(Violation("j", "j must be one of 0, 1, 2"))
    else:
        if d != m:
            out.append(Violation("case", "one-dimensional case requires d == m"))
        if system.g0 is None or system.g0 <= 0:
            out.append(Violation("g0", "one-dimensional case requires a positive g0"))

    rules = [s.rule for s in system.seeds()]
    if system.case is Case.GENERIC and system.b0_rule is not None:
        rules.append(system.b0_rule)
    for rule in rules:
        for n in range(VALIDATION_LEVELS + 1):
            value = rule.at(n, m)
            if value.denominator != 1 or value < 0:
                out.append(Violation("integrality",
                                     f"{rule.kind.value} multiplicity at level {n} is {value}, "
                                     "not a nonnegative integer"))
                break
    if not any(v.clause == "integrality" for v in out):
        for n in range(VALIDATION_LEVELS + 1):
            total = multiplicity_total(system, n)
            if total != system.vertex_count(n):
                out.append(Violation("vertex-count",
                                     f"level {n}: multiplicities sum to {total}, "
                                     f"|V_n| = {system.vertex_count(n)}"))
                break
    return out


def preimage_levels(R: Polynomial, w, depth: int, precision: int = 256, real: bool = True):
    """``levels[k]`` is the multiset ``R^{-k}(w)`` for ``k = 0..depth``."""
    levels = [[(w, 1)]]
    for _ in range(depth):
        nxt = []
        for value, mult in levels[-1]:
            roots = preimages(R, value, precision)
            pairs = roots.real_roots() if real else roots.roots
            nxt.extend((z, k * mult) for z, k in pairs)
        levels.append(nxt)
    return levels


@dataclass(frozen=True)
class SpectrumLevel:
    """Eigenvalues of the level-``n`` Laplacian, ascending, with multiplicities."""

    n: int
    entries: tuple[tuple[object, int], ...]
    precision: int

    @property
    def total(self) -> int:
        return sum(k for _, k in self.entries)

    def eigenvalues(self) -> list:
        """Expanded ascending list as mpmath numbers."""
        with mpmath.workprec(self.precision):
            return [to_mp(v) for v, k in self.entries for _ in range(k)]

    def multiplicity_of(self, x) -> int:
        for v, k in self.entries:
            if _close(v, x, self.precision):
                return k
        return 0

    def within(self, lo, hi) -> bool:
        tol = mpmath.ldexp(1, -(self.precision // 2))
        return all(to_mp(lo) - tol <= to_mp(v) <= to_mp(hi) + tol for v, _ in self.entries)


def _merge(entries, precision: int):
    keyed = sorted(entries, key=lambda e: to_mp(e[0]))
    merged: list[list] = []
    for value, mult in keyed:
        if merged and _close(merged[-1][0], value, precision):
            if is_exact(value) and not is_exact(merged[-1][0]):
                merged[-1][0] = value
            merged[-1][1] += mult
        else:
            merged.append([value, mult])
    return tuple((v, k) for v, k in merged)


def _negate(z):
    return -z


def spectrum(system: DecimationSystem, n: int, precision: int = 256) -> SpectrumLevel:
    """Assemble the spectrum of the level-``n`` Laplacian from the seed data.

    Raises
    ------
    MultiplicityMismatch
        If the assembled multiplicities do not add up to ``|V_n|``.
    ComplexSpectrum
        If some required preimage is not real.
    """
    system = as_system(system)
    if n < 0:
        raise ValueError("level must be nonnegative")
    R, m = system.R, system.m
    entries: list[tuple[object, int]] = []
    with mpmath.workprec(precision):
        if system.case is Case.ONE_DIMENSIONAL:
            for target in (Fraction(0), -system.g0):
                for z, k in preimage_levels(R, target, n, precision)[n]:
                    entries.append((_negate(z), k))
        else:
            entries.append((Fraction(0), 1))
            for s in system.set_A:
                mult = s.rule.at(n, m)
                if mult:
                    entries.append((-s.w, int(mult)))
            for s in system.set_B1:
                levels = preimage_levels(R, s.w, n, precision)
                for k in range(n + 1):
                    mult = s.rule.at(n - k, m)
                    if mult:
                        entries.extend((_negate(z), int(mult) * r) for z, r in levels[k])
            if system.b0_rule is not None and n >= 1:
                for b, rb in system.B0(precision):
                    levels = preimage_levels(R, b, n - 1, precision)
                    for k in range(n):
                        mult = system.b0_rule.at(n - k, m)
                        if mult:
                            entries.extend((_negate(z), int(mult) * r * rb) for z, r in levels[k])
        merged = _merge(entries, precision)
    level = SpectrumLevel(n, merged, precision)
    expected = system.vertex_count(n)
    if level.total != expected:
        raise MultiplicityMismatch(f"level {n}: assembled {level.total} eigenvalues, |V_n| = {expected}")
    if level.multiplicity_of(0) != 1:
        raise MultiplicityMismatch(f"level {n}: eigenvalue 0 has multiplicity {level.multiplicity_of(0)}")
    return level


def multiplicity(system: DecimationSystem, w, n: int, precision: int = 256) -> int:
    """Multiplicity at level ``n`` of the eigenvalue ``-w``.

    ``w`` may be a seed or any preiterate of one; it is pushed forward under
    ``R`` until it lands on seeds, and each landing at step ``k`` contributes
    ``mult_{n-k}(seed)`` times the root multiplicity of the chain.
    """
    system = as_system(system)
    R, m = system.R, system.m
    if system.case is Case.ONE_DIMENSIONAL:
        return _multiplicity_onedim(system, w, n, precision)
    if is_exact(w) and w == 0:
        return 1
    found = False
    total = Fraction(0)
    z, chain = w, 1
    for k in range(n + 1):
        if _close(z, 0, precision):
            break
        nxt = evaluate(R, z, precision)
        if k == 0:
            for s in system.set_A:
                if _close(z, s.w, precision):
                    total += s.rule.at(n, m)
                    found = True
        for s in system.set_B1:
            if _close(z, s.w, precision):
                total += chain * s.rule.at(n - k, m)
                found = True
        if system.b0_rule is not None and _close(nxt, 0, precision):
            rb = root_multiplicity(R, z, 0, precision)
            total += chain * rb * system.b0_rule.at(n - k, m)
            found = True
        chain *= root_multiplicity(R, z, nxt, precision)
        z = nxt
    if not found:
        raise UnknownEigenvalue(f"{w} is not reachable from the seeds within {n} levels")
    if total.denominator != 1:
        raise MultiplicityMismatch(f"non-integral multiplicity {total}")
    return int(total)


def _multiplicity_onedim(system: DecimationSystem, w, n: int, precision: int) -> int:
    # level-n spectrum is R^{-n}(0) + R^{-n}(-g0) as multisets
    z, chain = w, 1
    for _ in range(n):
        nxt = evaluate(system.R, z, precision)
        chain *= root_multiplicity(system.R, z, nxt, precision)
        z = nxt
    total = 0
    if _close(z, 0, precision):
        total += chain
    if _close(z, -system.g0, precision):
        total += chain
    if not total:
        raise UnknownEigenvalue(f"{w} is not in R^-{n}(0) or R^-{n}(-g0)")
    return total


def decimation_sequence(system: DecimationSystem, w, branch_depth: int, precision: int = 256):
    """Renormalized smallest-magnitude branch ``-lambda^k z_k`` for ``k = 0..depth``.

    Raises ``BranchDivergence`` when the branch does not contract toward 0.
    """
    system = as_system(system)
    if is_exact(w) and w == 0:
        return [mpmath.mpf(0)] * (branch_depth + 1)
    R = system.R
    out = []
    with mpmath.workprec(precision):
        lam = to_mp(system.lambda_)
        z = w
        prev_abs = None
        for k in range(branch_depth + 1):
            if k:
                roots = preimages(R, z, precision).real_roots()
                z = min((v for v, _ in roots), key=lambda v: abs(to_mp(v)))
            zm = to_mp(z)
            if zm == 0:
                raise BranchDivergence("branch collapsed onto the fixed point 0")
            if prev_abs is not None and k > 1 and abs(zm) >= prev_abs:
                raise BranchDivergence(f"branch does not contract at step {k}")
            prev_abs = abs(zm)
            out.append(-(lam**k) * zm)
    return out


def fractal_eigenvalue(system: DecimationSystem, w, branch_depth: int, precision: int = 256):
    """``-lambda^n z_n`` along the contracting branch of ``R^{-n}(w)``."""
    return decimation_sequence(system, w, branch_depth, precision)[-1]


def spectral_dimension_bound_holds(system: DecimationSystem) -> bool:
    """``log d / log lambda <= d_S / 2``, i.e. ``d <= m``."""
    return math.log(system.d) <= math.log(system.m)
