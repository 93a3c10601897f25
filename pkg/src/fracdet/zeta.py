"""Polynomial and spectral zeta functions as renormalized preimage sums.

Partial sums are only evaluated where the series converge.  Values at
``s = 0`` come from the closed-form special values, never from continuation.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import mpmath

from .decimation import Case, as_system, preimage_levels, spectrum
from .errors import GeometricPole, OutOfConvergenceRegion
from .logs import LogCombination, log_of
from .poly import Polynomial, is_exact, to_mp

SCHEMA_VERSION = 1
DIGITS = 30


@dataclass(frozen=True)
class ZetaValue:
    s: mpmath.mpc
    value: mpmath.mpc
    n: int
    truncation_error: mpmath.mpf
    label: str = ""

    @property
    def real(self) -> mpmath.mpf:
        return self.value.real

    @property
    def imag(self) -> mpmath.mpf:
        return self.value.imag


@lru_cache(maxsize=512)
def _tree(R: Polynomial, w, depth: int, precision: int):
    return tuple(tuple(level) for level in preimage_levels(R, w, depth, precision))


def _level_sum(level, lam, k: int, s) -> mpmath.mpc:
    scale = lam**k
    total = mpmath.mpc(0)
    for z, mult in level:
        if is_exact(z) and z == 0:
            continue
        x = -to_mp(z) * scale
        if x <= 0:
            raise AssertionError(f"non-positive renormalized eigenvalue {x}")
        total += mult * mpmath.power(x, -s)
    return total


def _as_s(s) -> mpmath.mpc:
    if isinstance(s, Fraction):
        return mpmath.mpc(mpmath.mpf(s.numerator) / s.denominator)
    if isinstance(s, str):
        return mpmath.mpc(mpmath.mpmathify(s.replace("i", "j")))
    return mpmath.mpc(s)


def growth_ratio(system, s) -> mpmath.mpf:
    """Heuristic per-level contraction of partial-sum increments.

    New preimages contribute about ``d lambda^-Re(s)`` of the previous
    increment, and the renormalized branches themselves converge at rate
    ``1/lambda``; the slower of the two dominates.
    """
    system = as_system(system)
    lam = to_mp(system.lambda_)
    return max(system.d * lam ** (-_as_s(s).real), 1 / lam)


def _estimate(increment, ratio) -> mpmath.mpf:
    if ratio >= 1:
        return mpmath.inf
    return abs(increment) * ratio / (1 - ratio)


def zeta_phi_partials(system, w, s, n: int, precision: int = 256) -> list:
    """Partial sums of the polynomial zeta function for every level ``0..n``."""
    system = as_system(system)
    with mpmath.workprec(precision):
        s = _as_s(s)
        lam = to_mp(system.lambda_)
        abscissa = mpmath.log(system.d) / mpmath.log(lam)
        if s.real <= abscissa:
            raise OutOfConvergenceRegion(
                f"Re(s) = {mpmath.nstr(s.real, 8)} must exceed log d / log lambda = "
                f"{mpmath.nstr(abscissa, 8)}")
        levels = _tree(system.R, w, n, precision)
        return [_level_sum(levels[k], lam, k, s) for k in range(n + 1)]


def zeta_phi_partial(system, w, s, n: int, precision: int = 256) -> ZetaValue:
    """``sum_{z in R^-n(w), z != 0} (lambda^n (-z))^-s`` with a truncation estimate."""
    sums = zeta_phi_partials(system, w, s, n, precision)
    with mpmath.workprec(precision):
        s = _as_s(s)
        if n == 0:
            err = mpmath.inf
        else:
            err = _estimate(sums[-1] - sums[-2], growth_ratio(system, s))
        return ZetaValue(s, sums[-1], n, err, label=f"zeta_phi[{w}]")


def preiterate_relation_residual(system, w, s, n: int, precision: int = 256) -> mpmath.mpf:
    """``|sum_{v in R^-1(w)} zeta_n(v) - lambda^s zeta_{n+1}(w)|`` at matched truncation.

    The level-``n`` preimages of each ``v`` are exactly the level-``n+1``
    preimages of ``w``, so this vanishes up to rounding.
    """
    system = as_system(system)
    with mpmath.workprec(precision):
        s_mp = _as_s(s)
        lam = to_mp(system.lambda_)
        left = mpmath.mpc(0)
        for v, mult in _tree(system.R, w, 1, precision)[1]:
            left += mult * zeta_phi_partial(system, v, s, n, precision).value
        right = lam**s_mp * zeta_phi_partial(system, w, s, n + 1, precision).value
        return abs(left - right)


def b0_relation_residual(system, s, n: int, precision: int = 256) -> mpmath.mpf:
    """``|sum_{v in B0} zeta_n(v) - (lambda^s - 1) zeta_{n+1}(0)|``.

    Unlike :func:`preiterate_relation_residual` this differs from zero by
    ``zeta_{n+1}(0) - zeta_n(0)`` and so only decays with the truncation level.
    """
    system = as_system(system)
    with mpmath.workprec(precision):
        s_mp = _as_s(s)
        lam = to_mp(system.lambda_)
        left = mpmath.mpc(0)
        for v, mult in system.B0(precision):
            left += mult * zeta_phi_partial(system, v, s, n, precision).value
        right = (lam**s_mp - 1) * zeta_phi_partial(system, 0, s, n + 1, precision).value
        return abs(left - right)


# --- spectral zeta assembly ----------------------------------------------------

def assembly_prefactors(system, x):
    """Prefactors of each polynomial zeta function in the spectral zeta function at ``lambda^s = x``.

    Returns ``([(w, G_w(x)) for w in B1], G_0(x))``.  ``x`` may be an exact
    rational, in which case the prefactors are exact.
    """
    system = as_system(system)
    m = system.m
    exact = isinstance(x, (int, Fraction))
    num = Fraction if exact else to_mp
    if exact:
        x = Fraction(x)
    if x == m:
        raise GeometricPole("lambda^s = m is a pole of the geometric prefactors")
    out = []
    t = m / x
    for seed in system.set_B1:
        r = seed.rule
        out.append((seed.w, num(r.c0) + num(r.c1) / x + num(r.c) * t**2 / (1 - t)))
    g0 = num(0)
    if system.b0_rule is not None:
        g0 = num(system.b0_rule.c) * m * (x - 1) / (x - m) + system.b0_rule.j
    return out, g0


def spectral_zeta_partial(system, s, n: int, precision: int = 256) -> ZetaValue:
    """Spectral zeta function of the limit Laplacian, truncated at level ``n``."""
    system = as_system(system)
    with mpmath.workprec(precision):
        s_mp = _as_s(s)
        lam = to_mp(system.lambda_)
        bound = mpmath.log(system.m) / mpmath.log(lam)
        if s_mp.real <= bound:
            raise OutOfConvergenceRegion(
                f"Re(s) = {mpmath.nstr(s_mp.real, 8)} must exceed d_S/2 = {mpmath.nstr(bound, 8)}")
        if system.case is Case.ONE_DIMENSIONAL:
            parts = [(1, 0), (1, -system.g0)]
        else:
            x = lam**s_mp
            if abs(x - system.m) < mpmath.ldexp(1, -(precision // 2)):
                raise GeometricPole("lambda^s = m")
            prefactors, g0 = assembly_prefactors(system, x)
            parts = [(g, w) for w, g in prefactors] + [(g0, 0)]
        value = mpmath.mpc(0)
        err = mpmath.mpf(0)
        for g, w in parts:
            z = zeta_phi_partial(system, w, s, n, precision)
            value += g * z.value
            err += abs(g) * z.truncation_error
        return ZetaValue(s_mp, value, n, err, label="zeta_Delta")


def spectral_zeta_direct(system, s, n: int, precision: int = 256) -> mpmath.mpc:
    """``sum (lambda^n mu)^-s`` over nonzero eigenvalues ``mu`` of the level-``n`` spectrum."""
    system = as_system(system)
    level = spectrum(system, n, precision)
    with mpmath.workprec(precision):
        s_mp = _as_s(s)
        scale = to_mp(system.lambda_) ** n
        total = mpmath.mpc(0)
        for mu, mult in level.entries:
            if is_exact(mu) and mu == 0:
                continue
            total += mult * mpmath.power(scale * to_mp(mu), -s_mp)
        return total


# --- special values ------------------------------------------------------------

@dataclass(frozen=True)
class SpecialValue:
    w: Fraction
    zeta_at_0: int
    derivative_at_0: LogCombination


def special_values(system) -> list[SpecialValue]:
    """Closed-form ``(zeta(0), zeta'(0))`` of every polynomial zeta function in the assembly."""
    system = as_system(system)
    log_ad = log_of(abs(system.a_d)) / (system.d - 1)
    seeds = [Fraction(0)]
    if system.case is Case.ONE_DIMENSIONAL:
        seeds.append(-system.g0)
    else:
        seeds.extend(dict.fromkeys(s.w for s in system.set_B1))
    out = []
    for w in seeds:
        if w == 0:
            out.append(SpecialValue(w, -1, -log_ad))
        else:
            out.append(SpecialValue(w, 0, -log_ad - log_of(-w)))
    return out


def regularized_logdet_from_zeta(system) -> LogCombination:
    """``-zeta_Delta'(0)`` from the special values and the prefactor derivatives at ``s = 0``."""
    system = as_system(system)
    table = {sv.w: sv for sv in special_values(system)}
    if system.case is Case.ONE_DIMENSIONAL:
        return -(table[Fraction(0)].derivative_at_0 + table[-system.g0].derivative_at_0)
    m = system.m
    out = LogCombination.zero()
    prefactors, g0_at_0 = assembly_prefactors(system, Fraction(1))
    for w, g in prefactors:
        # zeta_w(0) = 0, so only G_w(0) zeta_w'(0) survives
        out -= table[w].derivative_at_0 * g
    if system.b0_rule is not None:
        # d/ds G_0 at s = 0 is -c_0 m log(lambda)/(m - 1), multiplied by zeta_0(0) = -1
        g0_prime = log_of(system.lambda_, -system.b0_rule.c * Fraction(m, m - 1))
        out -= g0_prime * table[Fraction(0)].zeta_at_0
    out -= table[Fraction(0)].derivative_at_0 * g0_at_0
    return out


# --- grids ---------------------------------------------------------------------

def zeta_grid(system, s_values: Iterable, n: int, precision: int = 256) -> list[ZetaValue]:
    return [spectral_zeta_partial(system, s, n, precision) for s in s_values]


def _fmt(x) -> str:
    if x == mpmath.inf:
        return "inf"
    if x == 0:
        return "0"
    return mpmath.nstr(x, DIGITS, strip_zeros=False)


def grid_to_csv(values: Iterable[ZetaValue]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["re_s", "im_s", "re_zeta", "im_zeta", "truncation_estimate", "level"])
    for v in values:
        writer.writerow([_fmt(v.s.real), _fmt(v.s.imag), _fmt(v.value.real), _fmt(v.value.imag),
                         _fmt(v.truncation_error), v.n])
    return buf.getvalue()


def grid_to_json(values: Iterable[ZetaValue], family: str = "", parameters: dict | None = None) -> str:
    data = {
        "schema_version": SCHEMA_VERSION,
        "family": family,
        "parameters": {k: str(x) for k, x in (parameters or {}).items()},
        "values": [
            {"re_s": _fmt(v.s.real), "im_s": _fmt(v.s.imag), "re_zeta": _fmt(v.value.real),
             "im_zeta": _fmt(v.value.imag), "truncation_estimate": _fmt(v.truncation_error),
             "level": v.n}
            for v in values
        ],
    }
    return json.dumps(data, indent=2) + "\n"


def special_values_to_csv(values: Iterable[SpecialValue], precision: int = 128) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["w", "zeta_at_0", "derivative_at_0", "derivative_exact"])
    for sv in values:
        writer.writerow([str(sv.w), sv.zeta_at_0, _fmt(sv.derivative_at_0.evaluate(precision)),
                         str(sv.derivative_at_0)])
    return buf.getvalue()
