import dataclasses
from fractions import Fraction

import mpmath
import pytest

from fracdet import catalog
from fracdet.decimation import (
    MultiplicityRule,
    SeedKind,
    decimation_sequence,
    fractal_eigenvalue,
    multiplicity,
    multiplicity_total,
    preimage_levels,
    spectral_dimension_bound_holds,
    spectrum,
    validate,
)
from fracdet.errors import ComplexSpectrum, MultiplicityMismatch, UnknownEigenvalue

F = Fraction


def real_grid():
    fams = [catalog.circle()] + [catalog.double_sg(N) for N in (3, 4, 5, 6)]
    for p in ("1/4", "1/3", "1/2", "2/3"):
        fams.append(catalog.double_pq(F(p)))
        if F(p) <= F(1, 2):
            fams.append(catalog.basilica(F(p)))
    return fams


def test_multiplicity_rule_levels():
    a = MultiplicityRule(SeedKind.A, F(1), c0=2, c1=3)
    assert [a.at(n, 3) for n in range(4)] == [2, 3, 9, 27]
    b0 = MultiplicityRule(SeedKind.B0, F(1, 3), j=1)
    assert [b0.at(n, 3) for n in range(3)] == [0, 2, 4]


def test_validate_examples():
    assert validate(catalog.circle().system) == []
    assert validate(catalog.basilica(F(1, 2)).system) == []
    sg = catalog.double_sg(3).system
    bad = dataclasses.replace(sg, declared_B0=(F(-1),))
    assert any(v.message == "B₀ ≠ R⁻¹(0)∖{0}" for v in validate(bad))


def test_validate_reports_vertex_count_and_integrality():
    sg = catalog.double_sg(3).system
    seed = sg.set_B1[0]
    wrong = dataclasses.replace(seed, rule=dataclasses.replace(seed.rule, c1=2))
    bad = dataclasses.replace(sg, set_B1=(wrong,) + sg.set_B1[1:])
    assert [v.clause for v in validate(bad)] == ["vertex-count"]
    frac = dataclasses.replace(seed, rule=dataclasses.replace(seed.rule, c=F(1, 7)))
    bad = dataclasses.replace(sg, set_B1=(frac,) + sg.set_B1[1:])
    assert any(v.clause == "integrality" for v in validate(bad))


def test_validate_case_flags():
    circ = catalog.circle().system
    from fracdet.decimation import Case
    assert any(v.clause == "case" for v in validate(dataclasses.replace(circ, case=Case.GENERIC)))
    assert any(v.clause == "g0" for v in validate(dataclasses.replace(circ, g0=None)))


def test_spectral_dimension():
    circ = catalog.circle().system
    assert abs(circ.spectral_dimension() - 1) < 1e-30
    assert spectral_dimension_bound_holds(circ)
    assert spectral_dimension_bound_holds(catalog.double_sg(3).system)


def test_multiplicity_examples():
    sg = catalog.double_sg(3)
    assert multiplicity(sg, F(-3, 2), 2) == 9
    assert multiplicity(sg, F(-5, 4), 2) == 4
    bas = catalog.basilica(F(1, 3))
    assert multiplicity(bas, -(2 * F(1, 3) + 1), 5) == 1
    assert multiplicity(bas, -2 * F(1, 3), 1) == 2
    with pytest.raises(UnknownEigenvalue):
        multiplicity(sg, F(-7, 3), 2)


def test_multiplicity_matches_spectrum_on_preiterates():
    for fam in (catalog.double_sg(3), catalog.basilica(F(1, 3)), catalog.circle(), catalog.double_pq(F(1, 3))):
        level = spectrum(fam, 3, 256)
        for value, mult in level.entries:
            with mpmath.workprec(256):
                w = -value
            assert multiplicity(fam, w, 3) == mult, (fam.label, value)


def test_spectrum_examples():
    circ = catalog.circle()
    assert spectrum(circ, 1).entries == ((F(0), 1), (F(1), 2), (F(2), 1))
    assert spectrum(circ, 0).entries == ((F(0), 1), (F(2), 1))
    assert spectrum(catalog.double_sg(3), 1).total == 9
    assert spectrum(catalog.double_sg(3), 0).entries == ((F(0), 1), (F(3, 2), 2))


@pytest.mark.parametrize("fam", real_grid(), ids=lambda f: f.label)
def test_spectrum_invariants(fam):
    for n in range(0, 7):
        level = spectrum(fam, n, 128)
        assert level.total == fam.system.vertex_count(n)
        assert level.multiplicity_of(0) == 1
        assert level.within(0, 2)


def test_complex_spectrum_raises():
    with pytest.raises(ComplexSpectrum):
        spectrum(catalog.basilica(F(2, 3)), 2)


def test_multiplicity_mismatch():
    sg = catalog.double_sg(3).system
    bad = dataclasses.replace(sg, set_A=())
    with pytest.raises(MultiplicityMismatch):
        spectrum(bad, 1)


def test_preiterate_consistency():
    # level-k preiterates number d^k counted with multiplicity
    sg = catalog.double_sg(4).system
    levels = preimage_levels(sg.R, sg.set_B1[0].w, 4, 128)
    assert [sum(k for _, k in lv) for lv in levels] == [1, 2, 4, 8, 16]
    circ = catalog.circle().system
    assert sum(k for _, k in preimage_levels(circ.R, F(-2), 3)[3]) == 8


def test_multiplicity_total_law():
    for fam in real_grid() + [catalog.basilica(F(2, 3))]:
        for n in range(9):
            assert multiplicity_total(fam, n) == fam.system.vertex_count(n)


def test_fractal_eigenvalue_circle():
    circ = catalog.circle()
    with mpmath.workprec(256):
        seq = decimation_sequence(circ, F(-2), 40)
        # 4^n (1 - cos(pi / 2^n)) -> pi^2 / 2
        assert abs(seq[-1] - mpmath.pi**2 / 2) < mpmath.mpf(10) ** -20
        assert abs(seq[-1] - seq[-2]) < mpmath.mpf(10) ** -20
        diffs = [abs(seq[k + 1] - seq[k]) for k in range(1, 15)]
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
        assert fractal_eigenvalue(circ, 0, 5) == 0


def test_fractal_eigenvalue_sg():
    with mpmath.workprec(256):
        seq = decimation_sequence(catalog.double_sg(3), F(-3, 4), 60)
        assert seq[-1] > 0
        assert abs(seq[-1] - seq[-2]) < mpmath.mpf(10) ** -20
