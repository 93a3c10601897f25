from fractions import Fraction

import mpmath
import pytest

from fracdet import catalog
from fracdet.determinants import pole_cancellation_residual, regularized_logdet
from fracdet.errors import GeometricPole, OutOfConvergenceRegion
from fracdet.logs import log_of
from fracdet.zeta import (
    assembly_prefactors,
    b0_relation_residual,
    grid_to_csv,
    grid_to_json,
    preiterate_relation_residual,
    regularized_logdet_from_zeta,
    special_values,
    spectral_zeta_direct,
    spectral_zeta_partial,
    zeta_grid,
    zeta_phi_partial,
    zeta_phi_partials,
)

F = Fraction
GRID_P = [F(1, 4), F(1, 3), F(1, 2), F(2, 3)]


def real_families():
    fams = [catalog.circle()] + [catalog.double_sg(N) for N in (3, 4, 5, 6)]
    fams += [catalog.double_pq(p) for p in GRID_P]
    fams += [catalog.basilica(p) for p in GRID_P if p <= F(1, 2)]
    return fams


def test_empty_sum_at_level_zero():
    for fam in (catalog.circle(), catalog.double_sg(3)):
        assert zeta_phi_partial(fam, 0, 2, 0).value == 0


def test_convergence_region():
    with pytest.raises(OutOfConvergenceRegion):
        zeta_phi_partial(catalog.circle(), 0, F(1, 2), 3)
    with pytest.raises(OutOfConvergenceRegion):
        spectral_zeta_partial(catalog.double_sg(3), mpmath.mpf("0.6"), 3)


def test_circle_zeta_converges_to_exact_value():
    # limit eigenvalues are pi^2 k^2 / 2, each twice, so zeta(2) = 4/45
    circ = catalog.circle()
    with mpmath.workprec(256):
        exact = mpmath.mpf(4) / 45
        prev = None
        for n in range(2, 9):
            z = spectral_zeta_partial(circ, 2, n)
            err = abs(z.value - exact)
            assert err <= 1.5 * z.truncation_error
            if prev is not None:
                assert z.truncation_error < prev
            prev = z.truncation_error
        assert err < mpmath.mpf(10) ** -5


def test_increment_ratio_circle():
    with mpmath.workprec(256):
        sums = zeta_phi_partials(catalog.circle(), 0, 2, 9)
        diffs = [abs(b - a) for a, b in zip(sums[1:], sums[2:])]
        ratios = [b / a for a, b in zip(diffs, diffs[1:])]
        assert abs(ratios[-1] - mpmath.mpf(1) / 4) < 1e-3


def test_increment_ratio_sg_is_inverse_lambda():
    with mpmath.workprec(256):
        sums = zeta_phi_partials(catalog.double_sg(3), F(-3, 4), 3, 8)
        diffs = [abs(b - a) for a, b in zip(sums, sums[1:])]
        assert all(b < a for a, b in zip(diffs, diffs[1:]))
        assert abs(diffs[-1] / diffs[-2] - mpmath.mpf(1) / 5) < 1e-2


def test_spectral_zeta_matches_direct_sum():
    circ = catalog.circle()
    with mpmath.workprec(256):
        for n in (4, 7):
            assert abs(spectral_zeta_partial(circ, 2, n).value - spectral_zeta_direct(circ, 2, n)) < mpmath.mpf(10) ** -60
    # generic case: generation g enters the level-n spectrum with depth n - g
    # only, so the two truncations differ by a vanishing amount
    sg = catalog.double_sg(3)
    with mpmath.workprec(256):
        diffs = [abs(spectral_zeta_partial(sg, 3, n).value - spectral_zeta_direct(sg, 3, n))
                 for n in range(3, 9)]
        assert all(b < a / 3 for a, b in zip(diffs, diffs[1:]))
        assert diffs[-1] < mpmath.mpf(10) ** -5


@pytest.mark.parametrize("fam", real_families(), ids=lambda f: f.label)
def test_preiterate_relation_matched_truncation(fam):
    seeds = [F(0)] + [v for v, _ in fam.system.B0()] + [s.w for s in fam.system.set_B1]
    if fam.system.g0 is not None:
        seeds.append(-fam.system.g0)
    for s in (2, 3, mpmath.mpc(2, 1)):
        for w in dict.fromkeys(seeds):
            assert preiterate_relation_residual(fam, w, s, 3, 256) <= mpmath.mpf(2) ** -128


def test_preiterate_relation_degenerate_preimage():
    assert preiterate_relation_residual(catalog.circle(), F(-2), 2, 4, 128) < mpmath.mpf(10) ** -30


def test_b0_relation_decays():
    circ = catalog.circle()
    r = [b0_relation_residual(circ, 2, n) for n in (2, 4, 6, 8)]
    assert all(b < a for a, b in zip(r, r[1:]))


def test_basilica_display_assembly():
    for p in (F(1, 2), F(1, 3)):
        bas = catalog.basilica(p)
        q = 1 - p
        with mpmath.workprec(256):
            lam = mpmath.mpf(bas.system.lambda_.numerator) / bas.system.lambda_.denominator
            s = mpmath.mpf(3)
            alt = (zeta_phi_partial(bas, 0, s, 5).value + zeta_phi_partial(bas, -2 * q, s, 5).value
                   + 2 / (lam**s - 3) * zeta_phi_partial(bas, -2 * p, s, 5).value)
            assert abs(spectral_zeta_partial(bas, s, 5).value - alt) < mpmath.mpf(10) ** -60


def test_real_s_gives_real_value():
    z = spectral_zeta_partial(catalog.double_sg(3), 3, 5)
    assert z.value.imag == 0 and z.value.real > 0


def test_prefactors_at_pole_identity():
    for fam in [catalog.double_sg(N) for N in (3, 4, 5, 6)] + [catalog.basilica(p) for p in GRID_P]:
        pref, g0 = assembly_prefactors(fam, fam.system.d)
        assert sum(g for _, g in pref) + g0 == pole_cancellation_residual(fam) == 0
    with pytest.raises(GeometricPole):
        assembly_prefactors(catalog.double_sg(3), 3)


def test_special_values():
    circ = {sv.w: sv for sv in special_values(catalog.circle())}
    assert (circ[0].zeta_at_0, circ[0].derivative_at_0) == (-1, -log_of(2))
    assert (circ[-2].zeta_at_0, circ[-2].derivative_at_0) == (0, -log_of(2, 2))
    p = F(1, 3)
    bas = {sv.w: sv for sv in special_values(catalog.basilica(p))}
    assert bas[-2 * (1 - p)].derivative_at_0 == log_of(p) - log_of(2 * (1 - p))


@pytest.mark.parametrize("fam", real_families() + [catalog.basilica(F(2, 3))], ids=lambda f: f.label)
def test_regularized_logdet_from_special_values(fam):
    assert regularized_logdet_from_zeta(fam) == regularized_logdet(fam)


def test_grid_dumps():
    vals = zeta_grid(catalog.circle(), [2, 3, mpmath.mpc(2, 1)], 4)
    csv_text = grid_to_csv(vals)
    assert csv_text.splitlines()[0] == "re_s,im_s,re_zeta,im_zeta,truncation_estimate,level"
    assert len(csv_text.splitlines()) == 4
    assert '"schema_version": 1' in grid_to_json(vals, "circle")
