import dataclasses
import json
from fractions import Fraction

import mpmath
import pytest

from fracdet import catalog
from fracdet.decimation import SeedKind, spectrum
from fracdet.determinants import (
    asymptotic_complexity,
    complexity_constant,
    direct_sums,
    geometric_sums,
    logdet_discrete_closed,
    logdet_discrete_onedim,
    logdet_from_spectrum,
    pole_cancellation_residual,
    prediction,
    regularized_logdet,
    verify_identity,
)
from fracdet.errors import DegenerateCase, OracleInfeasible
from fracdet.graphs import LaplacianKind
from fracdet.logs import log_of

F = Fraction
GRID_P = [F(1, 4), F(1, 3), F(1, 2), F(2, 3)]


def generic_grid():
    return [catalog.double_sg(N) for N in (3, 4, 5, 6)] + [catalog.basilica(p) for p in GRID_P]


def all_grid():
    return [catalog.circle()] + generic_grid() + [catalog.double_pq(p) for p in GRID_P]


def test_geometric_sums_examples():
    bas = catalog.basilica(F(1, 2))
    seed = bas.system.set_B1[1]
    assert geometric_sums(bas, seed, 2).sum_mult == 8
    sg = catalog.double_sg(3)
    assert geometric_sums(sg, F(-5, 4), 1).sum_mult == 2
    zero = dataclasses.replace(seed, rule=dataclasses.replace(seed.rule, c=F(0), c1=0))
    gs = geometric_sums(bas, zero, 5)
    assert gs.sum_mult == 0 and gs.sum_mult_weighted == 0


@pytest.mark.parametrize("fam", generic_grid(), ids=lambda f: f.label)
def test_geometric_sums_match_direct(fam):
    seeds = list(fam.system.set_B1)
    for n in range(9):
        for seed in seeds:
            assert geometric_sums(fam, seed, n) == direct_sums(fam, seed, n)
        assert geometric_sums(fam, None, n, SeedKind.B0) == direct_sums(fam, None, n, SeedKind.B0)


def test_geometric_sums_degenerate():
    with pytest.raises(DegenerateCase):
        geometric_sums(catalog.circle(), F(-2), 2)
    with pytest.raises(DegenerateCase):
        pole_cancellation_residual(catalog.double_pq(F(1, 3)))


def test_logdet_examples():
    assert logdet_discrete_closed(catalog.circle(), 1) == log_of(2)
    assert logdet_discrete_closed(catalog.circle(), 2) == log_of(F(1, 2))
    assert logdet_discrete_onedim(catalog.circle(), 2) == -log_of(2)
    pq = catalog.double_pq(F(1, 2))
    assert logdet_discrete_onedim(pq, 1) == log_of(F(1, 4), 3) + log_of(9) + log_of(8)
    bas = catalog.basilica(F(1, 2))
    assert logdet_discrete_closed(bas, 1) == -log_of(2, 3) + log_of(4) + log_of(2)


@pytest.mark.parametrize("fam", all_grid(), ids=lambda f: f.label)
def test_constants_match_catalog(fam):
    assert complexity_constant(fam) == fam.closed_forms["c_constant"]
    assert regularized_logdet(fam) == fam.closed_forms["log_det_regularized"]


def test_sg3_constants():
    sg = catalog.double_sg(3)
    assert complexity_constant(sg) == -log_of(2, 2) + log_of(3, F(3, 2)) - log_of(2, 3) + log_of(5, F(1, 2))
    assert regularized_logdet(sg) == log_of(8) + log_of(3, F(1, 2)) - log_of(5, F(1, 2))


@pytest.mark.parametrize("fam", all_grid(), ids=lambda f: f.label)
def test_decomposition_identity_exact(fam):
    for n in range(2, 7):
        diff = logdet_discrete_closed(fam, n) - prediction(fam, n)
        assert diff == log_of(1)
        assert abs(diff.evaluate(256)) <= mpmath.mpf(10) ** -64


@pytest.mark.parametrize("fam", [f for f in all_grid() if not (f.name == "basilica" and f.parameters["p"] > F(1, 2))],
                         ids=lambda f: f.label)
def test_closed_form_matches_spectrum_sum(fam):
    for n in range(0, 5):
        numeric = logdet_from_spectrum(spectrum(fam, n, 256), 256)
        assert abs(numeric - logdet_discrete_closed(fam, n).evaluate(256)) < mpmath.mpf(10) ** -40


def test_onedim_routes_agree():
    for fam in [catalog.circle()] + [catalog.double_pq(p) for p in GRID_P]:
        for n in range(8):
            assert logdet_discrete_closed(fam, n) == logdet_discrete_onedim(fam, n)
    with pytest.raises(DegenerateCase):
        logdet_discrete_onedim(catalog.double_sg(3), 2)


@pytest.mark.parametrize("fam", generic_grid(), ids=lambda f: f.label)
def test_pole_residual_zero(fam):
    assert pole_cancellation_residual(fam) == 0


def test_pole_residual_mutation_j():
    sg = catalog.double_sg(3).system
    mutated = dataclasses.replace(sg, b0_rule=dataclasses.replace(sg.b0_rule, j=2))
    assert pole_cancellation_residual(mutated) == 1


def test_verify_identity_circle():
    report = verify_identity(catalog.circle(), range(1, 7), with_oracle=True)
    assert report.passed and report.has_oracle
    for row in report.rows:
        assert row.oracle_exact_match
        assert row.residual_closed_vs_prediction < mpmath.mpf(10) ** -30
    assert [r.gated for r in report.rows] == [False] + [True] * 5


def test_verify_identity_sg_intercept():
    report = verify_identity(catalog.double_sg(3), range(1, 5), with_oracle=True)
    assert report.passed
    target = (log_of(8) + log_of(3, F(1, 2)) - log_of(5, F(1, 2))).evaluate(256)
    for n, value in report.intercepts():
        assert abs(value - target) < mpmath.mpf(10) ** -20


def test_verify_identity_basilica_analytic():
    report = verify_identity(catalog.basilica(F(1, 3)), range(2, 7), with_oracle=True)
    assert report.passed and not report.has_oracle
    assert all(r.exact_match and r.residual_closed_vs_prediction == 0 for r in report.rows)


def test_verify_identity_combinatorial():
    report = verify_identity(catalog.double_sg(3), range(0, 3), with_oracle=True,
                             kind=LaplacianKind.COMBINATORIAL)
    assert report.passed and all(r.oracle_exact_match for r in report.rows)
    assert report.constants["asymptotic_complexity"] == (
        log_of(2, F(1, 3)) + log_of(3, F(1, 2)) + log_of(5, F(1, 6)))
    with pytest.raises(ValueError):
        verify_identity(catalog.basilica(F(1, 3)), [2], kind=LaplacianKind.COMBINATORIAL)


def test_asymptotic_complexity_tracks_spanning_trees():
    from fracdet.graphs import build_double_sg, spanning_tree_count
    sg = catalog.double_sg(3)
    limit = float(asymptotic_complexity(sg, 4))
    rates = []
    for n in (1, 2, 3):
        g = build_double_sg(3, n)
        rates.append(float(log_of(spanning_tree_count(g))) / g.n_vertices)
    errs = [abs(r - limit) for r in rates]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.05


def test_oracle_budget():
    with pytest.raises(OracleInfeasible):
        verify_identity(catalog.double_sg(3), range(1, 7), with_oracle=True, max_oracle_vertices=500)


def test_report_serialization_deterministic():
    a = verify_identity(catalog.double_sg(3), range(1, 4), with_oracle=True)
    b = verify_identity(catalog.double_sg(3), range(1, 4), with_oracle=True)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    data = json.loads(a.to_json())
    assert data["schema_version"] == 1
    assert data["constants"]["log_det"]["terms"] == {"2": "3", "3": "1/2", "5": "-1/2"}
    header = a.to_csv().splitlines()[0].split(",")
    assert header[0] == "n" and "logdet_oracle" in header
    value = a.to_csv().splitlines()[2].split(",")[3]
    assert len(value.lstrip("-").replace(".", "")) >= 30
