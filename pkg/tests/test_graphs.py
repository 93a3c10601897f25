import itertools
from fractions import Fraction

import mpmath
import pytest

from fracdet import catalog
from fracdet.decimation import spectrum
from fracdet.errors import ParseError, SingularBeyondKernel
from fracdet.graphs import (
    FractalGraph,
    LaplacianKind,
    bareiss_determinant,
    build_cycle_double_interval,
    build_double_sg,
    charpoly_exact,
    cycle_graph,
    export_edge_list,
    laplacian_matrix,
    oracle_logdet,
    oracle_spectrum,
    parse_edge_list,
    spanning_tree_count,
)

F = Fraction
COMB = LaplacianKind.COMBINATORIAL
K3 = FractalGraph(3, ((0, 1, F(1)), (0, 2, F(1)), (1, 2, F(1))))


def test_cycle_builders():
    g0 = build_cycle_double_interval(0)
    assert g0.n_vertices == 2 and len(g0.edges) == 2
    assert build_cycle_double_interval(1).n_vertices == 4
    g3 = build_cycle_double_interval(3)
    assert g3.n_vertices == 16 and g3.regular_degree() == 2 and g3.is_connected()
    assert g3.boundary == (0, 8)


def test_double_sg_builder():
    g = build_double_sg(3, 0)
    assert (g.n_vertices, len(g.edges), g.regular_degree()) == (3, 6, 4)
    assert build_double_sg(3, 1).n_vertices == 9
    assert build_double_sg(4, 1).n_vertices == 16
    for N, n in [(3, 2), (3, 3), (4, 2), (5, 1)]:
        g = build_double_sg(N, n)
        assert g.n_vertices == N ** (n + 1)
        assert g.regular_degree() == 2 * (N - 1)
        assert g.is_connected() and g.has_unit_weights
        assert g.boundary == tuple(range(N))


def test_double_sg_is_deterministic():
    assert build_double_sg(3, 2) == build_double_sg(3, 2)
    assert export_edge_list(build_double_sg(4, 2)) == export_edge_list(build_double_sg(4, 2))


def test_laplacian_examples():
    L = laplacian_matrix(build_cycle_double_interval(0))
    assert L == [[1, -1], [-1, 1]]
    for g in (build_double_sg(3, 1), cycle_graph(7)):
        for kind in LaplacianKind:
            assert all(sum(row) == 0 for row in laplacian_matrix(g, kind))


def test_charpoly_matches_sympy():
    import sympy
    g = build_double_sg(3, 1)
    L = laplacian_matrix(g)
    z = sympy.Symbol("z")
    M = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in L])
    ref = sympy.Poly(M.charpoly(z).as_expr(), z).all_coeffs()[::-1]
    assert [F(int(c.p), int(c.q)) for c in ref] == charpoly_exact(L)


def test_oracle_spectrum_examples():
    assert [round(x, 12) for x in oracle_spectrum(cycle_graph(4))] == [0, 1, 1, 2]
    assert [round(x, 12) for x in oracle_spectrum(build_cycle_double_interval(0))] == [0, 2]
    assert [round(x, 12) for x in oracle_spectrum(K3, COMB)] == [0, 3, 3]
    with mpmath.workprec(128):
        hi = oracle_spectrum(cycle_graph(4), precision=128)
        assert abs(hi[3] - 2) < mpmath.mpf(10) ** -30


def test_oracle_spectrum_matches_decimation_sg3_n1():
    numeric = oracle_spectrum(build_double_sg(3, 1))
    exact = [float(x) for x in spectrum(catalog.double_sg(3), 1).eigenvalues()]
    assert len(numeric) == 9
    assert max(abs(a - b) for a, b in zip(numeric, exact)) < 1e-9


def test_oracle_logdet_examples():
    assert oracle_logdet(cycle_graph(4)).product == 2
    assert oracle_logdet(cycle_graph(16)).product == F(16**2, 2**15)
    assert oracle_logdet(K3, COMB).product == 9
    with mpmath.workprec(256):
        assert abs(oracle_logdet(cycle_graph(4)).log_value - mpmath.log(2)) < mpmath.mpf(10) ** -70


@pytest.mark.parametrize("N", range(3, 12))
def test_cycle_product_formula(N):
    assert oracle_logdet(cycle_graph(N)).product == F(N * N, 2 ** (N - 1))


def test_disconnected_raises():
    g = FractalGraph(4, ((0, 1, F(1)), (2, 3, F(1))))
    with pytest.raises(SingularBeyondKernel):
        oracle_logdet(g, COMB)


def test_spanning_trees():
    assert spanning_tree_count(K3) == 3
    assert spanning_tree_count(cycle_graph(16)) == 16
    k4 = FractalGraph(4, tuple((a, b, F(1)) for a, b in itertools.combinations(range(4), 2)))
    assert spanning_tree_count(k4) == 16


@pytest.mark.parametrize("g", [K3, cycle_graph(9), build_double_sg(3, 1), build_double_sg(4, 1),
                               build_cycle_double_interval(0)], ids=lambda g: f"V{g.n_vertices}")
def test_matrix_tree_and_probabilistic_bridge(g):
    tau = spanning_tree_count(g)
    assert oracle_logdet(g, COMB).product == g.n_vertices * tau
    deg = g.degrees()
    prod_deg = 1
    for x in deg:
        prod_deg *= x
    assert oracle_logdet(g).product == tau * sum(deg) / prod_deg


def test_regular_rescaling_between_kinds():
    for N, n in [(3, 1), (3, 2), (4, 1)]:
        g = build_double_sg(N, n)
        k = 2 * (N - 1)
        ratio = oracle_logdet(g, COMB).product / oracle_logdet(g).product
        assert ratio == k ** (g.n_vertices - 1)


def test_bareiss():
    assert bareiss_determinant([[2, 1], [1, 3]]) == 5
    assert bareiss_determinant([[0, 1], [1, 0]]) == -1
    assert bareiss_determinant([[1, 2], [2, 4]]) == 0
    assert bareiss_determinant([]) == 1


def test_edge_list_round_trip():
    g = build_double_sg(3, 1)
    text = export_edge_list(g, COMB)
    assert text.startswith("# n=1 vertices=9 kind=combinatorial\n")
    back, kind = parse_edge_list(text)
    assert kind is COMB and back.n_vertices == 9 and back.edges == g.edges
    with pytest.raises(ParseError):
        parse_edge_list("0 1 1\n")
    with pytest.raises(ParseError):
        parse_edge_list("# n=0 vertices=2 kind=probabilistic\n0 1\n")
