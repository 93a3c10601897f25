"""Explicit approximation graphs and decimation-free Laplacian oracles.

Nothing here knows about spectral decimation: determinants come from the
exact characteristic polynomial of the Laplacian, spanning trees from a
fraction-free cofactor determinant, and spectra from a symmetric eigensolver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import NonConvergence, ParseError, SingularBeyondKernel
from .logs import LogCombination


class LaplacianKind(str, Enum):
    PROBABILISTIC = "probabilistic"
    COMBINATORIAL = "combinatorial"


@dataclass(frozen=True)
class FractalGraph:
    """Weighted multigraph; ``edges`` lists ``(u, v, weight)`` with ``u != v``."""

    n_vertices: int
    edges: tuple[tuple[int, int, Fraction], ...]
    boundary: tuple[int, ...] = ()
    level: int = 0
    labels: tuple | None = field(default=None, compare=False, repr=False)

    def degrees(self) -> list[Fraction]:
        deg = [Fraction(0)] * self.n_vertices
        for u, v, w in self.edges:
            deg[u] += w
            deg[v] += w
        return deg

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            for y in adj[stack.pop()]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.n_vertices

    def regular_degree(self) -> Fraction | None:
        deg = set(self.degrees())
        return deg.pop() if len(deg) == 1 else None

    @property
    def has_unit_weights(self) -> bool:
        return all(w == 1 for _, _, w in self.edges)


def cycle_graph(N: int, level: int = 0) -> FractalGraph:
    """Cycle on ``N`` vertices; ``N = 2`` gives two parallel edges."""
    if N < 2:
        raise ValueError("a cycle needs at least 2 vertices")
    one = Fraction(1)
    if N == 2:
        edges = ((0, 1, one), (0, 1, one))
    else:
        edges = tuple((i, (i + 1) % N, one) for i in range(N))
    return FractalGraph(N, edges, boundary=(0, N // 2), level=level)


def build_cycle_double_interval(n: int) -> FractalGraph:
    """Two copies of the level-``n`` interval glued at both ends."""
    if n < 0:
        raise ValueError("level must be nonnegative")
    return cycle_graph(2 ** (n + 1), level=n)


def _sg_point(word: tuple[int, ...], corner: int):
    """Canonical address of the point ``F_word(p_corner)`` of SG_N.

    ``u i j j j...`` and ``u j i i i...`` name the same junction point, and a
    trailing run of the corner letter can be dropped.
    """
    while word and word[-1] == corner:
        word = word[:-1]
    if not word:
        return ((), corner, corner)
    i = word[-1]
    return (word[:-1], min(i, corner), max(i, corner))


def sg_cells(N: int, n: int):
    """Vertices and cells of the level-``n`` SG_N graph.

    Returns ``(points, cells)`` where ``points`` is the sorted list of
    canonical addresses (corners first) and each cell is the tuple of its
    ``N`` corner addresses.
    """
    cells = []
    points = set()
    for word in itertools.product(range(N), repeat=n):
        corners = tuple(_sg_point(word, j) for j in range(N))
        cells.append(corners)
        points.update(corners)
    corners0 = [((), j, j) for j in range(N)]
    rest = sorted(p for p in points if p[0] != () or p[1] != p[2])
    return corners0 + rest, cells


def build_double_sg(N: int, n: int) -> FractalGraph:
    """Two level-``n`` SG_N graphs glued at their ``N`` corners.

    Each cell carries a copy of ``K_N``.  Vertices are ordered: the glued
    corners, then copy 0 by address, then copy 1 by address, so the vertex
    count is ``N^(n+1)`` and the graph is ``2(N-1)``-regular.
    """
    if N < 3 or n < 0:
        raise ValueError("need N >= 3 and n >= 0")
    points, cells = sg_cells(N, n)
    interior = points[N:]
    index: dict[tuple, int] = {}
    labels = []
    for j in range(N):
        index[(0, points[j])] = index[(1, points[j])] = j
        labels.append(("corner", j))
    for copy in (0, 1):
        for p in interior:
            index[(copy, p)] = len(labels)
            labels.append((copy,) + p)
    one = Fraction(1)
    edges = []
    for copy in (0, 1):
        for cell in cells:
            for a, b in itertools.combinations(cell, 2):
                edges.append((index[(copy, a)], index[(copy, b)], one))
    return FractalGraph(len(labels), tuple(edges), boundary=tuple(range(N)), level=n,
                        labels=tuple(labels))


def laplacian_matrix(g: FractalGraph, kind: LaplacianKind = LaplacianKind.PROBABILISTIC):
    """Exact Laplacian: ``D - W`` or ``D^{-1}(D - W)``, as a list of Fraction rows."""
    V = g.n_vertices
    W = [[Fraction(0)] * V for _ in range(V)]
    for u, v, w in g.edges:
        if u == v:
            raise ValueError("self-loops are not supported")
        W[u][v] += w
        W[v][u] += w
    deg = g.degrees()
    L = [[-W[i][j] for j in range(V)] for i in range(V)]
    for i in range(V):
        L[i][i] += deg[i]
    if LaplacianKind(kind) is LaplacianKind.PROBABILISTIC:
        for i in range(V):
            if deg[i] == 0:
                raise ValueError(f"vertex {i} is isolated")
            inv = 1 / deg[i]
            L[i] = [x * inv for x in L[i]]
    return L


def charpoly_exact(A: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    """Coefficients (ascending) of ``det(zI - A)`` in exact rational arithmetic.

    Similarity reduction to upper Hessenberg form followed by the standard
    three-term recurrence for its leading principal minors.
    """
    n = len(A)
    H = [list(map(Fraction, row)) for row in A]
    for j in range(n - 2):
        pivot_row = next((i for i in range(j + 1, n) if H[i][j] != 0), None)
        if pivot_row is None:
            continue
        if pivot_row != j + 1:
            H[pivot_row], H[j + 1] = H[j + 1], H[pivot_row]
            for row in H:
                row[pivot_row], row[j + 1] = row[j + 1], row[pivot_row]
        pivot = H[j + 1][j]
        for i in range(j + 2, n):
            if H[i][j] == 0:
                continue
            f = H[i][j] / pivot
            Hi, Hp = H[i], H[j + 1]
            for k in range(j, n):
                if Hp[k]:
                    Hi[k] -= f * Hp[k]
            # column update keeps the transform a similarity
            for row in H:
                if row[i]:
                    row[j + 1] += f * row[i]
    polys: list[list[Fraction]] = [[Fraction(1)]]
    for k in range(n):
        prev = polys[k]
        new = [Fraction(0)] + prev
        for t, c in enumerate(prev):
            new[t] -= H[k][k] * c
        chain = Fraction(1)
        for i in range(k - 1, -1, -1):
            chain *= H[i + 1][i]
            if chain == 0:
                break
            coef = H[i][k] * chain
            if coef:
                for t, c in enumerate(polys[i]):
                    new[t] -= coef * c
        polys.append(new)
    return polys[n]


@dataclass(frozen=True)
class OracleDeterminant:
    product: Fraction
    log_value: mpmath.mpf
    charpoly: tuple[Fraction, ...] = field(repr=False)

    @property
    def log_combination(self) -> LogCombination:
        return LogCombination.log(self.product)


def oracle_logdet(g: FractalGraph, kind: LaplacianKind = LaplacianKind.PROBABILISTIC,
                  precision: int = 256) -> OracleDeterminant:
    """Log of the product of nonzero Laplacian eigenvalues, from the exact charpoly.

    With a one-dimensional kernel, ``det(zI - L) = z * (c_1 + c_2 z + ...)``
    and the product of the nonzero eigenvalues is ``(-1)^(V-1) c_1``.
    """
    L = laplacian_matrix(g, kind)
    cp = charpoly_exact(L)
    if cp[0] != 0:
        raise ValueError("Laplacian is nonsingular; not a graph Laplacian")
    c1 = cp[1]
    if c1 == 0:
        raise SingularBeyondKernel("kernel dimension exceeds 1 (disconnected graph)")
    prod = (-1) ** (g.n_vertices - 1) * c1
    if prod <= 0:
        raise ValueError("product of nonzero eigenvalues is not positive")
    with mpmath.workprec(precision + 16):
        value = mpmath.log(mpmath.mpf(prod.numerator)) - mpmath.log(mpmath.mpf(prod.denominator))
    with mpmath.workprec(precision):
        value = +value
    return OracleDeterminant(prod, value, tuple(cp))


def symmetrized_laplacian(g: FractalGraph, kind: LaplacianKind = LaplacianKind.PROBABILISTIC):
    """``D^{-1/2}(D - W)D^{-1/2}`` (probabilistic) or ``D - W``, as floats."""
    V = g.n_vertices
    M = np.zeros((V, V))
    for u, v, w in g.edges:
        M[u, v] -= float(w)
        M[v, u] -= float(w)
    deg = np.array([float(x) for x in g.degrees()])
    M[np.diag_indices(V)] += deg
    if LaplacianKind(kind) is LaplacianKind.PROBABILISTIC:
        s = 1.0 / np.sqrt(deg)
        M = M * s[:, None] * s[None, :]
    return M


def oracle_spectrum(g: FractalGraph, kind: LaplacianKind = LaplacianKind.PROBABILISTIC,
                    precision: int = 53) -> list:
    """All Laplacian eigenvalues, ascending, from a symmetric eigensolver.

    ``precision <= 53`` uses LAPACK in double precision; higher precision runs
    mpmath's Jacobi solver on the exactly-built symmetrized matrix.
    """
    if precision <= 53:
        vals = np.linalg.eigvalsh(symmetrized_laplacian(g, kind))
        return sorted(float(v) for v in vals)
    V = g.n_vertices
    with mpmath.workprec(precision + 16):
        deg = [mpmath.mpf(x.numerator) / x.denominator for x in g.degrees()]
        M = mpmath.zeros(V, V)
        for u, v, w in g.edges:
            wm = mpmath.mpf(w.numerator) / w.denominator
            M[u, v] -= wm
            M[v, u] -= wm
        for i in range(V):
            M[i, i] += deg[i]
        if LaplacianKind(kind) is LaplacianKind.PROBABILISTIC:
            s = [1 / mpmath.sqrt(x) for x in deg]
            for i in range(V):
                for j in range(V):
                    M[i, j] *= s[i] * s[j]
        try:
            vals = mpmath.eigsy(M, eigvals_only=True)
        except Exception as exc:  # mpmath raises bare RuntimeError on stalls
            raise NonConvergence(str(exc)) from exc
        return sorted(vals[i] for i in range(V))


def bareiss_determinant(M: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    A = [list(row) for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        akk = A[k][k]
        rowk = A[k]
        for i in range(k + 1, n):
            rowi = A[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (rowi[j] * akk - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * A[n - 1][n - 1]


def spanning_tree_count(g: FractalGraph) -> int:
    """Number of spanning trees (weighted by edge products) via Matrix-Tree."""
    if any(w.denominator != 1 for _, _, w in g.edges):
        raise ValueError("spanning tree count needs integer weights")
    L = laplacian_matrix(g, LaplacianKind.COMBINATORIAL)
    reduced = [[int(x) for x in row[:-1]] for row in L[:-1]]
    return bareiss_determinant(reduced)


def export_edge_list(g: FractalGraph, kind: LaplacianKind = LaplacianKind.PROBABILISTIC) -> str:
    lines = [f"# n={g.level} vertices={g.n_vertices} kind={LaplacianKind(kind).value}"]
    lines.extend(f"{u} {v} {w}" for u, v, w in g.edges)
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> tuple[FractalGraph, LaplacianKind]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ParseError("missing header", line=1)
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    try:
        level, V = int(header["n"]), int(header["vertices"])
        kind = LaplacianKind(header["kind"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", line=1) from exc
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError("expected 'u v weight'", line=lineno)
        edges.append((int(parts[0]), int(parts[1]), Fraction(parts[2])))
    return FractalGraph(V, tuple(edges), level=level), kind
