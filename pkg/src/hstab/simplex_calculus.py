"""Exact and transcendental integrals over simplices.

Linear integrands are handled in exact rational arithmetic.  Exponential
integrands reduce, in barycentric coordinates, to divided differences of
exp over the vertex values: for an n-simplex S with vertices v_0..v_n and
a linear form a,

    int_S exp(-<a, x>) dx = n! vol(S) * exp[th_0, ..., th_n],

with th_k = -<a, v_k> and exp[...] the divided difference of exp over the
(possibly repeated) nodes.  First and second moments insert repeated
nodes:

    int_S x_i exp(-<a, x>) dx
        = n! vol(S) * sum_k v_{k,i} exp[th_0..th_n, th_k]
    int_S x_i x_j exp(-<a, x>) dx
        = n! vol(S) * sum_{k,l} v_{k,i} v_{l,j} c_{kl},
    c_{kl} = exp[th_0..th_n, th_k, th_l]   (k != l)
    c_{kk} = 2 exp[th_0..th_n, th_k, th_k].

Divided differences are evaluated by a hybrid scheme: the forward
recursion on sorted nodes, switching to the mean-shifted series

    exp[x_0..x_r] = exp(mu) * sum_{k>=0} h_k(x - mu) / (r + k)!

(h_k the complete homogeneous symmetric polynomials) whenever a block of
nodes spans at most 1e-4, so confluent and clustered nodes lose no
accuracy to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DegenerateSimplex

# series kicks in below this node span; safe well before cancellation hurts
_SERIES_SPAN = 1e-4
# absolute tail cutoff for the shifted series
_SERIES_TAIL = 1e-16
_SERIES_MAX_TERMS = 60


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _dot(p, q):
    return sum((a * b for a, b in zip(p, q)), Fraction(0))


def _det_fraction(rows) -> Fraction:
    k = len(rows)
    a = [list(r) for r in rows]
    det = Fraction(1)
    for col in range(k):
        piv = next((r for r in range(col, k) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, k):
            if a[r][col] == 0:
                continue
            f = a[r][col] * inv
            for c in range(col, k):
                a[r][c] -= f * a[col][c]
    return det


@dataclass(frozen=True)
class AffineForm:
    """Affine function x -> <coeffs, x> + const over exact rationals."""

    coeffs: tuple
    const: Fraction = Fraction(0)

    def __call__(self, point) -> Fraction:
        return _dot(self.coeffs, point) + self.const

    @classmethod
    def coordinate(cls, i: int, dim: int) -> "AffineForm":
        return cls(coeffs=tuple(Fraction(1 if j == i else 0) for j in range(dim)))

    @classmethod
    def constant(cls, value, dim: int) -> "AffineForm":
        return cls(coeffs=tuple(Fraction(0) for _ in range(dim)), const=Fraction(value))

    @classmethod
    def linear(cls, coeffs) -> "AffineForm":
        return cls(coeffs=tuple(Fraction(c) for c in coeffs))


@dataclass(frozen=True)
class Simplex:
    """Simplex given by its vertex tuple (exact rational coordinates).

    Full-dimensional when it has n+1 affinely independent vertices in R^n;
    the integral operations below require that and raise DegenerateSimplex
    otherwise.
    """

    vertices: tuple

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    def edge_matrix(self):
        v0 = self.vertices[0]
        return [tuple(a - b for a, b in zip(v, v0)) for v in self.vertices[1:]]

    def volume(self) -> Fraction:
        """Euclidean volume |det(edges)| / n!, exact; zero if degenerate."""
        n = self.dim
        if len(self.vertices) != n + 1:
            raise DegenerateSimplex(
                f"need {n + 1} vertices in R^{n}, got {len(self.vertices)}"
            )
        det = _det_fraction(self.edge_matrix())
        return abs(det) / math.factorial(n)


def simplex(vertices) -> Simplex:
    """Build a Simplex from any nested sequence of rationals; rejects
    wrong vertex counts and flat vertex sets up front."""
    S = Simplex(
        vertices=tuple(tuple(Fraction(c) for c in v) for v in vertices)
    )
    if len(S.vertices) != S.dim + 1:
        raise DegenerateSimplex(
            f"need {S.dim + 1} vertices in R^{S.dim}, got {len(S.vertices)}"
        )
    if S.volume() == 0:
        raise DegenerateSimplex("simplex has zero volume")
    return S


def integral_linear_simplex(S: Simplex, form: AffineForm) -> Fraction:
    """Exact integral of an affine form over a full-dimensional simplex:
    volume times the value at the centroid."""
    vol = S.volume()
    if vol == 0:
        raise DegenerateSimplex("simplex has zero volume")
    mean = sum((form(v) for v in S.vertices), Fraction(0)) / len(S.vertices)
    return vol * mean


# ---------------------------------------------------------------------------
# divided differences of exp


def _series_block(nodes: Sequence[float]) -> float:
    """Mean-shifted series for exp[nodes]; intended for spans <= ~1e-4 but
    correct (just slower to converge) for any span."""
    r = len(nodes) - 1
    mu = math.fsum(nodes) / len(nodes)
    ys = [x - mu for x in nodes]
    hs = [0.0] * (_SERIES_MAX_TERMS + 1)
    hs[0] = 1.0
    for y in ys:
        for k in range(1, _SERIES_MAX_TERMS + 1):
            hs[k] += y * hs[k - 1]
    total = 0.0
    for k in range(_SERIES_MAX_TERMS + 1):
        term = hs[k] / math.factorial(r + k)
        total += term
        if k >= 2 and abs(term) < _SERIES_TAIL:
            break
    return _safe_exp(mu) * total


def exp_divided_difference(nodes) -> float:
    """Divided difference of exp over the given nodes (any multiplicity).

    Nodes are sorted; blocks spanning more than 1e-4 use the forward
    recursion, tighter blocks the shifted series, so clustered and exactly
    repeated nodes are handled without cancellation.
    """
    xs = sorted(float(x) for x in nodes)
    if not xs:
        raise ValueError("at least one node is required")
    if any(not math.isfinite(x) for x in xs):
        raise ValueError("nodes must be finite")
    k = len(xs)
    # table[i][j] holds exp[xs[i..j]]
    table = [[0.0] * k for _ in range(k)]
    for i in range(k):
        table[i][i] = _safe_exp(xs[i])
    for span in range(1, k):
        for i in range(k - span):
            j = i + span
            gap = xs[j] - xs[i]
            if gap <= _SERIES_SPAN:
                table[i][j] = _series_block(xs[i : j + 1])
            else:
                table[i][j] = (table[i + 1][j] - table[i][j - 1]) / gap
    return table[0][k - 1]


def integral_exp_simplex(S: Simplex, a) -> float:
    """float integral of exp(-<a, x>) over a full-dimensional simplex."""
    vol = S.volume()
    if vol == 0:
        raise DegenerateSimplex("simplex has zero volume")
    af = [float(c) for c in a]
    if len(af) != S.dim:
        raise ValueError("form has wrong dimension")
    nodes = [
        -math.fsum(c * float(x) for c, x in zip(af, v)) for v in S.vertices
    ]
    n = S.dim
    return math.factorial(n) * float(vol) * exp_divided_difference(nodes)


# ---------------------------------------------------------------------------
# moment engine over a fixed triangulation


def exp_moments(simplices, xi, order: int = 2):
    """Shifted exponential moments of exp(-<x, xi>) over a union of
    simplices (a polytope triangulation).

    Returns (shift, i0, i1, i2) with

        int e^{-<x,xi>} dx          = e^shift * i0
        int x e^{-<x,xi>} dx        = e^shift * i1   (length-n list)
        int x x^T e^{-<x,xi>} dx    = e^shift * i2   (n x n nested list)

    where shift = max over all vertices of -<x, xi>, so i0 is free of
    overflow for any xi.  i1/i2 are None below the requested order.
    Accumulation across simplices uses exact compensated summation in the
    order the simplices are given.
    """
    simplices = list(simplices)
    if not simplices:
        raise ValueError("no simplices given")
    n = simplices[0].dim
    xf = [float(c) for c in xi]
    if len(xf) != n:
        raise ValueError("direction has wrong dimension")

    def node(v) -> float:
        return -math.fsum(c * float(x) for c, x in zip(xf, v))

    shift = max(node(v) for s in simplices for v in s.vertices)
    nfact = math.factorial(n)

    c0_parts = []
    c1_parts = [[] for _ in range(n)]
    c2_parts = [[[] for _ in range(n)] for _ in range(n)]
    for s in simplices:
        verts = [[float(x) for x in v] for v in s.vertices]
        nodes = [node(v) - shift for v in s.vertices]
        w = nfact * float(s.volume())
        c0_parts.append(w * exp_divided_difference(nodes))
        if order >= 1:
            dd1 = [exp_divided_difference(nodes + [t]) for t in nodes]
            for i in range(n):
                c1_parts[i].append(
                    w * math.fsum(verts[k][i] * dd1[k] for k in range(len(nodes)))
                )
        if order >= 2:
            kk = len(nodes)
            c2 = [[0.0] * kk for _ in range(kk)]
            for k in range(kk):
                c2[k][k] = 2.0 * exp_divided_difference(
                    nodes + [nodes[k], nodes[k]]
                )
                for l in range(k + 1, kk):
                    val = exp_divided_difference(nodes + [nodes[k], nodes[l]])
                    c2[k][l] = val
                    c2[l][k] = val
            for i in range(n):
                for j in range(i, n):
                    acc = math.fsum(
                        verts[k][i] * verts[l][j] * c2[k][l]
                        for k in range(kk)
                        for l in range(kk)
                    )
                    c2_parts[i][j].append(w * acc)

    i0 = math.fsum(c0_parts)
    i1 = [math.fsum(p) for p in c1_parts] if order >= 1 else None
    i2 = None
    if order >= 2:
        i2 = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                val = math.fsum(c2_parts[i][j])
                i2[i][j] = val
                i2[j][i] = val
    return shift, i0, i1, i2
