"""Exact geometry of rational polytopes against a fixed lattice.

Everything here is computed over ``fractions.Fraction``: convex hulls,
facet normals, star triangulations, Euclidean and lattice-normalized
boundary measures, and the dilation point counts ``|mP /\\ Z^n|``.  Floats
enter only when a caller converts the exact answers.

Conventions:
  * A polytope is stored by its lex-sorted vertex matrix together with its
    facets.  Facet normals are primitive integer vectors ``v`` pointing
    outward, so each facet is ``{x : <v, x> = c}`` with rational offset
    ``c`` and ``P = {x : <v_F, x> <= c_F for all F}``.
  * ``P`` is reflexive when its vertices are integral and every facet
    offset equals 1; the origin is then the unique interior lattice point.
  * The boundary measure ``sigma`` on a facet with primitive normal ``v``
    is the Lebesgue measure of the hyperplane normalized so that the
    induced lattice has covolume 1; concretely ``d sigma = d(euclidean) /
    |v|_2``.  For reflexive P this gives ``sigma(dP) = n * vol(P)``.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from numbers import Rational
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DegeneratePolytope, NonRationalInput, ParseError
from .simplex_calculus import AffineForm, Simplex

Point = tuple  # tuple[Fraction, ...]; alias only for readability


def as_rational(x) -> Fraction:
    """Coerce one coordinate to an exact Fraction.

    Accepts ints, Fractions, strings like '3' / '-2/5' / '0.25', and
    finite floats (taken at their exact binary value).  Anything else
    raises NonRationalInput.
    """
    if isinstance(x, bool):
        raise NonRationalInput(f"boolean is not a coordinate: {x!r}")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise NonRationalInput(f"non-finite coordinate: {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise NonRationalInput(f"cannot parse coordinate {x!r}") from exc
    raise NonRationalInput(f"cannot interpret {x!r} as a rational number")


def as_rational_point(p) -> Point:
    return tuple(as_rational(c) for c in p)


# ---------------------------------------------------------------------------
# exact linear algebra (small dense systems over Fraction)


def _det(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant by fraction-free-ish Gaussian elimination. det([]) = 1."""
    k = len(rows)
    if k == 0:
        return Fraction(1)
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


def _rank(rows: Iterable[Sequence[Fraction]]) -> int:
    a = [list(r) for r in rows]
    if not a:
        return 0
    ncols = len(a[0])
    rank = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(a)) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = 1 / a[rank][col]
        for r in range(rank + 1, len(a)):
            if a[r][col] != 0:
                f = a[r][col] * inv
                for c in range(col, ncols):
                    a[r][c] -= f * a[rank][c]
        rank += 1
        if rank == len(a):
            break
    return rank


def _solve_exact(cols: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    """Solve sum_j lam_j * cols[j] = rhs for a consistent full-column-rank
    system; returns the unique lam as a tuple of Fractions."""
    m, k = len(rhs), len(cols)
    a = [[cols[j][i] for j in range(k)] + [rhs[i]] for i in range(m)]
    pivots = []
    row = 0
    for col in range(k):
        piv = next((r for r in range(row, m) if a[r][col] != 0), None)
        if piv is None:
            raise DegeneratePolytope("chart basis is rank deficient")
        a[row], a[piv] = a[piv], a[row]
        inv = 1 / a[row][col]
        a[row] = [v * inv for v in a[row]]
        for r in range(m):
            if r != row and a[r][col] != 0:
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[row])]
        pivots.append(col)
        row += 1
    for r in range(row, m):
        if a[r][k] != 0:
            raise DegeneratePolytope("point lies outside the chart flat")
    return tuple(a[i][k] for i in range(k))


def _sub(p: Point, q: Point) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def _dot(p, q) -> Fraction:
    return sum((a * b for a, b in zip(p, q)), Fraction(0))


def _primitive_outward(normal: Sequence[Fraction], offset: Fraction):
    """Scale a rational (normal, offset) pair by a positive factor so the
    normal becomes a primitive integer vector; orientation is preserved."""
    denom_lcm = 1
    for c in normal:
        denom_lcm = denom_lcm * c.denominator // gcd(denom_lcm, c.denominator)
    ints = [int(c * denom_lcm) for c in normal]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    assert g > 0, "zero normal cannot be primitivized"
    return tuple(v // g for v in ints), offset * denom_lcm / g


# ---------------------------------------------------------------------------
# convex hull: exhaustive exact facet enumeration


def _spanned_normal(pts: Sequence[Point]) -> Optional[Point]:
    """Normal of the hyperplane through d points in R^d via cofactors of the
    edge matrix; None when the points are affinely dependent."""
    d = len(pts)
    edges = [_sub(p, pts[0]) for p in pts[1:]]  # (d-1) x d
    normal = []
    for j in range(d):
        minor = [[row[c] for c in range(d) if c != j] for row in edges]
        normal.append((-1) ** j * _det(minor))
    if all(v == 0 for v in normal):
        return None
    return tuple(normal)


def _hull_facets(points: Sequence[Point], d: int):
    """All facets of conv(points), assumed full-dimensional in R^d.

    Returns {(primitive integer normal, rational offset): sorted tuple of
    indices of the input points lying on the facet}.  Cost is
    C(len(points), d) * len(points) exact hyperplane sidings, which is the
    intended scale (tens of points, d <= 4).
    """
    facets = {}
    for subset in itertools.combinations(range(len(points)), d):
        normal = _spanned_normal([points[i] for i in subset])
        if normal is None:
            continue
        c = _dot(normal, points[subset[0]])
        sides = [_dot(normal, p) - c for p in points]
        if all(s <= 0 for s in sides):
            pass
        elif all(s >= 0 for s in sides):
            normal = tuple(-v for v in normal)
            c = -c
            sides = [-s for s in sides]
        else:
            continue
        key = _primitive_outward(normal, c)
        if key not in facets:
            facets[key] = tuple(i for i, s in enumerate(sides) if s == 0)
    return facets


# ---------------------------------------------------------------------------
# polytope model


@dataclass(frozen=True)
class Facet:
    """Outward primitive integer normal, rational offset, and the ids of the
    polytope vertices lying on the facet."""

    normal: tuple
    offset: Fraction
    vertex_ids: tuple


@dataclass(frozen=True)
class LatticePolytope:
    """Full-dimensional rational polytope with exact facet data."""

    dim: int
    vertices: tuple  # lex-sorted tuple of Fraction points
    facets: tuple  # tuple of Facet, sorted by (normal, offset)
    name: str = ""

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    def facet_points(self, facet: Facet):
        return tuple(self.vertices[i] for i in facet.vertex_ids)

    def contains(self, point, strict: bool = False) -> bool:
        p = as_rational_point(point)
        if strict:
            return all(_dot(f.normal, p) < f.offset for f in self.facets)
        return all(_dot(f.normal, p) <= f.offset for f in self.facets)

    def is_lattice(self) -> bool:
        return all(c.denominator == 1 for v in self.vertices for c in v)


def build_polytope(points, name: str = "") -> LatticePolytope:
    """Convex hull of rational points as a LatticePolytope.

    Duplicates and non-vertex points are discarded; raises
    DegeneratePolytope when the points do not affinely span R^n and
    NonRationalInput on coordinates that are not exact rationals.
    """
    pts = [as_rational_point(p) for p in points]
    if not pts:
        raise DegeneratePolytope("no input points")
    n = len(pts[0])
    if n == 0:
        raise DegeneratePolytope("points must have at least one coordinate")
    if any(len(p) != n for p in pts):
        raise ValueError("input points have inconsistent dimensions")
    pts = sorted(set(pts))
    if _rank([_sub(p, pts[0]) for p in pts[1:]]) < n:
        raise DegeneratePolytope(
            f"points span an affine subspace of dimension < {n}"
        )
    raw_facets = _hull_facets(pts, n)

    # a point is a vertex iff its active facet normals span R^n
    active = {i: [] for i in range(len(pts))}
    for (normal, _), inc in raw_facets.items():
        for i in inc:
            active[i].append(tuple(Fraction(v) for v in normal))
    vertex_ids = [i for i in range(len(pts)) if _rank(active[i]) == n]
    vertices = tuple(pts[i] for i in vertex_ids)  # pts sorted, so still lex
    reindex = {old: new for new, old in enumerate(vertex_ids)}

    facets = []
    for (normal, offset), inc in raw_facets.items():
        ids = tuple(sorted(reindex[i] for i in inc if i in reindex))
        assert len(ids) >= n, "facet with too few vertices"
        facets.append(Facet(normal=normal, offset=offset, vertex_ids=ids))
    facets.sort(key=lambda f: (f.normal, f.offset))
    return LatticePolytope(
        dim=n, vertices=vertices, facets=tuple(facets), name=name
    )


def translate(P: LatticePolytope, u) -> LatticePolytope:
    """The polytope P + u.  Facet normals are unchanged and each offset
    moves by <v_F, u>; implemented by rebuilding from translated vertices
    so the result carries fully consistent data."""
    shift = as_rational_point(u)
    if len(shift) != P.dim:
        raise ValueError("translation vector has wrong dimension")
    return build_polytope(
        [tuple(c + s for c, s in zip(v, shift)) for v in P.vertices],
        name=P.name,
    )


def is_reflexive(P: LatticePolytope) -> bool:
    """True when P has integer vertices and every facet offset equals 1
    (so the origin is strictly interior at lattice distance 1 from every
    facet)."""
    return P.is_lattice() and all(f.offset == 1 for f in P.facets)


# ---------------------------------------------------------------------------
# triangulation


@dataclass(frozen=True)
class FacetPiece:
    """One simplex of a facet triangulation: vertex tuple, index of the
    parent facet, and its exact lattice-normalized measure."""

    facet_id: int
    vertices: tuple
    measure: Fraction


@dataclass(frozen=True)
class SimplicialDecomposition:
    """Star triangulation of a polytope: full-dimensional simplices coning
    the triangulated facets over an interior base point."""

    base: tuple
    simplices: tuple  # tuple[Simplex]
    facet_pieces: tuple  # tuple[FacetPiece], aligned with the cones

    @property
    def n_simplices(self) -> int:
        return len(self.simplices)

    @property
    def facet_simplices(self) -> dict:
        """Per-facet tiling: facet id -> tuple of vertex n-tuples."""
        out = {}
        for piece in self.facet_pieces:
            out.setdefault(piece.facet_id, []).append(piece.vertices)
        return {fid: tuple(parts) for fid, parts in out.items()}


def _fan_face(points: Sequence[Point], d: int):
    """Triangulate the d-dimensional face conv(points) (living in some
    affine d-flat of R^n) by fanning from its lex-smallest vertex.
    Returns lex-sorted tuples of d+1 original points."""
    points = sorted(points)
    if d == 0:
        assert len(points) == 1
        return [tuple(points)]
    if len(points) == d + 1:
        return [tuple(points)]
    apex = points[0]

    # chart: exact affine coordinates on the flat spanned by the face
    base = points[0]
    basis = []
    for p in points[1:]:
        e = _sub(p, base)
        if _rank(basis + [e]) > len(basis):
            basis.append(e)
        if len(basis) == d:
            break
    assert len(basis) == d, "face does not span a d-flat"
    coords = [_solve_exact(basis, _sub(p, base)) for p in points]

    simplices = []
    for inc in _hull_facets(coords, d).values():
        face_pts = [points[i] for i in inc]
        if apex in face_pts:
            continue
        for sub in _fan_face(face_pts, d - 1):
            simplices.append(tuple(sorted(sub + (apex,))))
    return sorted(simplices)


def _facet_measure(piece: Sequence[Point], normal) -> Fraction:
    """Lattice-normalized measure of an (n-1)-simplex lying in a facet with
    primitive integer normal v:  |det(edges, v)| / ((n-1)! * <v, v>)."""
    n = len(normal)
    rows = [_sub(p, piece[0]) for p in piece[1:]]
    rows.append(tuple(Fraction(v) for v in normal))
    d = _det(rows)
    nf = 1
    for k in range(2, n):
        nf *= k
    return abs(d) / (nf * _dot(normal, normal))


@functools.lru_cache(maxsize=64)
def _triangulate_cached(P: LatticePolytope, base: Optional[tuple]):
    n = P.dim
    if base is None:
        if all(f.offset > 0 for f in P.facets):
            base = tuple(Fraction(0) for _ in range(n))
        else:
            base = tuple(
                sum(col, Fraction(0)) / P.n_vertices
                for col in zip(*P.vertices)
            )
    if not all(_dot(f.normal, base) < f.offset for f in P.facets):
        raise ValueError(f"triangulation base {base} is not strictly interior")

    simplices = []
    pieces = []
    for fid, facet in enumerate(P.facets):
        for tri in _fan_face(P.facet_points(facet), n - 1):
            pieces.append(
                FacetPiece(
                    facet_id=fid,
                    vertices=tri,
                    measure=_facet_measure(tri, facet.normal),
                )
            )
            simplices.append(Simplex(vertices=(base,) + tri))
    return SimplicialDecomposition(
        base=base, simplices=tuple(simplices), facet_pieces=tuple(pieces)
    )


def triangulate(
    P: LatticePolytope, base=None
) -> SimplicialDecomposition:
    """Star triangulation of P.

    The base point is the origin when strictly interior, else the vertex
    centroid; an explicit rational interior ``base`` may be supplied to get
    a different (still deterministic) decomposition.  Facet triangulations
    fan from the lex-smallest vertex of each face, recursively.
    """
    if base is not None:
        base = as_rational_point(base)
        if len(base) != P.dim:
            raise ValueError("base point has wrong dimension")
    return _triangulate_cached(P, base)


@functools.lru_cache(maxsize=256)
def volume(P: LatticePolytope) -> Fraction:
    """Euclidean volume of P, exact, as the sum over the star triangulation."""
    return sum((s.volume() for s in triangulate(P).simplices), Fraction(0))


def normalized_volume(P: LatticePolytope) -> Fraction:
    """n! * vol(P); integer for lattice polytopes."""
    nf = 1
    for k in range(2, P.dim + 1):
        nf *= k
    return nf * volume(P)


# ---------------------------------------------------------------------------
# exact integrals of affine forms


def boundary_integral(P: LatticePolytope, form: AffineForm) -> Fraction:
    """Exact integral of an affine form over dP against the
    lattice-normalized boundary measure sigma."""
    total = Fraction(0)
    for piece in triangulate(P).facet_pieces:
        # affine form integrates to measure * value at the centroid
        mean = sum(
            (form(v) for v in piece.vertices), Fraction(0)
        ) / len(piece.vertices)
        total += piece.measure * mean
    return total


def interior_integral(P: LatticePolytope, form: AffineForm) -> Fraction:
    """Exact integral of an affine form over P against Lebesgue measure."""
    total = Fraction(0)
    for s in triangulate(P).simplices:
        mean = sum((form(v) for v in s.vertices), Fraction(0)) / len(
            s.vertices
        )
        total += s.volume() * mean
    return total


@functools.lru_cache(maxsize=256)
def moment_vector(P: LatticePolytope) -> tuple:
    """(int_P x_i dx)_i as exact Fractions."""
    return tuple(
        interior_integral(P, AffineForm.coordinate(i, P.dim))
        for i in range(P.dim)
    )


@functools.lru_cache(maxsize=256)
def boundary_moment_vector(P: LatticePolytope) -> tuple:
    """(int_{dP} x_i dsigma)_i as exact Fractions."""
    return tuple(
        boundary_integral(P, AffineForm.coordinate(i, P.dim))
        for i in range(P.dim)
    )


def barycenter(P: LatticePolytope) -> tuple:
    v = volume(P)
    return tuple(m / v for m in moment_vector(P))


# ---------------------------------------------------------------------------
# lattice point enumeration


def _box_grid(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def lattice_points(P: LatticePolytope, m: int = 1) -> np.ndarray:
    """Integer points of the dilation mP as an (N, n) int64 array in
    lexicographic row order.

    Membership tests are exact: with facet offset c = p/q the condition
    <v_F, alpha> <= m * c is evaluated as q * <v_F, alpha> <= m * p in
    integers.
    """
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"dilation factor must be a positive integer, got {m!r}")
    n = P.dim
    lo = np.array(
        [int(-((-m * min(v[i] for v in P.vertices)) // 1)) for i in range(n)],
        dtype=np.int64,
    )
    hi = np.array(
        [int((m * max(v[i] for v in P.vertices)) // 1) for i in range(n)],
        dtype=np.int64,
    )
    if np.any(hi < lo):
        return np.zeros((0, n), dtype=np.int64)

    normals = np.array([f.normal for f in P.facets], dtype=np.int64)
    qs = np.array([f.offset.denominator for f in P.facets], dtype=np.int64)
    ps = np.array([f.offset.numerator for f in P.facets], dtype=np.int64)
    bound = (
        int(np.abs(normals).sum(axis=1).max())
        * int(np.abs(np.concatenate([lo, hi])).max() or 1)
        * int(qs.max())
    )
    if bound >= 2**62:  # keep the int64 arithmetic exact
        raise ValueError("coefficients too large for exact int64 filtering")
    rhs = m * ps

    def filt(grid: np.ndarray) -> np.ndarray:
        lhs = grid @ normals.T  # (N, F)
        keep = np.all(lhs * qs[np.newaxis, :] <= rhs[np.newaxis, :], axis=1)
        return grid[keep]

    if n <= 2:
        pts = filt(_box_grid(lo, hi))
    else:
        # slab along the first axis to bound peak memory
        tail = _box_grid(lo[1:], hi[1:])
        slabs = []
        for x0 in range(int(lo[0]), int(hi[0]) + 1):
            grid = np.concatenate(
                [np.full((tail.shape[0], 1), x0, dtype=np.int64), tail],
                axis=1,
            )
            slabs.append(filt(grid))
        pts = np.concatenate(slabs, axis=0)
    order = np.lexsort(tuple(pts[:, j] for j in range(n - 1, -1, -1)))
    return np.ascontiguousarray(pts[order])


# ---------------------------------------------------------------------------
# file format


def polytope_from_dict(doc: dict, source: str = "<dict>") -> LatticePolytope:
    """Build a polytope from the JSON document shape
    {"name": str, "dim": int, "vertices": [[coord, ...], ...]}; extra keys
    are ignored.  Coordinates may be integers or 'p/q' strings."""
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top-level JSON value must be an object")
    for key in ("name", "dim", "vertices"):
        if key not in doc:
            raise ParseError(f"{source}: missing required key {key!r}")
    name = doc["name"]
    dim = doc["dim"]
    verts = doc["vertices"]
    if not isinstance(name, str):
        raise ParseError(f"{source}: 'name' must be a string")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError(f"{source}: 'dim' must be a positive integer")
    if not isinstance(verts, list) or not verts:
        raise ParseError(f"{source}: 'vertices' must be a non-empty list")
    rows = []
    for k, row in enumerate(verts):
        if not isinstance(row, list):
            raise ParseError(f"{source}: vertex {k} is not a list")
        if len(row) != dim:
            raise ParseError(
                f"{source}: vertex {k} has {len(row)} coordinates, expected {dim}"
            )
        rows.append(row)
    try:
        return build_polytope(rows, name=name)
    except NonRationalInput as exc:
        raise ParseError(f"{source}: {exc}") from exc


def load_polytope(path) -> LatticePolytope:
    """Read a polytope JSON file; raises ParseError on malformed input."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return polytope_from_dict(doc, source=str(path))
