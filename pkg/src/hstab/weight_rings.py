"""Weight decompositions of graded rings and their asymptotic statistics.

A WeightTable records, for each degree m = 1..m_max, the torus weights
alpha occurring in the degree-m piece together with their multiplicities.
For a reflexive polytope P the toric table has one weight of multiplicity
1 at every lattice point of mP; external tables with arbitrary
multiplicities load from CSV.

Everything downstream of a table is a statistic of the pairs (alpha, dim):
total weights and their growth coefficients (b0, b1), the normalized
partition sums c0, Duistermaat-Heckman samples, and the weight character
with its Laurent-coefficient fit.  The continuum counterparts (c0_exact,
b0_b1_exact) are computed from the polytope by exact triangulation and the
exponential simplex integrals.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import lattice_geom as lg
from .errors import (
    DegreeOutOfRange,
    EmptyDegree,
    InsufficientDegrees,
    NotReflexive,
    ParseError,
    TruncationTooCoarse,
)
from .simplex_calculus import exp_moments

# t samples for the weight-character Laurent fit; fixed for reproducibility
LAURENT_T_SAMPLES = (0.5, 0.4, 0.3, 0.25, 0.2)
# truncation is acceptable at a sample t only when e^{-t m_max} < this
LAURENT_TRUNCATION = 1e-12
# the fit needs at least as many usable samples as fitted coefficients
_LAURENT_MIN_SAMPLES = 3


def as_float_vector(xi, dim: int) -> np.ndarray:
    """Coerce a torus direction to a finite float vector of length dim.
    Scalars are accepted when dim == 1; strings go through the exact
    rational parser, so '1/3' is fine."""
    if np.isscalar(xi) or isinstance(xi, Fraction):
        xi = [xi]
    arr = np.array(
        [float(lg.as_rational(c)) if isinstance(c, str) else float(c) for c in xi],
        dtype=float,
    )
    if arr.shape != (dim,):
        raise ValueError(f"direction has shape {arr.shape}, expected ({dim},)")
    if not np.all(np.isfinite(arr)):
        raise ValueError("direction entries must be finite")
    return arr


def as_exact_vector(xi, dim: int) -> tuple:
    """Coerce a torus direction to exact Fractions (floats are taken at
    their exact binary value)."""
    if np.isscalar(xi) or isinstance(xi, Fraction):
        xi = [xi]
    vec = tuple(lg.as_rational(c) for c in xi)
    if len(vec) != dim:
        raise ValueError(f"direction has length {len(vec)}, expected {dim}")
    return vec


def _is_float_like(xi) -> bool:
    if np.isscalar(xi) and not isinstance(xi, (str, bytes)):
        return isinstance(xi, (float, np.floating))
    return any(isinstance(c, (float, np.floating)) for c in xi)


class WeightTable:
    """Weight table: per-degree integer weight rows with multiplicities,
    lex-sorted within each degree.

    Invariants checked as each degree is ingested: rows non-empty,
    multiplicities >= 1, and every weight satisfies |alpha|_2 <= C*m
    where C^2 = ``weight_bound_sq`` (exact rational).  Tables built from
    explicit blocks (external data) must cover every degree 1..m_max with
    nondecreasing total dimension; tables built with an ``enumerator``
    (toric) materialize degrees on first access, which keeps degree-128
    3-D tables affordable.  Queries are pure: repeated access to a degree
    returns the same arrays.
    """

    def __init__(self, dim, m_max, blocks, source, weight_bound_sq,
                 enumerator=None):
        self.dim = int(dim)
        self.m_max = int(m_max)
        self.source = source
        self.weight_bound_sq = Fraction(weight_bound_sq)
        self._enumerator = enumerator
        if self.dim < 1 or self.m_max < 1:
            raise ValueError("dim and m_max must be positive")
        self._alphas = {}
        self._dims = {}
        self._moments = {}
        if enumerator is None:
            missing = [m for m in range(1, self.m_max + 1) if m not in blocks]
            if missing:
                raise EmptyDegree(
                    f"table has no entries at degree m = {missing[0]}"
                )
            prev = 0
            for m in range(1, self.m_max + 1):
                self._ingest(m, *blocks[m])
                n_m = int(np.sum(self._dims[m]))
                if n_m < prev:
                    raise ValueError(
                        f"degree {m}: total dimension {n_m} is smaller "
                        f"than at degree {m - 1} ({prev})"
                    )
                prev = n_m
        else:
            for m, block in blocks.items():
                self._ingest(m, *block)

    def _ingest(self, m, alphas, dims) -> None:
        alphas = np.ascontiguousarray(alphas, dtype=np.int64)
        dims = np.ascontiguousarray(dims, dtype=np.int64)
        if alphas.ndim != 2 or alphas.shape[1] != self.dim:
            raise ValueError(f"degree {m}: weight rows have wrong shape")
        if alphas.shape[0] == 0:
            raise EmptyDegree(f"table has no entries at degree m = {m}")
        if dims.shape != (alphas.shape[0],):
            raise ValueError(f"degree {m}: multiplicity column mismatch")
        if np.any(dims < 1):
            raise ValueError(f"degree {m}: multiplicities must be >= 1")
        norm_sq = int(np.max(np.sum(alphas * alphas, axis=1)))
        if Fraction(norm_sq) > self.weight_bound_sq * m * m:
            raise ValueError(
                f"degree {m}: weight exceeds the bound |alpha| <= C*m"
            )
        self._alphas[m] = alphas
        self._dims[m] = dims

    def _block(self, m: int):
        if m not in self._alphas:
            # lazy toric path; N_m nondecreasing holds automatically
            # because the dilates mP grow with m
            self._ingest(m, *self._enumerator(m))
        return self._alphas[m], self._dims[m]

    @property
    def weight_bound(self) -> float:
        return math.sqrt(float(self.weight_bound_sq))

    def _check_degree(self, m) -> int:
        if not isinstance(m, (int, np.integer)) or isinstance(m, bool):
            raise ValueError(f"degree must be an integer, got {m!r}")
        if not 1 <= m <= self.m_max:
            raise DegreeOutOfRange(
                f"degree m = {m} outside the table range 1..{self.m_max}"
            )
        return int(m)

    def alphas(self, m) -> np.ndarray:
        return self._block(self._check_degree(m))[0]

    def dims(self, m) -> np.ndarray:
        return self._block(self._check_degree(m))[1]

    def count(self, m) -> int:
        """N_m = total dimension of the degree-m piece."""
        return int(np.sum(self.dims(m)))

    def moment(self, m) -> tuple:
        """Exact integer vector sum_alpha alpha * dim at degree m."""
        m = self._check_degree(m)
        if m not in self._moments:
            alphas, dims = self._block(m)
            bound = (
                int(np.max(np.abs(alphas), initial=0))
                * int(np.max(dims))
                * alphas.shape[0]
            )
            if bound < 2**62:
                vec = alphas.T @ dims
                self._moments[m] = tuple(int(v) for v in vec)
            else:  # exact fallback for extreme external tables
                self._moments[m] = tuple(
                    sum(int(a) * int(d) for a, d in zip(col, dims.tolist()))
                    for col in alphas.T.tolist()
                )
        return self._moments[m]


def _toric_table_unchecked(P, m_max: int, source: Optional[str] = None) -> WeightTable:
    """Toric enumeration without the reflexivity gate (used for translated
    polytopes in conjugation checks and for external table generation)."""
    if not isinstance(m_max, int) or m_max < 1:
        raise ValueError("m_max must be a positive integer")
    bound_sq = max(
        sum((c * c for c in v), Fraction(0)) for v in P.vertices
    )

    def enumerate_degree(m: int):
        pts = lg.lattice_points(P, m)
        return pts, np.ones(pts.shape[0], dtype=np.int64)

    return WeightTable(
        dim=P.dim,
        m_max=m_max,
        blocks={},
        source=source or f"toric:{P.name or '<unnamed>'}",
        weight_bound_sq=bound_sq,
        enumerator=enumerate_degree,
    )


def weight_table_toric(P, m_max: int) -> WeightTable:
    """Weight table of the anticanonical ring of a reflexive polytope:
    multiplicity 1 at each lattice point of mP, weight bound C = max
    vertex norm."""
    if not lg.is_reflexive(P):
        raise NotReflexive(
            "toric weight tables are defined for reflexive polytopes"
        )
    return _toric_table_unchecked(P, m_max)


# ---------------------------------------------------------------------------
# CSV interchange


def _csv_header(dim: int):
    return ["m"] + [f"a{i + 1}" for i in range(dim)] + ["dim"]


def _parse_int(field: str, what: str, line: int) -> int:
    field = field.strip()
    try:
        return int(field)
    except ValueError as exc:
        raise ParseError(f"{what} {field!r} is not an integer", line=line) from exc


def load_weight_table(path) -> WeightTable:
    """Read a weight table from CSV "m,a1,...,an,dim".

    Raises ParseError (with 1-based line number) on malformed headers,
    ragged rows, non-integer weights, multiplicities < 1, or duplicate
    (m, alpha) rows; EmptyDegree when some degree in 1..max(m) has no
    rows.  Row order in the file is irrelevant; storage is canonical
    (m, then alpha lex)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        header = [h.strip() for h in header]
        if (
            len(header) < 3
            or header[0] != "m"
            or header[-1] != "dim"
            or header != _csv_header(len(header) - 2)
        ):
            raise ParseError(
                f"bad header {','.join(header)!r}; expected m,a1,...,an,dim",
                line=1,
            )
        dim = len(header) - 2
        rows = {}
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # ignore blank lines
            if len(row) != dim + 2:
                raise ParseError(
                    f"row has {len(row)} fields, expected {dim + 2}",
                    line=lineno,
                )
            m = _parse_int(row[0], "degree", lineno)
            if m < 1:
                raise ParseError(f"degree m = {m} must be >= 1", line=lineno)
            alpha = tuple(
                _parse_int(row[1 + i], "weight entry", lineno)
                for i in range(dim)
            )
            d = _parse_int(row[-1], "multiplicity", lineno)
            if d < 1:
                raise ParseError(
                    f"multiplicity {d} must be >= 1", line=lineno
                )
            if (m, alpha) in rows:
                raise ParseError(
                    f"duplicate row for m = {m}, alpha = {alpha}", line=lineno
                )
            rows[(m, alpha)] = d
    if not rows:
        raise ParseError("no data rows", line=2)
    m_max = max(m for m, _ in rows)
    blocks = {}
    bound_sq = Fraction(0)
    for m in range(1, m_max + 1):
        entries = sorted(
            (alpha, d) for (mm, alpha), d in rows.items() if mm == m
        )
        if not entries:
            raise EmptyDegree(f"table has no entries at degree m = {m}")
        alphas = np.array([a for a, _ in entries], dtype=np.int64)
        dims = np.array([d for _, d in entries], dtype=np.int64)
        blocks[m] = (alphas, dims)
        worst = int(np.max(np.sum(alphas * alphas, axis=1)))
        bound_sq = max(bound_sq, Fraction(worst, m * m))
    try:
        return WeightTable(
            dim=dim,
            m_max=m_max,
            blocks=blocks,
            source=f"external:{path}",
            weight_bound_sq=bound_sq,
        )
    except ValueError as exc:  # semantic table violations, e.g. N_m drops
        raise ParseError(str(exc)) from exc


def save_weight_table(T: WeightTable, path) -> None:
    """Write a table in the canonical CSV form (degrees ascending, weights
    lex within each degree)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_csv_header(T.dim))
        for m in range(1, T.m_max + 1):
            for alpha, d in zip(T.alphas(m).tolist(), T.dims(m).tolist()):
                writer.writerow([m] + alpha + [d])


# ---------------------------------------------------------------------------
# statistics of one degree


def total_weight(T: WeightTable, xi, m):
    """sum_alpha <alpha, xi> * dim at degree m.

    The integer moment vector sum(alpha * dim) is accumulated exactly
    first, so the result is an exact rational whenever every entry of xi
    is exact (int / Fraction / 'p/q' string), and a float otherwise.
    """
    moment = T.moment(m)
    if _is_float_like(xi):
        xf = as_float_vector(xi, T.dim)
        return math.fsum(mi * ci for mi, ci in zip(moment, xf.tolist()))
    xe = as_exact_vector(xi, T.dim)
    return sum((mi * ci for mi, ci in zip(moment, xe)), Fraction(0))


def c0_bruteforce(T: WeightTable, xi, m) -> float:
    """Finite-m normalization sum n! m^{-n} sum_alpha e^{-<alpha,xi>/m} dim,
    accumulated by exact compensated summation in lex weight order."""
    m = T._check_degree(m)
    xf = as_float_vector(xi, T.dim)
    alphas = T.alphas(m)
    dims = T.dims(m)
    with np.errstate(over="ignore"):
        terms = np.exp(-(alphas @ xf) / m) * dims
    scale = math.factorial(T.dim) / float(m) ** T.dim
    return scale * math.fsum(terms.tolist())


class LipschitzCheck(NamedTuple):
    bound: float
    actual: float
    ok: bool


class AsymptoticFit(NamedTuple):
    b0: float
    b1: float
    residual: float


class LaurentFit(NamedTuple):
    b0: float
    b1: float


def b0_b1_exact(P, xi):
    """Exact growth coefficients of the total weight:
    b0 = int_P <x, xi> dx and b1 = (1/2) int_{dP} <x, xi> dsigma,
    as Fractions (exact whenever xi is; floats enter at their exact
    binary value)."""
    xe = as_exact_vector(xi, P.dim)
    b0 = sum(
        (mi * ci for mi, ci in zip(lg.moment_vector(P), xe)), Fraction(0)
    )
    b1 = sum(
        (bi * ci for bi, ci in zip(lg.boundary_moment_vector(P), xe)),
        Fraction(0),
    ) / 2
    return b0, b1


def fit_b0_b1(T: WeightTable, xi) -> AsymptoticFit:
    """Least-squares fit of total_weight(m) against {m^{n+1}, m^n, m^{n-1}}
    over the top half of the table's degrees.

    The residual is the maximum deviation of the fit relative to the
    largest sampled |total_weight| (0 when all samples vanish).
    """
    if T.m_max < 8:
        raise InsufficientDegrees(
            f"fit needs m_max >= 8, table has {T.m_max}"
        )
    n = T.dim
    ms = np.arange(T.m_max // 2, T.m_max + 1, dtype=float)
    y = np.array([total_weight(T, as_float_vector(xi, n), int(m)) for m in ms])
    # scale columns to O(1) for conditioning, then unscale the coefficients
    s = float(T.m_max)
    X = np.stack(
        [(ms / s) ** (n + 1), (ms / s) ** n, (ms / s) ** (n - 1)], axis=1
    )
    coeffs, *_ = np.linalg.lstsq(X, y, rcond=None)
    b0 = coeffs[0] / s ** (n + 1)
    b1 = coeffs[1] / s**n
    scale = float(np.max(np.abs(y)))
    residual = 0.0
    if scale > 0:
        residual = float(np.max(np.abs(X @ coeffs - y))) / scale
    return AsymptoticFit(b0=float(b0), b1=float(b1), residual=residual)


# ---------------------------------------------------------------------------
# continuum partition sums


def c0_exact(P, xi) -> float:
    """c0(xi) = n! int_P e^{-<x,xi>} dx via the star triangulation and
    divided-difference simplex integrals."""
    xf = as_float_vector(xi, P.dim)
    shift, i0, _, _ = exp_moments(lg.triangulate(P).simplices, xf, order=0)
    return math.factorial(P.dim) * _safe_exp_times(shift, i0)


def log_c0_exact(P, xi) -> float:
    """log c0(xi), stable for directions of any magnitude."""
    xf = as_float_vector(xi, P.dim)
    shift, i0, _, _ = exp_moments(lg.triangulate(P).simplices, xf, order=0)
    return math.log(math.factorial(P.dim)) + shift + math.log(i0)


def _safe_exp_times(shift: float, value: float) -> float:
    try:
        return math.exp(shift) * value
    except OverflowError:
        return math.inf if value > 0 else -math.inf


def max_vertex_norm(P) -> float:
    """R_P = max Euclidean vertex norm (float, rounded up one ulp so the
    exact value never exceeds it)."""
    worst = max(
        float(sum((c * c for c in v), Fraction(0))) for v in P.vertices
    )
    return math.nextafter(math.sqrt(worst), math.inf)


def c0_lipschitz_check(P, xi, xi2) -> LipschitzCheck:
    """Continuity certificate for c0: the mean-value bound
    n! vol(P) R_P e^{R_P max(|xi|,|xi2|)} |xi - xi2| against the actual
    difference of c0_exact values."""
    xf = as_float_vector(xi, P.dim)
    xf2 = as_float_vector(xi2, P.dim)
    r = max_vertex_norm(P)
    big = max(float(np.linalg.norm(xf)), float(np.linalg.norm(xf2)))
    bound = (
        math.factorial(P.dim)
        * float(lg.volume(P))
        * r
        * _safe_exp_times(r * big, 1.0)
        * float(np.linalg.norm(xf - xf2))
    )
    actual = abs(c0_exact(P, xf) - c0_exact(P, xf2))
    return LipschitzCheck(
        bound=bound, actual=actual, ok=bool(actual <= bound * (1 + 1e-9))
    )


def c0_estimate(T: WeightTable, xi) -> float:
    """c0 estimate from table data alone: Richardson extrapolation of
    c0_bruteforce in 1/m over the top four available degrees.  Intended
    for external tables with no polytope behind them."""
    if T.m_max < 4:
        raise InsufficientDegrees(
            f"extrapolation needs m_max >= 4, table has {T.m_max}"
        )
    ms = list(range(T.m_max - 3, T.m_max + 1))
    hs = [1.0 / m for m in ms]
    ys = [c0_bruteforce(T, xi, m) for m in ms]
    # Lagrange interpolation evaluated at h = 0
    total = 0.0
    for i in range(len(ms)):
        w = 1.0
        for j in range(len(ms)):
            if j != i:
                w *= hs[j] / (hs[j] - hs[i])
        total += ys[i] * w
    return total


# ---------------------------------------------------------------------------
# Duistermaat-Heckman samples


@dataclass(frozen=True)
class DHSample:
    """Discrete Duistermaat-Heckman measure at one degree: atoms at
    lambda = <alpha, xi>/m with masses dim/N_m, equal-lambda atoms merged,
    sorted by lambda."""

    level: int
    lambdas: np.ndarray
    masses: np.ndarray
    weight_bound: float

    def __post_init__(self):
        total = math.fsum(self.masses.tolist())
        assert abs(total - 1.0) <= 1e-12, "masses must sum to 1"
        if self.lambdas.size:
            worst = float(np.max(np.abs(self.lambdas)))
            assert worst <= self.weight_bound + 1e-12, (
                "support exceeds the weight bound"
            )

    @property
    def atoms(self):
        return list(zip(self.lambdas.tolist(), self.masses.tolist()))


def dh_measure(T: WeightTable, xi, m) -> DHSample:
    """Duistermaat-Heckman sample of the table at degree m in direction
    xi.  Atoms with exactly equal lambda (after the float division) are
    merged, with masses accumulated in exact integers before the single
    division by N_m."""
    m = T._check_degree(m)
    xf = as_float_vector(xi, T.dim)
    lambdas = (T.alphas(m) @ xf) / m
    dims = T.dims(m)
    uniq, inverse = np.unique(lambdas, return_inverse=True)
    weights = np.zeros(uniq.shape[0], dtype=np.int64)
    np.add.at(weights, inverse, dims)
    n_total = int(np.sum(dims))
    masses = weights / n_total
    bound = T.weight_bound * float(np.linalg.norm(xf))
    return DHSample(
        level=m,
        lambdas=uniq,
        masses=masses,
        weight_bound=math.nextafter(bound, math.inf) if bound else 0.0,
    )


def dh_exp_moment(D: DHSample) -> float:
    """int e^{-lambda} dDH over the sample's atoms."""
    with np.errstate(over="ignore"):
        terms = np.exp(-D.lambdas) * D.masses
    return math.fsum(terms.tolist())


# ---------------------------------------------------------------------------
# weight character


def weight_character(T: WeightTable, xi, t, m_cut: int) -> float:
    """C(xi, t) truncated at m_cut: sum_{m <= m_cut} e^{-t m} w_m(xi)."""
    t = float(t)
    if not (t > 0) or not math.isfinite(t):
        raise ValueError(f"character parameter t must be positive, got {t!r}")
    m_cut = T._check_degree(m_cut)
    xf = as_float_vector(xi, T.dim)
    return math.fsum(
        math.exp(-t * m) * total_weight(T, xf, m)
        for m in range(1, m_cut + 1)
    )


def laurent_required_m_max() -> int:
    """Smallest m_max at which enough t samples satisfy the truncation
    gate e^{-t m_max} < 1e-12 for the three-coefficient fit."""
    t = sorted(LAURENT_T_SAMPLES, reverse=True)[_LAURENT_MIN_SAMPLES - 1]
    return math.ceil(-math.log(LAURENT_TRUNCATION) / t)


def laurent_fit(T: WeightTable, xi) -> LaurentFit:
    """Recover (b0, b1) from the truncated weight character.

    Samples C(xi, t) at the fixed t grid, keeps the t for which the
    truncation error is negligible (e^{-t m_max} < 1e-12), and fits
    t^{n+2} C(xi, t) against {1, t, t^2}; then b0 = coeff0/(n+1)! and
    b1 = coeff1/n!, matching the growth law w_m = b0 m^{n+1} + b1 m^n +
    O(m^{n-1}) term by term under the sum sum_m e^{-tm} m^k ~ k!/t^{k+1}.
    Raises TruncationTooCoarse when fewer than three samples are usable.
    """
    usable = [
        t
        for t in LAURENT_T_SAMPLES
        if math.exp(-t * T.m_max) < LAURENT_TRUNCATION
    ]
    if len(usable) < _LAURENT_MIN_SAMPLES:
        need = laurent_required_m_max()
        raise TruncationTooCoarse(
            f"table depth m_max = {T.m_max} leaves {len(usable)} usable "
            f"character samples (need {_LAURENT_MIN_SAMPLES}); "
            f"m_max >= {need} is required",
            required_m_max=need,
        )
    n = T.dim
    xf = as_float_vector(xi, n)
    ts = np.array(usable, dtype=float)
    y = np.array(
        [t ** (n + 2) * weight_character(T, xf, t, T.m_max) for t in usable]
    )
    X = np.stack([np.ones_like(ts), ts, ts**2], axis=1)
    coeffs, *_ = np.linalg.lstsq(X, y, rcond=None)
    return LaurentFit(
        b0=float(coeffs[0] / math.factorial(n + 1)),
        b1=float(coeffs[1] / math.factorial(n)),
    )
