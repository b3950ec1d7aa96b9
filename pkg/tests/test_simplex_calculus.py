"""Stable exponential-linear simplex integration.

The reference oracle for divided differences of exp is a 60-digit mpmath
Newton tableau with distinct nodes (confluent cases get 1e-30 splittings,
far below double precision but exact in mpmath).  Integrals over 2-D
simplices are cross-checked with scipy adaptive quadrature.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate

from hstab.errors import DegenerateSimplex
from hstab.simplex_calculus import (
    AffineForm,
    Simplex,
    exp_divided_difference,
    exp_moments,
    integral_exp_simplex,
    integral_linear_simplex,
    simplex,
)

mpmath.mp.dps = 60


def dd_exp_reference(nodes):
    """Newton tableau for exp at the given nodes in 60-digit arithmetic.
    Repeated nodes are separated by 1e-30, which changes the value far
    below double precision."""
    xs = []
    seen = {}
    for v in nodes:
        k = seen.get(v, 0)
        seen[v] = k + 1
        xs.append(mpmath.mpf(v) + k * mpmath.mpf("1e-30"))
    col = [mpmath.e**x for x in xs]
    for level in range(1, len(xs)):
        col = [
            (col[i + 1] - col[i]) / (xs[i + level] - xs[i])
            for i in range(len(col) - 1)
        ]
    return float(col[0])


# ---------------------------------------------------------------------------
# divided differences


def test_dd_single_and_double_node():
    assert exp_divided_difference([0.7]) == pytest.approx(math.exp(0.7), rel=1e-15)
    assert exp_divided_difference([0.7, 0.7]) == pytest.approx(
        math.exp(0.7), rel=1e-14
    )
    assert exp_divided_difference([0.0, 1.0]) == pytest.approx(
        math.e - 1, rel=1e-14
    )


def test_dd_all_equal_closed_form():
    # k+1 copies of a: e^a / k!
    for k in range(6):
        got = exp_divided_difference([0.3] * (k + 1))
        assert got == pytest.approx(math.exp(0.3) / math.factorial(k), rel=1e-13)


def test_dd_random_spread_nodes_vs_reference():
    rng = np.random.default_rng(7)
    for _ in range(60):
        k = int(rng.integers(1, 8))
        nodes = (rng.uniform(-8, 8, size=k)).tolist()
        got = exp_divided_difference(nodes)
        ref = dd_exp_reference(nodes)
        assert got == pytest.approx(ref, rel=1e-11), nodes


def test_dd_clustered_nodes_no_cancellation():
    """Pairwise gaps of 1e-8 sit far below the recursion's usable range;
    the series path must agree with the reference to 1e-10 relative."""
    rng = np.random.default_rng(11)
    for _ in range(40):
        k = int(rng.integers(2, 7))
        center = float(rng.uniform(-3, 3))
        nodes = (center + rng.uniform(-1e-8, 1e-8, size=k)).tolist()
        got = exp_divided_difference(nodes)
        ref = dd_exp_reference(nodes)
        assert got == pytest.approx(ref, rel=1e-10), nodes


def test_dd_mixed_cluster_and_far_nodes():
    rng = np.random.default_rng(13)
    for _ in range(40):
        cluster = (0.5 + rng.uniform(-5e-7, 5e-7, size=3)).tolist()
        far = rng.uniform(-6, 6, size=2).tolist()
        nodes = cluster + far
        got = exp_divided_difference(nodes)
        ref = dd_exp_reference(nodes)
        assert got == pytest.approx(ref, rel=1e-10), nodes


def test_dd_permutation_invariant_exactly():
    rng = np.random.default_rng(17)
    nodes = rng.uniform(-4, 4, size=6).tolist()
    base = exp_divided_difference(nodes)
    for _ in range(10):
        perm = list(nodes)
        rng.shuffle(perm)
        assert exp_divided_difference(perm) == base


def test_dd_total_on_finite_input():
    # overflow saturates to inf instead of raising
    assert exp_divided_difference([800.0]) == math.inf
    with pytest.raises(ValueError):
        exp_divided_difference([])
    with pytest.raises(ValueError):
        exp_divided_difference([float("nan")])


# ---------------------------------------------------------------------------
# simplex containers


def test_simplex_volume_and_degeneracy():
    S = simplex([(0, 0), (1, 0), (0, 1)])
    assert S.volume() == Fraction(1, 2)
    with pytest.raises(DegenerateSimplex):
        simplex([(0, 0), (1, 0)])
    with pytest.raises(DegenerateSimplex):
        simplex([(0, 0), (1, 0), (2, 0)]).volume()


def test_affine_form_eval():
    f = AffineForm.linear([2, -1])
    assert f((3, 1)) == 5
    g = AffineForm(coeffs=(Fraction(1, 2),), const=Fraction(1))
    assert g((3,)) == Fraction(5, 2)


def test_integral_linear_examples():
    seg = simplex([(0,), (1,)])
    assert integral_linear_simplex(seg, AffineForm.coordinate(0, dim=1)) == Fraction(1, 2)
    tri = simplex([(0, 0), (1, 0), (0, 1)])
    assert integral_linear_simplex(tri, AffineForm.coordinate(0, dim=2)) == Fraction(1, 6)
    big = simplex([(-1, -1), (2, -1), (-1, 2)])
    assert integral_linear_simplex(big, AffineForm.coordinate(0, dim=2)) == 0


# ---------------------------------------------------------------------------
# exponential integrals


def test_exp_integral_zero_exponent_gives_volume():
    tri = simplex([(0, 0), (2, 0), (0, 3)])
    assert integral_exp_simplex(tri, (0.0, 0.0)) == pytest.approx(3.0, rel=1e-15)


def test_exp_integral_interval_closed_form():
    seg = simplex([(-1,), (1,)])
    got = integral_exp_simplex(seg, (1.0,))
    assert got == pytest.approx(2 * math.sinh(1), rel=1e-13)


def test_exp_integral_unit_triangle_vs_quadrature():
    tri = simplex([(0, 0), (1, 0), (0, 1)])
    a = (1.0, 1.0)
    got = integral_exp_simplex(tri, a)
    ref, err = integrate.dblquad(
        lambda y, x: math.exp(-(a[0] * x + a[1] * y)),
        0.0,
        1.0,
        0.0,
        lambda x: 1.0 - x,
        epsabs=1e-13,
    )
    assert err < 1e-10
    assert got == pytest.approx(ref, abs=1e-10)


def test_exp_integral_random_triangles_vs_quadrature():
    rng = np.random.default_rng(23)
    for _ in range(8):
        verts = rng.integers(-3, 4, size=(3, 2))
        if abs(np.linalg.det(verts[1:] - verts[0])) < 0.5:
            continue
        S = simplex([tuple(int(c) for c in v) for v in verts])
        a = tuple(rng.uniform(-1.5, 1.5, size=2))
        got = integral_exp_simplex(S, a)
        xs = verts[:, 0]
        ys = verts[:, 1]

        def in_triangle_integral():
            # integrate over the bounding box with a characteristic
            # function is too noisy; use the affine map to the unit
            # triangle instead
            v0 = verts[0].astype(float)
            e1 = verts[1] - verts[0]
            e2 = verts[2] - verts[0]
            jac = abs(np.linalg.det(np.array([e1, e2], dtype=float)))

            def f(v, u):
                x = v0 + u * e1 + v * e2
                return math.exp(-(a[0] * x[0] + a[1] * x[1])) * jac

            return integrate.dblquad(
                f, 0.0, 1.0, 0.0, lambda u: 1.0 - u, epsabs=1e-12
            )

        ref, err = in_triangle_integral()
        assert got == pytest.approx(ref, rel=1e-9, abs=1e-10), (verts, a)


def test_exp_integral_tetrahedron_vs_quadrature():
    tet = simplex([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    a = (0.7, -0.4, 1.1)
    got = integral_exp_simplex(tet, a)
    ref, err = integrate.tplquad(
        lambda z, y, x: math.exp(-(a[0] * x + a[1] * y + a[2] * z)),
        0.0,
        1.0,
        0.0,
        lambda x: 1.0 - x,
        0.0,
        lambda x, y: 1.0 - x - y,
        epsabs=1e-11,
    )
    assert got == pytest.approx(ref, abs=5e-9)


def test_exp_integral_smooth_limit():
    """First order in a on a unit-scale simplex:
    integral = vol - int <a,x> + O(|a|^2), so the residual at |a| = 1e-4
    sits below 1e-8."""
    tri = simplex([(0, 0), (1, 0), (0, 1)])
    a = (1e-4, -1e-4)
    got = integral_exp_simplex(tri, a)
    lin = AffineForm.linear(a)
    expected = float(tri.volume()) - float(integral_linear_simplex(tri, lin))
    assert abs(got - expected) < 1e-8


def test_exp_integral_additive_under_subdivision():
    # split the big triangle through an interior point; totals must agree
    whole = simplex([(-1, -1), (2, -1), (-1, 2)])
    c = (0, 0)
    parts = [
        simplex([c, (-1, -1), (2, -1)]),
        simplex([c, (2, -1), (-1, 2)]),
        simplex([c, (-1, 2), (-1, -1)]),
    ]
    for a in [(0.9, -0.3), (2.0, 2.0), (-1.2, 0.4)]:
        whole_val = integral_exp_simplex(whole, a)
        split_val = math.fsum(integral_exp_simplex(S, a) for S in parts)
        assert split_val == pytest.approx(whole_val, rel=1e-12)


def test_exp_integral_big_exponent_no_overflow():
    seg = simplex([(-1,), (1,)])
    got = integral_exp_simplex(seg, (600.0,))
    # closed form 2 sinh(600)/600: near the top of double range but finite
    assert math.isfinite(got)
    assert math.log(got) == pytest.approx(600 - math.log(600), rel=1e-12)


# ---------------------------------------------------------------------------
# batched moments


def test_exp_moments_interval_gibbs_statistics():
    seg = simplex([(-1,), (1,)])
    xi = np.array([1.0])
    shift, i0, i1, i2 = exp_moments((seg,), xi, order=2)
    z = math.exp(shift) * i0
    mean = i1[0] / i0
    var = i2[0][0] / i0 - mean * mean
    assert z == pytest.approx(2 * math.sinh(1), rel=1e-13)
    assert mean == pytest.approx(1 / 1.0 - math.cosh(1) / math.sinh(1), rel=1e-12)
    assert var == pytest.approx(1.0 - 1.0 / math.sinh(1) ** 2, rel=1e-11)


def test_exp_moments_zero_direction_gives_geometry():
    tri = simplex([(-1, -1), (2, -1), (-1, 2)])
    shift, i0, i1, _ = exp_moments((tri,), np.zeros(2), order=1)
    vol = math.exp(shift) * i0
    assert vol == pytest.approx(4.5, rel=1e-14)
    assert math.exp(shift) * i1[0] == pytest.approx(0.0, abs=1e-13)


def test_exp_moments_large_direction_log_value():
    seg = simplex([(-1,), (1,)])
    xi = np.array([500.0])
    shift, i0, _, _ = exp_moments((seg,), xi, order=0)
    log_val = shift + math.log(i0)
    # log(2 sinh(500)/500) = 500 - log(500) + log1p(-e^{-1000})
    assert log_val == pytest.approx(500 - math.log(500), rel=1e-12)
