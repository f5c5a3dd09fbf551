import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minklog import (
    DirectionSet,
    DiscreteMeasure,
    GeometryError,
    SupportVector,
    TieError,
    UnboundedBodyError,
    combine_lp,
    concentration_direction,
    hausdorff_distance,
    hemisphere_check,
    radial_function,
    radii,
    ray_normal,
    support_function,
    wulff_shape,
)

from conftest import cube, random_body, regular_polygon, square


def rotation(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_sv(n, N, rng):
    while True:
        u = rng.standard_normal((N, n))
        dirs = DirectionSet.from_vectors(u)
        if concentration_direction(dirs) is None:
            return SupportVector(dirs, rng.uniform(0.5, 1.5, N))


# -- direction sets -------------------------------------------------------------------


def test_direction_set_validation():
    with pytest.raises(GeometryError):
        DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0 + 1e-6]]))
    with pytest.raises(GeometryError):
        DirectionSet(np.array([[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(GeometryError):
        DirectionSet(np.eye(4))
    with pytest.raises(GeometryError):
        DirectionSet.from_angles([0.0, 1.0, 1.0 + 1e-12, 3.0])
    assert len(DirectionSet.from_vectors([[2.0, 0.0], [0.0, 3.0], [-1.0, -1.0]])) == 3


def test_measure_and_support_validation():
    dirs = square().dirs
    with pytest.raises(GeometryError):
        DiscreteMeasure(dirs, [1.0, 1.0, 0.0, 1.0])
    with pytest.raises(GeometryError):
        SupportVector(dirs, [1.0, -1.0, 1.0, 1.0])
    with pytest.raises(GeometryError):
        SupportVector(dirs, [1.0, 1.0, 1.0])


# -- hemisphere condition -------------------------------------------------------------


def test_hemisphere_examples():
    sq = DiscreteMeasure(square().dirs, np.ones(4))
    assert hemisphere_check(sq)
    half = DirectionSet.from_angles(np.linspace(-math.pi / 2, math.pi / 2, 7))
    mu = DiscreteMeasure(half, np.ones(7))
    assert not hemisphere_check(mu)
    v = concentration_direction(half)
    assert np.all(half.vectors @ v >= -1e-12)
    assert hemisphere_check(DiscreteMeasure(cube().dirs, np.ones(6)))
    coplanar = DirectionSet.from_vectors([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]])
    assert concentration_direction(coplanar) is not None


def dense_oracle(u, count):
    """Concentrated iff some sampled v has u_i . v >= -slack for all i (slack covers the grid)."""
    n = u.shape[1]
    if n == 2:
        t = np.linspace(0, 2 * math.pi, count, endpoint=False)
        v = np.column_stack([np.cos(t), np.sin(t)])
        slack = math.pi / count
    else:
        k = np.arange(count) + 0.5
        z = 1 - 2 * k / count
        phi = math.pi * (1 + 5 ** 0.5) * k
        v = np.column_stack([np.sqrt(1 - z * z) * np.cos(phi), np.sqrt(1 - z * z) * np.sin(phi), z])
        slack = 4.0 / math.sqrt(count)
    worst = np.min(v @ u.T, axis=1).max()
    return worst, slack


@pytest.mark.parametrize("n", [2, 3])
def test_hemisphere_matches_dense_sampling_oracle(n, rng):
    agree = 0
    for trial in range(40):
        N = 20
        u = rng.standard_normal((N, n))
        if trial % 2:
            # push into a random hemisphere for roughly half the cases
            w = rng.standard_normal(n)
            u = u + 1.4 * w / np.linalg.norm(w)
        dirs = DirectionSet.from_vectors(u)
        worst, slack = dense_oracle(dirs.vectors, 100_000)
        concentrated = concentration_direction(dirs) is not None
        if abs(worst) <= slack:
            continue  # too close to call on the grid
        assert concentrated == (worst > 0)
        agree += 1
    assert agree >= 30


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3]))
def test_hemisphere_invariant_under_permutation_and_rotation(seed, n):
    rng = np.random.default_rng(seed)
    u = DirectionSet.from_vectors(rng.standard_normal((8, n)))
    base = concentration_direction(u) is None
    perm = DirectionSet(u.vectors[rng.permutation(8)])
    assert (concentration_direction(perm) is None) == base
    rot = u.rotated(rotation(n, rng))
    assert (concentration_direction(rot) is None) == base


# -- Wulff shape ----------------------------------------------------------------------


def test_square_wulff():
    P = wulff_shape(square())
    assert P.active.all()
    got = sorted(map(tuple, np.round(P.vertices, 14)))
    assert got == sorted((x, y) for x in (-1.0, 1.0) for y in (-1.0, 1.0))
    assert [f.area for f in P.facets] == [2.0, 2.0, 2.0, 2.0]


def test_redundant_direction_is_inactive():
    u = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [math.sqrt(0.5), math.sqrt(0.5)]])
    P = wulff_shape(SupportVector(DirectionSet(u), [1, 1, 1, 1, 2.0]))
    assert P.active.tolist() == [True, True, True, True, False]
    assert P.effective_h[4] == pytest.approx(math.sqrt(2), abs=1e-14)
    assert len(P.vertices) == 4


def test_cube_wulff():
    P = wulff_shape(cube(2.0))
    assert len(P.vertices) == 8
    assert all(f.area == pytest.approx(16.0, rel=1e-14) for f in P.facets)


def test_unbounded_directions_rejected():
    u = DirectionSet.from_angles([0.0, 0.5, 1.0, 1.5])
    with pytest.raises(UnboundedBodyError):
        wulff_shape(SupportVector(u, np.ones(4)))
    u3 = DirectionSet.from_vectors([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]])
    with pytest.raises(UnboundedBodyError):
        wulff_shape(SupportVector(u3, np.ones(4)))


@pytest.mark.parametrize("n,N", [(2, 12), (2, 30), (3, 12), (3, 40)])
def test_wulff_constraint_oracle(n, N, rng):
    for _ in range(5):
        sv = random_sv(n, N, rng)
        P = wulff_shape(sv)
        u = sv.dirs.vectors
        dots = P.vertices @ u.T
        assert np.all(dots <= sv.h + 1e-9)
        np.testing.assert_allclose(P.effective_h, dots.max(axis=0), atol=1e-9)
        assert np.all(P.effective_h <= sv.h + 1e-12)
        act = P.active
        np.testing.assert_allclose(P.effective_h[act], sv.h[act], atol=1e-9)
        assert P.effective_h.min() > 0
        for f in P.facets:
            np.testing.assert_allclose(f.loop @ u[f.index], sv.h[f.index], atol=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_wulff_projection_idempotent(n, rng):
    for _ in range(5):
        sv = random_sv(n, 15, rng)
        P = wulff_shape(sv)
        Q = wulff_shape(P.effective())
        a = sorted(map(tuple, np.round(P.vertices, 8)))
        b = sorted(map(tuple, np.round(Q.vertices, 8)))
        assert len(a) == len(b)
        np.testing.assert_allclose(np.array(a), np.array(b), atol=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_wulff_rotation_equivariance(n, rng):
    for _ in range(4):
        sv = random_sv(n, 14, rng)
        R = rotation(n, rng)
        P = wulff_shape(sv)
        Q = wulff_shape(SupportVector(sv.dirs.rotated(R), sv.h))
        rotated = P.vertices @ R.T
        d = np.linalg.norm(rotated[:, None, :] - Q.vertices[None, :, :], axis=2)
        assert d.min(axis=1).max() <= 1e-9 and d.min(axis=0).max() <= 1e-9


def test_facet_areas_3d(rng):
    # surface area by the divergence theorem: volume = sum h_i A_i / n
    sv = random_sv(3, 20, rng)
    P = wulff_shape(sv)
    from scipy.spatial import ConvexHull

    hull = ConvexHull(P.vertices)
    areas = sum(f.area for f in P.facets)
    vol = sum(P.effective_h[f.index] * f.area for f in P.facets) / 3
    assert areas == pytest.approx(hull.area, rel=1e-10)
    assert vol == pytest.approx(hull.volume, rel=1e-10)


# -- radial function and ray normals -------------------------------------------------


def test_radial_examples():
    sv = square()
    assert radial_function(sv, [1.0, 0.0]) == pytest.approx(1.0)
    assert radial_function(sv, [math.sqrt(0.5), math.sqrt(0.5)]) == pytest.approx(math.sqrt(2))


def bisection_radius(sv, u):
    lo, hi = 0.0, 1.0
    while np.all(sv.dirs.vectors @ (hi * u) <= sv.h):
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.all(sv.dirs.vectors @ (mid * u) <= sv.h):
            lo = mid
        else:
            hi = mid
    return lo


@pytest.mark.parametrize("n", [2, 3])
def test_radial_matches_bisection_oracle(n, rng):
    sv = random_sv(n, 16, rng)
    for _ in range(50):
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        assert radial_function(sv, u) == pytest.approx(bisection_radius(sv, u), rel=1e-10)


@pytest.mark.parametrize("n", [2, 3])
def test_vertices_lie_on_radial_boundary(n, rng):
    sv = random_sv(n, 16, rng)
    P = wulff_shape(sv)
    for x in P.vertices:
        r = np.linalg.norm(x)
        assert radial_function(sv, x / r) == pytest.approx(r, rel=1e-10)


def test_ray_normal_examples():
    sv = square()
    np.testing.assert_array_equal(ray_normal(sv, [0.6, 0.8]), [0.0, 1.0])
    np.testing.assert_array_equal(ray_normal(sv, [1.0, 0.0]), [1.0, 0.0])
    with pytest.raises(TieError):
        ray_normal(sv, [math.sqrt(0.5), math.sqrt(0.5)])


# -- radii, Hausdorff distance, L_p combinations --------------------------------------


def test_radii_examples(rng):
    assert radii(wulff_shape(square())) == pytest.approx((1.0, math.sqrt(2)))
    r, R = radii(wulff_shape(regular_polygon(64)))
    assert r == pytest.approx(1.0, rel=1e-14)
    assert R == pytest.approx(1 / math.cos(math.pi / 64), rel=1e-12)
    for n in (2, 3):
        sv = random_sv(n, 15, rng)
        r, R = radii(wulff_shape(sv))
        u = rng.standard_normal((1000, n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        rho = radial_function(sv, u)
        assert np.all(rho >= r - 1e-12) and np.all(rho <= R + 1e-12)


def test_hausdorff_examples(rng):
    A = random_body(2, 12, rng)
    assert hausdorff_distance(A, A) == 0.0
    B = regular_polygon(40)
    assert hausdorff_distance(B.scaled(1.3), B) == pytest.approx(0.3 / math.cos(math.pi / 40), rel=1e-6)
    for n in (2, 3):
        X, Y, Z = (random_sv(n, 12, rng) for _ in range(3))
        Y = SupportVector(X.dirs, Y.h)
        Z = SupportVector(X.dirs, Z.h)
        dxy = hausdorff_distance(X, Y)
        assert dxy == pytest.approx(hausdorff_distance(Y, X), rel=1e-12)
        hx, hy = wulff_shape(X).effective_h, wulff_shape(Y).effective_h
        assert dxy >= np.max(np.abs(hx - hy)) - 1e-12
        assert dxy <= hausdorff_distance(X, Z) + hausdorff_distance(Z, Y) + 1e-12


def test_support_function_of_square():
    P = wulff_shape(square())
    assert support_function(P, [math.sqrt(0.5), math.sqrt(0.5)]) == pytest.approx(math.sqrt(2))


def test_combine_lp_examples(rng):
    dirs = square().dirs
    A = SupportVector(dirs, rng.uniform(0.5, 2, 4))
    B = SupportVector(dirs, rng.uniform(0.5, 2, 4))
    np.testing.assert_allclose(combine_lp(A, B, 1, 1, 1).h, A.h + B.h)
    np.testing.assert_array_equal(combine_lp(A, B, 1, 0, 0).h, A.h)
    one, four = SupportVector(dirs, np.ones(4)), SupportVector(dirs, np.full(4, 4.0))
    np.testing.assert_allclose(combine_lp(one, four, 0.5, 0.5, 0).h, 2.0)
    with pytest.raises(GeometryError):
        combine_lp(A, B, -1, 1, 1)


def test_combine_lp_matches_vertex_minkowski_sum(rng):
    from scipy.spatial import ConvexHull

    for _ in range(5):
        A = random_sv(2, 9, rng)
        B = SupportVector(A.dirs, rng.uniform(0.5, 1.5, 9))
        C = combine_lp(A, B, 1, 1, 1)
        va, vb = wulff_shape(A).vertices, wulff_shape(B).vertices
        pts = (va[:, None, :] + vb[None, :, :]).reshape(-1, 2)
        hull_pts = pts[ConvexHull(pts).vertices]
        h_sum = (hull_pts @ A.dirs.vectors.T).max(axis=0)
        PA, PB = wulff_shape(A), wulff_shape(B)
        assert np.all(h_sum <= C.h + 1e-12)
        both = PA.active & PB.active
        np.testing.assert_allclose(h_sum[both], C.h[both], rtol=1e-12)
        # support functions add exactly once each summand is its own support function
        np.testing.assert_allclose(h_sum, combine_lp(PA.effective(), PB.effective(), 1, 1, 1).h, rtol=1e-12)
