"""Polytopes given by support numbers over a fixed set of unit normals.

A body is stored in H-representation: directions ``u_i`` and support numbers
``h_i``. :func:`wulff_shape` resolves the halfspace intersection
``{x : x . u_i <= h_i}`` into vertices and facets by polar duality: the
facets of the body are the hull vertices of the dual points ``u_i / h_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .errors import GeometryError, TieError, UnboundedBodyError

UNIT_TOL = 1e-12
MIN_SEPARATION = 1e-9
FEAS_TOL = 1e-9


def _as_matrix(vectors) -> np.ndarray:
    arr = np.array(vectors, dtype=float)
    if arr.ndim != 2:
        raise GeometryError(f"directions must be a 2-D array, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """N pairwise-distinct unit vectors in R^n (n = 2 or 3)."""

    vectors: np.ndarray

    def __post_init__(self):
        u = _as_matrix(self.vectors)
        u.setflags(write=False)
        object.__setattr__(self, "vectors", u)
        N, n = u.shape
        if n not in (2, 3):
            raise GeometryError(f"only n = 2 and n = 3 are supported, got n = {n}")
        if N < n + 1:
            raise GeometryError(f"need at least n+1 = {n + 1} directions, got {N}")
        norms = np.linalg.norm(u, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise GeometryError("directions must be unit vectors (|u| = 1 to 1e-12)")
        # chord length, since 1 - cos(1e-9) is below double resolution
        i, j = np.triu_indices(N, 1)
        chord = np.linalg.norm(u[i] - u[j], axis=1)
        if chord.size and chord.min() <= MIN_SEPARATION:
            k = int(np.argmin(chord))
            raise GeometryError(f"directions {i[k]} and {j[k]} are closer than {MIN_SEPARATION:g} rad")

    @classmethod
    def from_vectors(cls, vectors, normalize: bool = True) -> "DirectionSet":
        u = _as_matrix(vectors)
        if normalize:
            u = u / np.linalg.norm(u, axis=1, keepdims=True)
        return cls(u)

    @classmethod
    def from_angles(cls, angles) -> "DirectionSet":
        t = np.asarray(angles, dtype=float)
        return cls(np.column_stack([np.cos(t), np.sin(t)]))

    @classmethod
    def regular_polygon(cls, N: int, phase: float = 0.0) -> "DirectionSet":
        return cls.from_angles(phase + 2.0 * np.pi * np.arange(N) / N)

    @property
    def n(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def rotated(self, rotation) -> "DirectionSet":
        return DirectionSet.from_vectors(self.vectors @ np.asarray(rotation, dtype=float).T)


def _same_dirs(a: DirectionSet, b: DirectionSet) -> bool:
    return a is b or (a.vectors.shape == b.vectors.shape and np.array_equal(a.vectors, b.vectors))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Positive weights c_i on the directions u_i."""

    dirs: DirectionSet
    weights: np.ndarray

    def __post_init__(self):
        c = np.array(self.weights, dtype=float).ravel()
        if c.shape != (len(self.dirs),):
            raise GeometryError(f"expected {len(self.dirs)} weights, got {c.size}")
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise GeometryError("measure weights must be finite and strictly positive")
        c.setflags(write=False)
        object.__setattr__(self, "weights", c)

    @property
    def total(self) -> float:
        return float(math.fsum(self.weights))

    @property
    def n(self) -> int:
        return self.dirs.n


@dataclass(frozen=True, eq=False)
class SupportVector:
    """Support numbers h_i > 0 over a direction set."""

    dirs: DirectionSet
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float).ravel()
        if h.shape != (len(self.dirs),):
            raise GeometryError(f"expected {len(self.dirs)} support numbers, got {h.size}")
        if not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise GeometryError("support numbers must be finite and strictly positive")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.dirs.n

    def scaled(self, s: float) -> "SupportVector":
        return SupportVector(self.dirs, s * self.h)

    def with_h(self, h) -> "SupportVector":
        return SupportVector(self.dirs, h)


@dataclass(frozen=True, eq=False)
class Facet:
    """Active facet ``index``: boundary loop (segment when n = 2) and area.

    For n = 3, ``fan`` holds the triangles from the loop centroid, shape
    ``(k, 3, 3)``; for n = 2 it is the single segment, shape ``(1, 2, 2)``.
    """

    index: int
    loop: np.ndarray
    area: float
    fan: np.ndarray


@dataclass(frozen=True, eq=False)
class PolytopeGeometry:
    source: SupportVector
    vertices: np.ndarray
    facets: tuple
    active: np.ndarray
    effective_h: np.ndarray
    facet_of: dict = field(repr=False)

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def dirs(self) -> DirectionSet:
        return self.source.dirs

    def facet(self, i: int) -> Facet:
        return self.facets[self.facet_of[i]]

    def effective(self) -> SupportVector:
        return SupportVector(self.dirs, self.effective_h)


# ---------------------------------------------------------------------------
# positive spanning / hemisphere condition


def _concentration_direction_2d(u: np.ndarray):
    theta = np.sort(np.arctan2(u[:, 1], u[:, 0]))
    gaps = np.diff(np.concatenate([theta, [theta[0] + 2.0 * np.pi]]))
    k = int(np.argmax(gaps))
    if gaps[k] < np.pi - 1e-12:
        return None
    # every u_i is at least gap/2 >= pi/2 away from the middle of the empty arc
    phi = theta[k] + 0.5 * gaps[k] + np.pi
    return np.array([np.cos(phi), np.sin(phi)])


def _concentration_direction_3d(u: np.ndarray):
    try:
        hull = ConvexHull(u)
    except QhullError:
        # coplanar directions: every u_i lies on one plane, use its normal
        centered = u - u.mean(axis=0)
        normal = np.linalg.svd(centered)[2][-1]
        if normal @ u.mean(axis=0) < 0:
            normal = -normal
        return normal
    offsets = hull.equations[:, -1]
    k = int(np.argmax(offsets))
    if offsets[k] < -1e-12:
        return None
    # facet plane normal.x + offset <= 0 for every u_i with offset >= 0
    return -hull.equations[k, :-1]


def concentration_direction(dirs: DirectionSet):
    """A unit v with u_i . v >= 0 for all i, or None if no such v exists."""
    u = dirs.vectors
    v = _concentration_direction_2d(u) if dirs.n == 2 else _concentration_direction_3d(u)
    return None if v is None else v / np.linalg.norm(v)


def hemisphere_check(mu: DiscreteMeasure) -> bool:
    """True iff mu is NOT concentrated in any closed hemisphere."""
    return concentration_direction(mu.dirs) is None


# ---------------------------------------------------------------------------
# Wulff shape


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull2d(points: np.ndarray) -> list[int]:
    """Strictly convex hull, counter-clockwise (Andrew's monotone chain)."""
    order = sorted(range(len(points)), key=lambda i: (points[i, 0], points[i, 1]))
    scale = float(np.max(np.abs(points)))
    tol = 1e-15 * scale * scale

    def chain(idx):
        out: list[int] = []
        for i in idx:
            while len(out) >= 2 and _cross2(points[out[-2]], points[out[-1]], points[i]) <= tol:
                out.pop()
            out.append(i)
        return out

    lower = chain(order)
    upper = chain(order[::-1])
    return lower[:-1] + upper[:-1]


def _intersect2(u1, h1, u2, h2):
    det = u1[0] * u2[1] - u1[1] * u2[0]
    return np.array([(h1 * u2[1] - h2 * u1[1]) / det, (u1[0] * h2 - u2[0] * h1) / det])


def _wulff_2d(sv: SupportVector):
    u, h = sv.dirs.vectors, sv.h
    if _concentration_direction_2d(u) is not None:
        raise UnboundedBodyError("directions do not positively span R^2")
    hull = _hull2d(u / h[:, None])
    while True:
        k = len(hull)
        if k < 3:
            raise UnboundedBodyError("directions do not positively span R^2")
        verts = [_intersect2(u[hull[j]], h[hull[j]], u[hull[(j + 1) % k]], h[hull[(j + 1) % k]]) for j in range(k)]
        # facet hull[j] runs from verts[j-1] to verts[j]; drop any reversed by rounding
        lengths = []
        for j in range(k):
            i = hull[j]
            t = np.array([-u[i, 1], u[i, 0]])
            lengths.append(float((verts[j] - verts[j - 1]) @ t))
        bad = [j for j in range(k) if lengths[j] <= 0]
        if not bad:
            break
        hull = [hull[j] for j in range(k) if j != bad[0]]
    vertices = np.array(verts)
    facets = []
    for j in range(k):
        seg = np.array([verts[j - 1], verts[j]])
        facets.append(Facet(hull[j], seg, lengths[j], seg[None, :, :]))
    return vertices, facets


def tangent_frames(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-handed tangent frames (e1, e2) with e1 x e2 = normal, row-wise."""
    x, y, z = normals[:, 0], normals[:, 1], normals[:, 2]
    use_x = x * x < 0.75
    # e1 = normal x (1,0,0) or normal x (0,1,0)
    e1 = np.where(use_x[:, None],
                  np.column_stack([np.zeros_like(x), z, -y]),
                  np.column_stack([-z, np.zeros_like(x), x]))
    e1 /= np.sqrt(np.sum(e1 * e1, axis=1))[:, None]
    e2 = np.column_stack([y * e1[:, 2] - z * e1[:, 1],
                          z * e1[:, 0] - x * e1[:, 2],
                          x * e1[:, 1] - y * e1[:, 0]])
    return e1, e2


def _cluster(points: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge points closer than ``tol``; returns (representatives, label per point)."""
    pairs = cKDTree(points).query_pairs(tol, p=np.inf, output_type="ndarray")
    k = len(points)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k))
    _, labels = connected_components(graph, directed=False)
    first = np.full(labels.max() + 1, k)
    np.minimum.at(first, labels, np.arange(k))
    return points[first], labels


def _wulff_3d(sv: SupportVector):
    u, h = sv.dirs.vectors, sv.h
    dual = u / h[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:
        raise UnboundedBodyError("directions do not positively span R^3") from exc
    normals, offsets = hull.equations[:, :3], hull.equations[:, 3]
    scale_dual = float(np.max(np.linalg.norm(dual, axis=1)))
    if np.any(offsets >= -1e-12 * scale_dual):
        raise UnboundedBodyError("directions do not positively span R^3")
    corner = normals / (-offsets)[:, None]
    scale = float(np.max(np.abs(corner)))
    vertices, owner = _cluster(corner, 1e-11 * scale)
    # (direction, vertex) incidences, one per facet corner
    inc = np.unique(np.column_stack([hull.simplices.ravel(), np.repeat(owner, 3)]), axis=0)
    fi, vi = inc[:, 0], inc[:, 1]
    starts = np.flatnonzero(np.r_[True, fi[1:] != fi[:-1]])
    counts = np.diff(np.r_[starts, len(fi)])
    centers = np.add.reduceat(vertices[vi], starts, axis=0) / counts[:, None]
    e1, e2 = tangent_frames(u[fi[starts]])
    rep = np.repeat(np.arange(len(starts)), counts)
    d = vertices[vi] - centers[rep]
    ang = np.arctan2(np.sum(d * e2[rep], axis=1), np.sum(d * e1[rep], axis=1))
    order = np.lexsort((ang, rep))
    vi = vi[order]
    facets = []
    for k, (s0, cnt) in enumerate(zip(starts, counts)):
        if cnt < 3:
            continue
        i = int(fi[s0])
        loop = vertices[vi[s0:s0 + cnt]]
        c = centers[k]
        a, b = loop - c, np.roll(loop, -1, axis=0) - c
        cr = a[:, [1, 2, 0]] * b[:, [2, 0, 1]] - a[:, [2, 0, 1]] * b[:, [1, 2, 0]]
        area = float(0.5 * np.sum(cr @ u[i]))
        if area <= 1e-14 * scale * scale:
            continue
        fan = np.stack([np.broadcast_to(c, loop.shape), loop, np.roll(loop, -1, axis=0)], axis=1)
        facets.append(Facet(i, loop, area, fan))
    return vertices, facets


def wulff_shape(sv: SupportVector) -> PolytopeGeometry:
    """Resolve ``[h] = {x : x . u_i <= h_i for all i}`` into vertices and facets."""
    if sv.n == 2:
        vertices, facets = _wulff_2d(sv)
    else:
        vertices, facets = _wulff_3d(sv)
    u = sv.dirs.vectors
    eff = np.max(vertices @ u.T, axis=0)
    eff = np.minimum(eff, sv.h)
    active = np.zeros(len(u), dtype=bool)
    facet_of = {}
    for k, f in enumerate(facets):
        active[f.index] = True
        facet_of[f.index] = k
    # facet planes are exact for active directions
    eff[active] = sv.h[active]
    if np.min(eff) <= 0:
        raise GeometryError("origin is not interior to the Wulff shape")
    vertices.setflags(write=False)
    active.setflags(write=False)
    eff.setflags(write=False)
    return PolytopeGeometry(sv, vertices, tuple(facets), active, eff, facet_of)


# ---------------------------------------------------------------------------
# support / radial functions and metrics


def support_function(P: PolytopeGeometry, v) -> np.ndarray:
    """h_[h](v) = max over vertices of x . v (v may be a batch of vectors)."""
    v = np.asarray(v, dtype=float)
    return np.max(v @ P.vertices.T, axis=-1)


def radial_function(sv: SupportVector, u) -> float | np.ndarray:
    """rho(u) = min over u . u_i > 0 of h_i / (u . u_i)."""
    u = np.asarray(u, dtype=float)
    dots = u @ sv.dirs.vectors.T
    with np.errstate(divide="ignore"):
        ratios = np.where(dots > 0, sv.h / np.where(dots > 0, dots, 1.0), np.inf)
    rho = np.min(ratios, axis=-1)
    return float(rho) if np.ndim(rho) == 0 else rho


def ray_normal(sv: SupportVector, u) -> np.ndarray:
    """Normal u_i of the facet hit by the ray through u; TieError on a lower-dim face."""
    u = np.asarray(u, dtype=float)
    dots = sv.dirs.vectors @ u
    ratios = np.where(dots > 0, sv.h / np.where(dots > 0, dots, 1.0), np.inf)
    order = np.argsort(ratios)
    best, second = ratios[order[0]], ratios[order[1]]
    if second - best <= 1e-12 * best:
        raise TieError(f"ray hits a lower-dimensional face (directions {order[0]} and {order[1]})")
    return sv.dirs.vectors[order[0]].copy()


def radii(P: PolytopeGeometry) -> tuple[float, float]:
    """(r_K, R_K): distance from the origin to the boundary, and the circumradius."""
    R = float(np.max(np.linalg.norm(P.vertices, axis=1)))
    r = float(np.min(P.effective_h[P.active]))
    return r, R


def _sphere_sample(n: int, count: int) -> np.ndarray:
    if n == 2:
        t = 2.0 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(t), np.sin(t)])
    k = np.arange(count) + 0.5
    z = 1.0 - 2.0 * k / count
    phi = np.pi * (1.0 + 5.0 ** 0.5) * k
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def hausdorff_distance(A: SupportVector, B: SupportVector, samples: int = 20000) -> float:
    """max over the sphere of |h_[A] - h_[B]| for the two Wulff shapes."""
    if not _same_dirs(A.dirs, B.dirs) and A.n != B.n:
        raise GeometryError("bodies live in different dimensions")
    PA, PB = wulff_shape(A), wulff_shape(B)
    va, vb = PA.vertices, PB.vertices
    diff = (va[:, None, :] - vb[None, :, :]).reshape(-1, A.n)
    norms = np.linalg.norm(diff, axis=1)
    diff = diff[norms > 0] / norms[norms > 0, None]
    # stationary directions of (x - y) . v lie among +-(x - y)/|x - y|
    cand = [
        _sphere_sample(A.n, samples),
        A.dirs.vectors,
        B.dirs.vectors,
        va / np.linalg.norm(va, axis=1, keepdims=True),
        vb / np.linalg.norm(vb, axis=1, keepdims=True),
        diff,
        -diff,
    ]
    v = np.concatenate(cand)
    return float(np.max(np.abs(support_function(PA, v) - support_function(PB, v))))


def combine_lp(A: SupportVector, B: SupportVector, a: float, b: float, p: float) -> SupportVector:
    """Support data of the L_p combination a.A +_p b.B (p = 0: log-Minkowski)."""
    if a < 0 or b < 0:
        raise GeometryError("combination coefficients must be nonnegative")
    if not _same_dirs(A.dirs, B.dirs):
        raise GeometryError("combine_lp requires a shared direction set")
    if p == 0:
        h = A.h ** a * B.h ** b
    else:
        h = (a * A.h ** p + b * B.h ** p) ** (1.0 / p)
    return SupportVector(A.dirs, h)


def slab(n: int, v, c: float, R: float) -> SupportVector:
    """Box {|x . e| <= R} cut by the halfspace {x . v <= c}, with e_1 = v.

    Approximates the halfspace {x . v <= c} once R is far out in the tails.
    """
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    basis = np.linalg.svd(v[None, :])[2]  # rows: v, then an orthonormal complement
    if basis[0] @ v < 0:
        basis[0] = -basis[0]
    dirs = np.concatenate([basis, -basis])
    h = np.full(2 * n, float(R))
    h[0] = c
    return SupportVector(DirectionSet.from_vectors(dirs), h)


def scaled_geometry(P: PolytopeGeometry, s: float) -> PolytopeGeometry:
    """The Wulff shape of s*h, reusing the combinatorics of P (s > 0)."""
    if not s > 0:
        raise GeometryError("scale factor must be positive")
    facets = tuple(Facet(f.index, s * f.loop, f.area * s ** (P.n - 1), s * f.fan) for f in P.facets)
    verts = s * P.vertices
    eff = s * P.effective_h
    verts.setflags(write=False)
    eff.setflags(write=False)
    return PolytopeGeometry(P.source.scaled(s), verts, facets, P.active, eff, P.facet_of)
