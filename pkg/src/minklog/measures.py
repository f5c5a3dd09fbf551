"""Generalized Gaussian volume, surface, L_p surface and cone measures of polytopes.

Everything reduces to one-dimensional angular integrals. The body is cut into
cones over its facets; inside the cone over facet ``i`` (plane at distance
``h_i``) the density only depends on the distance from the foot point
``h_i u_i``, so the radial part of each integral has a closed form in terms of
the radial moments of :mod:`minklog.density`:

* n = 2 volume: ``q * int F_2(h / cos a) da`` over the edge's angular range;
* n = 2 surface: ``q * int w(sqrt(h^2 + t^2)) dt`` along the edge;
* n = 3: each facet is fanned from its foot point into signed triangles and
  the in-plane radial integral is done exactly, leaving an angle integral.

For b > 0 the cells are split where the support sphere crosses them, so every
integrand is smooth on every piece.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import (
    GGParams,
    density,
    radial_moment,
    radial_moment_total,
    radial_weight,
    sphere_area,
    support_radius,
)
from .errors import InactiveFacetError, ParameterDomainError
from .geometry import DirectionSet, PolytopeGeometry, tangent_frames
from .quadrature import QuadratureSpec, integrate_cells


@dataclass(frozen=True, eq=False)
class MeasureVector:
    """Mass carried by each direction of a direction set."""

    dirs: DirectionSet
    values: np.ndarray
    total: float

    @classmethod
    def from_values(cls, dirs: DirectionSet, values) -> "MeasureVector":
        v = np.asarray(values, dtype=float)
        v.setflags(write=False)
        return cls(dirs, v, float(math.fsum(v)))

    def normalized(self) -> np.ndarray:
        return self.values / self.total


@dataclass(frozen=True)
class McSpec:
    samples: int = 1_000_000
    seed: int = 0
    stratification: int = 16

    def __post_init__(self):
        if self.samples < 1000:
            raise ValueError("Monte Carlo oracles need at least 1e3 samples")
        if self.stratification < 1:
            raise ValueError("stratification must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise ValueError("seed must be a 64-bit unsigned integer")


def _quad(P: PolytopeGeometry, quad: QuadratureSpec | None) -> QuadratureSpec:
    return quad if quad is not None else QuadratureSpec.default(P.n)


def _tail_diff(lo_a, up_a, lo_b, up_b):
    """(value at a) - (value at b) of a cumulative, from its (lower, upper) splits."""
    return np.where(lo_b > up_b, up_b - up_a, lo_a - lo_b)


def _moment_pair(params, r, k):
    lo, up = radial_moment(params, r, k)
    return np.asarray(lo, dtype=float), np.asarray(up, dtype=float)


def _split(lo, hi, cuts):
    """Split each [lo_j, hi_j] at the (possibly nan) cut points inside it."""
    edges = [lo[:, None], hi[:, None]]
    if cuts is not None:
        c = np.where((cuts > lo[:, None]) & (cuts < hi[:, None]), cuts, np.nan)
        edges.insert(1, c)
    pts = np.sort(np.concatenate(edges, axis=1), axis=1)  # nan sorts last
    starts, ends, owner = [], [], []
    for j, row in enumerate(pts):
        row = row[~np.isnan(row)]
        for a, b in zip(row[:-1], row[1:]):
            if b > a:
                starts.append(a)
                ends.append(b)
                owner.append(j)
    return np.array(starts), np.array(ends), np.array(owner, dtype=int)


def _foot_fan(P: PolytopeGeometry):
    """Signed triangles (foot point, v_k, v_k+1) of every active facet, n = 3.

    Returns per-triangle arrays: facet index, facet distance h, edge distance
    d from the foot point, and the oriented angle range (a0, a1) measured from
    the perpendicular to the edge, with |a| < pi/2.
    """
    if not P.facets:
        z = np.zeros(0)
        return z.astype(int), z, z, z, z
    index = np.array([f.index for f in P.facets])
    sizes = np.array([len(f.loop) for f in P.facets])
    cur = np.concatenate([f.loop for f in P.facets])
    nxt = np.concatenate([np.roll(f.loop, -1, axis=0) for f in P.facets])
    fidx = np.repeat(index, sizes)
    e1, e2 = tangent_frames(P.dirs.vectors[index])
    e1, e2 = np.repeat(e1, sizes, axis=0), np.repeat(e2, sizes, axis=0)
    hh = P.effective_h[fidx]
    # in-plane coordinates relative to the foot point h*u (which has zero tangential part)
    a = np.column_stack([np.sum(cur * e1, axis=1), np.sum(cur * e2, axis=1)])
    b = np.column_stack([np.sum(nxt * e1, axis=1), np.sum(nxt * e2, axis=1)])
    e = b - a
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    elen2 = np.sum(e * e, axis=1)
    ok = elen2 > 0
    a, b, e, cross, elen2 = a[ok], b[ok], e[ok], cross[ok], elen2[ok]
    fidx, hh = fidx[ok], hh[ok]
    d = np.abs(cross) / np.sqrt(elen2)
    t = -np.sum(a * e, axis=1) / elen2
    foot = a + t[:, None] * e
    phi = np.arctan2(foot[:, 1], foot[:, 0])
    ang_a = np.angle(np.exp(1j * (np.arctan2(a[:, 1], a[:, 0]) - phi)))
    ang_b = np.angle(np.exp(1j * (np.arctan2(b[:, 1], b[:, 0]) - phi)))
    keep = d > 1e-15 * np.maximum(hh, 1.0)
    return fidx[keep].astype(int), hh[keep], d[keep], ang_a[keep], ang_b[keep]


def _oriented_cells(a0, a1, cuts):
    sign = np.where(a1 >= a0, 1.0, -1.0)
    lo, hi = np.minimum(a0, a1), np.maximum(a0, a1)
    start, end, owner = _split(lo, hi, cuts)
    return start, end, owner, sign


def _kink_angles(dist, radius_sq):
    """Angles +-arccos(dist / sqrt(radius_sq)) where the support sphere cuts a cell."""
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.arccos(np.clip(dist / np.sqrt(radius_sq), -1.0, 1.0))
    c = np.where(radius_sq > dist ** 2, c, np.nan)
    return np.column_stack([-c, c])


# ---------------------------------------------------------------------------
# volume


def _volume_2d(P, params, quad):
    u = P.dirs.vectors
    idx = np.array([f.index for f in P.facets])
    h = P.effective_h[idx]
    v0 = np.array([f.loop[0] for f in P.facets])
    v1 = np.array([f.loop[1] for f in P.facets])
    uu = u[idx]
    a0 = np.arctan2(uu[:, 0] * v0[:, 1] - uu[:, 1] * v0[:, 0], np.sum(uu * v0, axis=1))
    a1 = np.arctan2(uu[:, 0] * v1[:, 1] - uu[:, 1] * v1[:, 0], np.sum(uu * v1, axis=1))
    Rs = support_radius(params)
    cuts = _kink_angles(h, Rs ** 2) if math.isfinite(Rs) else None
    start, end, owner = _split(a0, a1, cuts)
    hc = h[owner]

    def f(x, c):
        rho = hc[c] / np.cos(x)
        lo, _ = _moment_pair(params, rho, 2)
        return lo

    vals = integrate_cells(f, start, end, quad)
    return params.q * math.fsum(vals)


def _volume_3d(P, params, quad):
    fidx, h, d, a0, a1 = _foot_fan(P)
    Rs = support_radius(params)
    cuts = _kink_angles(d, Rs ** 2 - h ** 2) if math.isfinite(Rs) else None
    start, end, owner, sign = _oriented_cells(a0, a1, cuts)
    hc, dc = h[owner], d[owner]
    F3h_lo, F3h_up = _moment_pair(params, hc, 3)
    Psh_lo, Psh_up = _moment_pair(params, hc, 2)

    def f(x, c):
        H = hc[c]
        T = dc[c] / np.cos(x)
        R = np.sqrt(H * H + T * T)
        F_lo, F_up = _moment_pair(params, R, 3)
        P_lo, P_up = _moment_pair(params, R, 2)
        dF = _tail_diff(F_lo, F_up, F3h_lo[c], F3h_up[c])
        dP = _tail_diff(P_lo, P_up, Psh_lo[c], Psh_up[c])
        # int_H^R F(r) H / r^2 dr, integrated by parts
        return F3h_lo[c] * (T * T / (R * (R + H))) + H * (dP - dF / R)

    raw = integrate_cells(f, start, end, quad)
    return params.q * math.fsum(raw * sign[owner])


def gg_volume(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec | None = None) -> float:
    """gamma_{b,m}(P) = int_P g_{b,m}, strictly inside (0, 1)."""
    _match(P, params)
    quad = _quad(P, quad)
    val = _volume_2d(P, params, quad) if P.n == 2 else _volume_3d(P, params, quad)
    tiny = np.finfo(float).tiny
    return float(min(max(val, tiny), 1.0 - np.finfo(float).epsneg))


# ---------------------------------------------------------------------------
# surface measures


def _surface_2d(P, params, quad):
    u = P.dirs.vectors
    idx = np.array([f.index for f in P.facets])
    h = P.effective_h[idx]
    uu = u[idx]
    tang = np.column_stack([-uu[:, 1], uu[:, 0]])
    t0 = np.array([f.loop[0] @ tang[k] for k, f in enumerate(P.facets)])
    t1 = np.array([f.loop[1] @ tang[k] for k, f in enumerate(P.facets)])
    Rs = support_radius(params)
    cuts = None
    if math.isfinite(Rs):
        with np.errstate(invalid="ignore"):
            tk = np.where(h < Rs, np.sqrt(np.maximum(Rs ** 2 - h ** 2, 0.0)), np.nan)
        cuts = np.column_stack([-tk, tk])
    start, end, owner = _split(t0, t1, cuts)
    hc = h[owner]

    def f(x, c):
        return radial_weight(params, np.sqrt(hc[c] ** 2 + x * x))

    raw = integrate_cells(f, start, end, quad)
    out = np.zeros(len(u))
    np.add.at(out, idx[owner], raw)
    return params.q * out


def _surface_3d(P, params, quad):
    fidx, h, d, a0, a1 = _foot_fan(P)
    Rs = support_radius(params)
    cuts = _kink_angles(d, Rs ** 2 - h ** 2) if math.isfinite(Rs) else None
    start, end, owner, sign = _oriented_cells(a0, a1, cuts)
    hc, dc = h[owner], d[owner]
    Ph_lo, Ph_up = _moment_pair(params, hc, 2)

    def f(x, c):
        H = hc[c]
        T = dc[c] / np.cos(x)
        P_lo, P_up = _moment_pair(params, np.sqrt(H * H + T * T), 2)
        return _tail_diff(P_lo, P_up, Ph_lo[c], Ph_up[c])

    raw = integrate_cells(f, start, end, quad) * sign[owner]
    out = np.zeros(len(P.dirs))
    np.add.at(out, fidx[owner], raw)
    return params.q * out


def _surface_values(P, params, quad):
    _match(P, params)
    quad = _quad(P, quad)
    vals = _surface_2d(P, params, quad) if P.n == 2 else _surface_3d(P, params, quad)
    vals = np.maximum(vals, 0.0)
    vals[~P.active] = 0.0
    return vals


def gg_surface_measure(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec | None = None) -> MeasureVector:
    """S_{b,m}(P, {u_i}) = int over facet i of g_{b,m} dH^{n-1}."""
    return MeasureVector.from_values(P.dirs, _surface_values(P, params, quad))


def lp_surface_measure(P: PolytopeGeometry, params: GGParams, p: float, quad: QuadratureSpec | None = None) -> MeasureVector:
    """S_{p,b,m}: (1/p) h_i^(1-p) S_i; the sign convention of 1/p is kept for p < 0."""
    if p == 0:
        raise ParameterDomainError("p = 0 is excluded; use gg_cone_measure for the log case")
    S = _surface_values(P, params, quad)
    return MeasureVector.from_values(P.dirs, S * P.effective_h ** (1.0 - p) / p)


def gg_cone_measure(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec | None = None) -> MeasureVector:
    """G_{b,m}(P, {u_i}) = h_i S_i, since x . nu = h_i on facet i."""
    S = _surface_values(P, params, quad)
    return MeasureVector.from_values(P.dirs, P.effective_h * S)


def surface_and_cone(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec | None = None):
    """Both measures from one shared surface quadrature."""
    S = _surface_values(P, params, quad)
    return MeasureVector.from_values(P.dirs, S), MeasureVector.from_values(P.dirs, P.effective_h * S)


def volume_gradient(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec | None = None) -> np.ndarray:
    """d gamma([h]) / d h_i, which is the surface measure S_i (0 on inactive facets)."""
    params.require_variational()
    return _surface_values(P, params, quad)


def _match(P: PolytopeGeometry, params: GGParams) -> None:
    if P.n != params.n:
        raise ParameterDomainError(f"body lives in R^{P.n} but the density in R^{params.n}")


# ---------------------------------------------------------------------------
# balls


def ball_volume(r: float, params: GGParams) -> float:
    """gamma_{b,m}(r B^n) = q * n omega_n * F(r)."""
    if r < 0:
        raise ParameterDomainError("ball radius must be nonnegative")
    lo, up = radial_moment(params, r, params.n)
    return params.q * sphere_area(params.n) * float(lo)


def ball_volume_complement(r: float, params: GGParams) -> float:
    """1 - gamma_{b,m}(r B^n), accurate in the far tail."""
    lo, up = radial_moment(params, r, params.n)
    return params.q * sphere_area(params.n) * float(up)


def ball_radius_for_volume(kappa: float, params: GGParams) -> float:
    """The radius r with gamma_{b,m}(r B^n) = kappa."""
    from scipy.optimize import brentq

    if not 0.0 < kappa < 1.0:
        raise ParameterDomainError("kappa must lie in (0, 1)")
    hi = 1.0
    Rs = support_radius(params)
    while ball_volume(min(hi, Rs), params) < kappa and hi < Rs:
        hi *= 2.0
    hi = min(hi, Rs)
    return brentq(lambda r: ball_volume(r, params) - kappa, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def tail_radius(params: GGParams, eps: float = 1e-8) -> float:
    """Smallest r with 1 - gamma_{b,m}(r B^n) <= eps (the support radius if sooner)."""
    from scipy.optimize import brentq

    if not 0.0 < eps < 1.0:
        raise ParameterDomainError("eps must lie in (0, 1)")
    Rs = support_radius(params)
    hi = 1.0
    while hi < Rs and ball_volume_complement(hi, params) > eps:
        hi *= 2.0
    hi = min(hi, Rs)
    # the tail mass is zero at a finite support radius, so clamp before the log
    target = math.log(eps)
    f = lambda r: math.log(max(ball_volume_complement(r, params), 1e-300)) - target
    return brentq(f, 0.0, hi, xtol=1e-12, rtol=1e-12)


# ---------------------------------------------------------------------------
# Monte Carlo oracles


def _rng(mc: McSpec, stream: int = 0) -> np.random.Generator:
    # Philox is counter based: the stream is fixed by (seed, stream) alone
    return np.random.Generator(np.random.Philox(key=[mc.seed % 2 ** 64, stream]))


def _strata_counts(mc: McSpec, n_strata: int) -> int:
    return max(mc.samples // n_strata, 2)


def mc_volume_oracle(P: PolytopeGeometry, params: GGParams, mc: McSpec, chunk: int = 200_000) -> tuple[float, float]:
    """Stratified uniform sampling of g * 1_P over the bounding box; (estimate, stderr)."""
    _match(P, params)
    n = P.n
    lo = P.vertices.min(axis=0)
    hi = P.vertices.max(axis=0)
    Rs = support_radius(params)
    if math.isfinite(Rs):
        lo, hi = np.maximum(lo, -Rs), np.minimum(hi, Rs)
    if np.any(hi <= lo):
        return 0.0, 0.0
    k = mc.stratification
    per = _strata_counts(mc, k ** n)
    cells = np.stack(np.meshgrid(*[np.arange(k)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    width = (hi - lo) / k
    cell_vol = float(np.prod(width))
    u, hvec = P.dirs.vectors, P.source.h
    rng = _rng(mc)
    sums = np.zeros(len(cells))
    sq = np.zeros(len(cells))
    step = max(1, chunk // per)
    for s in range(0, len(cells), step):
        block = cells[s:s + step]
        x = lo + (block[:, None, :] + rng.random((len(block), per, n))) * width
        inside = np.all(x @ u.T <= hvec, axis=-1)
        val = np.where(inside, density(params, x), 0.0) * cell_vol
        sums[s:s + step] = val.sum(axis=1)
        sq[s:s + step] = ((val - val.mean(axis=1, keepdims=True)) ** 2).sum(axis=1)
    means = sums / per
    var = sq / (per - 1)
    return float(math.fsum(means)), float(math.sqrt(math.fsum(var / per)))


def mc_surface_oracle(P: PolytopeGeometry, params: GGParams, facet: int, mc: McSpec) -> tuple[float, float]:
    """Uniform sampling of g over facet ``facet`` times its area; (estimate, stderr)."""
    _match(P, params)
    if not P.active[facet]:
        raise InactiveFacetError(f"direction {facet} carries no facet")
    f = P.facet(facet)
    rng = _rng(mc, stream=1 + int(facet))
    k = mc.stratification
    if P.n == 2:
        per = _strata_counts(mc, k)
        t = (np.arange(k)[:, None] + rng.random((k, per))) / k
        x = f.loop[0] + t[..., None] * (f.loop[1] - f.loop[0])
        val = density(params, x) * f.area
        means = val.mean(axis=1)
        var = val.var(axis=1, ddof=1)
        return float(np.mean(means)), float(math.sqrt(np.sum(var / per)) / k)
    tri = f.fan
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    areas = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)
    counts = np.maximum((mc.samples * areas / areas.sum()).astype(int), 2)
    est, var = 0.0, 0.0
    for j in range(len(tri)):
        r1, r2 = rng.random(counts[j]), rng.random(counts[j])
        s = np.sqrt(r1)
        x = tri[j, 0] + (s * (1 - r2))[:, None] * e1[j] + (s * r2)[:, None] * e2[j]
        val = density(params, x) * areas[j]
        est += val.mean()
        var += val.var(ddof=1) / counts[j]
    return float(est), float(math.sqrt(var))


def mc_total_mass(params: GGParams, mc: McSpec) -> tuple[float, float]:
    """Integral of g over all of R^n by stratified polar sampling; (estimate, stderr).

    The radius is sampled as r = t / (1 - t) for t in (0, 1), or r = R t when
    the support radius R is finite, so no truncation is needed.
    """
    n = params.n
    Rs = support_radius(params)
    k = mc.stratification * 8
    per = _strata_counts(mc, k)
    rng = _rng(mc, stream=2 ** 32)
    t = (np.arange(k)[:, None] + rng.random((k, per))) / k
    if math.isfinite(Rs):
        r, jac = Rs * t, np.full_like(t, Rs)
    else:
        r, jac = t / (1.0 - t), 1.0 / (1.0 - t) ** 2
    z = rng.normal(size=(k, per, n))
    dirs = z / np.linalg.norm(z, axis=-1, keepdims=True)
    x = r[..., None] * dirs
    val = density(params, x) * sphere_area(n) * r ** (n - 1) * jac
    means = val.mean(axis=1)
    var = val.var(axis=1, ddof=1)
    return float(np.mean(means)), float(math.sqrt(np.sum(var / per)) / k)


def mc_ball_oracle(r: float, params: GGParams, mc: McSpec) -> tuple[float, float]:
    """gamma_{b,m}(r B^n) by uniform sampling in the ball; (estimate, stderr)."""
    n = params.n
    rng = _rng(mc, stream=2 ** 33)
    z = rng.normal(size=(mc.samples, n))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    rad = r * rng.random(mc.samples) ** (1.0 / n)
    vol = sphere_area(n) / n * r ** n
    val = density(params, rad[:, None] * u) * vol
    return float(val.mean()), float(val.std(ddof=1) / math.sqrt(mc.samples))
