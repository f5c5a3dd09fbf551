"""Constrained entropy minimization for the normalized log-Minkowski problem.

Given a discrete measure ``mu = sum c_i delta_{u_i}``, minimize
``Phi(h) = sum c_i log h_i`` over support vectors with
``gamma_{b,m}([h]) = kappa0``. In log coordinates ``phi = log h`` the
objective gradient is ``c`` and the constraint gradient is the cone measure
``G``, so first-order optimality is ``c / |mu| = G / G_total``.

Every iterate is kept feasible: a trial point ``phi + tau d`` is projected
back onto the constraint by a scalar rescaling ``h -> s h`` (a 1-D monotone
root find), then replaced by the support function of its Wulff shape.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .density import GGParams
from .errors import (
    ConstraintBracketError,
    GeometryError,
    HemisphereConcentrationError,
    MinklogError,
    ParameterDomainError,
)
from .geometry import (
    DiscreteMeasure,
    PolytopeGeometry,
    SupportVector,
    concentration_direction,
    radii,
    scaled_geometry,
    wulff_shape,
)
from .measures import MeasureVector, ball_radius_for_volume, gg_volume, surface_and_cone
from .parallel import ordered_map
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

C0_FLOOR = 1e-6
CONSTRAINT_TOL = 1e-10
ARMIJO = 1e-4


class C0FloorError(MinklogError):
    """An accepted iterate came closer than the C^0 floor to the origin."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolveConfig:
    kappa0: float = 0.8
    max_iters: int = 5000
    el_tol: float | None = None
    step0: float = 0.5
    backtrack: float = 0.5
    min_step: float = 1e-12
    quad: QuadratureSpec | None = None
    direction: str = "newton"
    allow_small_kappa: bool = False
    fd_step: float = 1e-6

    def __post_init__(self):
        lo = 0.0 if self.allow_small_kappa else 0.75
        if not lo < self.kappa0 < 1.0:
            raise ParameterDomainError(
                f"kappa0 must lie in ({lo:g}, 1), got {self.kappa0}"
                + ("" if self.allow_small_kappa else " (set allow_small_kappa to override)")
            )
        if self.el_tol is not None and not self.el_tol > 0:
            raise ParameterDomainError("el_tol must be positive")
        if not 0 < self.backtrack < 1:
            raise ParameterDomainError("backtrack must lie in (0, 1)")
        if not (self.step0 > 0 and self.min_step > 0 and self.max_iters >= 0):
            raise ParameterDomainError("step0, min_step must be positive and max_iters >= 0")
        if self.direction not in ("newton", "gradient"):
            raise ParameterDomainError(f"unknown direction rule {self.direction!r}")

    def resolved(self, n: int) -> "SolveConfig":
        return replace(
            self,
            el_tol=self.el_tol if self.el_tol is not None else (1e-8 if n == 2 else 1e-5),
            quad=self.quad if self.quad is not None else _solver_quad(n),
        )


def _solver_quad(n: int) -> QuadratureSpec:
    # the line search compares entropies to ~1e-14, so run the rules tighter
    return QuadratureSpec(target_rel_tol=1e-12 if n == 2 else 1e-10)


@dataclass
class TraceEntry:
    entropy: float
    gamma: float
    residual: float
    step: float
    min_h: float
    R_K: float
    decrease: float = 0.0
    bound_holds: bool = True

    def as_dict(self) -> dict:
        return {
            "entropy": self.entropy,
            "gamma": self.gamma,
            "residual": self.residual,
            "step": self.step,
            "min_h": self.min_h,
            "R_K": self.R_K,
            "decrease": self.decrease,
            "bound_holds": self.bound_holds,
        }


@dataclass
class SolveReport:
    h_star: SupportVector
    geometry: PolytopeGeometry
    gamma: float
    surface: MeasureVector
    cone: MeasureVector
    entropy: float
    el_residual: float
    iterations: int
    status: str
    config: SolveConfig
    trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


# ---------------------------------------------------------------------------
# scalar pieces


def _check_dirs(mu: DiscreteMeasure, sv: SupportVector) -> None:
    if mu.dirs is not sv.dirs and not np.array_equal(mu.dirs.vectors, sv.dirs.vectors):
        raise GeometryError("measure and support vector use different direction sets")


def entropy(mu: DiscreteMeasure, sv: SupportVector, effective: bool = False) -> float:
    """Phi_mu(h) = sum c_i log h_i; ``effective=True`` evaluates it on h_[h]."""
    _check_dirs(mu, sv)
    h = wulff_shape(sv).effective_h if effective else sv.h
    return math.fsum(mu.weights * np.log(h))


def _gamma_scaled(P: PolytopeGeometry, params: GGParams, quad: QuadratureSpec, s: float) -> float:
    return gg_volume(scaled_geometry(P, s), params, quad)


def _rescale_factor(P: PolytopeGeometry, params: GGParams, kappa0: float, quad: QuadratureSpec) -> float:
    if not 0.0 < kappa0 < 1.0:
        raise ConstraintBracketError(f"kappa0 = {kappa0} is outside (0, 1)")
    f = lambda s: _gamma_scaled(P, params, quad, s) - kappa0
    lo, hi = 1.0, 1.0
    flo = fhi = f(1.0)
    if flo == 0.0:
        return 1.0
    for _ in range(200):
        if fhi > 0:
            break
        hi *= 2.0
        fhi = f(hi)
    for _ in range(200):
        if flo < 0:
            break
        lo *= 0.5
        flo = f(lo)
    if not (flo < 0 < fhi):
        raise ConstraintBracketError("could not bracket the volume constraint")
    return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def rescale_to_constraint(sv: SupportVector, params: GGParams, kappa0: float, quad: QuadratureSpec | None = None) -> float:
    """The s > 0 with gamma_{b,m}([s h]) = kappa0."""
    params.require_variational()
    quad = quad or _solver_quad(sv.n)
    return _rescale_factor(wulff_shape(sv), params, kappa0, quad)


def euler_lagrange_residual(sv: SupportVector, mu: DiscreteMeasure, params: GGParams, quad: QuadratureSpec | None = None) -> float:
    """max_i |c_i/|mu| - G_i/G_total| for the Wulff shape of ``sv``."""
    _check_dirs(mu, sv)
    _, G = surface_and_cone(wulff_shape(sv), params, quad or _solver_quad(sv.n))
    if G.total <= 0:
        raise GeometryError("cone measure vanishes; residual undefined")
    return float(np.max(np.abs(mu.weights / mu.total - G.values / G.total)))


@dataclass(frozen=True)
class EntropyBound:
    lhs: float
    rhs: float
    holds: bool
    C: float
    C_tilde: float
    alpha0: float
    v0: tuple


def entropy_bound_check(sv: SupportVector, mu: DiscreteMeasure, geometry: PolytopeGeometry | None = None) -> EntropyBound:
    """Evaluate both sides of the entropy lower bound with explicit constants.

    v0 points at the farthest vertex (so h(v0) = R_K); alpha0 is the largest of
    0.9, 0.8, ..., 0.1 whose cap {u . v0 >= alpha0} carries mass, falling back
    to the largest u_i . v0 when all of those caps are empty.
    """
    _check_dirs(mu, sv)
    P = geometry if geometry is not None else wulff_shape(sv)
    r, R = radii(P)
    far = P.vertices[int(np.argmax(np.linalg.norm(P.vertices, axis=1)))]
    v0 = far / np.linalg.norm(far)
    cosines = mu.dirs.vectors @ v0
    alpha0 = None
    for alpha in (0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1):
        if np.any(cosines >= alpha):
            alpha0 = alpha
            break
    if alpha0 is None:
        alpha0 = float(np.max(cosines))
    if not alpha0 > 0:
        raise HemisphereConcentrationError(-v0)
    total = mu.total
    C = math.fsum(mu.weights[cosines >= alpha0]) / total
    C_tilde = C * math.log(alpha0 / 2.0)
    lhs = math.fsum(mu.weights * np.log(P.effective_h)) / total
    rhs = math.log(r) + C * math.log(R / r) + C_tilde
    return EntropyBound(lhs, rhs, lhs >= rhs - 1e-12, C, C_tilde, alpha0, tuple(float(x) for x in v0))


# ---------------------------------------------------------------------------
# the solver


@dataclass
class _State:
    h: np.ndarray
    P: PolytopeGeometry
    gamma: float
    S: MeasureVector
    G: MeasureVector
    entropy: float


def _state(P: PolytopeGeometry, mu: DiscreteMeasure, params: GGParams, quad: QuadratureSpec) -> _State:
    S, G = surface_and_cone(P, params, quad)
    return _State(
        h=np.array(P.effective_h),
        P=P,
        gamma=gg_volume(P, params, quad),
        S=S,
        G=G,
        entropy=math.fsum(mu.weights * np.log(P.effective_h)),
    )


def _projected(sv: SupportVector) -> PolytopeGeometry:
    """Wulff shape of sv, re-expressed over its own support numbers."""
    P = wulff_shape(sv)
    if np.array_equal(P.effective_h, sv.h):
        return P
    return wulff_shape(P.effective())


def _normalized_cone(dirs, phi, params, quad) -> np.ndarray:
    P = wulff_shape(SupportVector(dirs, np.exp(phi)))
    _, G = surface_and_cone(P, params, quad)
    return G.values / G.total


def _reduced_hessian(state: _State, mu: DiscreteMeasure, params: GGParams, quad: QuadratureSpec, eps: float) -> np.ndarray:
    """Hessian of phi -> Phi after rescaling, by central differences of G/G_total."""
    dirs = state.P.dirs
    phi = np.log(state.h)
    N = len(phi)

    def column(j):
        e = np.zeros(N)
        e[j] = eps
        return (_normalized_cone(dirs, phi + e, params, quad) - _normalized_cone(dirs, phi - e, params, quad)) / (2 * eps)

    D = np.column_stack(ordered_map(column, range(N)))
    ghat = state.G.values / state.G.total
    J = -mu.total * (D - np.outer(D.sum(axis=1), ghat))
    return 0.5 * (J + J.T)


def _newton_direction(H: np.ndarray, grad: np.ndarray) -> np.ndarray:
    N = len(grad)
    proj = np.eye(N) - np.full((N, N), 1.0 / N)
    w, V = np.linalg.eigh(proj @ H @ proj)
    # drop the scaling direction (eigenvector ~ constant), floor the rest
    const = np.abs(V.sum(axis=0)) / math.sqrt(N) > 0.5
    scale = float(np.max(np.abs(w))) if w.size else 1.0
    floor = 1e-8 * scale
    lam = np.maximum(np.abs(w), floor)
    coef = -(V.T @ grad) / lam
    coef[const] = 0.0
    return V @ coef


def solve(mu: DiscreteMeasure, params: GGParams, cfg: SolveConfig | None = None) -> SolveReport:
    """Find a body with gamma = kappa0 whose normalized cone measure matches mu/|mu|."""
    cfg = (cfg or SolveConfig()).resolved(mu.n)
    if params.n != mu.n:
        raise ParameterDomainError(f"density dimension {params.n} does not match measure dimension {mu.n}")
    params.require_variational()
    v = concentration_direction(mu.dirs)
    if v is not None:
        raise HemisphereConcentrationError(v)
    quad = cfg.quad
    c = mu.weights
    total = mu.total
    dirs = mu.dirs

    r0 = ball_radius_for_volume(cfg.kappa0, params)
    P0 = wulff_shape(SupportVector(dirs, np.full(len(dirs), r0)))
    P = scaled_geometry(P0, _rescale_factor(P0, params, cfg.kappa0, quad))
    P = _projected(P.source)
    state = _state(P, mu, params, quad)
    trace: list[TraceEntry] = []
    status = "max_iters"
    step = 0.0
    decrease = 0.0
    it = 0
    while True:
        ghat = state.G.values / state.G.total
        resid_vec = c / total - ghat
        residual = float(np.max(np.abs(resid_vec)))
        r_K, R_K = radii(state.P)
        bound = entropy_bound_check(state.P.source, mu, state.P)
        min_h = float(np.min(state.h))
        trace.append(TraceEntry(state.entropy, state.gamma, residual, step, min_h, R_K, decrease, bound.holds))
        logger.debug("iter %d  Phi=%.15g  residual=%.3e  step=%.3g", it, state.entropy, residual, step)
        if not cfg.allow_small_kappa and min_h < C0_FLOOR:
            raise C0FloorError(f"iterate {it}: min support number {min_h:.3e} below floor {C0_FLOOR:g}", trace)
        if residual <= cfg.el_tol:
            status = "converged"
            break
        if it >= cfg.max_iters:
            status = "max_iters"
            break
        grad = total * resid_vec  # = c - (|mu| / G_total) G
        d, tau = -grad, cfg.step0
        if cfg.direction == "newton":
            H = _reduced_hessian(state, mu, params, quad, cfg.fd_step)
            dn = _newton_direction(H, grad)
            if np.all(np.isfinite(dn)) and dn @ grad < 0:
                d, tau = dn, 1.0
        slope = float(d @ grad)
        # log-space trust cap: no support number changes by more than a factor e
        tau = min(tau, 1.0 / float(np.max(np.abs(d))))
        phi = np.log(state.h)
        accepted = None
        while tau >= cfg.min_step:
            try:
                trial = SupportVector(dirs, np.exp(phi + tau * d))
                Pt = wulff_shape(trial)
                s = _rescale_factor(Pt, params, cfg.kappa0, quad)
                Pt = _projected(scaled_geometry(Pt, s).source)
            except GeometryError:
                tau *= cfg.backtrack
                continue
            # entropy change from log-ratios: no cancellation between large sums
            delta = math.fsum(c * (math.log(s) + tau * d + np.log(Pt.effective_h / (s * trial.h))))
            if delta < 0 and delta <= ARMIJO * tau * slope:
                accepted = (Pt, delta)
                break
            tau *= cfg.backtrack
        if accepted is None:
            status = "line_search_stalled"
            break
        Pt, decrease = accepted
        state = _state(Pt, mu, params, quad)
        step = tau
        it += 1

    return SolveReport(
        h_star=SupportVector(dirs, state.h),
        geometry=state.P,
        gamma=state.gamma,
        surface=state.S,
        cone=state.G,
        entropy=state.entropy,
        el_residual=trace[-1].residual,
        iterations=it,
        status=status,
        config=cfg,
        trace=trace,
    )
