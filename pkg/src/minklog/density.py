"""Generalized Gaussian densities g_{b,m} on R^n and their radial integrals.

The density is radial, ``g(x) = q * w(|x|)`` with the unnormalized weight

    w(r) = [1 - (b/m) r^m]_+^(1/b - n/m - 1)     (b != 0)
    w(r) = exp(-r^m / m)                          (b == 0)

Volumes reduce to spherical integrals of the radial moments
``M_k(s) = int_0^s w(r) r^(k-1) dr``, which have closed forms in terms of the
regularized incomplete gamma (b = 0) and beta (b != 0) functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import special
from .errors import ParameterDomainError, VariationalDomainError
from .quadrature import QuadratureSpec, integrate


def sphere_area(n: int) -> float:
    """Surface content n*omega_n of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _check_domain(b: float, m: float, n: int) -> None:
    if not (isinstance(n, (int, np.integer)) and n >= 2):
        raise ParameterDomainError(f"dimension n must be an integer >= 2, got {n!r}")
    if not (np.isfinite(m) and m > 0):
        raise ParameterDomainError(f"moment exponent m must be > 0, got {m!r}")
    if not (np.isfinite(b) and b < m / n):
        raise ParameterDomainError(f"shape parameter b must satisfy b < m/n = {m / n:.6g}, got {b!r}")


def normalization_constant(b: float, m: float, n: int) -> float:
    """q_{b,m}: the constant making g_{b,m} a probability density on R^n."""
    _check_domain(b, m, n)
    lg_half = math.lgamma(n / 2 + 1) - (n / 2) * math.log(math.pi)
    if b == 0:
        logq = lg_half - (n / m) * math.log(m) - math.lgamma(n / m + 1)
    elif b < 0:
        logq = (math.log(m / n) + (n / m) * math.log(-b / m) + lg_half
                - special.lbeta(n / m, 1 - 1 / b))
    else:
        logq = (math.log(m / n) + (n / m) * math.log(b / m) + lg_half
                - special.lbeta(n / m, 1 / b - n / m))
    q = math.exp(logq)
    if not (np.isfinite(q) and q > 0):
        raise ParameterDomainError(f"normalization constant is not finite for b={b}, m={m}, n={n}")
    return q


@dataclass(frozen=True)
class GGParams:
    """Parameters of the density family plus the cached normalization q."""

    b: float
    m: float
    n: int
    q: float = field(init=False)
    variational_ok: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "q", normalization_constant(self.b, self.m, self.n))
        object.__setattr__(self, "variational_ok", self.b < self.m / (self.n + self.m))

    @property
    def exponent(self) -> float:
        """Power 1/b - n/m - 1 of the bracket (unused when b == 0)."""
        return 1.0 / self.b - self.n / self.m - 1.0 if self.b != 0 else 0.0

    def require_variational(self) -> None:
        if not self.variational_ok:
            raise VariationalDomainError(
                f"b={self.b} violates b < m/(n+m) = {self.m / (self.n + self.m):.6g}; "
                "variational formulas and the solver are unavailable"
            )


def support_radius(params: GGParams) -> float:
    """Radius beyond which g vanishes: (m/b)^(1/m) for b > 0, else inf."""
    if params.b > 0:
        return (params.m / params.b) ** (1.0 / params.m)
    return math.inf


def radial_weight(params: GGParams, r):
    """Unnormalized radial weight w(r); g(x) = q * w(|x|)."""
    r = np.asarray(r, dtype=float)
    b, m = params.b, params.m
    if b == 0:
        return np.exp(-(r ** m) / m)
    with np.errstate(over="ignore"):
        bracket = 1.0 - (b / m) * r ** m
    # the support radius itself may leave a rounding-level positive bracket
    alive = (bracket > 0) & (r < support_radius(params))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # log space keeps large |x| from overflowing when b < 0
        val = np.exp(params.exponent * np.log(np.where(alive, bracket, 1.0)))
    return np.where(alive, val, 0.0)


def density(params: GGParams, x) -> np.ndarray | float:
    """g_{b,m}(x) for a point (or array of points along the last axis)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.n:
        raise ValueError(f"expected points in R^{params.n}, got shape {x.shape}")
    # scaled norm: squares of huge coordinates would overflow
    big = np.max(np.abs(x), axis=-1, keepdims=True)
    safe = np.where(big > 0, big, 1.0)
    r = safe[..., 0] * np.sqrt(np.sum((x / safe) ** 2, axis=-1))
    val = params.q * radial_weight(params, r)
    return float(val) if np.ndim(val) == 0 else val


def radial_moment_total(params: GGParams, k: float) -> float:
    """int_0^inf w(r) r^(k-1) dr (finite for 0 < k <= n)."""
    b, m = params.b, params.m
    if b == 0:
        return math.exp((k / m - 1.0) * math.log(m) + math.lgamma(k / m))
    if b > 0:
        return math.exp((k / m) * math.log(m / b) - math.log(m) + special.lbeta(k / m, params.exponent + 1.0))
    return math.exp((k / m) * math.log(m / -b) - math.log(m) + special.lbeta(k / m, -params.exponent - k / m))


def radial_moment(params: GGParams, s, k: float):
    """Split ``int_0^inf w r^(k-1) dr`` at ``s`` into ``(lower, upper)`` parts.

    Both parts carry full relative precision, so differences of nearby
    tails can be taken on whichever side is small.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterDomainError("radial_moment requires s >= 0")
    b, m = params.b, params.m
    total = radial_moment_total(params, k)
    if b == 0:
        with np.errstate(over="ignore"):
            lo, up = special.gammainc_pair(k / m, s ** m / m)
    elif b > 0:
        x = np.minimum((b / m) * s ** m, 1.0)
        lo, up = special.betainc_pair(k / m, params.exponent + 1.0, x, 1.0 - x)
    else:
        with np.errstate(over="ignore"):
            t = (-b / m) * s ** m
            lo, up = special.betainc_pair(k / m, -params.exponent - k / m, t / (1.0 + t), 1.0 / (1.0 + t))
    return total * np.asarray(lo), total * np.asarray(up)


def radial_cumulative(params: GGParams, s, method: str = "closed"):
    """F(s) = int_0^s w(r) r^(n-1) dr.

    ``method="quadrature"`` integrates the weight directly with the adaptive
    Gauss-Legendre engine instead of the incomplete-function closed form.
    """
    if method == "closed":
        lo, _ = radial_moment(params, s, params.n)
        return float(lo) if np.ndim(lo) == 0 else lo
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    s = float(s)
    if s < 0:
        raise ParameterDomainError("radial_cumulative requires s >= 0")
    end = min(s, support_radius(params))
    if end == 0:
        return 0.0
    spec = QuadratureSpec(target_abs_tol=1e-300, target_rel_tol=1e-14, max_subdivisions=60)
    n = params.n
    return integrate(lambda r: radial_weight(params, r) * r ** (n - 1), 0.0, end, spec)


def total_mass(params: GGParams, s: float = math.inf) -> float:
    """q * n*omega_n * F(s); equals 1 for s at (or past) the support end."""
    end = min(s, support_radius(params))
    if math.isinf(end):
        f = radial_moment_total(params, params.n)
    else:
        f = radial_cumulative(params, end)
    return params.q * sphere_area(params.n) * f
