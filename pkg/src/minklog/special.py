"""Gamma/Beta functions and their regularized incomplete forms.

The incomplete functions are vectorized over numpy arrays and return both
the lower and the upper regularized value, each computed from whichever
expansion is accurate for it, so callers can difference tails without
catastrophic cancellation.
"""
from __future__ import annotations

import math

import numpy as np

_EPS = np.finfo(float).eps
_TINY = 1e-300
_MAX_ITER = 2000

_lgamma_ufunc = np.frompyfunc(math.lgamma, 1, 1)


def lgamma(x):
    """Natural log of |Gamma(x)|; scalar in, scalar out, arrays elementwise."""
    if np.ndim(x) == 0:
        return math.lgamma(float(x))
    # arguments repeat heavily in practice; evaluate each distinct value once
    vals, inv = np.unique(np.asarray(x, dtype=float), return_inverse=True)
    return _lgamma_ufunc(vals).astype(float)[inv].reshape(np.shape(x))


def gamma(x: float) -> float:
    return math.gamma(x)


def lbeta(a, b):
    return lgamma(a) + lgamma(b) - lgamma(np.add(a, b))


def beta(a: float, b: float) -> float:
    """Complete Beta function B(a, b) for a, b > 0."""
    if a <= 0 or b <= 0:
        raise ValueError(f"beta requires positive arguments, got a={a}, b={b}")
    return math.exp(lbeta(a, b))


def _gamma_series(a, x):
    # sum_{k>=0} x^k / (a (a+1) ... (a+k)), valid (fast) for x < a + 1
    term = 1.0 / a
    total = term.copy()
    ap = a.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap = ap + 1.0
        term = np.where(active, term * x / ap, 0.0)
        total = total + term
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return total


def _gamma_cf(a, x):
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = np.full(x.shape, 1.0 / _TINY)
    d = 1.0 / np.where(np.abs(b) < _TINY, _TINY, b)
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return h


def gammainc_pair(a, x):
    """Regularized incomplete gamma ``(P(a, x), Q(a, x))`` for a > 0, x >= 0."""
    a_arr, x_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    a_arr = a_arr.astype(float).ravel()
    x_arr = x_arr.astype(float).ravel()
    if np.any(a_arr <= 0):
        raise ValueError("gammainc requires a > 0")
    if np.any(x_arr < 0):
        raise ValueError("gammainc requires x >= 0")
    p = np.zeros_like(x_arr)
    q = np.ones_like(x_arr)
    pos = x_arr > 0
    inf = np.isinf(x_arr)
    p[inf], q[inf] = 1.0, 0.0
    pos &= ~inf
    series = pos & (x_arr < a_arr + 1.0)
    if series.any():
        aa, xx = a_arr[series], x_arr[series]
        pref = np.exp(-xx + aa * np.log(xx) - lgamma(aa))
        p[series] = pref * _gamma_series(aa, xx)
        q[series] = 1.0 - p[series]
    frac = pos & ~series
    if frac.any():
        aa, xx = a_arr[frac], x_arr[frac]
        pref = np.exp(-xx + aa * np.log(xx) - lgamma(aa))
        q[frac] = pref * _gamma_cf(aa, xx)
        p[frac] = 1.0 - q[frac]
    shape = np.broadcast(np.asarray(a), np.asarray(x)).shape
    if shape == ():
        return float(p[0]), float(q[0])
    return p.reshape(shape), q.reshape(shape)


def gammainc(a, x):
    return gammainc_pair(a, x)[0]


def gammaincc(a, x):
    return gammainc_pair(a, x)[1]


def _beta_cf(a, b, x):
    # continued fraction for I_x(a, b) (Numerical Recipes betacf), Lentz form
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones(x.shape)
    d = 1.0 - qab * x / qap
    d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _MAX_ITER):
        m2 = 2 * k
        aa = k * (b - k) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        h = np.where(active, h * d * c, h)
        aa = -(a + k) * (qab + k) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return h


def betainc_pair(a, b, x, y=None):
    """Regularized incomplete beta ``(I_x(a, b), 1 - I_x(a, b))``.

    ``y`` may carry ``1 - x`` computed by the caller to full relative
    precision (useful when x is within rounding of 1).
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = 1.0 - x_arr if y is None else np.asarray(y, dtype=float)
    a_arr, b_arr, x_arr, y_arr = (
        arr.astype(float).ravel() for arr in np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float), x_arr, y_arr)
    )
    if np.any(a_arr <= 0) or np.any(b_arr <= 0):
        raise ValueError("betainc requires a > 0 and b > 0")
    if np.any((x_arr < 0) | (x_arr > 1)):
        raise ValueError("betainc requires 0 <= x <= 1")
    lower = np.zeros_like(x_arr)
    upper = np.ones_like(x_arr)
    # trust y when the caller supplied it: x may have rounded to 1 while y > 0
    at_one = (y_arr <= 0.0) if y is not None else (x_arr >= 1.0)
    lower[at_one], upper[at_one] = 1.0, 0.0
    inner = (x_arr > 0) & ~at_one
    if inner.any():
        aa, bb, xx, yy = a_arr[inner], b_arr[inner], x_arr[inner], y_arr[inner]
        log_front = -lbeta(aa, bb) + aa * np.log(xx) + bb * np.log(yy)
        front = np.exp(log_front)
        direct = xx < (aa + 1.0) / (aa + bb + 2.0)
        lo = np.empty_like(xx)
        up = np.empty_like(xx)
        if direct.any():
            lo[direct] = front[direct] * _beta_cf(aa[direct], bb[direct], xx[direct]) / aa[direct]
            up[direct] = 1.0 - lo[direct]
        flip = ~direct
        if flip.any():
            up[flip] = front[flip] * _beta_cf(bb[flip], aa[flip], yy[flip]) / bb[flip]
            lo[flip] = 1.0 - up[flip]
        lower[inner], upper[inner] = lo, up
    shape = np.broadcast(np.asarray(a), np.asarray(b), np.asarray(x)).shape
    if shape == ():
        return float(lower[0]), float(upper[0])
    return lower.reshape(shape), upper.reshape(shape)


def betainc(a, b, x):
    return betainc_pair(a, b, x)[0]
