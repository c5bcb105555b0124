"""Numerical integration helpers.

Two adaptive schemes with an absolute-tolerance contract:

* ``adaptive_simpson``: classic local bisection with Richardson error
  estimate, for scalar integrands; robust near integrable endpoint
  singularities because the subdivision concentrates where needed.
* ``gauss_refine``: fixed-order Gauss-Legendre panels, doubling the panel
  count until two consecutive estimates agree; the integrand is called on
  node arrays, so this is the fast path for smooth integrands.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureSpec", "adaptive_simpson", "gauss_refine", "log_time_integral", "pow_integral"]


@dataclass(frozen=True)
class QuadratureSpec:
    """Absolute tolerance and a cap on subdivision depth."""

    tol: float = 1e-9
    max_depth: int = 60

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tolerance must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")


DEFAULT_SPEC = QuadratureSpec()


def _simpson(fa, fm, fb, h):
    return h / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a, b, spec=DEFAULT_SPEC):
    """Integrate a scalar function over [a, b] to absolute tolerance."""
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, spec.tol, spec.max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    err = left + right - whole
    if depth <= 0 or abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return _simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _simpson_rec(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


@lru_cache(maxsize=32)
def _leggauss(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _gauss_panels(f, a, b, panels, order):
    nodes, weights = _leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = f(pts).reshape(panels, order)
    return float(np.sum((vals @ weights) * half))


def gauss_refine(f, a, b, spec=DEFAULT_SPEC, order=16):
    """Panel-doubling Gauss quadrature; f maps node arrays to value arrays."""
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    prev = _gauss_panels(f, a, b, 1, order)
    panels = 2
    for _ in range(spec.max_depth):
        cur = _gauss_panels(f, a, b, panels, order)
        if abs(cur - prev) <= spec.tol:
            return cur
        prev = cur
        panels *= 2
        if panels * order > 1 << 21:
            break
    return prev


def log_time_integral(v, a, b, spec=DEFAULT_SPEC):
    """integral_a^b v**t / t dt for 0 <= v, 0 < a < b.

    Substituting t = exp(w) removes the 1/t factor, leaving the smooth
    integrand v**exp(w) on [ln a, ln b].  v = 0 integrates to 0 (0**t = 0
    for t > 0) and v = 1 reduces to ln(b/a).
    """
    if v < 0.0:
        raise ValueError("v must be non-negative")
    if not 0.0 < a <= b:
        raise ValueError("need 0 < a <= b")
    if a == b:
        return 0.0
    if v == 0.0:
        return 0.0
    if v == 1.0:
        return float(np.log(b / a))
    logv = np.log(v)
    return gauss_refine(lambda w: np.exp(np.exp(w) * logv), np.log(a), np.log(b), spec)


def pow_integral(v, a, b):
    """integral_a^b v**t dt in closed form, with the 0**t = 0 convention."""
    if v < 0.0:
        raise ValueError("v must be non-negative")
    if v == 0.0:
        return 0.0
    if v == 1.0:
        return b - a
    logv = np.log(v)
    return float(v**a * np.expm1((b - a) * logv) / logv)
