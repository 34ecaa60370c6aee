"""Composite Gauss-Legendre rules and a golden-section line search."""

from __future__ import annotations

import math

import numpy as np

__all__ = ["composite_gauss_legendre", "golden_section"]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def composite_gauss_legendre(lo: float, hi: float, panels: int, order: int = 64):
    """Nodes and weights integrating smooth f over [lo, hi] with `panels`
    equal panels of an `order`-point Gauss-Legendre rule."""
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    x, w = _GL_CACHE[order]
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    """Minimize a unimodal f on [lo, hi]; returns (argmin, min)."""
    a, b = lo, hi
    c = b - GOLDEN_RATIO * (b - a)
    d = a + GOLDEN_RATIO * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN_RATIO * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN_RATIO * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
