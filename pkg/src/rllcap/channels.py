"""Binary-input memoryless channels and relative-entropy primitives.

All entropies and divergences are in bits (log base 2).  The erasure
symbol is '?' at index 1 of the BEC output alphabet, fixed ordering
['0', '?', '1'].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

__all__ = [
    "DiscreteChannel",
    "GaussianChannel",
    "ParameterOutOfRange",
    "InvalidInterval",
    "bec",
    "bsc",
    "validate_pmf",
    "relative_entropy",
    "entropy",
    "binary_entropy",
    "gaussian_pdf",
    "gaussian_log_mass",
    "gaussian_mass",
]

LOG2E = math.log2(math.e)
SQRT_2PI = math.sqrt(2.0 * math.pi)


class ParameterOutOfRange(ValueError):
    pass


class InvalidInterval(ValueError):
    pass


def validate_pmf(p: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError(f"negative probability in {p}")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return p


@dataclass(frozen=True)
class DiscreteChannel:
    """Row-stochastic binary-input channel over an ordered output alphabet."""

    outputs: tuple[str, ...]
    rows: tuple[tuple[float, ...], tuple[float, ...]]

    def __post_init__(self):
        for r in self.rows:
            validate_pmf(np.array(r))

    def row(self, x: int) -> np.ndarray:
        return np.array(self.rows[x])

    def prob(self, y: str, x: int) -> float:
        return self.rows[x][self.outputs.index(y)]


def bec(epsilon: float) -> DiscreteChannel:
    """Binary erasure channel with outputs ['0', '?', '1']."""
    if not 0.0 <= epsilon <= 1.0:
        raise ParameterOutOfRange(f"epsilon={epsilon} outside [0, 1]")
    e = float(epsilon)
    return DiscreteChannel(
        outputs=("0", "?", "1"),
        rows=((1.0 - e, e, 0.0), (0.0, e, 1.0 - e)),
    )


def bsc(p: float) -> DiscreteChannel:
    """Binary symmetric channel with outputs ['0', '1']."""
    if not 0.0 <= p <= 1.0:
        raise ParameterOutOfRange(f"p={p} outside [0, 1]")
    q = float(p)
    return DiscreteChannel(
        outputs=("0", "1"), rows=((1.0 - q, q), (q, 1.0 - q))
    )


@dataclass(frozen=True)
class GaussianChannel:
    """Y = (-1)^X + Z with Z ~ N(0, sigma^2)."""

    sigma: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ParameterOutOfRange(f"sigma={self.sigma} must be positive")

    @staticmethod
    def signal(x: int) -> float:
        return 1.0 if x == 0 else -1.0

    def pdf(self, y, x: int):
        return gaussian_pdf(self.signal(x), self.sigma, y)


def relative_entropy(p1, p2) -> float:
    """D(p1 || p2) in bits; 0*log(0/q) = 0 and x*log(x/0) = +inf."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError("mismatched alphabets")
    support = p1 > 0
    if np.any(p2[support] == 0):
        return math.inf
    return float(np.sum(p1[support] * np.log2(p1[support] / p2[support])))


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    support = p > 0
    return float(-np.sum(p[support] * np.log2(p[support])))


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def gaussian_pdf(mu: float, sigma: float, x):
    """Density of N(mu, sigma^2) at x (scalar or array)."""
    z = (np.asarray(x, dtype=float) - mu) / sigma
    out = np.exp(-0.5 * z * z) / (SQRT_2PI * sigma)
    return float(out) if np.isscalar(x) else out

def gaussian_mass(mu: float, sigma: float, a: float, b: float) -> float:
    """P(a < N(mu, sigma^2) < b); endpoints may be -inf / +inf."""
    if sigma <= 0:
        raise InvalidInterval(f"sigma={sigma} must be positive")
    if a > b:
        raise InvalidInterval(f"empty interval ({a}, {b})")
    za = -math.inf if a == -math.inf else (a - mu) / sigma
    zb = math.inf if b == math.inf else (b - mu) / sigma
    lo = 0.0 if za == -math.inf else float(ndtr(za))
    hi = 1.0 if zb == math.inf else float(ndtr(zb))
    return hi - lo


def gaussian_log_mass(mu: float, sigma: float, a: float, b: float) -> float:
    """log of gaussian_mass, accurate deep in either tail.

    Only the one-sided cases (a = -inf or b = +inf) need the tail-safe
    path; those are the ones arising in the divergence closed forms.
    """
    if a == -math.inf:
        return float(log_ndtr((b - mu) / sigma))
    if b == math.inf:
        return float(log_ndtr(-(a - mu) / sigma))
    return math.log(gaussian_mass(mu, sigma, a, b))
