"""Closed-form key match rate between a legitimate party and the RIS eavesdropper.

With ``z_E ~ N(0, s_E^2)`` the eavesdropper's feature and ``z_A = z_E + z``
(``z ~ N(0, s_h^2)`` independent) the legitimate one, both quantized by the
two-threshold rule with parameter ``beta``, the probability of emitting the
same bit is a one-dimensional integral with no closed form.  It depends on
the standard deviations only through ``ratio = s_E / s_h``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erfc

__all__ = [
    "KmrQuery",
    "normal_cdf",
    "theoretical_kmr",
    "kmr_limit",
    "kmr_derivative_signs",
    "kmr_curve",
]

_TAIL = 12.0  # integrand is below 1e-30 past beta + 12


def normal_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate in both tails)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class KmrQuery:
    ratio: float
    beta: float

    def __post_init__(self):
        if not (self.ratio >= 0.0 and math.isfinite(self.ratio)):
            raise ValueError(f"ratio must be finite and >= 0, got {self.ratio}")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta must lie in [0, 0.5), got {self.beta}")


def _integrand(zeta, ratio, beta):
    shift = -beta * math.sqrt(ratio * ratio + 1.0)
    return float(normal_cdf(shift + ratio * zeta)) * math.exp(-0.5 * zeta * zeta)


def theoretical_kmr(q: KmrQuery | float, beta: float | None = None, *, epsabs: float = 1e-9) -> float:
    """Probability that Alice and the eavesdropper quantize to the same bit.

    Accepts either a :class:`KmrQuery` or ``(ratio, beta)``.

    Evaluates ``sqrt(2/pi) * int_beta^inf Phi(-beta*sqrt(r^2+1) + r*zeta)
    exp(-zeta^2/2) dzeta`` by adaptive quadrature on ``[beta, beta + 12]``.
    For large ratios the integrand is a sharp step located where the
    argument of ``Phi`` vanishes; that point is passed to the integrator as
    a breakpoint.
    """
    if not isinstance(q, KmrQuery):
        q = KmrQuery(float(q), float(beta))
    ratio, b = q.ratio, q.beta
    lo, hi = b, b + _TAIL
    points = None
    if ratio > 0.0:
        knee = b * math.sqrt(ratio * ratio + 1.0) / ratio
        if lo < knee < hi:
            points = [knee]
    val, _ = integrate.quad(
        _integrand, lo, hi, args=(ratio, b), points=points,
        epsabs=epsabs, epsrel=1e-10, limit=400,
    )
    return float(min(1.0, max(0.0, math.sqrt(2.0 / math.pi) * val)))


def kmr_limit(beta: float) -> float:
    """Ceiling of the match rate when the inserted channel dominates: ``2*Phi(-beta)``."""
    if not 0.0 <= beta < 0.5:
        raise ValueError(f"beta must lie in [0, 0.5), got {beta}")
    return float(2.0 * normal_cdf(-beta))


def kmr_derivative_signs(beta: float, ratio_grid) -> tuple[np.ndarray, np.ndarray]:
    """First and second finite differences of :func:`theoretical_kmr` over a grid.

    The grid may be non-uniform; differences are divided differences so
    their signs reflect the sign of the first and second derivative.
    """
    x = np.asarray(ratio_grid, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("ratio_grid needs at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("ratio_grid must be strictly increasing")
    y = np.array([theoretical_kmr(r, beta) for r in x])
    d1 = np.diff(y) / np.diff(x)
    mid = 0.5 * (x[1:] + x[:-1])
    d2 = np.diff(d1) / np.diff(mid)
    return d1, d2


def kmr_curve(beta: float, ratio_db) -> np.ndarray:
    """Match rate versus the variance ratio ``s_E^2 / s_h^2`` given in dB."""
    r = np.sqrt(10.0 ** (np.asarray(ratio_db, dtype=float) / 10.0))
    return np.array([theoretical_kmr(float(v), beta) for v in r])
