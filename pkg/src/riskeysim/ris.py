"""Eve-RIS phase state, the inserted (deceiving) channel and its statistics.

Conventions
-----------
``cov2`` of a link is ``E[g_nlos g_nlos^H]``.  The variance expressions
use ``2*Sigma = E[g_nlos^* g_nlos^T] = conj(cov2)``, so every ``Sigma``
below enters as ``conj(cov2) / 2``.  ``sigma_e2`` is half the total
variance of ``h_E``: ``E|h_E - mu_E|^2 = 2 * sigma_e2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator
from numpy.typing import NDArray

from .channel import LinkEpoch, RisLinkChannel
from .config import ScenarioConfig

__all__ = [
    "PhaseVector",
    "DeceptionStats",
    "GOperator",
    "DenseOperator",
    "deceiving_channel",
    "stats_random_phase",
    "stats_fixed_phase",
    "g_matrix",
    "g_operator",
    "as_operator",
    "random_phases",
]


@dataclass(frozen=True)
class PhaseVector:
    """RIS control state: common amplitude gain and one phase per element."""

    amp_gain: float
    phases: NDArray[np.float64]

    def __post_init__(self):
        if self.amp_gain < 0:
            raise ValueError("amp_gain must be >= 0")
        ph = np.mod(np.asarray(self.phases, dtype=float), 2.0 * math.pi)
        object.__setattr__(self, "phases", ph)

    @property
    def weights(self) -> NDArray[np.complex128]:
        return math.sqrt(self.amp_gain) * np.exp(1j * self.phases)

    @property
    def n_elements(self) -> int:
        return self.phases.shape[0]

    @classmethod
    def from_weights(cls, w, amp_gain: float | None = None) -> "PhaseVector":
        """Keep only the phases of ``w``; zero entries get phase 0."""
        w = np.asarray(w, dtype=complex)
        if amp_gain is None:
            amp_gain = float(np.abs(w[0]) ** 2) if w.size else 0.0
        return cls(amp_gain, np.angle(w))


def random_phases(rng: Generator, m: int, amp_gain: float, size=None):
    """Weights with i.i.d. uniform phases; shape (m,) or (size, m)."""
    shape = (m,) if size is None else (size, m)
    return math.sqrt(amp_gain) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, shape))


def _vec(x):
    if isinstance(x, PhaseVector):
        return x.weights
    if isinstance(x, RisLinkChannel):
        return x.g
    return np.asarray(x, dtype=complex)


def deceiving_channel(w, g_a, g_b):
    """``h_E = g_B^T diag(w) g_A``.

    Any argument may be batched along a leading axis (rounds); the element
    axis is always the last one.
    """
    w, g_a, g_b = _vec(w), _vec(g_a), _vec(g_b)
    m = {w.shape[-1], g_a.shape[-1], g_b.shape[-1]}
    if len(m) != 1:
        raise ValueError(f"element counts differ: w {w.shape}, gA {g_a.shape}, gB {g_b.shape}")
    return np.sum(w * g_a * g_b, axis=-1)


@dataclass(frozen=True)
class DeceptionStats:
    mu_e: complex
    sigma_e2: float
    g_matrix: "GOperator | DenseOperator | None" = None
    sigma_e2_exact: float | None = None


def _epoch(x) -> LinkEpoch:
    if isinstance(x, RisLinkChannel):
        return x.epoch
    if isinstance(x, LinkEpoch):
        return x
    raise TypeError(f"expected RisLinkChannel or LinkEpoch, got {type(x).__name__}")


def stats_random_phase(cfg: ScenarioConfig, link_a=None, link_b=None) -> DeceptionStats:
    """Moments of ``h_E`` when every element phase is uniform and fresh per round.

    ``sigma_e2`` is the LoS-dominant closed form
    ``0.5 A_E M C0^2 d_AE^-aL d_BE^-aL``.  When the two links are supplied,
    ``sigma_e2_exact`` keeps the NLoS contribution that the closed form
    drops: ``0.5 A_E sum_m E|g_A,m|^2 E|g_B,m|^2``.
    """
    m = cfg.n_elements
    closed = 0.5 * cfg.amp_gain * m * cfg.c0 ** 2 * cfg.d_ae ** (-cfg.alpha_los) * cfg.d_be ** (-cfg.alpha_los)
    exact = None
    if link_a is not None and link_b is not None:
        ea, eb = _epoch(link_a), _epoch(link_b)
        pa = np.abs(ea.g_los) ** 2 + ea.nlos_power
        pb = np.abs(eb.g_los) ** 2 + eb.nlos_power
        exact = 0.5 * cfg.amp_gain * float(np.sum(pa * pb))
    return DeceptionStats(mu_e=0.0 + 0.0j, sigma_e2=closed, g_matrix=None, sigma_e2_exact=exact)


class GOperator:
    """Matrix-free ``G`` in the factored form ``Z diag(c) Z^H``.

    Each link's NLoS covariance is ``(p / iota) U U^H`` with ``U`` the path
    steering vectors, so ``G`` has rank at most ``iota_A * iota_B +
    iota_A + iota_B`` and never needs to be stored densely.
    """

    def __init__(self, z: NDArray[np.complex128], c: NDArray[np.float64]):
        self.z = np.asarray(z, dtype=complex)
        self.c = np.asarray(c, dtype=float)
        if np.any(self.c < 0):
            raise ValueError("G factor weights must be non-negative")

    @classmethod
    def from_links(cls, link_a, link_b) -> "GOperator":
        ea, eb = _epoch(link_a), _epoch(link_b)
        ua, ub = ea.atoms, eb.atoms
        pa, pb = ea.nlos_power / ea.iota, eb.nlos_power / eb.iota
        # 2 Sigma_A o Sigma_B = 0.5 conj(C_A) o conj(C_B)
        cross = np.conj(ua[:, :, None] * ub[:, None, :]).reshape(ua.shape[0], -1)
        cols = [cross, np.conj(eb.g_los[:, None] * ua), np.conj(ea.g_los[:, None] * ub)]
        weights = [np.full(cross.shape[1], 0.5 * pa * pb),
                   np.full(ua.shape[1], 0.5 * pa),
                   np.full(ub.shape[1], 0.5 * pb)]
        return cls(np.concatenate(cols, axis=1), np.concatenate(weights))

    @property
    def shape(self):
        m = self.z.shape[0]
        return (m, m)

    def matvec(self, w):
        return self.z @ (self.c * (self.z.conj().T @ w))

    def quad(self, w) -> float:
        """``w^H G w`` (real, non-negative)."""
        return float(np.sum(self.c * np.abs(self.z.conj().T @ w) ** 2))

    def to_dense(self) -> NDArray[np.complex128]:
        return (self.z * self.c) @ self.z.conj().T

    def is_hermitian(self, rng: Generator | None = None, rtol: float = 1e-9) -> bool:
        return True  # Hermitian by construction


class DenseOperator:
    """Wrap an explicit matrix with the operator interface."""

    def __init__(self, g):
        self.g = np.asarray(g, dtype=complex)
        if self.g.ndim != 2 or self.g.shape[0] != self.g.shape[1]:
            raise ValueError("G must be square")

    @property
    def shape(self):
        return self.g.shape

    def matvec(self, w):
        return self.g @ w

    def quad(self, w) -> float:
        return float(np.real(np.vdot(w, self.g @ w)))

    def to_dense(self):
        return self.g

    def is_hermitian(self, rng: Generator | None = None, rtol: float = 1e-9) -> bool:
        """Spot check ``<x, G y> == <G x, y>`` on random vectors."""
        rng = np.random.default_rng(0) if rng is None else rng
        m = self.g.shape[0]
        x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        y = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        lhs = np.vdot(x, self.g @ y)
        rhs = np.vdot(self.g @ x, y)
        scale = max(abs(lhs), abs(rhs), np.linalg.norm(self.g) * np.linalg.norm(x) * np.linalg.norm(y) * 1e-300)
        return abs(lhs - rhs) <= rtol * scale + 1e-300


def as_operator(g):
    if isinstance(g, (GOperator, DenseOperator)):
        return g
    return DenseOperator(g)


def g_operator(link_a, link_b) -> GOperator:
    return GOperator.from_links(link_a, link_b)


def _check_psd(c, name):
    if not np.allclose(c, c.conj().T, rtol=1e-10, atol=1e-12 * (np.abs(c).max() + 1e-300)):
        raise ValueError(f"{name} covariance is not Hermitian")
    ev = np.linalg.eigvalsh(c)
    if ev.size and ev.min() < -1e-9 * max(ev.max(), 1e-300):
        raise ValueError(f"{name} covariance is not positive semi-definite")


def g_matrix(link_a, link_b, *, cov2_a=None, cov2_b=None) -> NDArray[np.complex128]:
    """Dense ``G`` built term by term from the link covariances.

    ``G = 2 S_A o S_B + diag(gB_los)^* S_A diag(gB_los) + diag(gA_los)^* S_B diag(gA_los)``
    with ``S = conj(cov2) / 2``.  Explicit covariances may be passed to
    override those of the links.
    """
    ea, eb = _epoch(link_a), _epoch(link_b)
    ca = ea.cov2 if cov2_a is None else np.asarray(cov2_a, dtype=complex)
    cb = eb.cov2 if cov2_b is None else np.asarray(cov2_b, dtype=complex)
    _check_psd(ca, "Alice-RIS")
    _check_psd(cb, "Bob-RIS")
    sa, sb = 0.5 * ca.conj(), 0.5 * cb.conj()
    gal, gbl = ea.g_los, eb.g_los
    g = 2.0 * sa * sb
    g += gbl.conj()[:, None] * sa * gbl[None, :]
    g += gal.conj()[:, None] * sb * gal[None, :]
    return g


def stats_fixed_phase(w, link_a, link_b) -> DeceptionStats:
    """Mean and half-variance of ``h_E`` over NLoS fading for a fixed ``w``."""
    wv = _vec(w)
    ea, eb = _epoch(link_a), _epoch(link_b)
    op = GOperator.from_links(ea, eb)
    mu = complex(np.sum(eb.g_los * wv * ea.g_los))
    return DeceptionStats(mu_e=mu, sigma_e2=op.quad(wv), g_matrix=op)
