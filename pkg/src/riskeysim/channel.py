"""Channel sampling: direct Alice-Bob link and the Alice/Bob to RIS links.

The RIS is a uniform planar array lying in the ``x = 0`` plane.  Element
``m`` (0-based) sits at ``[0, (m mod mx) d, floor(m / my) d]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.random import Generator
from numpy.typing import NDArray

from .config import ScenarioConfig

__all__ = [
    "UpaGeometry",
    "DirectChannel",
    "LinkEpoch",
    "RisLinkChannel",
    "steering_vector",
    "steering_matrix",
    "los_angles",
    "sample_direct",
    "sample_path_angles",
    "link_epoch",
    "sample_ris_link",
    "complex_normal",
]

HALF_PI = 0.5 * math.pi
_ANGLE_TOL = 1e-12


def complex_normal(rng: Generator, var: float, size=None):
    """Circular complex Gaussian with total variance ``var`` (``var/2`` per part)."""
    s = math.sqrt(var / 2.0)
    return s * rng.standard_normal(size) + 1j * s * rng.standard_normal(size)


@dataclass(frozen=True)
class UpaGeometry:
    mx: int
    my: int
    elem_spacing: float

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "UpaGeometry":
        return cls(cfg.mx, cfg.my, cfg.elem_spacing)

    @property
    def n_elements(self) -> int:
        return self.mx * self.my

    @cached_property
    def grid_index(self) -> NDArray[np.int64]:
        """Integer (column, row) offsets of each element, shape (M, 2)."""
        m = np.arange(self.n_elements)
        return np.stack([m % self.mx, m // self.my], axis=1)

    @cached_property
    def positions(self) -> NDArray[np.float64]:
        """Element positions ``l_m`` in metres, shape (M, 3)."""
        pos = np.zeros((self.n_elements, 3))
        pos[:, 1:] = self.grid_index * self.elem_spacing
        return pos


def _check_angles(el, az):
    el = np.asarray(el, dtype=float)
    az = np.asarray(az, dtype=float)
    lim = HALF_PI + _ANGLE_TOL
    if np.any(np.abs(el) > lim) or np.any(np.abs(az) > lim):
        raise ValueError("elevation and azimuth must lie in [-pi/2, pi/2]")
    if not (np.all(np.isfinite(el)) and np.all(np.isfinite(az))):
        raise ValueError("angles must be finite")
    return el, az


def wave_vector(el, az, lam: float) -> NDArray:
    """``(2 pi / lam) [sin el cos az, sin el sin az, cos el]``, shape (..., 3)."""
    el, az = _check_angles(el, az)
    k = 2.0 * math.pi / lam
    return k * np.stack([np.sin(el) * np.cos(az), np.sin(el) * np.sin(az), np.cos(el)], axis=-1)


def steering_vector(geom: UpaGeometry, el: float, az: float, lam: float) -> NDArray[np.complex128]:
    """Array response ``u(el, az)``; every entry has unit modulus."""
    return np.exp(1j * (geom.positions @ wave_vector(el, az, lam)))


def steering_matrix(geom: UpaGeometry, angles, lam: float, rows=None) -> NDArray[np.complex128]:
    """Stack of steering vectors as columns, shape (M, n) or (len(rows), n)."""
    angles = np.asarray(angles, dtype=float).reshape(-1, 2)
    a = wave_vector(angles[:, 0], angles[:, 1], lam)
    pos = geom.positions if rows is None else geom.positions[np.asarray(rows)]
    return np.exp(1j * (pos @ a.T))


def los_angles(endpoint, ris_position) -> tuple[float, float]:
    """Elevation/azimuth of the LoS wave arriving at the RIS from ``endpoint``.

    The arrival direction ``v`` is the unit vector from the endpoint to the
    RIS.  The angle parameterization only covers ``v_z >= 0``; a direction
    with ``v_z < 0`` is replaced by ``-v``, which conjugates the steering
    vector and leaves every second-order statistic unchanged.
    """
    v = np.asarray(ris_position, dtype=float) - np.asarray(endpoint, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("endpoint coincides with the RIS")
    v = v / n
    if v[2] < 0:
        v = -v
    el = math.acos(min(1.0, v[2]))
    s = math.sin(el)
    az = math.asin(max(-1.0, min(1.0, v[1] / s))) if s > 1e-12 else 0.0
    return el, az


@dataclass(frozen=True)
class DirectChannel:
    h: complex
    var2: float


def sample_direct(cfg: ScenarioConfig, rng: Generator, size=None) -> DirectChannel:
    """``h ~ CN(0, C0 d_AB^-alpha_N)``; ``size`` draws a vector of rounds."""
    var2 = cfg.c0 * cfg.d_ab ** (-cfg.alpha_nlos)
    return DirectChannel(complex_normal(rng, var2, size), var2)


def sample_path_angles(rng: Generator, n: int, size=None) -> NDArray[np.float64]:
    """``n`` (el, az) pairs, i.i.d. uniform on ``[-pi/2, pi/2]``."""
    shape = (n, 2) if size is None else (size, n, 2)
    return rng.uniform(-HALF_PI, HALF_PI, shape)


@dataclass(frozen=True)
class LinkEpoch:
    """Part of an Alice/Bob-to-RIS link that stays fixed over a scatterer epoch.

    Holds the LoS component and the NLoS steering vectors; only the
    per-path gains vary from round to round.
    """

    g_los: NDArray[np.complex128]
    los_angles: tuple[float, float]
    path_angles: NDArray[np.float64]
    atoms: NDArray[np.complex128]  # (M, iota) NLoS steering vectors
    los_power: float  # C0 d^-alpha_L
    nlos_power: float  # C0 d^-alpha_N, variance of each path gain

    @property
    def n_elements(self) -> int:
        return self.g_los.shape[0]

    @property
    def iota(self) -> int:
        return self.atoms.shape[1]

    @cached_property
    def cov2(self) -> NDArray[np.complex128]:
        """``E[g_nlos g_nlos^H]`` (dense; avoid for very large arrays)."""
        a = self.atoms
        return (self.nlos_power / self.iota) * (a @ a.conj().T)

    def nlos(self, gains) -> NDArray[np.complex128]:
        """NLoS part for gains of shape (iota,) or (n, iota); returns (M,) or (n, M)."""
        gains = np.asarray(gains)
        return (gains / math.sqrt(self.iota)) @ self.atoms.T

    def sample_gains(self, rng: Generator, size=None):
        shape = (self.iota,) if size is None else (size, self.iota)
        return complex_normal(rng, self.nlos_power, shape)

    def realize(self, gains) -> "RisLinkChannel":
        gains = np.asarray(gains, dtype=complex).reshape(self.iota)
        g = self.g_los + self.atoms @ (gains / math.sqrt(self.iota))
        return RisLinkChannel(g=g, g_los=self.g_los, path_angles=self.path_angles,
                              path_gains=gains, epoch=self)


@dataclass(frozen=True, eq=False)
class RisLinkChannel:
    """One realization of an Alice/Bob-to-RIS link.

    ``g`` equals ``g_los + atoms @ (path_gains / sqrt(iota))`` evaluated in
    exactly that order.
    """

    g: NDArray[np.complex128]
    g_los: NDArray[np.complex128]
    path_angles: NDArray[np.float64]
    path_gains: NDArray[np.complex128]
    epoch: LinkEpoch

    @property
    def cov2(self) -> NDArray[np.complex128]:
        return self.epoch.cov2

    @property
    def n_elements(self) -> int:
        return self.g.shape[0]


def _endpoint(cfg: ScenarioConfig, endpoint: str):
    key = endpoint.lower()
    if key in ("a", "alice"):
        return cfg.pos_alice, cfg.d_ae
    if key in ("b", "bob"):
        return cfg.pos_bob, cfg.d_be
    raise ValueError(f"endpoint must be 'alice' or 'bob', got {endpoint!r}")


def link_epoch(cfg: ScenarioConfig, geom: UpaGeometry, endpoint: str, angles) -> LinkEpoch:
    """Fixed part of the ``endpoint``-to-RIS link for given NLoS path angles."""
    pos, dist = _endpoint(cfg, endpoint)
    angles = np.asarray(angles, dtype=float).reshape(-1, 2)
    if angles.shape[0] != cfg.iota:
        raise ValueError(f"expected {cfg.iota} path angle pairs, got {angles.shape[0]}")
    _check_angles(angles[:, 0], angles[:, 1])
    el, az = los_angles(pos, cfg.pos_eve)
    los_power = cfg.c0 * dist ** (-cfg.alpha_los)
    g_los = math.sqrt(los_power) * steering_vector(geom, el, az, cfg.lam)
    atoms = steering_matrix(geom, angles, cfg.lam)
    return LinkEpoch(g_los=g_los, los_angles=(el, az), path_angles=angles, atoms=atoms,
                     los_power=los_power, nlos_power=cfg.c0 * dist ** (-cfg.alpha_nlos))


def sample_ris_link(cfg: ScenarioConfig, geom: UpaGeometry, endpoint: str, rng: Generator,
                    angles=None) -> RisLinkChannel:
    """Draw one realization of the ``endpoint``-to-RIS channel.

    Path angles are drawn uniformly unless ``angles`` fixes them; the path
    gains are always fresh.
    """
    if angles is None:
        angles = sample_path_angles(rng, cfg.iota)
    ep = link_epoch(cfg, geom, endpoint, angles)
    return ep.realize(ep.sample_gains(rng))
