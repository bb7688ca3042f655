"""Comparison attackers: an amplify-and-forward relay and a pilot spoofer.

Both use single-antenna Rician links with the same path-loss law as the
RIS links.  All round functions are vectorized: pass a
:class:`~riskeysim.channel.DirectChannel` holding an array of ``h`` values
to simulate many rounds at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .channel import DirectChannel, complex_normal
from .config import ScenarioConfig, lin2db
from .skg import csi_probe

__all__ = [
    "RelayConfig",
    "SpoofingConfig",
    "rician_scalar",
    "relay_round",
    "relay_variance",
    "spoof_round",
    "spoof_mse",
    "detection_mse",
    "undetectable_region",
]


def _position(p):
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape != (3,) or not np.all(np.isfinite(p)):
        raise ValueError("position must be a finite 3-vector")
    return tuple(float(x) for x in p)


@dataclass(frozen=True)
class RelayConfig:
    gain: float  # ||w~||^2, linear
    position: tuple = (0.0, 10.0, 5.0)

    def __post_init__(self):
        if not self.gain >= 0 or not math.isfinite(self.gain):
            raise ValueError("relay gain must be finite and >= 0")
        object.__setattr__(self, "position", _position(self.position))


@dataclass(frozen=True)
class SpoofingConfig:
    spoof_gain: float  # E_s / ||x_B||^2, linear
    position: tuple = (0.0, 10.0, 5.0)
    detection_snr_db: float = 1.0

    def __post_init__(self):
        if not self.spoof_gain >= 0 or not math.isfinite(self.spoof_gain):
            raise ValueError("spoof gain must be finite and >= 0")
        object.__setattr__(self, "position", _position(self.position))


def _link_powers(scenario: ScenarioConfig, a, b):
    d = float(np.linalg.norm(np.subtract(a, b)))
    if d == 0:
        raise ValueError("attacker coincides with a legitimate node")
    return scenario.c0 * d ** (-scenario.alpha_los), scenario.c0 * d ** (-scenario.alpha_nlos)


def rician_scalar(scenario: ScenarioConfig, a, b, rng: Generator, size=None):
    """Single-antenna link between points ``a`` and ``b``: LoS amplitude plus CN scatter."""
    p_los, p_nlos = _link_powers(scenario, a, b)
    return math.sqrt(p_los) + complex_normal(rng, p_nlos, size)


def relay_variance(cfg: RelayConfig, scenario: ScenarioConfig, *, exact: bool = False) -> float:
    """Total variance of the relay's inserted channel.

    The default is the LoS-only law ``gain C0^2 d_AE^-aL d_BE^-aL``.  With
    ``exact`` the scatter power of both hops is included, which is what a
    simulation of the Rician hops actually produces.
    """
    la, na = _link_powers(scenario, cfg.position, scenario.pos_alice)
    lb, nb = _link_powers(scenario, cfg.position, scenario.pos_bob)
    if exact:
        return cfg.gain * (la + na) * (lb + nb)
    return cfg.gain * la * lb


def _shape(h):
    hv = np.asarray(h.h if isinstance(h, DirectChannel) else h)
    return hv, (hv.shape or None)


def relay_round(cfg: RelayConfig, h, scenario: ScenarioConfig, rng: Generator):
    """One (or many) probing rounds through an amplify-and-forward relay.

    The relay multiplies by ``w~ = sqrt(gain) e^{j theta}`` with a fresh
    uniform ``theta`` per round, so its inserted channel
    ``psi_E = g~_BE w~ g~_AE`` is reciprocal and zero-mean.  Alice and Bob
    see ``h + psi_E`` plus their estimation noise; the relay knows its own
    gain and estimates both hops from the public pilots.
    """
    hv, size = _shape(h)
    g_a = rician_scalar(scenario, cfg.position, scenario.pos_alice, rng, size)
    g_b = rician_scalar(scenario, cfg.position, scenario.pos_bob, rng, size)
    theta = rng.uniform(0.0, 2.0 * math.pi, size)
    psi = g_b * math.sqrt(cfg.gain) * np.exp(1j * theta) * g_a
    probe = csi_probe(hv, psi, scenario, rng)
    noise_var = 2.0 * scenario.noise_var / min(scenario.pilot_power_a, scenario.pilot_power_b)
    psi_e = psi + complex_normal(rng, noise_var, size)
    return probe.h_a_hat, probe.h_b_hat, psi_e


def spoof_round(cfg: SpoofingConfig, h, scenario: ScenarioConfig, rng: Generator):
    """One (or many) rounds with a spoofer injecting Bob's pilot toward Alice.

    ``psi_A = h + g~_AE sqrt(spoof_gain) + n_A``, ``psi_B = h + n_B`` and
    the spoofer's own estimate ``psi_E = g~_AE + n_E``.
    """
    hv, size = _shape(h)
    g = rician_scalar(scenario, cfg.position, scenario.pos_alice, rng, size)
    n_a = complex_normal(rng, 2.0 * scenario.noise_var / scenario.pilot_power_b, size)
    n_b = complex_normal(rng, 2.0 * scenario.noise_var / scenario.pilot_power_a, size)
    n_e = complex_normal(rng, 2.0 * scenario.noise_var / scenario.pilot_power_a, size)
    return hv + g * math.sqrt(cfg.spoof_gain) + n_a, hv + n_b, g + n_e


def spoof_mse(cfg: SpoofingConfig, scenario: ScenarioConfig) -> float:
    """Closed-form ``E|psi_A - psi_B|^2`` under spoofing."""
    p_los, p_nlos = _link_powers(scenario, cfg.position, scenario.pos_alice)
    floor = 2.0 * scenario.noise_var * (1.0 / scenario.pilot_power_a + 1.0 / scenario.pilot_power_b)
    return cfg.spoof_gain * (p_los + p_nlos) + floor


def detection_mse(psi_a, psi_b=None) -> float:
    """Mean of ``|psi_A - psi_B|^2``.

    Accepts two equal-length arrays, or a single sequence of
    ``(psi_a, psi_b)`` pairs.
    """
    if psi_b is None:
        pairs = np.asarray(list(psi_a), dtype=complex)
        if pairs.size == 0:
            raise ValueError("no rounds")
        pairs = pairs.reshape(-1, 2)
        psi_a, psi_b = pairs[:, 0], pairs[:, 1]
    a = np.asarray(psi_a, dtype=complex).reshape(-1)
    b = np.asarray(psi_b, dtype=complex).reshape(-1)
    if a.size == 0:
        raise ValueError("no rounds")
    if a.shape != b.shape:
        raise ValueError("probe sequences differ in length")
    return float(np.mean(np.abs(a - b) ** 2))


def undetectable_region(mse_curve, benchmark: float, detection_snr_db: float = 1.0):
    """Largest gain whose MSE stays below ``benchmark + detection SNR`` (in dB).

    ``mse_curve`` is a sequence of ``(gain, mse)`` pairs or a mapping from
    gain to MSE; gains may be in any unit.  Returns ``None`` when no tested
    gain is undetectable.
    """
    items = mse_curve.items() if hasattr(mse_curve, "items") else mse_curve
    pts = sorted((float(g), float(m)) for g, m in items)
    if not pts:
        raise ValueError("empty MSE curve")
    limit = lin2db(benchmark) + detection_snr_db
    ok = [g for g, m in pts if lin2db(m) <= limit]
    return max(ok) if ok else None
