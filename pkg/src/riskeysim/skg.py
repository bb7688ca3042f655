"""Legitimate key generation: channel probing, two-threshold quantizer, metrics.

Both probing schemes accept scalars or arrays of rounds; every random draw
is vectorized over the leading axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numpy.random import Generator
from numpy.typing import NDArray

from .channel import DirectChannel, complex_normal
from .config import ScenarioConfig

__all__ = [
    "KeyBit",
    "ProbeRound",
    "KeyStream",
    "csi_probe",
    "twoway_probe",
    "quantize_block",
    "key_match_rate",
    "available_key_rate",
]


class KeyBit(IntEnum):
    DROPPED = -1
    ZERO = 0
    ONE = 1


_CHARS = {KeyBit.ONE: "1", KeyBit.ZERO: "0", KeyBit.DROPPED: "-"}


@dataclass(frozen=True)
class ProbeRound:
    """Channel features seen by Alice and Bob.

    The CSI scheme fills ``h_a_hat``/``h_b_hat``; the two-way scheme fills
    ``phi_a_hat``/``phi_b_hat`` and the pilots.  ``noise_a``/``noise_b``
    are the feature-level noise terms.
    """

    h_a_hat: complex | NDArray | None = None
    h_b_hat: complex | NDArray | None = None
    phi_a_hat: complex | NDArray | None = None
    phi_b_hat: complex | NDArray | None = None
    q_a: complex | NDArray | None = None
    q_b: complex | NDArray | None = None
    noise_a: complex | NDArray | None = None
    noise_b: complex | NDArray | None = None

    @property
    def features(self):
        """(Alice, Bob) complex features of whichever scheme produced this round."""
        if self.h_a_hat is not None:
            return self.h_a_hat, self.h_b_hat
        return self.phi_a_hat, self.phi_b_hat


def _h(h):
    return h.h if isinstance(h, DirectChannel) else h


def csi_probe(h, h_e, cfg: ScenarioConfig, rng: Generator) -> ProbeRound:
    """Least-squares channel estimates at Alice and Bob.

    ``h_a_hat = h + h_E + n_A`` with ``n_A ~ CN(0, 2 sigma_n^2 / ||x_B||^2)``
    and symmetrically for Bob.
    """
    hc = np.asarray(_h(h)) + np.asarray(h_e)
    shape = hc.shape or None
    n_a = complex_normal(rng, 2.0 * cfg.noise_var / cfg.pilot_power_b, shape)
    n_b = complex_normal(rng, 2.0 * cfg.noise_var / cfg.pilot_power_a, shape)
    return ProbeRound(h_a_hat=hc + n_a, h_b_hat=hc + n_b, noise_a=n_a, noise_b=n_b)


def twoway_probe(h, h_e, cfg: ScenarioConfig, rng: Generator, *, q_a=None, q_b=None) -> ProbeRound:
    """Two-way cross multiplication of random pilots.

    Alice receives ``v_A = (h + h_E) q_B + n_A`` and forms ``phi_A = v_A q_A``;
    Bob does the mirror image.  Pilots are ``CN(0, twoway_power)`` unless
    given explicitly.
    """
    hc = np.asarray(_h(h)) + np.asarray(h_e)
    shape = hc.shape or None
    if q_a is None:
        q_a = complex_normal(rng, cfg.twoway_power, shape)
    if q_b is None:
        q_b = complex_normal(rng, cfg.twoway_power, shape)
    n_a = complex_normal(rng, 2.0 * cfg.noise_var, shape)
    n_b = complex_normal(rng, 2.0 * cfg.noise_var, shape)
    v_a = hc * q_b + n_a
    v_b = hc * q_a + n_b
    return ProbeRound(phi_a_hat=v_a * q_a, phi_b_hat=v_b * q_b, q_a=q_a, q_b=q_b,
                      noise_a=n_a * q_a, noise_b=n_b * q_b)


@dataclass(frozen=True, eq=False)
class KeyStream:
    outcomes: NDArray[np.int8]
    thresholds: tuple[float, float]
    block_stats: tuple[float, float]
    degenerate: bool = False

    def __len__(self):
        return self.outcomes.shape[0]

    def __eq__(self, other):
        return isinstance(other, KeyStream) and np.array_equal(self.outcomes, other.outcomes)

    @property
    def drop_rate(self) -> float:
        return float(np.mean(self.outcomes == KeyBit.DROPPED)) if len(self) else 0.0

    def to_text(self) -> str:
        lut = np.array(["-", "0", "1"])
        return "".join(lut[self.outcomes.astype(int) + 1])

    @classmethod
    def from_text(cls, text: str) -> "KeyStream":
        inv = {v: int(k) for k, v in _CHARS.items()}
        try:
            out = np.array([inv[c] for c in text.strip()], dtype=np.int8)
        except KeyError as exc:
            raise ValueError(f"invalid key character {exc}") from None
        return cls(out, (math.nan, math.nan), (math.nan, math.nan))


def quantize_block(features, beta: float) -> KeyStream:
    """Two-threshold quantizer with thresholds from the block's own statistics.

    ``gamma_1 = mean + beta * std`` and ``gamma_0 = mean - beta * std``
    (population std).  A sample above ``gamma_1`` gives 1, below
    ``gamma_0`` gives 0, anything else is dropped.  A block with zero
    spread is dropped entirely and flagged ``degenerate``.
    """
    z = np.asarray(features, dtype=float).reshape(-1)
    if z.size < 2:
        raise ValueError("block needs at least 2 samples")
    if not 0.0 <= beta < 0.5:
        raise ValueError(f"beta must lie in [0, 0.5), got {beta}")
    mean = float(z.mean())
    std = float(z.std())
    if not std > 0:
        return KeyStream(np.full(z.size, KeyBit.DROPPED, dtype=np.int8), (mean, mean), (mean, 0.0), True)
    g1 = mean + beta * std
    g0 = mean - beta * std
    out = np.full(z.size, KeyBit.DROPPED, dtype=np.int8)
    out[z > g1] = KeyBit.ONE
    out[z < g0] = KeyBit.ZERO
    return KeyStream(out, (g0, g1), (mean, std))


def _outcomes(s):
    return s.outcomes if isinstance(s, KeyStream) else np.asarray(s, dtype=np.int8)


def key_match_rate(a, b) -> float:
    """Fraction of rounds in which both parties emit the same bit."""
    a, b = _outcomes(a), _outcomes(b)
    if a.shape != b.shape:
        raise ValueError(f"stream lengths differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty streams")
    return float(np.mean((a == b) & (a != KeyBit.DROPPED)))


def available_key_rate(a, b, e, *, dropped_differs: bool = True) -> float:
    """Fraction of rounds where Alice and Bob agree on a bit Eve does not hold.

    With ``dropped_differs`` (default) a round Eve drops counts as unknown
    to her; otherwise Eve's dropped rounds are excluded from the available
    key as well.
    """
    a, b, e = _outcomes(a), _outcomes(b), _outcomes(e)
    if not (a.shape == b.shape == e.shape):
        raise ValueError("stream lengths differ")
    if a.size == 0:
        raise ValueError("empty streams")
    agree = (a == b) & (a != KeyBit.DROPPED)
    miss = e != a
    if not dropped_differs:
        miss &= e != KeyBit.DROPPED
    return float(np.mean(agree & miss))
