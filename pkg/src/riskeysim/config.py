"""Scenario description and its JSON form.

All quantities are linear inside the package.  JSON documents may give any
power-like field in decibels by appending ``_db`` (or ``_dbw`` for absolute
powers); the conversion happens once, on load.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

__all__ = ["ConfigError", "ScenarioConfig", "paper_scenario", "db2lin", "lin2db"]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def db2lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


# fields accepted in dB form and the suffix they use
_DB_FIELDS = {
    "c0": ("_db",),
    "amp_gain": ("_db",),
    "pilot_power_a": ("_dbw",),
    "pilot_power_b": ("_dbw",),
    "twoway_power": ("_dbw",),
    "noise_var": ("_dbw",),
}


def _vec3(v, name):
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"{name} must be a finite 3-vector, got {v!r}")
    return tuple(float(x) for x in a)


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, propagation, power and quantizer settings for one experiment.

    ``iota`` counts NLoS paths only.  The deterministic LoS path of each
    RIS link is added on top of them, so a scene described as "5 paths, the
    first one LoS" is ``iota=4``.
    """

    pos_alice: tuple = (0.0, 0.0, 0.0)
    pos_bob: tuple = (0.0, 50.0, 0.0)
    pos_eve: tuple = (0.0, 10.0, 5.0)
    c0: float = 1e-3
    alpha_los: float = 2.0
    alpha_nlos: float = 3.0
    iota: int = 4
    lam: float = 0.1
    mx: int = 10
    my: int = 10
    elem_spacing: float = 0.0125
    pilot_power_a: float = 0.1
    pilot_power_b: float = 0.1
    twoway_power: float = 1.0
    noise_var: float = 1e-11
    amp_gain: float = 1.0
    beta: float = 0.1
    trials: int = 100_000
    seed: int = 0
    akr_dropped_differs: bool = True  # a round Eve drops counts toward the available key

    def __post_init__(self):
        for name in ("pos_alice", "pos_bob", "pos_eve"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        pts = {"alice": self.pos_alice, "bob": self.pos_bob, "eve": self.pos_eve}
        keys = list(pts)
        for i, a in enumerate(keys):
            for b in keys[i + 1:]:
                if math.dist(pts[a], pts[b]) <= 0.0:
                    raise ConfigError(f"{a} and {b} share a position")
        if not self.c0 > 0:
            raise ConfigError("c0 must be > 0")
        if not self.alpha_los >= 2:
            raise ConfigError("alpha_los must be >= 2")
        if not self.alpha_nlos >= self.alpha_los:
            raise ConfigError("alpha_nlos must be >= alpha_los")
        if int(self.iota) != self.iota or self.iota < 1:
            raise ConfigError("iota must be an integer >= 1")
        if not 0.0 <= self.beta < 0.5:
            raise ConfigError("beta must lie in [0, 0.5)")
        if self.lam <= 0 or self.elem_spacing <= 0:
            raise ConfigError("lam and elem_spacing must be > 0")
        if self.mx < 1 or self.my < 1:
            raise ConfigError("mx and my must be >= 1")
        for name in ("pilot_power_a", "pilot_power_b", "twoway_power"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.noise_var < 0 or self.amp_gain < 0:
            raise ConfigError("noise_var and amp_gain must be >= 0")
        if self.trials < 0:
            raise ConfigError("trials must be >= 0")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "iota", int(self.iota))
        object.__setattr__(self, "mx", int(self.mx))
        object.__setattr__(self, "my", int(self.my))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "trials", int(self.trials))

    @property
    def n_elements(self) -> int:
        return self.mx * self.my

    @property
    def d_ab(self) -> float:
        return math.dist(self.pos_alice, self.pos_bob)

    @property
    def d_ae(self) -> float:
        return math.dist(self.pos_alice, self.pos_eve)

    @property
    def d_be(self) -> float:
        return math.dist(self.pos_bob, self.pos_eve)

    def with_(self, **changes) -> "ScenarioConfig":
        """Copy with some fields replaced (``*_db`` keys are converted)."""
        return replace(self, **_normalize(changes))

    def with_ris_size(self, m: int) -> "ScenarioConfig":
        """Square ``sqrt(m) x sqrt(m)`` RIS."""
        side = math.isqrt(m)
        if side * side != m:
            raise ConfigError(f"RIS size {m} is not a perfect square")
        return replace(self, mx=side, my=side)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("pos_alice", "pos_bob", "pos_eve"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        try:
            return cls(**_normalize(doc))
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path_or_text) -> "ScenarioConfig":
        text = str(path_or_text)
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc = doc.get("scenario", doc)
        return cls.from_dict(doc)


_NAMES = {f.name for f in fields(ScenarioConfig)}


def _normalize(doc: dict) -> dict:
    out = {}
    for key, val in doc.items():
        if key == "lambda":
            key = "lam"
        base = None
        for name, suffixes in _DB_FIELDS.items():
            for suf in suffixes:
                if key == name + suf:
                    base = name
        if base is not None:
            if base in doc:
                raise ConfigError(f"both {base} and {key} given")
            out[base] = float(db2lin(val))
        elif key in _NAMES:
            out[key] = val
        else:
            raise ConfigError(f"unknown config field {key!r}")
    return out


def paper_scenario(**overrides) -> ScenarioConfig:
    """The reference scene: Alice, Bob 50 m apart, RIS at (0, 10, 5).

    C0 = -30 dB, path-loss exponents 2 (LoS) and 3 (NLoS), 4 NLoS paths
    plus LoS, pilots of 0.1 W, two-way pilots of unit power, noise
    -110 dBW, element pitch lambda/8.
    """
    cfg = ScenarioConfig()
    if overrides:
        cfg = cfg.with_(**overrides)
    return cfg
