"""Monte Carlo engine and figure presets.

Randomness is organized in blocks.  Every block of rounds draws from its
own Philox stream keyed by ``(seed, epoch, block, purpose)``, and blocks are
concatenated in a fixed order, so a run is bit-identical for any thread
count.  The same streams are reused at every sweep point (common random
numbers), which keeps sweep curves smooth.

A scatterer epoch fixes the NLoS path angles of both RIS links; the path
gains, the direct channel and all noise are fresh in every round.  The
optimized Eve-RIS phase is recomputed once per epoch from the true link
covariances.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import subprocess
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from numpy.typing import NDArray

from . import __version__
from .baselines import RelayConfig, SpoofingConfig, relay_round, spoof_round
from .channel import UpaGeometry, complex_normal, link_epoch, sample_path_angles
from .config import ConfigError, ScenarioConfig, db2lin, lin2db, paper_scenario
from .phase_opt import OptimizerConfig, optimize_phase
from .ris import g_operator, random_phases
from .sensing import EveReceiver, build_dictionary, place_sensors
from .skg import KeyBit, available_key_rate, csi_probe, key_match_rate, quantize_block, twoway_probe
from .theory import kmr_limit, theoretical_kmr

__all__ = [
    "Variant",
    "ExperimentSpec",
    "ResultRow",
    "CSV_COLUMNS",
    "FIGURES",
    "preset",
    "run_point",
    "run_figure",
    "write_csv",
    "format_csv",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("sweep_value", "variant", "kmr_ae", "kmr_ab", "akr", "mse_ab_dbw",
               "stderr_kmr_ae", "rounds", "seed")
FIGURES = ("fig1b", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8")
ATTACKERS = ("eve_ris", "relay", "spoof", "none")
PHASES = ("random", "optimized")
SCHEMES = ("csi", "twoway")

# stream purposes inside a block
_H, _GA, _GB, _LEGIT, _EVE, _PHASE, _PILOT, _ATTACK = range(8)
_ANGLES, _OPT = 1 << 20, (1 << 20) + 1


@dataclass(frozen=True)
class Variant:
    """One curve of a figure."""

    attacker: str = "eve_ris"
    phase: str = "optimized"
    scheme: str = "csi"
    m: int | None = None
    amp_gain_db: float | None = None
    relay_gain_db: float = 60.0
    spoof_gain_db: float = -50.0
    sweep: tuple | None = None  # overrides the figure's sweep values

    def __post_init__(self):
        if self.attacker not in ATTACKERS:
            raise ConfigError(f"attacker must be one of {ATTACKERS}")
        if self.phase not in PHASES:
            raise ConfigError(f"phase strategy must be one of {PHASES}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"probing scheme must be one of {SCHEMES}")
        if self.attacker in ("relay", "spoof") and self.scheme != "csi":
            raise ConfigError(f"the {self.attacker} baseline is defined for CSI probing only")
        if self.m is not None and (self.m < 1 or math.isqrt(self.m) ** 2 != self.m):
            raise ConfigError(f"RIS size {self.m} is not a positive perfect square")
        if self.sweep is not None:
            object.__setattr__(self, "sweep", tuple(float(v) for v in self.sweep))

    @property
    def id(self) -> str:
        return self.label()

    def label(self, sweep_param: str | None = None) -> str:
        """Curve name; a gain that is being swept is left out of it."""
        swept_amp = sweep_param in ("amp_gain_db", "gain_db")
        swept = {"relay": ("gain_db", "relay_gain_db"), "spoof": ("gain_db", "spoof_gain_db")}
        if self.attacker == "eve_ris":
            tag = f"eve_ris:{self.phase}:M{self.m if self.m else 'base'}"
            if self.amp_gain_db is not None and not swept_amp:
                tag += f":A{self.amp_gain_db:g}dB"
        elif self.attacker in swept and sweep_param in swept[self.attacker]:
            tag = self.attacker
        elif self.attacker == "relay":
            tag = f"relay:{self.relay_gain_db:g}dB"
        elif self.attacker == "spoof":
            tag = f"spoof:{self.spoof_gain_db:g}dB"
        else:
            tag = "none"
        return f"{tag}:{self.scheme}"

    def resolve(self, base: ScenarioConfig) -> ScenarioConfig:
        cfg = base if self.m is None else base.with_ris_size(self.m)
        if self.amp_gain_db is not None:
            cfg = cfg.with_(amp_gain_db=self.amp_gain_db)
        return cfg

    def core(self) -> "Variant":
        """The variant without its sweep override (the simulation identity)."""
        return replace(self, sweep=None)


def apply_sweep(cfg: ScenarioConfig, v: Variant, param: str, value: float):
    """Scenario and variant at one sweep point."""
    try:
        if param == "beta":
            return cfg.with_(beta=value), v
        if param == "amp_gain_db":
            return cfg.with_(amp_gain_db=value), v
        if param == "eve_y":
            x, _, z = cfg.pos_eve
            return cfg.with_(pos_eve=(x, value, z)), v
        if param == "gain_db":
            if v.attacker == "eve_ris":
                return cfg.with_(amp_gain_db=value), v
            if v.attacker == "relay":
                return cfg, replace(v, relay_gain_db=value)
            if v.attacker == "spoof":
                return cfg, replace(v, spoof_gain_db=value)
            return cfg, v
        if param in ("relay_gain_db", "spoof_gain_db"):
            return cfg, replace(v, **{param: value})
        return cfg.with_(**{param: value}), v
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot apply {param}={value}: {exc}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    figure_id: str
    sweep_param: str
    sweep_values: tuple
    variants: tuple
    base: ScenarioConfig = field(default_factory=paper_scenario)
    rounds: int = 100_000
    seed: int = 0
    epochs: int = 200
    opt_budget: int = 256  # phase optimizations allowed per point
    grid: tuple = (64, 64)
    sensors: int = 20
    sparsity: int | None = None  # default: iota NLoS paths + LoS
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    block: int = 2048
    block_elems: int = 1 << 22

    def __post_init__(self):
        if self.figure_id not in FIGURES and not self.figure_id.startswith("custom"):
            raise ConfigError(f"unknown figure {self.figure_id!r}; known: {', '.join(FIGURES)}")
        vals = tuple(float(v) for v in self.sweep_values)
        if not vals or not all(math.isfinite(v) for v in vals):
            raise ConfigError("sweep values must be finite and non-empty")
        object.__setattr__(self, "sweep_values", vals)
        object.__setattr__(self, "variants", tuple(self.variants))
        if not self.variants and self.figure_id != "fig1b":
            raise ConfigError("no variants")
        if self.rounds < 2 and self.figure_id != "fig1b":
            raise ConfigError("rounds must be >= 2 (quantization needs a block of samples)")
        if self.epochs < 1 or self.sensors < 1 or self.block < 1:
            raise ConfigError("epochs, sensors and block must be >= 1")
        if min(self.grid) < 2:
            raise ConfigError("dictionary grid counts must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if any(v.phase == "optimized" and v.attacker == "eve_ris" for v in self.variants) \
                and self.n_epochs > self.opt_budget:
            raise ConfigError(f"optimized phase needs one re-optimization per scatterer epoch: "
                              f"{self.n_epochs} epochs exceed the budget of {self.opt_budget}")

    @property
    def n_epochs(self) -> int:
        return max(1, min(self.epochs, self.rounds))

    def points(self):
        """``(variant, sweep_value)`` pairs in output order."""
        out = []
        for v in self.variants:
            for x in (v.sweep if v.sweep is not None else self.sweep_values):
                out.append((v, x))
        return out

    def to_dict(self) -> dict:
        d = {
            "figure_id": self.figure_id,
            "sweep_param": self.sweep_param,
            "sweep_values": list(self.sweep_values),
            "variants": [asdict(v) for v in self.variants],
            "base": self.base.to_dict(),
            "rounds": self.rounds,
            "seed": self.seed,
            "epochs": self.epochs,
            "opt_budget": self.opt_budget,
            "grid": list(self.grid),
            "sensors": self.sensors,
            "sparsity": self.sparsity,
            "optimizer": asdict(self.optimizer),
            "block": self.block,
            "block_elems": self.block_elems,
        }
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ResultRow:
    sweep_value: float
    variant: str
    kmr_ae: float
    kmr_ab: float
    akr: float
    mse_ab_dbw: float
    stderr_kmr_ae: float
    rounds: int
    seed: int

    def __post_init__(self):
        for name in ("kmr_ae", "kmr_ab", "akr"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")

    def as_tuple(self):
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass
class Features:
    """Pooled real-valued features of one simulated point."""

    a: NDArray[np.float64]
    b: NDArray[np.float64]
    e: NDArray[np.float64] | None  # None: no eavesdropper stream
    sq_err: float  # sum of |f_A - f_B|^2 over rounds

    @property
    def rounds(self) -> int:
        return self.a.shape[0]


def _rng(seed: int, *key) -> Generator:
    return Generator(Philox(SeedSequence(seed, spawn_key=tuple(int(k) for k in key))))


class _Context:
    """Per-run caches: dictionaries, sensor layouts, epoch links, optimized phases."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self._lock = threading.Lock()
        self._receivers = {}
        self._angles = {}
        self._phases = {}

    def receiver(self, cfg: ScenarioConfig) -> EveReceiver:
        key = (cfg.mx, cfg.my, cfg.elem_spacing, cfg.lam, cfg.iota)
        with self._lock:
            if key not in self._receivers:
                geom = UpaGeometry.from_config(cfg)
                d = build_dictionary(geom, cfg.lam, *self.spec.grid)
                sense = place_sensors(d, min(self.spec.sensors, geom.n_elements))
                k = self.spec.sparsity or cfg.iota + 1
                self._receivers[key] = EveReceiver(d, sense, k)
            return self._receivers[key]

    def angles(self, iota: int, epoch: int):
        with self._lock:
            key = (iota, epoch)
            if key not in self._angles:
                rng = _rng(self.spec.seed, _ANGLES, epoch)
                self._angles[key] = (sample_path_angles(rng, iota), sample_path_angles(rng, iota))
            return self._angles[key]

    def links(self, cfg: ScenarioConfig, epoch: int):
        ang_a, ang_b = self.angles(cfg.iota, epoch)
        geom = UpaGeometry.from_config(cfg)
        return link_epoch(cfg, geom, "alice", ang_a), link_epoch(cfg, geom, "bob", ang_b)

    def phases(self, cfg: ScenarioConfig, epoch: int, ea, eb) -> NDArray[np.float64]:
        """Optimized phases for unit amplitude gain.

        The ascent is scale-free in ``A_E`` (projection removes the
        amplitude), so one optimization per epoch and geometry serves every
        amplifying gain.
        """
        key = (replace(cfg, amp_gain=1.0, beta=0.0, noise_var=0.0, trials=0, seed=0), epoch)
        with self._lock:
            if key not in self._phases:
                rng = _rng(self.spec.seed, _OPT, epoch)
                pv = optimize_phase(g_operator(ea, eb), 1.0, self.spec.optimizer, rng)
                self._phases[key] = pv.phases
            return self._phases[key]


def _hE_fixed(w, ea, eb, ga, gb):
    """Exact ``sum_m w_m g_A,m g_B,m`` for fixed ``w`` without building the M-vectors."""
    s = 1.0 / math.sqrt(ea.iota), 1.0 / math.sqrt(eb.iota)
    c0 = np.sum(w * ea.g_los * eb.g_los)
    va = (w * eb.g_los) @ ea.atoms
    vb = (w * ea.g_los) @ eb.atoms
    cross = ea.atoms.T @ (w[:, None] * eb.atoms)
    return (c0 + s[0] * (ga @ va) + s[1] * (gb @ vb)
            + s[0] * s[1] * np.einsum("ni,ij,nj->n", ga, cross, gb))


def _hE_random(w, ea, eb, ga, gb):
    return np.sum(w * (ea.g_los + ea.nlos(ga)) * (eb.g_los + eb.nlos(gb)), axis=1)


def _sensor_samples(ep, gains, rows):
    return ep.g_los[rows] + (gains / math.sqrt(ep.iota)) @ ep.atoms[rows].T


def _eve_ris_block(ctx, cfg, v, epoch, blk, n):
    seed = ctx.spec.seed
    ea, eb = ctx.links(cfg, epoch)
    rx = ctx.receiver(cfg)
    rows = rx.sense.rows
    h = complex_normal(_rng(seed, epoch, blk, _H), cfg.c0 * cfg.d_ab ** (-cfg.alpha_nlos), n)
    ga = ea.sample_gains(_rng(seed, epoch, blk, _GA), n)
    gb = eb.sample_gains(_rng(seed, epoch, blk, _GB), n)
    if v.phase == "optimized":
        w = math.sqrt(cfg.amp_gain) * np.exp(1j * ctx.phases(cfg, epoch, ea, eb))
        h_e = _hE_fixed(w, ea, eb, ga, gb)
    else:
        w = random_phases(_rng(seed, epoch, blk, _PHASE), cfg.n_elements, cfg.amp_gain, n)
        h_e = _hE_random(w, ea, eb, ga, gb)
    legit = _rng(seed, epoch, blk, _LEGIT)
    eve = _rng(seed, epoch, blk, _EVE)
    sa, sb = _sensor_samples(ea, ga, rows), _sensor_samples(eb, gb, rows)
    c = rows.size
    if v.scheme == "csi":
        probe = csi_probe(h, h_e, cfg, legit)
        ya = sa + complex_normal(eve, 2.0 * cfg.noise_var / cfg.pilot_power_a, (n, c))
        yb = sb + complex_normal(eve, 2.0 * cfg.noise_var / cfg.pilot_power_b, (n, c))
    else:
        pil = _rng(seed, epoch, blk, _PILOT)
        qa = complex_normal(pil, cfg.twoway_power, n)
        qb = complex_normal(pil, cfg.twoway_power, n)
        probe = twoway_probe(h, h_e, cfg, legit, q_a=qa, q_b=qb)
        ya = sa * qa[:, None] + complex_normal(eve, 2.0 * cfg.noise_var, (n, c))
        yb = sb * qb[:, None] + complex_normal(eve, 2.0 * cfg.noise_var, (n, c))
    est = rx.cascade(rx.estimate(ya), rx.estimate(yb), w)
    fa, fb = probe.features
    return fa, fb, est


def _block(ctx: _Context, cfg: ScenarioConfig, v: Variant, epoch: int, blk: int, n: int):
    seed = ctx.spec.seed
    if v.attacker == "eve_ris":
        fa, fb, fe = _eve_ris_block(ctx, cfg, v, epoch, blk, n)
    else:
        h = complex_normal(_rng(seed, epoch, blk, _H), cfg.c0 * cfg.d_ab ** (-cfg.alpha_nlos), n)
        att = _rng(seed, epoch, blk, _ATTACK)
        if v.attacker == "relay":
            fa, fb, fe = relay_round(RelayConfig(float(db2lin(v.relay_gain_db)), cfg.pos_eve), h, cfg, att)
        elif v.attacker == "spoof":
            fa, fb, fe = spoof_round(SpoofingConfig(float(db2lin(v.spoof_gain_db)), cfg.pos_eve), h, cfg, att)
        else:
            legit = _rng(seed, epoch, blk, _LEGIT)
            if v.scheme == "csi":
                probe = csi_probe(h, 0.0, cfg, legit)
            else:
                pil = _rng(seed, epoch, blk, _PILOT)
                qa = complex_normal(pil, cfg.twoway_power, n)
                qb = complex_normal(pil, cfg.twoway_power, n)
                probe = twoway_probe(h, 0.0, cfg, legit, q_a=qa, q_b=qb)
            fa, fb = probe.features
            fe = None
    sq = float(np.sum(np.abs(fa - fb) ** 2))
    return fa.real, fb.real, (None if fe is None else fe.real), sq


def _layout(spec: ExperimentSpec, cfg: ScenarioConfig, rounds: int):
    """``(epoch, block, n)`` triples covering ``rounds`` rounds."""
    e = max(1, min(spec.epochs, rounds))
    per = [rounds // e + (i < rounds % e) for i in range(e)]
    bsize = min(spec.block, max(64, spec.block_elems // cfg.n_elements))
    out = []
    for ep, r in enumerate(per):
        for b, lo in enumerate(range(0, r, bsize)):
            out.append((ep, b, min(bsize, r - lo)))
    return out


def _metrics(f: Features, cfg: ScenarioConfig, sweep_value: float, label: str, seed: int) -> ResultRow:
    beta = cfg.beta
    ka = quantize_block(f.a, beta)
    kb = quantize_block(f.b, beta)
    if f.e is None:
        ke = np.full(f.rounds, KeyBit.DROPPED, dtype=np.int8)
    else:
        ke = quantize_block(f.e, beta)
    p_ae = key_match_rate(ka, ke)
    mse = f.sq_err / f.rounds
    return ResultRow(
        sweep_value=float(sweep_value),
        variant=label,
        kmr_ae=p_ae,
        kmr_ab=key_match_rate(ka, kb),
        akr=available_key_rate(ka, kb, ke, dropped_differs=cfg.akr_dropped_differs),
        mse_ab_dbw=float(lin2db(mse)) if mse > 0 else -math.inf,
        stderr_kmr_ae=math.sqrt(p_ae * (1.0 - p_ae) / f.rounds),
        rounds=f.rounds,
        seed=seed,
    )


def _theory_rows(spec: ExperimentSpec) -> list[ResultRow]:
    beta = spec.base.beta
    lim = kmr_limit(beta)
    rows = []
    for v in spec.sweep_values:
        p = theoretical_kmr(10.0 ** (v / 20.0), beta)
        rows.append(ResultRow(v, "theory", p, lim, max(0.0, lim - p), math.nan, 0.0, 0, spec.seed))
    return rows


def run_figure(spec: ExperimentSpec, threads: int = 1) -> list[ResultRow]:
    """All sweep points of ``spec``, one row per (variant, sweep value)."""
    if spec.figure_id == "fig1b":
        return _theory_rows(spec)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    ctx = _Context(spec)
    points = []
    sims = {}
    for v, x in spec.points():
        cfg, vv = apply_sweep(v.resolve(spec.base), v.core(), spec.sweep_param, x)
        key = (vv, replace(cfg, beta=0.0, akr_dropped_differs=True))
        sims.setdefault(key, None)
        points.append((v, x, cfg, key))
    keys = list(sims)
    jobs = []
    for ki, (vv, cfg) in enumerate(keys):
        for ep, b, n in _layout(spec, cfg, spec.rounds):
            jobs.append((ki, vv, cfg, ep, b, n))

    def work(job):
        _, vv, cfg, ep, b, n = job
        return _block(ctx, cfg, vv, ep, b, n)

    # warm the caches serially so that cache contents never depend on scheduling
    for vv, cfg in keys:
        if vv.attacker == "eve_ris":
            ctx.receiver(cfg)
    if threads == 1:
        results = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))

    parts = {ki: [] for ki in range(len(keys))}
    for job, res in zip(jobs, results):
        parts[job[0]].append(res)
    for ki, key in enumerate(keys):
        blocks = parts[ki]
        e = None if blocks[0][2] is None else np.concatenate([r[2] for r in blocks])
        sims[key] = Features(np.concatenate([r[0] for r in blocks]), np.concatenate([r[1] for r in blocks]),
                             e, math.fsum(r[3] for r in blocks))
    return [_metrics(sims[key], cfg, x, v.label(spec.sweep_param), spec.seed)
            for v, x, cfg, key in points]


def run_point(cfg: ScenarioConfig, variant: Variant, rounds: int | None = None, seed: int | None = None,
              **options) -> ResultRow:
    """Single experiment point; ``options`` are extra :class:`ExperimentSpec` fields."""
    rounds = cfg.trials if rounds is None else rounds
    seed = cfg.seed if seed is None else seed
    if rounds < 1:
        raise ConfigError("rounds must be >= 1")
    spec = ExperimentSpec("custom", "beta", (cfg.beta,), (variant,), base=cfg, rounds=rounds,
                          seed=seed, **options)
    return run_figure(spec)[0]


def _gains(lo, hi, step):
    return tuple(float(x) for x in np.arange(lo, hi + step / 2, step))


def preset(figure_id: str, base: ScenarioConfig | None = None, *, rounds: int | None = None,
           seed: int | None = None, **options) -> ExperimentSpec:
    """Experiment definition of a named figure.

    ``base`` replaces the reference scenario; ``rounds`` defaults to the
    scenario's trial count (`fig8`: 20 000).
    """
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure {figure_id!r}; known: {', '.join(FIGURES)}")
    base = paper_scenario() if base is None else base
    seed = base.seed if seed is None else seed
    r = base.trials if rounds is None else rounds
    betas = _gains(0.0, 0.45, 0.05)
    ae = _gains(0, 30, 5)
    if figure_id == "fig1b":
        return ExperimentSpec("fig1b", "ratio_db", _gains(-20, 40, 1), (), base, 0, seed, **options)
    if figure_id in ("fig2", "fig4"):
        scheme = "csi" if figure_id == "fig2" else "twoway"
        vs = [Variant("none", scheme=scheme)]
        vs += [Variant("eve_ris", ph, scheme, m) for m in (100, 400) for ph in ("random", "optimized")]
        return ExperimentSpec(figure_id, "amp_gain_db", ae, tuple(vs), base, r, seed, **options)
    if figure_id in ("fig3", "fig5"):
        scheme = "csi" if figure_id == "fig3" else "twoway"
        vs = [Variant("none", scheme=scheme)]
        vs += [Variant("eve_ris", "optimized", scheme, m, amp_gain_db=0.0) for m in (100, 400, 1600, 6400)]
        return ExperimentSpec(figure_id, "beta", betas, tuple(vs), base, r, seed, **options)
    if figure_id in ("fig6", "fig7"):
        vs = [Variant("eve_ris", "optimized", "csi", 100, sweep=ae),
              Variant("spoof", sweep=_gains(-80, -20, 5))]
        if figure_id == "fig6":
            vs.insert(0, Variant("none", sweep=(0.0,)))
        return ExperimentSpec(figure_id, "gain_db", ae, tuple(vs), base, r, seed, **options)
    r = 20_000 if rounds is None else rounds
    b8 = base.with_(pos_eve=(base.pos_eve[0], 1.0, 0.0))
    vs = [Variant("eve_ris", "optimized", "csi", m, amp_gain_db=0.0) for m in (100, 400, 1600)]
    vs.append(Variant("relay", relay_gain_db=60.0))
    return ExperimentSpec("fig8", "eve_y", _gains(1, 49, 1), tuple(vs), b8, r, seed, **options)


def _provenance() -> str:
    try:
        out = subprocess.run(["git", "-C", str(Path(__file__).resolve().parent), "describe", "--always",
                              "--dirty"], capture_output=True, text=True, timeout=10)
        ref = out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "untracked"
    except (OSError, subprocess.SubprocessError):
        ref = "untracked"
    return f"riskeysim {__version__} ({ref})"


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return format(x, ".10g")
    return str(x)


def format_csv(spec: ExperimentSpec, rows, *, sensor_layouts: dict | None = None) -> str:
    """CSV text with a ``#`` comment header describing the run."""
    buf = io.StringIO()
    buf.write(f"# figure: {spec.figure_id}\n")
    buf.write(f"# config_hash: {spec.config_hash()}\n")
    buf.write(f"# seed: {spec.seed}\n")
    buf.write(f"# provenance: {_provenance()}\n")
    buf.write(f"# sweep: {spec.sweep_param}\n")
    buf.write(f"# dictionary: {spec.grid[0]}x{spec.grid[1]}, sensors: {spec.sensors}, "
              f"epochs: {spec.n_epochs}\n")
    buf.write("# optimized phase: recomputed per scatterer epoch and geometry; shared across A_E "
              "(the optimum is scale-free in A_E)\n")
    for m, idx in sorted((sensor_layouts or {}).items()):
        buf.write(f"# sensors M={m}: {' '.join(str(i) for i in idx)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(x) for x in r.as_tuple()])
    return buf.getvalue()


def sensor_layouts(spec: ExperimentSpec) -> dict:
    """Greedy sensor indices for every Eve-RIS size in ``spec``."""
    out = {}
    for v in spec.variants:
        if v.attacker != "eve_ris":
            continue
        cfg = v.resolve(spec.base)
        if cfg.n_elements in out:
            continue
        d = build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, *spec.grid)
        out[cfg.n_elements] = place_sensors(d, min(spec.sensors, cfg.n_elements)).rows.tolist()
    return out


def write_csv(spec: ExperimentSpec, rows, path) -> None:
    Path(path).write_text(format_csv(spec, rows, sensor_layouts=sensor_layouts(spec)))
