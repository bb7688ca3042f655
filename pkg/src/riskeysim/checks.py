"""Fast self-checks of the core invariants, run by ``riskeysim validate``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baselines import RelayConfig, detection_mse, relay_round
from .channel import UpaGeometry, link_epoch, sample_direct, sample_path_angles
from .config import paper_scenario
from .harness import ExperimentSpec, Variant, format_csv, run_figure
from .phase_opt import optimize_phase
from .ris import deceiving_channel, g_operator, random_phases, stats_fixed_phase
from .sensing import build_dictionary, omp, place_sensors
from .skg import key_match_rate, quantize_block
from .theory import kmr_limit, theoretical_kmr

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _theory_bounds():
    worst = 0.0
    for beta in (0.0, 0.1, 0.3, 0.45):
        lo, hi = 2 * (0.5 * math.erfc(beta / math.sqrt(2))) ** 2, kmr_limit(beta)
        for r in (0.0, 0.3, 1.0, 3.0, 30.0):
            p = theoretical_kmr(r, beta)
            worst = max(worst, lo - p, p - hi)
    return worst <= 1e-9, f"max bound violation {worst:.2e}"


def _variance_identity():
    cfg = paper_scenario().with_ris_size(16)
    geom = UpaGeometry.from_config(cfg)
    rng = np.random.default_rng(7)
    ea = link_epoch(cfg, geom, "alice", sample_path_angles(rng, cfg.iota))
    eb = link_epoch(cfg, geom, "bob", sample_path_angles(rng, cfg.iota))
    w = random_phases(rng, 16, 1.0)
    n = 40_000
    ga = ea.g_los + ea.nlos(ea.sample_gains(rng, n))
    gb = eb.g_los + eb.nlos(eb.sample_gains(rng, n))
    h = deceiving_channel(w, ga, gb)
    st = stats_fixed_phase(w, ea, eb)
    rel = abs(np.var(h) / (2 * st.sigma_e2) - 1)
    return rel < 0.05, f"MC/analytic variance off by {rel:.3%}"


def _optimizer():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 5)) + 1j * rng.standard_normal((8, 5))
    g = x @ x.conj().T
    res = optimize_phase(g, 2.0, rng=rng, full_output=True)
    feas = np.max(np.abs(np.abs(res.phase.weights) ** 2 - 2.0))
    mono = bool(np.all(np.diff(res.history) >= -1e-12 * abs(res.history[-1])))
    return feas < 1e-12 and mono, f"feasibility error {feas:.1e}, monotone={mono}"


def _omp_exact():
    # a coarse grid on a large surface keeps the 20-row operator incoherent;
    # at the default 64x64 grid exact support recovery is not expected
    cfg = paper_scenario().with_ris_size(6400)
    d = build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, 8, 8)
    s = place_sensors(d, 20)
    a = d.rows(s.rows)
    rng = np.random.default_rng(5)
    trials, hits = 50, 0
    for _ in range(trials):
        idx = rng.choice(d.size, 3, replace=False)
        g = d.columns(idx) @ (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        est = omp(s.apply(g), a, 3)
        hits += np.linalg.norm(est.reconstruct(d) - g) <= 1e-6 * np.linalg.norm(g)
    return hits >= 0.9 * trials, f"{hits}/{trials} 3-sparse draws recovered exactly (M=6400, 8x8 grid)"


def _quantizer():
    z = np.random.default_rng(1).standard_normal(10_000)
    k = quantize_block(z, 0.1)
    p = key_match_rate(k, k)
    return abs(p - (1 - k.drop_rate)) < 1e-12, f"self match {p:.4f}, drop rate {k.drop_rate:.4f}"


def _relay_reciprocity():
    cfg = paper_scenario()
    rng = np.random.default_rng(2)
    h = sample_direct(cfg, rng, 50_000)
    a, b, _ = relay_round(RelayConfig(1e6), h, cfg, rng)
    mse = detection_mse(a, b)
    floor = 4.0 * cfg.noise_var / cfg.pilot_power_a
    return abs(mse / floor - 1) < 0.03, f"relay MSE / noise floor = {mse / floor:.4f}"


def _determinism():
    spec = ExperimentSpec("custom", "amp_gain_db", (0.0, 10.0),
                          (Variant("eve_ris", "optimized", "csi", 16), Variant("none")),
                          base=paper_scenario(), rounds=600, seed=11, epochs=2, block=128)
    a = format_csv(spec, run_figure(spec, threads=1))
    b = format_csv(spec, run_figure(spec, threads=3))
    return a == b, "identical CSV at 1 and 3 threads" if a == b else "CSV differs between thread counts"


_CHECKS = {
    "theory bounds": _theory_bounds,
    "fixed-phase variance identity": _variance_identity,
    "optimizer feasibility and ascent": _optimizer,
    "OMP exact recovery": _omp_exact,
    "quantizer self-consistency": _quantizer,
    "relay keeps reciprocity": _relay_reciprocity,
    "thread-count determinism": _determinism,
}


def run_checks() -> list[CheckResult]:
    out = []
    for name, fn in _CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
