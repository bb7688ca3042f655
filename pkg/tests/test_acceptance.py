"""End-to-end acceptance criteria.

Every test prints one ``[PASS]``/``[FAIL]`` line (collected again in the
terminal summary) and then asserts the same condition with the pinned
tolerance.  Expensive Monte Carlo runs are shared through module fixtures.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from riskeysim.baselines import undetectable_region
from riskeysim.channel import UpaGeometry, complex_normal, link_epoch, sample_direct, sample_path_angles
from riskeysim.config import db2lin, paper_scenario
from riskeysim.harness import FIGURES, Variant, format_csv, preset, run_figure
from riskeysim.phase_opt import optimize_phase
from riskeysim.ris import g_operator, g_matrix, random_phases, stats_fixed_phase, stats_random_phase
from riskeysim.sensing import build_dictionary, condition_number, omp, place_sensors
from riskeysim.skg import csi_probe, key_match_rate, quantize_block
from riskeysim.theory import kmr_derivative_signs, kmr_limit, theoretical_kmr

pytestmark = pytest.mark.acceptance

REF = paper_scenario()


def rows_by(rows, variant):
    return {r.sweep_value: r for r in rows if r.variant == variant}


# -- 1. limit law ------------------------------------------------------------

def test_01_limit_law(verdict):
    rng = np.random.default_rng(101)
    n = 100_000
    h = sample_direct(REF, rng, n)
    # inserted channel with sigma_E^2 / sigma_h^2 = 1e5; Eve knows it exactly
    h_e = complex_normal(rng, 1e5 * h.var2, n)
    pr = csi_probe(h, h_e, REF, rng)
    p = key_match_rate(quantize_block(pr.h_a_hat.real, 0.1), quantize_block(h_e.real, 0.1))
    ok = abs(p - 0.9203) <= 0.01 and abs(p - 0.92) <= 0.01
    verdict(1, "limit law", ok, f"Pr(kA=kE) = {p:.4f} (target 0.9203 +- 0.01; limit {kmr_limit(0.1):.4f})")
    assert ok


# -- 2. theory vs simulation -------------------------------------------------

def test_02_theory_matches_simulation(verdict):
    rng = np.random.default_rng(102)
    n = 1_000_000
    worst = 0.0
    for ratio, beta in itertools.product((0.5, 1, 2, 5, 10), (0.1, 0.3)):
        z_e = ratio * rng.standard_normal(n)
        z_a = z_e + rng.standard_normal(n)
        p = key_match_rate(quantize_block(z_a, beta), quantize_block(z_e, beta))
        q = theoretical_kmr(ratio, beta)
        worst = max(worst, abs(p - q) / math.sqrt(q * (1 - q) / n))
    ok = worst <= 3.0
    verdict(2, "quadrature vs Monte Carlo", ok, f"worst deviation {worst:.2f} stderr over 10 cells (limit 3)")
    assert ok


# -- 3. monotone and concave -------------------------------------------------

def test_03_monotone_concave(verdict):
    grid = np.geomspace(0.5, 8.0, 20)
    bad = []
    for beta in (0.1, 0.2, 0.3, 0.4):
        d1, d2 = kmr_derivative_signs(beta, grid)
        if not (np.all(d1 > 0) and np.all(d2 < 0)):
            bad.append(beta)
    ok = not bad
    verdict(3, "monotone and concave", ok,
            "all first differences > 0 and second < 0 on ratio in [0.5, 8]" if ok else f"fails for beta {bad}")
    assert ok


# -- 4. variance formulas ----------------------------------------------------

def _links(cfg, seed):
    geom = UpaGeometry.from_config(cfg)
    rng = np.random.default_rng(seed)
    ea = link_epoch(cfg, geom, "alice", sample_path_angles(rng, cfg.iota))
    eb = link_epoch(cfg, geom, "bob", sample_path_angles(rng, cfg.iota))
    return ea, eb


def _mc_h_e(ea, eb, rng, n, w=None, amp=1.0, chunk=20_000):
    out = []
    for lo in range(0, n, chunk):
        k = min(chunk, n - lo)
        ga = ea.g_los + ea.nlos(ea.sample_gains(rng, k))
        gb = eb.g_los + eb.nlos(eb.sample_gains(rng, k))
        ww = random_phases(rng, ea.n_elements, amp, size=k) if w is None else w
        out.append(np.sum(ww * ga * gb, axis=-1))
    return np.concatenate(out)


@pytest.fixture(scope="module")
def random_w_samples():
    ea, eb = _links(REF, 4)
    return ea, eb, _mc_h_e(ea, eb, np.random.default_rng(41), 100_000)


def test_04a_random_phase_variance(random_w_samples, verdict):
    ea, eb, h = random_w_samples
    st = stats_random_phase(REF, ea, eb)
    half_var = np.var(h) / 2
    rel = half_var / st.sigma_e2 - 1
    rel_exact = half_var / st.sigma_e2_exact - 1
    ok = abs(rel) <= 0.05
    verdict("4a", "random-w variance vs closed form", ok,
            f"MC sigma_E^2 = {half_var:.4e}, closed form {st.sigma_e2:.4e} ({rel:+.1%}); "
            f"vs exact sum with scatter {rel_exact:+.1%}")
    assert ok


def test_04b_fixed_phase_variance(verdict):
    ea, eb = _links(REF, 5)
    rng = np.random.default_rng(42)
    ws = [random_phases(rng, 100, 1.0) for _ in range(5)]
    ws.append(optimize_phase(g_operator(ea, eb), 1.0, rng=rng).weights)
    errs = []
    for w in ws:
        h = _mc_h_e(ea, eb, rng, 100_000, w=w)
        errs.append(np.var(h) / (2 * stats_fixed_phase(w, ea, eb).sigma_e2) - 1)
    worst = max(abs(e) for e in errs)
    ok = worst <= 0.05
    verdict("4b", "fixed-w variance vs w^H G w", ok,
            f"worst relative error {worst:.2%} over 5 random w and 1 optimized w (limit 5%)")
    assert ok


# -- 5. Gaussianity ----------------------------------------------------------

def test_05_gaussianity(random_w_samples, verdict):
    _, _, h = random_w_samples
    x = h.real
    sk, ku = stats.skew(x), stats.kurtosis(x)
    ok = abs(sk) < 0.05 and abs(ku) < 0.2
    verdict(5, "Gaussianity of h_E", ok, f"skewness {sk:+.4f} (|.| < 0.05), excess kurtosis {ku:+.4f} (|.| < 0.2)")
    assert ok


# -- 6. OMP and sensor placement ---------------------------------------------

def test_06a_omp_recovery(verdict):
    cfg = REF
    d = build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, 64, 64)
    sense = place_sensors(d, 20)
    a = d.rows(sense.rows)
    rng = np.random.default_rng(61)
    hits = 0
    for _ in range(100):
        idx = rng.choice(d.size, 5, replace=False)
        g = d.columns(idx) @ (rng.standard_normal(5) + 1j * rng.standard_normal(5))
        est = omp(sense.apply(g), a, 5)
        hits += np.linalg.norm(est.reconstruct(d) - g) < 1e-6 * np.linalg.norm(g)
    ok = hits >= 95
    verdict("6a", "OMP exact recovery", ok,
            f"{hits}/100 trials below 1e-6 relative error (M=100, 64x64 grid, C=20, 5-sparse; need 95)")
    assert ok


def test_06b_greedy_vs_brute_force(verdict):
    cfg = REF.with_ris_size(16)
    d = build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, 8, 8)
    greedy = condition_number(d.rows(place_sensors(d, 4).rows))
    best = min(condition_number(d.rows(list(c))) for c in itertools.combinations(range(16), 4))
    ok = greedy <= 1.1 * best
    verdict("6b", "greedy placement vs brute force", ok,
            f"greedy cond {greedy:.4f}, exhaustive optimum {best:.4f} (ratio {greedy / best:.3f}, limit 1.10)")
    assert ok


# -- 7. optimizer ------------------------------------------------------------

def _grid_max(g, step_deg=1.0):
    m = g.shape[0]
    ph = np.deg2rad(np.arange(0, 360, step_deg))
    grids = np.meshgrid(*([ph] * (m - 1)), indexing="ij")
    w = np.exp(1j * np.stack([np.zeros_like(grids[0])] + list(grids), axis=-1).reshape(-1, m))
    return np.einsum("ni,ij,nj->n", w.conj(), g, w).real.max()


def test_07_optimizer(verdict):
    rng = np.random.default_rng(71)
    feas, mono, small, beats = 0.0, True, 1.0, 0
    for m in (2, 3):
        for _ in range(5):
            x = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            g = x @ x.conj().T
            res = optimize_phase(g, 1.0, rng=rng, full_output=True)
            w = res.phase.weights
            small = min(small, np.vdot(w, g @ w).real / _grid_max(g))
    for seed in range(10):
        ea, eb = _links(REF, 700 + seed)
        g = g_matrix(ea, eb)
        res = optimize_phase(g, 1.0, rng=rng, full_output=True)
        w = res.phase.weights
        feas = max(feas, float(np.max(np.abs(np.abs(w) ** 2 - 1.0))))
        h = np.asarray(res.history)
        mono &= bool(np.all(np.diff(h) >= -1e-12 * abs(h[-1])))
        rand = np.exp(1j * rng.uniform(0, 2 * np.pi, (100, 100)))
        best_rand = np.einsum("ni,ij,nj->n", rand.conj(), g, rand).real.max()
        beats += np.vdot(w, g @ w).real > best_rand
    ok = feas <= 1e-12 and mono and small >= 0.99 and beats == 10
    verdict(7, "optimizer soundness", ok,
            f"feasibility error {feas:.1e}, monotone {mono}, worst small-M ratio {small:.4f} (>= 0.99), "
            f"beats best of 100 random on {beats}/10 channel G")
    assert ok


# -- figure runs shared by criteria 8 to 12 ----------------------------------

OPT = "eve_ris:optimized:M{}:{}"


def passive(m, scheme, sweep_param):
    """Label of the passive optimized Eve-RIS curve."""
    return Variant("eve_ris", "optimized", scheme, m, amp_gain_db=0.0).label(sweep_param)


@pytest.fixture(scope="module")
def fig2_rows():
    spec = preset("fig2")
    spec = replace(spec, sweep_values=(10.0, 20.0, 25.0, 30.0),
                   variants=tuple(v for v in spec.variants if v.phase == "optimized" and v.attacker == "eve_ris"))
    return run_figure(spec)


@pytest.fixture(scope="module")
def beta_rows():
    """fig3 and fig5 variants at beta = 0.2."""
    out = {}
    for fig in ("fig3", "fig5"):
        out[fig] = run_figure(replace(preset(fig), sweep_values=(0.2,)))
    return out


@pytest.fixture(scope="module")
def fig4_rows():
    return run_figure(preset("fig4"))


@pytest.fixture(scope="module")
def fig6_rows():
    return run_figure(preset("fig6"))


@pytest.fixture(scope="module")
def fig8_rows():
    return run_figure(preset("fig8"))


# -- 8. fig2 preset ----------------------------------------------------------

def test_08_fig2(fig2_rows, verdict):
    m100, m400 = rows_by(fig2_rows, OPT.format(100, "csi")), rows_by(fig2_rows, OPT.format(400, "csi"))
    a, b = m100[10.0].kmr_ae, m400[10.0].kmr_ae
    high = [m400[x].kmr_ae for x in (20.0, 25.0, 30.0)]
    ok_rise = abs(a - 0.75) <= 0.05 and abs(b - 0.85) <= 0.05 and b > a
    ok_high = all(abs(p - 0.92) <= 0.03 for p in high)
    ok = ok_rise and ok_high
    verdict(8, "fig2 amplifying-gain sweep", ok,
            f"A_E=10 dB: M=100 {a:.3f}, M=400 {b:.3f} (0.75/0.85 +- 0.05); "
            f"M=400 at 20/25/30 dB: {', '.join(f'{p:.3f}' for p in high)} (0.92 +- 0.03); "
            f"M=100 at 20/25/30 dB: {', '.join(f'{m100[x].kmr_ae:.3f}' for x in (20.0, 25.0, 30.0))}")
    assert ok


# -- 9. fig3 preset ----------------------------------------------------------

def test_09_fig3(beta_rows, verdict):
    rows = beta_rows["fig3"]
    none = rows_by(rows, "none:csi")[0.2].akr
    curve = {m: rows_by(rows, passive(m, "csi", "beta"))[0.2].akr
             for m in (100, 400, 1600, 6400)}
    ok = abs(none - 0.80) <= 0.04 and curve[6400] <= 0.05
    verdict(9, "fig3 available key rate at beta=0.2", ok,
            f"no Eve {none:.3f} (0.80 +- 0.04); passive optimized AKR "
            + ", ".join(f"M={m}: {p:.3f}" for m, p in curve.items()) + " (M=6400 needs <= 0.05)")
    assert ok


# -- 10. two-way attack ------------------------------------------------------

def _nondecreasing(vals, errs):
    return all(b >= a - 2 * max(ea, eb) for a, b, ea, eb in zip(vals, vals[1:], errs, errs[1:]))


def test_10_twoway(fig4_rows, beta_rows, verdict):
    gain_ok = True
    for v in preset("fig4").variants:
        if v.attacker != "eve_ris":
            continue
        curve = sorted(rows_by(fig4_rows, v.label("amp_gain_db")).items())
        gain_ok &= _nondecreasing([r.kmr_ae for _, r in curve], [r.stderr_kmr_ae for _, r in curve])
    rows = beta_rows["fig5"]
    by_m = [rows_by(rows, passive(m, "twoway", "beta"))[0.2]
            for m in (100, 400, 1600, 6400)]
    size_ok = _nondecreasing([r.kmr_ae for r in by_m], [r.stderr_kmr_ae for r in by_m])
    akr = by_m[-1].akr
    ok = gain_ok and size_ok and akr <= 0.1
    verdict(10, "two-way attack", ok,
            f"non-decreasing in A_E: {gain_ok}; in M: {size_ok} (kmr_ae "
            + ", ".join(f"{r.kmr_ae:.3f}" for r in by_m) + f"); M=6400 AKR {akr:.3f} (<= 0.1)")
    assert ok


# -- 11. detection dichotomy -------------------------------------------------

def test_11_detection(fig6_rows, verdict):
    bench = rows_by(fig6_rows, "none:csi")[0.0].mse_ab_dbw
    eve = sorted(rows_by(fig6_rows, OPT.format(100, "csi")).items())
    spoof = sorted(rows_by(fig6_rows, "spoof:csi").items())
    eve_dev = max(abs(r.mse_ab_dbw - bench) for _, r in eve)
    mse = [r.mse_ab_dbw for _, r in spoof]
    increasing = all(b > a for a, b in zip(mse, mse[1:]))
    curve = [(g, db2lin(r.mse_ab_dbw)) for g, r in spoof]
    thr = undetectable_region(curve, float(db2lin(bench)), 1.0)
    finite = thr is not None and thr < spoof[-1][0]
    ok = eve_dev <= 1.0 and increasing and finite
    verdict(11, "detection dichotomy", ok,
            f"benchmark {bench:.2f} dBW; Eve-RIS max deviation {eve_dev:.3f} dB (<= 1); "
            f"spoof MSE strictly increasing: {increasing}; undetectable up to {thr} dB spoof gain")
    assert ok


# -- 12. fig8 preset ---------------------------------------------------------

def test_12_fig8(fig8_rows, verdict):
    spec = preset("fig8")
    worst_sym = 0.0
    for v in spec.variants:
        c = rows_by(fig8_rows, v.label(spec.sweep_param))
        for y in range(1, 25):
            r1, r2 = c[float(y)], c[float(50 - y)]
            se = math.hypot(r1.stderr_kmr_ae, r2.stderr_kmr_ae)
            worst_sym = max(worst_sym, abs(r1.kmr_ae - r2.kmr_ae) / se if se > 0 else 0.0)
    m = {n: rows_by(fig8_rows, passive(n, "csi", "eve_y")) for n in (100, 400, 1600)}
    relay = rows_by(fig8_rows, "relay:60dB:csi")
    gap = max(abs(m[1600][y].kmr_ae - relay[y].kmr_ae) for y in relay)
    mid = (24.0, 25.0, 26.0)
    lo = float(np.mean([m[100][y].kmr_ae for y in mid]))
    hi = float(np.mean([m[1600][y].kmr_ae for y in mid]))
    ok = worst_sym <= 2.0 and gap <= 0.05 and abs(lo - 0.55) <= 0.07 and abs(hi - 0.85) <= 0.07
    verdict(12, "fig8 trajectory", ok,
            f"worst symmetry gap {worst_sym:.2f} stderr (<= 2); max |M=1600 - relay| {gap:.3f} (<= 0.05); "
            f"midpoint kmr M=100 {lo:.3f} (0.55 +- 0.07), M=1600 {hi:.3f} (0.85 +- 0.07)")
    assert ok


# -- 13. determinism ---------------------------------------------------------

def test_13_determinism(verdict):
    same = []
    for fig in FIGURES:
        spec = preset(fig, rounds=400, epochs=2)
        same.append(format_csv(spec, run_figure(spec, threads=1)) == format_csv(spec, run_figure(spec, threads=8)))
    ok = all(same)
    verdict(13, "determinism across thread counts", ok,
            f"byte-identical CSV at 1 and 8 threads for {sum(same)}/{len(same)} presets (400 rounds each)")
    assert ok
