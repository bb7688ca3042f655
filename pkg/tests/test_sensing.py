from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskeysim.channel import UpaGeometry, steering_vector
from riskeysim.config import paper_scenario
from riskeysim.sensing import (
    EveReceiver,
    SensingMatrix,
    build_dictionary,
    condition_number,
    csi_attack_round,
    matched_filter,
    omp,
    omp_batch,
    place_sensors,
    twoway_attack_round,
)


def make_dict(m, g_el, g_az=None):
    cfg = paper_scenario().with_ris_size(m)
    return build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, g_el, g_az or g_el)


@pytest.fixture(scope="module")
def big():
    # incoherent regime: a coarse grid on a large surface
    d = make_dict(6400, 8)
    return d, place_sensors(d, 20)


def sparse_draw(rng, d, k):
    idx = rng.choice(d.size, k, replace=False)
    coef = rng.standard_normal(k) + 1j * rng.standard_normal(k)
    return idx, coef, d.columns(idx) @ coef


def test_dictionary_grid():
    d = make_dict(16, 2, 3)
    assert d.size == 6
    assert d.grid[:, 0].tolist() == pytest.approx([-np.pi / 2] * 3 + [np.pi / 2] * 3)
    assert d.grid[:, 1].tolist() == pytest.approx([-np.pi / 2, 0, np.pi / 2] * 2)
    with pytest.raises(ValueError):
        make_dict(16, 1, 4)


def test_dictionary_atoms_are_steering_vectors():
    d = make_dict(16, 5)
    for i in (0, 7, 24):
        el, az = d.grid[i]
        assert np.allclose(d.atoms[:, i], steering_vector(d.geom, el, az, d.lam))
    assert np.allclose(d.rows([3, 9]), d.atoms[[3, 9]])
    assert np.allclose(np.abs(d.atoms), 1.0)


def test_nearest_returns_grid_index():
    d = make_dict(16, 9, 5)
    assert d.nearest(d.grid[[0, 13, 44]]).tolist() == [0, 13, 44]


def test_sensing_matrix_operations(rng):
    s = SensingMatrix(np.array([4, 0, 7]), 9)
    v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    assert np.allclose(s.apply(v), s.to_dense() @ v)
    assert np.allclose(s.adjoint(y), s.to_dense().T @ y)
    assert np.vdot(s.adjoint(y), v) == pytest.approx(np.vdot(y, s.apply(v)))
    for bad in ([1, 1], [0, 9], [-1]):
        with pytest.raises(ValueError):
            SensingMatrix(np.array(bad), 9)


def test_condition_number_oracle(rng):
    a = rng.standard_normal((5, 8))
    s = np.linalg.svd(a, compute_uv=False)
    assert condition_number(a) == pytest.approx(s[0] / s[-1])
    assert condition_number(np.outer([1, 2], [1, 1, 1])) == pytest.approx(1.0)


def test_placement_all_and_one():
    d = make_dict(16, 6)
    s = place_sensors(d, 16)
    assert sorted(s.rows.tolist()) == list(range(16))
    one = place_sensors(d, 1)
    assert one.rows.tolist() == [0] and one.conds == (1.0,)
    with pytest.raises(ValueError):
        place_sensors(d, 0)
    with pytest.raises(ValueError):
        place_sensors(d, 17)


def test_placement_conditions_match_svd():
    d = make_dict(100, 16)
    s = place_sensors(d, 12)
    for k in (2, 6, 12):
        assert s.conds[k - 1] == pytest.approx(condition_number(d.rows(s.rows[:k])), rel=1e-6)


def test_placement_is_greedy_optimal_per_step():
    d = make_dict(16, 8)
    s = place_sensors(d, 4)
    chosen = s.rows[:3].tolist()
    best = min(condition_number(d.rows(chosen + [i])) for i in range(16) if i not in chosen)
    assert s.conds[3] == pytest.approx(best, rel=1e-6)


def test_omp_one_sparse_exact(rng):
    d = make_dict(100, 64)
    s = place_sensors(d, 20)
    a = d.rows(s.rows)
    for _ in range(20):
        i = rng.integers(d.size)
        g = 3.0j * d.columns([i])[:, 0]
        est = omp(s.apply(g), a, 5)
        assert np.allclose(est.reconstruct(d), g, atol=1e-8)
        assert est.support.size == 1  # stops once the residual vanishes


def test_omp_incoherent_recovery(big, rng):
    d, s = big
    a = d.rows(s.rows)
    hits = 0
    for _ in range(30):
        idx, coef, g = sparse_draw(rng, d, 3)
        est = omp(s.apply(g), a, 3)
        hits += np.linalg.norm(est.reconstruct(d) - g) <= 1e-6 * np.linalg.norm(g)
    assert hits >= 27


def test_omp_gaussian_operator(rng):
    a = (rng.standard_normal((40, 200)) + 1j * rng.standard_normal((40, 200))) / np.sqrt(2)
    x = np.zeros(200, dtype=complex)
    sup = rng.choice(200, 4, replace=False)
    x[sup] = 1 + rng.random(4)
    est = omp(a @ x, a, 4)
    assert set(est.support.tolist()) == set(sup.tolist())
    assert np.allclose(est.to_dense(200), x)


def test_omp_zero_input():
    est = omp(np.zeros(5), np.eye(5), 3)
    assert est.support.size == 0 and est.residual_norm == 0.0


def test_omp_validation():
    with pytest.raises(ValueError):
        omp(np.ones(3), np.eye(3), 0)
    with pytest.raises(ValueError):
        omp(np.ones(2), np.array([[1.0, 0.0], [0.0, 0.0]]), 1)


def test_omp_rank_deficient_flag():
    # column 1 duplicates column 0; the third pick is forced onto it
    a = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    est = omp(np.array([1.0, 0.5, 0.3]), a, 3, rtol=0.0)
    assert est.support.tolist() == [0, 2, 1]
    assert est.rank_deficient
    assert est.residual_norm == pytest.approx(0.3)


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_omp_residual_monotone(seed, k):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((10, 30)) + 1j * rng.standard_normal((10, 30))
    y = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    est = omp(y, a, k)
    h = np.array(est.residual_history)
    assert np.all(np.diff(h) <= 1e-9 * h[0])
    assert est.residual_norm == pytest.approx(np.linalg.norm(y - a[:, est.support] @ est.coeffs))


def test_batch_matches_single(rng):
    d = make_dict(100, 16)
    s = place_sensors(d, 20)
    a = d.rows(s.rows)
    y = rng.standard_normal((12, 20)) + 1j * rng.standard_normal((12, 20))
    y[3] = 0
    y[5] = 2 * a[:, 7]
    b = omp_batch(y, a, 5)
    rx = EveReceiver(d, s, 5)
    rec = rx.reconstruct(b)
    for i in range(12):
        e = omp(y[i], a, 5)
        k = e.support.size
        # duplicate atoms can swap indices without changing the fit
        assert np.all(b.support[i, k:] == -1)
        assert np.allclose(a[:, b.support[i, :k]] @ b.coeffs[i, :k], a[:, e.support] @ e.coeffs)
        assert np.allclose(rec[i], e.reconstruct(d))
        assert b.residual_norm[i] == pytest.approx(e.residual_norm, abs=1e-9)
    assert b.support[3].tolist() == [-1] * 5
    assert b.support[5, 0] >= 0 and np.all(b.support[5, 1:] == -1)


def test_receiver_reconstruct_and_cascade(big, rng):
    d, s = big
    rx = EveReceiver(d, s, 3)
    ga = np.stack([sparse_draw(rng, d, 3)[2] for _ in range(4)])
    gb = np.stack([sparse_draw(rng, d, 3)[2] for _ in range(4)])
    ea, eb = rx.estimate(s.apply(ga)), rx.estimate(s.apply(gb))
    w = np.exp(1j * rng.uniform(0, 2 * np.pi, d.n_elements))
    ref = np.sum(gb * w * ga, axis=1)
    for chunk in (4_000_000, 1):
        out = rx.cascade(ea, eb, w, chunk_elems=chunk)
        assert np.allclose(out, ref, rtol=1e-6)
    out = rx.cascade(ea, eb, np.tile(w, (4, 1)))
    assert np.allclose(out, rx.cascade(ea, eb, w))


def test_matched_filter_pilot_scale_invariance(rng):
    g = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    x = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    for scale in (1e-3, 1.0, 50.0):
        assert np.allclose(matched_filter(np.outer(g, scale * x), scale * x), g)


def test_csi_attack_round_exact_noiseless(big, rng):
    d, s = big
    hits = 0
    for _ in range(10):
        _, _, ga = sparse_draw(rng, d, 2)
        _, _, gb = sparse_draw(rng, d, 2)
        w = np.exp(1j * rng.uniform(0, 2 * np.pi, d.n_elements))
        xa, xb = np.array([1.0, -1.0j]), np.array([0.5 + 0.5j])
        est = csi_attack_round(np.outer(s.apply(ga), xa), np.outer(s.apply(gb), xb), xa, xb, w, d, s, 2)
        hits += np.isclose(est, np.sum(gb * w * ga), rtol=1e-6)
    assert hits >= 9


def test_twoway_attack_round(big, rng):
    d, s = big
    _, _, ga = sparse_draw(rng, d, 2)
    _, _, gb = sparse_draw(rng, d, 2)
    w = np.ones(d.n_elements)
    qa, qb = 0.7 - 0.2j, -1.1 + 0.4j
    est = twoway_attack_round(s.apply(ga) * qa, s.apply(gb) * qb, w, d, s, 2)
    assert est == pytest.approx(np.sum(gb * ga) * qa * qb, rel=1e-6)
    assert twoway_attack_round(np.zeros(s.count), s.apply(gb) * qb, w, d, s, 2) == 0
