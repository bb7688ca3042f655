"""Compressed-sensing channel probing at the Eve-RIS.

Only ``C`` elements carry an RF chain.  Eve recovers the sparse beamspace
representation of each link from those ``C`` samples with orthogonal
matching pursuit, rebuilds the full link vectors from the selected atoms
and cascades them through her own phase vector.

Large arrays never materialize the full ``M x D`` dictionary: the sensor
rows and the few atoms that OMP selects are generated on demand.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

from .channel import HALF_PI, UpaGeometry, steering_matrix, wave_vector

__all__ = [
    "Dictionary",
    "SensingMatrix",
    "SparseEstimate",
    "BatchEstimate",
    "EveReceiver",
    "build_dictionary",
    "condition_number",
    "place_sensors",
    "omp",
    "omp_batch",
    "matched_filter",
    "csi_attack_round",
    "twoway_attack_round",
]

log = logging.getLogger(__name__)

OMP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Beamspace dictionary: one steering vector per (el, az) grid point.

    Atom ``i * grid_az + j`` corresponds to ``(el_i, az_j)``.
    """

    geom: UpaGeometry
    lam: float
    grid: NDArray[np.float64]  # (D, 2)

    @property
    def size(self) -> int:
        return self.grid.shape[0]

    @property
    def n_elements(self) -> int:
        return self.geom.n_elements

    @cached_property
    def atoms(self) -> NDArray[np.complex128]:
        """Full ``M x D`` matrix; only for moderate sizes."""
        return steering_matrix(self.geom, self.grid, self.lam)

    def rows(self, idx) -> NDArray[np.complex128]:
        return steering_matrix(self.geom, self.grid, self.lam, rows=np.asarray(idx, dtype=int))

    def columns(self, idx) -> NDArray[np.complex128]:
        idx = np.asarray(idx, dtype=int)
        if "atoms" in self.__dict__:
            return self.atoms[:, idx]
        return steering_matrix(self.geom, self.grid[idx], self.lam)

    def nearest(self, angles) -> NDArray[np.int64]:
        """Index of the closest grid point to each (el, az) pair."""
        angles = np.asarray(angles, dtype=float).reshape(-1, 2)
        els = np.unique(self.grid[:, 0])
        azs = np.unique(self.grid[:, 1])
        i = np.abs(angles[:, :1] - els[None, :]).argmin(axis=1)
        j = np.abs(angles[:, 1:] - azs[None, :]).argmin(axis=1)
        return i * azs.size + j


def build_dictionary(geom: UpaGeometry, lam: float, grid_el: int = 64, grid_az: int = 64) -> Dictionary:
    """Uniform ``grid_el x grid_az`` grid over ``[-pi/2, pi/2]^2``, endpoints included."""
    if grid_el < 2 or grid_az < 2:
        raise ValueError("grid counts must be >= 2")
    el = np.linspace(-HALF_PI, HALF_PI, grid_el)
    az = np.linspace(-HALF_PI, HALF_PI, grid_az)
    grid = np.stack(np.meshgrid(el, az, indexing="ij"), axis=-1).reshape(-1, 2)
    return Dictionary(geom, float(lam), grid)


@dataclass(frozen=True)
class SensingMatrix:
    """Row selector: element indices that carry a channel sensor."""

    rows: NDArray[np.int64]
    n_elements: int
    conds: tuple = ()  # condition number after each greedy step

    def __post_init__(self):
        r = np.asarray(self.rows, dtype=int)
        if r.ndim != 1 or len(set(r.tolist())) != r.size:
            raise ValueError("sensor indices must be distinct")
        if r.size and (r.min() < 0 or r.max() >= self.n_elements):
            raise ValueError("sensor index out of range")
        object.__setattr__(self, "rows", r)

    @property
    def count(self) -> int:
        return self.rows.size

    def apply(self, v):
        """Samples of an element-domain vector (last axis) at the sensors."""
        return np.asarray(v)[..., self.rows]

    def adjoint(self, y):
        """Zero-filled element-domain vector from sensor samples."""
        y = np.asarray(y)
        out = np.zeros(y.shape[:-1] + (self.n_elements,), dtype=np.result_type(y, complex))
        out[..., self.rows] = y
        return out

    def to_dense(self) -> NDArray[np.float64]:
        c = np.zeros((self.count, self.n_elements))
        c[np.arange(self.count), self.rows] = 1.0
        return c


def condition_number(mat) -> float:
    """Largest over smallest nonzero singular value.

    A singular value counts as nonzero when it exceeds
    ``s_max * max(shape) * eps`` (the usual numerical-rank cut).
    """
    s = np.linalg.svd(np.asarray(mat), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return math.inf
    s = s[s > s[0] * max(np.shape(mat)) * np.finfo(float).eps]
    return float(s[0] / s[-1])


def _gram_kernel(d: Dictionary):
    """Row Gram matrix ``K = D D^H`` as a lookup table over element offsets.

    ``K[i, j] = sum_d exp(j a_d . (l_i - l_j))`` depends only on the integer
    grid offset between elements, and the exponential separates over the
    two in-plane axes, so the table is one matrix product.
    """
    gi = d.geom.grid_index
    ny, nz = gi[:, 0].max() + 1, gi[:, 1].max() + 1
    a = wave_vector(d.grid[:, 0], d.grid[:, 1], d.lam) * d.geom.elem_spacing  # phase per unit offset
    oy = np.arange(-(ny - 1), ny)
    oz = np.arange(-(nz - 1), nz)
    ey = np.exp(1j * np.outer(oy, a[:, 1]))
    ez = np.exp(1j * np.outer(oz, a[:, 2]))
    table = ey @ ez.T
    return table, ny - 1, nz - 1


def place_sensors(d: Dictionary, c: int, *, tie_rtol: float = 1e-9) -> SensingMatrix:
    """Greedy sensor placement minimizing the row-submatrix condition number.

    At each step every unused element is tried; the one giving the
    smallest ``cond(D[S + {i}, :])`` is added.  Near-ties (relative
    difference below ``tie_rtol``) go to the lowest index.
    """
    m = d.n_elements
    if not 1 <= c <= m:
        raise ValueError(f"sensor count must lie in [1, {m}]")
    table, oy, oz = _gram_kernel(d)
    gi = d.geom.grid_index
    eps_rel = max(c, d.size) * np.finfo(float).eps * 10

    def k_block(rows_i, rows_j):
        dy = gi[rows_i, 0][:, None] - gi[rows_j, 0][None, :]
        dz = gi[rows_i, 1][:, None] - gi[rows_j, 1][None, :]
        return table[dy + oy, dz + oz]

    chosen: list[int] = []
    conds = []
    everyone = np.arange(m)
    for step in range(c):
        cand = np.setdiff1d(everyone, chosen, assume_unique=True)
        k = len(chosen)
        gram = np.empty((cand.size, k + 1, k + 1), dtype=complex)
        if k:
            gram[:, :k, :k] = k_block(chosen, chosen)[None]
            kc = k_block(chosen, cand)  # (k, n_cand)
            gram[:, :k, k] = kc.T
            gram[:, k, :k] = kc.conj().T
        gram[:, k, k] = d.size
        ev = np.linalg.eigvalsh(gram)
        top = ev[:, -1]
        ev = np.where(ev > top[:, None] * eps_rel, ev, np.inf)
        cond = np.sqrt(top / ev.min(axis=1))
        best = cond.min()
        pick = cand[np.nonzero(cond <= best * (1 + tie_rtol))[0][0]]
        chosen.append(int(pick))
        conds.append(float(best))
    return SensingMatrix(np.array(chosen), m, tuple(conds))


@dataclass
class SparseEstimate:
    support: NDArray[np.int64]
    coeffs: NDArray[np.complex128]
    residual_norm: float
    residual_history: list = field(default_factory=list)
    rank_deficient: bool = False

    def to_dense(self, size: int) -> NDArray[np.complex128]:
        s = np.zeros(size, dtype=complex)
        s[self.support] = self.coeffs
        return s

    def reconstruct(self, d: Dictionary) -> NDArray[np.complex128]:
        """Element-domain vector ``D s``."""
        if self.support.size == 0:
            return np.zeros(d.n_elements, dtype=complex)
        return d.columns(self.support) @ self.coeffs


def omp(y, a, sparsity: int, *, rtol: float = OMP_RTOL) -> SparseEstimate:
    """Orthogonal matching pursuit.

    Picks the column with the largest normalized correlation with the
    residual, refits all selected coefficients by least squares, and stops
    after ``sparsity`` atoms or once ``||r|| <= rtol * ||y||``.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    a = np.asarray(a, dtype=complex)
    if sparsity < 1:
        raise ValueError("sparsity must be >= 1")
    norms = np.linalg.norm(a, axis=0)
    if np.any(norms == 0):
        raise ValueError("operator has a zero column")
    ynorm = float(np.linalg.norm(y))
    r = y.copy()
    hist = [ynorm]
    support: list[int] = []
    coef = np.zeros(0, dtype=complex)
    deficient = False
    for _ in range(min(sparsity, a.shape[1])):
        if hist[-1] <= rtol * ynorm or ynorm == 0:
            break
        corr = np.abs(a.conj().T @ r) / norms
        corr[support] = -1.0
        support.append(int(np.argmax(corr)))
        sub = a[:, support]
        coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(support):
            deficient = True
            log.debug("rank-deficient OMP refit; using minimum-norm solution")
        r = y - sub @ coef
        hist.append(float(np.linalg.norm(r)))
    return SparseEstimate(np.array(support, dtype=int), coef, hist[-1], hist, deficient)


@dataclass
class BatchEstimate:
    """OMP results for many rounds; unused slots have support -1 and coefficient 0."""

    support: NDArray[np.int64]  # (n, k)
    coeffs: NDArray[np.complex128]  # (n, k)
    residual_norm: NDArray[np.float64]


def omp_batch(y, a, sparsity: int, *, rtol: float = OMP_RTOL) -> BatchEstimate:
    """Row-wise :func:`omp` over ``y`` of shape ``(n, C)``."""
    y = np.asarray(y, dtype=complex)
    a = np.asarray(a, dtype=complex)
    n = y.shape[0]
    k = min(sparsity, a.shape[1])
    norms = np.linalg.norm(a, axis=0)
    a_n = a.conj() / norms
    sup = np.full((n, k), -1, dtype=int)
    coef = np.zeros((n, k), dtype=complex)
    r = y.copy()
    ynorm = np.linalg.norm(y, axis=1)
    rnorm = ynorm.copy()
    for it in range(k):
        act = np.nonzero((ynorm > 0) & (rnorm > rtol * ynorm))[0]
        if act.size == 0:
            break
        corr = np.abs(r[act] @ a_n)
        if it:
            np.put_along_axis(corr, sup[act, :it], -1.0, axis=1)
        sup[act, it] = np.argmax(corr, axis=1)
        sub = a[:, sup[act, :it + 1]].transpose(1, 0, 2)  # (n_act, C, it+1)
        c = (np.linalg.pinv(sub) @ y[act, :, None])[..., 0]
        coef[act, :it + 1] = c
        r[act] = y[act] - (sub @ c[..., None])[..., 0]
        rnorm[act] = np.linalg.norm(r[act], axis=1)
    return BatchEstimate(sup, coef, rnorm)


def matched_filter(y, x):
    """``Y x^H / ||x||^2`` for sensor-by-pilot measurements ``Y`` (C x L)."""
    y = np.asarray(y, dtype=complex)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if y.ndim == 1:
        y = y[:, None]
    return (y @ x.conj()) / np.vdot(x, x).real


def _cascade(w, g_a, g_b):
    w = w.weights if hasattr(w, "weights") else np.asarray(w, dtype=complex)
    return complex(np.sum(g_b * w * g_a))


def csi_attack_round(y_a, y_b, x_a, x_b, w, d: Dictionary, sense: SensingMatrix, sparsity: int) -> complex:
    """Eve's estimate of the inserted channel from one round of public pilots.

    ``y_a``/``y_b`` are the ``C x L`` sensor measurements of Alice's and
    Bob's pilot sequences ``x_a``/``x_b``.
    """
    a = d.rows(sense.rows)
    est_a = omp(matched_filter(y_a, x_a), a, sparsity)
    est_b = omp(matched_filter(y_b, x_b), a, sparsity)
    return _cascade(w, est_a.reconstruct(d), est_b.reconstruct(d))


def twoway_attack_round(r_a, r_b, w, d: Dictionary, sense: SensingMatrix, sparsity: int) -> complex:
    """Eve's reconstruction of the cross-multiplied feature ``h_E q_A q_B``.

    The random pilots are unknown, so OMP recovers the pilot-scaled sparse
    vectors directly from the raw sensor samples ``r_a``/``r_b``.
    """
    a = d.rows(sense.rows)
    est_a = omp(np.asarray(r_a).reshape(-1), a, sparsity)
    est_b = omp(np.asarray(r_b).reshape(-1), a, sparsity)
    return _cascade(w, est_a.reconstruct(d), est_b.reconstruct(d))


class EveReceiver:
    """Batched Eve-side estimation for many rounds with a shared dictionary."""

    def __init__(self, d: Dictionary, sense: SensingMatrix, sparsity: int):
        self.dictionary = d
        self.sense = sense
        self.sparsity = sparsity
        self.operator = d.rows(sense.rows)

    def estimate(self, meas) -> BatchEstimate:
        return omp_batch(meas, self.operator, self.sparsity)

    def reconstruct(self, est: BatchEstimate, rows=None) -> NDArray[np.complex128]:
        """Element-domain vectors ``D s`` for the rounds in ``rows`` (all by default)."""
        sup = est.support if rows is None else est.support[rows]
        coef = est.coeffs if rows is None else est.coeffs[rows]
        uniq, inv = np.unique(sup, return_inverse=True)
        inv = inv.reshape(sup.shape)
        atoms = np.zeros((uniq.size, self.dictionary.n_elements), dtype=complex)
        valid = uniq >= 0
        if valid.any():
            atoms[valid] = self.dictionary.columns(uniq[valid]).T
        return np.einsum("nk,nkm->nm", coef, atoms[inv])

    def cascade(self, est_a: BatchEstimate, est_b: BatchEstimate, w, *,
                chunk_elems: int = 4_000_000) -> NDArray[np.complex128]:
        """``(D s_B)^T diag(w) (D s_A)`` per round, built from the supports only.

        ``w`` is one weight vector shared by all rounds, or one row per
        round.  Rounds are processed in chunks so that at most about
        ``chunk_elems`` atom entries are held at once.
        """
        w = np.asarray(w, dtype=complex)
        n, k = est_a.support.shape
        m = self.dictionary.n_elements
        step = max(1, chunk_elems // (2 * max(k, 1) * m))
        out = np.empty(n, dtype=complex)
        for lo in range(0, n, step):
            sl = slice(lo, min(n, lo + step))
            g_a = self.reconstruct(est_a, sl)
            g_b = self.reconstruct(est_b, sl)
            ww = w if w.ndim == 1 else w[sl]
            out[sl] = np.sum(ww * g_a * g_b, axis=1)
        return out
