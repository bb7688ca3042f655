"""Maximize ``w^H G w`` over RIS weights with ``|w_m|^2 = A_E`` for every element.

Projected gradient ascent on the constant-modulus torus.  Because ``G`` is
positive semi-definite the objective is convex, and projecting
``w + step * G w`` back onto the torus never moves an entry away from the
gradient direction, so the objective cannot decrease for any positive
step.  Backtracking only controls how aggressive the step is.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.random import Generator

from .ris import PhaseVector, as_operator

__all__ = ["OptimizerConfig", "OptimizeResult", "optimize_phase", "eig_phase_init", "project"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 2000
    step_rule: str = "backtracking"
    restarts: int = 8
    tolerance: float = 1e-8
    patience: int = 5
    power_iters: int = 1000

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.step_rule not in ("fixed", "backtracking"):
            raise ValueError("step_rule must be 'fixed' or 'backtracking'")


@dataclass
class OptimizeResult:
    phase: PhaseVector
    objective: float
    history: list = field(default_factory=list)  # objective per iteration of the winning restart
    restart_objectives: list = field(default_factory=list)
    eig_fallback: bool = False


def project(v, amp_gain: float):
    """Nearest constant-modulus vector; zero entries map to phase 0."""
    return math.sqrt(amp_gain) * np.exp(1j * np.angle(v))


def _norm_estimate(op, m, rng):
    x = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    for _ in range(20):
        y = op.matvec(x)
        n = np.linalg.norm(y)
        if n == 0:
            return 0.0
        x = y / n
    return float(np.linalg.norm(op.matvec(x)))


def eig_phase_init(g, amp_gain: float, *, max_iters: int = 1000, tol: float = 1e-10,
                   rng: Generator | None = None) -> tuple[PhaseVector, bool]:
    """Phases of the principal eigenvector of ``G`` (power iteration).

    Returns the phase vector and a flag that is ``True`` when power
    iteration failed to converge and a random start was used instead.
    """
    op = as_operator(g)
    m = op.shape[0]
    rng = np.random.default_rng(0) if rng is None else rng
    x = np.ones(m, dtype=complex) / math.sqrt(m) + 1e-3 * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
    x /= np.linalg.norm(x)
    lam_old = 0.0
    for _ in range(max_iters):
        y = op.matvec(x)
        n = np.linalg.norm(y)
        if n == 0:
            break  # G = 0: every feasible point is optimal
        lam = float(np.real(np.vdot(x, y)))
        x = y / n
        if abs(lam - lam_old) <= tol * max(abs(lam), 1e-300):
            break
        lam_old = lam
    else:
        log.warning("power iteration did not converge; using random phases")
        return PhaseVector(amp_gain, rng.uniform(0, 2 * math.pi, m)), True
    ph = np.angle(x)
    # power iteration leaves O(sqrt(tol)) residue on entries that are zero in
    # the exact eigenvector; those phases carry no information
    ph[np.abs(x) <= max(1e-12, 10.0 * math.sqrt(tol)) * np.abs(x).max()] = 0.0
    return PhaseVector(amp_gain, ph), False


def _ascend(op, w0, amp_gain, cfg: OptimizerConfig, step0: float):
    w = project(w0, amp_gain)
    f = op.quad(w)
    hist = [f]
    step = step0
    quiet = 0
    for _ in range(cfg.max_iters):
        grad = op.matvec(w)  # half the gradient; the factor 2 is absorbed in the step
        if cfg.step_rule == "fixed":
            cand = project(w + step * grad, amp_gain)
            fc = op.quad(cand)
        else:
            s = 2.0 * step
            for _ in range(40):
                cand = project(w + s * grad, amp_gain)
                fc = op.quad(cand)
                if fc >= f:
                    break
                s *= 0.5
            step = s
        if fc < f:  # only float round-off can get here
            fc, cand = f, w
        rel = (fc - f) / max(abs(f), 1e-300)
        w, f = cand, fc
        hist.append(f)
        quiet = quiet + 1 if rel < cfg.tolerance else 0
        if quiet >= cfg.patience:
            break
    return w, f, hist


def optimize_phase(g, amp_gain: float, cfg: OptimizerConfig | None = None,
                   rng: Generator | None = None, *, full_output: bool = False):
    """Best constant-modulus ``w`` over ``cfg.restarts`` ascents.

    The first restart starts from :func:`eig_phase_init`, the rest from
    uniform random phases drawn from ``rng``.  Returns a
    :class:`PhaseVector`, or an :class:`OptimizeResult` with the ascent
    history when ``full_output`` is set.
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    if not amp_gain > 0:
        raise ValueError("amp_gain must be > 0")
    op = as_operator(g)
    rng = np.random.default_rng(0) if rng is None else rng
    if not op.is_hermitian(rng):
        raise ValueError("G is not Hermitian")
    m = op.shape[0]
    scale = _norm_estimate(op, m, rng)
    step0 = 1.0 / scale if scale > 0 else 1.0

    init, fallback = eig_phase_init(op, amp_gain, max_iters=cfg.power_iters, rng=rng)
    starts = [init.weights]
    for _ in range(cfg.restarts - 1):
        starts.append(project(np.exp(1j * rng.uniform(0, 2 * math.pi, m)), amp_gain))

    best = None
    objs = []
    for w0 in starts:
        w, f, hist = _ascend(op, w0, amp_gain, cfg, step0)
        objs.append(f)
        if best is None or f > best[1]:
            best = (w, f, hist)
    w, f, hist = best
    res = OptimizeResult(PhaseVector(amp_gain, np.angle(w)), f, hist, objs, fallback)
    return res if full_output else res.phase
