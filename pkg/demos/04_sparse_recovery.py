"""Eve's receiver: twenty sensors on an M-element surface.

Eve samples the incident field on a few elements chosen greedily to keep
the sensed dictionary well conditioned, then runs OMP over a beamspace grid.
Exact recovery of on-grid channels needs the sensed atoms to be nearly
orthogonal.  That holds for a coarse grid on a large surface and fails for a
fine grid on a small one.
"""
from __future__ import annotations

import numpy as np

from riskeysim.channel import UpaGeometry
from riskeysim.config import paper_scenario
from riskeysim.sensing import build_dictionary, omp, place_sensors

TRIALS = 50
SPARSITY = 3


def success_rate(m: int, grid: int, rng) -> float:
    cfg = paper_scenario().with_ris_size(m)
    d = build_dictionary(UpaGeometry.from_config(cfg), cfg.lam, grid, grid)
    sense = place_sensors(d, 20)
    a = d.rows(sense.rows)
    hits = 0
    for _ in range(TRIALS):
        idx = rng.choice(d.size, SPARSITY, replace=False)
        g = d.columns(idx) @ (rng.standard_normal(SPARSITY) + 1j * rng.standard_normal(SPARSITY))
        est = omp(sense.apply(g), a, SPARSITY)
        hits += np.linalg.norm(est.reconstruct(d) - g) <= 1e-6 * np.linalg.norm(g)
    return hits / TRIALS


def main() -> None:
    rng = np.random.default_rng(5)
    print(f"exact recovery of {SPARSITY}-sparse on-grid channels, 20 sensors, {TRIALS} trials\n")
    for m, grid in ((100, 8), (100, 32), (1600, 8), (1600, 32), (6400, 8)):
        print(f"M={m:>5}  grid {grid:>2}x{grid:<2}  {success_rate(m, grid, rng):.0%}")


if __name__ == "__main__":
    main()
