"""How much of the key can an inserted channel steal?

Alice quantizes ``h + h_E`` and an eavesdropper who knows ``h_E`` quantizes
``h_E``.  The match rate climbs with the power ratio and saturates at the
guard-band limit ``2 Phi(-beta)``.  This script prints the quadrature curve
next to a direct Monte Carlo draw of the same Gaussian model.
"""
from __future__ import annotations

import numpy as np

from riskeysim.skg import key_match_rate, quantize_block
from riskeysim.theory import kmr_limit, theoretical_kmr

BETA = 0.1
N = 200_000


def main() -> None:
    rng = np.random.default_rng(1)
    print(f"guard band beta = {BETA}, limit 2 Phi(-beta) = {kmr_limit(BETA):.4f}\n")
    print(f"{'ratio dB':>9} {'quadrature':>11} {'Monte Carlo':>12}")
    for db in (-10, 0, 10, 20, 30):
        r = 10 ** (db / 20)  # amplitude ratio sigma_E / sigma_h
        z_e = r * rng.standard_normal(N)
        z_a = z_e + rng.standard_normal(N)
        mc = key_match_rate(quantize_block(z_a, BETA), quantize_block(z_e, BETA))
        print(f"{db:>9} {theoretical_kmr(r, BETA):>11.4f} {mc:>12.4f}")


if __name__ == "__main__":
    main()
