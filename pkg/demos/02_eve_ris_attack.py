"""An adversarial RIS between Alice and Bob.

Eve's surface reflects with fixed optimized phases, so its deceiving
channel ``h_E`` enters both legitimate probes and keeps reciprocity.  Eve
estimates ``h_E`` from its own sensors (greedy placement plus OMP) and
quantizes it like the legitimate users.  The table shows how the
amplifying gain moves Eve's match rate and the available key rate.
"""
from __future__ import annotations

from riskeysim.config import paper_scenario
from riskeysim.harness import ExperimentSpec, Variant, run_figure

ROUNDS = 10_000


def main() -> None:
    spec = ExperimentSpec(
        "custom-demo", "amp_gain_db", (0.0, 10.0, 20.0, 30.0),
        (Variant("none"), Variant("eve_ris", "random", "csi", 100), Variant("eve_ris", "optimized", "csi", 100)),
        base=paper_scenario(), rounds=ROUNDS, seed=7, epochs=4,
    )
    print(f"{'A_E dB':>7}  {'variant':<28} {'kmr_ae':>7} {'kmr_ab':>7} {'akr':>7}")
    for r in run_figure(spec):
        print(f"{r.sweep_value:>7g}  {r.variant:<28} {r.kmr_ae:>7.3f} {r.kmr_ab:>7.3f} {r.akr:>7.3f}")
    print("\nThe optimized surface concentrates its power where Alice's and Bob's links")
    print("overlap, so it beats random phases at every gain.")


if __name__ == "__main__":
    main()
