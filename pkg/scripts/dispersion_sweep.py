"""Turing windows of the Gierer-Meinhardt model on BA and WS networks.

Prints the instability window for both Laplacian variants and both
assignments of the transport rates, over a range of network seeds.

Usage: python3 scripts/dispersion_sweep.py [--J 200] [--seeds 3]
"""

import argparse

import numpy as np

from ctrw_patterns import analysis, kinetics, laplacian, network

RATES = {"inhibitor faster": (1 / 256, 1.0), "activator faster": (1.0, 1 / 256)}


def window(net, variant, rates, grid):
    rates = np.asarray(rates)
    if variant == "CaseB":
        rates = np.asarray(laplacian.case_b_rescaled_rates(net, *rates))
    curve = analysis.dispersion_relation(laplacian.build(net, variant), kinetics.gierer_meinhardt(), rates, grid)
    return curve.window


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--J", type=int, default=200)
    parser.add_argument("--seeds", type=int, default=3)
    args = parser.parse_args()
    grid = np.logspace(-4, 4, 267)
    for family in ("BA", "WS"):
        for seed in range(1, args.seeds + 1):
            if family == "BA":
                net = network.generate_ba(args.J, 3, seed)
            else:
                net = network.generate_ws(args.J, 3, 0.1, seed)
            for label, rates in RATES.items():
                cells = []
                for variant in ("CaseA", "CaseB"):
                    w = window(net, variant, rates, grid)
                    cells.append(f"{variant} " + ("none" if w is None else f"[{w[0]:.3g}, {w[1]:.3g}]"))
                print(f"{family} seed {seed} {label:17s} " + "  ".join(cells))


if __name__ == "__main__":
    main()
