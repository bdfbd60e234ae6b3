#!/usr/bin/env python3
"""Run every verification scenario on both built-in surfaces.

Writes CSVs under out/<surface>/<scenario>/ and prints one summary block
per scenario.  Intended as the quick "does everything still hold" sweep;
grid sizes default to the smallest resolution at which all the tight
spectral tolerances are meaningful (N = 32).
"""

import argparse
import sys
from pathlib import Path

from surfstokes.dynamics import SimConfig
from surfstokes.harness import SCENARIOS, run_scenario


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=32, help="grid size per axis")
    parser.add_argument("--out", default="out", help="output root directory")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    configs = {
        "flat_torus": SimConfig(
            surface="flat_torus", n_theta=args.n, n_phi=args.n,
            dt=0.01, t_end=5.0, seed=args.seed,
        ),
        "torus_of_revolution": SimConfig(
            surface="torus_of_revolution", R=2.0, r=1.0,
            n_theta=args.n, n_phi=args.n, dt=0.01, t_end=5.0, seed=args.seed,
        ),
    }

    all_passed = True
    for surface, config in configs.items():
        for name in SCENARIOS:
            out_dir = Path(args.out) / surface / name
            report = run_scenario(name, config, out_dir=out_dir)
            print(report.summary())
            all_passed &= report.passed
    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
