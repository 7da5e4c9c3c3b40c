#!/usr/bin/env python3
"""Power-scaling experiments: interference-to-desired ratio as the network
grows under the 1/Mc^2 (case I) and 1/N (case II) per-AP power laws."""

import argparse

from cfisac.harness import asymptotic_sweep
from cfisac.model import NetworkConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=1500)
    parser.add_argument("--reps", type=int, default=12)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    config = NetworkConfig(M=8, N=4, K=2, L=1, tau_t=3, rng_seed=args.seed)
    for case, sizes in (("I", [16, 32, 64, 128]), ("II", [16, 64, 256])):
        rows = asymptotic_sweep(case, config, 1.0, sizes, draws=args.draws,
                                seed=args.seed, geo_reps=args.reps)
        print(f"case {case}: size  rho  desired  interference  ratio")
        for r in rows:
            print(f"  {r.size:4d}  {r.rho:.3e}  {r.desired_power:.3e}  "
                  f"{r.interference_power:.3e}  {r.ratio:.4f}")


if __name__ == "__main__":
    main()
