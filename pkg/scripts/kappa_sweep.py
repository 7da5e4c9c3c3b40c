#!/usr/bin/env python3
"""Mean min-SE and success rate versus the MASR requirement."""

import argparse

from cfisac.harness import load_campaign_spec, run_campaign


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--spec", default="configs/kappa_sweep.cfg")
    parser.add_argument("--workers", type=int, default=2)
    args = parser.parse_args()
    spec = load_campaign_spec(args.spec)
    result = run_campaign(spec, workers=args.workers, quiet=False)
    for value in spec.sweep_values:
        for scheme in spec.schemes:
            print(f"kappa={value} dB {scheme}: "
                  f"success {result.success_rate(scheme, value):.2f}, "
                  f"mean min-SE {result.mean_min_se(scheme, value):.3f}")
    print(f"CSV written to {spec.out_dir}/campaign.csv")


if __name__ == "__main__":
    main()
