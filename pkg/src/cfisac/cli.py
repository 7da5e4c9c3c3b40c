"""Command-line interface: simulate / campaign / asymptotic / verify.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness, metrics
from .model import ConfigError, NetworkConfig, load_network_config


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(x) -> str:
    return f"{float(x):.9g}"


def _network_config(args) -> NetworkConfig:
    if getattr(args, "config", None):
        config = load_network_config(args.config)
    else:
        config = NetworkConfig()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, rng_seed=args.seed)
    config.validate()
    return config


def cmd_simulate(args) -> int:
    config = _network_config(args)
    seed = harness.realization_seed(config.rng_seed, 0)
    real, grouping = harness.draw_for_seed(config, seed)
    res = harness.run_scheme(config, real, grouping, args.scheme, seed)
    report = metrics.evaluate(real, grouping, res.alloc, config)
    print(f"scheme {args.scheme}  seed {config.rng_seed}")
    print(f"sensing_success {int(res.sensing_success)}")
    print(f"sensing_aps {int(round(config.M - res.alloc.a.sum()))}")
    print("sinr " + " ".join(_fmt(v) for v in report.sinr))
    print("per_ue_se " + " ".join(_fmt(v) for v in res.per_ue_se))
    print(f"min_se {_fmt(res.min_se)}")
    print("masr " + " ".join(_fmt(v) for v in report.masr))
    print("masr_satisfied " + " ".join(str(int(v)) for v in report.masr_satisfied))
    print(f"iterations {res.iterations}")
    return 0


def cmd_campaign(args) -> int:
    spec = harness.load_campaign_spec(args.spec)
    if args.out:
        spec = dataclasses.replace(spec, out_dir=args.out)
    if args.realizations:
        spec = dataclasses.replace(spec, realizations=args.realizations)
    result = harness.run_campaign(spec, workers=args.workers, quiet=False)
    for value in spec.points:
        for scheme in spec.schemes:
            print(f"value={value} scheme={scheme} "
                  f"success_rate={_fmt(result.success_rate(scheme, float(value)))} "
                  f"mean_min_se={_fmt(result.mean_min_se(scheme, float(value)))}")
    print(f"wrote {spec.out_dir}/campaign.csv")
    return 0


def cmd_asymptotic(args) -> int:
    config = _network_config(args)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = harness.asymptotic_sweep(args.case, config, args.energy, sizes,
                                    draws=args.draws, seed=args.seed,
                                    geo_reps=args.reps)
    print("size,rho,desired_power,interference_power,ratio")
    for r in rows:
        print(f"{r.size},{_fmt(r.rho)},{_fmt(r.desired_power)},"
              f"{_fmt(r.interference_power)},{_fmt(r.ratio)}")
    return 0


def cmd_verify(args) -> int:
    checks = harness.verify_suite(quick=args.quick)
    ok = True
    for name, passed, detail in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return 0 if ok else 2


def build_parser() -> _Parser:
    parser = _Parser(prog="cfisac",
                     description="Cell-free massive MIMO ISAC simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one network realization")
    p.add_argument("--config", help="network config file")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--scheme", default="JAP-OPA", choices=harness.SCHEMES)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("campaign", help="run a campaign spec file")
    p.add_argument("spec", help="campaign config file")
    p.add_argument("--out", help="output directory override")
    p.add_argument("--realizations", type=int, help="realization count override")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("asymptotic", help="power-scaling sweep (case I or II)")
    p.add_argument("--case", required=True, choices=["I", "II"])
    p.add_argument("--config", help="network config file")
    p.add_argument("--sizes", default="16,32,64,128",
                   help="comma-separated sizes (M for case I, N for case II)")
    p.add_argument("--draws", type=int, default=1500)
    p.add_argument("--reps", type=int, default=12,
                   help="independent geometry drops to average over")
    p.add_argument("--energy", type=float, default=1.0,
                   help="fixed energy budget E in the scaling law")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_asymptotic)

    p = sub.add_parser("verify", help="run the analytical-oracle cross checks")
    p.add_argument("--quick", action="store_true", help="reduced draw counts")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure contract
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def cli_main(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
