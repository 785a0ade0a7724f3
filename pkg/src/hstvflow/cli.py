"""Command-line front end: ``hstvflow [--config FILE] [--s S] ...``."""

import argparse
import sys

from .errors import ConfigurationError
from .experiment import EXIT_CONFIG, load_config, make_config, run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hstvflow",
        description="Evolve the H^{-s} total variation flow on a periodic 1D grid.",
    )
    p.add_argument("--config", metavar="PATH",
                   help="key = value file, or JSON (a diagnostics.json is accepted)")
    p.add_argument("--s", help="fractional index in [0, 1]")
    p.add_argument("--tau", help="implicit time step")
    p.add_argument("--lambda", dest="lambda", metavar="LAMBDA",
                   help="splitting step, a number or 'auto'")
    p.add_argument("--h", help="grid spacing")
    p.add_argument("--domain", metavar="XMIN:XMAX", help="periodic interval")
    p.add_argument("--steps", help="number of implicit steps")
    p.add_argument("--snapshot-every", help="store every k-th step")
    p.add_argument("--initial", help="'f', 'g', or a path to initial data")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--strict", action="store_const", const="true",
                   help="abort with exit code 3 if an inner solve does not converge")
    p.add_argument("--ergodic", action="store_const", const="true",
                   help="also accumulate ergodic averages of the dual iterates")
    p.add_argument("--tol-z", help="sup-norm increment tolerance")
    p.add_argument("--tol-gap", help="relative duality gap tolerance")
    p.add_argument("--max-iter", help="inner iteration cap per step")
    p.add_argument("--safety", help="fraction of the stability bound used by lambda=auto")
    p.add_argument("--warm-start", help="reuse the previous dual variable (true/false)")
    p.add_argument("--stop-at-extinction", help="halt once u is constant (true/false)")
    p.add_argument("--extinction-eps", help="spread threshold for extinction")
    p.add_argument("--seed", help="RNG seed for synthetic noise")
    p.add_argument("--noise", help="standard deviation of added Gaussian noise")
    p.add_argument("--backend", choices=("cython", "python"),
                   help="inner-loop implementation (default: compiled if available)")
    return p


def _join_domain(argv):
    # argparse takes "-5:5" for an option, so glue it to its flag
    out = []
    it = iter(argv)
    for a in it:
        if a == "--domain":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--domain={nxt}")
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_domain(argv))
    flags = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("config", "backend")}
    try:
        file_values = load_config(args.config) if args.config else {}
        cfg = make_config(file_values, flags)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg, backend=args.backend)
    except ValueError as exc:  # unavailable backend
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
