"""Command line: kernel building and conversion, stability, psi, the CLT ladder and heat solves."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import kernels as kn
from .clt import emit_report, run_clt
from .haar import read_grid_function, write_grid_function
from .jsonio import dumps_json
from .spectral import heat_solve

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

# options whose values may start with a minus sign ("-30:30")
_RANGE_FLAGS = ("--window", "--jrange", "--grid")


def _int_pair(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected <int>:<int>, got {text!r}") from None


def _p_list(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip().lower()
        try:
            out.append(math.inf if part in ("inf", "infinity") else float(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad exponent {part!r}") from None
    return out


def _glue_ranges(argv: list[str]) -> list[str]:
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyadic-diffusion",
        description="Dyadic Markov kernels, Haar spectral solves and the dyadic CLT ladder.")
    sub = parser.add_subparsers(dest="command", required=True)

    kernel = sub.add_parser("kernel", help="Build, convert and convolve kernels")
    ksub = kernel.add_subparsers(dest="action", required=True)

    build = ksub.add_parser("build", help="Write a kernel JSON file")
    build.add_argument("--type", choices=("gaussian", "powerlaw", "step"), required=True)
    build.add_argument("--t", type=float, default=1.0, help="diffusion time (gaussian)")
    build.add_argument("--sigma", type=float, default=2.0 / 3.0, help="stability parameter (powerlaw)")
    build.add_argument("--window", type=_int_pair, default=kn.DEFAULT_WINDOW, metavar="LO:HI")
    build.add_argument("--out", type=Path, required=True)

    convert = ksub.add_parser("convert", help="Print the sequences of a kernel as CSV")
    convert.add_argument("--in", dest="inp", type=Path, required=True)
    convert.add_argument("--show", choices=("lambda", "alpha", "k", "all"), default="all")

    conv = ksub.add_parser("convolve", help="Convolve two kernels")
    conv.add_argument("--a", type=Path, required=True)
    conv.add_argument("--b", type=Path, required=True)
    conv.add_argument("--out", type=Path, required=True)

    stab = sub.add_parser("stability", help="Estimate the 1-stability parameter")
    stab.add_argument("--in", dest="inp", type=Path, required=True)

    ps = sub.add_parser("psi", help="Evaluate psi(r) and r^2 psi(r)")
    ps.add_argument("--r", type=float, required=True)

    clt = sub.add_parser("clt", help="Run the iteration-mollification ladder")
    clt.add_argument("--seed", type=Path, required=True)
    clt.add_argument("--t", type=float, default=1.0)
    clt.add_argument("--imax", type=int, default=20)
    clt.add_argument("--jrange", type=_int_pair, default=(-6, 6), metavar="LO:HI")
    clt.add_argument("--grid", type=_int_pair, default=(4, 8), metavar="JD:JR")
    clt.add_argument("--p", type=_p_list, default=[1.0, 2.0, math.inf])
    clt.add_argument("--format", choices=("csv", "json"), default="json")
    clt.add_argument("--out", type=Path, required=True)
    clt.add_argument("--assume-stable", action="store_true",
                     help="skip the 5%% stability gate on the seed")

    solve = sub.add_parser("solve", help="Solve the dyadic heat equation on a grid")
    solve.add_argument("--s", type=float, default=1.0)
    solve.add_argument("--t", type=float, required=True)
    solve.add_argument("--u0", type=Path, required=True)
    solve.add_argument("--out", type=Path, required=True)
    return parser


def _kernel(args) -> None:
    if args.action == "build":
        if args.type == "gaussian":
            K = kn.gaussian(args.t, args.window)
        elif args.type == "powerlaw":
            K = kn.power_law_seed(args.sigma, args.window)
        else:
            K = kn.step_kernel(args.window)
        kn.save_kernel(K, args.out)
    elif args.action == "convert":
        sys.stdout.write(kn.kernel_table_csv(kn.load_kernel(args.inp), args.show))
    else:
        K = kn.convolve(kn.load_kernel(args.a), kn.load_kernel(args.b))
        kn.save_kernel(K, args.out)


def run(args) -> None:
    if args.command == "kernel":
        _kernel(args)
    elif args.command == "stability":
        print(dumps_json(kn.stability_estimate(kn.load_kernel(args.inp)).to_dict()))
    elif args.command == "psi":
        v = kn.psi(args.r)
        print(dumps_json({"r": args.r, "psi": v, "r2_psi": args.r * args.r * v}))
    elif args.command == "clt":
        seed = kn.load_kernel(args.seed)
        report = run_clt(seed, args.t, args.imax, args.jrange, args.grid, p_list=args.p,
                         assume_stable=args.assume_stable, seed_name=str(args.seed))
        emit_report(report, args.format, args.out)
    elif args.command == "solve":
        u0 = read_grid_function(args.u0)
        write_grid_function(heat_solve(args.s, args.t, u0), args.out)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_ranges(argv))
    try:
        run(args)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
