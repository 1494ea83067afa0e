"""Command-line front end: ``chaoslink fit | curve | validate``.

Exit codes: 0 ok, 1 usage or configuration error, 2 numeric failure,
3 acceptance failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from .analytic import AberCurve, curve as analytic_curve, fmt_float
from .config import RunControls, load_scenario
from .errors import ChaosLinkError, ConfigError, FitError
from .fit import DEFAULT_FIT_SEED, DEFAULT_RESTARTS, ExpSumApprox, fit_expsum
from .montecarlo import DEFAULT_CHUNK, DEFAULT_TRIALS, EXACT, sim_system_grid

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3
SEED_ENV = "CHAOSLINK_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be lo:hi:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    if not lo < hi or n < 2:
        raise argparse.ArgumentTypeError("grid needs lo < hi and n >= 2")
    return lo, hi, n


def _criteria(text):
    try:
        ids = sorted({int(v) for v in text.split(",") if v.strip()})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad criteria list {text!r}")
    if not ids or any(not 1 <= v <= 9 for v in ids):
        raise argparse.ArgumentTypeError("criteria are numbered 1..9")
    return ids


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chaoslink", description="DCSK relay error-rate analysis")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit the exponential-sum kernel approximation")
    f.add_argument("--a", type=float, required=True, help="noise shape exponent")
    f.add_argument("--M", type=_positive_int, required=True, help="half spreading factor")
    f.add_argument("--terms", type=_positive_int, default=4)
    f.add_argument("--grid-db", type=_grid, default=None, metavar="LO:HI:N")
    f.add_argument("--out", default=None, help="JSON output path (default stdout)")
    f.add_argument("--seed", type=_seed, default=DEFAULT_FIT_SEED, help="multistart seed")
    f.add_argument("--restarts", type=_positive_int, default=DEFAULT_RESTARTS)
    f.add_argument("--threads", type=_positive_int, default=1)

    c = sub.add_parser("curve", help="average BER curve for a scenario file")
    c.add_argument("--scenario", required=True)
    c.add_argument("--mode", choices=("analytic", "mc", "both"), default="analytic")
    c.add_argument("--params", default=None, help="approximation JSON (default: fit now)")
    c.add_argument("--out", default=None, help="CSV output path (default stdout)")
    c.add_argument("--seed", type=_seed, default=None)
    c.add_argument("--trials", type=_positive_int, default=None)
    c.add_argument("--threads", type=_positive_int, default=None)
    c.add_argument("--tolerance", type=float, default=None)
    c.add_argument("--kernel", choices=("exact", "approx"), default=None,
                   help="Monte Carlo kernel (default: exact for mc, approx for both)")
    c.add_argument("--chunk", type=_positive_int, default=DEFAULT_CHUNK,
                   help="Monte Carlo trials per RNG stream")
    c.add_argument("--published-sqrt2", action="store_true", default=None,
                   help="use the printed S-D scale with the extra 1/sqrt(2)")

    v = sub.add_parser("validate", help="run the acceptance suite")
    v.add_argument("--report", default=None, help="JSON report path")
    v.add_argument("--criteria", type=_criteria, default=None, metavar="1,2,...")
    v.add_argument("--trials", type=_positive_int, default=None,
                   help="override Monte Carlo trial counts (smoke runs)")
    v.add_argument("--threads", type=_positive_int, default=1)
    return p


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def cmd_fit(args) -> int:
    approx = fit_expsum(args.a, args.M, args.terms, grid_db=args.grid_db,
                        restarts=args.restarts, seed=args.seed, threads=args.threads)
    print(f"max_rel_error={fmt_float(approx.max_rel_error)}",
          file=sys.stderr if args.out is None else sys.stdout)
    _write(args.out, approx.to_json())
    return EXIT_OK


def _resolve_seed(args, run: RunControls) -> int:
    if args.seed is not None:
        return args.seed
    if run.seed is not None:
        return run.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _seed(env)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"{SEED_ENV}: {exc}") from exc
    raise ConfigError(f"Monte Carlo mode needs a seed: --seed, the scenario 'seed' key, "
                      f"or {SEED_ENV}")


def _load_params(path, sc) -> ExpSumApprox:
    try:
        with open(path) as fh:
            approx = ExpSumApprox.from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read params file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if approx.noise_a != sc.noise.shape_a or approx.spreading_M != sc.spreading_half_M:
        raise ConfigError(
            f"params fitted for a={approx.noise_a}, M={approx.spreading_M} but the scenario "
            f"has a={sc.noise.shape_a}, M={sc.spreading_half_M}")
    return approx


def _both_csv(ana: AberCurve, mc: AberCurve) -> str:
    lines = ["snr_db,ber,protocol,provenance,std_err,agreement"]
    for row in ana.rows():
        lines.append(",".join(row + ["", ""]))
    for i, row in enumerate(mc.rows()):
        se = mc.std_err[i]
        diff = abs(ana.ber[i] - mc.ber[i])
        if not math.isfinite(diff):
            agree = "nan"
        elif se > 0:
            agree = fmt_float(diff / se)
        else:
            agree = "0" if diff == 0 else "inf"
        lines.append(",".join(row + [agree]))
    return "\n".join(lines) + "\n"


def cmd_curve(args) -> int:
    sc, run = load_scenario(args.scenario)
    if not sc.snr_grid_db:
        raise ConfigError("$.snr_db: the SNR grid is empty")
    tolerance = args.tolerance if args.tolerance is not None else run.tolerance
    if not tolerance > 0:
        raise ConfigError("--tolerance must be positive")
    threads = args.threads if args.threads is not None else run.threads
    sqrt2 = args.published_sqrt2 if args.published_sqrt2 is not None else run.published_sqrt2
    params = args.params if args.params is not None else run.params
    out = args.out if args.out is not None else run.out

    seed = None
    if args.mode != "analytic":
        seed = _resolve_seed(args, run)   # fail early, before any fitting

    needs_approx = args.mode != "mc" or args.kernel == "approx"
    approx = None
    if needs_approx:
        approx = (_load_params(params, sc) if params
                  else fit_expsum(sc.noise.shape_a, sc.spreading_half_M, threads=threads))

    ana = analytic_curve(sc, approx, tolerance, sqrt2) if args.mode != "mc" else None
    if args.mode == "analytic":
        _write(out, ana.to_csv())
        return EXIT_OK

    kernel_name = args.kernel or ("exact" if args.mode == "mc" else "approx")
    kernel = EXACT if kernel_name == "exact" else approx
    trials = args.trials or run.trials or DEFAULT_TRIALS
    ests = sim_system_grid(sc, sc.snr_grid_db, trials, seed, kernel, threads=threads,
                           chunk=args.chunk)[sc.protocol]
    mc = AberCurve(sc.snr_grid_db, [e.ber_hat for e in ests], sc.protocol,
                   f"monte-carlo-{kernel_name}", std_err=[e.std_err for e in ests])
    _write(out, mc.to_csv() if args.mode == "mc" else _both_csv(ana, mc))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validate import run_criteria

    report = run_criteria(args.criteria, trials=args.trials, threads=args.threads,
                          echo=lambda line: print(line, flush=True))
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.report:
        _write(args.report, text)
    print("all criteria passed" if report["all_passed"] else "some criteria FAILED")
    return EXIT_OK if report["all_passed"] else EXIT_VALIDATION


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


COMMANDS = {"fit": cmd_fit, "curve": cmd_curve, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:   # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except FitError as exc:
        print(f"chaoslink: fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OSError) as exc:
        print(f"chaoslink: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChaosLinkError, ArithmeticError) as exc:
        print(f"chaoslink: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
