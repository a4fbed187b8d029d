"""Command-line driver: ``estimate``, ``simulate`` and ``mc`` subcommands.

Exit codes: 0 success, 2 parameter error, 3 I/O error, 4 generation failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .chi import empirical_chi
from .csvio import read_matrix, write_json, write_matrix
from .errors import GenerationError, InputError, ParameterError
from .htsp import htsp
from .hyperparams import pure_partition, pure_rows, resolve, signal_strength, sparsity_index
from .simgen import ModelSpec, gen_loading_matrix, raw_loading, sample_dataset
from .study import StudyConfig, run_study

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_IO = 3
EXIT_GENERATION = 4

log = logging.getLogger("stdfpure")


def sidecar_path(out: Path) -> Path:
    return out.with_suffix(".json")


def cmd_estimate(args) -> int:
    X = read_matrix(args.input)
    n, d = X.shape
    if n < 2 or d < 2:
        raise InputError(f"{args.input}: need at least 2 rows and 2 columns, got {X.shape}")
    if not args.adaptive and (args.k is None or args.kappa is None):
        raise ParameterError("give both --k and --kappa, or --adaptive to fill in the missing ones")
    hp = resolve(n, d, args.k, args.kappa)
    est = htsp(empirical_chi(X, hp.k, args.seed), hp.kappa, exact=not args.greedy)
    out = Path(args.out)
    write_matrix(out, est.a_hat.values)
    write_json(sidecar_path(out), {
        "k_hat": est.k_hat,
        "s_hat": est.s_hat,
        "clique": est.purevar.clique,
        "pure_set": est.purevar.pure_set,
        "partition": est.purevar.partition,
        "k_used": hp.k,
        "kappa_used": hp.kappa,
        "mode": hp.mode,
        "fallback_rows": est.fallback_rows,
        "seed": args.seed,
        "n": n,
        "d": d,
    })
    log.info("K_hat=%d s_hat=%d k=%d kappa=%.6g", est.k_hat, est.s_hat, hp.k, hp.kappa)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = ModelSpec(args.kind, args.noise, args.d, args.K, args.eta, args.s,
                     args.factor_alpha, args.noise_alpha)
    if args.n < 2:
        raise ParameterError(f"n must be at least 2, got {args.n}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth = gen_loading_matrix(spec, args.seed)
    raw = raw_loading(truth, spec.factor_alpha)
    X = sample_dataset(raw, spec, args.n, args.seed)
    write_matrix(out / "data.csv", X.values)
    write_matrix(out / "A.csv", truth.values)
    if spec.factor_alpha != 1.0:
        write_matrix(out / "A_raw.csv", raw)
    write_json(out / "truth.json", {
        "kind": spec.kind, "noise": spec.noise, "d": spec.d, "K": spec.K, "eta": spec.eta,
        "s": spec.s, "factor_alpha": spec.factor_alpha, "noise_alpha": spec.noise_alpha,
        "n": args.n, "seed": args.seed,
        "pure_set": pure_rows(truth),
        "partition": pure_partition(truth),
        "sparsity_index": sparsity_index(truth),
        "signal_strength": signal_strength(truth),
    })
    return EXIT_OK


def cmd_mc(args) -> int:
    config = StudyConfig.load(args.config)
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = StudyConfig(**{**config.__dict__, **overrides})
    records = run_study(config, args.out, threads=args.threads, timing=not args.no_timing)
    log.info("wrote %d records to %s", len(records), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stdfpure", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate K and the loading matrix from a data CSV")
    p.add_argument("input", help="headerless CSV, rows are observations")
    p.add_argument("--out", required=True, help="output CSV for the estimate; a .json sidecar is written next to it")
    p.add_argument("--k", type=int, help="number of exceedances")
    p.add_argument("--kappa", type=float, help="threshold in (0, 1/2)")
    p.add_argument("--adaptive", action="store_true", help="adaptive value for any of --k/--kappa not given")
    p.add_argument("--seed", type=int, default=0, help="tie-breaking seed")
    p.add_argument("--greedy", action="store_true", help="greedy clique search (no optimality guarantee)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="generate a synthetic dataset and its ground truth")
    p.add_argument("--kind", choices=["linear", "max_linear"], default="linear")
    p.add_argument("--noise", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--eta", type=float, default=0.2)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--factor-alpha", type=float, default=1.0)
    p.add_argument("--noise-alpha", type=float, default=2.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc", help="run a Monte Carlo study from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--reps", type=int, help="override the replicate count")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the millis column so outputs are byte-reproducible")
    p.set_defaults(func=cmd_mc)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except GenerationError as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    except (OSError, InputError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # malformed JSON config and similar
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
