"""Command-line front end.

Subcommands:
    balance    read a market file, compute its balanced form, report it
    run        run a config-driven experiment and write result files
    enumerate  sample one preference draw from a market and list all stable
               matchings
    summarize  aggregate a previously written trials.csv

Exit codes: 0 on success (and all experiment checks passing), 1 when an
experiment ran but a check failed, 2 on bad input or usage.
"""
from __future__ import annotations

import argparse
import sys

from .errors import MmlError
from .market import (
    contiguity_constant,
    read_market,
    sinkhorn_balance,
    write_matrix_pair,
)
from .matching import Side, deferred_acceptance, enumerate_stable
from .experiments import (
    format_summary,
    load_config,
    records_from_csv,
    run_experiment,
    summarize,
    summarize_experiment,
    write_outputs,
)
from .rng import exponentials, stream_key
from .sampling import LatentValues, prefs_from_latent, sample_latent


def _cmd_balance(args: argparse.Namespace) -> int:
    market = read_market(args.market)
    bal = sinkhorn_balance(market, tol=args.tol, max_iters=args.max_iters)
    c = contiguity_constant(bal)
    print(f"n: {bal.n}")
    print(f"iterations: {bal.sinkhorn_iters}")
    print(f"residual: {bal.residual:.3e}")
    print(f"contiguity constant: {c!r}")
    print(f"fitness (men):   min {bal.phi.min()!r}  max {bal.phi.max()!r}")
    print(f"fitness (women): min {bal.psi.min()!r}  max {bal.psi.max()!r}")
    if args.out is not None:
        write_matrix_pair(args.out, bal.A, bal.B)
        print(f"balanced scores written to {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    summary, records = run_experiment(cfg)
    write_outputs(args.out, cfg, summary, records)
    sys.stdout.write(format_summary(summary))
    print(f"outputs written to {args.out}")
    if summary.get("interrupted"):
        return 130
    return 0 if summary["passed"] else 1


def _sample_profile(market, seed: int):
    if market.is_square:
        return prefs_from_latent(sample_latent(sinkhorn_balance(market), seed))
    # Off-square there is no balanced form; rankings only depend on
    # within-row rate ratios, so canonical rates draw the same preferences.
    values = LatentValues(
        X=exponentials(stream_key(seed, "X"), market.a_hat),
        Y=exponentials(stream_key(seed, "Y"), market.b_hat),
        seed=seed,
    )
    return prefs_from_latent(values)


def _cmd_enumerate(args: argparse.Namespace) -> int:
    market = read_market(args.market)
    prefs = _sample_profile(market, args.seed)
    stable = enumerate_stable(prefs)
    man_optimal, _ = deferred_acceptance(prefs, Side.MEN)
    woman_optimal, _ = deferred_acceptance(prefs, Side.WOMEN)
    print(f"stable matchings: {len(stable)}")
    for idx, matching in enumerate(stable, start=1):
        tags = []
        if matching == man_optimal:
            tags.append("man-optimal")
        if matching == woman_optimal:
            tags.append("woman-optimal")
        suffix = f" ({', '.join(tags)})" if tags else ""
        print(f"# {idx} of {len(stable)}{suffix}")
        text = matching.to_text()
        if text:
            print(text)
    return 0


def _cmd_summarize(args: argparse.Namespace) -> int:
    with open(args.trials, "r", encoding="utf-8") as fh:
        records = records_from_csv(fh.read())
    if args.config is not None:
        cfg = load_config(args.config)
        summary = summarize_experiment(cfg, records)
        sys.stdout.write(format_summary(summary))
        return 0 if summary["passed"] else 1
    stats = summarize(records)
    print(f"records: {len(records)}")
    print(f"{'statistic':<18} {'count':>6} {'mean':>12} {'std':>12} {'min':>12} {'max':>12}")
    for name, row in stats.items():
        print(
            f"{name:<18} {row['count']:>6d} {row['mean']:>12.6g} {row['std']:>12.6g} "
            f"{row['min']:>12.6g} {row['max']:>12.6g}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mml", description="Matching markets with logit preferences."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_balance = sub.add_parser("balance", help="balance a market's score matrices")
    p_balance.add_argument("market", help="market file (canonical or raw scores)")
    p_balance.add_argument("--tol", type=float, default=1e-10)
    p_balance.add_argument("--max-iters", type=int, default=10_000)
    p_balance.add_argument("--out", default=None, help="write balanced scores here")
    p_balance.set_defaults(func=_cmd_balance)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("config", help="experiment config file (key = value lines)")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_enum = sub.add_parser(
        "enumerate", help="enumerate stable matchings of one sampled draw"
    )
    p_enum.add_argument("market", help="market file")
    p_enum.add_argument("--seed", type=int, required=True)
    p_enum.set_defaults(func=_cmd_enumerate)

    p_sum = sub.add_parser("summarize", help="summarize a trials.csv")
    p_sum.add_argument("trials", help="trials.csv from a previous run")
    p_sum.add_argument(
        "--config", default=None, help="re-apply this config's pass checks"
    )
    p_sum.set_defaults(func=_cmd_summarize)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
