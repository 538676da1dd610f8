"""Command-line interface: experiments, scaling, transcripts and theta tables."""

from __future__ import annotations

import argparse
import os
import sys

from .channel import Channel, ChannelConfig, required_gamma, stream
from .harness import (
    PROTOCOLS,
    ExperimentPlan,
    measure_logstar_scaling,
    run_experiment,
    scaling_csv,
    to_csv,
    to_json,
)
from .symmetric import ThetaTable

SEED_ENV = "ERASURE_BROADCAST_SEED"


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _add_common(p: argparse.ArgumentParser, many: bool) -> None:
    nargs = "+" if many else None
    p.add_argument("--n", type=int, nargs=nargs, required=True, help="number of processors")
    p.add_argument("--p", type=float, nargs=nargs, default=[0.0] if many else 0.0, help="erasure probability")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gamma", type=int, nargs=nargs, default=None, help="repetitions per broadcast")
    g.add_argument("--gamma-target", type=float, default=None, help="pick the least gamma with p**gamma <= target")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def _add_experiment(p: argparse.ArgumentParser, many: bool) -> None:
    p.add_argument("--protocol", choices=sorted(PROTOCOLS), required=True)
    _add_common(p, many)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="erasure-broadcast",
        description="Simulate protocols on the noisy broadcast channel with erasures.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    _add_experiment(sub.add_parser("run", help="one protocol on one grid cell"), many=False)
    _add_experiment(sub.add_parser("sweep", help="one protocol over a grid of n, p and gamma"), many=True)

    sc = sub.add_parser("scaling", help="LearnInput rounds and recursion depth against n")
    _add_common(sc, many=True)

    dt = sub.add_parser("dump-transcript", help="record physical rounds of one broadcast")
    _add_common(dt, many=False)
    dt.add_argument("--rounds", type=int, default=1, help="broadcasts to record (each gamma rounds)")

    th = sub.add_parser("theta-table", help="export a theta table as CSV")
    th.add_argument("--p", type=float, required=True)
    th.add_argument("--a", type=int, required=True)
    th.add_argument("--b", type=int, required=True)
    th.add_argument("--out", default=None)
    return parser


def _as_list(v):
    return v if isinstance(v, list) else [v]


def _gammas(args) -> list[int]:
    return [1] if args.gamma is None else _as_list(args.gamma)


def _experiment(args) -> int:
    plan = ExperimentPlan(
        protocol=args.protocol,
        ns=_as_list(args.n),
        ps=_as_list(args.p),
        gammas=_gammas(args),
        gamma_target=args.gamma_target,
        trials=args.trials,
        seed=_default_seed() if args.seed is None else args.seed,
        jobs=args.jobs,
    )
    stats = run_experiment(plan)
    _emit(to_csv(stats) if args.format == "csv" else to_json(stats), args.out)
    return 0


def _scaling(args) -> int:
    ps = _as_list(args.p)
    gammas = _gammas(args)
    if len(ps) != 1 or len(gammas) != 1:
        raise ValueError("scaling takes a single p and gamma")
    p, gamma = ps[0], gammas[0]
    if args.gamma_target is not None:
        gamma = required_gamma(p, args.gamma_target)
    seed = _default_seed() if args.seed is None else args.seed
    rows = measure_logstar_scaling(sorted(args.n), p, gamma, seed)
    _emit(scaling_csv(rows), args.out)
    return 0


def _dump_transcript(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    gamma = args.gamma if args.gamma is not None else 1
    if args.gamma_target is not None:
        gamma = required_gamma(args.p, args.gamma_target)
    config = ChannelConfig(args.n, args.p, gamma, seed)
    ch = Channel(config, physical=True, record=True)
    sent = stream(seed, 1).integers(0, 2, args.n)
    for _ in range(args.rounds):
        ch.broadcast(sent)
    _emit("".join(line + "\n" for line in ch.transcript.lines()), args.out)
    return 0


def _theta_table(args) -> int:
    table = ThetaTable(args.p, args.a, args.b)
    if args.out in (None, "-"):
        table.to_csv(sys.stdout)
    else:
        table.to_csv(args.out)
    return 0


VERBS = {
    "run": _experiment,
    "sweep": _experiment,
    "scaling": _scaling,
    "dump-transcript": _dump_transcript,
    "theta-table": _theta_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
