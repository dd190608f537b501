"""metatx command line: scenario runs and calculator sweeps.

Exit codes: 0 success, 1 bad arguments or runtime failure, 2 malformed
config, 3 scenario invariant violated.
"""

from __future__ import annotations

import argparse
import math
import random
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

from .. import econ
from ..chainsim.config import MinerProfile
from ..secmdp import DEFAULT_VD_MAX, sweep
from .config import (
    ConfigParseError,
    ScenarioInvariantViolation,
    bundled_scenarios,
    load_bundled,
    load_scenario,
)
from .output import csv_text, write_run
from .runner import run_simulation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

PROFILE_CHOICES = sorted(econ.PROFILES)


def parse_values(text: str, cast: Callable = float) -> list:
    """Parse ``"1..12"`` (inclusive integer range), ``"0,0.5,1"`` or a mix of both."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                a, b = int(lo), int(hi)
            except ValueError:
                raise argparse.ArgumentTypeError(f"ranges take integers: {part!r}") from None
            if b < a:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.extend(cast(v) for v in range(a, b + 1))
        else:
            try:
                out.append(cast(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty value list")
    return out


def _ints(text: str) -> list[int]:
    return parse_values(text, int)


def _floats(text: str) -> list[float]:
    return parse_values(text, float)


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_run(args) -> int:
    try:
        if args.scenario:
            scenario = load_bundled(args.scenario)
        elif args.config:
            scenario = load_scenario(args.config)
        else:
            print("run needs --config PATH or --scenario NAME", file=sys.stderr)
            return EXIT_USAGE
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioInvariantViolation as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    result = run_simulation(scenario, args.seed)
    target = write_run(result, args.out or "results")
    print(target)
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name in bundled_scenarios():
        print(name)
    return EXIT_OK


def cmd_throughput(args) -> int:
    prof = econ.get_profile(args.profile)
    schemes = args.scheme or sorted(prof.overheads)
    rows = []
    for scheme in schemes:
        model = prof.model(scheme)
        for f in args.fractions:
            tps = econ.throughput(model, f)
            rows.append(
                {
                    "profile": prof.name,
                    "scheme": scheme,
                    "fraction": f,
                    "tps": tps,
                    "drop_pct": 100.0 * (1.0 - tps / model.base_tps),
                }
            )
    _emit(csv_text(("profile", "scheme", "fraction", "tps", "drop_pct"), rows), args.out)
    return EXIT_OK


def cmd_breakeven(args) -> int:
    prof = econ.get_profile(args.profile)
    open_gas = args.open if args.open is not None else prof.channel_open_gas
    overhead = args.overhead if args.overhead is not None else prof.overheads.get("miner")
    if open_gas is None or overhead is None:
        print(f"profile {prof.name!r} has no channel costs; pass --open and --overhead", file=sys.stderr)
        return EXIT_USAGE
    rows = [
        {"open_gas": open_gas, "overhead_gas": overhead, "channels": k,
         "breakeven": econ.breakeven(int(open_gas), int(overhead), k)}
        for k in args.channels
    ]
    _emit(csv_text(("open_gas", "overhead_gas", "channels", "breakeven"), rows), args.out)
    return EXIT_OK


def cmd_inclusion(args) -> int:
    if args.shares:
        total = math.fsum(args.shares)
        shares = sorted(args.shares, reverse=True)
        miners = [MinerProfile(econ.pool_id(i), s / total) for i, s in enumerate(shares)]
    else:
        miners = econ.sample_pool_distribution(args.pools, args.lam, random.Random(args.seed))
    rows = []
    for n in args.channels:
        if n > len(miners):
            print(f"cannot open {n} channels to {len(miners)} pools", file=sys.stderr)
            return EXIT_USAGE
        p = econ.inclusion_probability({m.miner_id for m in miners[:n]}, miners)
        rows.append({"channels": n, "probability": p, "expected_blocks": econ.expected_blocks_to_inclusion(p)})
    _emit(csv_text(("channels", "probability", "expected_blocks"), rows), args.out)
    return EXIT_OK


def cmd_takeover(args) -> int:
    p = econ.TakeoverParams(
        args.daily_fees, args.price, args.network_hash, args.unit_hash, args.unit_price
    )
    rows = []
    for hours in args.hours:
        takeover, attack = econ.takeover_cost(p, hours)
        rows.append({"hours": hours, "takeover_usd": takeover, "attack51_usd": attack})
    _emit(csv_text(("hours", "takeover_usd", "attack51_usd"), rows), args.out)
    return EXIT_OK


def cmd_subsidy(args) -> int:
    rows = []
    for kind in args.policy:
        policy = econ.SubsidyPolicy(econ.RefundKind(kind), args.pool)
        for fee in args.fees:
            refund, new_pool, net = econ.subsidy_step(policy, fee)
            steps, cost = econ.drain_closed_form(policy, fee)
            rows.append(
                {"policy": kind, "pool": args.pool, "fee": fee, "refund": refund, "new_pool": new_pool,
                 "net_cost": net, "steps_to_drain": steps, "drain_cost": cost}
            )
    cols = ("policy", "pool", "fee", "refund", "new_pool", "net_cost", "steps_to_drain", "drain_cost")
    _emit(csv_text(cols, rows), args.out)
    return EXIT_OK


def cmd_security_vd(args) -> int:
    rows = sweep(
        args.alpha, args.k, args.fee,
        gamma=args.gamma, stale_rate=args.stale, max_lead=args.max_lead,
        vd_max=args.vd_max, workers=args.workers,
    )
    cols = ("alpha", "k", "fee_const", "gamma", "stale_rate", "vd_native", "vd_meta", "difference")
    records = [
        {"alpha": r.alpha, "k": r.k, "fee_const": r.fee_const, "gamma": r.gamma,
         "stale_rate": r.stale_rate, "vd_native": r.vd_native, "vd_meta": r.vd_meta,
         "difference": r.difference}
        for r in rows
    ]
    _emit(csv_text(cols, records), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metatx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write its result files")
    p.add_argument("--config", help="scenario TOML file")
    p.add_argument("--scenario", choices=bundled_scenarios(), help="bundled scenario name")
    p.add_argument("--seed", type=_u64, help="override the scenario seed")
    p.add_argument("--out", help="root output directory (default: results)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scenarios", help="list bundled scenarios")
    p.set_defaults(func=cmd_scenarios)

    def with_common(p, profile_default="paper-defaults"):
        p.add_argument("--profile", choices=PROFILE_CHOICES, default=profile_default)
        p.add_argument("--out", help="CSV file (default: stdout)")
        return p

    p = with_common(sub.add_parser("econ-throughput", help="throughput vs metatransaction fraction"), "bitcoin")
    p.add_argument("--fractions", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--scheme", action="append", help="scheme overhead to use (repeatable; default all)")
    p.set_defaults(func=cmd_throughput)

    p = with_common(sub.add_parser("econ-breakeven", help="metatransactions needed to amortize channels"))
    p.add_argument("--open", type=int, help="channel opening cost in gas")
    p.add_argument("--overhead", type=int, help="per-metatransaction overhead in gas")
    p.add_argument("--channels", type=_ints, default=[1, 10, 20])
    p.set_defaults(func=cmd_breakeven)

    p = with_common(sub.add_parser("econ-inclusion", help="inclusion probability vs channels to top pools"))
    p.add_argument("--pools", type=int, default=70)
    p.add_argument("--lambda", dest="lam", type=float, default=2.4045)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--shares", type=_floats, help="explicit pool shares instead of sampling")
    p.add_argument("--channels", type=_ints, default=list(range(1, 11)))
    p.set_defaults(func=cmd_inclusion)

    d = econ.ETHEREUM_2019
    p = with_common(sub.add_parser("econ-takeover", help="currency takeover vs rented 51%% attack"))
    p.add_argument("--hours", type=_floats, default=[1.0, 24.0, 168.0])
    p.add_argument("--daily-fees", type=float, default=d.daily_fees_native)
    p.add_argument("--price", type=float, default=d.price_usd)
    p.add_argument("--network-hash", type=float, default=d.network_hash)
    p.add_argument("--unit-hash", type=float, default=d.unit_hash)
    p.add_argument("--unit-price", type=float, default=d.unit_price_usd_per_hour)
    p.set_defaults(func=cmd_takeover)

    p = with_common(sub.add_parser("econ-subsidy", help="subsidy refunds and pool drain cost"))
    p.add_argument("--policy", action="append", choices=[k.value for k in econ.RefundKind])
    p.add_argument("--pool", type=int, default=5000)
    p.add_argument("--fees", type=_ints, default=[1000, 10000])
    p.set_defaults(func=cmd_subsidy)

    p = with_common(sub.add_parser("security-vd", help="double-spend value sweep, native vs meta fees"))
    p.add_argument("--alpha", type=_floats, default=[0.1, 0.2, 0.3, 0.4])
    p.add_argument("--k", type=_ints, default=[1, 3, 6, 12])
    p.add_argument("--fee", type=_floats, default=[0.05])
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--stale", type=float, default=0.0)
    p.add_argument("--max-lead", type=int, default=None)
    p.add_argument("--vd-max", type=float, default=DEFAULT_VD_MAX)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_security_vd)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "policy", "unset") is None:
        args.policy = [k.value for k in econ.RefundKind]
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
