"""Command line entry point. Exit codes: 0 ok, 2 bad configuration, 3 runtime abort."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .agent import Budget, MatchDesync
from .domains import GameSpecError, make_game
from .harness import (ConfigError, cfv_averaging_comparison, cfv_stability_experiment,
                      expected_strategy_exploitability, explore_sweep, interactive_match,
                      make_agent, run_tournament, write_csv)
from .tree import TreeTooLarge

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def parse_seeds(text: str) -> list[int]:
    """``3`` -> [3]; ``0-4`` -> [0..4]; ``1,5,7-8`` -> [1, 5, 7, 8]."""
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part[1:]:
                a, b = part.split("-", 1)
                out.extend(range(int(a), int(b) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None
    if not out:
        raise ConfigError("empty seed list")
    return out


def _budget(ms, iters, what: str) -> Budget:
    try:
        return Budget(iterations=iters, ms=ms)
    except ValueError as e:
        raise ConfigError(f"{what}: {e}") from None


def _common(p: argparse.ArgumentParser, agents: bool = True, budgets: bool = True) -> None:
    p.add_argument("--game", required=True, help="e.g. IIGS(5), LD(1,1,6), GP(3,3,2,2), B-RPS")
    if agents:
        p.add_argument("--agent", action="append", default=[],
                       help="agent spec, e.g. mccr:keep:eps=0.6 (repeatable)")
    if budgets:
        p.add_argument("--preplay-ms", type=float)
        p.add_argument("--preplay-iters", type=int)
        p.add_argument("--move-ms", type=float)
        p.add_argument("--move-iters", type=int)
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", help="CSV output path (a .json sidecar is written next to it)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mccr", description="Continual resolving experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run MCCFR or CFR from the root and save the average strategy")
    _common(p, agents=False, budgets=False)
    p.add_argument("--iters", type=int, default=100_000)
    p.add_argument("--solver", choices=["mccfr", "cfr"], default="mccfr")
    p.add_argument("--eps", type=float, default=0.6)
    p.add_argument("--strategy-out", help="write the strategy as key<TAB>probs lines")

    p = sub.add_parser("tournament", help="round robin with alternating seats")
    _common(p)
    p.add_argument("--matches", type=int, default=100)

    p = sub.add_parser("exploitability", help="exploitability of the seed-averaged agent strategy")
    _common(p)

    p = sub.add_parser("cfv-stability", help="instability of opponent CFV estimates over time")
    _common(p, agents=False, budgets=False)
    p.add_argument("--iters", type=int, default=1_000_000)
    p.add_argument("--checkpoints", default="1000,10000,100000")
    p.add_argument("--eps", type=float, default=0.6)

    p = sub.add_parser("cfv-averaging", help="arithmetic vs weighted CFV estimates at the root")
    _common(p, agents=False, budgets=False)
    p.add_argument("--iters", type=int, default=1_000_000)
    p.add_argument("--checkpoints", default="1000,10000,100000")
    p.add_argument("--eps", type=float, default=0.6)

    p = sub.add_parser("explore-sweep", help="MCCR exploitability across exploration rates")
    _common(p, agents=False)
    p.add_argument("--mode", choices=["keep", "reset"], default="reset")
    p.add_argument("--eps", default="0.2,0.4,0.6,0.8")

    p = sub.add_parser("play", help="play against an agent on the terminal")
    _common(p)
    p.add_argument("--seat", type=int, choices=[0, 1], default=0, help="your seat")
    return ap


def _ints(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def _emit(args, rows: list[dict], meta: dict) -> None:
    if args.out:
        write_csv(args.out, rows, meta)
    for r in rows:
        print("  ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))


def _run(args) -> int:
    game = make_game(args.game)
    seeds = parse_seeds(args.seeds)
    meta = {"command": args.command, "config": {k: v for k, v in vars(args).items()},
            "seeds": seeds, "game": game.name}
    cmd = args.command
    if hasattr(args, "preplay_ms"):
        preplay = _budget(args.preplay_ms, args.preplay_iters, "pre-play budget") \
            if args.preplay_ms is not None or args.preplay_iters is not None else Budget(iterations=0)
        move = _budget(args.move_ms, args.move_iters, "per-move budget")
        meta["preplay"], meta["move"] = str(preplay), str(move)
    if hasattr(args, "agent"):
        for spec in args.agent:
            make_agent(spec)  # validate early
    if cmd == "solve":
        from .evaluation import exploitability
        from .solver import CFRSolver, FastOutcomeSampling, SamplingScheme

        rows = []
        for seed in seeds:
            t0 = time.perf_counter()
            if args.solver == "cfr":
                s = CFRSolver(game).run(args.iters)
            else:
                s = FastOutcomeSampling(game, SamplingScheme(args.eps), seed).run(args.iters)
            flat = s.average_array()
            rows.append({"seed": seed, "iterations": args.iters,
                         "exploitability": exploitability(s.tree, flat),
                         "seconds": time.perf_counter() - t0})
            if args.strategy_out:
                s.tree.to_strategy(flat).save(args.strategy_out)
        _emit(args, rows, meta)
    elif cmd == "tournament":
        if len(args.agent) < 2:
            raise ConfigError("tournament needs at least two --agent options")
        records: list = []
        res = run_tournament(game, args.agent, args.matches, preplay, move, seed=seeds[0],
                             records=records)
        rows = [{"agent": r.agent, "opponent": r.opponent, "matches": r.matches,
                 "mean": r.mean, "ci_low": r.interval[0], "ci_high": r.interval[1],
                 "wins": r.wins, "losses": r.losses, "aborted": r.aborted} for r in res]
        meta["agents"] = {spec: make_agent(spec).config() for spec in args.agent}
        _emit(args, rows, meta)
        if args.out:
            from pathlib import Path

            mpath = Path(args.out).with_suffix(".matches.csv")
            write_csv(mpath, [{"seat0": r.agents[0], "seat1": r.agents[1],
                               "seed0": r.seeds[0], "seed1": r.seeds[1],
                               "actions": ".".join(map(str, r.actions)), "utility": r.utility,
                               "max_move_seconds": max(r.move_seconds, default=0.0)}
                              for r in records], meta)
    elif cmd == "exploitability":
        if not args.agent:
            raise ConfigError("exploitability needs an --agent")
        rows = []
        for spec in args.agent:
            r = expected_strategy_exploitability(game, spec, preplay, move, seeds)
            rows.append({"agent": spec, **r})
        _emit(args, rows, meta)
    elif cmd == "cfv-stability":
        rows = cfv_stability_experiment(game, args.iters, _ints(args.checkpoints), seeds,
                                        epsilon=args.eps)
        _emit(args, rows, meta)
    elif cmd == "cfv-averaging":
        rows = cfv_averaging_comparison(game, args.iters, _ints(args.checkpoints), seeds,
                                        epsilon=args.eps)
        _emit(args, rows, meta)
    elif cmd == "explore-sweep":
        rows = explore_sweep(game, args.mode, _floats(args.eps), preplay, move, seeds)
        _emit(args, rows, meta)
    elif cmd == "play":
        if len(args.agent) != 1:
            raise ConfigError("play needs exactly one --agent")
        rec = interactive_match(game, args.seat, args.agent[0], preplay, move, seed=seeds[0])
        if rec is None:
            return EXIT_RUNTIME
        if args.out:
            write_csv(args.out, [{"actions": ".".join(map(str, rec.actions)),
                                  "utility": rec.utility}], meta)
    return EXIT_OK


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, GameSpecError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (MatchDesync, TreeTooLarge, RuntimeError, FloatingPointError) as e:
        print(f"aborted: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
