"""Command-line harness: ingest, evaluate, select, train.

Exit codes: 0 success, 1 usage (malformed invocation), 2 data error
(unreadable or inconsistent inputs, out-of-range values), 3 numeric
failure (non-finite results). All randomness funnels through --rng-seed;
reruns with identical flags produce byte-identical stdout and artifact
files regardless of --threads. Timing goes to stderr so primary outputs
stay reproducible.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    load_checkpoint,
    save_checkpoint,
    select_seeds_by_policy,
    train,
)
from .influence_oracle import DEFAULT_EVAL_REPS, estimate_with_stats
from .seed_selectors import degree_top_k, greedy_lazy, random_k
from .social_sis import (
    MONTH_SECONDS,
    DiffusionParams,
    fraction_active_activations,
    run_diffusion,
    window_activity,
)
from .temporal_graph import EdgeListError, TemporalGraph, parse_edge_list
from .tgn import EmbeddingConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this harness reserves 2 for
    # data errors and reports usage problems as 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_duration(text: str) -> int:
    """Seconds as a plain integer or with a month suffix: '1mo' = 2,592,000."""
    text = text.strip()
    if text.endswith("mo"):
        head = text[:-2]
        try:
            months = float(head)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None
        return int(round(months * MONTH_SECONDS))
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}") from None


def _parse_seed_list(text: str) -> list[int]:
    if not text.strip():
        return []
    try:
        return [int(tok) for tok in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None


def _load_graph(path: str) -> TemporalGraph:
    p = Path(path)
    if not p.exists():
        raise CliError(EXIT_DATA, f"graph file not found: {path}")
    if p.suffix == ".npz":
        return TemporalGraph.load_cache(p)
    with open(p) as fh:
        return parse_edge_list(fh)


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2) + "\n")


def _require_finite(values: dict) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise CliError(EXIT_NUMERIC, f"non-finite result: {name} = {v}")


# ---- ingest ----------------------------------------------------------


def cmd_ingest(args) -> int:
    in_path = Path(args.input)
    if not in_path.exists():
        raise CliError(EXIT_DATA, f"input file not found: {args.input}")
    with open(in_path) as fh:
        g = parse_edge_list(
            fh,
            has_weight_column=args.weight_column,
            drop_loops=args.drop_loops,
            dedup=args.dedup,
            t_start=args.t_start,
            t_end=args.t_end,
        )
    if g.n_edges == 0:
        raise CliError(EXIT_DATA, "no edges in input")
    g.save_cache(args.output)
    _print_json(
        {
            "n_nodes": g.n_nodes,
            "n_edges": g.n_edges,
            "density": round(g.n_edges / g.n_nodes, 4),
            "duration_seconds": int(g.t_end - g.t_start),
            "t_start": int(g.t_start),
            "t_end": int(g.t_end),
            "cache": args.output,
            "params": {
                "input": args.input,
                "weight_column": args.weight_column,
                "drop_loops": args.drop_loops,
                "dedup": args.dedup,
                "t_start": args.t_start,
                "t_end": args.t_end,
            },
        }
    )
    return EXIT_OK


# ---- evaluate --------------------------------------------------------


def cmd_evaluate(args) -> int:
    g = _load_graph(args.graph)
    try:
        seeds = g.from_original(args.seeds)
    except KeyError as e:
        raise CliError(EXIT_DATA, str(e)) from None
    if args.windows is not None and args.windows_out is None:
        raise CliError(EXIT_USAGE, "--windows requires --windows-out")
    p = DiffusionParams(mu=args.mu, t_act=args.t_act, rng_seed=args.rng_seed)
    est, stats = estimate_with_stats(g, seeds, p, reps=args.reps,
                                     n_threads=args.threads)
    frac = fraction_active_activations(stats)
    _require_finite({"mean": est.mean, "std_dev": est.std_dev,
                     "fraction_active_activations": frac})

    if args.windows is not None:
        log, _ = run_diffusion(g, seeds, p, rep=0)
        counts = window_activity(log, args.windows, g.t_start, g.t_end)
        span = g.t_end - g.t_start
        with open(args.windows_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["window", "start", "end", "active_nodes"])
            for w, count in enumerate(counts):
                lo = g.t_start + span * w / args.windows
                hi = g.t_start + span * (w + 1) / args.windows
                writer.writerow([w, repr(float(lo)), repr(float(hi)), int(count)])

    _print_json(
        {
            "mean_seconds": est.mean,
            "std_dev": est.std_dev,
            "std_error": est.std_error,
            "replications": est.replications,
            "fraction_active_activations": frac,
            "stats": {
                "attempts": stats.attempts,
                "successes": stats.successes,
                "successes_on_active": stats.successes_on_active,
            },
            "params": {
                "graph": args.graph,
                "seeds": args.seeds,
                "mu": args.mu,
                "t_act": args.t_act,
                "reps": args.reps,
                "rng_seed": args.rng_seed,
                "windows": args.windows,
            },
        }
    )
    return EXIT_OK


# ---- select ----------------------------------------------------------


def cmd_select(args) -> int:
    g = _load_graph(args.graph)
    p = DiffusionParams(mu=args.mu, t_act=args.t_act, rng_seed=args.rng_seed)
    started = time.perf_counter()
    if args.algorithm == "degree":
        picked = degree_top_k(g, args.k)
    elif args.algorithm == "random":
        picked = random_k(g, args.k, args.rng_seed)
    elif args.algorithm == "greedy":
        picked = greedy_lazy(g, args.k, p, reps=args.reps, n_threads=args.threads)
    else:  # dnimrl
        if args.checkpoint is None:
            raise CliError(EXIT_USAGE, "dnimrl needs --checkpoint")
        ckpt = Path(args.checkpoint)
        if not ckpt.exists():
            raise CliError(EXIT_DATA, f"checkpoint not found: {args.checkpoint}")
        ps, meta = load_checkpoint(ckpt)
        agent_cfg = AgentConfig(**meta.get("agent", {"k": args.k}))
        emb_cfg = EmbeddingConfig(**meta.get("embedding", {}))
        picked = select_seeds_by_policy(g, ps, args.k, agent_cfg, emb_cfg)
    seconds = time.perf_counter() - started
    sys.stderr.write(f"{args.algorithm},{args.k},{seconds:.3f}\n")

    _print_json(
        {
            "algorithm": args.algorithm,
            "k": args.k,
            "seeds": g.to_original(picked),
            "params": {
                "graph": args.graph,
                "mu": args.mu,
                "t_act": args.t_act,
                "reps": args.reps,
                "rng_seed": args.rng_seed,
                "checkpoint": args.checkpoint,
            },
        }
    )
    return EXIT_OK


# ---- train -----------------------------------------------------------


def _build_section(section: str, cls, payload: dict, overrides: dict):
    valid = {f.name for f in fields(cls)}
    for key in payload:
        if key not in valid:
            raise CliError(EXIT_DATA, f"invalid config key: {section}.{key}")
    merged = dict(payload)
    merged.update(overrides)
    try:
        return cls(**merged)
    except (TypeError, ValueError) as e:
        raise CliError(EXIT_DATA, f"bad {section} config: {e}") from None


def cmd_train(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        raise CliError(EXIT_DATA, f"config file not found: {args.config}")
    try:
        raw = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as e:
        raise CliError(EXIT_DATA, f"config is not valid JSON: {e}") from None
    known_sections = {"graph", "agent", "embedding", "diffusion"}
    for key in raw:
        if key not in known_sections:
            raise CliError(EXIT_DATA, f"invalid config key: {key}")

    graph_path = args.graph or raw.get("graph")
    if not graph_path:
        raise CliError(EXIT_USAGE, "config needs a 'graph' entry or --graph")
    g = _load_graph(graph_path)

    diffusion_raw = dict(raw.get("diffusion", {}))
    if isinstance(diffusion_raw.get("t_act"), str):
        try:
            diffusion_raw["t_act"] = parse_duration(diffusion_raw["t_act"])
        except argparse.ArgumentTypeError as e:
            raise CliError(EXIT_DATA, str(e)) from None
    agent_overrides = {"n_threads": args.threads}
    if args.rng_seed is not None:
        agent_overrides["rng_seed"] = args.rng_seed
    agent_cfg = _build_section("agent", AgentConfig, raw.get("agent", {}),
                               agent_overrides)
    emb_cfg = _build_section("embedding", EmbeddingConfig,
                             raw.get("embedding", {}), {})
    p = _build_section("diffusion", DiffusionParams, diffusion_raw, {})

    result = train(g, p, agent_cfg, emb_cfg)
    for name, t in result.params.items():
        if not np.all(np.isfinite(t.data)):
            raise CliError(EXIT_NUMERIC, f"non-finite parameter after training: {name}")

    meta = {
        "agent": asdict(agent_cfg),
        "embedding": asdict(emb_cfg),
        "diffusion": {"mu": p.mu, "t_act": p.t_act, "rng_seed": p.rng_seed},
        "graph": str(graph_path),
    }
    save_checkpoint(args.checkpoint, result.params, meta)
    with open(args.log, "w", newline="") as fh:
        result.log_to_csv(fh)

    echo = dict(meta)
    echo["checkpoint"] = args.checkpoint
    echo["log"] = args.log
    echo["episodes_run"] = len(result.log)
    _print_json(echo)
    return EXIT_OK


# ---- parser ----------------------------------------------------------


def _add_common(sub, threads=True):
    sub.add_argument("--rng-seed", type=int, default=0,
                     help="single seed all randomness derives from")
    if threads:
        sub.add_argument("--threads", type=int, default=1,
                         help="worker threads for Monte Carlo replications")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dnim",
                     description="Dynamic influence maximization toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    ingest = subs.add_parser("ingest", help="parse an edge list into a cache")
    ingest.add_argument("input")
    ingest.add_argument("-o", "--output", required=True,
                        help="cache file to write (.npz)")
    ingest.add_argument("--weight-column", action="store_true",
                        help="input rows are src,dst,weight,timestamp")
    ingest.add_argument("--drop-loops", action="store_true")
    ingest.add_argument("--dedup", action="store_true")
    ingest.add_argument("--t-start", type=int, default=None)
    ingest.add_argument("--t-end", type=int, default=None)
    ingest.set_defaults(func=cmd_ingest)

    ev = subs.add_parser("evaluate", help="Monte Carlo influence of a seed set")
    ev.add_argument("graph", help="cache (.npz) or raw edge list")
    ev.add_argument("--seeds", type=_parse_seed_list, required=True,
                    help="comma-separated original node ids")
    ev.add_argument("--mu", type=float, default=0.5)
    ev.add_argument("--t-act", type=parse_duration, default=MONTH_SECONDS,
                    help="activation duration in seconds, or e.g. '1mo'")
    ev.add_argument("--reps", type=int, default=DEFAULT_EVAL_REPS)
    ev.add_argument("--windows", type=int, default=None,
                    help="emit per-window distinct-active counts")
    ev.add_argument("--windows-out", default=None)
    _add_common(ev)
    ev.set_defaults(func=cmd_evaluate)

    sel = subs.add_parser("select", help="choose a seed set")
    sel.add_argument("graph")
    sel.add_argument("--algorithm", required=True,
                     choices=["greedy", "degree", "random", "dnimrl"])
    sel.add_argument("-k", type=int, required=True)
    sel.add_argument("--mu", type=float, default=0.5)
    sel.add_argument("--t-act", type=parse_duration, default=MONTH_SECONDS)
    sel.add_argument("--reps", type=int, default=100,
                     help="replications per greedy gain estimate")
    sel.add_argument("--checkpoint", default=None,
                     help="trained model for dnimrl")
    _add_common(sel)
    sel.set_defaults(func=cmd_select)

    tr = subs.add_parser("train", help="train the RL seed selector")
    tr.add_argument("config", help="JSON with graph/agent/embedding/diffusion")
    tr.add_argument("--graph", default=None, help="override the config graph path")
    tr.add_argument("--checkpoint", default="checkpoint.npz")
    tr.add_argument("--log", default="train_log.csv")
    tr.add_argument("--rng-seed", type=int, default=None,
                    help="overrides agent.rng_seed from the config")
    tr.add_argument("--threads", type=int, default=1)
    tr.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except CliError as e:
        sys.stderr.write(f"dnim: {e}\n")
        return e.code
    except EdgeListError as e:
        sys.stderr.write(f"dnim: parse error: {e}\n")
        return EXIT_DATA
    except (ValueError, KeyError, IndexError) as e:
        sys.stderr.write(f"dnim: data error: {e}\n")
        return EXIT_DATA
    except OSError as e:
        sys.stderr.write(f"dnim: i/o error: {e}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
