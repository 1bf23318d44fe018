"""Command-line interface.

Subcommands: ``simulate`` (one Euclidean configuration), ``sweep`` (a batch
config file), ``text-run`` (embedding-space runs against a provider),
``analyze`` (ANOVA / pairwise tests over a runs.csv), and ``replay``
(re-execute a recorded text run from its transcript).

Exit codes: 0 success, 1 configuration error, 2 provider error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .config import RunConfig
from .engine import parse_discipline, run_result_to_json
from .harness.batch import (
    analyze_runs_csv,
    load_batch_file,
    http_provider_factory,
    mock_provider_factory,
    replay_run,
    run_batch,
)
from .spaces import SpaceKind
from .text.providers import DEFAULT_EMBED_DIM, ENV_EMBED_DIM, ProviderError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PROVIDER = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; config errors are exit code 1 here.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="consensim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p, text: bool):
        p.add_argument("--n", type=int, required=True, help="number of agents")
        p.add_argument("--sigma", type=float, default=0.0, help="agent altruism width (default 0)")
        p.add_argument("--alpha", type=float, default=0.0,
                       help="mediator selection bias in [-1,1] (default 0)")
        p.add_argument("--discipline", default="none",
                       help="none, unanimity, or quota:<fraction> (default none)")
        p.add_argument("--noise-init", action="store_true",
                       help="start singleton coalitions at perturbed ideal points")
        p.add_argument("--halt-quota", type=float, default=0.5,
                       help="population fraction that halts the process (default 0.5 = majority)")
        p.add_argument("--cap", type=int, default=10000,
                       help="iteration cap (default 10000)")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--reps", type=int, default=1, help="repetitions (default 1)")
        p.add_argument("--out", help="output directory for runs.csv / summary.csv")
        p.add_argument("--traces", action="store_true", help="also write runs.jsonl with full traces")
        if text:
            p.add_argument("--topic", required=True, help="topic the sentences are about")
            p.add_argument("--mediator-option", type=int, default=1, choices=[1, 2, 3, 4, 5],
                           help="sentence aggregation strategy (default 1)")
            p.add_argument("--provider", default="mock", choices=["mock", "http", "replay"],
                           help="sentence/embedding provider (default mock)")
            p.add_argument("--transcript", help="transcript file (required for --provider replay)")

    p_sim = sub.add_parser("simulate", help="run one Euclidean configuration")
    p_sim.add_argument("--space", default="euclid2d", choices=["euclid2d"],
                       help="metric space (euclid2d)")
    add_run_flags(p_sim, text=False)
    p_sim.add_argument("--gmm-peaks", type=int, default=0,
                       help="Gaussian mixture components for ideal points, 0 = uniform (default 0)")

    p_sweep = sub.add_parser("sweep", help="run a batch config file")
    p_sweep.add_argument("--config", required=True, help="batch JSON file")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--traces", action="store_true", help="also write runs.jsonl")

    p_text = sub.add_parser("text-run", help="run embedding-space simulations")
    p_text.add_argument("--space", default="embedding", choices=["embedding"],
                        help="metric space (embedding)")
    add_run_flags(p_text, text=True)

    p_an = sub.add_parser("analyze", help="ANOVA and pairwise tests over runs.csv")
    p_an.add_argument("--input", required=True, help="runs.csv to analyze")
    p_an.add_argument("--group-by", required=True, help="column defining the groups")
    p_an.add_argument("--metric", required=True, help="numeric column to compare")
    p_an.add_argument("--out", help="stats.json path (default: stats.json next to input)")

    p_rep = sub.add_parser("replay", help="re-execute a text run from its transcript")
    p_rep.add_argument("--transcript", required=True, help="transcript JSONL from a recorded run")
    p_rep.add_argument("--out", help="write the replayed run result JSON here")

    return parser


def _json_safe(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    return obj


def _print_batch(batch) -> None:
    for s in batch.summaries:
        quality = "n/a" if s.mean_quality is None else f"{s.mean_quality:.4f}"
        print(
            f"config {s.config_index}: n={s.config.n} "
            f"converged {s.converged_count}/{s.repetitions} "
            f"mean_iterations={s.mean_iterations:.2f} mean_quality={quality}"
        )
    failures = [r for r in batch.rows if r.error]
    for r in failures:
        print(f"run c{r.config_index} r{r.rep_index} failed: {r.error}", file=sys.stderr)


def _cmd_simulate(args) -> int:
    config = RunConfig(
        space=SpaceKind.euclid2d(),
        n=args.n,
        sigma=args.sigma,
        alpha=args.alpha,
        discipline=parse_discipline(args.discipline),
        noise_init=args.noise_init,
        halt_quota=args.halt_quota,
        iteration_cap=args.cap,
        seed=args.seed,
        gmm_peaks=args.gmm_peaks,
        repetitions=args.reps,
    )
    batch = run_batch([config], out_dir=args.out, traces=args.traces)
    _print_batch(batch)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    configs, doc = load_batch_file(args.config)
    factory = None
    if any(not c.space.is_euclid for c in configs):
        factory = http_provider_factory() if doc.get("provider") == "http" else mock_provider_factory()
    batch = run_batch(configs, provider_factory=factory, out_dir=args.out, traces=args.traces)
    _print_batch(batch)
    return EXIT_OK


def _cmd_text_run(args) -> int:
    import os

    if args.provider == "replay":
        if not args.transcript:
            print("--provider replay requires --transcript", file=sys.stderr)
            return EXIT_CONFIG
        return _cmd_replay(args)
    dim = int(os.environ.get(ENV_EMBED_DIM, DEFAULT_EMBED_DIM))
    config = RunConfig(
        space=SpaceKind.embedding(dim),
        n=args.n,
        sigma=args.sigma,
        alpha=args.alpha,
        discipline=parse_discipline(args.discipline),
        noise_init=args.noise_init,
        halt_quota=args.halt_quota,
        iteration_cap=args.cap,
        seed=args.seed,
        topic=args.topic,
        mediator_option=args.mediator_option,
        repetitions=args.reps,
    )
    factory = http_provider_factory() if args.provider == "http" else mock_provider_factory(dim)
    batch = run_batch([config], provider_factory=factory, out_dir=args.out, traces=args.traces)
    _print_batch(batch)
    if any(r.error for r in batch.rows):
        return EXIT_PROVIDER
    return EXIT_OK


def _cmd_analyze(args) -> int:
    stats = analyze_runs_csv(args.input, args.group_by, args.metric)
    out = Path(args.out) if args.out else Path(args.input).parent / "stats.json"
    out.write_text(json.dumps(_json_safe(stats), indent=2) + "\n", encoding="utf-8")
    print(f"anova F={stats['anova']['F']:.6g} p={stats['anova']['p']:.6g} -> {out}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    config, run_seed, result = replay_run(args.transcript)
    doc = {
        "config": config.describe(),
        "run_seed": run_seed,
        "result": run_result_to_json(result),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")
    print(
        f"replayed run: converged={result.converged} "
        f"iterations={result.iterations} quality={result.quality}"
    )
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "text-run": _cmd_text_run,
    "analyze": _cmd_analyze,
    "replay": _cmd_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
