"""Batch execution over parameter grids, metrics, and persistence.

Every repetition of every configuration is an independent instance: its
seed is derived from (master seed, config index, repetition index), its
scenario is sampled from that stream, and the process runs on the same
stream.  Results land in ``runs.csv`` (one row per run), ``summary.csv``
(one row per configuration), and optionally ``runs.jsonl`` with full
traces.  Output files are byte-stable for a fixed master seed.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from ..agents import Agent
from ..config import RunConfig, config_from_dict
from ..engine import RunResult, run_process, run_result_to_json
from ..mediator import Mediator, MediatorConfig
from ..spaces import Point, SpaceKind
from ..text.operations import embed_sentence, generate_ideal_sentences, generate_resembling
from ..text.providers import (
    DEFAULT_EMBED_DIM,
    ENV_EMBED_DIM,
    BagOfWordsEmbedder,
    CachingEmbedder,
    HttpEmbedder,
    HttpLlm,
    MockLlm,
    ReplayEmbedder,
    ReplayLlm,
    TextProviders,
    TranscriptLoggingEmbedder,
    TranscriptLoggingLlm,
    TranscriptWriter,
    read_transcript,
)
from .sampling import (
    derive_seed,
    perturb_init,
    sample_gmm_spec,
    sample_ideal_points,
    sample_status_quo,
)
from .stats import PAIRWISE_METHOD_NOTE, anova_oneway, pairwise_compare

ProviderFactory = Callable[[RunConfig, int], TextProviders]


@dataclass
class Scenario:
    agents: list[Agent]
    status_quo: Point
    init_points: Optional[list[Point]]


def build_euclid_scenario(config: RunConfig, rng: np.random.Generator) -> Scenario:
    """Sample one Euclidean instance.

    Draw order (fixed for reproducibility): mixture parameters, status quo,
    ideal points, then the noisy singleton starts when enabled.
    """
    gmm = sample_gmm_spec(config.gmm_peaks, rng)
    status_quo = sample_status_quo(rng)
    ideals = sample_ideal_points(config.n, gmm, rng)
    agents = [Agent(i, p, config.sigma) for i, p in enumerate(ideals)]
    init_points = None
    if config.noise_init:
        init_points = [perturb_init(p, rng) for p in ideals]
    return Scenario(agents, status_quo, init_points)


def build_text_scenario(config: RunConfig, providers: TextProviders) -> Scenario:
    """Generate one text instance through the providers.

    Call order (fixed so transcripts replay): one status-quo sentence on the
    topic, the n ideal sentences, then — with noisy initialization — one
    resembling sentence per agent.  All sentences are embedded as they
    arrive.
    """
    sq_sentence = generate_ideal_sentences(config.topic, 1, providers.llm)[0]
    status_quo = embed_sentence(sq_sentence, providers.embedder)
    sentences = generate_ideal_sentences(config.topic, config.n, providers.llm)
    ideals = [embed_sentence(s, providers.embedder) for s in sentences]
    agents = [Agent(i, v, config.sigma) for i, v in enumerate(ideals)]
    init_points = None
    if config.noise_init:
        init_points = [
            embed_sentence(generate_resembling(s, providers.llm), providers.embedder)
            for s in sentences
        ]
    return Scenario(agents, status_quo, init_points)


def make_mediator(config: RunConfig, providers: Optional[TextProviders]) -> Mediator:
    mconfig = MediatorConfig(
        alpha=config.alpha,
        text_option=config.mediator_option,
        topic=config.topic or "global warming",
    )
    return Mediator(config.space, mconfig, providers)


# --- provider factories -----------------------------------------------------

def mock_provider_factory(dim: Optional[int] = None) -> ProviderFactory:
    """Deterministic offline providers: mock LLM seeded per run, shared
    bag-of-words embedding space per batch."""
    resolved = dim or int(os.environ.get(ENV_EMBED_DIM, DEFAULT_EMBED_DIM))

    def factory(config: RunConfig, run_seed: int) -> TextProviders:
        return TextProviders(
            llm=MockLlm(seed=run_seed),
            embedder=BagOfWordsEmbedder(dim=resolved, seed=config.seed),
        )

    return factory


def http_provider_factory() -> ProviderFactory:
    llm = HttpLlm.from_env()
    embedder = HttpEmbedder.from_env()

    def factory(config: RunConfig, run_seed: int) -> TextProviders:
        return TextProviders(llm=llm, embedder=embedder)

    return factory


def replay_provider_factory(records: list[dict], dim: int) -> ProviderFactory:
    def factory(config: RunConfig, run_seed: int) -> TextProviders:
        return TextProviders(llm=ReplayLlm(records), embedder=ReplayEmbedder(records, dim))

    return factory


# --- single-run execution -----------------------------------------------------

def run_single(
    config: RunConfig,
    config_index: int = 0,
    rep_index: int = 0,
    provider_factory: Optional[ProviderFactory] = None,
    transcript_dir=None,
    record_trace: bool = False,
    record_votes: bool = False,
) -> tuple[int, RunResult]:
    """Execute one repetition; returns (run seed, result)."""
    run_seed = derive_seed(config.seed, config_index, rep_index)
    rng = np.random.default_rng(run_seed)

    providers = None
    writer = None
    try:
        if config.space.is_euclid:
            scenario = build_euclid_scenario(config, rng)
        else:
            if provider_factory is None:
                provider_factory = mock_provider_factory(config.space.dim)
            providers = provider_factory(config, run_seed)
            if transcript_dir is not None:
                path = Path(transcript_dir) / f"run_c{config_index:03d}_r{rep_index:03d}.jsonl"
                writer = TranscriptWriter(path)
                writer.write({
                    "kind": "header",
                    "config": {**config.describe(), "embed_dim": config.space.dim},
                    "config_index": config_index,
                    "rep_index": rep_index,
                    "run_seed": run_seed,
                })
                providers = TextProviders(
                    llm=TranscriptLoggingLlm(providers.llm, writer),
                    embedder=TranscriptLoggingEmbedder(providers.embedder, writer),
                )
            providers = TextProviders(
                llm=providers.llm,
                embedder=CachingEmbedder(providers.embedder),
            )
            scenario = build_text_scenario(config, providers)

        mediator = make_mediator(config, providers)
        result = run_process(
            config,
            mediator,
            scenario.agents,
            rng,
            status_quo=scenario.status_quo,
            init_points=scenario.init_points,
            record_trace=record_trace,
            record_votes=record_votes,
        )
        return run_seed, result
    finally:
        if writer is not None:
            writer.close()


def replay_run(transcript_path) -> tuple[RunConfig, int, RunResult]:
    """Re-execute a recorded text run; returns (config, run seed, result)."""
    header, records = read_transcript(transcript_path)
    if header is None:
        raise ValueError(f"transcript has no header record: {transcript_path}")
    config = config_from_dict(header["config"])
    run_seed = int(header["run_seed"])
    dim = int(header["config"].get("embed_dim", DEFAULT_EMBED_DIM))
    providers = TextProviders(
        llm=ReplayLlm(records),
        embedder=CachingEmbedder(ReplayEmbedder(records, dim)),
    )
    rng = np.random.default_rng(run_seed)
    scenario = build_text_scenario(config, providers)
    mediator = make_mediator(config, providers)
    result = run_process(
        config,
        mediator,
        scenario.agents,
        rng,
        status_quo=scenario.status_quo,
        init_points=scenario.init_points,
        record_trace=True,
        record_votes=True,
    )
    return config, run_seed, result


# --- batch execution ----------------------------------------------------------

@dataclass
class BatchSummary:
    """Per-configuration aggregate over its repetitions."""

    config_index: int
    config: RunConfig
    repetitions: int
    converged_count: int
    convergence_rate: float
    mean_iterations: float
    std_iterations: Optional[float]
    mean_iterations_converged: Optional[float]
    mean_quality: Optional[float]
    std_quality: Optional[float]


@dataclass
class RunRow:
    config_index: int
    rep_index: int
    config: RunConfig
    run_seed: int
    result: Optional[RunResult]
    error: Optional[str] = None


@dataclass
class BatchResult:
    rows: list[RunRow]
    summaries: list[BatchSummary]


def _std(values: Sequence[float]) -> Optional[float]:
    if len(values) < 2:
        return None
    return float(np.std(values, ddof=1))


def summarize(config_index: int, config: RunConfig, rows: Sequence[RunRow]) -> BatchSummary:
    """Fold one configuration's runs into the summary row.

    Iteration means count non-converged runs at the cap; the quality mean
    uses converged runs only.  Both conventions stay recomputable from the
    per-run rows.
    """
    ok = [r for r in rows if r.result is not None]
    iters = [float(r.result.iterations) for r in ok]
    conv = [r for r in ok if r.result.converged]
    conv_iters = [float(r.result.iterations) for r in conv]
    qualities = [float(r.result.quality) for r in conv if r.result.quality is not None]
    return BatchSummary(
        config_index=config_index,
        config=config,
        repetitions=len(rows),
        converged_count=len(conv),
        convergence_rate=len(conv) / len(ok) if ok else 0.0,
        mean_iterations=float(np.mean(iters)) if iters else 0.0,
        std_iterations=_std(iters),
        mean_iterations_converged=float(np.mean(conv_iters)) if conv_iters else None,
        mean_quality=float(np.mean(qualities)) if qualities else None,
        std_quality=_std(qualities),
    )


def run_batch(
    configs: Sequence[RunConfig],
    provider_factory: Optional[ProviderFactory] = None,
    out_dir=None,
    workers: int = 1,
    traces: bool = False,
) -> BatchResult:
    """Run every repetition of every configuration.

    Repetitions may execute in a bounded thread pool; rows are collected in
    (config index, repetition index) order regardless of completion order,
    so output files do not depend on scheduling.  Individual run failures
    are recorded and do not stop the batch.
    """
    transcript_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if any(not c.space.is_euclid for c in configs):
            transcript_dir = out_dir / "transcripts"
            transcript_dir.mkdir(exist_ok=True)

    tasks = [
        (ci, config, rep)
        for ci, config in enumerate(configs)
        for rep in range(config.repetitions)
    ]

    def execute(task) -> RunRow:
        ci, config, rep = task
        try:
            run_seed, result = run_single(
                config, ci, rep,
                provider_factory=provider_factory,
                transcript_dir=transcript_dir,
                record_trace=traces,
            )
            return RunRow(ci, rep, config, run_seed, result)
        except Exception as exc:  # record the failure, keep the batch going
            return RunRow(ci, rep, config, derive_seed(config.seed, ci, rep), None, error=str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(execute, t) for t in tasks]
            rows = [f.result() for f in futures]
    else:
        rows = [execute(t) for t in tasks]

    summaries = []
    for ci, config in enumerate(configs):
        config_rows = [r for r in rows if r.config_index == ci]
        summaries.append(summarize(ci, config, config_rows))

    batch = BatchResult(rows=rows, summaries=summaries)
    if out_dir is not None:
        write_runs_csv(out_dir / "runs.csv", batch)
        write_summary_csv(out_dir / "summary.csv", batch)
        if traces:
            write_runs_jsonl(out_dir / "runs.jsonl", batch)
    return batch


# --- persistence ----------------------------------------------------------------

_CONFIG_COLUMNS = [
    "space", "n", "sigma", "alpha", "discipline", "noise_init",
    "halt_quota", "cap", "gmm_peaks", "topic", "mediator_option", "seed",
]
RUNS_CSV_HEADER = (
    ["config_index", "rep"] + _CONFIG_COLUMNS
    + ["run_seed", "converged", "status", "iterations", "quality"]
)
SUMMARY_CSV_HEADER = (
    ["config_index"] + _CONFIG_COLUMNS
    + [
        "repetitions", "converged", "convergence_rate",
        "mean_iterations", "std_iterations", "mean_iterations_converged",
        "mean_quality", "std_quality",
    ]
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _config_values(config: RunConfig) -> list[str]:
    desc = config.describe()
    return [_fmt(desc[c]) for c in _CONFIG_COLUMNS]


def write_runs_csv(path, batch: BatchResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUNS_CSV_HEADER)
        for row in batch.rows:
            if row.result is None:
                tail = [row.run_seed, "false", "error", "", ""]
            else:
                tail = [
                    row.run_seed,
                    _fmt(row.result.converged),
                    row.result.status,
                    row.result.iterations,
                    _fmt(row.result.quality),
                ]
            writer.writerow([row.config_index, row.rep_index] + _config_values(row.config) + tail)


def write_summary_csv(path, batch: BatchResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_CSV_HEADER)
        for s in batch.summaries:
            writer.writerow(
                [s.config_index]
                + _config_values(s.config)
                + [
                    s.repetitions,
                    s.converged_count,
                    _fmt(s.convergence_rate),
                    _fmt(s.mean_iterations),
                    _fmt(s.std_iterations),
                    _fmt(s.mean_iterations_converged),
                    _fmt(s.mean_quality),
                    _fmt(s.std_quality),
                ]
            )


def write_runs_jsonl(path, batch: BatchResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in batch.rows:
            record = {
                "config_index": row.config_index,
                "rep": row.rep_index,
                "run_seed": row.run_seed,
                "result": None if row.result is None else run_result_to_json(row.result),
                "error": row.error,
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


# --- batch config files -------------------------------------------------------

def expand_grid(doc: dict) -> list[RunConfig]:
    """Cartesian product of the ``grid`` axes over the document's scalars.

    Axis order follows the key order in the file; every combination becomes
    one RunConfig carrying the master seed.
    """
    grid = doc.get("grid", {})
    base = {k: v for k, v in doc.items() if k not in ("grid", "master_seed", "provider")}
    base["seed"] = int(doc.get("master_seed", 0))
    axes = list(grid.items())
    configs = []
    if not axes:
        configs.append(config_from_dict(base))
        return configs
    keys = [k for k, _ in axes]
    for combo in product(*(values for _, values in axes)):
        merged = dict(base)
        merged.update(dict(zip(keys, combo)))
        configs.append(config_from_dict(merged))
    return configs


def load_batch_file(path) -> tuple[list[RunConfig], dict]:
    """Read a batch JSON document; returns (configs, raw document)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return expand_grid(doc), doc


# --- runs.csv analysis ----------------------------------------------------------

def analyze_runs_csv(path, group_by: str, metric: str, alpha_level: float = 0.05) -> dict:
    """Group a runs.csv by a column and test the metric across groups.

    Rows with an empty metric value (e.g. quality of non-converged runs)
    are skipped.  Returns the JSON-ready stats document.
    """
    groups: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or group_by not in reader.fieldnames:
            raise ValueError(f"column {group_by!r} not found in {path}")
        if metric not in reader.fieldnames:
            raise ValueError(f"column {metric!r} not found in {path}")
        for row in reader:
            raw = row[metric].strip()
            if not raw:
                continue
            groups.setdefault(row[group_by], []).append(float(raw))
    if len(groups) < 2:
        raise ValueError(f"need at least 2 groups by {group_by!r}, found {len(groups)}")
    labels = sorted(groups)
    samples = [groups[k] for k in labels]
    f_stat, p_value = anova_oneway(samples)
    pairwise = pairwise_compare(samples, alpha_level=alpha_level, labels=labels)
    return {
        "group_by": group_by,
        "metric": metric,
        "alpha_level": alpha_level,
        "groups": {
            k: {
                "count": len(groups[k]),
                "mean": float(np.mean(groups[k])),
                "std": _std(groups[k]),
            }
            for k in labels
        },
        "anova": {"F": f_stat, "p": p_value},
        "pairwise": [
            {
                "a": row["pair"][0],
                "b": row["pair"][1],
                "mean_diff": row["mean_diff"],
                "p_corrected": row["p_corrected"],
                "significant": row["significant"],
            }
            for row in pairwise
        ],
        "method_note": PAIRWISE_METHOD_NOTE,
    }
