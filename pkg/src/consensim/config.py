"""Run configuration shared by the engine, harness, and CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .engine import ITERATION_CAP, DisciplinePolicy, parse_discipline
from .spaces import EMBEDDING_TAG, EUCLID2D_TAG, SpaceKind


@dataclass(frozen=True)
class RunConfig:
    """One parameter combination for the coalition-formation process.

    Text fields (``topic``, ``mediator_option``) apply only to the embedding
    space; ``gmm_peaks`` only to the Euclidean one.  ``seed`` is the master
    seed from which the per-repetition streams are derived.
    """

    space: SpaceKind
    n: int
    sigma: float = 0.0
    alpha: float = 0.0
    discipline: DisciplinePolicy = field(default_factory=DisciplinePolicy.none)
    noise_init: bool = False
    halt_quota: float = 0.5
    iteration_cap: int = ITERATION_CAP
    seed: int = 0
    gmm_peaks: int = 0
    topic: Optional[str] = None
    mediator_option: Optional[int] = None
    repetitions: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not (-1.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [-1, 1]")
        if not (0.0 < self.halt_quota <= 1.0):
            raise ValueError("halt_quota must be in (0, 1]")
        if self.iteration_cap < 1:
            raise ValueError("iteration_cap must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.space.tag == EUCLID2D_TAG:
            if not (0 <= self.gmm_peaks <= 4):
                raise ValueError("gmm_peaks must be in [0, 4]")
            if self.topic is not None or self.mediator_option is not None:
                raise ValueError("topic/mediator_option only apply to the embedding space")
        elif self.space.tag == EMBEDDING_TAG:
            if self.gmm_peaks != 0:
                raise ValueError("gmm_peaks only applies to the Euclidean space")
            if not self.topic:
                raise ValueError("embedding-space runs need a topic")
            if self.mediator_option not in (1, 2, 3, 4, 5):
                raise ValueError("mediator_option must be one of 1..5")

    def describe(self) -> dict:
        """Flat, JSON/CSV-friendly view of the configuration."""
        return {
            "space": self.space.tag,
            "n": self.n,
            "sigma": self.sigma,
            "alpha": self.alpha,
            "discipline": self.discipline.label(),
            "noise_init": self.noise_init,
            "halt_quota": self.halt_quota,
            "cap": self.iteration_cap,
            "gmm_peaks": self.gmm_peaks,
            "topic": self.topic or "",
            "mediator_option": "" if self.mediator_option is None else self.mediator_option,
            "seed": self.seed,
            "repetitions": self.repetitions,
        }


def config_from_dict(data: dict) -> RunConfig:
    """Build a RunConfig from a flat mapping (batch files, transcripts)."""
    space_tag = data.get("space", EUCLID2D_TAG)
    if space_tag == EUCLID2D_TAG:
        space = SpaceKind.euclid2d()
    else:
        space = SpaceKind.embedding(int(data.get("embed_dim", 512)))
    discipline = data.get("discipline", "none")
    if isinstance(discipline, str):
        discipline = parse_discipline(discipline)
    topic = data.get("topic") or None
    option = data.get("mediator_option")
    option = int(option) if option not in (None, "") else None
    return RunConfig(
        space=space,
        n=int(data["n"]),
        sigma=float(data.get("sigma", 0.0)),
        alpha=float(data.get("alpha", 0.0)),
        discipline=discipline,
        noise_init=bool(data.get("noise_init", False)),
        halt_quota=float(data.get("halt_quota", 0.5)),
        iteration_cap=int(data.get("cap", ITERATION_CAP)),
        seed=int(data.get("seed", 0)),
        gmm_peaks=int(data.get("gmm_peaks", 0)),
        topic=topic,
        mediator_option=option,
        repetitions=int(data.get("repetitions", 1)),
    )
