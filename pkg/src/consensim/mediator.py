"""The mediator: pair selection and compromise-point construction.

Pair selection scores each coalition by its normalised distance to the
size-weighted centroid of all coalition points, ``exp(alpha * d')``, with
``alpha`` in [-1, 1] steering preference toward central (negative) or
peripheral (positive) coalitions.  One coalition is drawn from the induced
distribution and paired with its nearest neighbour.

The compromise for the chosen pair is the size-weighted average of the two
coalition points in the Euclidean space; in the embedding space the point
comes from an LLM-generated candidate sentence (five strategies).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .engine import Coalition, CoalitionStructure
from .spaces import (
    EmbedVec,
    Point,
    Point2D,
    SpaceKind,
    dist,
    geometric_median,
    normalize_distances,
    weighted_mean,
)

if TYPE_CHECKING:
    from .text.providers import TextProviders

PROB_SUM_TOL = 1e-12
DEFAULT_CANDIDATE_COUNT = 10


@dataclass(frozen=True)
class MediatorProposal:
    i: int
    j: int
    point: Point

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("proposal must name two distinct coalitions")


@dataclass(frozen=True)
class MediatorConfig:
    alpha: float = 0.0
    text_option: Optional[int] = None
    candidate_count: int = DEFAULT_CANDIDATE_COUNT
    topic: str = "global warming"

    def __post_init__(self):
        if not (-1.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [-1, 1]")
        if self.text_option is not None and self.text_option not in (1, 2, 3, 4, 5):
            raise ValueError("text_option must be one of 1..5")
        if self.candidate_count < 1:
            raise ValueError("candidate_count must be >= 1")


def structure_centroid(structure: CoalitionStructure, space: SpaceKind) -> Point:
    """Size-weighted centroid of the coalition points.

    Euclid2D minimises the weighted sum of distances (geometric median); the
    embedding space uses the sizes-weighted mean of the vectors as its
    centroid surrogate.
    """
    weighted = [(c.point, float(c.size)) for c in structure.coalitions]
    if space.is_euclid:
        return geometric_median(weighted)
    return weighted_mean(weighted)


def selection_probabilities(
    structure: CoalitionStructure, space: SpaceKind, alpha: float
) -> list[float]:
    """Per-coalition selection probabilities from the centroid scoring rule."""
    if len(structure) == 0:
        raise ValueError("empty coalition structure")
    centroid = structure_centroid(structure, space)
    raw = [dist(space, c.point, centroid) for c in structure.coalitions]
    normed = normalize_distances(raw)
    scores = [math.exp(alpha * d) for d in normed]
    total = sum(scores)
    probs = [s / total for s in scores]
    assert abs(sum(probs) - 1.0) <= PROB_SUM_TOL
    return probs


def select_pair(
    structure: CoalitionStructure,
    space: SpaceKind,
    alpha: float,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Draw coalition ``i`` from the score distribution, then pick ``j`` as
    its nearest other coalition (ties to the lowest index)."""
    z = len(structure)
    if z < 2:
        raise ValueError("pair selection needs at least 2 coalitions")
    probs = selection_probabilities(structure, space, alpha)
    u = rng.random()
    acc = 0.0
    i = z - 1
    for idx, p in enumerate(probs):
        acc += p
        if u < acc:
            i = idx
            break
    j = _nearest_to(structure, space, i)
    return i, j


def _nearest_to(structure: CoalitionStructure, space: SpaceKind, i: int) -> int:
    best_j = -1
    best_d = math.inf
    for k, c in enumerate(structure.coalitions):
        if k == i:
            continue
        d = dist(space, c.point, structure[i].point)
        if d < best_d:
            best_d = d
            best_j = k
    return best_j


def compromise_euclid(c_i: Coalition, c_j: Coalition) -> Point2D:
    """Size-weighted average of the two coalition points."""
    total = c_i.size + c_j.size
    pi, pj = c_i.point, c_j.point
    return Point2D(
        (c_i.size * pi.x + c_j.size * pj.x) / total,
        (c_i.size * pi.y + c_j.size * pj.y) / total,
    )


def compromise_text(
    c_i: Coalition,
    c_j: Coalition,
    providers: "TextProviders",
    option: int,
    candidate_count: int = DEFAULT_CANDIDATE_COUNT,
    topic: str = "global warming",
) -> tuple[str, EmbedVec]:
    """Produce a compromise sentence and its embedding for two coalitions.

    Options 1-3 request ``candidate_count`` aggregation sentences and keep
    the one whose embedding minimises the sqrt-cosine distance to the
    size-weighted average of the two coalition vectors (first index wins
    ties).  Option 4 requests a single aggregation sentence and returns it
    unconditionally; option 5 asks for a completely random sentence.
    """
    from .text.operations import (
        embed_sentence,
        generate_candidates,
        generate_random_sentence,
        generate_single_aggregate,
    )

    s1 = c_i.point.source_text
    s2 = c_j.point.source_text
    if option in (1, 2, 3):
        if not s1 or not s2:
            raise ValueError("both coalition points need source sentences")
        candidates = generate_candidates(s1, s2, option, candidate_count, providers.llm, topic=topic)
        target = weighted_mean([(c_i.point, float(c_i.size)), (c_j.point, float(c_j.size))])
        space = SpaceKind.embedding(providers.embedder.dim)
        best_sentence = None
        best_vec = None
        best_d = math.inf
        for sentence in candidates:
            vec = embed_sentence(sentence, providers.embedder)
            d = dist(space, vec, target)
            if d < best_d:
                best_d = d
                best_sentence = sentence
                best_vec = vec
        return best_sentence, best_vec
    if option == 4:
        if not s1 or not s2:
            raise ValueError("both coalition points need source sentences")
        sentence = generate_single_aggregate(s1, s2, providers.llm, topic=topic)
    elif option == 5:
        sentence = generate_random_sentence(providers.llm)
    else:
        raise ValueError(f"unknown mediator option: {option}")
    return sentence, embed_sentence(sentence, providers.embedder)


def propose(
    structure: CoalitionStructure,
    space: SpaceKind,
    config: MediatorConfig,
    providers: Optional["TextProviders"],
    rng: np.random.Generator,
) -> MediatorProposal:
    """Select a pair and build the space-appropriate compromise point."""
    i, j = select_pair(structure, space, config.alpha, rng)
    if space.is_euclid:
        point = compromise_euclid(structure[i], structure[j])
    else:
        if providers is None:
            raise ValueError("embedding-space proposals need text providers")
        option = config.text_option
        if option is None:
            raise ValueError("embedding-space proposals need a text option")
        _, point = compromise_text(
            structure[i], structure[j], providers, option,
            config.candidate_count, config.topic,
        )
    return MediatorProposal(i, j, point)


@dataclass
class Mediator:
    """Bound mediator the engine drives: space, scoring config, providers."""

    space: SpaceKind
    config: MediatorConfig
    providers: Optional["TextProviders"] = None

    def propose(self, structure: CoalitionStructure, rng: np.random.Generator) -> MediatorProposal:
        return propose(structure, self.space, self.config, self.providers, rng)

    def enumerate_proposals(self, structure: CoalitionStructure) -> list[MediatorProposal]:
        """All proposals reachable from this structure, one per initial pick.

        Only meaningful for the Euclidean compromise, where the proposal is a
        deterministic function of the chosen pair; used by the engine to
        recognise dead states under fully deterministic voters.
        """
        if not self.space.is_euclid:
            raise ValueError("proposal enumeration requires the Euclidean space")
        out = []
        for i in range(len(structure)):
            j = _nearest_to(structure, self.space, i)
            out.append(MediatorProposal(i, j, compromise_euclid(structure[i], structure[j])))
        return out
