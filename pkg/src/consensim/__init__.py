"""consensim: mediator-guided, compromise-based coalition formation.

A deterministic, seedable simulation engine for agents with ideal points in
a metric space who iteratively merge into coalitions around mediator
proposals, plus an experiment harness for parameter sweeps in a 2D
Euclidean setting and an embedding-based textual setting with pluggable
LLM/embedding providers.
"""

from .agents import Agent, approval_probability, vote
from .config import RunConfig
from .engine import (
    Coalition,
    CoalitionStructure,
    DisciplinePolicy,
    IterationRecord,
    RunResult,
    apply_constitution,
    check_halt,
    parse_discipline,
    run_process,
    step,
)
from .mediator import (
    Mediator,
    MediatorConfig,
    MediatorProposal,
    compromise_euclid,
    compromise_text,
    propose,
    select_pair,
    selection_probabilities,
)
from .spaces import (
    EUCLID2D,
    EmbedVec,
    Point2D,
    SpaceKind,
    dist,
    geometric_median,
    normalize_distances,
    weighted_mean,
)

__version__ = "0.1.0"

__all__ = [
    "Agent",
    "Coalition",
    "CoalitionStructure",
    "DisciplinePolicy",
    "EUCLID2D",
    "EmbedVec",
    "IterationRecord",
    "Mediator",
    "MediatorConfig",
    "MediatorProposal",
    "Point2D",
    "RunConfig",
    "RunResult",
    "SpaceKind",
    "approval_probability",
    "apply_constitution",
    "check_halt",
    "compromise_euclid",
    "compromise_text",
    "dist",
    "geometric_median",
    "normalize_distances",
    "parse_discipline",
    "propose",
    "run_process",
    "select_pair",
    "selection_probabilities",
    "step",
    "vote",
    "weighted_mean",
    "__version__",
]
