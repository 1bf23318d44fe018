"""Coalition structures, constitutions, and the iterative process loop.

A state is a partition of the agents into coalitions, each anchored at a
coalition point.  Every iteration the mediator proposes a compromise point
to two coalitions, their members vote against the fixed status quo, the
constitution turns votes into stay/move assignments, and the structure is
updated.  The process halts as soon as one coalition holds the required
fraction of all agents, or when the iteration cap is reached.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .agents import Agent, votes_for_members
from .spaces import EmbedVec, Point, Point2D, SpaceKind, dist

if TYPE_CHECKING:
    from .config import RunConfig

ITERATION_CAP = 10_000

STATUS_CONVERGED = "converged"
STATUS_CAP = "cap_reached"
STATUS_STALLED = "stalled"


class PartitionError(ValueError):
    """A coalition structure stopped being a partition of the agents."""


@dataclass(frozen=True)
class Coalition:
    """A non-empty set of agent ids united around a coalition point."""

    members: frozenset[int]
    point: Point

    def __post_init__(self):
        if not self.members:
            raise ValueError("coalition must have at least one member")

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class CoalitionStructure:
    coalitions: list[Coalition]

    def __len__(self) -> int:
        return len(self.coalitions)

    def __getitem__(self, idx: int) -> Coalition:
        return self.coalitions[idx]

    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.coalitions)

    def total_members(self) -> int:
        return sum(c.size for c in self.coalitions)

    def validate(self, agent_ids: frozenset[int]) -> None:
        """Check the partition invariant: disjoint, complete, no empties."""
        seen: set[int] = set()
        for c in self.coalitions:
            if not c.members:
                raise PartitionError("empty coalition present")
            overlap = seen & c.members
            if overlap:
                raise PartitionError(f"agents in two coalitions: {sorted(overlap)}")
            seen |= c.members
        if seen != agent_ids:
            raise PartitionError(
                f"partition covers {len(seen)} agents, expected {len(agent_ids)}"
            )


@dataclass(frozen=True)
class DisciplinePolicy:
    """How a coalition aggregates member votes into stay/move assignments.

    ``none`` lets each approver move independently.  ``quota`` requires at
    least ``ceil(fraction * size)`` approvers before anyone moves, and
    ``unanimity`` is the quota rule with the full coalition as threshold.
    """

    kind: str  # "none" | "quota" | "unanimity"
    fraction: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("none", "quota", "unanimity"):
            raise ValueError(f"unknown discipline kind: {self.kind!r}")
        if self.kind == "quota":
            if self.fraction is None or not (0.0 < self.fraction <= 1.0):
                raise ValueError("quota fraction must be in (0, 1]")
        elif self.fraction is not None:
            raise ValueError("fraction only applies to quota discipline")

    @classmethod
    def none(cls) -> "DisciplinePolicy":
        return cls("none")

    @classmethod
    def quota(cls, fraction: float) -> "DisciplinePolicy":
        return cls("quota", fraction)

    @classmethod
    def unanimity(cls) -> "DisciplinePolicy":
        return cls("unanimity")

    def threshold(self, size: int) -> int:
        if self.kind == "none":
            return 0
        if self.kind == "quota":
            return math.ceil(self.fraction * size)
        return size

    def label(self) -> str:
        if self.kind == "quota":
            return f"quota:{self.fraction}"
        return self.kind


def parse_discipline(text: str) -> DisciplinePolicy:
    """Parse ``none``, ``unanimity``, or ``quota:<fraction>``."""
    if text == "none":
        return DisciplinePolicy.none()
    if text == "unanimity":
        return DisciplinePolicy.unanimity()
    if text.startswith("quota:"):
        return DisciplinePolicy.quota(float(text.split(":", 1)[1]))
    raise ValueError(f"unknown discipline: {text!r}")


@dataclass
class IterationRecord:
    iteration: int
    pair: tuple[int, int]
    point: Point
    sizes: tuple[int, ...]
    approvals: int
    movers: int
    votes: Optional[dict[int, int]] = None


@dataclass
class RunResult:
    converged: bool
    iterations: int
    status: str
    winning_coalition: Optional[Coalition]
    quality: Optional[float]
    trace: list[IterationRecord]
    seed: int


def apply_constitution(
    coalition: Coalition,
    proposal: Point,
    votes: dict[int, int],
    policy: DisciplinePolicy,
) -> dict[int, bool]:
    """Turn member votes into per-agent move decisions (True means move).

    Movement happens only when the approver count reaches the policy's
    threshold; then exactly the approvers move.  Below threshold everybody
    stays.
    """
    if set(votes.keys()) != coalition.members:
        raise ValueError("votes must cover exactly the coalition members")
    approvers = sum(1 for v in votes.values() if v == 1)
    if approvers >= policy.threshold(coalition.size):
        return {aid: votes[aid] == 1 for aid in votes}
    return {aid: False for aid in votes}


def step(
    structure: CoalitionStructure,
    proposal: "MediatorProposalLike",
    moves_i: dict[int, bool],
    moves_j: dict[int, bool],
) -> CoalitionStructure:
    """Apply stay/move assignments for the proposal's two coalitions.

    Stayers keep their coalition and its old point; movers from both
    coalitions form a new coalition at the proposal point, appended after
    the survivors.  Empty remainders are dropped.
    """
    i, j = proposal.i, proposal.j
    z = len(structure)
    if i == j or not (0 <= i < z) or not (0 <= j < z):
        raise ValueError(f"invalid coalition pair ({i}, {j}) for {z} coalitions")
    ci, cj = structure[i], structure[j]
    if set(moves_i) != ci.members or set(moves_j) != cj.members:
        raise ValueError("assignments must cover exactly the two coalitions")

    stay_i = frozenset(a for a, mv in moves_i.items() if not mv)
    stay_j = frozenset(a for a, mv in moves_j.items() if not mv)
    movers = frozenset(a for m in (moves_i, moves_j) for a, mv in m.items() if mv)

    new_list: list[Coalition] = []
    for idx, c in enumerate(structure.coalitions):
        if idx == i:
            if stay_i:
                new_list.append(Coalition(stay_i, ci.point))
        elif idx == j:
            if stay_j:
                new_list.append(Coalition(stay_j, cj.point))
        else:
            new_list.append(c)
    if movers:
        new_list.append(Coalition(movers, proposal.point))
    return CoalitionStructure(new_list)


def check_halt(
    structure: CoalitionStructure, n: int, quota: float = 0.5
) -> Optional[Coalition]:
    """First coalition holding the required fraction of all agents, if any.

    The test is the plain ratio ``size / n >= quota`` for every quota; the
    default 0.5 is a simple majority (half the agents suffice, so an even
    split halts).  Stricter readings leave small instances orbiting forever
    once the reachable coalition sizes top out at exactly n/2.
    """
    for c in structure.coalitions:
        if c.size / n >= quota:
            return c
    return None


class MediatorProposalLike:
    """Structural interface the engine needs: fields ``i``, ``j``, ``point``."""

    i: int
    j: int
    point: Point


@dataclass
class _AgentTable:
    """Per-run agent lookups shared by the vote loop and the deadlock probe."""

    ids: list[int]
    index: dict[int, int]
    ideals: np.ndarray
    sigmas: np.ndarray
    d_quo: np.ndarray
    embedding: bool

    @classmethod
    def build(cls, space: SpaceKind, agents: Sequence[Agent], status_quo: Point) -> "_AgentTable":
        ordered = sorted(agents, key=lambda a: a.id)
        ids = [a.id for a in ordered]
        if len(set(ids)) != len(ids):
            raise ValueError("agent ids must be unique")
        ideals = np.stack([a.ideal.as_array() for a in ordered])
        sigmas = np.array([a.sigma for a in ordered], dtype=float)
        d_quo = np.array([dist(space, a.ideal, status_quo) for a in ordered], dtype=float)
        return cls(
            ids=ids,
            index={aid: row for row, aid in enumerate(ids)},
            ideals=ideals,
            sigmas=sigmas,
            d_quo=d_quo,
            embedding=space.is_embedding,
        )

    def rows(self, member_ids: Sequence[int]) -> list[int]:
        return [self.index[m] for m in member_ids]


def _coalition_votes(
    table: _AgentTable,
    coalition: Coalition,
    point: Point,
    rng: np.random.Generator,
) -> dict[int, int]:
    """Votes of a coalition's members in ascending id order."""
    member_ids = sorted(coalition.members)
    rows = table.rows(member_ids)
    votes = votes_for_members(
        table.ideals[rows],
        table.sigmas[rows],
        table.d_quo[rows],
        point.as_array(),
        rng,
        embedding=table.embedding,
    )
    return dict(zip(member_ids, (int(v) for v in votes)))


def _deterministic_movers_exist(
    table: _AgentTable,
    structure: CoalitionStructure,
    proposals: Sequence[MediatorProposalLike],
    policy: DisciplinePolicy,
) -> bool:
    """With sigma=0 everywhere, votes depend only on distances; report whether
    any reachable proposal would move at least one agent."""
    for prop in proposals:
        for idx in (prop.i, prop.j):
            c = structure[idx]
            member_ids = sorted(c.members)
            rows = table.rows(member_ids)
            coords = prop.point.as_array()
            if table.embedding:
                norms = np.linalg.norm(table.ideals[rows], axis=1) * float(np.linalg.norm(coords))
                inner = 2.0 - 2.0 * (table.ideals[rows] @ coords) / norms
                d_prop = np.sqrt(np.clip(inner, 0.0, 4.0))
            else:
                d_prop = np.linalg.norm(table.ideals[rows] - coords, axis=1)
            approvals = int(np.sum(table.d_quo[rows] >= d_prop))
            if approvals > 0 and approvals >= policy.threshold(c.size):
                return True
    return False


def quality_of(space: SpaceKind, coalition: Coalition, agents_by_id: dict[int, Agent]) -> float:
    """Mean distance from the coalition point to its members' ideal points."""
    total = sum(dist(space, coalition.point, agents_by_id[m].ideal) for m in coalition.members)
    return total / coalition.size


def run_process(
    config: "RunConfig",
    mediator,
    agents: Sequence[Agent],
    rng: np.random.Generator,
    status_quo: Point,
    init_points: Optional[Sequence[Point]] = None,
    record_trace: bool = True,
    record_votes: bool = False,
) -> RunResult:
    """Run the full iterative process for one seeded instance.

    Agents start as singleton coalitions at their ideal points, or at the
    given ``init_points`` when noise initialization supplied them.  Each
    iteration consumes the run's random stream in a fixed order: one draw
    for the mediator's pair choice, then one per vote (coalition i before
    coalition j, ascending agent id).  The partition invariant is checked
    after every step.

    Runs where no agent can ever move again (all-deterministic voters and an
    enumerable mediator) are recognised and reported at the iteration cap
    without spinning through the remaining iterations.
    """
    space = config.space
    ordered = sorted(agents, key=lambda a: a.id)
    agent_ids = frozenset(a.id for a in ordered)
    agents_by_id = {a.id: a for a in ordered}
    n = len(ordered)
    if n != config.n:
        raise ValueError(f"config expects {config.n} agents, got {n}")

    if init_points is None:
        init_points = [a.ideal for a in ordered]
    if len(init_points) != n:
        raise ValueError("init_points must match the agent count")

    structure = CoalitionStructure(
        [Coalition(frozenset({a.id}), p) for a, p in zip(ordered, init_points)]
    )
    structure.validate(agent_ids)
    table = _AgentTable.build(space, ordered, status_quo)

    cap = config.iteration_cap
    policy = config.discipline
    trace: list[IterationRecord] = []

    def finish(converged: bool, iterations: int, status: str, winner: Optional[Coalition]) -> RunResult:
        q = quality_of(space, winner, agents_by_id) if winner is not None else None
        return RunResult(
            converged=converged,
            iterations=iterations,
            status=status,
            winning_coalition=winner,
            quality=q,
            trace=trace,
            seed=config.seed,
        )

    winner = check_halt(structure, n, config.halt_quota)
    if winner is not None:
        return finish(True, 0, STATUS_CONVERGED, winner)

    all_deterministic = bool(np.all(table.sigmas == 0.0))
    can_probe = (
        all_deterministic
        and space.is_euclid
        and hasattr(mediator, "enumerate_proposals")
    )
    probed_current = False

    for iteration in range(1, cap + 1):
        if len(structure) < 2:
            return finish(False, iteration - 1, STATUS_STALLED, None)

        prop = mediator.propose(structure, rng)
        ci, cj = structure[prop.i], structure[prop.j]
        votes_i = _coalition_votes(table, ci, prop.point, rng)
        votes_j = _coalition_votes(table, cj, prop.point, rng)
        moves_i = apply_constitution(ci, prop.point, votes_i, policy)
        moves_j = apply_constitution(cj, prop.point, votes_j, policy)
        new_structure = step(structure, prop, moves_i, moves_j)
        new_structure.validate(agent_ids)

        approvals = sum(votes_i.values()) + sum(votes_j.values())
        movers = sum(moves_i.values()) + sum(moves_j.values())
        if record_trace:
            rec = IterationRecord(
                iteration=iteration,
                pair=(prop.i, prop.j),
                point=prop.point,
                sizes=new_structure.sizes(),
                approvals=approvals,
                movers=movers,
            )
            if record_votes:
                rec.votes = {**votes_i, **votes_j}
            trace.append(rec)

        structure = new_structure
        winner = check_halt(structure, n, config.halt_quota)
        if winner is not None:
            return finish(True, iteration, STATUS_CONVERGED, winner)

        if movers > 0:
            probed_current = False
        elif can_probe and not probed_current:
            probed_current = True
            proposals = mediator.enumerate_proposals(structure)
            if not _deterministic_movers_exist(table, structure, proposals, policy):
                return finish(False, cap, STATUS_CAP, None)

    return finish(False, cap, STATUS_CAP, None)


# --- serialization -------------------------------------------------------

def point_to_json(point: Point) -> dict:
    if isinstance(point, Point2D):
        return {"kind": "point2d", "x": point.x, "y": point.y}
    if isinstance(point, EmbedVec):
        return {
            "kind": "embed",
            "vec": [float(v) for v in point.vec],
            "text": point.source_text,
        }
    raise TypeError(f"unknown point type: {type(point).__name__}")


def run_result_to_json(result: RunResult) -> dict:
    """Stable-field-order JSON document for a run."""
    winner = None
    if result.winning_coalition is not None:
        winner = {
            "members": sorted(result.winning_coalition.members),
            "point": point_to_json(result.winning_coalition.point),
        }
    return {
        "seed": result.seed,
        "converged": result.converged,
        "status": result.status,
        "iterations": result.iterations,
        "quality": result.quality,
        "winning_coalition": winner,
        "trace": [
            {
                "iteration": r.iteration,
                "pair": list(r.pair),
                "point": point_to_json(r.point),
                "sizes": list(r.sizes),
                "approvals": r.approvals,
                "movers": r.movers,
                "votes": None if r.votes is None else {str(k): v for k, v in sorted(r.votes.items())},
            }
            for r in result.trace
        ],
    }


def run_result_json_bytes(result: RunResult) -> bytes:
    return json.dumps(run_result_to_json(result), separators=(",", ":")).encode()


TRACE_CSV_HEADER = ["run_id", "iteration", "coalition_count", "largest_size", "accepted"]


def trace_csv_rows(run_id: str, result: RunResult) -> list[list]:
    """Flat per-iteration rows: run id, iteration, coalition count, largest
    coalition size, and the proposal's approval count."""
    rows = []
    for r in result.trace:
        rows.append([run_id, r.iteration, len(r.sizes), max(r.sizes), r.approvals])
    return rows
