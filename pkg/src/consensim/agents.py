"""Agents and their voting rule.

An agent has an ideal point and decides on a proposal by comparing its
distance to the proposal against its distance to the fixed status quo.  An
improving proposal is always approved.  A worsening one is approved with a
probability drawn from a half-Gaussian tail whose width is the agent's
altruism parameter ``sigma`` (``sigma = 0`` recovers the deterministic
voter).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spaces import Point, SpaceKind, dist

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

Vote = int  # 0 or 1


@dataclass(frozen=True)
class Agent:
    id: int
    ideal: Point
    sigma: float = 0.0

    def __post_init__(self):
        if self.id < 0:
            raise ValueError("agent id must be >= 0")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def approval_probability(
    space: SpaceKind,
    status_quo: Point,
    proposal: Point,
    ideal: Point,
    sigma: float,
) -> float:
    """Probability that an agent at ``ideal`` approves ``proposal``.

    Returns 1 when the proposal is at least as close to the ideal point as
    the status quo.  Otherwise the half-Gaussian tail applies:
    ``(2 / (sigma * sqrt(2*pi))) * exp(-d^2 / (2*sigma^2))`` with
    ``d = dist(ideal, proposal)``, clamped to 1 so it stays a probability
    (the raw density exceeds 1 for small sigma), and 0 when ``sigma == 0``.
    """
    d_quo = dist(space, ideal, status_quo)
    d_prop = dist(space, ideal, proposal)
    if d_quo >= d_prop:
        return 1.0
    if sigma == 0.0:
        return 0.0
    density = (2.0 / (sigma * SQRT_TWO_PI)) * math.exp(-(d_prop * d_prop) / (2.0 * sigma * sigma))
    return min(1.0, density)


def vote(
    agent: Agent,
    space: SpaceKind,
    status_quo: Point,
    proposal: Point,
    rng: np.random.Generator,
) -> Vote:
    """Draw the agent's binary vote on a proposal.

    Exactly one uniform sample is consumed per call, even when the approval
    probability is 0 or 1, so a run's random stream advances the same way
    regardless of outcomes.
    """
    p = approval_probability(space, status_quo, proposal, agent.ideal, agent.sigma)
    u = rng.random()
    return 1 if u < p else 0


def votes_for_members(
    ideals: np.ndarray,
    sigmas: np.ndarray,
    d_quo: np.ndarray,
    proposal_coords: np.ndarray,
    rng: np.random.Generator,
    embedding: bool = False,
) -> np.ndarray:
    """Vectorised equivalent of calling :func:`vote` member by member.

    ``ideals`` is a (k, dim) array in member order, ``d_quo`` the members'
    precomputed distances to the status quo.  Consumes k uniforms in the same
    order as k sequential :func:`vote` calls would.
    """
    if embedding:
        norms = np.linalg.norm(ideals, axis=1) * float(np.linalg.norm(proposal_coords))
        inner = 2.0 - 2.0 * (ideals @ proposal_coords) / norms
        d_prop = np.sqrt(np.clip(inner, 0.0, 4.0))
    else:
        d_prop = np.linalg.norm(ideals - proposal_coords, axis=1)
    probs = np.zeros(len(d_prop))
    improving = d_quo >= d_prop
    probs[improving] = 1.0
    tail = ~improving & (sigmas > 0)
    if np.any(tail):
        s = sigmas[tail]
        dens = (2.0 / (s * SQRT_TWO_PI)) * np.exp(-(d_prop[tail] ** 2) / (2.0 * s * s))
        probs[tail] = np.minimum(1.0, dens)
    u = rng.random(len(probs))
    return (u < probs).astype(int)
