import time
from dataclasses import dataclass

import numpy as np
import pytest

from consensim.agents import Agent
from consensim.config import RunConfig
from consensim.engine import (
    Coalition,
    CoalitionStructure,
    DisciplinePolicy,
    PartitionError,
    apply_constitution,
    check_halt,
    parse_discipline,
    run_process,
    run_result_json_bytes,
    step,
    trace_csv_rows,
)
from consensim.mediator import Mediator, MediatorConfig, MediatorProposal
from consensim.spaces import EUCLID2D, Point2D, SpaceKind, dist


@dataclass
class ForcedMediator:
    """Test stub: always proposes the same (i, j, point)."""

    proposal: MediatorProposal

    def propose(self, structure, rng):
        return self.proposal


@dataclass
class ForcedEnumerableMediator(ForcedMediator):
    def enumerate_proposals(self, structure):
        return [self.proposal]


def euclid_config(n, sigma=0.0, discipline=DisciplinePolicy.none(), **kw):
    return RunConfig(space=SpaceKind.euclid2d(), n=n, sigma=sigma, discipline=discipline, **kw)


# --- apply_constitution -------------------------------------------------------

def test_no_discipline_each_approver_moves():
    c = Coalition(frozenset({0, 1}), Point2D(0, 0))
    moves = apply_constitution(c, Point2D(1, 1), {0: 1, 1: 0}, DisciplinePolicy.none())
    assert moves == {0: True, 1: False}


def test_unanimity_blocks_on_any_rejection():
    c = Coalition(frozenset({0, 1, 2}), Point2D(0, 0))
    moves = apply_constitution(c, Point2D(1, 1), {0: 1, 1: 1, 2: 0}, DisciplinePolicy.unanimity())
    assert moves == {0: False, 1: False, 2: False}


def test_quota_half_of_four_needs_two_approvers():
    # ceil(0.5 * 4) = 2: two approvers meet the threshold and move.
    c = Coalition(frozenset({0, 1, 2, 3}), Point2D(0, 0))
    votes = {0: 1, 1: 1, 2: 0, 3: 0}
    moves = apply_constitution(c, Point2D(1, 1), votes, DisciplinePolicy.quota(0.5))
    assert moves == {0: True, 1: True, 2: False, 3: False}
    # One approver falls short: everyone stays.
    votes = {0: 1, 1: 0, 2: 0, 3: 0}
    moves = apply_constitution(c, Point2D(1, 1), votes, DisciplinePolicy.quota(0.5))
    assert all(not m for m in moves.values())


def test_constitution_rejects_wrong_vote_map():
    c = Coalition(frozenset({0, 1}), Point2D(0, 0))
    with pytest.raises(ValueError):
        apply_constitution(c, Point2D(1, 1), {0: 1}, DisciplinePolicy.none())


def test_parse_discipline_round_trip():
    assert parse_discipline("none") == DisciplinePolicy.none()
    assert parse_discipline("unanimity") == DisciplinePolicy.unanimity()
    assert parse_discipline("quota:0.75") == DisciplinePolicy.quota(0.75)
    with pytest.raises(ValueError):
        parse_discipline("most")


# --- step ---------------------------------------------------------------------

def golden_structure():
    return CoalitionStructure([
        Coalition(frozenset({0}), Point2D(0, 0)),   # A
        Coalition(frozenset({1}), Point2D(3, 0)),   # B
        Coalition(frozenset({2}), Point2D(5, 0)),   # C
    ])


def test_step_merges_both_singletons():
    structure = golden_structure()
    prop = MediatorProposal(1, 2, Point2D(4, 0))
    out = step(structure, prop, {1: True}, {2: True})
    assert out.sizes() == (1, 2)
    assert out[0].members == frozenset({0})
    assert out[1].members == frozenset({1, 2})
    assert out[1].point == Point2D(4, 0)


def test_step_total_rejection_keeps_partition():
    structure = golden_structure()
    prop = MediatorProposal(0, 1, Point2D(1.5, 0))
    out = step(structure, prop, {0: False}, {1: False})
    assert out.sizes() == structure.sizes()
    assert [c.members for c in out.coalitions] == [c.members for c in structure.coalitions]


def test_step_partial_move_leaves_stayers_at_old_point():
    structure = CoalitionStructure([
        Coalition(frozenset({0, 1}), Point2D(0, 0)),
        Coalition(frozenset({2, 3}), Point2D(8, 0)),
    ])
    prop = MediatorProposal(0, 1, Point2D(4, 0))
    out = step(structure, prop, {0: True, 1: False}, {2: False, 3: True})
    assert out.sizes() == (1, 1, 2)
    assert out[0].members == frozenset({1})
    assert out[0].point == Point2D(0, 0)
    assert out[1].members == frozenset({2})
    assert out[2].members == frozenset({0, 3})


def test_step_rejects_bad_indices_and_assignments():
    structure = golden_structure()
    with pytest.raises(ValueError):
        step(structure, MediatorProposal(0, 3, Point2D(0, 0)), {0: True}, {})
    with pytest.raises(ValueError):
        step(structure, MediatorProposal(0, 1, Point2D(0, 0)), {9: True}, {1: True})


def test_structure_validation_catches_violations():
    s = CoalitionStructure([
        Coalition(frozenset({0, 1}), Point2D(0, 0)),
        Coalition(frozenset({1}), Point2D(1, 0)),
    ])
    with pytest.raises(PartitionError):
        s.validate(frozenset({0, 1}))
    s2 = CoalitionStructure([Coalition(frozenset({0}), Point2D(0, 0))])
    with pytest.raises(PartitionError):
        s2.validate(frozenset({0, 1}))


# --- check_halt -----------------------------------------------------------------

def test_majority_halts_on_two_of_three():
    s = CoalitionStructure([
        Coalition(frozenset({0}), Point2D(0, 0)),
        Coalition(frozenset({1, 2}), Point2D(4, 0)),
    ])
    winner = check_halt(s, 3)
    assert winner is not None and winner.members == frozenset({1, 2})


def test_even_split_reaches_simple_majority():
    # Half the agents meet the default quota: 2/4 >= 0.5.
    s = CoalitionStructure([
        Coalition(frozenset({0, 1}), Point2D(0, 0)),
        Coalition(frozenset({2, 3}), Point2D(4, 0)),
    ])
    winner = check_halt(s, 4)
    assert winner is not None and winner.members == frozenset({0, 1})
    assert check_halt(s, 4, quota=0.51) is None


def test_single_agent_is_its_own_majority():
    s = CoalitionStructure([Coalition(frozenset({0}), Point2D(0, 0))])
    winner = check_halt(s, 1)
    assert winner is not None


def test_supermajority_quota_uses_plain_ratio():
    s = CoalitionStructure([
        Coalition(frozenset({0, 1, 2}), Point2D(0, 0)),
        Coalition(frozenset({3}), Point2D(4, 0)),
    ])
    assert check_halt(s, 4, quota=0.75) is not None
    assert check_halt(s, 4, quota=0.8) is None


# --- run_process -----------------------------------------------------------------

def golden_agents():
    # Three agents on a line; the listed pairwise distances embed here with
    # every vote comparison preserved.
    return [
        Agent(0, Point2D(0, 0), sigma=0.0),
        Agent(1, Point2D(3, 0), sigma=0.0),
        Agent(2, Point2D(5, 0), sigma=0.0),
    ]


GOLDEN_QUO = Point2D(9, 0)
GOLDEN_COMPROMISE = Point2D(4, 0)


def test_golden_three_agent_example():
    config = euclid_config(3, seed=1)
    mediator = ForcedMediator(MediatorProposal(1, 2, GOLDEN_COMPROMISE))
    result = run_process(
        config, mediator, golden_agents(), np.random.default_rng(1),
        status_quo=GOLDEN_QUO, record_trace=True, record_votes=True,
    )
    assert result.converged
    assert result.iterations == 1
    assert result.winning_coalition.members == frozenset({1, 2})
    assert result.winning_coalition.point == GOLDEN_COMPROMISE
    # Both merging agents sit at distance 1 from the compromise.
    assert result.quality == pytest.approx(1.0)
    assert result.trace[0].votes == {1: 1, 2: 1}
    assert result.trace[0].sizes == (1, 2)


def test_single_agent_converges_immediately():
    config = euclid_config(1, seed=3)
    agent = [Agent(0, Point2D(7, 7))]
    result = run_process(
        config, ForcedMediator(MediatorProposal(0, 1, Point2D(0, 0))), agent,
        np.random.default_rng(3), status_quo=Point2D(0, 0),
    )
    assert result.converged and result.iterations == 0
    assert result.quality == 0.0


def test_single_agent_quality_with_noisy_start():
    config = euclid_config(1, seed=3, noise_init=True)
    agent = [Agent(0, Point2D(7, 7))]
    start = Point2D(8, 7)
    result = run_process(
        config, ForcedMediator(MediatorProposal(0, 1, Point2D(0, 0))), agent,
        np.random.default_rng(3), status_quo=Point2D(0, 0), init_points=[start],
    )
    assert result.converged and result.iterations == 0
    assert result.quality == pytest.approx(1.0)


def test_run_process_checks_agent_count():
    config = euclid_config(2, seed=0)
    with pytest.raises(ValueError):
        run_process(
            config, ForcedMediator(MediatorProposal(0, 1, Point2D(0, 0))),
            golden_agents(), np.random.default_rng(0), status_quo=Point2D(0, 0),
        )


def test_hopeless_state_fast_forwards_to_cap():
    # A proposal nobody approves, forever: the engine must recognise the
    # dead state instead of spinning through 10k iterations.
    config = euclid_config(3, seed=5)
    agents = [Agent(0, Point2D(0, 0)), Agent(1, Point2D(10, 0)), Agent(2, Point2D(5, 9))]
    hopeless = MediatorProposal(0, 1, Point2D(500, 500))
    start = time.monotonic()
    result = run_process(
        config, ForcedEnumerableMediator(hopeless), agents,
        np.random.default_rng(5), status_quo=Point2D(5, 0), record_trace=True,
    )
    elapsed = time.monotonic() - start
    assert not result.converged
    assert result.status == "cap_reached"
    assert result.iterations == config.iteration_cap
    assert len(result.trace) == 1
    assert elapsed < 1.0


def full_mediator(config):
    return Mediator(config.space, MediatorConfig(alpha=config.alpha))


def random_scenario(config, rng):
    agents = [
        Agent(i, Point2D(*rng.uniform(0, 200, 2)), config.sigma)
        for i in range(config.n)
    ]
    return agents, Point2D(*rng.uniform(0, 200, 2))


def test_seeded_run_is_bytewise_reproducible():
    config = euclid_config(20, seed=42)

    def one():
        rng = np.random.default_rng(42)
        agents, quo = random_scenario(config, rng)
        return run_process(
            config, full_mediator(config), agents, rng,
            status_quo=quo, record_trace=True, record_votes=True,
        )

    assert run_result_json_bytes(one()) == run_result_json_bytes(one())


def test_sigma_zero_movers_strictly_improve_over_status_quo():
    config = euclid_config(12, seed=9)
    rng = np.random.default_rng(9)
    agents, quo = random_scenario(config, rng)
    by_id = {a.id: a for a in agents}
    result = run_process(
        config, full_mediator(config), agents, rng,
        status_quo=quo, record_trace=True, record_votes=True,
    )
    checked = 0
    for rec in result.trace:
        for aid, v in rec.votes.items():
            if v == 1:
                ideal = by_id[aid].ideal
                assert dist(EUCLID2D, ideal, rec.point) < dist(EUCLID2D, ideal, quo)
                checked += 1
    assert checked > 0


def test_conservation_and_cap_across_random_runs():
    rng_outer = np.random.default_rng(77)
    for _ in range(10):
        n = int(rng_outer.integers(2, 15))
        config = euclid_config(n, seed=int(rng_outer.integers(1 << 30)), iteration_cap=200)
        rng = np.random.default_rng(config.seed)
        agents, quo = random_scenario(config, rng)
        result = run_process(config, full_mediator(config), agents, rng,
                             status_quo=quo, record_trace=True)
        assert result.iterations <= config.iteration_cap
        assert result.converged == (result.winning_coalition is not None)
        for rec in result.trace:
            assert sum(rec.sizes) == n


def test_trace_csv_rows_shape():
    config = euclid_config(3, seed=1)
    mediator = ForcedMediator(MediatorProposal(1, 2, GOLDEN_COMPROMISE))
    result = run_process(
        config, mediator, golden_agents(), np.random.default_rng(1),
        status_quo=GOLDEN_QUO, record_trace=True,
    )
    rows = trace_csv_rows("run0", result)
    assert rows == [["run0", 1, 2, 2, 2]]
