import math
from collections import Counter

import numpy as np
import pytest

from greedyepl.models import AllocationPrior, GaussianMixture, PriorOnly, StochasticBlockModel
from greedyepl.partitions import canonical_key
from greedyepl.sampler import (
    ChainConfig,
    ProposalMove,
    mh_step,
    proposal_log_prob,
    propose,
    reverse_move,
    run_chain,
)

from oracles import enumerate_moves, partition_posterior, total_variation


@pytest.mark.parametrize(
    "z,k_up",
    [([1, 1, 1], 3), ([1, 2, 2, 3], 3), ([1, 2, 3, 4], 6), ([2, 2, 2, 2, 2], 4), ([1, 1, 2, 3, 3], 5)],
)
def test_proposal_probabilities_sum_to_one(z, k_up):
    total = sum(
        math.exp(proposal_log_prob(z, ProposalMove(g, h, items), k_up))
        for g, h, items in enumerate_moves(z, k_up)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_propose_frequencies_match_probabilities():
    z, k_up = np.array([1, 1, 1, 2]), 3
    rng = np.random.default_rng(0)
    n = 40000
    counts = Counter()
    for _ in range(n):
        _, move = propose(z, k_up, rng)
        counts[(move.g, move.h, move.items)] += 1
    for g, h, items in enumerate_moves(z, k_up):
        p = math.exp(proposal_log_prob(z, ProposalMove(g, h, items), k_up))
        assert abs(counts[(g, h, items)] / n - p) < 4 * math.sqrt(p * (1 - p) / n) + 1e-4


def test_proposed_partition_is_consistent():
    z = np.array([1, 3, 3, 2, 3])
    z_new, move = propose(z, 4, 3)
    assert move.g != move.h
    assert all(z[i] == move.g for i in move.items)
    assert all(z_new[i] == move.h for i in move.items)
    others = np.setdiff1d(np.arange(5), move.items)
    assert np.array_equal(z_new[others], z[others])


def test_reverse_move_probability_can_vanish():
    # all three items of group 1 go to the occupied group 2 (size 1); sending three
    # items back to the then-empty group 1 is limited to ceil(4 / 2) = 2 items
    z, k_up = np.array([1, 1, 1, 2]), 3
    move = ProposalMove(1, 2, (0, 1, 2))
    assert proposal_log_prob(z, move, k_up) > -math.inf
    z_new = np.array([2, 2, 2, 2])
    assert proposal_log_prob(z_new, reverse_move(move), k_up) == -math.inf


def test_proposal_log_prob_validation():
    with pytest.raises(ValueError):
        proposal_log_prob([1, 2], ProposalMove(1, 1, (0,)), 2)
    with pytest.raises(ValueError):
        proposal_log_prob([1, 2], ProposalMove(1, 2, (1,)), 2)
    with pytest.raises(ValueError):
        proposal_log_prob([1, 2], ProposalMove(1, 2, ()), 2)


def test_k_up_below_two_is_refused():
    with pytest.raises(ValueError):
        propose([1, 1], 1)
    with pytest.raises(ValueError):
        run_chain(PriorOnly(3), ChainConfig(10, k_up=1))
    with pytest.raises(ValueError):
        ChainConfig(0, k_up=3)


def test_mh_step_returns_consistent_state():
    model = GaussianMixture(np.array([0.0, 0.1, 3.0, 3.2]), 0.5, 1.0, 1.0, AllocationPrior(1.0))
    z = np.array([1, 1, 2, 2])
    rng = np.random.default_rng(1)
    for _ in range(50):
        z, accepted, lp = mh_step(z, model, 3, rng)
        assert lp == pytest.approx(model.log_posterior(z, 3), abs=1e-10)


def test_chain_is_reproducible():
    model = PriorOnly(6, AllocationPrior(1.0))
    cfg = ChainConfig(200, k_up=4, burn_in=10, thin=2, seed=77)
    a, b = run_chain(model, cfg), run_chain(model, cfg)
    assert np.array_equal(a.sample.draws, b.sample.draws)
    assert np.array_equal(a.sample.log_posterior, b.sample.log_posterior)
    assert a.acceptance_rate == b.acceptance_rate
    assert a.sample.draws.shape == (200, 6)


def test_trace_matches_model():
    rng = np.random.default_rng(2)
    adj = np.triu(rng.random((6, 6)) < 0.5, 1).astype(int)
    model = StochasticBlockModel(adj + adj.T, prior=AllocationPrior(0.5))
    out = run_chain(model, ChainConfig(30, k_up=3, thin=3, seed=5))
    for z, lp in zip(out.sample.draws, out.sample.log_posterior):
        assert lp == pytest.approx(model.log_posterior(z, 3), abs=1e-9)


def test_short_chain_targets_prior():
    model = PriorOnly(4, AllocationPrior(1.0))
    out = run_chain(model, ChainConfig(20000, k_up=3, burn_in=500, seed=3))
    target = partition_posterior(lambda p: model.log_posterior(p, 3), 4, 3)
    counts = Counter(canonical_key(z) for z in out.sample.draws)
    assert total_variation(counts, target) < 0.03
