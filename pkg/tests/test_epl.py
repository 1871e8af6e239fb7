import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedyepl.epl import (
    EplState,
    PosteriorSample,
    WeightedSample,
    binder_objective_psm,
    commit_move,
    compress,
    delta_epl,
    epl,
    epl_weighted,
    k_histogram,
    map_partition,
    mode_partition,
    psm,
)
from greedyepl.losses import loss_value
from greedyepl.partitions import canonicalize

from conftest import random_sample

samples = st.tuples(st.integers(2, 7), st.integers(1, 20), st.integers(0, 2**32 - 1))


def test_compress_hand_example():
    draws = np.array([[1, 1, 2], [2, 2, 1], [1, 2, 2], [3, 3, 1]])
    ws = compress(PosteriorSample(draws, [-3.0, -1.0, -2.0, -5.0]))
    assert ws.uniques.tolist() == [[1, 1, 2], [1, 2, 2]]
    assert ws.weights.tolist() == [3, 1]
    assert ws.log_posterior.tolist() == [-1.0, -2.0]
    assert ws.total_weight == 4


@settings(max_examples=60)
@given(samples)
def test_compression_preserves_the_estimate(args):
    n, t, seed = args
    rng = np.random.default_rng(seed)
    draws = random_sample(rng, n, t, k=3)
    ws = compress(draws)
    assert ws.total_weight == t
    assert len({tuple(r) for r in ws.uniques}) == ws.n_unique
    a = rng.integers(1, 4, size=n)
    for loss in ("binder", "vi", "nvi", "nid", "zeroone"):
        assert abs(epl(a, draws, loss) - epl_weighted(a, ws, loss)) <= 1e-12


def test_epl_single_draw_is_the_loss():
    z = np.array([[1, 2, 2, 3]])
    a = [1, 1, 2, 2]
    assert epl(a, z, "vi") == loss_value(a, z[0], "vi")
    assert epl(z[0], z, "binder") == 0.0


@settings(max_examples=40, deadline=None)
@given(samples, st.sampled_from(["binder", "vi", "nvi", "nid", "zeroone"]))
def test_state_psi_and_deltas(args, loss):
    n, t, seed = args
    rng = np.random.default_rng(seed)
    ws = compress(random_sample(rng, n, t, k=3))
    k_up = 4
    a = rng.integers(1, k_up + 1, size=n)
    state = EplState(a, ws, loss, k_up, debug=True)
    assert state.psi == pytest.approx(epl_weighted(a, ws, loss), abs=1e-12)
    for _ in range(5):
        i = int(rng.integers(n))
        s = int(rng.integers(1, k_up + 1))
        r = int(state.labels[i]) + 1
        d = delta_epl(state, i, r, s)
        moved = state.partition.copy()
        moved[i] = s
        assert d == pytest.approx(epl_weighted(moved, ws, loss) - state.psi, abs=1e-10)
        before = state.psi
        commit_move(state, i, r, s)
        assert state.psi == pytest.approx(before + d, abs=1e-10)
        state.check()


def test_deltas_zero_for_current_label():
    ws = compress(np.array([[1, 2, 1], [1, 1, 2]]))
    state = EplState([1, 2, 2], ws, "vi", 3)
    d = state.deltas(0)
    assert d[0] == 0.0 and d.shape == (3,)


def test_delta_epl_checks_current_label():
    state = EplState([1, 2], compress(np.array([[1, 2]])), "vi", 2)
    with pytest.raises(ValueError):
        delta_epl(state, 0, 2, 1)
    with pytest.raises(ValueError):
        state.commit(0, 3)


def test_psm_hand_count():
    draws = np.array([[1, 1, 2], [1, 2, 2]])
    b = psm(draws)
    expected = np.array([[1, 0.5, 0], [0.5, 1, 0.5], [0, 0.5, 1]])
    assert np.array_equal(b, expected)
    assert np.allclose(b, b.T)


@settings(max_examples=40, deadline=None)
@given(samples)
def test_binder_psm_objective_equals_binder_epl_times_t(args):
    n, t, seed = args
    rng = np.random.default_rng(seed)
    draws = random_sample(rng, n, t, k=3)
    b = psm(draws)
    a = rng.integers(1, 4, size=n)
    assert binder_objective_psm(a, b) == pytest.approx(epl(a, draws, "binder"), abs=1e-9)


def test_binder_psm_shape_check():
    with pytest.raises(ValueError):
        binder_objective_psm([1, 2], np.eye(3))


def test_map_partition():
    draws = np.array([[2, 2, 1], [1, 2, 3], [3, 1, 1]])
    sample = PosteriorSample(draws, [-1.0, -0.5, -0.5])
    assert map_partition(sample).tolist() == [1, 2, 3]
    with pytest.raises(ValueError, match="trace"):
        map_partition(PosteriorSample(draws))


def test_mode_and_histogram():
    draws = np.array([[1, 1, 2], [2, 2, 1], [1, 2, 3], [1, 1, 1]])
    ws = compress(draws)
    assert canonicalize(mode_partition(ws)).tolist() == [1, 1, 2]
    assert k_histogram(draws) == {1: 0.25, 2: 0.5, 3: 0.25}
    assert k_histogram(ws) == k_histogram(draws)
    assert sum(k_histogram(ws).values()) == pytest.approx(1.0)


def test_sample_validation():
    with pytest.raises(ValueError):
        PosteriorSample(np.array([[1, 2]]), [0.0, 1.0])
    with pytest.raises(ValueError):
        PosteriorSample(np.array([[1, 3]]), k_up=2)
    with pytest.raises(ValueError):
        WeightedSample.from_draws(np.array([[1, 2]]), [-1.0])
