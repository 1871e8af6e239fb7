import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from greedyepl.partitions import (
    ContingencyTable,
    all_partitions,
    apply_move,
    bell_number,
    canonical_key,
    canonicalize,
    canonicalize_rows,
    contingency,
    contingency_move_delta,
    enumerate_partitions,
    equivalent,
    n_groups,
)
from greedyepl.validation import check_partition, check_sample

from conftest import labels


def test_canonicalize_examples():
    assert canonicalize([3, 3, 1, 2]).tolist() == [1, 1, 2, 3]
    assert canonicalize([2, 1, 2, 1]).tolist() == [1, 2, 1, 2]
    assert canonicalize([5]).tolist() == [1]


@given(labels())
def test_canonical_form_properties(z):
    c = canonicalize(z)
    assert c[0] == 1
    running = 0
    for v in c:
        assert v <= running + 1
        running = max(running, v)
    assert np.array_equal(canonicalize(c), c)
    assert equivalent(c, z)


@given(labels(), st.permutations(range(1, 6)))
def test_relabeling_gives_same_canonical_form(z, perm):
    sigma = dict(zip(range(1, 6), perm))
    relabeled = [sigma[v] for v in z]
    assert np.array_equal(canonicalize(relabeled), canonicalize(z))
    assert canonical_key(relabeled) == canonical_key(z)


def test_equivalence_and_length_mismatch():
    assert equivalent([1, 1, 2], [2, 2, 7])
    assert not equivalent([1, 1, 2], [1, 2, 2])
    with pytest.raises(ValueError, match="incomparable"):
        equivalent([1, 2], [1, 2, 3])


def test_canonicalize_rows_matches_rowwise():
    z = np.array([[2, 2, 1], [3, 1, 3], [1, 2, 3]])
    expected = np.array([canonicalize(r) for r in z])
    assert np.array_equal(canonicalize_rows(z), expected)


def test_contingency_hand_example():
    t = contingency([1, 1, 2, 2], [1, 2, 2, 2])
    assert t.counts.tolist() == [[1, 1], [0, 2]]
    assert t.row_sums.tolist() == [2, 2]
    assert t.col_sums.tolist() == [1, 3]
    assert t.total == 4
    assert t.transpose() == contingency([1, 2, 2, 2], [1, 1, 2, 2])


@given(labels(2, 8), st.data())
def test_contingency_marginals(a, data):
    z = data.draw(st.lists(st.integers(1, 4), min_size=len(a), max_size=len(a)))
    t = contingency(a, z)
    assert t.counts.sum() == len(a)
    assert np.array_equal(t.counts.sum(axis=1), t.row_sums)
    assert np.array_equal(t.counts.sum(axis=0), t.col_sums)
    assert (t.counts >= 0).all()
    assert t.counts.shape == (n_groups(a), n_groups(z))


def test_contingency_from_counts_rejects_negative():
    with pytest.raises(ValueError):
        ContingencyTable.from_counts([[1, -1]])


@given(labels(2, 7, 4), st.data())
def test_move_delta_matches_rebuild(a, data):
    n = len(a)
    z = data.draw(st.lists(st.integers(1, 3), min_size=n, max_size=n))
    i = data.draw(st.integers(0, n - 1))
    s = data.draw(st.integers(1, 5))
    r = a[i]
    moved = apply_move(a, i, s)
    updated = contingency_move_delta(contingency(a, z), a, z, i, r, s, validate=True)
    assert updated == contingency(moved, z)


def test_apply_move_errors():
    with pytest.raises(IndexError):
        apply_move([1, 2], 5, 1)
    with pytest.raises(ValueError):
        apply_move([1, 2], 0, 4, k_up=3)


def test_bell_numbers():
    assert [bell_number(n) for n in range(9)] == [1, 1, 2, 5, 15, 52, 203, 877, 4140]


@pytest.mark.parametrize("n", range(1, 8))
def test_enumeration_is_complete_and_canonical(n):
    parts = list(enumerate_partitions(n))
    assert len(parts) == bell_number(n)
    keys = [tuple(p) for p in parts]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    for p in parts:
        assert np.array_equal(canonicalize(p), p)
    # every labelled allocation in 1..n maps to one enumerated partition
    seen = {canonical_key(z) for z in itertools.product(range(1, n + 1), repeat=n)} if n <= 5 else None
    if seen is not None:
        assert seen == set(keys)


def test_enumeration_limits():
    assert all_partitions(3).shape == (5, 3)
    with pytest.raises(ValueError):
        list(enumerate_partitions(13))


def test_validation_messages():
    with pytest.raises(ValueError):
        check_partition([0, 1])
    with pytest.raises(ValueError):
        check_partition([1.5, 1])
    with pytest.raises(ValueError):
        check_partition([1, 4], k_up=3)
    with pytest.raises(ValueError):
        check_partition([[1, 2]])
    with pytest.raises(ValueError):
        check_sample([[1, 2, 3]], k_up=2)
    assert check_partition([1, 2, 2]).dtype == np.int64
