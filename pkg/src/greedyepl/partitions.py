"""Partitions as label vectors: canonical relabeling, contingency tables, moves.

A partition of ``N`` items is stored as an integer array of positive labels
``1..k_up``. Item indices are 0-based (ordinary Python indexing); group labels
are 1-based. Two label vectors describe the same partition when one is a
relabeling of the other, which is decided by comparing canonical forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .validation import check_partition

#: Largest ``N`` accepted by :func:`enumerate_partitions` (Bell(12) = 4,213,597).
MAX_ENUMERATION_ITEMS = 12


def canonicalize(labels) -> np.ndarray:
    """Relabel groups in order of first appearance.

    The first item gets label 1, and every later item either joins an
    existing group or opens the group with the next unused label.

    Examples
    --------
    >>> canonicalize([2, 2, 1, 3]).tolist()
    [1, 1, 2, 3]
    """
    a = np.asarray(labels)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("a partition must be a non-empty 1-D label vector")
    uniq, first, inverse = np.unique(a, return_index=True, return_inverse=True)
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(1, uniq.size + 1)
    return rank[inverse.reshape(-1)]


def canonicalize_rows(draws) -> np.ndarray:
    """Row-wise :func:`canonicalize` of a ``T x N`` label matrix."""
    z = np.asarray(draws)
    if z.ndim != 2:
        raise ValueError("expected a 2-D array of label rows")
    out = np.empty(z.shape, dtype=np.int64)
    for t in range(z.shape[0]):
        out[t] = canonicalize(z[t])
    return out


def canonical_key(labels) -> tuple:
    """Order-comparable identifier of the partition's equivalence class.

    Lexicographic order on the canonical sequence is the same total order as
    reading that sequence as a base-``k_up`` number, without overflow.
    """
    return tuple(canonicalize(labels).tolist())


def n_groups(labels) -> int:
    """Number of occupied groups."""
    return int(np.unique(np.asarray(labels)).size)


def equivalent(a, b) -> bool:
    """True when ``a`` and ``b`` differ only by a permutation of labels."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(
            f"incomparable partitions: {a.size} items versus {b.size} items"
        )
    return bool(np.array_equal(canonicalize(a), canonicalize(b)))


@dataclass(frozen=True)
class ContingencyTable:
    """Co-classification counts between two partitions of the same items.

    ``counts[g, h]`` is the number of items placed in group ``g`` of the
    first partition and group ``h`` of the second. Rows and columns follow
    the canonical (first-appearance) order of each partition.
    """

    counts: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    total: int

    @classmethod
    def from_counts(cls, counts) -> "ContingencyTable":
        c = np.asarray(counts, dtype=np.int64)
        if c.ndim != 2 or c.size == 0:
            raise ValueError("contingency counts must be a non-empty matrix")
        if (c < 0).any():
            raise ValueError("contingency counts must be non-negative")
        return cls(c, c.sum(axis=1), c.sum(axis=0), int(c.sum()))

    @property
    def shape(self):
        return self.counts.shape

    def transpose(self) -> "ContingencyTable":
        return ContingencyTable(self.counts.T, self.col_sums, self.row_sums, self.total)

    def __eq__(self, other):
        if not isinstance(other, ContingencyTable):
            return NotImplemented
        return self.total == other.total and np.array_equal(self.counts, other.counts)

    __hash__ = None


def contingency(a, z) -> ContingencyTable:
    """Contingency table of ``a`` (rows) against ``z`` (columns)."""
    a = np.asarray(a)
    z = np.asarray(z)
    if a.shape != z.shape:
        raise ValueError(f"length mismatch: {a.size} versus {z.size} items")
    ca = canonicalize(a) - 1
    cz = canonicalize(z) - 1
    ka, kz = int(ca.max()) + 1, int(cz.max()) + 1
    counts = np.bincount(ca * kz + cz, minlength=ka * kz).reshape(ka, kz)
    return ContingencyTable.from_counts(counts)


def apply_move(a, i: int, s: int, k_up: int | None = None) -> np.ndarray:
    """Copy of ``a`` with item ``i`` (0-based) moved to group label ``s``."""
    a = check_partition(a, k_up=k_up)
    if not 0 <= i < a.size:
        raise IndexError(f"item index {i} out of range for {a.size} items")
    limit = k_up if k_up is not None else np.inf
    if not 1 <= s <= limit:
        raise ValueError(f"target label {s} outside 1..{k_up}")
    out = a.copy()
    out[i] = s
    return out


def contingency_move_delta(
    table: ContingencyTable, a, z, i: int, r: int, s: int, validate: bool = False
) -> ContingencyTable:
    """Update ``table = contingency(a, z)`` for the move of item ``i`` from ``r`` to ``s``.

    Only the two cells ``(r, z_i)`` and ``(s, z_i)`` and the two row sums
    change; rows are then re-ordered to the canonical order of the moved
    partition (an emptied row disappears, a newly opened one is appended).
    """
    a = np.asarray(a)
    z = np.asarray(z)
    if a.shape != z.shape:
        raise ValueError(f"length mismatch: {a.size} versus {z.size} items")
    if a[i] != r:
        raise ValueError(f"item {i} has label {a[i]}, not {r}")
    if validate and table != contingency(a, z):
        raise ValueError("cached contingency table is inconsistent with (a, z)")
    if r == s:
        return table

    # old label -> row of the cached table
    ca = canonicalize(a)
    row_of = {int(lab): int(c) - 1 for lab, c in zip(a, ca)}
    col = int(canonicalize(z)[i]) - 1
    counts = table.counts
    ka = counts.shape[0]
    if s not in row_of:
        counts = np.vstack([counts, np.zeros((1, counts.shape[1]), dtype=counts.dtype)])
        row_of[s] = ka
    else:
        counts = counts.copy()
    counts[row_of[r], col] -= 1
    counts[row_of[s], col] += 1

    moved = a.copy()
    moved[i] = s
    new_order = []
    for lab in moved:
        row = row_of[int(lab)]
        if row not in new_order:
            new_order.append(row)
    return ContingencyTable.from_counts(counts[new_order])


def bell_number(n: int) -> int:
    """Number of set partitions of ``n`` items (Bell triangle)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def enumerate_partitions(n: int) -> Iterator[np.ndarray]:
    """Yield every partition of ``n`` items once, as a canonical label vector.

    Restricted growth strings are generated in lexicographic order, so the
    stream is sorted by canonical key.
    """
    if n < 1:
        raise ValueError("need at least one item")
    if n > MAX_ENUMERATION_ITEMS:
        raise ValueError(
            f"refusing to enumerate partitions of {n} items: the bound is "
            f"{MAX_ENUMERATION_ITEMS} (Bell({n}) = {bell_number(n)})"
        )
    a = [1] * n
    # prefix_max[j] = max(a[0..j])
    prefix_max = [1] * n
    while True:
        yield np.array(a, dtype=np.int64)
        j = n - 1
        while j > 0 and a[j] > prefix_max[j - 1]:
            j -= 1
        if j == 0:
            return
        a[j] += 1
        prefix_max[j] = max(prefix_max[j - 1], a[j])
        for k in range(j + 1, n):
            a[k] = 1
            prefix_max[k] = prefix_max[j]


def all_partitions(n: int) -> np.ndarray:
    """All partitions of ``n`` items stacked as a ``Bell(n) x n`` array."""
    return np.vstack(list(enumerate_partitions(n)))
