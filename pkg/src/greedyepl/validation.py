"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_partition(labels, k_up: int | None = None, n_items: int | None = None) -> np.ndarray:
    """Validate a single label vector and return it as an ``int64`` array.

    Labels must be positive integers; when ``k_up`` is given they must not
    exceed it.
    """
    a = np.asarray(labels)
    if a.ndim != 1 or a.size == 0:
        raise ValueError("a partition must be a non-empty 1-D label vector")
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(np.isfinite(a)) or not np.all(a == np.round(a)):
            raise ValueError("partition labels must be integers")
    a = a.astype(np.int64)
    if n_items is not None and a.size != n_items:
        raise ValueError(f"expected {n_items} labels, got {a.size}")
    if a.min() < 1:
        raise ValueError("partition labels must be >= 1")
    if k_up is not None and a.max() > k_up:
        raise ValueError(f"label {int(a.max())} exceeds k_up={k_up}")
    return a


def check_sample(draws, k_up: int | None = None) -> np.ndarray:
    """Validate a ``T x N`` matrix of partitions (one partition per row)."""
    z = check_array(draws, dtype=None, ensure_2d=True, ensure_all_finite=True)
    if not np.issubdtype(z.dtype, np.integer):
        if not np.all(z == np.round(z)):
            raise ValueError("partition labels must be integers")
    z = z.astype(np.int64)
    if z.min() < 1:
        raise ValueError("partition labels must be >= 1")
    if k_up is not None:
        too_many = max_groups(z)
        if too_many > k_up:
            raise ValueError(
                f"a sampled partition has {too_many} groups, more than k_up={k_up}"
            )
    return z


def check_weights(weights, n_rows: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_rows,):
        raise ValueError(f"expected {n_rows} weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)) or (w <= 0).any():
        raise ValueError("weights must be finite and strictly positive")
    return w


def max_groups(draws) -> int:
    z = np.asarray(draws)
    return max(int(np.unique(row).size) for row in z)
