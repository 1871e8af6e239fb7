"""Expected posterior loss over a sample of partitions.

The estimate of the expected posterior loss of a candidate partition ``a`` is
the (weighted) average loss between ``a`` and the sampled partitions.
:class:`EplState` caches one contingency table per distinct draw so that the
change caused by moving a single item is obtained in ``O(T)`` time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import get_loss, loss_value
from .partitions import canonicalize, canonicalize_rows
from .validation import check_partition, check_sample, check_weights


@dataclass
class PosteriorSample:
    """A ``T x N`` matrix of sampled partitions, optionally with the log posterior of each row."""

    draws: np.ndarray
    log_posterior: np.ndarray | None = None
    k_up: int | None = None

    def __post_init__(self):
        self.draws = check_sample(self.draws)
        if self.k_up is not None and self.draws.max() > self.k_up:
            raise ValueError(f"label {int(self.draws.max())} exceeds k_up={self.k_up}")
        if self.log_posterior is not None:
            lp = np.asarray(self.log_posterior, dtype=float).reshape(-1)
            if lp.size != self.draws.shape[0]:
                raise ValueError(
                    f"trace has {lp.size} values for {self.draws.shape[0]} draws"
                )
            self.log_posterior = lp

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def n_items(self) -> int:
        return self.draws.shape[1]


@dataclass
class WeightedSample:
    """Distinct canonical partitions with their multiplicities.

    ``uniques`` are sorted by canonical key; ``log_posterior`` (if known) holds
    the highest recorded value among the draws merged into each row.
    """

    uniques: np.ndarray
    weights: np.ndarray
    log_posterior: np.ndarray | None = None

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def n_unique(self) -> int:
        return self.uniques.shape[0]

    @property
    def n_items(self) -> int:
        return self.uniques.shape[1]

    @classmethod
    def from_draws(cls, draws, weights=None) -> "WeightedSample":
        """Wrap rows as-is (no deduplication); weights default to 1."""
        z = check_sample(draws)
        w = np.ones(z.shape[0]) if weights is None else check_weights(weights, z.shape[0])
        return cls(z, w)


def _as_sample(sample) -> PosteriorSample:
    if isinstance(sample, PosteriorSample):
        return sample
    return PosteriorSample(np.asarray(sample))


def compress(sample) -> WeightedSample:
    """Collapse a sample to its distinct partitions (up to relabeling) with counts."""
    s = _as_sample(sample)
    canon = canonicalize_rows(s.draws)
    uniques, inverse, counts = np.unique(
        canon, axis=0, return_inverse=True, return_counts=True
    )
    inverse = inverse.reshape(-1)
    lp = None
    if s.log_posterior is not None:
        lp = np.full(uniques.shape[0], -np.inf)
        np.maximum.at(lp, inverse, s.log_posterior)
    return WeightedSample(uniques, counts.astype(np.int64), lp)


def epl(a, sample, loss="vi") -> float:
    """Average loss between ``a`` and every draw of ``sample``."""
    s = _as_sample(sample)
    a = check_partition(a, n_items=s.n_items)
    spec = get_loss(loss)
    return float(np.mean([loss_value(a, z, spec) for z in s.draws]))


def epl_weighted(a, sample: WeightedSample, loss="vi") -> float:
    """Weighted average loss, normalised by the total weight."""
    a = check_partition(a, n_items=sample.n_items)
    spec = get_loss(loss)
    vals = np.array([loss_value(a, z, spec) for z in sample.uniques])
    w = np.asarray(sample.weights, dtype=float)
    return float(w @ vals / w.sum())


class EplState:
    """Candidate partition plus per-draw contingency tables for fast move evaluation.

    Parameters
    ----------
    a : array-like of int
        Starting partition, labels in ``1..k_up``.
    sample : WeightedSample
        Draws and weights. Rows need not be canonical or distinct.
    loss : str or LossSpec
    k_up : int
        Largest label the candidate may use.
    debug : bool
        Re-validate the cached tables against a full rebuild on every call.
    """

    def __init__(self, a, sample: WeightedSample, loss, k_up: int, debug: bool = False):
        self.loss = get_loss(loss)
        self.k_up = int(k_up)
        self.debug = debug
        draws = np.asarray(sample.uniques)
        self.n_items = draws.shape[1]
        a = check_partition(a, k_up=self.k_up, n_items=self.n_items)
        self.labels = a - 1
        self.draws = canonicalize_rows(draws) - 1
        self.kz = int(self.draws.max()) + 1
        self.weights = np.asarray(sample.weights, dtype=float)
        self.total_weight = float(self.weights.sum())
        self._wn = self.weights / self.total_weight
        self.f1, self.f2, self.f3 = self.loss.tabulate(self.n_items + 1)
        self._rows = np.arange(self.draws.shape[0])
        self.evaluations = 0
        self.rebuild()

    def rebuild(self):
        """Recompute every cached quantity from the labels."""
        n_draws = self.draws.shape[0]
        k, kz = self.k_up, self.kz
        # counts[t, h, g]: items in group h of draw t and group g of the candidate
        flat = (self._rows[:, None] * kz + self.draws) * k + self.labels[None, :]
        self.counts = np.bincount(flat.ravel(), minlength=n_draws * kz * k).reshape(
            n_draws, kz, k
        )
        self.sizes = np.bincount(self.labels, minlength=k)
        self.s1 = self.f1[self.counts].sum(axis=(1, 2))
        self.s2 = float(self.f2[self.sizes].sum())
        col_sizes = self.counts.sum(axis=2)
        self.s3 = self.f3[col_sizes].sum(axis=1)

    def check(self):
        """Raise if the cached tables disagree with a rebuild."""
        counts, sizes, s1 = self.counts, self.sizes, self.s1
        self.rebuild()
        if not (np.array_equal(counts, self.counts) and np.array_equal(sizes, self.sizes)):
            raise RuntimeError("cached contingency tables are inconsistent with the candidate")
        if not np.allclose(s1, self.s1, rtol=0, atol=1e-8):
            raise RuntimeError("cached loss sums drifted from their exact values")

    @property
    def partition(self) -> np.ndarray:
        return self.labels + 1

    @property
    def psi(self) -> float:
        """Current estimated expected posterior loss."""
        per_draw = self.loss.combine(self.s1, self.s2, self.s3, self.n_items)
        return float(self._wn @ per_draw)

    def per_draw_losses(self) -> np.ndarray:
        return np.asarray(self.loss.combine(self.s1, self.s2, self.s3, self.n_items), dtype=float)

    def deltas(self, i: int, targets=None) -> np.ndarray:
        """Change in the estimate for moving item ``i`` to each target label.

        ``targets`` are 1-based labels (default: all ``1..k_up``). The entry for
        the item's current label is exactly 0. Nothing is committed.
        """
        if self.debug:
            self.check()
        r = int(self.labels[i])
        v = self.draws[:, i]
        block = self.counts[self._rows, v]  # (T, k_up), contiguous per draw
        if targets is None:
            tgt = np.arange(self.k_up)
            col = block
        else:
            tgt = np.asarray(targets, dtype=np.int64) - 1
            col = block[:, tgt]
        n_r = block[:, r]
        f1 = self.f1
        d1 = (f1[col + 1] - f1[col]) + (f1[n_r - 1] - f1[n_r])[:, None]
        m = self.sizes[tgt]
        m_r = self.sizes[r]
        d2 = (self.f2[m + 1] - self.f2[m]) + (self.f2[m_r - 1] - self.f2[m_r])
        stay = tgt == r
        d1[:, stay] = 0.0
        d2 = np.where(stay, 0.0, d2)
        before = self.loss.combine(self.s1, self.s2, self.s3, self.n_items)
        after = self.loss.combine(
            self.s1[:, None] + d1, self.s2 + d2[None, :], self.s3[:, None], self.n_items
        )
        out = self._wn @ (after - np.asarray(before)[:, None])
        out[stay] = 0.0
        self.evaluations += tgt.size
        return out

    def commit(self, i: int, s: int):
        """Move item ``i`` to label ``s`` (1-based) and update the caches."""
        if not 1 <= s <= self.k_up:
            raise ValueError(f"target label {s} outside 1..{self.k_up}")
        r = int(self.labels[i])
        s0 = s - 1
        if s0 == r:
            return
        v = self.draws[:, i]
        rows = self._rows
        n_r = self.counts[rows, v, r]
        n_s = self.counts[rows, v, s0]
        f1 = self.f1
        self.s1 = self.s1 + (f1[n_r - 1] - f1[n_r]) + (f1[n_s + 1] - f1[n_s])
        self.counts[rows, v, r] -= 1
        self.counts[rows, v, s0] += 1
        self.sizes[r] -= 1
        self.sizes[s0] += 1
        self.s2 = float(self.f2[self.sizes].sum())
        self.labels[i] = s0
        if self.debug:
            self.check()

    def resync(self):
        """Recompute the per-draw cell sums exactly, discarding rounding drift."""
        self.s1 = self.f1[self.counts].sum(axis=(1, 2))


def delta_epl(state: EplState, i: int, r: int, s: int) -> float:
    """``psi(a with i moved r -> s) - psi(a)`` without committing the move."""
    if state.labels[i] + 1 != r:
        raise ValueError(f"item {i} has label {state.labels[i] + 1}, not {r}")
    return float(state.deltas(i, [s])[0])


def commit_move(state: EplState, i: int, r: int, s: int) -> EplState:
    if state.labels[i] + 1 != r:
        raise ValueError(f"item {i} has label {state.labels[i] + 1}, not {r}")
    state.commit(i, s)
    return state


# --------------------------------------------------------------------------
# posterior summaries
# --------------------------------------------------------------------------


def psm(sample) -> np.ndarray:
    """Posterior similarity matrix: fraction of draws placing i and j together."""
    if isinstance(sample, WeightedSample):
        rows, w = sample.uniques, np.asarray(sample.weights, dtype=float)
    else:
        ws = compress(sample)
        rows, w = ws.uniques, ws.weights.astype(float)
    n = rows.shape[1]
    out = np.zeros((n, n))
    for z, weight in zip(rows, w):
        out += weight * (z[:, None] == z[None, :])
    return out / w.sum()


def binder_objective_psm(a, similarity) -> float:
    """``sum_{i<j} |1(a_i = a_j) - b_ij|``, the Binder expected loss written through the PSM."""
    a = check_partition(a)
    b = np.asarray(similarity, dtype=float)
    if b.shape != (a.size, a.size):
        raise ValueError(f"similarity matrix shape {b.shape} does not match {a.size} items")
    same = (a[:, None] == a[None, :]).astype(float)
    iu = np.triu_indices(a.size, k=1)
    return float(np.abs(same[iu] - b[iu]).sum())


def map_partition(sample) -> np.ndarray:
    """Canonical form of the draw with the highest recorded log posterior (first on ties)."""
    if isinstance(sample, WeightedSample):
        rows, lp = sample.uniques, sample.log_posterior
    else:
        s = _as_sample(sample)
        rows, lp = s.draws, s.log_posterior
    if lp is None:
        raise ValueError(
            "no log-posterior trace available; re-run the sampler with the trace enabled"
        )
    return canonicalize(rows[int(np.argmax(lp))])


def mode_partition(sample: WeightedSample) -> np.ndarray:
    """Most frequent distinct partition (first in canonical order on ties)."""
    return sample.uniques[int(np.argmax(sample.weights))].copy()


def k_histogram(sample) -> dict:
    """Relative frequency of the number of occupied groups across draws."""
    if isinstance(sample, WeightedSample):
        rows, w = sample.uniques, np.asarray(sample.weights, dtype=float)
    else:
        rows = _as_sample(sample).draws
        w = np.ones(rows.shape[0])
    ks = np.array([np.unique(z).size for z in rows])
    hist = {}
    for k in np.unique(ks):
        hist[int(k)] = float(w[ks == k].sum() / w.sum())
    return hist
