"""Metropolis-Hastings allocation sampler with ejection/absorption block moves.

One proposal type is used: pick an occupied outbound group ``g``, an inbound
group ``h`` (occupied or empty), a number ``r`` of items and a uniformly
random ``r``-subset of ``g``; move that subset to ``h``. The target is the
collapsed posterior of the allocations, so the number of groups changes
freely within ``1..k_up``.

The hot loop uses :class:`random.Random` and plain Python containers; the
chain is fully determined by its seed.
"""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass

import numpy as np

from .epl import PosteriorSample
from .validation import check_partition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProposalMove:
    """Relocation of ``items`` (0-based indices) from group ``g`` to group ``h`` (1-based labels)."""

    g: int
    h: int
    items: tuple

    @property
    def r_count(self) -> int:
        return len(self.items)


@dataclass
class ChainConfig:
    """Chain length and bookkeeping.

    ``iterations`` draws are kept, one every ``thin`` updates, after
    ``burn_in`` discarded updates. ``init`` is ``None`` (uniform random
    labels in ``1..k_up``) or an explicit partition.
    """

    iterations: int
    k_up: int
    burn_in: int = 0
    thin: int = 1
    seed: int | None = None
    init: object = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


@dataclass
class ChainOutput:
    sample: PosteriorSample
    acceptance_rate: float
    seed: int | None = None
    seconds: float = 0.0


def _log_q(n_g: int, n_h: int, n_occ: int, k_up: int, r: int) -> float:
    """Log probability of proposing the move of a given ``r``-subset of ``g`` into ``h``."""
    if n_g < 1 or r < 1 or r > n_g:
        return -math.inf
    lp = -math.log(n_occ)
    if n_occ == 1 or n_occ == k_up:
        if n_occ == k_up and n_h == 0:
            return -math.inf
        lp -= math.log(k_up - 1)
    elif n_h > 0:
        lp -= math.log(2 * (n_occ - 1))
    else:
        lp -= math.log(2 * (k_up - n_occ))
    if n_h > 0:
        lp -= math.log(n_g)
    else:
        half = (n_g + 1) // 2
        if r > half:
            return -math.inf
        lp -= math.log(half)
    return lp - (math.lgamma(n_g + 1) - math.lgamma(r + 1) - math.lgamma(n_g - r + 1))


def _reverse_log_q(n_g: int, n_h: int, n_occ: int, k_up: int, r: int) -> float:
    """Log probability of sending the same items back from ``h`` to ``g`` after the move."""
    n_occ_new = n_occ - (n_g == r) + (n_h == 0)
    return _log_q(n_h + r, n_g - r, n_occ_new, k_up, r)


class _Groups:
    """Members of every label plus the occupied/empty label lists, all with O(1) updates."""

    def __init__(self, labels, k_up):
        self.k_up = k_up
        self.members = [[] for _ in range(k_up)]
        self.pos = [0] * len(labels)
        for i, g in enumerate(labels.tolist()):
            self.pos[i] = len(self.members[g])
            self.members[g].append(i)
        self.occ = [g for g in range(k_up) if self.members[g]]
        self.emp = [g for g in range(k_up) if not self.members[g]]
        self.where = [0] * k_up
        for j, g in enumerate(self.occ):
            self.where[g] = j
        for j, g in enumerate(self.emp):
            self.where[g] = j

    @staticmethod
    def _swap_remove(seq, where, x):
        j = where[x]
        last = seq.pop()
        if last != x:
            seq[j] = last
            where[last] = j

    def draw(self, rnd: random.Random):
        """Sample ``(g, h, items)`` from the proposal."""
        occ = self.occ
        n_occ = len(occ)
        k_up = self.k_up
        g = occ[int(rnd.random() * n_occ)]
        if n_occ == 1:
            j = int(rnd.random() * (k_up - 1))
            h = j + (j >= g)
        elif n_occ == k_up or rnd.random() < 0.5:
            j = int(rnd.random() * (n_occ - 1))
            h = occ[j + (j >= self.where[g])]
        else:
            h = self.emp[int(rnd.random() * len(self.emp))]
        n_g = len(self.members[g])
        if self.members[h]:
            r = int(rnd.random() * n_g) + 1
        else:
            r = int(rnd.random() * ((n_g + 1) // 2)) + 1
        items = rnd.sample(self.members[g], r)
        return g, h, items

    def move(self, items, g, h):
        src, dst, pos = self.members[g], self.members[h], self.pos
        if not dst:
            self._swap_remove(self.emp, self.where, h)
            self.where[h] = len(self.occ)
            self.occ.append(h)
        for i in items:
            j = pos[i]
            last = src.pop()
            if last != i:
                src[j] = last
                pos[last] = j
            pos[i] = len(dst)
            dst.append(i)
        if not src:
            self._swap_remove(self.occ, self.where, g)
            self.where[g] = len(self.emp)
            self.emp.append(g)


def _as_random(rng) -> random.Random:
    if isinstance(rng, random.Random):
        return rng
    if isinstance(rng, np.random.Generator):
        return random.Random(int(rng.integers(2**63)))
    return random.Random(rng)


def _check_sampler_args(n: int, k_up: int):
    if k_up < 2:
        raise ValueError("the allocation sampler requires k_up >= 2")
    if n < 2:
        raise ValueError("the allocation sampler needs at least two items")


def propose(z, k_up: int, rng=None):
    """Draw a proposal from partition ``z``; returns ``(z_new, move)``."""
    z = check_partition(z, k_up=k_up)
    _check_sampler_args(z.size, k_up)
    groups = _Groups(z - 1, k_up)
    g, h, items = groups.draw(_as_random(rng))
    z_new = z.copy()
    z_new[items] = h + 1
    return z_new, ProposalMove(g + 1, h + 1, tuple(sorted(items)))


def proposal_log_prob(z, move: ProposalMove, k_up: int) -> float:
    """Log probability that :func:`propose` from ``z`` produces ``move``."""
    z = check_partition(z, k_up=k_up)
    items = np.asarray(move.items, dtype=np.int64)
    if move.g == move.h:
        raise ValueError("outbound and inbound groups must differ")
    if not (1 <= move.h <= k_up and 1 <= move.g <= k_up):
        raise ValueError(f"group labels must lie in 1..{k_up}")
    if items.size == 0 or np.unique(items).size != items.size:
        raise ValueError("a move relocates a non-empty set of distinct items")
    if not np.all(z[items] == move.g):
        raise ValueError("all moved items must belong to the outbound group")
    sizes = np.bincount(z - 1, minlength=k_up)
    n_occ = int((sizes > 0).sum())
    return _log_q(int(sizes[move.g - 1]), int(sizes[move.h - 1]), n_occ, k_up, items.size)


def reverse_move(move: ProposalMove) -> ProposalMove:
    return ProposalMove(move.h, move.g, move.items)


def _mh_update(state, groups: _Groups, rnd: random.Random, k_up: int) -> bool:
    g, h, items = groups.draw(rnd)
    sizes = state.sizes
    n_g, n_h, n_occ, r = sizes[g], sizes[h], len(groups.occ), len(items)
    log_rev = _reverse_log_q(n_g, n_h, n_occ, k_up, r)
    if log_rev == -math.inf:
        # the move cannot be undone by a single proposal; rejecting keeps detailed balance
        return False
    log_ratio = log_rev - _log_q(n_g, n_h, n_occ, k_up, r) + state.delta(items, g, h)
    if log_ratio >= 0.0 or rnd.random() < math.exp(log_ratio):
        state.apply(items, g, h)
        groups.move(items, g, h)
        return True
    return False


def mh_step(z, model, k_up: int, rng=None):
    """One Metropolis-Hastings update from ``z``.

    Returns ``(z_next, accepted, log_posterior(z_next))``.
    """
    z = check_partition(z, k_up=k_up)
    _check_sampler_args(z.size, k_up)
    state = model.chain_state(z - 1, k_up)
    if not math.isfinite(state.log_posterior()):
        raise ValueError("the current partition has zero posterior probability")
    groups = _Groups(state.labels, k_up)
    accepted = _mh_update(state, groups, _as_random(rng), k_up)
    return state.labels + 1, accepted, state.log_posterior()


def _initial_labels(init, n, k_up, rnd):
    if init is None or (isinstance(init, str) and init == "random"):
        return np.array([int(rnd.random() * k_up) for _ in range(n)], dtype=np.int64)
    return check_partition(init, k_up=k_up, n_items=n) - 1


def _resolve_seed(seed):
    if seed is None:
        return int(np.random.SeedSequence().entropy % 2**63)
    return int(seed)


def run_chain(model, cfg: ChainConfig) -> ChainOutput:
    """Run the sampler on ``model`` and return the thinned draws with their log posteriors."""
    seed = _resolve_seed(cfg.seed)
    rnd = random.Random(seed)
    n, k_up = model.n_items, cfg.k_up
    if k_up < 2:
        raise ValueError("the allocation sampler requires k_up >= 2")
    labels = _initial_labels(cfg.init, n, k_up, rnd)
    state = model.chain_state(labels, k_up)
    if not math.isfinite(state.log_posterior()):
        raise ValueError("the initial partition has zero posterior probability")
    groups = _Groups(state.labels, k_up)
    frozen = n < 2

    draws = np.empty((cfg.iterations, n), dtype=np.int64)
    trace = np.empty(cfg.iterations)
    accepted = 0
    proposals = 0
    start = time.perf_counter()
    for _ in range(cfg.burn_in):
        if not frozen:
            accepted += _mh_update(state, groups, rnd, k_up)
            proposals += 1
    for t in range(cfg.iterations):
        for _ in range(cfg.thin):
            if not frozen:
                accepted += _mh_update(state, groups, rnd, k_up)
                proposals += 1
        draws[t] = state.labels + 1
        trace[t] = state.log_posterior()
    seconds = time.perf_counter() - start
    rate = accepted / proposals if proposals else 0.0
    logger.info("chain finished: %d updates, acceptance %.4f, %.1fs", proposals, rate, seconds)
    return ChainOutput(PosteriorSample(draws, trace, k_up), rate, seed, seconds)


def run_chain_lbm(model, cfg: ChainConfig):
    """Joint chain over row and column partitions of a latent block model.

    Each update flips a fair coin to move either the row or the column
    partition; acceptance uses the joint posterior. ``cfg.k_up`` may be an
    int or a ``(rows, cols)`` pair and ``cfg.init`` a ``(rows, cols)`` pair.

    Returns ``(row_output, col_output, joint_trace)``.
    """
    seed = _resolve_seed(cfg.seed)
    rnd = random.Random(seed)
    k_rows, k_cols = (cfg.k_up, cfg.k_up) if np.isscalar(cfg.k_up) else cfg.k_up
    if min(k_rows, k_cols) < 2:
        raise ValueError("the allocation sampler requires k_up >= 2")
    n_rows, n_cols = model.shape
    init_r, init_c = (None, None) if cfg.init is None else cfg.init
    r0 = _initial_labels(init_r, n_rows, k_rows, rnd)
    c0 = _initial_labels(init_c, n_cols, k_cols, rnd)
    state = model.chain_state((r0, c0), (k_rows, k_cols))
    if not math.isfinite(state.log_posterior()):
        raise ValueError("the initial partitions have zero posterior probability")
    sides = [
        (state.rows, _Groups(state.rows.labels, k_rows), k_rows, n_rows >= 2),
        (state.cols, _Groups(state.cols.labels, k_cols), k_cols, n_cols >= 2),
    ]

    rows = np.empty((cfg.iterations, n_rows), dtype=np.int64)
    cols = np.empty((cfg.iterations, n_cols), dtype=np.int64)
    trace = np.empty(cfg.iterations)
    counts = [0, 0]

    def update():
        side, groups, k_up, movable = sides[0 if rnd.random() < 0.5 else 1]
        if movable:
            counts[0] += _mh_update(side, groups, rnd, k_up)
            counts[1] += 1

    start = time.perf_counter()
    for _ in range(cfg.burn_in):
        update()
    for t in range(cfg.iterations):
        for _ in range(cfg.thin):
            update()
        rows[t] = state.rows.labels + 1
        cols[t] = state.cols.labels + 1
        trace[t] = state.log_posterior()
    seconds = time.perf_counter() - start
    rate = counts[0] / counts[1] if counts[1] else 0.0
    row_out = ChainOutput(PosteriorSample(rows, trace, k_rows), rate, seed, seconds)
    col_out = ChainOutput(PosteriorSample(cols, trace, k_cols), rate, seed, seconds)
    return row_out, col_out, trace
