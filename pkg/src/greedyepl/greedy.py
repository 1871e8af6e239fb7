"""Greedy single-item reallocation to minimise the expected posterior loss."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .epl import EplState, WeightedSample, map_partition, mode_partition
from .losses import get_loss
from .partitions import canonical_key, canonicalize
from .validation import check_partition, max_groups

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RandomInit:
    """Independent uniform labels in ``1..k0`` (``k0=None`` means ``k_up``)."""

    k0: int | None = None


@dataclass(frozen=True)
class NoisyMapInit:
    """MAP draw with ``ceil(fraction * N)`` random items given uniform labels in ``1..k_up``.

    Without a log-posterior trace the most frequent draw stands in for the MAP.
    """

    fraction: float = 0.1


@dataclass(frozen=True)
class GivenInit:
    partition: tuple


@dataclass
class GreedyConfig:
    """Settings for :func:`greedy_minimize`.

    ``init`` is either one initialisation used for every restart, a list
    cycled over restarts, or ``"mixed"``: the first half of the restarts
    start from a noisy MAP and the rest from uniform random labels.
    """

    k_up: int
    restarts: int = 10
    init: object = "mixed"
    noise_frac: float = 0.1
    max_sweeps: int = 100
    seed: int | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.k_up < 1:
            raise ValueError("k_up must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if not 0.0 <= self.noise_frac <= 1.0:
            raise ValueError("noise_frac must lie in [0, 1]")

    def inits(self) -> list:
        if self.init == "mixed":
            n_map = self.restarts // 2
            return [NoisyMapInit(self.noise_frac)] * n_map + [RandomInit(self.k_up)] * (
                self.restarts - n_map
            )
        if self.init == "random":
            return [RandomInit(self.k_up)] * self.restarts
        if self.init == "noisy-map":
            return [NoisyMapInit(self.noise_frac)] * self.restarts
        if isinstance(self.init, (RandomInit, NoisyMapInit, GivenInit)):
            return [self.init] * self.restarts
        seq = list(self.init)
        return [seq[j % len(seq)] for j in range(self.restarts)]


@dataclass
class EplReport:
    partition: np.ndarray
    epl: float
    loss_kind: str
    evaluations: int = 0

    @property
    def n_groups(self) -> int:
        return int(np.unique(self.partition).size)


@dataclass
class RestartResult:
    partition: np.ndarray
    epl: float
    sweeps: int
    converged: bool
    evaluations: int
    trace: list = field(default_factory=list)


@dataclass
class GreedyResult:
    best: EplReport
    per_restart: list
    seed: int | None = None


def init_partition(init, sample: WeightedSample, k_up: int, rng) -> np.ndarray:
    """Starting partition for one restart."""
    n = sample.n_items
    if isinstance(init, GivenInit):
        return check_partition(np.asarray(init.partition), k_up=k_up, n_items=n)
    if isinstance(init, RandomInit):
        k0 = k_up if init.k0 is None else init.k0
        if not 1 <= k0 <= k_up:
            raise ValueError(f"RandomInit k0={k0} outside 1..{k_up}")
        return rng.integers(1, k0 + 1, size=n)
    if isinstance(init, NoisyMapInit):
        if not 0.0 <= init.fraction <= 1.0:
            raise ValueError("noise fraction must lie in [0, 1]")
        if sample.log_posterior is not None:
            base = map_partition(sample)
        else:
            base = canonicalize(mode_partition(sample))
        base = base.copy()
        m = math.ceil(init.fraction * n)
        if m:
            idx = rng.choice(n, size=m, replace=False)
            base[idx] = rng.integers(1, k_up + 1, size=m)
        return base
    raise TypeError(f"unknown initialisation {init!r}")


def best_move(state: EplState, i: int, tol: float = 1e-11):
    """Best target label for item ``i`` and the resulting change in the estimate.

    Returns the current label with delta 0 unless some move lowers the
    estimate by more than ``tol``; among (near-)equal best moves the lowest
    label wins.
    """
    d = state.deltas(i)
    current = int(state.labels[i]) + 1
    dmin = float(d.min())
    scale = max(1.0, float(np.abs(d).max()))
    if dmin >= -tol * scale:
        return current, 0.0
    s_hat = int(np.flatnonzero(d <= dmin + tol * scale)[0]) + 1
    return s_hat, float(d[s_hat - 1])


def sweep(state: EplState, rng) -> bool:
    """Visit every item once in random order, committing each best move.

    Returns whether any item changed group.
    """
    changed = False
    for i in rng.permutation(state.n_items):
        s_hat, _ = best_move(state, int(i))
        if s_hat != state.labels[i] + 1:
            state.commit(int(i), s_hat)
            changed = True
    state.resync()
    return changed


def _run_restart(sample, loss, k_up, init, max_sweeps, rng, debug=False) -> RestartResult:
    a0 = init_partition(init, sample, k_up, rng)
    state = EplState(a0, sample, loss, k_up, debug=debug)
    trace = [state.psi]
    converged = False
    sweeps = 0
    while sweeps < max_sweeps:
        changed = sweep(state, rng)
        sweeps += 1
        trace.append(state.psi)
        if not changed:
            converged = True
            break
    if not converged:
        logger.warning("greedy restart stopped after %d sweeps without converging", sweeps)
    return RestartResult(
        canonicalize(state.partition), state.psi, sweeps, converged, state.evaluations, trace
    )


def greedy_minimize(sample: WeightedSample, loss, cfg: GreedyConfig, debug: bool = False) -> GreedyResult:
    """Multi-restart greedy search for the partition minimising the estimated loss."""
    if sample.n_unique == 0 or sample.total_weight <= 0:
        raise ValueError("cannot summarise an empty sample")
    spec = get_loss(loss)
    k_needed = max_groups(sample.uniques)
    if k_needed > cfg.k_up:
        raise ValueError(
            f"the sample contains a partition with {k_needed} groups, more than k_up={cfg.k_up}"
        )
    if spec.builtin and spec.name == "zeroone":
        # the estimate is flat away from sampled partitions; its minimiser is the modal draw
        mode = canonicalize(mode_partition(sample))
        psi = 1.0 - float(sample.weights.max()) / sample.total_weight
        return GreedyResult(EplReport(mode, psi, spec.name, 0), [], cfg.seed)
    seed = cfg.seed if cfg.seed is not None else int(np.random.SeedSequence().entropy % 2**63)
    children = np.random.SeedSequence(seed).spawn(cfg.restarts)
    inits = cfg.inits()

    def job(j):
        rng = np.random.default_rng(children[j])
        return _run_restart(sample, spec, cfg.k_up, inits[j], cfg.max_sweeps, rng, debug)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            results = list(pool.map(job, range(cfg.restarts)))
    else:
        results = [job(j) for j in range(cfg.restarts)]

    best = min(results, key=lambda r: (round(r.epl, 12), canonical_key(r.partition)))
    report = EplReport(
        best.partition, best.epl, spec.name, sum(r.evaluations for r in results)
    )
    return GreedyResult(report, results, seed)
