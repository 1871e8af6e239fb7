"""Collapsed posteriors of allocations for three conjugate clustering models.

All model parameters (mixture weights, component means and precisions,
block connection probabilities) are integrated out analytically, so each
model only exposes the log marginal posterior of its allocation vector(s) up
to a constant. Everything is computed in log space via ``lgamma``/``betaln``.

Each model also builds a small mutable *chain state* holding sufficient
statistics per group, which the allocation sampler uses to evaluate a block
move by recomputing the terms of the two groups involved only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .validation import check_partition

_LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# allocation prior
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AllocationPrior:
    """Symmetric Dirichlet-multinomial prior on labelled allocations.

    Parameters
    ----------
    alpha : float
        Dirichlet concentration per component.
    k_prior : int, optional
        Dirichlet dimension. ``None`` uses the sampler's ``k_up``.
    k_rate : float, optional
        If set, the Dirichlet dimension is itself random with a Poisson
        prior of this rate truncated to ``1..k_up`` and summed out. The
        resulting prior on unlabelled partitions is spread evenly over the
        ``k_up!/(k_up-k)!`` labelings of a ``k``-group partition.
    """

    alpha: float = 1.0
    k_prior: int | None = None
    k_rate: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.k_prior is not None and self.k_prior < 1:
            raise ValueError("k_prior must be >= 1")
        if self.k_rate is not None and not self.k_rate > 0:
            raise ValueError("k_rate must be positive")

    def dimension(self, k_up: int | None) -> int:
        k = self.k_prior if self.k_prior is not None else k_up
        if k is None:
            raise ValueError("the prior needs k_prior or the sampler's k_up")
        return int(k)

    def k_terms(self, n: int, k_up: int | None) -> np.ndarray:
        """Log-prior term depending only on the number ``k`` of occupied groups (index ``k``)."""
        if self.k_rate is not None:
            if k_up is None:
                raise ValueError("a Poisson prior on the dimension needs k_up")
            return _poisson_k_terms(float(self.alpha), float(self.k_rate), int(n), int(k_up))
        return _fixed_k_terms(float(self.alpha), self.dimension(k_up), int(n))


@lru_cache(maxsize=64)
def _fixed_k_terms(alpha: float, dim: int, n: int) -> np.ndarray:
    out = np.full(dim + 1, math.lgamma(dim * alpha) - math.lgamma(n + dim * alpha))
    out[0] = -np.inf
    out.setflags(write=False)
    return out


@lru_cache(maxsize=64)
def _poisson_k_terms(alpha: float, rate: float, n: int, k_up: int) -> np.ndarray:
    dims = np.arange(1, k_up + 1)
    log_pk = dims * math.log(rate) - gammaln(dims + 1)
    log_pk -= logsumexp(log_pk)
    base = log_pk + gammaln(dims * alpha) - gammaln(n + dims * alpha)
    out = np.full(k_up + 1, -np.inf)
    for k in range(1, min(n, k_up) + 1):
        K = dims[k - 1 :]
        # K!/(K-k)! labelings of a k-group partition among K components,
        # divided by the k_up!/(k_up-k)! labelings used by the sampler
        terms = base[k - 1 :] + gammaln(K + 1) - gammaln(K - k + 1)
        out[k] = logsumexp(terms) - (math.lgamma(k_up + 1) - math.lgamma(k_up - k + 1))
    out.setflags(write=False)
    return out


def log_alloc_prior(z, prior: AllocationPrior, k_up: int | None = None) -> float:
    """Collapsed Dirichlet-multinomial log prior of a labelled allocation vector."""
    z = check_partition(z)
    sizes = np.unique(z, return_counts=True)[1]
    k = sizes.size
    if prior.k_rate is None:
        dim = prior.dimension(k_up)
        if k > dim:
            raise ValueError(f"{k} occupied groups exceed the prior's {dim} components")
    elif k_up is None or k > k_up:
        raise ValueError("occupied groups exceed k_up")
    a = prior.alpha
    groups = float(np.sum(gammaln(sizes + a)) - k * math.lgamma(a))
    return float(prior.k_terms(z.size, k_up)[k] + groups)


class _PriorTracker:
    """Incremental prior bookkeeping shared by all chain states."""

    def __init__(self, prior: AllocationPrior, n: int, k_up: int):
        self.alpha = prior.alpha
        self.lga = math.lgamma(prior.alpha)
        # more occupied groups than Dirichlet components has prior mass 0
        self.k_terms = prior.k_terms(n, k_up).tolist()
        if len(self.k_terms) < k_up + 1:
            self.k_terms += [-math.inf] * (k_up + 1 - len(self.k_terms))

    def group(self, n: int) -> float:
        return math.lgamma(n + self.alpha) - self.lga if n else 0.0

    def total(self, sizes) -> float:
        k = sum(1 for s in sizes if s)
        return self.k_terms[k] + sum(self.group(s) for s in sizes if s)

    def delta(self, n_g: int, n_h: int, r: int, k: int) -> float:
        k_new = k - (n_g == r) + (n_h == 0)
        d = (
            self.group(n_g - r) + self.group(n_h + r) - self.group(n_g) - self.group(n_h)
        )
        if k_new != k:
            d += self.k_terms[k_new] - self.k_terms[k]
        return d


# --------------------------------------------------------------------------
# model specs
# --------------------------------------------------------------------------


def _group_ids(z, k_up=None):
    z = check_partition(z, k_up=k_up)
    return z - 1, int(z.max())


@dataclass(frozen=True, eq=False)
class PriorOnly:
    """Target equal to the allocation prior alone (no data)."""

    n_items: int
    prior: AllocationPrior = AllocationPrior()

    def log_marginal_likelihood(self, z) -> float:
        check_partition(z, n_items=self.n_items)
        return 0.0

    def log_posterior(self, z, k_up=None) -> float:
        return self.log_marginal_likelihood(z) + log_alloc_prior(z, self.prior, k_up)

    def chain_state(self, labels, k_up):
        return _PriorOnlyState(self, labels, k_up)


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Univariate Gaussian mixture with Normal-Gamma component priors.

    Per component, the precision follows ``Gamma(gamma, delta)`` (shape,
    rate) and the mean given the precision ``r`` is ``Normal(0, 1/(tau r))``.
    """

    data: np.ndarray
    tau: float = 0.01
    gamma: float = 0.5
    delta: float = 0.5
    prior: AllocationPrior = AllocationPrior(4.0)

    def __post_init__(self):
        y = np.asarray(self.data, dtype=float).reshape(-1)
        if y.size < 1:
            raise ValueError("need at least one observation")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        if min(self.tau, self.gamma, self.delta) <= 0:
            raise ValueError("tau, gamma and delta must be positive")
        object.__setattr__(self, "data", y)

    @property
    def n_items(self) -> int:
        return self.data.size

    def group_log_marginal(self, n, s, q):
        """Log marginal density of one group from its size, sum and sum of squares."""
        n = np.asarray(n, dtype=float)
        tau_n = self.tau + n
        gamma_n = self.gamma + 0.5 * n
        delta_n = self.delta + 0.5 * (q - s * s / tau_n)
        val = (
            -0.5 * n * _LOG_2PI
            + 0.5 * np.log(self.tau / tau_n)
            + gammaln(gamma_n)
            - math.lgamma(self.gamma)
            + self.gamma * math.log(self.delta)
            - gamma_n * np.log(delta_n)
        )
        return np.where(n > 0, val, 0.0)

    def log_marginal_likelihood(self, z) -> float:
        g, k = _group_ids(z)
        if g.size != self.n_items:
            raise ValueError(f"expected {self.n_items} allocations, got {g.size}")
        n = np.bincount(g, minlength=k)
        s = np.bincount(g, weights=self.data, minlength=k)
        q = np.bincount(g, weights=self.data**2, minlength=k)
        return float(self.group_log_marginal(n, s, q).sum())

    def log_posterior(self, z, k_up=None) -> float:
        return self.log_marginal_likelihood(z) + log_alloc_prior(z, self.prior, k_up)

    def chain_state(self, labels, k_up):
        return _GmmState(self, labels, k_up)


def _check_adjacency(adj) -> np.ndarray:
    a = np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be a square matrix")
    if not np.isin(a, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if not np.array_equal(a, a.T):
        raise ValueError("adjacency must be symmetric (undirected graph)")
    if np.any(np.diag(a)):
        raise ValueError("self-loops are not allowed")
    return a.astype(np.int64)


@dataclass(frozen=True, eq=False)
class StochasticBlockModel:
    """Undirected stochastic block model with Beta priors on block connection probabilities.

    Each unordered node pair is one Bernoulli observation.
    """

    adjacency: np.ndarray
    beta_a: float = 0.5
    beta_b: float = 0.5
    prior: AllocationPrior = AllocationPrior(0.5)

    def __post_init__(self):
        object.__setattr__(self, "adjacency", _check_adjacency(self.adjacency))
        if min(self.beta_a, self.beta_b) <= 0:
            raise ValueError("Beta hyperparameters must be positive")

    @property
    def n_items(self) -> int:
        return self.adjacency.shape[0]

    def block_terms(self, edges, dyads):
        return betaln(edges + self.beta_a, dyads - edges + self.beta_b) - betaln(
            self.beta_a, self.beta_b
        )

    def block_stats(self, g, k):
        onehot = np.zeros((g.size, k), dtype=np.int64)
        onehot[np.arange(g.size), g] = 1
        e = onehot.T @ self.adjacency @ onehot
        e[np.diag_indices(k)] //= 2
        n = onehot.sum(axis=0)
        dyads = np.outer(n, n)
        dyads[np.diag_indices(k)] = n * (n - 1) // 2
        return e, dyads, n

    def log_marginal_likelihood(self, z) -> float:
        g, k = _group_ids(z)
        if g.size != self.n_items:
            raise ValueError(f"expected {self.n_items} allocations, got {g.size}")
        e, dyads, _ = self.block_stats(g, k)
        iu = np.triu_indices(k)
        return float(self.block_terms(e[iu], dyads[iu]).sum())

    def log_posterior(self, z, k_up=None) -> float:
        return self.log_marginal_likelihood(z) + log_alloc_prior(z, self.prior, k_up)

    def chain_state(self, labels, k_up):
        return _SbmState(self, labels, k_up)


@dataclass(frozen=True, eq=False)
class LatentBlockModel:
    """Bipartite latent block model for a binary matrix, rows and columns clustered separately."""

    matrix: np.ndarray
    beta_a: float = 0.5
    beta_b: float = 0.5
    row_prior: AllocationPrior = AllocationPrior(0.5)
    col_prior: AllocationPrior = AllocationPrior(0.5)

    def __post_init__(self):
        y = np.asarray(self.matrix)
        if y.ndim != 2 or y.size == 0:
            raise ValueError("data must be a non-empty binary matrix")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("matrix entries must be 0 or 1")
        object.__setattr__(self, "matrix", y.astype(np.int64))
        if min(self.beta_a, self.beta_b) <= 0:
            raise ValueError("Beta hyperparameters must be positive")

    @property
    def shape(self):
        return self.matrix.shape

    def block_terms(self, ones, cells):
        return betaln(ones + self.beta_a, cells - ones + self.beta_b) - betaln(
            self.beta_a, self.beta_b
        )

    def log_marginal_likelihood(self, r, c) -> float:
        gr, kr = _group_ids(r)
        gc, kc = _group_ids(c)
        if gr.size != self.shape[0] or gc.size != self.shape[1]:
            raise ValueError(
                f"allocations of length ({gr.size}, {gc.size}) do not match data {self.shape}"
            )
        ones = np.zeros((kr, kc))
        np.add.at(ones, (gr[:, None], gc[None, :]), self.matrix)
        cells = np.outer(np.bincount(gr, minlength=kr), np.bincount(gc, minlength=kc))
        return float(self.block_terms(ones, cells).sum())

    def log_posterior(self, allocations, k_up=None) -> float:
        r, c = allocations
        k_rows, k_cols = _pair(k_up)
        return (
            self.log_marginal_likelihood(r, c)
            + log_alloc_prior(r, self.row_prior, k_rows)
            + log_alloc_prior(c, self.col_prior, k_cols)
        )

    def chain_state(self, labels, k_up):
        return _LbmState(self, labels, k_up)


def _pair(k_up):
    if k_up is None or np.isscalar(k_up):
        return k_up, k_up
    k_rows, k_cols = k_up
    return k_rows, k_cols


def gmm_log_marginal_likelihood(z, model: GaussianMixture) -> float:
    return model.log_marginal_likelihood(z)


def sbm_log_marginal_likelihood(z, model: StochasticBlockModel) -> float:
    return model.log_marginal_likelihood(z)


def lbm_log_marginal_likelihood(r, c, model: LatentBlockModel) -> float:
    return model.log_marginal_likelihood(r, c)


def log_posterior(model, allocations, k_up=None) -> float:
    """Unnormalised log posterior of the allocations under ``model``."""
    return model.log_posterior(allocations, k_up)


# --------------------------------------------------------------------------
# chain states: sufficient statistics per label, updated by block moves
# --------------------------------------------------------------------------


class _StateBase:
    """Labels ``0..k_up-1`` plus group sizes and prior bookkeeping."""

    def __init__(self, labels, k_up, prior, n):
        self.k_up = int(k_up)
        self.labels = np.asarray(labels, dtype=np.int64).copy()
        if self.labels.size != n:
            raise ValueError(f"expected {n} allocations, got {self.labels.size}")
        if self.labels.min() < 0 or self.labels.max() >= self.k_up:
            raise ValueError(f"labels must lie in 1..{self.k_up}")
        self.sizes = np.bincount(self.labels, minlength=self.k_up).tolist()
        self.n_occupied = sum(1 for s in self.sizes if s)
        self.prior = _PriorTracker(prior, n, self.k_up)

    def _move_sizes(self, items, g, h):
        r = len(items)
        if self.sizes[h] == 0:
            self.n_occupied += 1
        self.sizes[g] -= r
        self.sizes[h] += r
        if self.sizes[g] == 0:
            self.n_occupied -= 1
        self.labels[items] = h

    def prior_delta(self, g, h, r):
        return self.prior.delta(self.sizes[g], self.sizes[h], r, self.n_occupied)


class _PriorOnlyState(_StateBase):
    def __init__(self, model, labels, k_up):
        super().__init__(labels, k_up, model.prior, model.n_items)

    def delta(self, items, g, h):
        return self.prior_delta(g, h, len(items))

    def apply(self, items, g, h):
        self._move_sizes(items, g, h)

    def log_posterior(self):
        return self.prior.total(self.sizes)


class _GmmState(_StateBase):
    def __init__(self, model, labels, k_up):
        super().__init__(labels, k_up, model.prior, model.n_items)
        self.model = model
        self.y = model.data.tolist()
        self._resync()
        m = model
        self._const = m.gamma * math.log(m.delta) - math.lgamma(m.gamma)

    def _resync(self):
        y = self.model.data
        self.s = np.bincount(self.labels, weights=y, minlength=self.k_up).tolist()
        self.q = np.bincount(self.labels, weights=y * y, minlength=self.k_up).tolist()

    def _group(self, n, s, q):
        if n == 0:
            return 0.0
        m = self.model
        tau_n = m.tau + n
        gamma_n = m.gamma + 0.5 * n
        delta_n = m.delta + 0.5 * (q - s * s / tau_n)
        return (
            -0.5 * n * _LOG_2PI
            + 0.5 * math.log(m.tau / tau_n)
            + math.lgamma(gamma_n)
            + self._const
            - gamma_n * math.log(delta_n)
        )

    def delta(self, items, g, h):
        y = self.y
        ds = 0.0
        dq = 0.0
        for i in items:
            ds += y[i]
            dq += y[i] * y[i]
        r = len(items)
        n, s, q = self.sizes, self.s, self.q
        d_lik = (
            self._group(n[g] - r, s[g] - ds, q[g] - dq)
            + self._group(n[h] + r, s[h] + ds, q[h] + dq)
            - self._group(n[g], s[g], q[g])
            - self._group(n[h], s[h], q[h])
        )
        return d_lik + self.prior_delta(g, h, r)

    def apply(self, items, g, h):
        y = self.y
        ds = sum(y[i] for i in items)
        dq = sum(y[i] * y[i] for i in items)
        self.s[g] -= ds
        self.q[g] -= dq
        self.s[h] += ds
        self.q[h] += dq
        self._move_sizes(items, g, h)
        if self.sizes[g] == 0:
            self.s[g] = 0.0
            self.q[g] = 0.0

    def log_posterior(self):
        self._resync()
        lik = sum(self._group(n, s, q) for n, s, q in zip(self.sizes, self.s, self.q))
        return lik + self.prior.total(self.sizes)


class _SbmState(_StateBase):
    def __init__(self, model, labels, k_up):
        super().__init__(labels, k_up, model.prior, model.n_items)
        self.model = model
        self.adj = model.adjacency
        self.edges, _, _ = model.block_stats(self.labels, self.k_up)

    def _dyads(self, n, k):
        d = n[k] * n
        d[k] = n[k] * (n[k] - 1) // 2
        return d

    def _terms(self, g, h, e, n):
        """Block terms touching group g or h (the (g, h) block counted once)."""
        tg = self.model.block_terms(e[g], self._dyads(n, g))
        th = self.model.block_terms(e[h], self._dyads(n, h))
        return tg.sum() + th.sum() - tg[h]

    def _moved_edges(self, items, g, h):
        items = np.asarray(items)
        to_groups = np.bincount(
            self.labels, weights=self.adj[items].sum(axis=0), minlength=self.k_up
        ).astype(np.int64)
        within = int(self.adj[np.ix_(items, items)].sum()) // 2
        e = self.edges.copy()
        d = to_groups
        rest = [k for k in range(self.k_up) if k != g and k != h]
        e[g, rest] -= d[rest]
        e[h, rest] += d[rest]
        e[rest, g] = e[g, rest]
        e[rest, h] = e[h, rest]
        g_to_i = d[g] - 2 * within  # edges between the remaining part of g and I
        e_gh = self.edges[g, h] - d[h] + g_to_i
        e[g, h] = e[h, g] = e_gh
        e[g, g] = self.edges[g, g] - d[g] + within
        e[h, h] = self.edges[h, h] + d[h] + within
        return e

    def delta(self, items, g, h):
        r = len(items)
        e_new = self._moved_edges(items, g, h)
        n = np.asarray(self.sizes, dtype=np.int64)
        n_new = n.copy()
        n_new[g] -= r
        n_new[h] += r
        d_lik = self._terms(g, h, e_new, n_new) - self._terms(g, h, self.edges, n)
        return float(d_lik) + self.prior_delta(g, h, r)

    def apply(self, items, g, h):
        self.edges = self._moved_edges(items, g, h)
        self._move_sizes(items, g, h)

    def log_posterior(self):
        n = np.asarray(self.sizes, dtype=np.int64)
        dyads = np.outer(n, n)
        dyads[np.diag_indices(self.k_up)] = n * (n - 1) // 2
        iu = np.triu_indices(self.k_up)
        lik = self.model.block_terms(self.edges[iu], dyads[iu]).sum()
        return float(lik) + self.prior.total(self.sizes)


class _LbmSide(_StateBase):
    """One side (rows or columns) of a latent block model chain state."""

    def __init__(self, parent, axis, labels, k_up, prior, n):
        super().__init__(labels, k_up, prior, n)
        self.parent = parent
        self.axis = axis

    def delta(self, items, g, h):
        return self.parent._delta(self.axis, items, g, h) + self.prior_delta(g, h, len(items))

    def apply(self, items, g, h):
        self.parent._apply(self.axis, items, g, h)
        self._move_sizes(items, g, h)

    def log_posterior(self):
        return self.parent.log_posterior()


class _LbmState:
    def __init__(self, model, labels, k_up):
        r, c = labels
        k_rows, k_cols = _pair(k_up)
        self.model = model
        self.rows = _LbmSide(self, 0, r, k_rows, model.row_prior, model.shape[0])
        self.cols = _LbmSide(self, 1, c, k_cols, model.col_prior, model.shape[1])
        # data oriented so that axis 0 is the side being moved
        self._data = (model.matrix, model.matrix.T)
        ones = np.zeros((self.rows.k_up, self.cols.k_up))
        np.add.at(ones, (self.rows.labels[:, None], self.cols.labels[None, :]), model.matrix)
        self.ones = ones

    def _sides(self, axis):
        return (self.rows, self.cols) if axis == 0 else (self.cols, self.rows)

    def _ones(self, axis):
        return self.ones if axis == 0 else self.ones.T

    def _shifted(self, axis, items, g):
        moving, other = self._sides(axis)
        per_cell = self._data[axis][np.asarray(items)].sum(axis=0)
        return np.bincount(other.labels, weights=per_cell, minlength=other.k_up)

    def _delta(self, axis, items, g, h):
        moving, other = self._sides(axis)
        ones = self._ones(axis)
        d = self._shifted(axis, items, g)
        r = len(items)
        m = np.asarray(other.sizes, dtype=float)
        n_g, n_h = moving.sizes[g], moving.sizes[h]
        bt = self.model.block_terms
        before = bt(ones[g], n_g * m).sum() + bt(ones[h], n_h * m).sum()
        after = bt(ones[g] - d, (n_g - r) * m).sum() + bt(ones[h] + d, (n_h + r) * m).sum()
        return float(after - before)

    def _apply(self, axis, items, g, h):
        d = self._shifted(axis, items, g)
        ones = self._ones(axis)
        ones[g] -= d
        ones[h] += d

    def log_posterior(self):
        nr = np.asarray(self.rows.sizes, dtype=float)
        nc = np.asarray(self.cols.sizes, dtype=float)
        lik = self.model.block_terms(self.ones, np.outer(nr, nc)).sum()
        return float(lik) + self.rows.prior.total(self.rows.sizes) + self.cols.prior.total(
            self.cols.sizes
        )
