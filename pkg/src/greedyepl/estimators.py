"""scikit-learn style wrappers around the sampler and the greedy optimizer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from .epl import EplState, PosteriorSample, WeightedSample, compress, k_histogram, psm
from .greedy import GreedyConfig, greedy_minimize
from .losses import get_loss, loss_value
from .models import (
    AllocationPrior,
    GaussianMixture,
    LatentBlockModel,
    PriorOnly,
    StochasticBlockModel,
)
from .sampler import ChainConfig, run_chain, run_chain_lbm
from .validation import check_partition, check_sample, check_weights, max_groups


class BayesPartition(ClusterMixin, BaseEstimator):
    """Point estimate of a partition minimising the expected posterior loss.

    ``fit`` takes a ``T x N`` matrix of sampled partitions (one draw per row)
    and searches for the partition with the smallest average loss to the
    draws, using a multi-restart greedy single-item reallocation.

    Parameters
    ----------
    loss : {"vi", "binder", "nvi", "nid", "zeroone"} or LossSpec
    k_up : int, optional
        Largest label allowed in the estimate. Defaults to the largest number
        of groups found in the sample.
    restarts : int
    init : str or list
        ``"mixed"``, ``"random"``, ``"noisy-map"`` or explicit init objects.
    noise_frac : float
        Fraction of items perturbed in noisy-MAP starts.
    max_sweeps : int
    random_state : int, optional
    n_jobs : int
        Threads used for the restarts.

    Attributes
    ----------
    labels_ : ndarray of shape (N,)
        Canonical labels of the estimate (1-based).
    epl_ : float
    n_clusters_ : int
    compression_ratio_ : float
        Distinct partitions divided by draws.
    restarts_ : list of RestartResult
    seed_ : int
    """

    def __init__(
        self,
        loss="vi",
        k_up=None,
        restarts=10,
        init="mixed",
        noise_frac=0.1,
        max_sweeps=100,
        random_state=None,
        n_jobs=1,
    ):
        self.loss = loss
        self.k_up = k_up
        self.restarts = restarts
        self.init = init
        self.noise_frac = noise_frac
        self.max_sweeps = max_sweeps
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _weighted(self, X, sample_weight, log_posterior):
        if isinstance(X, WeightedSample):
            return X, X.n_unique / X.total_weight
        if sample_weight is not None:
            draws = check_sample(X)
            ws = WeightedSample(draws, check_weights(sample_weight, draws.shape[0]))
            return ws, 1.0
        sample = PosteriorSample(check_sample(X), log_posterior)
        ws = compress(sample)
        return ws, ws.n_unique / sample.n_draws

    def fit(self, X, y=None, sample_weight=None, log_posterior=None):
        """Find the Bayes action for the draws in ``X``.

        ``sample_weight`` gives per-row multiplicities (rows are then used as
        given, without deduplication). ``log_posterior`` is the optional trace
        used to locate the MAP draw for noisy-MAP starts.
        """
        ws, ratio = self._weighted(X, sample_weight, log_posterior)
        k_up = self.k_up if self.k_up is not None else max_groups(ws.uniques)
        cfg = GreedyConfig(
            k_up=int(k_up),
            restarts=self.restarts,
            init=self.init,
            noise_frac=self.noise_frac,
            max_sweeps=self.max_sweeps,
            seed=self.random_state,
            n_jobs=self.n_jobs,
        )
        result = greedy_minimize(ws, self.loss, cfg)
        self.weighted_sample_ = ws
        self.labels_ = result.best.partition
        self.epl_ = result.best.epl
        self.n_clusters_ = result.best.n_groups
        self.compression_ratio_ = ratio
        self.restarts_ = result.per_restart
        self.seed_ = result.seed
        self.k_up_ = cfg.k_up
        return self

    def transform(self, X):
        """Loss between the fitted estimate and each row of ``X``."""
        check_is_fitted(self, "labels_")
        draws = check_sample(X)
        spec = get_loss(self.loss)
        return np.array([loss_value(self.labels_, z, spec) for z in draws])

    def expected_loss(self, a) -> float:
        """Estimated expected posterior loss of an arbitrary partition under the fitted sample."""
        check_is_fitted(self, "labels_")
        a = check_partition(a, n_items=self.weighted_sample_.n_items)
        k_up = max(self.k_up_, int(a.max()))
        return EplState(a, self.weighted_sample_, self.loss, k_up).psi

    def similarity_matrix(self) -> np.ndarray:
        check_is_fitted(self, "labels_")
        return psm(self.weighted_sample_)

    def k_histogram(self) -> dict:
        check_is_fitted(self, "labels_")
        return k_histogram(self.weighted_sample_)


_MODELS = ("prior", "gmm", "sbm", "lbm")


class AllocationSampler(BaseEstimator):
    """Collapsed Metropolis-Hastings sampler for the group allocations.

    Parameters
    ----------
    model : {"gmm", "sbm", "lbm", "prior"}
    k_up : int
        Largest number of groups.
    n_keep, burn_in, thin : int
        Kept draws, discarded updates and updates between kept draws.
    alpha : float
        Dirichlet concentration of the allocation prior.
    k_rate : float, optional
        Rate of a Poisson prior on the number of groups; ``None`` fixes the
        dimension of the weight vector at ``k_up``.
    tau, gamma, delta : float
        Normal-Gamma hyperparameters (``gmm``).
    beta : float
        Symmetric Beta hyperparameter for block probabilities (``sbm``/``lbm``).
    random_state : int, optional

    Attributes
    ----------
    draws_ : ndarray of shape (n_keep, N)
        For ``lbm`` the row partitions; column partitions are in ``col_draws_``.
    log_posterior_ : ndarray of shape (n_keep,)
    acceptance_rate_ : float
    seed_ : int
    """

    def __init__(
        self,
        model="gmm",
        k_up=50,
        n_keep=1000,
        burn_in=0,
        thin=1,
        alpha=1.0,
        k_rate=None,
        tau=0.01,
        gamma=0.5,
        delta=0.5,
        beta=0.5,
        random_state=None,
    ):
        self.model = model
        self.k_up = k_up
        self.n_keep = n_keep
        self.burn_in = burn_in
        self.thin = thin
        self.alpha = alpha
        self.k_rate = k_rate
        self.tau = tau
        self.gamma = gamma
        self.delta = delta
        self.beta = beta
        self.random_state = random_state

    def build_model(self, X):
        prior = AllocationPrior(self.alpha, k_rate=self.k_rate)
        if self.model == "gmm":
            return GaussianMixture(np.asarray(X, dtype=float).reshape(-1), self.tau, self.gamma, self.delta, prior)
        if self.model == "sbm":
            return StochasticBlockModel(X, self.beta, self.beta, prior)
        if self.model == "lbm":
            return LatentBlockModel(X, self.beta, self.beta, prior, prior)
        if self.model == "prior":
            return PriorOnly(int(X), prior)
        raise ValueError(f"unknown model {self.model!r}; choose from {_MODELS}")

    def fit(self, X, y=None):
        """Run the chain on data ``X`` (a vector, an adjacency matrix, a 0/1 matrix, or N for ``prior``)."""
        model = self.build_model(X)
        cfg = ChainConfig(
            iterations=self.n_keep,
            k_up=self.k_up,
            burn_in=self.burn_in,
            thin=self.thin,
            seed=self.random_state,
        )
        if self.model == "lbm":
            rows, cols, trace = run_chain_lbm(model, cfg)
            self.draws_ = rows.sample.draws
            self.col_draws_ = cols.sample.draws
            out = rows
        else:
            out = run_chain(model, cfg)
            self.draws_ = out.sample.draws
            trace = out.sample.log_posterior
        self.log_posterior_ = trace
        self.acceptance_rate_ = out.acceptance_rate
        self.seed_ = out.seed
        self.seconds_ = out.seconds
        self.model_ = model
        return self

    def bayes_partition(self, **kwargs) -> BayesPartition:
        """Fit a :class:`BayesPartition` to the kept draws (row partitions for ``lbm``)."""
        check_is_fitted(self, "draws_")
        kwargs.setdefault("k_up", self.k_up)
        return BayesPartition(**kwargs).fit(self.draws_, log_posterior=self.log_posterior_)
