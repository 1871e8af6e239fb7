"""Bayes-action point estimates for random partitions.

Greedy minimisation of the expected posterior loss (Binder, VI, NVI, NID,
zero-one or user-defined decomposable losses) over MCMC samples of
partitions, together with a collapsed allocation sampler for Gaussian
mixtures, stochastic block models and latent block models.
"""

__version__ = "0.1.0"

from .epl import (
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
    psm,
)
from .estimators import AllocationSampler, BayesPartition
from .greedy import GivenInit, GreedyConfig, NoisyMapInit, RandomInit, greedy_minimize
from .losses import LossSpec, custom_loss, get_loss, loss_value
from .models import (
    AllocationPrior,
    GaussianMixture,
    LatentBlockModel,
    PriorOnly,
    StochasticBlockModel,
    log_alloc_prior,
    log_posterior,
)
from .partitions import (
    ContingencyTable,
    canonicalize,
    contingency,
    enumerate_partitions,
    equivalent,
)
from .sampler import ChainConfig, mh_step, propose, proposal_log_prob, run_chain, run_chain_lbm

__all__ = [
    "AllocationPrior", "AllocationSampler", "BayesPartition", "ChainConfig",
    "ContingencyTable", "EplState", "GaussianMixture", "GivenInit", "GreedyConfig",
    "LatentBlockModel", "LossSpec", "NoisyMapInit", "PosteriorSample", "PriorOnly",
    "RandomInit", "StochasticBlockModel", "WeightedSample", "binder_objective_psm",
    "canonicalize", "commit_move", "compress", "contingency", "custom_loss", "delta_epl",
    "enumerate_partitions", "epl", "epl_weighted", "equivalent", "get_loss",
    "greedy_minimize", "k_histogram", "log_alloc_prior", "log_posterior", "loss_value",
    "map_partition", "mh_step", "propose", "proposal_log_prob", "psm", "run_chain",
    "run_chain_lbm",
]
