"""Command-line interface: ``greedyepl {sample,summarize,psm,report,compress-stats}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .epl import PosteriorSample, compress, k_histogram, psm
from .greedy import GivenInit, GreedyConfig, greedy_minimize
from .io import (
    DataError,
    read_binary_matrix,
    read_edge_list,
    read_gmm_data,
    read_partition,
    read_sample,
    read_trace,
    write_matrix_csv,
    write_report,
    write_sample,
    write_trace,
)
from .losses import BUILTIN_LOSSES
from .models import AllocationPrior, GaussianMixture, LatentBlockModel, StochasticBlockModel
from .sampler import ChainConfig, run_chain, run_chain_lbm

logger = logging.getLogger("greedyepl")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


class NumericalError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(float(text))
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _count(text):
    # accepts 1e6 style counts
    v = float(text)
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return int(v)


def _positive_float(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _fraction(text):
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {text}")
    return v


def _resolve_seed(args):
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % 2**63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _manifest(args, command, **extra):
    keys = sorted(k for k in vars(args) if k not in ("func", "verbose"))
    out = {
        "subcommand": command,
        "tool_version": __version__,
        "arguments": {k: getattr(args, k) for k in keys},
    }
    out.update(extra)
    return out


# --------------------------------------------------------------------------
# sample
# --------------------------------------------------------------------------


def _build_model(args):
    prior = AllocationPrior(args.alpha, k_rate=args.k_rate)
    if args.model == "gmm":
        return GaussianMixture(read_gmm_data(args.data), args.tau, args.gamma, args.delta, prior)
    if args.model == "sbm":
        return StochasticBlockModel(read_edge_list(args.data), args.beta, args.beta, prior)
    return LatentBlockModel(read_binary_matrix(args.data), args.beta, args.beta, prior, prior)


def cmd_sample(args):
    if args.kup < 2:
        raise UsageError("--kup must be at least 2 for the sampler")
    seed = _resolve_seed(args)
    model = _build_model(args)
    cfg = ChainConfig(args.keep, args.kup, burn_in=args.burnin, thin=args.thin, seed=seed)
    trace_path = args.trace or f"{args.out}.trace"
    if args.model == "lbm":
        rows, cols, trace = run_chain_lbm(model, cfg)
        write_sample(args.out, rows.sample.draws, args.kup)
        write_sample(f"{args.out}.cols", cols.sample.draws, args.kup)
        out = rows
    else:
        out = run_chain(model, cfg)
        write_sample(args.out, out.sample.draws, args.kup)
        trace = out.sample.log_posterior
    if not np.all(np.isfinite(trace)):
        raise NumericalError("the log-posterior trace contains non-finite values")
    write_trace(trace_path, trace)
    print(f"acceptance rate: {out.acceptance_rate:.6f}")
    print(f"wall time: {out.seconds:.2f} s")
    if args.manifest:
        write_report(args.manifest, _manifest(args, "sample", trace=trace_path))
    return EXIT_OK


# --------------------------------------------------------------------------
# summarize / psm / report / compress-stats
# --------------------------------------------------------------------------


def _load(args):
    draws, k_up = read_sample(args.sample)
    lp = read_trace(args.trace, draws.shape[0]) if getattr(args, "trace", None) else None
    return PosteriorSample(draws, lp), k_up


def _init_option(text, n_items):
    if text in ("mixed", "random", "noisy-map"):
        return text
    if text.startswith("file:"):
        return GivenInit(tuple(read_partition(text[5:], n_items).tolist()))
    raise UsageError(f"--init must be random, noisy-map, mixed or file:<path>, got {text!r}")


def _summarize(args, sample, k_up):
    k_up = args.kup if args.kup is not None else k_up
    if sample.draws.max() > k_up:
        raise DataError(f"label {int(sample.draws.max())} exceeds KUP={k_up}")
    seed = _resolve_seed(args)
    t0 = time.perf_counter()
    ws = compress(sample)
    t1 = time.perf_counter()
    cfg = GreedyConfig(
        k_up=k_up,
        restarts=args.restarts,
        init=_init_option(args.init, sample.n_items),
        noise_frac=args.noise_frac,
        max_sweeps=args.max_sweeps,
        seed=seed,
        n_jobs=args.threads,
    )
    result = greedy_minimize(ws, args.loss, cfg)
    t2 = time.perf_counter()
    if not math.isfinite(result.best.epl):
        raise NumericalError("the expected loss of the estimate is not finite")
    return ws, result, {"compress_s": t1 - t0, "greedy_s": t2 - t1}


def cmd_summarize(args):
    sample, k_up = _load(args)
    ws, result, timings = _summarize(args, sample, k_up)
    report = {
        "manifest": _manifest(args, "summarize", kup_effective=args.kup or k_up),
        "loss": result.best.loss_kind,
        "partition": result.best.partition,
        "n_groups": result.best.n_groups,
        "epl": result.best.epl,
        "restarts": [
            {
                "epl": r.epl,
                "sweeps": r.sweeps,
                "converged": r.converged,
                "evaluations": r.evaluations,
                "n_groups": int(np.unique(r.partition).size),
            }
            for r in result.per_restart
        ],
        "compression": {
            "draws": sample.n_draws,
            "unique": ws.n_unique,
            "ratio": ws.n_unique / sample.n_draws,
        },
        "k_histogram": k_histogram(ws),
        "timings": timings,
    }
    write_report(args.out, report)
    if args.out not in (None, "-"):
        print(f"K = {result.best.n_groups}, expected loss = {result.best.epl:.10g}")
    return EXIT_OK


def cmd_psm(args):
    sample, _ = _load(args)
    write_matrix_csv(args.out, psm(sample))
    return EXIT_OK


def _ordering(partition):
    """1-based item order grouping items by label, items in increasing order within a group."""
    return np.lexsort((np.arange(partition.size), partition)) + 1


def cmd_report(args):
    if args.reorder and args.data is None:
        raise UsageError("--reorder needs --data with the network the sample was drawn from")
    sample, k_up = _load(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hist = k_histogram(sample)
    with open(out_dir / "k_histogram.csv", "w", encoding="utf-8") as fh:
        fh.write("K,probability\n")
        for k, p in sorted(hist.items()):
            fh.write(f"{k},{float(p)!r}\n")
    if args.reorder:
        data = read_edge_list(args.data) if args.model == "sbm" else read_binary_matrix(args.data)
        if data.shape[0] != sample.n_items:
            raise DataError(
                f"data has {data.shape[0]} nodes/rows but the sample has {sample.n_items} items"
            )
        _, result, _ = _summarize(args, sample, k_up)
        order = _ordering(result.best.partition)
        np.savetxt(out_dir / "ordering.csv", order, fmt="%d")
        np.savetxt(out_dir / "partition.csv", result.best.partition, fmt="%d")
        reordered = data[np.ix_(order - 1, order - 1)] if args.model == "sbm" else data[order - 1]
        write_matrix_csv(out_dir / "reordered.csv", reordered, fmt="%d")
    print(f"wrote plot data to {out_dir}")
    return EXIT_OK


def cmd_compress_stats(args):
    sample, k_up = _load(args)
    ws = compress(sample)
    top = np.argsort(-ws.weights, kind="stable")[: args.top]
    report = {
        "draws": sample.n_draws,
        "unique": ws.n_unique,
        "ratio": ws.n_unique / sample.n_draws,
        "total_weight": int(ws.weights.sum()),
        "top": [
            {"weight": int(ws.weights[j]), "partition": ws.uniques[j]} for j in top
        ],
    }
    write_report(args.out, report)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_greedy_flags(p):
    p.add_argument("--loss", choices=sorted(BUILTIN_LOSSES), default="vi")
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--kup", type=_positive_int, default=None, help="defaults to the sample header")
    p.add_argument("--init", default="mixed", help="random | noisy-map | mixed | file:<path>")
    p.add_argument("--noise-frac", type=_fraction, default=0.1)
    p.add_argument("--max-sweeps", type=_positive_int, default=100)
    p.add_argument("--threads", type=_positive_int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="greedyepl", description="Bayes-action partitions from posterior samples."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run the allocation sampler")
    p.add_argument("data")
    p.add_argument("--model", choices=("gmm", "sbm", "lbm"), required=True)
    p.add_argument("--out", required=True, help="sample file")
    p.add_argument("--trace", help="log-posterior trace file (default: <out>.trace)")
    p.add_argument("--manifest", help="write the run manifest as JSON here")
    p.add_argument("--kup", type=int, default=50)
    p.add_argument("--keep", type=_count, default=10000)
    p.add_argument("--burnin", type=_nonneg_int, default=0)
    p.add_argument("--thin", type=_count, default=1)
    p.add_argument("--alpha", type=_positive_float, default=1.0)
    p.add_argument("--k-rate", type=_positive_float, default=None,
                   help="Poisson rate of a prior on the number of groups")
    p.add_argument("--tau", type=_positive_float, default=0.01)
    p.add_argument("--gamma", type=_positive_float, default=0.5)
    p.add_argument("--delta", type=_positive_float, default=0.5)
    p.add_argument("--beta", type=_positive_float, default=0.5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("summarize", help="find the partition minimising the expected loss")
    p.add_argument("sample")
    p.add_argument("--trace")
    p.add_argument("--out", default="-", help="JSON report (default: stdout)")
    p.add_argument("--seed", type=int, default=None)
    _add_greedy_flags(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("psm", help="posterior similarity matrix as CSV")
    p.add_argument("sample")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_psm)

    p = sub.add_parser("report", help="K histogram and node orderings for plotting")
    p.add_argument("sample")
    p.add_argument("--trace")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--data", help="edge list (sbm) or 0/1 CSV (lbm)")
    p.add_argument("--model", choices=("sbm", "lbm"), default="sbm")
    p.add_argument("--reorder", action="store_true",
                   help="emit an ordering that groups nodes by the optimal partition")
    p.add_argument("--seed", type=int, default=None)
    _add_greedy_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compress-stats", help="distinct partitions and their weights")
    p.add_argument("sample")
    p.add_argument("--trace")
    p.add_argument("--top", type=_positive_int, default=5)
    p.add_argument("--out", default="-")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_compress_stats)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError, OverflowError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
