"""Loss functions between partitions, computed from contingency tables.

Every loss here can be written in the decomposable form

    L = f0( sum_gh f1(n_gh), sum_g f2(n_g), sum_h f3(n_h), N )

where ``n_gh`` are the contingency counts, ``n_g`` and ``n_h`` the group
sizes of the two partitions, and ``f1, f2, f3`` act on a single raw count.
That form is what lets the greedy optimizer update a loss in constant time
per draw when one item changes group. Entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .partitions import ContingencyTable, contingency, equivalent

# Tolerance below which an entropy is treated as zero.
_ENTROPY_EPS = 1e-12


def _xlog2x(n):
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(n > 0, n * np.log2(np.where(n > 0, n, 1.0)), 0.0)


def _as_table(t) -> ContingencyTable:
    if isinstance(t, ContingencyTable):
        return t
    return ContingencyTable.from_counts(t)


def entropy(sizes, n: int | None = None) -> float:
    """Entropy in bits of a partition with the given group sizes."""
    sizes = np.asarray(sizes, dtype=float)
    if (sizes < 0).any():
        raise ValueError("group sizes must be non-negative")
    total = float(sizes.sum()) if n is None else float(n)
    if total <= 0:
        raise ValueError("entropy of an empty set of items is undefined")
    p = sizes[sizes > 0] / total
    return float(-(p * np.log2(p)).sum()) + 0.0


def joint_entropy(t) -> float:
    """Entropy in bits of the cell distribution ``n_gh / N``."""
    t = _as_table(t)
    return entropy(t.counts.ravel(), t.total)


def mutual_information(t) -> float:
    """``H(a) + H(z) - H(a, z)``, with rounding residues below zero clamped."""
    t = _as_table(t)
    mi = entropy(t.row_sums, t.total) + entropy(t.col_sums, t.total) - joint_entropy(t)
    return max(mi, 0.0)


def loss_binder(t) -> float:
    """Binder's loss: the number of item pairs the two partitions disagree on."""
    t = _as_table(t)
    c = t.counts.astype(float)
    return float(
        0.5 * (t.row_sums.astype(float) ** 2).sum()
        + 0.5 * (t.col_sums.astype(float) ** 2).sum()
        - (c**2).sum()
    )


def loss_vi(t) -> float:
    """Variation of information ``2 H(a,z) - H(a) - H(z)`` in bits."""
    t = _as_table(t)
    vi = 2 * joint_entropy(t) - entropy(t.row_sums, t.total) - entropy(t.col_sums, t.total)
    return max(vi, 0.0)


def loss_nvi(t) -> float:
    """Normalised variation of information ``1 - I / H(a,z)``; 0 if both partitions are trivial."""
    t = _as_table(t)
    h = joint_entropy(t)
    if h <= _ENTROPY_EPS:
        return 0.0
    return float(min(max(1.0 - mutual_information(t) / h, 0.0), 1.0))


def loss_nid(t) -> float:
    """Normalised information distance ``1 - I / max(H(a), H(z))``; 0 if both are trivial."""
    t = _as_table(t)
    h = max(entropy(t.row_sums, t.total), entropy(t.col_sums, t.total))
    if h <= _ENTROPY_EPS:
        return 0.0
    return float(min(max(1.0 - mutual_information(t) / h, 0.0), 1.0))


def loss_zero_one(a, z) -> float:
    """0 if the partitions are equivalent, 1 otherwise."""
    return 0.0 if equivalent(a, z) else 1.0


# --------------------------------------------------------------------------
# decomposable representation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LossSpec:
    """A loss in decomposable form.

    ``f1``, ``f2`` and ``f3`` map a single non-negative integer count to a
    real number and must be finite at 0. ``f0(s1, s2, s3, n)`` combines the
    three aggregate sums and the number of items; it should broadcast over
    numpy arrays (a scalar-only ``f0`` is vectorized automatically, at a
    speed cost).
    """

    name: str
    f0: Callable
    f1: Callable
    f2: Callable
    f3: Callable
    builtin: bool = field(default=False, compare=False)

    def tabulate(self, n_max: int):
        """Lookup tables of ``f1, f2, f3`` over counts ``0..n_max``."""
        counts = np.arange(n_max + 1)
        tables = []
        for fname in ("f1", "f2", "f3"):
            f = getattr(self, fname)
            if self.builtin:
                vals = np.asarray(f(counts), dtype=float)
            else:
                vals = np.array([float(f(int(k))) for k in counts])
            bad = np.flatnonzero(~np.isfinite(vals))
            if bad.size:
                raise ValueError(
                    f"loss {self.name!r}: {fname}({int(bad[0])}) is not finite"
                )
            tables.append(vals)
        return tuple(tables)

    def combine(self, s1, s2, s3, n):
        """Evaluate ``f0`` elementwise over (broadcast) aggregate sums."""
        if self.builtin:
            return self.f0(s1, s2, s3, n)
        try:
            out = np.asarray(self.f0(s1, s2, s3, n), dtype=float)
            if out.shape == np.broadcast(np.asarray(s1), np.asarray(s2), np.asarray(s3)).shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.vectorize(lambda a, b, c: float(self.f0(a, b, c, n)))(s1, s2, s3)


def _square(n):
    return np.asarray(n, dtype=float) ** 2


def _occupied(n):
    return (np.asarray(n) > 0).astype(float)


def _binder_f0(s1, s2, s3, n):
    return 0.5 * s2 + 0.5 * s3 - s1


def _entropies(s1, s2, s3, n):
    logn = np.log2(n)
    h_joint = np.maximum(logn - s1 / n, 0.0)
    h_a = np.maximum(logn - s2 / n, 0.0)
    h_z = np.maximum(logn - s3 / n, 0.0)
    return h_joint, h_a, h_z


def _vi_f0(s1, s2, s3, n):
    return np.maximum((s2 + s3 - 2.0 * s1) / n, 0.0)


def _nvi_f0(s1, s2, s3, n):
    h_joint, h_a, h_z = _entropies(s1, s2, s3, n)
    mi = np.maximum(h_a + h_z - h_joint, 0.0)
    trivial = h_joint <= _ENTROPY_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 1.0 - mi / np.where(trivial, 1.0, h_joint)
    return np.where(trivial, 0.0, np.clip(val, 0.0, 1.0))


def _nid_f0(s1, s2, s3, n):
    h_joint, h_a, h_z = _entropies(s1, s2, s3, n)
    mi = np.maximum(h_a + h_z - h_joint, 0.0)
    h_max = np.maximum(h_a, h_z)
    trivial = h_max <= _ENTROPY_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 1.0 - mi / np.where(trivial, 1.0, h_max)
    return np.where(trivial, 0.0, np.clip(val, 0.0, 1.0))


def _zero_one_f0(s1, s2, s3, n):
    # one non-empty cell per row and per column <=> the table is a relabeling
    s1 = np.asarray(s1)
    return ((s1 != s2) | (s1 != s3)).astype(float)


BINDER = LossSpec("binder", _binder_f0, _square, _square, _square, builtin=True)
VI = LossSpec("vi", _vi_f0, _xlog2x, _xlog2x, _xlog2x, builtin=True)
NVI = LossSpec("nvi", _nvi_f0, _xlog2x, _xlog2x, _xlog2x, builtin=True)
NID = LossSpec("nid", _nid_f0, _xlog2x, _xlog2x, _xlog2x, builtin=True)
ZERO_ONE = LossSpec("zeroone", _zero_one_f0, _occupied, _occupied, _occupied, builtin=True)

BUILTIN_LOSSES = {"binder": BINDER, "vi": VI, "nvi": NVI, "nid": NID, "zeroone": ZERO_ONE}
_ALIASES = {"zero-one": "zeroone", "zero_one": "zeroone", "01": "zeroone", "map": "zeroone"}


def get_loss(loss) -> LossSpec:
    """Resolve a loss name (``binder``, ``vi``, ``nvi``, ``nid``, ``zeroone``) or pass a LossSpec through."""
    if isinstance(loss, LossSpec):
        return loss
    key = str(loss).lower()
    key = _ALIASES.get(key, key)
    try:
        return BUILTIN_LOSSES[key]
    except KeyError:
        raise ValueError(
            f"unknown loss {loss!r}; choose from {sorted(BUILTIN_LOSSES)}"
        ) from None


def custom_loss(f0, f1, f2, f3, name: str = "custom") -> LossSpec:
    """Build a user-defined decomposable loss."""
    return LossSpec(name, f0, f1, f2, f3)


def eval_decomposable(spec, t) -> float:
    """Evaluate a decomposable loss on a contingency table."""
    spec = get_loss(spec)
    t = _as_table(t)
    parts = []
    for fname, values, label in (
        ("f1", t.counts, "cell"),
        ("f2", t.row_sums, "row"),
        ("f3", t.col_sums, "column"),
    ):
        f = getattr(spec, fname)
        total = 0.0
        for idx, v in np.ndenumerate(values):
            fv = float(f(int(v)))
            if not np.isfinite(fv):
                raise ValueError(
                    f"loss {spec.name!r}: {fname} is not finite at {label} {idx} (count {int(v)})"
                )
            total += fv
        parts.append(total)
    value = float(np.asarray(spec.combine(parts[0], parts[1], parts[2], t.total)))
    if not np.isfinite(value):
        raise ValueError(f"loss {spec.name!r}: f0 returned a non-finite value")
    return value


_DIRECT = {
    "binder": loss_binder,
    "vi": loss_vi,
    "nvi": loss_nvi,
    "nid": loss_nid,
}


def loss_value(a, z, loss="vi") -> float:
    """Loss between two label vectors."""
    spec = get_loss(loss)
    if spec.name == "zeroone" and spec is ZERO_ONE:
        return loss_zero_one(a, z)
    t = contingency(a, z)
    if spec.builtin and spec.name in _DIRECT:
        return _DIRECT[spec.name](t)
    return eval_decomposable(spec, t)
