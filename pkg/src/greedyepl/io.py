"""Plain-text readers and writers for samples, traces, data sets and reports.

Sample file: a header ``N=<n> KUP=<k>`` then one partition per line as
comma-separated positive integer labels. Trace file: one log posterior per
line, aligned with the sample rows.

Data sets:
  gmm  one real value per line
  sbm  a ``nodes=<N>`` header, then undirected edges ``i j`` (1-based ids)
  lbm  dense 0/1 matrix, comma-separated
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input file."""


_HEADER = re.compile(r"^\s*N\s*=\s*(\d+)\s+KUP\s*=\s*(\d+)\s*$")


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if s and not s.startswith("#"):
                yield lineno, s


def write_sample(path, draws, k_up: int):
    draws = np.asarray(draws, dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"N={draws.shape[1]} KUP={int(k_up)}\n")
        for row in draws:
            fh.write(",".join(map(str, row.tolist())))
            fh.write("\n")


def read_sample(path):
    """Return ``(draws, k_up)``; labels are checked against the header."""
    it = _lines(path)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise DataError(f"{path}: empty sample file") from None
    m = _HEADER.match(header)
    if not m:
        raise DataError(f"{path}:{lineno}: expected header 'N=<n> KUP=<k>', got {header!r}")
    n, k_up = int(m.group(1)), int(m.group(2))
    rows = []
    for lineno, line in it:
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError:
            raise DataError(f"{path}:{lineno}: labels must be integers") from None
        if len(row) != n:
            raise DataError(f"{path}:{lineno}: expected {n} labels, found {len(row)}")
        bad = [x for x in row if x < 1 or x > k_up]
        if bad:
            raise DataError(f"{path}:{lineno}: label {bad[0]} outside 1..{k_up}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: sample file has no draws")
    return np.array(rows, dtype=np.int64), k_up


def write_trace(path, values):
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(f"{float(v)!r}\n")


def read_trace(path, n_rows: int | None = None):
    vals = []
    for lineno, line in _lines(path):
        try:
            vals.append(float(line))
        except ValueError:
            raise DataError(f"{path}:{lineno}: not a number: {line!r}") from None
    if n_rows is not None and len(vals) != n_rows:
        raise DataError(f"{path}: trace has {len(vals)} values for {n_rows} draws")
    return np.array(vals)


def read_gmm_data(path):
    vals = []
    for lineno, line in _lines(path):
        try:
            v = float(line)
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected one real number, got {line!r}") from None
        if not np.isfinite(v):
            raise DataError(f"{path}:{lineno}: value is not finite")
        vals.append(v)
    if not vals:
        raise DataError(f"{path}: no observations")
    return np.array(vals)


def read_edge_list(path):
    """Symmetric 0/1 adjacency matrix from a ``nodes=<N>`` edge list."""
    it = _lines(path)
    try:
        lineno, header = next(it)
    except StopIteration:
        raise DataError(f"{path}: empty edge list") from None
    m = re.match(r"^nodes\s*=\s*(\d+)$", header)
    if not m:
        raise DataError(f"{path}:{lineno}: expected header 'nodes=<N>', got {header!r}")
    n = int(m.group(1))
    adj = np.zeros((n, n), dtype=np.int64)
    for lineno, line in it:
        parts = line.split()
        try:
            i, j = (int(p) for p in parts)
        except ValueError:
            raise DataError(f"{path}:{lineno}: expected two node ids, got {line!r}") from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise DataError(f"{path}:{lineno}: node id outside 1..{n}")
        if i == j:
            raise DataError(f"{path}:{lineno}: self-loops are not allowed")
        adj[i - 1, j - 1] = adj[j - 1, i - 1] = 1
    return adj


def write_edge_list(path, adjacency):
    adj = np.asarray(adjacency)
    iu, ju = np.nonzero(np.triu(adj, k=1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"nodes={adj.shape[0]}\n")
        for i, j in zip(iu, ju):
            fh.write(f"{i + 1} {j + 1}\n")


def read_binary_matrix(path):
    rows = []
    for lineno, line in _lines(path):
        try:
            row = [int(tok) for tok in line.split(",")]
        except ValueError:
            raise DataError(f"{path}:{lineno}: entries must be 0 or 1") from None
        if any(x not in (0, 1) for x in row):
            raise DataError(f"{path}:{lineno}: entries must be 0 or 1")
        if rows and len(row) != len(rows[0]):
            raise DataError(f"{path}:{lineno}: expected {len(rows[0])} columns, found {len(row)}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty matrix")
    return np.array(rows, dtype=np.int64)


def write_matrix_csv(path, matrix, fmt="%.17g"):
    np.savetxt(path, np.asarray(matrix), delimiter=",", fmt=fmt)


def read_partition(path, n_items: int | None = None):
    """One partition: comma- or whitespace-separated labels on a single line."""
    tokens = []
    for lineno, line in _lines(path):
        try:
            tokens.extend(int(t) for t in re.split(r"[,\s]+", line) if t)
        except ValueError:
            raise DataError(f"{path}:{lineno}: labels must be integers") from None
    if n_items is not None and len(tokens) != n_items:
        raise DataError(f"{path}: expected {n_items} labels, found {len(tokens)}")
    return np.array(tokens, dtype=np.int64)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_report(path, report: dict):
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
