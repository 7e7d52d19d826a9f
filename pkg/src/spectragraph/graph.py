"""Weighted neighborhood field graphs over magnitude spectra.

Node ``i`` is frequency bin ``i``. For every pair of bins at most ``K`` apart
with ``z[i] > z[j]`` there is a directed edge ``i -> j`` with weight
``(z[i] - z[j]) / (i - j)``. The reverse entry of the adjacency matrix is the
negated weight, so only one direction is stored and ``A = S - S.T`` where
``S`` is the stored CSR matrix.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .signals import Spectrum

INDEX_DTYPE = np.int32


@dataclass(frozen=True)
class SparseGraph:
    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    weights: np.ndarray
    label: int = 0
    K: int = 0

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def nbytes(self) -> int:
        return int(self.row_ptr.nbytes + self.col_idx.nbytes + self.weights.nbytes)

    def rows(self) -> np.ndarray:
        """Row index of every stored entry (COO expansion of ``row_ptr``)."""
        return np.repeat(np.arange(self.n, dtype=INDEX_DTYPE), np.diff(self.row_ptr))

    def to_dense(self) -> np.ndarray:
        """Full antisymmetric adjacency matrix."""
        a = np.zeros((self.n, self.n))
        r = self.rows()
        a[r, self.col_idx] = self.weights
        a[self.col_idx, r] = -self.weights
        return a

    def validate(self) -> None:
        rp, ci = self.row_ptr, self.col_idx
        assert len(rp) == self.n + 1 and rp[0] == 0
        assert np.all(np.diff(rp) >= 0)
        assert rp[-1] == len(ci) == len(self.weights)
        if len(ci):
            assert ci.min() >= 0 and ci.max() < self.n
        r = self.rows()
        assert np.all(r != ci), "self-loop"
        assert np.all(self.weights != 0), "zero weight stored"
        if self.K:
            assert np.all(np.abs(r - ci) <= self.K)
        for i in range(self.n):
            assert np.all(np.diff(ci[rp[i]:rp[i + 1]]) > 0), f"row {i} columns not increasing"


@dataclass(frozen=True)
class GraphStats:
    nnz: int
    bytes: int
    build_seconds: float


def near_field_rate_to_K(rate: float, n: int) -> int:
    """Neighborhood distance for a near-field rate: ``ceil(rate * n)`` in ``[1, n-1]``."""
    if not 0 < rate <= 1:
        raise ValueError(f"near-field rate must lie in (0, 1], got {rate}")
    if n < 2:
        raise ValueError("need at least 2 nodes")
    # Fractions of a decimal string avoid ceil(0.1 * 30) == 4 style float artefacts.
    k = math.ceil(Fraction(repr(float(rate))) * n)
    return min(max(1, k), n - 1)


def _window(n: int, K: int):
    if n < 2:
        raise ValueError("need at least 2 nodes")
    if not 1 <= K <= n - 1:
        raise ValueError(f"K must lie in [1, {n - 1}], got {K}")
    # One column per signed offset, ordered so a row-major flatten keeps each
    # row's columns strictly increasing.
    offsets = np.concatenate([np.arange(-K, 0), np.arange(1, K + 1)])
    cols = np.arange(n)[:, None] + offsets[None, :]
    inside = (cols >= 0) & (cols < n)
    np.clip(cols, 0, n - 1, out=cols)
    # (i - j) == -offset
    return cols, inside, -offsets.astype(np.float64)


def build_wnfg(spectrum: Spectrum | np.ndarray, K: int) -> SparseGraph:
    """Build the single-direction CSR graph of a spectrum with distance cap ``K``."""
    if isinstance(spectrum, Spectrum):
        z, label = np.asarray(spectrum.magnitudes, dtype=np.float64), spectrum.label
    else:
        z, label = np.asarray(spectrum, dtype=np.float64), 0
    n = len(z)
    cols, inside, dist = _window(n, K)
    zi = z[:, None]
    zj = z[cols]
    keep = inside & (zi > zj)
    w = (zi - zj) / dist
    row_ptr = np.zeros(n + 1, dtype=INDEX_DTYPE)
    np.cumsum(keep.sum(axis=1), out=row_ptr[1:])
    return SparseGraph(n, row_ptr, cols[keep].astype(INDEX_DTYPE), w[keep], int(label), int(K))


def build_wnfg_batch(spectra, K: int) -> list[SparseGraph]:
    """``build_wnfg`` over equal-length spectra in one vectorised pass.

    Results are identical to calling :func:`build_wnfg` per spectrum; the
    batch form only removes per-call overhead.
    """
    spectra = list(spectra)
    if not spectra:
        return []
    labels = [s.label if isinstance(s, Spectrum) else 0 for s in spectra]
    z = np.stack([np.asarray(s.magnitudes if isinstance(s, Spectrum) else s, dtype=np.float64)
                  for s in spectra])
    m, n = z.shape
    cols, inside, dist = _window(n, K)
    zi = z[:, :, None]
    zj = z[:, cols]
    keep = inside[None] & (zi > zj)
    w = ((zi - zj) / dist)[keep]
    c = np.broadcast_to(cols, keep.shape)[keep].astype(INDEX_DTYPE)
    row_ptr = np.zeros((m, n + 1), dtype=INDEX_DTYPE)
    np.cumsum(keep.sum(axis=2), axis=1, out=row_ptr[:, 1:])
    bounds = np.concatenate([[0], np.cumsum(row_ptr[:, -1], dtype=np.int64)])
    return [SparseGraph(n, row_ptr[g], c[bounds[g]:bounds[g + 1]], w[bounds[g]:bounds[g + 1]],
                        int(labels[g]), int(K)) for g in range(m)]


def build_dense_baseline(spectrum: Spectrum | np.ndarray) -> SparseGraph:
    """Fully connected counterpart: every pair of bins may be joined (``K = n - 1``)."""
    n = spectrum.n if isinstance(spectrum, Spectrum) else len(spectrum)
    return build_wnfg(spectrum, n - 1)


def adjacency_matvec(graph: SparseGraph, v: np.ndarray) -> np.ndarray:
    """``A @ v`` for the antisymmetric adjacency implied by single-direction storage."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[0] != graph.n:
        raise ValueError(f"vector length {v.shape[0]} does not match {graph.n} nodes")
    r = graph.rows()
    c = graph.col_idx
    w = graph.weights
    if v.ndim == 1:
        out = np.bincount(r, weights=w * v[c], minlength=graph.n)
        out -= np.bincount(c, weights=w * v[r], minlength=graph.n)
        return out
    out = np.zeros_like(v)
    np.add.at(out, r, w[:, None] * v[c])
    np.subtract.at(out, c, w[:, None] * v[r])
    return out


def timed_build(spectrum, K: int) -> tuple[SparseGraph, GraphStats]:
    t0 = time.perf_counter()
    g = build_wnfg(spectrum, K)
    dt = time.perf_counter() - t0
    return g, graph_stats(g, dt)


def graph_stats(graph: SparseGraph, build_seconds: float = 0.0) -> GraphStats:
    return GraphStats(graph.nnz, graph.nbytes, float(build_seconds))


def _best_build_seconds(spectra, K: int, repeats: int):
    best, graphs = math.inf, None
    for _ in range(max(1, repeats)):
        t0 = time.perf_counter()
        graphs = build_wnfg_batch(spectra, K)
        best = min(best, time.perf_counter() - t0)
    return graphs, best


def benchmark_rates(spectra, rates, repeats: int = 3) -> list[dict]:
    """Edge count, CSR bytes and best-of-``repeats`` build time per near-field rate.

    Rows come back in decreasing rate order. ``dense_ratio`` is the storage
    of the fully connected (``K = n - 1``) graphs divided by this row's.
    """
    spectra = list(spectra)
    n = len(spectra[0].magnitudes if isinstance(spectra[0], Spectrum) else spectra[0])
    dense_bytes = sum(g.nbytes for g in build_wnfg_batch(spectra, n - 1))
    rows = []
    for rate in sorted((float(r) for r in rates), reverse=True):
        K = near_field_rate_to_K(rate, n)
        graphs, seconds = _best_build_seconds(spectra, K, repeats)
        nbytes = sum(g.nbytes for g in graphs)
        rows.append({"rate": rate, "K": K, "nnz": sum(g.nnz for g in graphs), "bytes": nbytes,
                     "build_seconds": seconds, "dense_ratio": dense_bytes / nbytes})
    return rows


def build_time_slope(spectra, Ks, repeats: int = 5) -> tuple[float, list[float]]:
    """Log-log slope of batch build time against ``K`` (1.0 means linear)."""
    times = [_best_build_seconds(spectra, int(K), repeats)[1] for K in Ks]
    slope = float(np.polyfit(np.log(np.asarray(Ks, dtype=float)), np.log(times), 1)[0])
    return slope, times


def dump_graph(graph: SparseGraph, path) -> None:
    """Write the ASCII debug format: ``n nnz K`` header then ``i j w`` lines."""
    lines = [f"{graph.n} {graph.nnz} {graph.K}"]
    for i, j, w in zip(graph.rows(), graph.col_idx, graph.weights):
        lines.append(f"{i} {j} {float(w)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path, label: int = 0) -> SparseGraph:
    text = Path(path).read_text().split("\n")
    n, nnz, K = (int(t) for t in text[0].split())
    triples = [ln.split() for ln in text[1:] if ln.strip()]
    if len(triples) != nnz:
        raise ValueError(f"{path}: header declares {nnz} edges, found {len(triples)}")
    r = np.array([int(t[0]) for t in triples], dtype=INDEX_DTYPE)
    c = np.array([int(t[1]) for t in triples], dtype=INDEX_DTYPE)
    w = np.array([float(t[2]) for t in triples])
    order = np.lexsort((c, r))
    row_ptr = np.zeros(n + 1, dtype=INDEX_DTYPE)
    np.cumsum(np.bincount(r, minlength=n), out=row_ptr[1:])
    return SparseGraph(n, row_ptr, c[order], w[order], label, K)
