"""Slow reference implementations used to check the fast paths.

Nothing here calls into the code it is meant to check: every function is a
direct loop over the defining formula.
"""

from __future__ import annotations

import cmath
import itertools
import math

import numpy as np


def naive_dft_magnitude(x) -> np.ndarray:
    n = len(x)
    out = np.empty(n)
    for m in range(n):
        acc = 0j
        for i in range(n):
            acc += x[i] * cmath.exp(-2j * math.pi * i * m / n)
        out[m] = abs(acc)
    return out


def brute_force_edges(z, K: int) -> dict[tuple[int, int], float]:
    """Every ordered pair within distance ``K`` with ``z_i > z_j``, mapped to its weight."""
    edges = {}
    n = len(z)
    for i in range(n):
        for j in range(n):
            if i != j and abs(i - j) <= K and z[i] > z[j]:
                edges[(i, j)] = (z[i] - z[j]) / (i - j)
    return edges


def dense_from_edges(edges: dict, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    for (i, j), w in edges.items():
        a[i, j] = w
        a[j, i] = -w
    return a


def dense_aggregate(a: np.ndarray, hops: int) -> np.ndarray:
    m = np.eye(len(a)) + a
    return np.linalg.matrix_power(m, hops) @ np.ones(len(a))


def naive_conv1d(x, w, b) -> np.ndarray:
    batch, c_in, length = x.shape
    c_out, _, k = w.shape
    p = (k - 1) // 2
    out = np.zeros((batch, c_out, length))
    for bi in range(batch):
        for o in range(c_out):
            for pos in range(length):
                acc = b[o]
                for c in range(c_in):
                    for t in range(k):
                        src = pos + t - p
                        if 0 <= src < length:
                            acc += w[o, c, t] * x[bi, c, src]
                out[bi, o, pos] = acc
    return out


def exhaustive_projection(v, budget: int) -> np.ndarray:
    """Closest point with at most ``budget`` nonzeros, by trying every support."""
    v = np.asarray(v, dtype=float)
    n = v.size
    best, best_d = np.zeros_like(v), float(np.sum(v * v))
    for size in range(1, min(budget, n) + 1):
        for support in itertools.combinations(range(n), size):
            cand = np.zeros_like(v)
            idx = list(support)
            cand[idx] = v[idx]
            d = float(np.sum((v - cand) ** 2))
            # relative margin: equal-magnitude ties keep the earlier support
            if d < best_d * (1 - 1e-12):
                best, best_d = cand, d
    return best


def best_subset_support(target, k: int) -> frozenset:
    """Support of the best ``k``-sparse least-squares fit to ``target``."""
    target = np.asarray(target, dtype=float)
    best, best_d = None, math.inf
    for support in itertools.combinations(range(target.size), k):
        d = float(np.sum(np.delete(target, support) ** 2))
        if d < best_d * (1 - 1e-12):
            best, best_d = frozenset(support), d
    return best


def central_difference(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by central differences (``x`` is perturbed in place and restored)."""
    g = np.zeros_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        fp = f()
        flat[i] = old - eps
        fm = f()
        flat[i] = old
        gflat[i] = (fp - fm) / (2 * eps)
    return g


def rel_error(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return 0.0 if scale == 0 else float(np.linalg.norm(a - b) / scale)


def lagrangian_reference(w, z, eta, rho, loss) -> float:
    """Augmented Lagrangian of a single identity-operator block, written term by term."""
    total = loss
    for wi, zi, ei in zip(np.ravel(w), np.ravel(z), np.ravel(eta)):
        total += ei * (zi - wi) + rho / 2 * (zi - wi) ** 2
    return float(total)
