"""Built-in oracle suites behind ``spectragraph verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import admm, oracles
from .graph import adjacency_matvec, build_wnfg
from .nn import layers as L
from .nn.models import Network, ssgcnet
from .signals import Segment, to_spectrum

GRAD_TOL = 1e-4


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def _spectrum(rng, n, distinct=True):
    z = rng.random(n) if distinct else rng.integers(0, 4, n).astype(float)
    return z


def suite_dft(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 65))
        x = rng.normal(size=n)
        got = to_spectrum(Segment(x, 0, "v", 0)).magnitudes
        worst = max(worst, oracles.rel_error(got, oracles.naive_dft_magnitude(x)))
    return worst < 1e-9, f"max relative error {worst:.2e}"


def suite_graph(rng):
    for t in range(30):
        n = int(rng.integers(2, 65))
        K = int(rng.integers(1, n))
        z = _spectrum(rng, n, distinct=t % 3 != 0)
        g = build_wnfg(z, K)
        g.validate()
        got = {(int(i), int(j)): w for i, j, w in zip(g.rows(), g.col_idx, g.weights)}
        if got != oracles.brute_force_edges(z, K):
            return False, f"edge set mismatch (n={n}, K={K})"
        a = oracles.dense_from_edges(oracles.brute_force_edges(z, K), n)
        if not np.array_equal(a + a.T, np.zeros_like(a)):
            return False, "dense reconstruction not antisymmetric"
    return True, "30 graphs match the pairwise builder"


def suite_matvec(rng):
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 65))
        z = rng.random(n)
        g = build_wnfg(z, int(rng.integers(1, n)))
        v = rng.normal(size=n)
        a = oracles.dense_from_edges(oracles.brute_force_edges(z, g.K), n)
        worst = max(worst, float(np.max(np.abs(adjacency_matvec(g, v) - a @ v))))
    return worst < 1e-12, f"max abs error {worst:.2e}"


def suite_aggregation(rng):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 65))
        z = rng.random(n)
        g = build_wnfg(z, int(rng.integers(1, n)))
        ref = oracles.dense_aggregate(oracles.dense_from_edges(oracles.brute_force_edges(z, g.K), n), 2)
        worst = max(worst, oracles.rel_error(L.aggregate(g, 2), ref))
    return worst < 1e-10, f"max relative error {worst:.2e} over 50 graphs"


def suite_projection(rng):
    for _ in range(200):
        n = int(rng.integers(1, 11))
        v = rng.normal(size=n)
        for budget in range(n + 1):
            p = admm.project_cardinality(v, budget)
            if not np.array_equal(p, oracles.exhaustive_projection(v, budget)):
                return False, f"projection differs from exhaustive search (n={n}, budget={budget})"
            if not np.array_equal(admm.project_cardinality(p, budget), p):
                return False, "projection not idempotent"
    return True, "200 vectors, every budget"


def _away_from_kinks(rng, shape, gap=1e-3):
    x = rng.normal(size=shape)
    x[np.abs(x) < gap] += 2 * gap
    return x


def layer_gradient_errors(rng, instances: int = 20) -> dict[str, float]:
    """Worst relative error between analytic and finite-difference gradients per layer type."""
    worst: dict[str, float] = {}

    def check(kind, f, pairs):
        for analytic, x in pairs:
            err = oracles.rel_error(analytic, oracles.central_difference(f, x))
            worst[kind] = max(worst.get(kind, 0.0), err)

    for _ in range(instances):
        # node scale
        h, theta = rng.normal(size=(3, 7)), rng.normal(size=7)
        r = rng.normal(size=(3, 7))
        dh, dth = L.node_scale_backward(r, h, theta)
        check("node_scale", lambda: float(np.sum(L.node_scale(h, theta)[0] * r)), [(dh, h), (dth, theta)])

        # conv1d
        k = int(rng.choice([1, 3, 5]))
        x = rng.normal(size=(2, 3, 8))
        w, b = rng.normal(size=(4, 3, k)), rng.normal(size=4)
        r = rng.normal(size=(2, 4, 8))
        out, cache = L.conv1d(x, w, b)
        dx, dw, db = L.conv1d_backward(r, cache)
        check("conv1d", lambda: float(np.sum(L.conv1d(x, w, b)[0] * r)), [(dx, x), (dw, w), (db, b)])

        # max pooling, pair members kept apart so the argmax is stable under eps
        x = rng.normal(size=(2, 3, 10))
        x[..., 1::2] = x[..., 0::2] + np.where(rng.random((2, 3, 5)) < 0.5, -1, 1) * rng.uniform(0.01, 1, (2, 3, 5))
        r = rng.normal(size=(2, 3, 5))
        _, cache = L.maxpool2(x)
        check("maxpool2", lambda: float(np.sum(L.maxpool2(x)[0] * r)), [(L.maxpool2_backward(r, cache), x)])

        # relu
        x = _away_from_kinks(rng, (4, 6))
        r = rng.normal(size=(4, 6))
        _, mask = L.relu(x)
        check("relu", lambda: float(np.sum(L.relu(x)[0] * r)), [(L.relu_backward(r, mask), x)])

        # dense
        x, w, b = rng.normal(size=(3, 5)), rng.normal(size=(5, 4)), rng.normal(size=4)
        r = rng.normal(size=(3, 4))
        _, cache = L.dense(x, w, b)
        dx, dw, db = L.dense_backward(r, cache)
        check("dense", lambda: float(np.sum(L.dense(x, w, b)[0] * r)), [(dx, x), (dw, w), (db, b)])

        # softmax cross-entropy
        logits, labels = rng.normal(size=(3, 5)) * 3, rng.integers(0, 5, 3)
        _, g = L.softmax_cross_entropy(logits, labels)
        check("softmax_xent", lambda: L.softmax_cross_entropy(logits, labels)[0], [(g, logits)])
    return worst


def suite_gradients(rng):
    worst = layer_gradient_errors(rng)
    net = Network(ssgcnet(n=32, channels=(2, 3), kernels=(3, 3), hidden=5))
    params = net.init_params(rng)
    x, y = rng.normal(size=(3, 32)), rng.integers(0, 2, 3)
    _, grads = net.loss_and_grad(params, x, y)
    worst["network"] = max(
        oracles.rel_error(grads[k], oracles.central_difference(lambda: net.loss(params, x, y), params[k]))
        for k in params)
    bad = {k: v for k, v in worst.items() if not v < GRAD_TOL}
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return not bad, detail


def suite_admm_toy(rng):
    hits = 0
    trials = 20
    for _ in range(trials):
        d = int(rng.integers(2, 11))
        k = int(rng.integers(1, d))
        target = rng.normal(size=d)

        def w_update(p, st):
            return {"w": (target + st.rho * st.z["w"] + st.eta["w"]) / (1 + st.rho)}

        _, st, tr = admm.run_admm({"w": np.zeros(d)}, {"w": k}, w_update,
                                  lambda p: 0.5 * float(np.sum((p["w"] - target) ** 2)), rho=1.0)
        ok = tr.records[-1].residual["w"] < 1e-6 and \
            frozenset(np.flatnonzero(st.z["w"]).tolist()) == oracles.best_subset_support(target, k)
        hits += ok
    return hits >= 0.95 * trials, f"{hits}/{trials} converged to the best subset"


def suite_eta_identity(rng):
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 20))
        w, eta, rho = rng.normal(size=d), rng.normal(size=d), float(rng.uniform(0.1, 5))
        z = admm.admm_z_step(w, eta, rho, int(rng.integers(0, d + 1)))
        eta_new = admm.admm_eta_step(eta, z, w, rho)
        delta = admm.lagrangian_value({"w": w}, {"w": z}, {"w": eta_new}, rho, 0.0) - \
            admm.lagrangian_value({"w": w}, {"w": z}, {"w": eta}, rho, 0.0)
        worst = max(worst, abs(delta - float(np.sum((eta_new - eta) ** 2)) / rho))
    return worst < 1e-10, f"max deviation {worst:.2e}"


SUITES = {
    "dft": suite_dft,
    "graph": suite_graph,
    "matvec": suite_matvec,
    "aggregation": suite_aggregation,
    "projection": suite_projection,
    "gradients": suite_gradients,
    "admm_toy": suite_admm_toy,
    "eta_identity": suite_eta_identity,
}


def run_suites(seed: int = 0, names=None) -> list[SuiteResult]:
    results = []
    for name in names or SUITES:
        rng = np.random.default_rng(np.random.SeedSequence([seed, len(results)]))
        t0 = time.perf_counter()
        try:
            ok, detail = SUITES[name](rng)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(SuiteResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
