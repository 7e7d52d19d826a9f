"""End-to-end training with interleaved ADMM pruning, evaluation and sweeps.

One epoch without pruning is a shuffled minibatch pass. With ADMM pruning
enabled, an epoch instead runs, for the convolution stage and then the fully
connected stage, ``admm_outer_iters`` cycles of: ``w_inner_steps`` Adam steps
on the penalised loss, followed by z- and eta-updates of that stage's blocks.
After the last epoch the weights are hard-masked to ``support(z)``, the Adam
state is reset, and the masked model is retrained.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timezone

import numpy as np

from . import admm
from .datasets import Standardizer, TaskSpec, load_task_spectra, stratified_split
from .graph import build_wnfg_batch, near_field_rate_to_K
from .nn.models import Network, build_model, cardinality_budget, count_params
from .nn.optim import AdamState, adam_step
from .report import Metrics, RunReport

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 50
    batch_size: int = 32
    lr: float = 1e-3
    prune: admm.PruneConfig | None = None
    prune_method: str = "admm"        # admm | magnitude
    admm_warmup_epochs: int = 0
    eval_every: int = 1
    standardize: bool = True
    deterministic: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0 or self.eval_every < 1:
            raise ValueError("epochs, batch_size, lr and eval_every must be positive")
        if self.prune_method not in ("admm", "magnitude"):
            raise ValueError("prune_method must be 'admm' or 'magnitude'")
        if not 0 <= self.admm_warmup_epochs <= self.epochs:
            raise ValueError("admm_warmup_epochs must lie in [0, epochs]")


@dataclass
class PreparedData:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    K: int
    graph_stats: dict
    build_seconds: float


def build_graphs(spectra, K: int, jobs: int = 1):
    """Graphs for every spectrum, in input order, plus total build seconds."""
    spectra = list(spectra)
    t0 = time.perf_counter()
    if jobs > 1 and len(spectra) > jobs:
        chunks = [spectra[i::jobs] for i in range(jobs)]
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda c: build_wnfg_batch(c, K), chunks))
        graphs = [None] * len(spectra)
        for i, part in enumerate(parts):
            graphs[i::jobs] = part
    else:
        graphs = build_wnfg_batch(spectra, K)
    return graphs, time.perf_counter() - t0


def prepare_data(task: TaskSpec, net: Network, cfg: TrainConfig | None = None) -> PreparedData:
    cfg = cfg or TrainConfig()
    spectra = load_task_spectra(task)
    if not spectra:
        raise ValueError("task produced no segments")
    n = spectra[0].n
    if n != net.spec.input_nodes:
        raise ValueError(f"segments give {n} nodes, model expects {net.spec.input_nodes}")
    K = task.resolve_K(n)
    jobs = 1 if cfg.deterministic else cfg.jobs
    graphs, build_seconds = build_graphs(spectra, K, jobs)
    x = net.features(graphs)
    y = np.array([s.label for s in spectra])

    rng = np.random.default_rng(np.random.SeedSequence([task.seed, 1]))
    groups = [s.source_id for s in spectra] if task.split_by == "record" else None
    tr, te = stratified_split(y, task.test_ratio, rng, groups)
    x_tr, x_te = x[tr], x[te]
    if cfg.standardize:
        sc = Standardizer().fit(x_tr)
        x_tr, x_te = sc.transform(x_tr), sc.transform(x_te)
    stats = {"graphs": len(graphs), "K": K, "nnz": int(sum(g.nnz for g in graphs)),
             "bytes": int(sum(g.nbytes for g in graphs)), "nodes": n}
    return PreparedData(x_tr, y[tr], x_te, y[te], K, stats, build_seconds)


def evaluate(net: Network, params: dict, x: np.ndarray, y: np.ndarray, positive: int = 1) -> Metrics:
    """Argmax predictions scored with ``positive`` as the seizure class."""
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    if not all(np.all(np.isfinite(v)) for v in params.values()):
        raise ValueError("parameters are not finite")
    return metrics_from_predictions(net.predict(params, x), y, positive)


def metrics_from_predictions(pred, y, positive: int = 1) -> Metrics:
    pred, y = np.asarray(pred), np.asarray(y)
    pos_t, pos_p = y == positive, pred == positive
    return Metrics.from_counts(int(np.sum(pos_t & pos_p)), int(np.sum(~pos_t & ~pos_p)),
                               int(np.sum(~pos_t & pos_p)), int(np.sum(pos_t & ~pos_p)))


def _batches(n: int, size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    return [order[i:i + size] for i in range(0, n, size)]


def _batch_stream(n: int, size: int, rng: np.random.Generator):
    while True:
        yield from _batches(n, size, rng)


class _Trainer:
    def __init__(self, net, data: PreparedData, cfg: TrainConfig, seed: int, positive: int):
        self.net, self.data, self.cfg, self.positive = net, data, cfg, positive
        self.rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
        self.params = net.init_params(np.random.default_rng(np.random.SeedSequence([seed, 2])))
        self.opt = AdamState(lr=cfg.lr)
        self.masks: dict | None = None
        self.curves: list[dict] = []
        self.trace = admm.AdmmTrace()
        self.prune_state: admm.PruneState | None = None
        pc = cfg.prune
        self.stages = net.spec.stages(pc.include_biases, pc.include_node_scale) if pc else []

    def grad_fn(self, params, idx):
        loss, grads = self.net.loss_and_grad(params, self.data.x_train[idx], self.data.y_train[idx])
        if not math.isfinite(loss):
            raise admm.DivergenceError(f"non-finite training loss {loss}")
        return loss, grads

    def plain_epoch(self):
        for idx in _batches(len(self.data.y_train), self.cfg.batch_size, self.rng):
            _, grads = self.grad_fn(self.params, idx)
            if self.masks:
                for name, m in self.masks.items():
                    grads[name] = grads[name] * m
            adam_step(self.params, grads, self.opt)
            if self.masks:
                admm.apply_masks(self.params, self.masks)

    def admm_epoch(self, epoch: int):
        pc, st = self.cfg.prune, self.prune_state
        stream = _batch_stream(len(self.data.y_train), self.cfg.batch_size, self.rng)
        for names in self.stages:
            stage = "fc" if all(n.startswith("fc") for n in names) else "conv"
            for _ in range(pc.admm_outer_iters):
                admm.admm_w_step(self.params, self.grad_fn, stream, st, self.opt, pc.w_inner_steps)
                residual, dual = admm.admm_update(self.params, st, names)
                loss = self.net.loss(self.params, self.data.x_train, self.data.y_train)
                lag = admm.lagrangian_value(self.params, st.z, st.eta, st.rho, loss, st.budgets, st.omega)
                self.trace.append(admm.AdmmRecord(len(self.trace), stage, loss, lag, residual, dual, st.rho))
        st.rho = min(st.rho * pc.rho_growth, max(pc.rho_max, pc.rho))

    def record(self, epoch: int, phase: str):
        d = self.data
        loss = self.net.loss(self.params, d.x_train, d.y_train)
        if not math.isfinite(loss):
            raise admm.DivergenceError(f"non-finite loss {loss} at epoch {epoch}")
        tr = float(np.mean(self.net.predict(self.params, d.x_train) == d.y_train))
        te = float(np.mean(self.net.predict(self.params, d.x_test) == d.y_test))
        self.curves.append({"epoch": epoch, "phase": phase, "loss": loss,
                            "train_accuracy": tr, "test_accuracy": te})


def _param_table(net: Network, params: dict, budgets: dict | None, masks: dict | None) -> tuple[list, dict]:
    counts = count_params(net.spec)
    masks = masks or {}
    table = []
    surviving_total = 0
    for name, total in zip(counts.layer_names, counts.layer_weights):
        row = {"layer": name, "total": total, "nonzero": int(np.count_nonzero(params[name]))}
        if budgets:
            row["budget"] = budgets[name]
        row["surviving"] = int(masks[name].sum()) if name in masks else total
        surviving_total += row["surviving"]
        table.append(row)

    def kept(suffix, full):
        hit = [m for k, m in masks.items() if k.endswith(suffix)]
        return full if not hit else full - sum(m.size for m in hit) + sum(int(m.sum()) for m in hit)

    non_train = kept(".b", counts.non_train)
    node_scale = kept(".theta", counts.node_scale)
    summary = {"non_train": counts.non_train, "node_scale": counts.node_scale,
               "tabulated_total": counts.tabulated_total, "total": counts.total,
               "surviving_non_train": non_train, "surviving_node_scale": node_scale,
               "tabulated_surviving": surviving_total + non_train,
               "trainable": counts.trainable,
               "surviving_trainable": counts.trainable - sum(counts.layer_weights) + surviving_total
               - (counts.non_train - non_train) - (counts.node_scale - node_scale)}
    return table, summary


def run_training(task: TaskSpec, cfg: TrainConfig, data: PreparedData | None = None,
                 initial_params: dict | None = None) -> tuple[RunReport, dict, dict | None]:
    """Execute the full train / prune / retrain pipeline.

    Returns ``(report, params, masks)``. A diverging loss stops the run and
    yields a partial report with ``status == "diverged"``.
    """
    t_start = time.perf_counter()
    net = Network(build_model(task.model, task.nodes, task.class_count))
    t0 = time.perf_counter()
    if data is None:
        data = prepare_data(task, net, cfg)
    prep_seconds = time.perf_counter() - t0

    trainer = _Trainer(net, data, cfg, task.seed, task.positive)
    if initial_params is not None:
        trainer.params = {k: np.array(v, dtype=np.float64, copy=True) for k, v in initial_params.items()}
    pc = cfg.prune
    shapes = net.spec.param_shapes()
    budgets = {name: cardinality_budget(pc.connection_rate, math.prod(shapes[name]))
               for group in trainer.stages for name in group} if pc else None
    report = RunReport(task=_jsonable(asdict(task)), config=_jsonable(asdict(cfg)),
                       model=net.spec.to_dict(), seed=task.seed)
    report.graph_stats = dict(data.graph_stats)

    t_train = time.perf_counter()
    try:
        for epoch in range(cfg.epochs):
            use_admm = pc is not None and cfg.prune_method == "admm" and epoch >= cfg.admm_warmup_epochs
            if use_admm:
                if trainer.prune_state is None:
                    trainer.prune_state = admm.PruneState.init(trainer.params, budgets, pc.rho)
                trainer.admm_epoch(epoch)
            else:
                trainer.plain_epoch()
            if (epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1:
                trainer.record(epoch, "admm" if use_admm else "train")

        if pc is not None:
            if cfg.prune_method == "admm":
                if trainer.prune_state is None:
                    trainer.prune_state = admm.PruneState.init(trainer.params, budgets, pc.rho)
                trainer.params, trainer.masks = admm.hard_mask_and_freeze(trainer.params, trainer.prune_state)
            else:
                trainer.params, trainer.masks = admm.magnitude_prune_baseline(
                    trainer.params, pc.connection_rate, list(budgets))
            trainer.opt.reset()
            trainer.record(cfg.epochs, "masked")
            for k in range(pc.retrain_epochs):
                trainer.plain_epoch()
                trainer.record(cfg.epochs + 1 + k, "retrain")
        report.metrics = asdict(evaluate(net, trainer.params, data.x_test, data.y_test, task.positive))
    except admm.DivergenceError as exc:
        report.status, report.error = "diverged", str(exc)
        log.error("training diverged: %s", exc)

    report.curves = trainer.curves
    report.admm_trace = [asdict(r) for r in trainer.trace.records]
    report.param_table, report.param_summary = _param_table(net, trainer.params, budgets, trainer.masks)
    report.timing = {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "graph_build_seconds": data.build_seconds,
        "prepare_seconds": prep_seconds,
        "train_seconds": time.perf_counter() - t_train,
        "total_seconds": time.perf_counter() - t_start,
    }
    return report, trainer.params, trainer.masks


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple)):
        return [_jsonable(v) for v in d]
    if isinstance(d, (np.integer,)):
        return int(d)
    if isinstance(d, (np.floating,)):
        return float(d)
    return d


# ----------------------------------------------------------------- sweeps

def sweep_near_field_rate(task: TaskSpec, cfg: TrainConfig, rates) -> list[dict]:
    """Accuracy and graph cost per near-field rate, same seed in every row."""
    rates = sorted(float(r) for r in rates)
    if len(rates) < 2:
        raise ValueError("need at least two rates")
    rows = []
    for rate in rates:
        t = replace(task, near_field_rate=rate, K=None)
        row = {"rate": rate, "K": near_field_rate_to_K(rate, t.nodes)}
        try:
            report, _, _ = run_training(t, cfg)
            row.update(accuracy=report.final_accuracy(), nnz=report.graph_stats["nnz"],
                       build_time=report.timing["graph_build_seconds"],
                       bytes=report.graph_stats["bytes"], status=report.status)
        except Exception as exc:  # one bad cell must not sink the sweep
            log.exception("sweep cell rate=%s failed", rate)
            row.update(accuracy=float("nan"), nnz="", build_time="", bytes="", status=f"error: {exc}")
        rows.append(row)
    return rows


def sweep_connection_rate(task: TaskSpec, cfg: TrainConfig, rates, methods=("admm", "magnitude"),
                          prune: admm.PruneConfig | None = None) -> list[dict]:
    """Train, prune and retrain once per ``method x rate`` on a shared dataset."""
    prune = prune or cfg.prune or admm.PruneConfig()
    rates = [float(r) for r in rates]
    if any(not 0 < r <= 1 for r in rates):
        raise ValueError("connection rates must lie in (0, 1]")
    net = Network(build_model(task.model, task.nodes, task.class_count))
    data = prepare_data(task, net, cfg)
    rows = []
    for method in methods:
        for rate in rates:
            c = replace(cfg, prune=replace(prune, connection_rate=rate), prune_method=method)
            row = {"method": method, "rate": rate}
            try:
                report, params, _ = run_training(task, c, data)
                s = report.param_summary
                row.update(accuracy=report.final_accuracy(),
                           surviving_params=s["surviving_trainable"],
                           surviving_weights=sum(r["surviving"] for r in report.param_table),
                           nonzero_weights=sum(r["nonzero"] for r in report.param_table),
                           status=report.status)
            except Exception as exc:
                log.exception("sweep cell %s rate=%s failed", method, rate)
                row.update(accuracy=float("nan"), surviving_params="", surviving_weights="",
                           nonzero_weights="", status=f"error: {exc}")
            rows.append(row)
    return rows


__all__ = ["TrainConfig", "PreparedData", "prepare_data", "evaluate", "run_training",
           "sweep_near_field_rate", "sweep_connection_rate", "metrics_from_predictions",
           "build_graphs"]
