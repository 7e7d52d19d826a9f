"""Command-line entry point: ``spectragraph <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .admm import AdmmRecord, AdmmTrace, PruneConfig
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import ConfigError, defaults, format_schema, load_config
from .datasets import TaskSpec, load_task_spectra
from .graph import benchmark_rates
from .harness import TrainConfig, run_training, sweep_connection_rate, sweep_near_field_rate
from .nn.models import build_model
from .report import format_report, load_report, save_report, write_csv, write_json
from .signals import IngestError

log = logging.getLogger("spectragraph")

# CLI dest -> config key for options that simply override a setting
OVERRIDES = {
    "dataset": "dataset", "data": "data_path", "classes": "classes", "seg_len": "seg_len",
    "overlap": "overlap", "nfr": "near_field_rate", "k": "K", "half_spectrum": "half_spectrum",
    "model": "model", "test_ratio": "test_ratio", "split_by": "split_by",
    "samples_per_class": "samples_per_class", "epochs": "epochs", "batch_size": "batch_size",
    "lr": "lr", "prune_rate": "prune_rate", "prune_method": "prune_method", "rho": "rho",
    "rho_growth": "rho_growth", "admm_outer_iters": "admm_outer_iters",
    "w_inner_steps": "w_inner_steps", "retrain_epochs": "retrain_epochs",
    "warmup": "admm_warmup_epochs", "prune_biases": "prune_biases",
    "prune_node_scale": "prune_node_scale", "rates": "rates", "methods": "methods", "jobs": "jobs",
    "seed": "seed", "deterministic": "deterministic",
}


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _words(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _global_options(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=d, help="random seed")
    g.add_argument("--deterministic", action="store_true", default=d,
                   help="sequential, bit-reproducible evaluation")
    g.add_argument("--config", default=d, help="flat key = value configuration file")
    g.add_argument("--out", default=d, help="output directory (default: ./out)")
    g.add_argument("-v", "--verbose", action="store_true", default=d)


def _task_options(p):
    g = p.add_argument_group("task")
    g.add_argument("--task", "--dataset", dest="dataset", choices=["synth", "bonn", "csv"])
    g.add_argument("--data", help="Bonn root directory or CSV path")
    g.add_argument("--classes", help="class subsets, e.g. A,E")
    g.add_argument("--seg-len", type=int)
    g.add_argument("--overlap", type=int)
    g.add_argument("--nfr", type=float, help="near-field rate")
    g.add_argument("--k", type=int, help="neighborhood distance (overrides --nfr)")
    g.add_argument("--half-spectrum", action="store_true", default=None)
    g.add_argument("--model", choices=["mlp", "gnn", "ssgcnet"])
    g.add_argument("--test-ratio", type=float)
    g.add_argument("--split-by", choices=["segment", "record"])
    g.add_argument("--samples-per-class", type=int)


def _train_options(p):
    g = p.add_argument_group("training")
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--jobs", type=int)
    g = p.add_argument_group("pruning")
    g.add_argument("--prune-rate", type=float, help="connection rate kept after pruning")
    g.add_argument("--prune-method", choices=["admm", "magnitude"])
    g.add_argument("--rho", type=float)
    g.add_argument("--rho-growth", type=float)
    g.add_argument("--admm-outer-iters", type=int)
    g.add_argument("--w-inner-steps", type=int)
    g.add_argument("--retrain-epochs", type=int)
    g.add_argument("--warmup", type=int, help="plain epochs before ADMM starts")
    g.add_argument("--prune-biases", action="store_true", default=None)
    g.add_argument("--prune-node-scale", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectragraph",
        description="Spectral neighborhood graphs, graph-convolutional classification and ADMM pruning.",
        epilog="Configuration keys (for --config):\n" + format_schema(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _global_options(p, suppress=True)
        return p

    p = add("ingest", "load a dataset and cache its segment spectra")
    _task_options(p)

    p = add("graph-bench", "edge count, storage and build time per near-field rate")
    p.add_argument("--n", type=int, default=256, help="spectrum length for synthetic spectra")
    p.add_argument("--count", type=int, default=100, help="number of synthetic spectra")
    p.add_argument("--rates", type=_floats)
    p.add_argument("--from-task", action="store_true", help="use the task's spectra instead")
    p.add_argument("--repeats", type=int, default=3, help="timing repeats (best is kept)")
    _task_options(p)

    for name, help_ in (("train", "train a model, optionally with pruning"),
                        ("prune", "ADMM-prune a trained checkpoint and retrain")):
        p = add(name, help_)
        _task_options(p)
        _train_options(p)
        if name == "prune":
            p.add_argument("--checkpoint", required=True, help="checkpoint written by train")

    p = add("sweep-nfr", "accuracy and graph cost across near-field rates")
    _task_options(p)
    _train_options(p)
    p.add_argument("--rates", type=_floats)

    p = add("sweep-rate", "accuracy across connection rates per pruning method")
    _task_options(p)
    _train_options(p)
    p.add_argument("--rates", type=_floats)
    p.add_argument("--methods", type=_words)

    p = add("report", "pretty-print a run report")
    p.add_argument("path", help="report JSON written by train/prune")
    p.add_argument("--figures", action="store_true", help="re-render figures next to the report")

    p = add("verify", "run the built-in oracle suites")
    p.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    return parser


def resolve_settings(args) -> dict:
    settings = defaults()
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    for dest, key in OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None and value is not False:
            settings[key] = value
    if getattr(args, "k", None) is not None:
        settings["near_field_rate"] = None
    elif getattr(args, "nfr", None) is not None:
        settings["K"] = None
    elif settings["K"] is not None:
        settings["near_field_rate"] = None
    return settings


def make_task(s: dict) -> TaskSpec:
    return TaskSpec(dataset=s["dataset"], data_path=s["data_path"], classes=s["classes"],
                    seg_len=s["seg_len"], overlap=s["overlap"], near_field_rate=s["near_field_rate"],
                    K=s["K"], model=s["model"], seed=s["seed"], test_ratio=s["test_ratio"],
                    samples_per_class=s["samples_per_class"], half_spectrum=s["half_spectrum"],
                    positive_class=s["positive_class"], split_by=s["split_by"])


def make_prune(s: dict, rate: float | None = None) -> PruneConfig | None:
    rate = s["prune_rate"] if rate is None else rate
    if rate is None:
        return None
    return PruneConfig(connection_rate=rate, rho=s["rho"], admm_outer_iters=s["admm_outer_iters"],
                       w_inner_steps=s["w_inner_steps"], retrain_epochs=s["retrain_epochs"],
                       rho_growth=s["rho_growth"], rho_max=s["rho_max"],
                       include_biases=s["prune_biases"], include_node_scale=s["prune_node_scale"])


def make_train(s: dict, prune=None) -> TrainConfig:
    return TrainConfig(epochs=s["epochs"], batch_size=s["batch_size"], lr=s["lr"], prune=prune,
                       prune_method=s["prune_method"], admm_warmup_epochs=s["admm_warmup_epochs"],
                       standardize=s["standardize"], deterministic=s["deterministic"], jobs=s["jobs"])


# ---------------------------------------------------------------- commands

def cmd_ingest(args, s, out: Path) -> int:
    task = make_task(s)
    spectra = load_task_spectra(task)
    np.savez(out / "spectra.npz",
             magnitudes=np.stack([sp.magnitudes for sp in spectra]) if spectra else np.zeros((0, task.nodes)),
             labels=np.array([sp.label for sp in spectra], dtype=np.int64),
             offsets=np.array([sp.offset for sp in spectra], dtype=np.int64),
             source_ids=np.array([sp.source_id for sp in spectra]))
    counts = {int(c): int(n) for c, n in zip(*np.unique([sp.label for sp in spectra], return_counts=True))}
    write_json(out / "ingest.json", {"task": asdict(task), "segments": len(spectra), "per_class": counts})
    print(f"{len(spectra)} spectra of length {task.nodes} -> {out / 'spectra.npz'}")
    return 0


def cmd_graph_bench(args, s, out: Path) -> int:
    rates = s["rates"] or [1.0, 0.5, 0.2, 0.1]
    if args.from_task:
        spectra = [sp.magnitudes for sp in load_task_spectra(make_task(s))]
    else:
        rng = np.random.default_rng(s["seed"])
        spectra = [rng.random(args.n) for _ in range(args.count)]
    rows = benchmark_rates(spectra, rates, repeats=args.repeats)
    write_csv(out / "graph_bench.csv", rows)
    plotting.plot_graph_bench(rows, out / "graph_bench.png")
    for r in rows:
        print(f"rate {r['rate']:<6} K {r['K']:<5} nnz {r['nnz']:<9} bytes {r['bytes']:<10} "
              f"time {r['build_seconds'] * 1e3:8.2f} ms  dense/this {r['dense_ratio']:.2f}")
    return 0


def _write_run(out: Path, stem: str, report, params, masks, spec) -> None:
    save_report(report, out / f"{stem}.json")
    save_checkpoint(out / f"{stem}.ckpt", spec, params, masks)
    write_json(out / f"{stem}.ckpt.json", {
        "model": spec.name,
        "digest": spec.digest().hex(),
        "connection_rate": report.config["prune"]["connection_rate"] if report.config.get("prune") else None,
        "param_table": report.param_table,
        "param_summary": report.param_summary,
    })
    if report.curves:
        write_csv(out / f"{stem}_curves.csv", report.curves)
        plotting.plot_training_curves(report.curves, out / f"{stem}_curves.png")
    if report.admm_trace:
        trace = AdmmTrace()
        for r in report.admm_trace:
            trace.append(AdmmRecord(**r))
        trace.to_csv(out / f"{stem}_admm_trace.csv")
        plotting.plot_admm_trace(report.admm_trace, out / f"{stem}_admm_trace.png")


def cmd_train(args, s, out: Path) -> int:
    task = make_task(s)
    cfg = make_train(s, make_prune(s))
    initial = None
    stem = "run"
    if args.command == "prune":
        if cfg.prune is None:
            raise ConfigError("prune needs --prune-rate (or prune_rate in the config)")
        spec = build_model(task.model, task.nodes, task.class_count)
        initial = load_checkpoint(args.checkpoint, spec).params
        stem = "pruned"
    report, params, masks = run_training(task, cfg, initial_params=initial)
    spec = build_model(task.model, task.nodes, task.class_count)
    _write_run(out, stem, report, params, masks, spec)
    print(format_report(report))
    print(f"\nwrote {out / (stem + '.json')} and {out / (stem + '.ckpt')}")
    return 0 if report.status == "ok" else 1


def cmd_sweep_nfr(args, s, out: Path) -> int:
    rates = s["rates"] or [1.0, 0.5, 0.2, 0.1]
    rows = sweep_near_field_rate(make_task(s), make_train(s, make_prune(s)), rates)
    write_csv(out / "sweep_nfr.csv", rows)
    plotting.plot_nfr_sweep(rows, out / "sweep_nfr.png")
    for r in rows:
        print(r)
    return 0


def cmd_sweep_rate(args, s, out: Path) -> int:
    rates = s["rates"] or [1.0, 0.5, 0.2, 0.1, 0.05, 0.01]
    prune = make_prune(s, rate=1.0)
    rows = sweep_connection_rate(make_task(s), make_train(s), rates, s["methods"], prune)
    write_csv(out / "sweep_rate.csv", rows)
    plotting.plot_rate_sweep(rows, out / "sweep_rate.png")
    for r in rows:
        print(r)
    return 0


def cmd_report(args, s, out: Path) -> int:
    report = load_report(args.path)
    print(format_report(report))
    if args.figures:
        base = Path(args.path).with_suffix("")
        if report.curves:
            plotting.plot_training_curves(report.curves, f"{base}_curves.png")
        if report.admm_trace:
            plotting.plot_admm_trace(report.admm_trace, f"{base}_admm_trace.png")
    return 0


def cmd_verify(args, s, out: Path) -> int:
    from .verify import SUITES, run_suites
    names = args.suite
    if names:
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; available: {sorted(SUITES)}")
    results = run_suites(seed=s["seed"], names=names)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<13} {r.detail}  ({r.seconds:.2f}s)")
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"ingest": cmd_ingest, "graph-bench": cmd_graph_bench, "train": cmd_train,
            "prune": cmd_train, "sweep-nfr": cmd_sweep_nfr, "sweep-rate": cmd_sweep_rate,
            "report": cmd_report, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve_settings(args)
        out = Path(args.out or "out")
        if args.command not in ("report", "verify"):
            out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, settings, out)
    except (ConfigError, ValueError, IngestError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1


if __name__ == "__main__":
    sys.exit(main())
