"""Figures written next to the CSV tables (PNG, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 3.6),
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}

METHOD_COLORS = {"admm": "#2F3EEA", "magnitude": "#E83F48"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _num(rows, key):
    return [float(r[key]) for r in rows]


def plot_graph_bench(rows, path):
    """Edge count, bytes and build time against near-field rate."""
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2)
        rates = _num(rows, "rate")
        ax1.plot(rates, [b / 1024 for b in _num(rows, "bytes")], "o-", label="CSR bytes")
        ax1.set_xlabel("near-field rate")
        ax1.set_ylabel("storage (KiB)")
        ax1b = ax1.twinx()
        ax1b.plot(rates, _num(rows, "nnz"), "s--", color="grey", label="edges")
        ax1b.set_ylabel("edges")
        ax2.plot(rates, [t * 1e3 for t in _num(rows, "build_seconds")], "o-", color="#1FD082")
        ax2.set_xlabel("near-field rate")
        ax2.set_ylabel("build time (ms)")
        return _save(fig, path)


def plot_nfr_sweep(rows, path):
    ok = [r for r in rows if str(r.get("status", "ok")) == "ok"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(_num(ok, "rate"), _num(ok, "accuracy"), "o-", label="held-out accuracy")
        ax.set_xlabel("near-field rate")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1.02)
        ax2 = ax.twinx()
        ax2.plot(_num(ok, "rate"), [b / 1024 for b in _num(ok, "bytes")], "s--", color="grey")
        ax2.set_ylabel("graph storage (KiB)")
        ax2.grid(False)
        return _save(fig, path)


def plot_rate_sweep(rows, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for method in dict.fromkeys(r["method"] for r in rows):
            sel = sorted((r for r in rows if r["method"] == method and str(r.get("status", "ok")) == "ok"),
                         key=lambda r: float(r["rate"]))
            ax.plot(_num(sel, "rate"), _num(sel, "accuracy"), "o-", label=method,
                    color=METHOD_COLORS.get(method))
        ax.set_xscale("log")
        ax.invert_xaxis()
        ax.set_xlabel("connection rate")
        ax.set_ylabel("held-out accuracy")
        ax.set_ylim(0, 1.02)
        ax.legend()
        return _save(fig, path)


def plot_training_curves(curves, path):
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2)
        epochs = [c["epoch"] for c in curves]
        ax1.semilogy(epochs, [max(c["loss"], 1e-12) for c in curves])
        ax1.set_xlabel("epoch")
        ax1.set_ylabel("training loss")
        ax2.plot(epochs, [c["train_accuracy"] for c in curves], label="train")
        ax2.plot(epochs, [c["test_accuracy"] for c in curves], label="test")
        masked = [c["epoch"] for c in curves if c["phase"] == "masked"]
        for ax in (ax1, ax2):
            for e in masked:
                ax.axvline(e, color="grey", ls=":", lw=1)
        ax2.set_xlabel("epoch")
        ax2.set_ylabel("accuracy")
        ax2.set_ylim(0, 1.02)
        ax2.legend()
        return _save(fig, path)


def plot_admm_trace(records, path):
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2)
        its = [r["iteration"] for r in records]
        names = list(dict.fromkeys(k for r in records for k in r["residual"]))
        for name in names:
            pts = [(r["iteration"], r["residual"][name]) for r in records if name in r["residual"]]
            ax1.semilogy([p[0] for p in pts], [max(p[1], 1e-16) for p in pts], label=name)
        ax1.set_xlabel("ADMM iteration")
        ax1.set_ylabel("||z - w||")
        ax1.legend(fontsize=6)
        ax2.plot(its, [r["lagrangian"] for r in records])
        ax2.set_xlabel("ADMM iteration")
        ax2.set_ylabel("augmented Lagrangian")
        return _save(fig, path)
