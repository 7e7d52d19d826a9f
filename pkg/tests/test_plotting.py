from spectragraph import plotting


def _is_png(path):
    return path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_all_figures_render(tmp_path):
    bench = [{"rate": r, "nnz": n, "bytes": 12 * n, "build_seconds": 1e-3 * r} for r, n in
             [(1.0, 3000), (0.5, 2200), (0.1, 600)]]
    nfr = [{"rate": 0.1, "accuracy": 0.99, "bytes": 100, "status": "ok"},
           {"rate": 1.0, "accuracy": 1.0, "bytes": 500, "status": "ok"}]
    sweep = [{"method": m, "rate": r, "accuracy": a, "status": "ok"}
             for m, a in (("admm", 1.0), ("magnitude", 0.8)) for r in (0.5, 0.05)]
    curves = [{"epoch": e, "phase": p, "loss": 1 / (e + 1), "train_accuracy": 0.9, "test_accuracy": 0.8}
              for e, p in enumerate(["admm", "admm", "masked", "retrain"])]
    trace = [{"iteration": i, "residual": {"fc1.w": 0.1 / (i + 1)}, "lagrangian": 1.0 - 0.1 * i}
             for i in range(4)]
    paths = [plotting.plot_graph_bench(bench, tmp_path / "a.png"),
             plotting.plot_nfr_sweep(nfr, tmp_path / "b.png"),
             plotting.plot_rate_sweep(sweep, tmp_path / "c.png"),
             plotting.plot_training_curves(curves, tmp_path / "d.png"),
             plotting.plot_admm_trace(trace, tmp_path / "sub" / "e.png")]
    assert all(_is_png(p) for p in paths)
