import json
import subprocess
import sys

import numpy as np
import pytest

from spectragraph.checkpoint import load_checkpoint
from spectragraph.cli import main
from spectragraph.report import read_csv

TINY = ["--samples-per-class", "12", "--epochs", "1", "--w-inner-steps", "2", "--retrain-epochs", "1"]


def test_graph_bench_three_rows(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "graph-bench", "--n", "256", "--rates", "1.0,0.5,0.1",
                 "--count", "10", "--repeats", "1"]) == 0
    rows = read_csv(tmp_path / "graph_bench.csv")
    assert len(rows) == 3
    nnz = [int(r["nnz"]) for r in rows]
    assert nnz[0] > nnz[1] > nnz[2]
    assert (tmp_path / "graph_bench.png").stat().st_size > 0


def test_train_ssgcnet_writes_report_checkpoint_and_sidecar(tmp_path):
    out = tmp_path / "o"
    rc = main(["--out", str(out), "--deterministic", "train", "--task", "synth", "--model", "ssgcnet",
               "--prune-rate", "0.1", *TINY])
    assert rc == 0
    report = json.loads((out / "run.json").read_text())
    side = json.loads((out / "run.ckpt.json").read_text())
    assert side["param_summary"]["tabulated_surviving"] == 4869
    assert [r["surviving"] for r in side["param_table"]] == [3, 39, 461, 922, 3277, 13]
    ck = load_checkpoint(out / "run.ckpt")
    assert sum(int(m.sum()) for m in ck.masks.values()) == 4869 - 154
    assert all(np.all(ck.params[k][~m] == 0) for k, m in ck.masks.items())
    assert report["status"] == "ok"
    for name in ("run_curves.csv", "run_curves.png", "run_admm_trace.csv", "run_admm_trace.png"):
        assert (out / name).exists()


def test_deterministic_runs_differ_only_in_timing(tmp_path):
    outs = []
    for d in ("a", "b"):
        assert main(["--out", str(tmp_path / d), "--deterministic", "--seed", "5", "train",
                     "--prune-rate", "0.2", *TINY]) == 0
        outs.append(tmp_path / d)
    ra, rb = (json.loads((o / "run.json").read_text()) for o in outs)
    ra.pop("timing"), rb.pop("timing")
    assert ra == rb
    for name in ("run.ckpt", "run.ckpt.json", "run_curves.csv", "run_admm_trace.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_prune_from_checkpoint_and_report(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "train", *TINY]) == 0
    assert main(["--out", str(tmp_path), "prune", "--checkpoint", str(tmp_path / "run.ckpt"),
                 "--prune-rate", "0.05", *TINY]) == 0
    side = json.loads((tmp_path / "pruned.ckpt.json").read_text())
    assert side["connection_rate"] == 0.05
    capsys.readouterr()
    assert main(["report", str(tmp_path / "pruned.json"), "--figures"]) == 0
    assert "surviving" in capsys.readouterr().out
    assert (tmp_path / "pruned_curves.png").exists()


def test_prune_needs_rate(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "train", *TINY]) == 0
    assert main(["--out", str(tmp_path), "prune", "--checkpoint", str(tmp_path / "run.ckpt"), *TINY]) == 2
    assert "prune-rate" in capsys.readouterr().err


def test_ingest_and_sweeps(tmp_path):
    assert main(["--out", str(tmp_path), "ingest", "--samples-per-class", "3"]) == 0
    with np.load(tmp_path / "spectra.npz") as z:
        assert z["magnitudes"].shape == (6, 256)
    assert main(["--out", str(tmp_path), "sweep-nfr", "--rates", "1.0,0.1", *TINY]) == 0
    assert len(read_csv(tmp_path / "sweep_nfr.csv")) == 2
    assert main(["--out", str(tmp_path), "sweep-rate", "--rates", "0.5,0.1", "--methods", "magnitude",
                 *TINY]) == 0
    assert [r["method"] for r in read_csv(tmp_path / "sweep_rate.csv")] == ["magnitude"] * 2
    assert (tmp_path / "sweep_rate.png").exists()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("samples_per_class = 12\nepochs = 1\nmodel = gnn\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path), "train", "--epochs", "2"]) == 0
    report = json.loads((tmp_path / "run.json").read_text())
    assert report["model"]["name"] == "gnn" and report["config"]["epochs"] == 2


def test_config_error_names_field(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("epochs = 2\nlearning_rate = 0.1\n")
    assert main(["--config", str(cfg), "train"]) == 2
    assert "learning_rate" in capsys.readouterr().err


def test_unknown_flag_prints_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--no-such-flag"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code != 0


def test_missing_dataset_is_clean_error(tmp_path, capsys):
    assert main(["--out", str(tmp_path), "train", "--task", "bonn", "--data", str(tmp_path / "nope")]) == 1
    assert "missing" in capsys.readouterr().err


def test_verify_subset(capsys):
    assert main(["verify", "--suite", "eta_identity", "--suite", "matvec"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "spectragraph", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "spectragraph" in r.stdout
