from dataclasses import replace

import numpy as np
import pytest

from spectragraph.admm import PruneConfig
from spectragraph.datasets import TaskSpec
from spectragraph.harness import (TrainConfig, build_graphs, evaluate, metrics_from_predictions, prepare_data,
                                  run_training, sweep_connection_rate, sweep_near_field_rate)
from spectragraph.nn.models import Network, build_model
from spectragraph.report import Metrics

SMALL = TaskSpec(samples_per_class=30, seed=1)
FAST = TrainConfig(epochs=4, batch_size=16, lr=3e-3)


def test_hand_confusion():
    m = Metrics.from_counts(tp=3, tn=4, fp=1, fn=2)
    assert (m.accuracy, m.sensitivity, m.specificity) == pytest.approx((0.7, 0.6, 0.8))


def test_perfect_and_constant_predictors():
    y = np.array([0, 0, 1, 1])
    m = metrics_from_predictions(y, y)
    assert m.accuracy == m.sensitivity == m.specificity == 1.0
    m = metrics_from_predictions(np.zeros(4, int), y)
    assert m.accuracy == 0.5 and m.sensitivity == 0.0 and m.specificity == 1.0


def test_empty_evaluation_set():
    net = Network(build_model("mlp", 16))
    with pytest.raises(ValueError):
        evaluate(net, net.init_params(np.random.default_rng(0)), np.zeros((0, 16)), np.zeros(0, int))


def test_build_graphs_parallel_matches_sequential():
    rng = np.random.default_rng(0)
    spectra = [rng.random(32) for _ in range(9)]
    a, _ = build_graphs(spectra, 4, jobs=1)
    b, _ = build_graphs(spectra, 4, jobs=3)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.weights, y.weights)


def test_prepare_data_standardises_with_train_stats():
    net = Network(build_model("mlp", 256))
    d = prepare_data(SMALL, net, FAST)
    assert d.x_train.shape == (48, 256) and d.x_test.shape == (12, 256)
    np.testing.assert_allclose(d.x_train.mean(axis=0), 0, atol=1e-9)
    assert d.graph_stats["K"] == 26


def test_unpruned_mlp_learns_synthetic_task():
    report, params, masks = run_training(SMALL, replace(FAST, epochs=10))
    assert report.status == "ok" and masks is None
    assert report.final_accuracy() >= 0.95
    assert [c["phase"] for c in report.curves] == ["train"] * 10


def test_admm_run_respects_budgets_and_is_reproducible():
    cfg = replace(FAST, prune=PruneConfig(connection_rate=0.1, w_inner_steps=5, retrain_epochs=2))
    r1, p1, m1 = run_training(SMALL, cfg)
    r2, p2, _ = run_training(SMALL, cfg)
    for row in r1.param_table:
        assert row["surviving"] == row["budget"]
        assert row["nonzero"] <= row["budget"]
    for k in p1:
        np.testing.assert_array_equal(p1[k], p2[k])
    assert r1.to_dict() | {"timing": None} == r2.to_dict() | {"timing": None}
    phases = [c["phase"] for c in r1.curves]
    assert phases == ["admm"] * 4 + ["masked"] + ["retrain"] * 2
    assert len(r1.admm_trace) == 4


def test_ssgcnet_pruned_summary_matches_table():
    task = replace(SMALL, model="ssgcnet", samples_per_class=8)
    cfg = TrainConfig(epochs=1, prune=PruneConfig(connection_rate=0.1, w_inner_steps=2, retrain_epochs=0))
    report, _, masks = run_training(task, cfg)
    assert report.param_summary["tabulated_surviving"] == 4869
    assert sum(int(m.sum()) for m in masks.values()) == 4869 - 154
    assert len(report.admm_trace) == 2  # one conv stage, one fc stage


def test_magnitude_method_and_warmup():
    cfg = replace(FAST, prune=PruneConfig(connection_rate=0.2, retrain_epochs=1), prune_method="magnitude")
    report, params, masks = run_training(SMALL, cfg)
    assert not report.admm_trace
    for name, m in masks.items():
        assert np.all(params[name][~m] == 0)
    cfg = replace(FAST, prune=PruneConfig(connection_rate=0.2, w_inner_steps=2, retrain_epochs=0),
                  admm_warmup_epochs=2)
    report, _, _ = run_training(SMALL, cfg)
    assert [c["phase"] for c in report.curves][:4] == ["train", "train", "admm", "admm"]


def test_divergence_yields_partial_report():
    net = Network(build_model("mlp", 256))
    params = net.init_params(np.random.default_rng(0))
    params["fc1.w"][0, 0] = np.nan
    report, _, _ = run_training(SMALL, FAST, initial_params=params)
    assert report.status == "diverged" and "non-finite" in report.error
    assert report.metrics is None


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(prune_method="random")


def test_near_field_sweep_rows():
    rows = sweep_near_field_rate(SMALL, replace(FAST, epochs=3), [1.0, 0.1])
    assert [r["rate"] for r in rows] == [0.1, 1.0]
    assert rows[0]["nnz"] < rows[1]["nnz"]
    assert all(r["status"] == "ok" for r in rows)
    with pytest.raises(ValueError):
        sweep_near_field_rate(SMALL, FAST, [0.5])


def test_connection_sweep_rows():
    prune = PruneConfig(w_inner_steps=3, retrain_epochs=1)
    rows = sweep_connection_rate(SMALL, replace(FAST, epochs=2), [0.5, 0.05], ("admm", "magnitude"), prune)
    assert [(r["method"], r["rate"]) for r in rows] == [("admm", 0.5), ("admm", 0.05),
                                                        ("magnitude", 0.5), ("magnitude", 0.05)]
    assert rows[1]["surviving_weights"] < rows[0]["surviving_weights"]


@pytest.mark.parametrize("method", ["admm", "magnitude"])
def test_pruning_biases_and_node_scale_when_asked(method):
    task = replace(SMALL, model="ssgcnet", samples_per_class=8)
    prune = PruneConfig(connection_rate=0.5, w_inner_steps=2, retrain_epochs=0,
                        include_biases=True, include_node_scale=True)
    report, params, masks = run_training(task, TrainConfig(epochs=1, prune=prune, prune_method=method))
    assert {"scale1.theta", "conv1.b", "fc2.b"} <= set(masks)
    assert int(masks["scale1.theta"].sum()) == 128
    s = report.param_summary
    assert s["surviving_node_scale"] == 128
    assert s["surviving_non_train"] == sum(int(masks[k].sum()) for k in masks if k.endswith(".b"))
    assert s["tabulated_surviving"] == sum(r["surviving"] for r in report.param_table) + s["surviving_non_train"]
