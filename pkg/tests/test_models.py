import numpy as np
import pytest

from spectragraph import oracles
from spectragraph.nn.models import (Conv1d, Dense, ModelSpec, Network, ReLU, build_model, cardinality_budget,
                                    count_params, gnn, layer_budgets, mlp, ssgcnet)


def test_mlp_counts():
    c = count_params(mlp(256))
    assert c.layer_weights == [51200, 40000, 40000, 400]
    assert c.non_train == 602
    assert c.tabulated_total == 132202


def test_ssgcnet_counts():
    c = count_params(ssgcnet(256))
    assert c.layer_weights == [24, 384, 4608, 9216, 32768, 128]
    assert c.non_train == 154
    assert c.tabulated_total == 47282
    assert c.node_scale == 256
    assert c.total == 47282 + 256


def test_gnn_counts():
    c = count_params(gnn(256))
    assert c.tabulated_total == 44306


def test_budgets_are_exact_ceilings():
    assert list(layer_budgets(ssgcnet(256), 0.1).values()) == [3, 39, 461, 922, 3277, 13]
    assert list(layer_budgets(mlp(256), 0.001).values()) == [52, 40, 40, 1]
    assert cardinality_budget(0.1, 30) == 3  # float 0.1 * 30 would ceil to 4
    with pytest.raises(ValueError):
        cardinality_budget(0.0, 10)


def test_spec_round_trip_and_digest():
    spec = ssgcnet(64, channels=(2, 4), kernels=(3, 3), hidden=8)
    again = ModelSpec.from_dict(spec.to_dict())
    assert again.digest() == spec.digest()
    assert mlp(64).digest() != spec.digest()


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        ModelSpec("bad", [Dense(10, 4), ReLU(), Dense(5, 2)], 2, 10)
    with pytest.raises(ValueError):
        ModelSpec("bad", [Conv1d(2, 4, 3)], 2, 10)


@pytest.mark.parametrize("name", ["mlp", "gnn", "ssgcnet"])
def test_forward_shapes_and_prunable(name):
    spec = build_model(name, 64, 3)
    net = Network(spec)
    params = net.init_params(np.random.default_rng(0))
    assert set(params) == set(spec.param_shapes())
    logits, _ = net.forward(np.random.default_rng(1).normal(size=(5, 64)), params)
    assert logits.shape == (5, 3)
    assert all(n.endswith(".w") for n in spec.prunable())
    assert sum(spec.stages(), []) == spec.prunable()


def test_unknown_model():
    with pytest.raises(ValueError):
        build_model("resnet", 64)


def test_small_network_gradient():
    rng = np.random.default_rng(2)
    net = Network(ssgcnet(n=16, channels=(2,), kernels=(3,), hidden=4))
    params = net.init_params(rng)
    x, y = rng.normal(size=(3, 16)), rng.integers(0, 2, 3)
    _, grads = net.loss_and_grad(params, x, y)
    for k in params:
        num = oracles.central_difference(lambda: net.loss(params, x, y), params[k])
        assert oracles.rel_error(grads[k], num) < 1e-4, k


def test_gnn_budget_total():
    spec = gnn(256)
    assert sum(layer_budgets(spec, 0.2).values()) + count_params(spec).non_train == 9467


def test_stages_with_biases_and_node_scale():
    spec = ssgcnet(64, channels=(2, 4), kernels=(3, 3), hidden=8)
    conv, fc = spec.stages(include_biases=True, include_node_scale=True)
    assert conv == ["scale1.theta", "conv1.w", "conv1.b", "conv2.w", "conv2.b"]
    assert fc == ["fc1.w", "fc1.b", "fc2.w", "fc2.b"]
    assert mlp(64).stages(include_node_scale=True) == mlp(64).stages()
