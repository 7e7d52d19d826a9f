from .layers import (aggregate, conv1d, conv1d_backward, dense, dense_backward, maxpool2,
                     maxpool2_backward, node_scale, node_scale_backward, relu, relu_backward,
                     softmax, softmax_cross_entropy)
from .models import (Aggregate, Conv1d, Dense, MaxPool1d, ModelSpec, Network, NodeScale,
                     ParamCounts, ReLU, build_model, cardinality_budget, count_params, gnn,
                     layer_budgets, mlp, ssgcnet)
from .optim import AdamState, adam_step
