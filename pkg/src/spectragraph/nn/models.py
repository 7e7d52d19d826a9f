"""Layer descriptions, model factories, parameter accounting and the batched network."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import layers as L


@dataclass(frozen=True)
class Aggregate:
    hops: int
    n: int
    # Keep every hop vector as a non-trainable buffer (the GNN readout does).
    retain_hops: bool = False
    weighted: bool = True


@dataclass(frozen=True)
class NodeScale:
    n: int


@dataclass(frozen=True)
class Conv1d:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    zero_pad: bool = True


@dataclass(frozen=True)
class MaxPool1d:
    width: int = 2
    stride: int = 2


@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int


@dataclass(frozen=True)
class ReLU:
    pass


LayerSpec = Aggregate | NodeScale | Conv1d | MaxPool1d | Dense | ReLU


def _layer_names(layers) -> list[str]:
    counters: dict[str, int] = {}
    prefix = {Aggregate: "agg", NodeScale: "scale", Conv1d: "conv", MaxPool1d: "pool",
              Dense: "fc", ReLU: "relu"}
    names = []
    for layer in layers:
        p = prefix[type(layer)]
        counters[p] = counters.get(p, 0) + 1
        names.append(f"{p}{counters[p]}")
    return names


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: tuple
    class_count: int
    input_nodes: int
    names: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(_layer_names(self.layers)))
        self.validate()

    def validate(self) -> None:
        """Propagate shapes through the stack, raising on any mismatch."""
        shape: tuple = (self.input_nodes,)
        for name, layer in zip(self.names, self.layers):
            match layer:
                case Aggregate(hops=h, n=n):
                    if h < 1 or n != self.input_nodes:
                        raise ValueError(f"{name}: bad aggregation {layer}")
                case NodeScale(n=n):
                    if shape != (n,):
                        raise ValueError(f"{name}: expects ({n},), got {shape}")
                case Conv1d(in_ch=ci, out_ch=co, kernel=k, stride=s, zero_pad=zp):
                    c, length = shape if len(shape) == 2 else (1, shape[0])
                    if min(ci, co, k) < 1 or c != ci:
                        raise ValueError(f"{name}: expects {ci} channels, got {c}")
                    if s != 1 or not zp or k % 2 == 0:
                        raise ValueError(f"{name}: only stride 1, zero padding, odd kernels")
                    shape = (co, length)
                case MaxPool1d(width=wd, stride=s):
                    if (wd, s) != (2, 2):
                        raise ValueError(f"{name}: only width=stride=2 pooling is supported")
                    shape = shape[:-1] + (shape[-1] // 2,)
                case Dense(in_dim=di, out_dim=do):
                    if math.prod(shape) != di or do < 1:
                        raise ValueError(f"{name}: expects input width {di}, got {math.prod(shape)}")
                    shape = (do,)
                case ReLU():
                    pass
                case _:
                    raise TypeError(f"unknown layer {layer!r}")
        if shape != (self.class_count,):
            raise ValueError(f"final output shape {shape} != ({self.class_count},)")

    @property
    def aggregate(self) -> Aggregate | None:
        return next((la for la in self.layers if isinstance(la, Aggregate)), None)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "class_count": self.class_count,
            "input_nodes": self.input_nodes,
            "layers": [{"type": type(la).__name__, **asdict(la)} for la in self.layers],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        kinds = {c.__name__: c for c in (Aggregate, NodeScale, Conv1d, MaxPool1d, Dense, ReLU)}
        layers = []
        for entry in d["layers"]:
            entry = dict(entry)
            layers.append(kinds[entry.pop("type")](**entry))
        return cls(d["name"], tuple(layers), d["class_count"], d["input_nodes"])

    def digest(self) -> bytes:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).digest()

    def param_shapes(self) -> dict[str, tuple]:
        shapes = {}
        for name, layer in zip(self.names, self.layers):
            if isinstance(layer, NodeScale):
                shapes[f"{name}.theta"] = (layer.n,)
            elif isinstance(layer, Conv1d):
                shapes[f"{name}.w"] = (layer.out_ch, layer.in_ch, layer.kernel)
                shapes[f"{name}.b"] = (layer.out_ch,)
            elif isinstance(layer, Dense):
                shapes[f"{name}.w"] = (layer.in_dim, layer.out_dim)
                shapes[f"{name}.b"] = (layer.out_dim,)
        return shapes

    def prunable(self) -> list[str]:
        """Weight blocks subject to cardinality constraints (conv kernels and dense matrices)."""
        return [f"{n}.w" for n, la in zip(self.names, self.layers) if isinstance(la, (Conv1d, Dense))]

    def stages(self, include_biases: bool = False, include_node_scale: bool = False) -> list[list[str]]:
        """Prunable blocks grouped as [convolution stage, fully connected stage], empty groups dropped.

        Biases join their layer's stage; the node-scale vector joins the first stage.
        """
        conv, fc = [], []
        for n, la in zip(self.names, self.layers):
            group = conv if isinstance(la, Conv1d) else fc if isinstance(la, Dense) else None
            if group is not None:
                group.append(f"{n}.w")
                if include_biases:
                    group.append(f"{n}.b")
        groups = [g for g in (conv, fc) if g]
        if include_node_scale:
            thetas = [f"{n}.theta" for n, la in zip(self.names, self.layers) if isinstance(la, NodeScale)]
            if thetas:
                groups[0][:0] = thetas
        return groups


# ---------------------------------------------------------------- factories

def mlp(n: int = 256, hidden=(200, 200, 200), classes: int = 2, hops: int = 2) -> ModelSpec:
    """Fully connected baseline on aggregated node features."""
    layers: list = [Aggregate(hops, n)]
    dims = [n, *hidden]
    for a, b in zip(dims[:-1], dims[1:]):
        layers += [Dense(a, b), ReLU()]
    layers.append(Dense(dims[-1], classes))
    return ModelSpec("mlp", tuple(layers), classes, n)


def gnn(n: int = 256, hidden=(128, 64, 32, 16), classes: int = 2, hops: int = 2) -> ModelSpec:
    """Hop aggregation (hop vectors retained) followed by five dense layers."""
    spec = mlp(n, hidden, classes, hops)
    layers = (Aggregate(hops, n, retain_hops=True),) + spec.layers[1:]
    return ModelSpec("gnn", layers, classes, n)


def ssgcnet(n: int = 256, channels=(8, 16, 32, 32), kernels=(3, 3, 9, 9), hidden: int = 64,
            classes: int = 2, hops: int = 2) -> ModelSpec:
    """Aggregation, node scaling, four conv/ReLU/pool blocks and two dense layers.

    The default widths and kernels reproduce the published per-layer counts
    24 / 384 / 4608 / 9216 / 32768 / 128 with 154 bias entries at ``n = 256``.
    """
    if len(channels) != len(kernels):
        raise ValueError("channels and kernels must have equal length")
    layers: list = [Aggregate(hops, n), NodeScale(n)]
    c_in, length = 1, n
    for c_out, k in zip(channels, kernels):
        layers += [Conv1d(c_in, c_out, k), ReLU(), MaxPool1d(2, 2)]
        c_in, length = c_out, length // 2
    layers += [Dense(c_in * length, hidden), ReLU(), Dense(hidden, classes)]
    return ModelSpec("ssgcnet", tuple(layers), classes, n)


MODEL_FACTORIES = {"mlp": mlp, "gnn": gnn, "ssgcnet": ssgcnet}


def build_model(name: str, n: int, classes: int = 2) -> ModelSpec:
    try:
        factory = MODEL_FACTORIES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_FACTORIES)}") from None
    return factory(n=n, classes=classes)


# ------------------------------------------------------------ accounting

@dataclass(frozen=True)
class LayerCount:
    name: str
    kind: str
    weights: int = 0
    biases: int = 0
    buffers: int = 0
    node_scale: int = 0


@dataclass(frozen=True)
class ParamCounts:
    """Per-layer parameter accounting.

    ``layer_weights`` lists the prunable weight blocks in order. ``non_train``
    collects bias vectors and fixed buffers, which are never pruned.
    ``node_scale`` holds the per-node scaling vector; it is trainable and
    unpruned but kept out of ``tabulated_total``.
    """
    rows: tuple

    @property
    def layer_weights(self) -> list[int]:
        return [r.weights for r in self.rows if r.weights]

    @property
    def layer_names(self) -> list[str]:
        return [f"{r.name}.w" for r in self.rows if r.weights]

    @property
    def non_train(self) -> int:
        return sum(r.biases + r.buffers for r in self.rows)

    @property
    def node_scale(self) -> int:
        return sum(r.node_scale for r in self.rows)

    @property
    def tabulated_total(self) -> int:
        return sum(self.layer_weights) + self.non_train

    @property
    def trainable(self) -> int:
        return sum(r.weights + r.biases + r.node_scale for r in self.rows)

    @property
    def non_trainable(self) -> int:
        return sum(r.buffers for r in self.rows)

    @property
    def total(self) -> int:
        return self.trainable + self.non_trainable


def count_params(spec: ModelSpec) -> ParamCounts:
    rows = []
    for name, layer in zip(spec.names, spec.layers):
        kind = type(layer).__name__
        match layer:
            case Aggregate(hops=h, n=n, retain_hops=keep):
                rows.append(LayerCount(name, kind, buffers=h * n if keep else 0))
            case NodeScale(n=n):
                rows.append(LayerCount(name, kind, node_scale=n))
            case Conv1d(in_ch=ci, out_ch=co, kernel=k):
                rows.append(LayerCount(name, kind, weights=ci * co * k, biases=co))
            case Dense(in_dim=di, out_dim=do):
                rows.append(LayerCount(name, kind, weights=di * do, biases=do))
            case _:
                rows.append(LayerCount(name, kind))
    return ParamCounts(tuple(rows))


def cardinality_budget(rate: float, count: int) -> int:
    """``ceil(rate * count)`` evaluated exactly on the decimal value of ``rate``."""
    if not 0 < rate <= 1:
        raise ValueError(f"connection rate must lie in (0, 1], got {rate}")
    return math.ceil(Fraction(repr(float(rate))) * count)


def layer_budgets(spec: ModelSpec, rate: float) -> dict[str, int]:
    counts = count_params(spec)
    return {name: cardinality_budget(rate, c) for name, c in zip(counts.layer_names, counts.layer_weights)}


# ----------------------------------------------------------------- network

class Network:
    """Forward and backward passes for a :class:`ModelSpec` over batched features.

    The aggregation layer carries no parameters, so it is evaluated once per
    graph by :meth:`features`; :meth:`forward` starts from those vectors.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        params = {}
        for name, shape in self.spec.param_shapes().items():
            if name.endswith(".theta"):
                params[name] = np.ones(shape)
            elif name.endswith(".b"):
                params[name] = np.zeros(shape)
            else:
                fan_in = shape[0] if len(shape) == 2 else shape[1] * shape[2]
                bound = math.sqrt(6.0 / fan_in)
                params[name] = rng.uniform(-bound, bound, size=shape)
        return params

    def features(self, graphs) -> np.ndarray:
        agg = self.spec.aggregate
        if agg is None:
            raise ValueError(f"model {self.spec.name} has no aggregation layer")
        return np.stack([L.aggregate(g, agg.hops, agg.weighted) for g in graphs])

    def forward(self, x: np.ndarray, params: dict) -> tuple[np.ndarray, list]:
        caches = []
        out = np.asarray(x, dtype=np.float64)
        for name, layer in zip(self.spec.names, self.spec.layers):
            match layer:
                case Aggregate():
                    cache = None
                case NodeScale():
                    out, cache = L.node_scale(out, params[f"{name}.theta"])
                case Conv1d():
                    if out.ndim == 2:
                        out = out[:, None, :]
                    out, cache = L.conv1d(out, params[f"{name}.w"], params[f"{name}.b"])
                case MaxPool1d():
                    out, cache = L.maxpool2(out)
                case Dense():
                    out, cache = L.dense(out, params[f"{name}.w"], params[f"{name}.b"])
                case ReLU():
                    out, cache = L.relu(out)
            caches.append(cache)
        return out, caches

    def backward(self, dout: np.ndarray, caches: list, params: dict) -> dict[str, np.ndarray]:
        grads = {}
        for name, layer, cache in reversed(list(zip(self.spec.names, self.spec.layers, caches))):
            match layer:
                case Aggregate():
                    pass
                case NodeScale():
                    theta = params[f"{name}.theta"]
                    h = cache
                    if dout.ndim == 3:
                        dout = dout[:, 0, :]
                    dout, grads[f"{name}.theta"] = L.node_scale_backward(dout, h, theta)
                case Conv1d():
                    dout, grads[f"{name}.w"], grads[f"{name}.b"] = L.conv1d_backward(dout, cache)
                case MaxPool1d():
                    dout = L.maxpool2_backward(dout, cache)
                case Dense():
                    dout, grads[f"{name}.w"], grads[f"{name}.b"] = L.dense_backward(dout, cache)
                case ReLU():
                    dout = L.relu_backward(dout, cache)
        return grads

    def loss_and_grad(self, params: dict, x: np.ndarray, y: np.ndarray) -> tuple[float, dict]:
        logits, caches = self.forward(x, params)
        loss, dlogits = L.softmax_cross_entropy(logits, y)
        return loss, self.backward(dlogits, caches, params)

    def loss(self, params: dict, x: np.ndarray, y: np.ndarray) -> float:
        logits, _ = self.forward(x, params)
        return L.softmax_cross_entropy(logits, y)[0]

    def predict(self, params: dict, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x, params)
        return np.argmax(logits, axis=1)
