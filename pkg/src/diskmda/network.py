"""The failure-prediction network and its adaptation taps.

The architecture is fixed: input -> dense -> relu -> dropout (tap 1)
-> dense -> relu (tap 2) -> dense -> softmax over two classes. Both
tapped feature maps are exposed by every forward pass so discrepancy
losses can be attached to either or both of them, and ``backward``
accepts gradients injected straight into the taps in addition to the
usual logits gradient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .errors import DataError, DivergenceError, ParameterError, ShapeError
from .nn import (
    AffineParams,
    DropoutState,
    affine_backward,
    affine_forward,
    as_matrix,
    dropout_backward,
    dropout_forward,
    relu_backward,
    relu_forward,
    softmax,
)

CHECKPOINT_VERSION = 1

PARAM_NAMES = ("fc1.w", "fc1.b", "fc2.w", "fc2.b", "classifier.w", "classifier.b")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture hyperparameters.

    adapted_layers lists which taps are available to adaptation losses;
    both exist regardless, this only constrains what a variant may use.
    """

    input_dim: int = 11
    fc1_width: int = 256
    fc2_width: int = 128
    dropout_rate: float = 0.5
    num_classes: int = 2
    adapted_layers: tuple[int, ...] = (1, 2)

    def __post_init__(self):
        for name in ("input_dim", "fc1_width", "fc2_width"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ParameterError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        if self.num_classes != 2:
            raise ParameterError(f"num_classes is fixed at 2, got {self.num_classes}")
        layers = tuple(self.adapted_layers)
        if not set(layers) <= {1, 2}:
            raise ParameterError(f"adapted_layers must be a subset of (1, 2), got {layers}")
        object.__setattr__(self, "adapted_layers", layers)


@dataclass
class ForwardTrace:
    """Tapped activations of one forward pass.

    layer1_feats is the post-dropout output of the first block, layer2_feats
    the post-relu output of the second. ``cache`` holds the intermediates
    needed by ``backward`` and is only present on traces produced by
    ``forward``.
    """

    layer1_feats: np.ndarray
    layer2_feats: np.ndarray
    logits: np.ndarray
    cache: tuple | None = field(default=None, repr=False)


@dataclass
class MdaNetwork:
    fc1: AffineParams
    fc2: AffineParams
    classifier: AffineParams
    config: NetworkConfig

    def __post_init__(self):
        chain = (
            (self.fc1, self.config.input_dim, self.config.fc1_width),
            (self.fc2, self.config.fc1_width, self.config.fc2_width),
            (self.classifier, self.config.fc2_width, self.config.num_classes),
        )
        for layer, want_in, want_out in chain:
            if layer.w.shape != (want_in, want_out):
                raise ShapeError(
                    f"layer weights {layer.w.shape} do not match config "
                    f"({want_in}, {want_out})")

    def params(self) -> dict[str, np.ndarray]:
        return {
            "fc1.w": self.fc1.w, "fc1.b": self.fc1.b,
            "fc2.w": self.fc2.w, "fc2.b": self.fc2.b,
            "classifier.w": self.classifier.w, "classifier.b": self.classifier.b,
        }


def init_network(config: NetworkConfig, rng: np.random.Generator) -> MdaNetwork:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases."""

    def layer(fan_in: int, fan_out: int) -> AffineParams:
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        return AffineParams(w=w, b=np.zeros(fan_out))

    return MdaNetwork(
        fc1=layer(config.input_dim, config.fc1_width),
        fc2=layer(config.fc1_width, config.fc2_width),
        classifier=layer(config.fc2_width, config.num_classes),
        config=config,
    )


def forward(net: MdaNetwork, batch, mode: str = "eval",
            rng: np.random.Generator | None = None) -> ForwardTrace:
    """Run the network, recording both adaptation taps.

    Train mode applies dropout and therefore needs an rng stream when the
    configured rate is positive; eval mode is deterministic.
    """
    if mode not in ("train", "eval"):
        raise ParameterError(f"mode must be 'train' or 'eval', got {mode!r}")
    batch = as_matrix(batch)
    if batch.shape[1] != net.config.input_dim:
        raise ShapeError(
            f"batch has {batch.shape[1]} features but the network expects "
            f"{net.config.input_dim}")
    if mode == "train" and net.config.dropout_rate > 0.0 and rng is None:
        raise ParameterError("train-mode forward needs an rng stream for dropout")

    z1 = affine_forward(batch, net.fc1)
    a1 = relu_forward(z1)
    drop = DropoutState(rate=net.config.dropout_rate, mode=mode)
    h1 = dropout_forward(a1, drop, rng)
    z2 = affine_forward(h1, net.fc2)
    a2 = relu_forward(z2)
    logits = affine_forward(a2, net.classifier)
    for name, arr in (("layer1_feats", h1), ("layer2_feats", a2), ("logits", logits)):
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"non-finite values in {name}")
    return ForwardTrace(
        layer1_feats=h1,
        layer2_feats=a2,
        logits=logits,
        cache=(batch, z1, a1, drop, h1, z2, a2),
    )


def backward(net: MdaNetwork, trace: ForwardTrace,
             grad_logits: np.ndarray | None = None,
             grad_layer2: np.ndarray | None = None,
             grad_layer1: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Backpropagate through one traced forward pass.

    Any combination of gradients may be supplied: the usual logits
    gradient plus gradients injected directly into the two taps by
    adaptation losses. Omitted inputs are treated as zero. Returns
    parameter gradients keyed like ``MdaNetwork.params()``.
    """
    if trace.cache is None:
        raise ParameterError("trace has no cache; it was not produced by forward()")
    batch, z1, a1, drop, h1, z2, a2 = trace.cache

    grads = {}
    if grad_logits is not None:
        d_a2, grads["classifier.w"], grads["classifier.b"] = affine_backward(
            a2, net.classifier, grad_logits)
    else:
        d_a2 = np.zeros_like(a2)
        grads["classifier.w"] = np.zeros_like(net.classifier.w)
        grads["classifier.b"] = np.zeros_like(net.classifier.b)
    if grad_layer2 is not None:
        if grad_layer2.shape != a2.shape:
            raise ShapeError(
                f"grad_layer2 shape {grad_layer2.shape} != tap shape {a2.shape}")
        d_a2 = d_a2 + grad_layer2

    d_z2 = relu_backward(z2, d_a2)
    d_h1, grads["fc2.w"], grads["fc2.b"] = affine_backward(h1, net.fc2, d_z2)
    if grad_layer1 is not None:
        if grad_layer1.shape != h1.shape:
            raise ShapeError(
                f"grad_layer1 shape {grad_layer1.shape} != tap shape {h1.shape}")
        d_h1 = d_h1 + grad_layer1

    d_a1 = dropout_backward(d_h1, drop)
    d_z1 = relu_backward(z1, d_a1)
    _, grads["fc1.w"], grads["fc1.b"] = affine_backward(batch, net.fc1, d_z1)
    return grads


def predict(net: MdaNetwork, batch):
    """Class probabilities and hard labels; exact ties go to class 0."""
    trace = forward(net, batch, mode="eval")
    probs = softmax(trace.logits)
    labels = np.argmax(probs, axis=1)
    return probs, labels


def save_checkpoint(net: MdaNetwork, path, stats=None, meta: dict | None = None) -> None:
    """Write a flat, versioned record of config + parameters.

    Parameter arrays round-trip bitwise. ``stats`` (the normalization used
    at train time) and ``meta`` (free-form run info) ride along when given.
    """
    payload = {
        "version": np.asarray(CHECKPOINT_VERSION),
        "config": np.asarray(json.dumps(asdict(net.config), sort_keys=True)),
        "meta": np.asarray(json.dumps(meta or {}, sort_keys=True)),
    }
    for name, arr in net.params().items():
        payload[name.replace(".", "_")] = arr
    if stats is not None:
        payload["stats_x_min"] = np.asarray(stats.x_min, dtype=np.float64)
        payload["stats_x_max"] = np.asarray(stats.x_max, dtype=np.float64)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path):
    """Read a checkpoint back. Returns (net, stats_or_None, meta)."""
    from .pipeline import NormalizationStats

    if not Path(path).is_file():
        raise DataError(f"checkpoint file {path} does not exist")
    with np.load(path, allow_pickle=False) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ParameterError(
                f"checkpoint version {version} is not supported "
                f"(expected {CHECKPOINT_VERSION})")
        cfg_raw = json.loads(str(data["config"]))
        cfg_raw["adapted_layers"] = tuple(cfg_raw.get("adapted_layers", (1, 2)))
        config = NetworkConfig(**cfg_raw)
        meta = json.loads(str(data["meta"]))
        net = MdaNetwork(
            fc1=AffineParams(w=data["fc1_w"], b=data["fc1_b"]),
            fc2=AffineParams(w=data["fc2_w"], b=data["fc2_b"]),
            classifier=AffineParams(w=data["classifier_w"], b=data["classifier_b"]),
            config=config,
        )
        stats = None
        if "stats_x_min" in data:
            stats = NormalizationStats(x_min=data["stats_x_min"], x_max=data["stats_x_max"])
    return net, stats, meta
