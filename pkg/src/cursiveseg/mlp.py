"""One-hidden-layer perceptron trained by online backprop with momentum.

Both layers use the logistic activation; the loss per sample is the
squared error 0.5 * (y - t)^2. Updates follow
delta_w <- -lr * dE/dw + momentum * delta_w_prev, applied after every
sample in presentation order.
"""
from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .features import WindowConfig

__all__ = [
    "ModelFormatError",
    "TrainingError",
    "MlpModel",
    "TrainingConfig",
    "LabeledPoint",
    "Gradients",
    "Classification",
    "init_model",
    "forward",
    "loss_gradients",
    "train",
    "classify_point",
    "save_model",
    "load_model",
]


class ModelFormatError(ValueError):
    """Raised when a serialized model cannot be decoded."""


class TrainingError(RuntimeError):
    """Raised when training diverges (non-finite loss)."""


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _frozen_array(values, shape, what):
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValueError(f"{what} must have shape {shape}, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{what} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(eq=False)
class MlpModel:
    """Weights of an input -> hidden -> 1 sigmoid network.

    window_cfg records the feature window the model was built for; it is
    None for models that do not consume pixel windows.
    """

    input_size: int
    hidden_size: int
    weights_ih: np.ndarray  # (input_size, hidden_size)
    bias_h: np.ndarray      # (hidden_size,)
    weights_ho: np.ndarray  # (hidden_size,)
    bias_o: float
    window_cfg: WindowConfig | None = None
    output_size: int = 1

    def __post_init__(self):
        if self.input_size < 1 or self.hidden_size < 1:
            raise ValueError("layer sizes must be positive")
        if self.output_size != 1:
            raise ValueError("only a single output unit is supported")
        self.weights_ih = _frozen_array(self.weights_ih, (self.input_size, self.hidden_size), "weights_ih")
        self.bias_h = _frozen_array(self.bias_h, (self.hidden_size,), "bias_h")
        self.weights_ho = _frozen_array(self.weights_ho, (self.hidden_size,), "weights_ho")
        self.bias_o = float(self.bias_o)
        if not math.isfinite(self.bias_o):
            raise ValueError("bias_o is non-finite")

    def __eq__(self, other):
        return (
            isinstance(other, MlpModel)
            and self.input_size == other.input_size
            and self.hidden_size == other.hidden_size
            and self.window_cfg == other.window_cfg
            and np.array_equal(self.weights_ih, other.weights_ih)
            and np.array_equal(self.bias_h, other.bias_h)
            and np.array_equal(self.weights_ho, other.weights_ho)
            and self.bias_o == other.bias_o
        )


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.1
    momentum: float = 0.3
    epochs: int = 315
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class LabeledPoint:
    """One training pattern: features, 0/1 label, and its provenance."""

    features: np.ndarray
    label: int
    word_id: str
    column: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        arr = np.asarray(self.features, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("features must be a flat vector")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "features", arr)


def init_model(input_size: int, hidden_size: int, seed: int,
               window_cfg: WindowConfig | None = None) -> MlpModel:
    """Fresh model with weights drawn uniformly from [-0.5, 0.5].

    The draw order is weights_ih, bias_h, weights_ho, bias_o from a
    seeded generator, so one seed always gives bit-identical weights.
    """
    rng = np.random.default_rng(seed)
    return MlpModel(
        input_size=input_size,
        hidden_size=hidden_size,
        weights_ih=rng.uniform(-0.5, 0.5, (input_size, hidden_size)),
        bias_h=rng.uniform(-0.5, 0.5, hidden_size),
        weights_ho=rng.uniform(-0.5, 0.5, hidden_size),
        bias_o=rng.uniform(-0.5, 0.5),
        window_cfg=window_cfg,
    )


def _check_features(model: MlpModel, features) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.shape != (model.input_size,):
        raise ValueError(f"feature vector of shape {arr.shape} does not match input size {model.input_size}")
    return arr


def forward(model: MlpModel, features) -> float:
    """Network activation for one feature vector, strictly inside (0, 1)."""
    x = _check_features(model, features)
    hidden = _sigmoid(x @ model.weights_ih + model.bias_h)
    return float(_sigmoid(hidden @ model.weights_ho + model.bias_o))


def _sample_gradients(weights_ih, bias_h, weights_ho, bias_o, x, target):
    # Forward, then exact backprop of 0.5 * (y - t)^2 for one sample.
    hidden = _sigmoid(x @ weights_ih + bias_h)
    y = float(_sigmoid(hidden @ weights_ho + bias_o))
    err = y - target
    delta_o = err * y * (1.0 - y)
    delta_h = delta_o * weights_ho * hidden * (1.0 - hidden)
    g_ih = np.outer(x, delta_h)
    return g_ih, delta_h, delta_o * hidden, delta_o, 0.5 * err * err


class Gradients(NamedTuple):
    weights_ih: np.ndarray
    bias_h: np.ndarray
    weights_ho: np.ndarray
    bias_o: float
    loss: float


def loss_gradients(model: MlpModel, features, target: float) -> Gradients:
    """Analytic gradients of the per-sample squared error."""
    x = _check_features(model, features)
    g_ih, g_bh, g_ho, g_bo, loss = _sample_gradients(
        model.weights_ih, model.bias_h, model.weights_ho, model.bias_o, x, float(target)
    )
    return Gradients(g_ih, g_bh, g_ho, g_bo, loss)


def train(model: MlpModel, points: Sequence[LabeledPoint],
          cfg: TrainingConfig = TrainingConfig()) -> tuple[MlpModel, list[float]]:
    """Run cfg.epochs full passes of per-sample updates.

    Returns a new model (the input model is never mutated) and the mean
    squared error of each epoch, accumulated from the pre-update
    prediction of every sample. Presentation order is reshuffled every
    epoch from cfg.seed when cfg.shuffle is set. Divergence to a
    non-finite loss aborts with TrainingError naming the epoch.
    """
    if not points:
        raise ValueError("training set is empty")
    for i, p in enumerate(points):
        if p.features.shape != (model.input_size,):
            raise ValueError(f"point {i} has {p.features.shape[0]} features, model expects {model.input_size}")
    labels = np.array([p.label for p in points], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        warnings.warn("training set contains a single class", stacklevel=2)
    feats = np.stack([p.features for p in points])

    w_ih = model.weights_ih.copy()
    b_h = model.bias_h.copy()
    w_ho = model.weights_ho.copy()
    b_o = model.bias_o
    v_ih = np.zeros_like(w_ih)
    v_bh = np.zeros_like(b_h)
    v_ho = np.zeros_like(w_ho)
    v_bo = 0.0

    rng = np.random.default_rng(cfg.seed)
    n = len(points)
    lr, mom = cfg.learning_rate, cfg.momentum
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        squared = 0.0
        for i in order:
            g_ih, g_bh, g_ho, g_bo, loss = _sample_gradients(w_ih, b_h, w_ho, b_o, feats[i], labels[i])
            squared += 2.0 * loss  # (y - t)^2
            v_ih = mom * v_ih - lr * g_ih
            v_bh = mom * v_bh - lr * g_bh
            v_ho = mom * v_ho - lr * g_ho
            v_bo = mom * v_bo - lr * g_bo
            w_ih += v_ih
            b_h += v_bh
            w_ho += v_ho
            b_o += v_bo
        mse = squared / n
        if not math.isfinite(mse):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        history.append(mse)
    trained = MlpModel(
        input_size=model.input_size,
        hidden_size=model.hidden_size,
        weights_ih=w_ih,
        bias_h=b_h,
        weights_ho=w_ho,
        bias_o=b_o,
        window_cfg=model.window_cfg,
    )
    return trained, history


class Classification(NamedTuple):
    correct: bool
    activation: float


def classify_point(model: MlpModel, features, decision_threshold: float = 0.5) -> Classification:
    """Label a candidate as a correct cut iff activation >= threshold."""
    activation = forward(model, features)
    return Classification(activation >= decision_threshold, activation)


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"CSEGMLP1"
_VERSION = 1


def save_model(model: MlpModel) -> bytes:
    """Little-endian binary: magic, version, dims, window, float64 weights.

    Weights are stored in the order weights_ih (row-major), bias_h,
    weights_ho, bias_o. A missing window config is stored as 0 x 0.
    """
    win_w = model.window_cfg.window_width if model.window_cfg else 0
    win_h = model.window_cfg.normalized_height if model.window_cfg else 0
    header = _MAGIC + struct.pack(
        "<IIIIII", _VERSION, model.input_size, model.hidden_size, model.output_size, win_w, win_h
    )
    payload = np.concatenate(
        [model.weights_ih.ravel(), model.bias_h, model.weights_ho, [model.bias_o]]
    ).astype("<f8").tobytes()
    return header + payload


def load_model(data: bytes) -> MlpModel:
    """Inverse of save_model; bit-exact round trip."""
    if data[:8] != _MAGIC:
        raise ModelFormatError("bad magic, not a model file")
    head = data[8 : 8 + 24]
    if len(head) < 24:
        raise ModelFormatError("truncated header")
    version, inp, hid, out, win_w, win_h = struct.unpack("<IIIIII", head)
    if version != _VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    if inp < 1 or hid < 1 or out != 1:
        raise ModelFormatError(f"inconsistent dimensions {inp}x{hid}x{out}")
    if (win_w == 0) != (win_h == 0):
        raise ModelFormatError(f"inconsistent window {win_w}x{win_h}")
    count = inp * hid + hid + hid + 1
    payload = data[8 + 24 :]
    if len(payload) != 8 * count:
        raise ModelFormatError(f"payload holds {len(payload)} bytes, dimensions require {8 * count}")
    flat = np.frombuffer(payload, "<f8")
    pos = inp * hid
    try:
        cfg = WindowConfig(win_w, win_h) if win_w else None
        return MlpModel(
            input_size=inp,
            hidden_size=hid,
            weights_ih=flat[:pos].reshape(inp, hid),
            bias_h=flat[pos : pos + hid],
            weights_ho=flat[pos + hid : pos + 2 * hid],
            bias_o=float(flat[-1]),
            window_cfg=cfg,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
