"""From-scratch convolutional classifier over 24x60 tactile windows.

Architecture: conv(8 filters, 3x5, same) -> ReLU -> maxpool 2x2 ->
conv(16, 3x5, same) -> ReLU -> maxpool 2x2 -> dense(64) -> ReLU ->
dense(12) -> softmax. Plain SGD with momentum; float32 for training,
float64 for gradient checking. kNN and multinomial-logistic baselines
operate on flattened windows.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

N_CLASSES = 12
INPUT_SHAPE = (24, 60)
CHECKPOINT_MAGIC = b"ESKM"
CHECKPOINT_VERSION = 1


# ---------------------------------------------------------------------------
# Layers

class Conv2D:
    """Stride-1 'same' 2-D convolution (cross-correlation)."""

    def __init__(self, in_ch, out_ch, kh, kw, rng, dtype):
        scale = np.sqrt(2.0 / (in_ch * kh * kw))
        self.w = (rng.normal(0, scale, (out_ch, in_ch, kh, kw))).astype(dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.ph, self.pw = (kh - 1) // 2, (kw - 1) // 2
        self._x_padded = None
        self.dw = self.db = None

    def forward(self, x):
        xp = np.pad(x, ((0, 0), (0, 0), (self.ph, self.ph), (self.pw, self.pw)))
        self._x_padded = xp
        kh, kw = self.w.shape[2:]
        win = sliding_window_view(xp, (kh, kw), axis=(2, 3))
        out = np.einsum("nchwij,ocij->nohw", win, self.w, optimize=True)
        return out + self.b[None, :, None, None]

    def backward(self, dout):
        kh, kw = self.w.shape[2:]
        win = sliding_window_view(self._x_padded, (kh, kw), axis=(2, 3))
        self.dw = np.einsum("nchwij,nohw->ocij", win, dout, optimize=True)
        self.db = dout.sum(axis=(0, 2, 3))
        dpad = np.pad(dout, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
        win2 = sliding_window_view(dpad, (kh, kw), axis=(2, 3))
        dxp = np.einsum("nohwij,ocij->nchw", win2, self.w[:, :, ::-1, ::-1],
                        optimize=True)
        h, w = self._x_padded.shape[2] - 2 * self.ph, \
            self._x_padded.shape[3] - 2 * self.pw
        return dxp[:, :, self.ph:self.ph + h, self.pw:self.pw + w]

    def params(self):
        return [("w", self), ("b", self)]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask

    def params(self):
        return []


class MaxPool2x2:
    def __init__(self):
        self._argmax = None
        self._shape = None

    def forward(self, x):
        n, c, h, w = x.shape
        self._shape = x.shape
        blocks = x.reshape(n, c, h // 2, 2, w // 2, 2)
        flat = blocks.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
        self._argmax = flat.argmax(axis=-1)
        return flat.max(axis=-1)

    def backward(self, dout):
        n, c, h, w = self._shape
        dflat = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
        np.put_along_axis(dflat, self._argmax[..., None], dout[..., None],
                          axis=-1)
        blocks = dflat.reshape(n, c, h // 2, w // 2, 2, 2).transpose(
            0, 1, 2, 4, 3, 5)
        return blocks.reshape(n, c, h, w)

    def params(self):
        return []


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout):
        return dout.reshape(self._shape)

    def params(self):
        return []


class Dense:
    def __init__(self, n_in, n_out, rng, dtype):
        scale = np.sqrt(2.0 / n_in)
        self.w = (rng.normal(0, scale, (n_in, n_out))).astype(dtype)
        self.b = np.zeros(n_out, dtype=dtype)
        self._x = None
        self.dw = self.db = None

    def forward(self, x):
        self._x = x
        return x @ self.w + self.b

    def backward(self, dout):
        self.dw = self._x.T @ dout
        self.db = dout.sum(axis=0)
        return dout @ self.w.T

    def params(self):
        return [("w", self), ("b", self)]


def softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, labels):
    n = probs.shape[0]
    return float(-np.mean(np.log(probs[np.arange(n), labels] + 1e-12)))


# ---------------------------------------------------------------------------
# Model

class CnnModel:
    """Two-conv tactile classifier; also usable as a generic layer stack."""

    def __init__(self, seed: int = 0, dtype=np.float32,
                 layers: list | None = None):
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        if layers is None:
            layers = [
                Conv2D(1, 8, 3, 5, rng, dtype), ReLU(), MaxPool2x2(),
                Conv2D(8, 16, 3, 5, rng, dtype), ReLU(), MaxPool2x2(),
                Flatten(),
                Dense(16 * 6 * 15, 64, rng, dtype), ReLU(),
                Dense(64, N_CLASSES, rng, dtype),
            ]
        self.layers = layers
        self.norm_mean = np.zeros(INPUT_SHAPE[0])
        self.norm_std = np.ones(INPUT_SHAPE[0])

    def normalize(self, windows):
        """Per-channel standardization with the model's training stats."""
        x = np.asarray(windows, dtype=self.dtype)
        mean = self.norm_mean.astype(self.dtype)[None, :, None]
        std = self.norm_std.astype(self.dtype)[None, :, None]
        return (x - mean) / std

    def logits(self, x):
        """x: (N, 24, 60) already normalized -> (N, 12)."""
        out = x[:, None, :, :] if x.ndim == 3 else x
        for layer in self.layers:
            out = layer.forward(out)
        return out

    def hidden_features(self, windows, batch: int = 256) -> np.ndarray:
        """Penultimate-layer activations (N, 64), the learned features."""
        windows = np.asarray(windows)
        out = []
        for i in range(0, len(windows), batch):
            x = self.normalize(windows[i:i + batch])[:, None, :, :]
            for layer in self.layers[:-1]:
                x = layer.forward(x)
            out.append(x.astype(np.float64))
        return np.vstack(out)

    def backward(self, dlogits):
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def param_tensors(self):
        """[(name, layer, attr)] for every trainable tensor, fixed order."""
        out = []
        for i, layer in enumerate(self.layers):
            for attr, owner in layer.params():
                out.append((f"layer{i}_{attr}", owner, attr))
        return out


def predict(model: CnnModel, window: np.ndarray) -> np.ndarray:
    """Class probabilities (12,) for one 24x60 window."""
    window = np.asarray(window)
    if window.shape != INPUT_SHAPE:
        raise ValueError(f"expected window {INPUT_SHAPE}, got {window.shape}")
    return predict_batch(model, window[None])[0]


def predict_batch(model: CnnModel, windows: np.ndarray,
                  batch: int = 256) -> np.ndarray:
    windows = np.asarray(windows)
    probs = np.empty((len(windows), N_CLASSES), dtype=np.float64)
    for i in range(0, len(windows), batch):
        x = model.normalize(windows[i:i + batch])
        probs[i:i + batch] = softmax(model.logits(x).astype(np.float64))
    return probs


# ---------------------------------------------------------------------------
# Training

@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 10
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


@dataclass
class TrainHistory:
    train_acc: list[float] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    test_acc: list[float | None] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = []
        for i in range(len(self.train_acc)):
            lines.append(json.dumps({
                "epoch": i + 1,
                "train_acc": self.train_acc[i],
                "test_acc": self.test_acc[i],
                "loss": self.train_loss[i],
            }))
        return "\n".join(lines) + "\n"


def train(train_windows: np.ndarray, train_labels: np.ndarray,
          config: TrainConfig = TrainConfig(),
          eval_set: tuple[np.ndarray, np.ndarray] | None = None,
          log=None) -> tuple[CnnModel, TrainHistory]:
    """Mini-batch SGD with momentum on cross-entropy; deterministic given
    the config seed. Per-epoch train accuracy is a full eval pass."""
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if len(train_windows) == 0:
        raise ValueError("empty training set")
    if train_labels.min() < 0 or train_labels.max() >= N_CLASSES:
        raise ValueError("labels out of range 0-11")

    model = CnnModel(seed=config.seed)
    model.norm_mean = np.mean(train_windows, axis=(0, 2)).astype(np.float64)
    model.norm_std = (np.std(train_windows, axis=(0, 2)) + 1e-9).astype(np.float64)

    rng = np.random.default_rng(config.seed + 1)
    tensors = model.param_tensors()
    velocity = {name: np.zeros_like(getattr(owner, attr))
                for name, owner, attr in tensors}

    history = TrainHistory()
    n = len(train_windows)
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        losses = []
        for i in range(0, n, config.batch_size):
            idx = order[i:i + config.batch_size]
            x = model.normalize(train_windows[idx])
            y = train_labels[idx]
            probs = softmax(model.logits(x).astype(np.float64))
            losses.append(cross_entropy(probs, y))
            dlogits = probs.copy()
            dlogits[np.arange(len(y)), y] -= 1.0
            dlogits /= len(y)
            model.backward(dlogits.astype(model.dtype))
            for name, owner, attr in tensors:
                grad = getattr(owner, "d" + attr)
                v = velocity[name]
                v *= config.momentum
                v -= config.learning_rate * grad
                getattr(owner, attr)[...] += v

        train_acc, _ = evaluate(model, train_windows, train_labels)
        test_acc = None
        if eval_set is not None:
            test_acc, _ = evaluate(model, eval_set[0], eval_set[1])
        history.train_acc.append(train_acc)
        history.train_loss.append(float(np.mean(losses)))
        history.test_acc.append(test_acc)
        if log is not None:
            log(epoch + 1, history)
    return model, history


def evaluate(model: CnnModel, windows: np.ndarray,
             labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Accuracy and 12x12 confusion matrix (rows = true class)."""
    if len(windows) == 0:
        raise ValueError("empty evaluation set")
    labels = np.asarray(labels, dtype=np.int64)
    pred = predict_batch(model, windows).argmax(axis=1)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (labels, pred), 1)
    accuracy = float(np.trace(confusion) / len(labels))
    return accuracy, confusion


# ---------------------------------------------------------------------------
# Gradient check

def grad_check(model: CnnModel, windows: np.ndarray, labels: np.ndarray,
               epsilon: float = 1e-4, n_params: int = 240,
               seed: int = 0) -> float:
    """Max relative error between analytic and central-difference
    gradients over a random parameter subset spanning every layer.

    The model must be float64. The relative-error denominator is floored
    at 1e-3 so near-zero gradients compare on an absolute scale. Where a
    parameter sits within `epsilon` of a ReLU kink or pooling tie the
    fixed-step difference is invalid; the step is then refined (/10,
    twice) and the best agreement kept — a wrong analytic gradient stays
    wrong at every step size, so refinement cannot mask real bugs.
    """
    if model.dtype != np.float64:
        raise ValueError("gradient check requires a float64 model")
    x = model.normalize(windows)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)

    probs = softmax(model.logits(x))
    dlogits = probs.copy()
    dlogits[np.arange(len(labels)), labels] -= 1.0
    dlogits /= len(labels)
    model.backward(dlogits)

    def loss_now():
        return cross_entropy(softmax(model.logits(x)), labels)

    def rel_error(theta, idx, a, h):
        orig = theta[idx]
        theta[idx] = orig + h
        lp = loss_now()
        theta[idx] = orig - h
        lm = loss_now()
        theta[idx] = orig
        numeric = (lp - lm) / (2 * h)
        return abs(a - numeric) / max(abs(a), abs(numeric), 1e-3)

    tensors = model.param_tensors()
    per_tensor = max(1, n_params // len(tensors))
    worst = 0.0
    for name, owner, attr in tensors:
        theta = getattr(owner, attr)
        analytic = getattr(owner, "d" + attr)
        flat_idx = rng.choice(theta.size, size=min(per_tensor, theta.size),
                              replace=False)
        for fi in flat_idx:
            idx = np.unravel_index(fi, theta.shape)
            best = np.inf
            for k in range(3):
                best = min(best, rel_error(theta, idx, analytic[idx],
                                           epsilon / 10**k))
                if best <= 1e-6:
                    break
            worst = max(worst, best)
    return worst


def final_bias_gradient(model: CnnModel, windows: np.ndarray,
                        labels: np.ndarray) -> np.ndarray:
    """Analytic final-layer bias gradient for the closed-form check
    (softmax - onehot, averaged over the batch)."""
    x = model.normalize(windows)
    labels = np.asarray(labels, dtype=np.int64)
    probs = softmax(model.logits(x).astype(np.float64))
    dlogits = probs.copy()
    dlogits[np.arange(len(labels)), labels] -= 1.0
    dlogits /= len(labels)
    model.backward(dlogits.astype(model.dtype))
    return model.layers[-1].db


# ---------------------------------------------------------------------------
# Baselines

def knn_baseline(train_x, train_y, test_x, test_y, k: int = 5) -> float:
    """Euclidean kNN on flattened windows; ties break to the lowest id."""
    if len(train_x) == 0 or len(test_x) == 0:
        raise ValueError("empty set")
    if k < 1:
        raise ValueError("k must be >= 1")
    a = np.asarray(train_x, dtype=np.float64).reshape(len(train_x), -1)
    b = np.asarray(test_x, dtype=np.float64).reshape(len(test_x), -1)
    train_y = np.asarray(train_y, dtype=np.int64)
    d2 = (np.sum(b**2, axis=1)[:, None] + np.sum(a**2, axis=1)[None, :]
          - 2.0 * b @ a.T)
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
    pred = np.empty(len(b), dtype=np.int64)
    for i, row in enumerate(nearest):
        pred[i] = np.bincount(train_y[row], minlength=N_CLASSES).argmax()
    return float(np.mean(pred == np.asarray(test_y)))


def logistic_baseline(train_x, train_y, test_x, test_y,
                      learning_rate: float = 0.1, epochs: int = 200,
                      seed: int = 0) -> float:
    """Multinomial logistic regression, full-batch gradient descent on
    standardized flattened windows."""
    if len(train_x) == 0 or len(test_x) == 0:
        raise ValueError("empty set")
    a = np.asarray(train_x, dtype=np.float64).reshape(len(train_x), -1)
    b = np.asarray(test_x, dtype=np.float64).reshape(len(test_x), -1)
    mean, std = a.mean(axis=0), a.std(axis=0) + 1e-9
    a = (a - mean) / std
    b = (b - mean) / std
    y = np.asarray(train_y, dtype=np.int64)

    rng = np.random.default_rng(seed)
    w = rng.normal(0, 0.01, (a.shape[1], N_CLASSES))
    bias = np.zeros(N_CLASSES)
    onehot = np.eye(N_CLASSES)[y]
    for _ in range(epochs):
        probs = softmax(a @ w + bias)
        d = (probs - onehot) / len(a)
        w -= learning_rate * (a.T @ d)
        bias -= learning_rate * d.sum(axis=0)
    pred = (b @ w + bias).argmax(axis=1)
    return float(np.mean(pred == np.asarray(test_y)))


# ---------------------------------------------------------------------------
# Checkpoints

def save_checkpoint(path, model: CnnModel) -> None:
    arrays = [(name, np.asarray(getattr(owner, attr)))
              for name, owner, attr in model.param_tensors()]
    arrays.append(("norm_mean", np.asarray(model.norm_mean)))
    arrays.append(("norm_std", np.asarray(model.norm_std)))
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<HH", CHECKPOINT_VERSION, len(arrays)))
        for name, arr in arrays:
            encoded = name.encode("ascii")
            f.write(struct.pack("<B", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for _, arr in arrays:
            f.write(arr.astype("<f4").tobytes())


def load_checkpoint(path, dtype=np.float32) -> CnnModel:
    with open(path, "rb") as f:
        if f.read(4) != CHECKPOINT_MAGIC:
            raise ValueError("bad checkpoint magic")
        version, n_arrays = struct.unpack("<HH", f.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        table = []
        for _ in range(n_arrays):
            name_len = struct.unpack("<B", f.read(1))[0]
            name = f.read(name_len).decode("ascii")
            ndim = struct.unpack("<B", f.read(1))[0]
            shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
            table.append((name, shape))
        data = {}
        for name, shape in table:
            count = int(np.prod(shape))
            data[name] = np.frombuffer(
                f.read(4 * count), dtype="<f4").reshape(shape)

    model = CnnModel(dtype=dtype)
    for name, owner, attr in model.param_tensors():
        if name not in data:
            raise ValueError(f"checkpoint missing tensor {name}")
        if data[name].shape != getattr(owner, attr).shape:
            raise ValueError(f"checkpoint shape mismatch for {name}")
        setattr(owner, attr, data[name].astype(dtype))
    model.norm_mean = data["norm_mean"].astype(np.float64)
    model.norm_std = data["norm_std"].astype(np.float64)
    return model
