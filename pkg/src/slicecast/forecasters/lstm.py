"""Single-layer LSTM regressor trained by backpropagation through time.

Cell (gate order i, f, o, g)::

    i = sigmoid(W_i x + U_i h + b_i)     f, o likewise
    g = tanh(W_g x + U_g h + b_g)
    c' = f * c + i * g
    h' = o * tanh(c')

The prediction for a window of L rows is ``w_y . h_L + b_y`` with
``h_0 = c_0 = 0``. Everything is vectorized over the batch axis.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, NamedTuple

import numpy as np

from ..errors import DataError, TrainingDivergedError
from ..features import FeatureMatrix, Scaler, SplitSpec
from .base import Forecast

GATES = ("i", "f", "o", "g")


@dataclass(frozen=True)
class WindowedDataset:
    """Sliding windows: ``inputs[i]`` = feature rows [i, i+L), ``labels[i]`` = target[i+L]."""

    window_len: int
    inputs: np.ndarray  # (N, L, F)
    labels: np.ndarray  # (N,)

    def __len__(self) -> int:
        return len(self.labels)


def make_windows(features: FeatureMatrix | np.ndarray, target: np.ndarray, window_len: int) -> WindowedDataset:
    x = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=float)
    y = np.asarray(target, dtype=float)
    if window_len < 1:
        raise ValueError("window length must be >= 1")
    if len(y) != x.shape[0]:
        raise DataError(f"target length {len(y)} does not match {x.shape[0]} feature rows")
    n = x.shape[0] - window_len
    if n < 1:
        raise DataError(f"need more than {window_len} periods to build windows, got {x.shape[0]}")
    idx = np.arange(n)[:, None] + np.arange(window_len)[None, :]
    return WindowedDataset(window_len, x[idx], y[window_len:].copy())


@dataclass
class LstmParams:
    W_i: np.ndarray
    W_f: np.ndarray
    W_o: np.ndarray
    W_g: np.ndarray
    U_i: np.ndarray
    U_f: np.ndarray
    U_o: np.ndarray
    U_g: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_g: np.ndarray
    w_y: np.ndarray
    b_y: float

    @property
    def hidden(self) -> int:
        return self.W_i.shape[0]

    @property
    def n_features(self) -> int:
        return self.W_i.shape[1]

    @classmethod
    def zeros(cls, n_features: int, hidden: int) -> "LstmParams":
        H, F = hidden, n_features
        return cls(*(np.zeros((H, F)) for _ in GATES), *(np.zeros((H, H)) for _ in GATES),
                   *(np.zeros(H) for _ in GATES), np.zeros(H), 0.0)

    @classmethod
    def init(cls, n_features: int, hidden: int, rng: np.random.Generator,
             forget_bias: float = 1.0) -> "LstmParams":
        """Uniform(-1/sqrt(H), 1/sqrt(H)) everywhere, then forget bias set to ``forget_bias``."""
        k = 1.0 / np.sqrt(hidden)
        p = cls.zeros(n_features, hidden)
        vec = rng.uniform(-k, k, size=p.size)
        p = p.unflatten(vec)
        p.b_f = np.full(hidden, float(forget_bias))
        return p

    def arrays(self) -> list[np.ndarray]:
        return [np.atleast_1d(np.asarray(getattr(self, f.name), dtype=float)) for f in fields(self)]

    @property
    def size(self) -> int:
        return sum(a.size for a in self.arrays())

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, vec: np.ndarray) -> "LstmParams":
        """New params with this instance's shapes filled from ``vec``."""
        out, pos = [], 0
        for a in self.arrays():
            out.append(np.array(vec[pos:pos + a.size], dtype=float).reshape(a.shape))
            pos += a.size
        if pos != len(vec):
            raise ValueError(f"vector of length {len(vec)} does not fit {pos} parameters")
        out[-1] = float(out[-1][0])
        return LstmParams(*out)

    def copy(self) -> "LstmParams":
        return self.unflatten(self.flatten())

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        W = np.concatenate([self.W_i, self.W_f, self.W_o, self.W_g], axis=0)
        U = np.concatenate([self.U_i, self.U_f, self.U_o, self.U_g], axis=0)
        b = np.concatenate([self.b_i, self.b_f, self.b_o, self.b_g])
        return W, U, b

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            "hidden": self.hidden,
            "arrays": {f.name: np.asarray(getattr(self, f.name)).tolist() for f in fields(self)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LstmParams":
        p = cls.zeros(int(d["n_features"]), int(d["hidden"]))
        arrays = d["arrays"]
        kwargs = {}
        for f in fields(cls):
            ref = getattr(p, f.name)
            if f.name == "b_y":
                kwargs[f.name] = float(arrays[f.name])
                continue
            a = np.asarray(arrays[f.name], dtype=float)
            if a.shape != ref.shape:
                raise DataError(f"parameter {f.name} has shape {a.shape}, expected {ref.shape}")
            kwargs[f.name] = a
        return cls(**kwargs)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class _Cache(NamedTuple):
    x: np.ndarray      # (B, L, F)
    h: np.ndarray      # (L+1, B, H); h[0] = 0
    c: np.ndarray      # (L+1, B, H); c[0] = 0
    gates: np.ndarray  # (L, B, 4H) activated i, f, o, g
    tanh_c: np.ndarray  # (L, B, H)


def _forward(params: LstmParams, x: np.ndarray) -> tuple[np.ndarray, _Cache]:
    B, L, F = x.shape
    if F != params.n_features:
        raise DataError(f"window has {F} features, model expects {params.n_features}")
    H = params.hidden
    W, U, b = params.stacked()
    h = np.zeros((L + 1, B, H))
    c = np.zeros((L + 1, B, H))
    gates = np.empty((L, B, 4 * H))
    tanh_c = np.empty((L, B, H))
    xw = x @ W.T + b  # (B, L, 4H)
    for t in range(L):
        z = xw[:, t] + h[t] @ U.T
        gates[t, :, :3 * H] = _sigmoid(z[:, :3 * H])
        gates[t, :, 3 * H:] = np.tanh(z[:, 3 * H:])
        i, f, o, g = (gates[t, :, k * H:(k + 1) * H] for k in range(4))
        c[t + 1] = f * c[t] + i * g
        tanh_c[t] = np.tanh(c[t + 1])
        h[t + 1] = o * tanh_c[t]
    yhat = h[L] @ params.w_y + params.b_y
    return yhat, _Cache(x, h, c, gates, tanh_c)


def lstm_forward(params: LstmParams, window: np.ndarray):
    """Prediction for one L x F window (or a B x L x F batch) and the BPTT cache."""
    window = np.asarray(window, dtype=float)
    if window.ndim == 2:
        yhat, cache = _forward(params, window[None])
        return float(yhat[0]), cache
    if window.ndim != 3:
        raise DataError("window must be L x F (or B x L x F)")
    return _forward(params, window)


def lstm_predict(params: LstmParams, inputs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=float)
    return np.concatenate([_forward(params, inputs[s:s + chunk])[0]
                           for s in range(0, len(inputs), chunk)]) if len(inputs) else np.zeros(0)


def lstm_loss_grad(params: LstmParams, inputs: np.ndarray, labels: np.ndarray) -> tuple[float, LstmParams]:
    """Mean squared error over the batch and its exact gradient."""
    inputs = np.asarray(inputs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(labels) == 0:
        raise DataError("batch is empty")
    yhat, cache = _forward(params, inputs)
    resid = yhat - labels
    loss = float(np.mean(resid ** 2))
    B, L, F = inputs.shape
    H = params.hidden
    W, U, _ = params.stacked()

    dy = 2.0 * resid / B
    dw_y = cache.h[L].T @ dy
    db_y = float(dy.sum())
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H)
    dh = np.outer(dy, params.w_y)
    dc = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in reversed(range(L)):
        i, f, o, g = (cache.gates[t, :, k * H:(k + 1) * H] for k in range(4))
        tc = cache.tanh_c[t]
        dc = dc + dh * o * (1.0 - tc ** 2)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cache.c[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
        dz[:, 3 * H:] = dc * i * (1.0 - g ** 2)
        dW += dz.T @ cache.x[:, t]
        dU += dz.T @ cache.h[t]
        db += dz.sum(axis=0)
        dh = dz @ U
        dc = dc * f

    s = [slice(k * H, (k + 1) * H) for k in range(4)]
    grads = LstmParams(
        *(dW[k] for k in s), *(dU[k] for k in s), *(db[k] for k in s), dw_y, db_y,
    )
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    window_len: int = 24
    hidden: int = 32
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 0
    lr_decay: float = 1.0  # learning rate multiplier applied after every epoch
    weight_decay: float = 0.0  # decoupled (AdamW-style); 0 gives plain Adam

    def __post_init__(self):
        for name in ("window_len", "hidden", "batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.learning_rate <= 0 or self.clip_norm <= 0:
            raise ValueError("learning_rate and clip_norm must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")


class Adam:
    def __init__(self, size: int, lr: float, beta1: float, beta2: float, eps: float,
                 weight_decay: float = 0.0):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        step = self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        if self.weight_decay:
            step = step + self.lr * self.weight_decay * theta
        return theta - step


def clip_by_global_norm(grad: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


def lstm_train(dataset: WindowedDataset, cfg: TrainConfig,
               on_epoch: Callable[[int, float], None] | None = None,
               init: LstmParams | None = None) -> LstmParams:
    """Adam over seeded shuffled minibatches; ``on_epoch(epoch, full_loss)`` after each epoch."""
    if len(dataset) == 0:
        raise DataError("training set is empty")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n_features = dataset.inputs.shape[2]
    params = init.copy() if init is not None else LstmParams.init(n_features, cfg.hidden, rng)
    if cfg.epochs == 0:
        return params
    theta = params.flatten()
    opt = Adam(theta.size, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay)
    n = len(dataset)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = lstm_loss_grad(params, dataset.inputs[idx], dataset.labels[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}; try a smaller learning rate"
                )
            theta = opt.step(theta, clip_by_global_norm(grads.flatten(), cfg.clip_norm))
            params = params.unflatten(theta)
        if on_epoch is not None:
            on_epoch(epoch, float(np.mean((lstm_predict(params, dataset.inputs) - dataset.labels) ** 2)))
        opt.lr *= cfg.lr_decay
    return params


def rolling_forecast(params: LstmParams, full_features: FeatureMatrix | np.ndarray,
                     target_scaler: Scaler, spec: SplitSpec, window_len: int,
                     app_id: str = "", view: str = "") -> Forecast:
    """One-step-ahead forecasts for every test period from observed feature rows.

    ``full_features`` must already be scaled and cover all train+test periods.
    Test period t uses rows [t - L, t).
    """
    x = full_features.values if isinstance(full_features, FeatureMatrix) else np.asarray(full_features, dtype=float)
    spec.check(x.shape[0])
    if spec.train_periods < window_len:
        raise DataError(f"need at least {window_len} periods of history, training has {spec.train_periods}")
    t = spec.train_periods + np.arange(spec.test_periods)
    windows = x[t[:, None] - window_len + np.arange(window_len)[None, :]]
    scaled = lstm_predict(params, windows)
    values = np.maximum(target_scaler.inverse_transform(scaled).reshape(-1), 0.0)
    return Forecast(app_id, view, values, start=spec.train_periods)
