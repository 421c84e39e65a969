"""Recurrent network with bell-curve gate activations, written from scratch.

The cell follows standard LSTM wiring over the concatenated [h_prev, x_t],
but every gate and both cell nonlinearities use the Hermite bell activation
a(x) = exp(-x^2/2)(1 - x^2) instead of sigmoids and tanh:

    i, f, o, g = a(W [h_prev, x] + b)        (four row blocks of W)
    c_t = f * c_prev + i * g
    h_t = o * a(c_t)

Gates are therefore not confined to (0, 1); they live in the activation's
range [-2 exp(-3/2), 1], which the forward pass asserts. A dense head with
two bell-activated layers and a linear 3-wide output maps each hidden
state to the predicted (n, v, g) channels on z-scored scale.

Gradients are exact backpropagation through time using the activation's
closed-form derivative; nothing is trained by automatic differentiation.
The sequential recurrence runs inside numba kernels for speed, single
threaded, so repeated runs with one seed are bit-identical.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .errors import DivergedTraining, MalformedRow, NonFinite, ShapeMismatch
from .hermite import ACTIVATION_MIN, hermite_activation, hermite_activation_grad
from .ode import Trajectory
from .records import format_float

GATE_RANGE_SLACK = 1e-9


@njit(cache=True)
def _seq_forward(wh, zx, h0, c0):
    """Run the cell over a sequence; zx already holds W_x x_t + b per step.

    Returns pre-activations Z, gate activations A (row blocks i|f|o|g),
    the Gaussian factors EZ/EC of the activations (cached so the backward
    sweep needs no exponentials), cell states C, activated cells HC and
    hidden states HOUT.
    """
    steps, gates4 = zx.shape
    hidden = h0.shape[0]
    Z = np.empty((steps, gates4))
    A = np.empty((steps, gates4))
    EZ = np.empty((steps, gates4))
    C = np.empty((steps, hidden))
    EC = np.empty((steps, hidden))
    HC = np.empty((steps, hidden))
    HOUT = np.empty((steps, hidden))
    h_prev = h0.copy()
    c_prev = c0.copy()
    for t in range(steps):
        zrow = wh @ h_prev
        for r in range(gates4):
            z = zrow[r] + zx[t, r]
            Z[t, r] = z
            e = math.exp(-0.5 * z * z)
            EZ[t, r] = e
            A[t, r] = e * (1.0 - z * z)
        for u in range(hidden):
            cc = A[t, hidden + u] * c_prev[u] + A[t, u] * A[t, 3 * hidden + u]
            C[t, u] = cc
            e = math.exp(-0.5 * cc * cc)
            EC[t, u] = e
            hc = e * (1.0 - cc * cc)
            HC[t, u] = hc
            HOUT[t, u] = A[t, 2 * hidden + u] * hc
        for u in range(hidden):
            h_prev[u] = HOUT[t, u]
            c_prev[u] = C[t, u]
    return Z, A, EZ, C, EC, HC, HOUT


@njit(cache=True)
def _seq_backward(wh_t, Z, A, EZ, C, EC, HC, dhout, c0):
    """Exact reverse-mode sweep over the recurrence.

    dhout carries dLoss/dh_t from the head; returns the per-step
    pre-activation gradients dZ (the weight and bias gradients are plain
    matrix products of dZ with the cached states, formed by the caller)
    and the gradients reaching the initial states. Activation derivatives
    reuse the cached Gaussian factors: a'(x) = -x e^{-x^2/2} (3 - x^2).
    """
    steps, gates4 = Z.shape
    hidden = HC.shape[1]
    dZ = np.empty((steps, gates4))
    dh_carry = np.zeros(hidden)
    dc_carry = np.zeros(hidden)
    for t in range(steps - 1, -1, -1):
        for u in range(hidden):
            dh = dhout[t, u] + dh_carry[u]
            o = A[t, 2 * hidden + u]
            cc = C[t, u]
            dc = dc_carry[u] + dh * o * (-cc * EC[t, u] * (3.0 - cc * cc))
            c_prev = C[t - 1, u] if t > 0 else c0[u]
            dZ[t, u] = dc * A[t, 3 * hidden + u]
            dZ[t, hidden + u] = dc * c_prev
            dZ[t, 2 * hidden + u] = dh * HC[t, u]
            dZ[t, 3 * hidden + u] = dc * A[t, u]
            dc_carry[u] = dc * A[t, hidden + u]
        for r in range(gates4):
            z = Z[t, r]
            dZ[t, r] = dZ[t, r] * (-z * EZ[t, r] * (3.0 - z * z))
        dh_carry = wh_t @ dZ[t]
    return dZ, dh_carry, dc_carry


@dataclass
class HlstmCell:
    """Gate weights over [h_prev, x_t]; row blocks ordered i, f, o, g."""

    w: np.ndarray  # (4*hidden, hidden + input)
    b: np.ndarray  # (4*hidden,)

    @property
    def hidden_size(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w.shape[1] - self.hidden_size

    def _block(self, arr, k):
        h = self.hidden_size
        return arr[k * h:(k + 1) * h]

    @property
    def w_i(self):
        return self._block(self.w, 0)

    @property
    def w_f(self):
        return self._block(self.w, 1)

    @property
    def w_o(self):
        return self._block(self.w, 2)

    @property
    def w_g(self):
        return self._block(self.w, 3)

    @property
    def b_i(self):
        return self._block(self.b, 0)

    @property
    def b_f(self):
        return self._block(self.b, 1)

    @property
    def b_o(self):
        return self._block(self.b, 2)

    @property
    def b_g(self):
        return self._block(self.b, 3)

    @classmethod
    def create(cls, hidden_size: int, input_size: int,
               rng: np.random.Generator, weight_scale: float = 0.08,
               gate_bias_span: float = 1.0) -> "HlstmCell":
        w = rng.uniform(-weight_scale, weight_scale,
                        (4 * hidden_size, hidden_size + input_size))
        b = rng.uniform(-gate_bias_span, gate_bias_span, 4 * hidden_size)
        return cls(w=w, b=b)


@dataclass
class DenseHead:
    """Two bell-activated layers and a linear output of fixed width 3."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @classmethod
    def create(cls, hidden_size: int, sizes: tuple[int, int],
               n_outputs: int, rng: np.random.Generator,
               weight_scale: float = 0.08) -> "DenseHead":
        d1, d2 = sizes
        return cls(
            w1=rng.uniform(-weight_scale, weight_scale, (d1, hidden_size)),
            b1=np.zeros(d1),
            w2=rng.uniform(-weight_scale, weight_scale, (d2, d1)),
            b2=np.zeros(d2),
            w3=rng.uniform(-weight_scale, weight_scale, (n_outputs, d2)),
            b3=np.zeros(n_outputs),
        )


@dataclass
class Normalization:
    """Per-channel z-score transform; zero-variance channels keep scale 1."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalization":
        mean = data.mean(axis=0)
        std = data.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def normalize(self, data: np.ndarray) -> np.ndarray:
        return (data - self.mean) / self.std

    def denormalize(self, data: np.ndarray) -> np.ndarray:
        return data * self.std + self.mean


_IDENTITY1 = Normalization(mean=np.zeros(1), std=np.ones(1))


@dataclass
class TrainConfig:
    """Optimizer and loop settings; the loss is mean squared error."""

    epochs: int = 2505
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class HlstmNetwork:
    """Cell plus head plus the normalization fitted during training."""

    cell: HlstmCell
    head: DenseHead
    input_norm: Normalization = field(
        default_factory=lambda: _IDENTITY1)
    target_norm: Normalization = field(
        default_factory=lambda: Normalization(mean=np.zeros(3),
                                              std=np.ones(3)))

    @classmethod
    def create(cls, hidden_size: int = 71, input_size: int = 1,
               dense_sizes: tuple[int, int] = (20, 26), n_outputs: int = 3,
               seed: int = 0, weight_scale: float = 0.08,
               gate_bias_span: float = 1.0) -> "HlstmNetwork":
        rng = np.random.default_rng(seed)
        cell = HlstmCell.create(hidden_size, input_size, rng,
                                weight_scale, gate_bias_span)
        head = DenseHead.create(hidden_size, dense_sizes, n_outputs, rng,
                                weight_scale)
        return cls(cell=cell, head=head)

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "cell.w": self.cell.w,
            "cell.b": self.cell.b,
            "head.w1": self.head.w1,
            "head.b1": self.head.b1,
            "head.w2": self.head.w2,
            "head.b2": self.head.b2,
            "head.w3": self.head.w3,
            "head.b3": self.head.b3,
        }


def _check_gates(acts: np.ndarray) -> None:
    lo = ACTIVATION_MIN - GATE_RANGE_SLACK
    hi = 1.0 + GATE_RANGE_SLACK
    if not (np.all(acts >= lo) and np.all(acts <= hi)):
        raise NonFinite("gate activations left the bell-curve range "
                        f"[{ACTIVATION_MIN}, 1]")


def cell_forward(cell: HlstmCell, h_prev: np.ndarray, c_prev: np.ndarray,
                 x_t: np.ndarray):
    """One recurrence step; returns (h_t, c_t, cached intermediates)."""
    h_prev = np.asarray(h_prev, dtype=float)
    c_prev = np.asarray(c_prev, dtype=float)
    x_t = np.atleast_1d(np.asarray(x_t, dtype=float))
    hidden = cell.hidden_size
    if h_prev.shape != (hidden,) or c_prev.shape != (hidden,):
        raise ShapeMismatch(
            f"state shapes {h_prev.shape}/{c_prev.shape} do not match "
            f"hidden size {hidden}")
    if x_t.shape != (cell.input_size,):
        raise ShapeMismatch(
            f"input shape {x_t.shape} does not match input size "
            f"{cell.input_size}")
    if not (np.all(np.isfinite(h_prev)) and np.all(np.isfinite(c_prev))
            and np.all(np.isfinite(x_t))):
        raise NonFinite("cell_forward inputs must be finite")
    zx = (cell.w[:, hidden:] @ x_t + cell.b).reshape(1, -1)
    Z, A, _EZ, C, _EC, HC, HOUT = _seq_forward(
        np.ascontiguousarray(cell.w[:, :hidden]), zx, h_prev, c_prev)
    _check_gates(A)
    cache = {"z": Z[0], "gates": A[0], "c": C[0], "hc": HC[0]}
    return HOUT[0], C[0], cache


def _head_forward(head: DenseHead, hout: np.ndarray):
    p1 = hout @ head.w1.T + head.b1
    a1 = hermite_activation(p1)
    p2 = a1 @ head.w2.T + head.b2
    a2 = hermite_activation(p2)
    y = a2 @ head.w3.T + head.b3
    return y, (p1, a1, p2, a2)


def _head_backward(head: DenseHead, hout: np.ndarray, cache, dy: np.ndarray):
    p1, a1, p2, a2 = cache
    grads = {
        "head.w3": dy.T @ a2,
        "head.b3": dy.sum(axis=0),
    }
    dp2 = (dy @ head.w3) * hermite_activation_grad(p2)
    grads["head.w2"] = dp2.T @ a1
    grads["head.b2"] = dp2.sum(axis=0)
    dp1 = (dp2 @ head.w2) * hermite_activation_grad(p1)
    grads["head.w1"] = dp1.T @ hout
    grads["head.b1"] = dp1.sum(axis=0)
    dhout = dp1 @ head.w1
    return dhout, grads


def _forward_norm(net: HlstmNetwork, x_norm: np.ndarray):
    """Full normalized-scale forward; returns predictions and BPTT cache."""
    hidden = net.cell.hidden_size
    if x_norm.ndim != 2 or x_norm.shape[1] != net.cell.input_size:
        raise ShapeMismatch(f"input array must be (steps, "
                            f"{net.cell.input_size})")
    zx = x_norm @ net.cell.w[:, hidden:].T + net.cell.b
    h0 = np.zeros(hidden)
    c0 = np.zeros(hidden)
    Z, A, EZ, C, EC, HC, HOUT = _seq_forward(
        np.ascontiguousarray(net.cell.w[:, :hidden]), zx, h0, c0)
    _check_gates(A)
    y, head_cache = _head_forward(net.head, HOUT)
    cache = (x_norm, Z, A, EZ, C, EC, HC, HOUT, h0, c0, head_cache, y)
    return y, cache


def network_forward(net: HlstmNetwork, times: Sequence[float]) -> np.ndarray:
    """Predicted (n, v, g) per time point, on the original scale.

    The sequence is processed statefully in the given order; this is not
    a pointwise map, so permuting the input permutes nothing cleanly.
    """
    x = np.asarray(times, dtype=float).reshape(-1, 1)
    y_norm, _ = _forward_norm(net, net.input_norm.normalize(x))
    return net.target_norm.denormalize(y_norm)


def backward(net: HlstmNetwork, x_norm: np.ndarray, targets_norm: np.ndarray,
             cache=None) -> dict[str, np.ndarray]:
    """Exact MSE gradients for every parameter via BPTT."""
    if cache is None:
        _, cache = _forward_norm(net, x_norm)
    _, Z, A, EZ, C, EC, HC, HOUT, h0, c0, head_cache, y = cache
    if targets_norm.shape != y.shape:
        raise ShapeMismatch(f"targets shape {targets_norm.shape} does not "
                            f"match predictions {y.shape}")
    hidden = net.cell.hidden_size
    dy = (2.0 / y.size) * (y - targets_norm)
    dhout, grads = _head_backward(net.head, HOUT, head_cache, dy)
    wh_t = np.ascontiguousarray(net.cell.w[:, :hidden].T)
    dZ, _dh0, _dc0 = _seq_backward(wh_t, Z, A, EZ, C, EC, HC, dhout, c0)
    # recurrent weights see h_{t-1}: pair dZ rows 1.. with HOUT rows ..-1
    dwh = dZ[1:].T @ HOUT[:-1] + np.outer(dZ[0], h0)
    grads["cell.w"] = np.concatenate([dwh, dZ.T @ x_norm], axis=1)
    grads["cell.b"] = dZ.sum(axis=0)
    return grads


def mse(y: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((y - targets) ** 2))


def clip_gradients(grads: dict[str, np.ndarray],
                   max_norm: float) -> dict[str, np.ndarray]:
    """Scale all gradients in place so their global norm is <= max_norm."""
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return grads


class Adam:
    """Adaptive-moment optimizer, bias-corrected, deterministic."""

    def __init__(self, params: dict[str, np.ndarray],
                 learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def training_arrays(net: HlstmNetwork,
                    traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Fit normalization on the trajectory and return z-scored (x, targets).

    Targets are the n, v, g channels; d is integrated by the simulator but
    not predicted (the output head is 3 wide).
    """
    x_raw = traj.times.reshape(-1, 1)
    targets_raw = np.column_stack([traj.n, traj.v, traj.g])
    net.input_norm = Normalization.fit(x_raw)
    net.target_norm = Normalization.fit(targets_raw)
    return (net.input_norm.normalize(x_raw),
            net.target_norm.normalize(targets_raw))


def train(net: HlstmNetwork, traj: Trajectory,
          config: TrainConfig) -> tuple[HlstmNetwork, np.ndarray]:
    """Full-batch Adam over the whole grid as one sequence per epoch.

    Returns the trained network and the per-epoch loss history, where
    entry e is the normalized MSE after e + 1 updates; the last entry is
    exactly the loss of the returned network on the training grid.
    """
    x, targets = training_arrays(net, traj)
    params = net.parameters()
    opt = Adam(params, config.learning_rate, config.beta1, config.beta2,
               config.eps)
    history = np.empty(config.epochs)
    y, cache = _forward_norm(net, x)
    for epoch in range(config.epochs):
        grads = backward(net, x, targets, cache)
        clip_gradients(grads, config.clip_norm)
        opt.step(params, grads)
        y, cache = _forward_norm(net, x)
        loss = mse(y, targets)
        if not math.isfinite(loss):
            raise DivergedTraining(f"loss became {loss} at epoch {epoch + 1}")
        history[epoch] = loss
    return net, history


# --- reporting -------------------------------------------------------------

CHANNELS = ("n", "v", "g")
HISTOGRAM_BINS = 20


@dataclass
class PredictionReport:
    """Prediction-vs-actual table plus residual distribution summaries."""

    times: np.ndarray
    actual: np.ndarray      # (steps, 3)
    predicted: np.ndarray   # (steps, 3)
    residuals: np.ndarray   # predicted - actual
    histograms: dict[str, tuple[np.ndarray, np.ndarray]]  # counts, edges
    summary: dict[str, dict[str, float]]
    mse_normalized: float


def predict_report(net: HlstmNetwork, traj: Trajectory) -> PredictionReport:
    predicted = network_forward(net, traj.times)
    actual = np.column_stack([traj.n, traj.v, traj.g])
    residuals = predicted - actual

    x_norm = net.input_norm.normalize(traj.times.reshape(-1, 1))
    y_norm, _ = _forward_norm(net, x_norm)
    mse_norm = mse(y_norm, net.target_norm.normalize(actual))

    histograms = {}
    summary = {}
    for ci, name in enumerate(CHANNELS):
        r = residuals[:, ci]
        counts, edges = np.histogram(r, bins=HISTOGRAM_BINS)
        histograms[name] = (counts, edges)
        summary[name] = {
            "mean": float(r.mean()),
            "std": float(r.std()),
            "max_abs": float(np.max(np.abs(r))),
        }
    return PredictionReport(times=traj.times, actual=actual,
                            predicted=predicted, residuals=residuals,
                            histograms=histograms, summary=summary,
                            mse_normalized=mse_norm)


PREDICTIONS_HEADER = "t,n_true,n_pred,v_true,v_pred,g_true,g_pred"
ERRORS_HEADER = "channel,bin_left,bin_right,count"
LOSS_HEADER = "epoch,mse"


def write_predictions(report: PredictionReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(PREDICTIONS_HEADER + "\n")
        for i, t in enumerate(report.times):
            cells = [format_float(t)]
            for ci in range(3):
                cells.append(format_float(report.actual[i, ci]))
                cells.append(format_float(report.predicted[i, ci]))
            f.write(",".join(cells) + "\n")


def write_errors(report: PredictionReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(ERRORS_HEADER + "\n")
        for name in CHANNELS:
            counts, edges = report.histograms[name]
            for bi in range(len(counts)):
                f.write(f"{name},{format_float(edges[bi])},"
                        f"{format_float(edges[bi + 1])},{int(counts[bi])}\n")


def write_loss(history: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(LOSS_HEADER + "\n")
        for epoch, value in enumerate(history, start=1):
            f.write(f"{epoch},{format_float(value)}\n")


# --- weight archive --------------------------------------------------------

MODEL_FORMAT = "gazedyn-hlstm-1"


def _encode_array(arr: np.ndarray) -> dict:
    data = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape),
            "dtype": "<f8",
            "data": base64.b64encode(data.tobytes()).decode("ascii")}


def _decode_array(payload: dict) -> np.ndarray:
    raw = base64.b64decode(payload["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(payload["shape"]).copy()


def save_model(net: HlstmNetwork, config: TrainConfig, path) -> None:
    """Flat named-array archive with a config echo, JSON on disk."""
    arrays = {name: _encode_array(arr)
              for name, arr in net.parameters().items()}
    arrays["norm.input_mean"] = _encode_array(net.input_norm.mean)
    arrays["norm.input_std"] = _encode_array(net.input_norm.std)
    arrays["norm.target_mean"] = _encode_array(net.target_norm.mean)
    arrays["norm.target_std"] = _encode_array(net.target_norm.std)
    payload = {
        "format": MODEL_FORMAT,
        "config": {
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "beta1": config.beta1,
            "beta2": config.beta2,
            "eps": config.eps,
            "clip_norm": config.clip_norm,
            "seed": config.seed,
            "hidden_size": net.cell.hidden_size,
            "input_size": net.cell.input_size,
            "dense_sizes": [net.head.b1.shape[0], net.head.b2.shape[0]],
            "n_outputs": net.head.b3.shape[0],
            "normalization": {
                "input_mean": net.input_norm.mean.tolist(),
                "input_std": net.input_norm.std.tolist(),
                "target_mean": net.target_norm.mean.tolist(),
                "target_std": net.target_norm.std.tolist(),
            },
        },
        "arrays": arrays,
    }
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(payload, f, sort_keys=True, indent=1)
        f.write("\n")


def load_model(path) -> tuple[HlstmNetwork, dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != MODEL_FORMAT:
        raise MalformedRow(f"{path}: not a {MODEL_FORMAT} archive")
    arrays = {name: _decode_array(spec)
              for name, spec in payload["arrays"].items()}
    cell = HlstmCell(w=arrays["cell.w"], b=arrays["cell.b"])
    head = DenseHead(w1=arrays["head.w1"], b1=arrays["head.b1"],
                     w2=arrays["head.w2"], b2=arrays["head.b2"],
                     w3=arrays["head.w3"], b3=arrays["head.b3"])
    net = HlstmNetwork(
        cell=cell, head=head,
        input_norm=Normalization(mean=arrays["norm.input_mean"],
                                 std=arrays["norm.input_std"]),
        target_norm=Normalization(mean=arrays["norm.target_mean"],
                                  std=arrays["norm.target_std"]))
    return net, payload["config"]
