"""From-scratch stacked LSTM for next-day case forecasting.

Three LSTM layers with inverted dropout between them and a dense head on
the final timestep, trained by full-gradient backpropagation through time
with Adam and gradient-norm clipping. Everything is plain numpy and fully
deterministic given the seed.

Gates follow the standard formulation, in order i, f, g, o:

    i = sigmoid(W_i x + U_i h + b_i)      f = sigmoid(W_f x + U_f h + b_f)
    g = tanh(W_g x + U_g h + b_g)         o = sigmoid(W_o x + U_o h + b_o)
    c' = f * c + i * g                    h' = o * tanh(c')

Series enter on the 0-100 normalized scale; the network divides inputs by
100 at entry and multiplies the dense output by 100 on exit (otherwise
0-100 inputs saturate the gates). Both constants are part of the
serialized format, and predictions/RMSE stay on the 0-100 scale.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    NumericalDivergence,
    SeriesTooShort,
    ShapeMismatch,
    TooFewSamples,
)
from .rng import CounterRng, derive_seed
from .series import RegionDataset

INPUT_SCALE = 0.01
OUTPUT_SCALE = 100.0

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8
_CLIP_NORM = 5.0


class FeatureSet(enum.Enum):
    CASES_ONLY = "cases_only"
    CASES_PLUS_RESTAURANT = "cases_plus_restaurant"
    CASES_PLUS_BAR = "cases_plus_bar"

    @property
    def n_features(self) -> int:
        return 1 if self is FeatureSet.CASES_ONLY else 2


@dataclass(frozen=True, eq=False)
class SupervisedSet:
    """Sliding-window samples: inputs (count, W, features), next-day targets.

    Each sample's W rows are the consecutive days immediately preceding its
    target date; start_index records the sample offset within the parent
    windowed set (0 for a freshly windowed set).
    """

    inputs: np.ndarray
    targets: np.ndarray
    sample_dates: tuple
    start_index: int = 0

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True, eq=False)
class LstmLayer:
    """One layer's parameters; rows of w_in/w_rec/bias stack gates i,f,g,o."""

    w_in: np.ndarray   # (4H, in_dim)
    w_rec: np.ndarray  # (4H, H)
    bias: np.ndarray   # (4H,)

    @property
    def hidden(self) -> int:
        return self.w_rec.shape[1]


@dataclass(frozen=True, eq=False)
class LstmNetwork:
    layers: tuple[LstmLayer, ...]
    dropout_rates: tuple[float, ...]
    dense_w: np.ndarray
    dense_b: float
    window: int
    features: int
    hidden_sizes: tuple[int, ...]
    seed: int

    def n_parameters(self) -> int:
        total = self.dense_w.size + 1
        for layer in self.layers:
            total += layer.w_in.size + layer.w_rec.size + layer.bias.size
        return int(total)


@dataclass(frozen=True, eq=False)
class ForecastEvaluation:
    """Held-out one-step predictions and their root mean square error."""

    predictions: np.ndarray
    actuals: np.ndarray
    n_test: int
    rmse: float
    split_index: int


# ---------------------------------------------------------------------------
# Windowing and splits
# ---------------------------------------------------------------------------

def make_windows(
    dataset: RegionDataset, window: int, feature_set: FeatureSet
) -> SupervisedSet:
    """Sliding windows over the selected feature columns.

    Targets are the cases value on the day after each window, so the sample
    count is len(dataset) - window.
    """
    n = len(dataset)
    if n <= window:
        raise SeriesTooShort(f"{n} days cannot fill a {window}-day window")
    if feature_set is FeatureSet.CASES_ONLY:
        matrix = dataset.cases.values[:, None]
    elif feature_set is FeatureSet.CASES_PLUS_RESTAURANT:
        matrix = np.column_stack([dataset.cases.values, dataset.restaurant.values])
    else:
        matrix = np.column_stack([dataset.cases.values, dataset.bar.values])
    count = n - window
    inputs = np.stack([matrix[i : i + window] for i in range(count)])
    targets = dataset.cases.values[window:].copy()
    return SupervisedSet(
        inputs=inputs,
        targets=targets,
        sample_dates=dataset.date_index[window:],
        start_index=0,
    )


def split_70_30(supervised: SupervisedSet) -> tuple[SupervisedSet, SupervisedSet]:
    """Chronological 70/30 split at floor(0.7 * count); no shuffling."""
    count = len(supervised)
    if count < 10:
        raise TooFewSamples(f"need >= 10 samples to split, got {count}")
    cut = int(math.floor(0.7 * count))
    train = SupervisedSet(
        inputs=supervised.inputs[:cut],
        targets=supervised.targets[:cut],
        sample_dates=supervised.sample_dates[:cut],
        start_index=supervised.start_index,
    )
    test = SupervisedSet(
        inputs=supervised.inputs[cut:],
        targets=supervised.targets[cut:],
        sample_dates=supervised.sample_dates[cut:],
        start_index=supervised.start_index + cut,
    )
    return train, test


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------

def init_network(
    hidden: tuple[int, ...] | list[int],
    window: int,
    features: int,
    dropout: float | tuple[float, ...] = 0.2,
    seed: int = 0,
) -> LstmNetwork:
    """Seeded uniform init scaled by 1/sqrt(fan-in).

    Forget-gate bias rows start at 1.0, all other biases at 0; identical
    seeds give bitwise-identical parameters.
    """
    hidden = tuple(int(h) for h in hidden)
    if not hidden or any(h < 1 for h in hidden):
        raise ValueError(f"hidden sizes must be positive, got {hidden}")
    if window < 1 or features < 1:
        raise ValueError("window and features must be positive")
    rates = (
        tuple(float(d) for d in dropout)
        if isinstance(dropout, (tuple, list))
        else (float(dropout),) * len(hidden)
    )
    if len(rates) != len(hidden) or any(not 0.0 <= d < 1.0 for d in rates):
        raise ValueError(f"dropout rates must lie in [0, 1), got {rates}")

    rng = CounterRng(derive_seed(seed, "init"))

    def uniform(rows: int, cols: int, fan_in: int) -> np.ndarray:
        scale = 1.0 / math.sqrt(fan_in)
        return (2.0 * rng.uniform(rows * cols) - 1.0).reshape(rows, cols) * scale

    layers = []
    in_dim = features
    for h in hidden:
        w_in = uniform(4 * h, in_dim, in_dim)
        w_rec = uniform(4 * h, h, h)
        bias = np.zeros(4 * h)
        bias[h : 2 * h] = 1.0
        layers.append(LstmLayer(w_in=w_in, w_rec=w_rec, bias=bias))
        in_dim = h
    dense_w = uniform(hidden[-1], 1, hidden[-1])[:, 0]
    return LstmNetwork(
        layers=tuple(layers),
        dropout_rates=rates,
        dense_w=dense_w,
        dense_b=0.0,
        window=int(window),
        features=int(features),
        hidden_sizes=hidden,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# Forward / backward engine (batched over samples)
# ---------------------------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _draw_masks(net: LstmNetwork, batch: int, rng: CounterRng) -> list[list[np.ndarray]] | None:
    """Inverted-dropout masks (already scaled by 1/keep) per layer/timestep."""
    if all(d == 0.0 for d in net.dropout_rates):
        return None
    masks = []
    for layer, rate in zip(net.layers, net.dropout_rates):
        h = layer.hidden
        per_step = []
        for _ in range(net.window):
            if rate == 0.0:
                per_step.append(np.ones((batch, h)))
            else:
                keep = 1.0 - rate
                per_step.append(rng.mask(keep, batch * h).reshape(batch, h) / keep)
        masks.append(per_step)
    return masks


def _forward_batch(
    net: LstmNetwork,
    batch: np.ndarray,
    masks: list[list[np.ndarray]] | None,
):
    """Run the whole stack over a (B, W, F) batch; returns predictions + cache."""
    b, w, f = batch.shape
    if w != net.window or f != net.features:
        raise ShapeMismatch(
            f"sample shape ({w}, {f}) vs network ({net.window}, {net.features})"
        )
    seq = [batch[:, t, :] * INPUT_SCALE for t in range(w)]
    layer_caches = []
    for idx, layer in enumerate(net.layers):
        h_dim = layer.hidden
        h = np.zeros((b, h_dim))
        c = np.zeros((b, h_dim))
        steps = []
        outs = []
        for t in range(w):
            z = seq[t] @ layer.w_in.T + h @ layer.w_rec.T + layer.bias
            gi = _sigmoid(z[:, :h_dim])
            gf = _sigmoid(z[:, h_dim : 2 * h_dim])
            gg = np.tanh(z[:, 2 * h_dim : 3 * h_dim])
            go = _sigmoid(z[:, 3 * h_dim :])
            c_new = gf * c + gi * gg
            tanh_c = np.tanh(c_new)
            h_new = go * tanh_c
            steps.append((seq[t], h, c, gi, gf, gg, go, tanh_c))
            h, c = h_new, c_new
            out = h_new if masks is None else h_new * masks[idx][t]
            outs.append(out)
        layer_caches.append(steps)
        seq = outs
    final = seq[-1]
    predictions = (final @ net.dense_w + net.dense_b) * OUTPUT_SCALE
    return predictions, (layer_caches, final, masks)


def _zero_grads(net: LstmNetwork) -> list[np.ndarray]:
    grads = []
    for layer in net.layers:
        grads += [np.zeros_like(layer.w_in), np.zeros_like(layer.w_rec), np.zeros_like(layer.bias)]
    grads += [np.zeros_like(net.dense_w), np.zeros(1)]
    return grads


def _backward_batch(net: LstmNetwork, cache, d_pred: np.ndarray) -> list[np.ndarray]:
    """Gradients of the loss wrt every parameter, given dLoss/dprediction."""
    layer_caches, final, masks = cache
    b = d_pred.shape[0]
    w = net.window
    grads = _zero_grads(net)

    d_scaled = d_pred * OUTPUT_SCALE
    grads[-2] += final.T @ d_scaled
    grads[-1][0] += float(d_scaled.sum())

    # gradient wrt each layer's (masked) output sequence; only the final
    # timestep of the top layer feeds the dense head
    d_out = [np.zeros((b, net.layers[-1].hidden)) for _ in range(w)]
    d_out[-1] = np.outer(d_scaled, net.dense_w)

    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        h_dim = layer.hidden
        steps = layer_caches[idx]
        g_w_in, g_w_rec, g_bias = grads[3 * idx], grads[3 * idx + 1], grads[3 * idx + 2]
        d_h = np.zeros((b, h_dim))
        d_c = np.zeros((b, h_dim))
        d_below = [None] * w
        for t in range(w - 1, -1, -1):
            x_t, h_prev, c_prev, gi, gf, gg, go, tanh_c = steps[t]
            dh = d_out[t] if masks is None else d_out[t] * masks[idx][t]
            dh = dh + d_h
            d_go = dh * tanh_c
            dc = d_c + dh * go * (1.0 - tanh_c * tanh_c)
            d_gf = dc * c_prev
            d_gi = dc * gg
            d_gg = dc * gi
            d_c = dc * gf
            dz = np.hstack(
                [
                    d_gi * gi * (1.0 - gi),
                    d_gf * gf * (1.0 - gf),
                    d_gg * (1.0 - gg * gg),
                    d_go * go * (1.0 - go),
                ]
            )
            g_w_in += dz.T @ x_t
            g_w_rec += dz.T @ h_prev
            g_bias += dz.sum(axis=0)
            d_h = dz @ layer.w_rec
            d_below[t] = dz @ layer.w_in
        d_out = d_below
    return grads


def _param_arrays(net: LstmNetwork) -> list[np.ndarray]:
    arrays = []
    for layer in net.layers:
        arrays += [layer.w_in, layer.w_rec, layer.bias]
    arrays += [net.dense_w, np.array([net.dense_b])]
    return arrays


def _rebuild(net: LstmNetwork, arrays: list[np.ndarray]) -> LstmNetwork:
    layers = []
    for i in range(len(net.layers)):
        layers.append(
            LstmLayer(w_in=arrays[3 * i], w_rec=arrays[3 * i + 1], bias=arrays[3 * i + 2])
        )
    return LstmNetwork(
        layers=tuple(layers),
        dropout_rates=net.dropout_rates,
        dense_w=arrays[-2],
        dense_b=float(arrays[-1][0]),
        window=net.window,
        features=net.features,
        hidden_sizes=net.hidden_sizes,
        seed=net.seed,
    )


# ---------------------------------------------------------------------------
# Public single-sample forward
# ---------------------------------------------------------------------------

def forward(
    net: LstmNetwork,
    sample: np.ndarray,
    training: bool = False,
    rng: CounterRng | None = None,
):
    """Predict one next-day value from a (W, features) sample.

    With training=True, inverted dropout is applied using masks drawn from
    `rng` (or a stream derived from the network seed when omitted), so the
    expectation over masks matches the training=False output. Returns
    (prediction, cache); the cache feeds gradient computations.
    """
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim != 2:
        raise ShapeMismatch(f"sample must be 2-d (window, features), got {sample.shape}")
    masks = None
    if training:
        if rng is None:
            rng = CounterRng(derive_seed(net.seed, "dropout"))
        masks = _draw_masks(net, 1, rng)
    predictions, cache = _forward_batch(net, sample[None, :, :], masks)
    return float(predictions[0]), cache


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train(
    net: LstmNetwork,
    train_set: SupervisedSet,
    epochs: int = 150,
    learning_rate: float = 1e-3,
) -> LstmNetwork:
    """Full-batch BPTT with MSE loss, Adam, and gradient clipping at norm 5.

    One Adam step per epoch over the whole training set; dropout masks are
    redrawn each epoch from the stream derived from the network seed.
    Deterministic given (seed, data, hyperparameters).
    """
    if len(train_set) == 0:
        raise TooFewSamples("training set is empty")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    batch = np.asarray(train_set.inputs, dtype=np.float64)
    targets = np.asarray(train_set.targets, dtype=np.float64)
    b = batch.shape[0]
    rng = CounterRng(derive_seed(net.seed, "dropout"))

    params = [a.copy() for a in _param_arrays(net)]
    moments1 = [np.zeros_like(a) for a in params]
    moments2 = [np.zeros_like(a) for a in params]
    current = _rebuild(net, params)
    step = 0
    for _ in range(epochs):
        masks = _draw_masks(current, b, rng)
        predictions, cache = _forward_batch(current, batch, masks)
        errors = predictions - targets
        loss = float(errors @ errors) / b
        if not math.isfinite(loss):
            raise NumericalDivergence(f"loss became {loss} at step {step}")
        grads = _backward_batch(current, cache, 2.0 * errors / b)

        norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads))
        if norm > _CLIP_NORM:
            scale = _CLIP_NORM / norm
            grads = [g * scale for g in grads]

        step += 1
        bias1 = 1.0 - _ADAM_BETA1 ** step
        bias2 = 1.0 - _ADAM_BETA2 ** step
        for j, grad in enumerate(grads):
            moments1[j] = _ADAM_BETA1 * moments1[j] + (1.0 - _ADAM_BETA1) * grad
            moments2[j] = _ADAM_BETA2 * moments2[j] + (1.0 - _ADAM_BETA2) * grad * grad
            m_hat = moments1[j] / bias1
            v_hat = moments2[j] / bias2
            params[j] = params[j] - learning_rate * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
        current = _rebuild(net, params)
        if not all(np.all(np.isfinite(p)) for p in params):
            raise NumericalDivergence(f"non-finite parameter at step {step}")
    return current


def training_loss(net: LstmNetwork, data: SupervisedSet) -> float:
    """MSE of the dropout-free forward pass over a supervised set."""
    predictions, _ = _forward_batch(net, np.asarray(data.inputs, dtype=np.float64), None)
    errors = predictions - np.asarray(data.targets, dtype=np.float64)
    return float(errors @ errors) / len(data)


def evaluate(net: LstmNetwork, test_set: SupervisedSet) -> ForecastEvaluation:
    """One-step-ahead predictions (no dropout) and their RMSE."""
    if len(test_set) == 0:
        raise TooFewSamples("test set is empty")
    predictions, _ = _forward_batch(
        net, np.asarray(test_set.inputs, dtype=np.float64), None
    )
    actuals = np.asarray(test_set.targets, dtype=np.float64)
    errors = predictions - actuals
    rmse = math.sqrt(float(errors @ errors) / len(test_set))
    return ForecastEvaluation(
        predictions=predictions,
        actuals=actuals,
        n_test=len(test_set),
        rmse=rmse,
        split_index=test_set.start_index,
    )


# ---------------------------------------------------------------------------
# Gradient check
# ---------------------------------------------------------------------------

def gradient_check(
    net: LstmNetwork, sample: np.ndarray, target: float, step: float = 1e-5
) -> float:
    """Max relative error between BPTT and central finite differences.

    Relative error uses a floor of 1e-4 times the largest analytic gradient
    so parameters with negligible gradients are judged on an absolute scale.
    Requires dropout disabled and at most 2,000 parameters.
    """
    if any(d != 0.0 for d in net.dropout_rates):
        raise ValueError("gradient_check requires dropout rates of 0")
    if net.n_parameters() > 2000:
        raise ValueError(f"network too large ({net.n_parameters()} parameters)")
    sample = np.asarray(sample, dtype=np.float64)

    batch = sample[None, :, :]
    predictions, cache = _forward_batch(net, batch, None)
    analytic = _backward_batch(net, cache, 2.0 * (predictions - target))
    flat_analytic = np.concatenate([g.ravel() for g in analytic])
    floor = 1e-4 * float(np.max(np.abs(flat_analytic)))

    def loss_at(params: list[np.ndarray]) -> float:
        pred, _ = _forward_batch(_rebuild(net, params), batch, None)
        diff = float(pred[0]) - target
        return diff * diff

    params = [a.copy() for a in _param_arrays(net)]
    worst = 0.0
    k = 0
    for j, arr in enumerate(params):
        flat = arr.reshape(-1)
        for idx in range(flat.size):
            saved = flat[idx]
            flat[idx] = saved + step
            up = loss_at(params)
            flat[idx] = saved - step
            down = loss_at(params)
            flat[idx] = saved
            numeric = (up - down) / (2.0 * step)
            a = flat_analytic[k]
            denom = max(abs(a), abs(numeric), floor)
            worst = max(worst, abs(a - numeric) / denom)
            k += 1
    return worst


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def to_json(net: LstmNetwork) -> str:
    """Flat JSON layout: layers bottom-up, gate rows stacked i, f, g, o."""
    payload = {
        "format": "stacked-lstm-v1",
        "gate_order": "ifgo",
        "layer_order": "bottom_up",
        "input_scale": INPUT_SCALE,
        "output_scale": OUTPUT_SCALE,
        "window": net.window,
        "features": net.features,
        "hidden_sizes": list(net.hidden_sizes),
        "dropout_rates": list(net.dropout_rates),
        "seed": net.seed,
        "layers": [
            {
                "w_in": layer.w_in.tolist(),
                "w_rec": layer.w_rec.tolist(),
                "bias": layer.bias.tolist(),
            }
            for layer in net.layers
        ],
        "dense": {"w": net.dense_w.tolist(), "b": net.dense_b},
    }
    return json.dumps(payload)


def from_json(text: str) -> LstmNetwork:
    data = json.loads(text)
    if data.get("format") != "stacked-lstm-v1":
        raise ValueError(f"unknown format {data.get('format')!r}")
    layers = tuple(
        LstmLayer(
            w_in=np.array(entry["w_in"], dtype=np.float64),
            w_rec=np.array(entry["w_rec"], dtype=np.float64),
            bias=np.array(entry["bias"], dtype=np.float64),
        )
        for entry in data["layers"]
    )
    return LstmNetwork(
        layers=layers,
        dropout_rates=tuple(data["dropout_rates"]),
        dense_w=np.array(data["dense"]["w"], dtype=np.float64),
        dense_b=float(data["dense"]["b"]),
        window=int(data["window"]),
        features=int(data["features"]),
        hidden_sizes=tuple(data["hidden_sizes"]),
        seed=int(data["seed"]),
    )
