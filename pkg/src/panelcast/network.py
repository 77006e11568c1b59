"""Stacked LSTM prediction unit with an affine output head, trained from
scratch: forward recurrence, full backpropagation through time, L1 + L2
objective, Gaussian input-noise injection, and a finite-difference checker.

Everything is plain numpy. Gate blocks are packed [input, forget, candidate,
output] along the last axis of each layer's weight matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .cocob import init_state, optimizer_step
from .errors import EmptyTrainingError, NumericalError, ShapeError
from .windowing import TrainingWindow


@dataclass(frozen=True)
class NetworkConfig:
    """Training knobs; the search harness samples these from its grid.

    epoch_size is the number of passes over the training windows that make up
    one epoch, so the total number of passes is epoch_size * max_epochs.
    There is deliberately no learning-rate field: the optimizer is
    parameter-free.
    """

    cell_dimension: int = 32
    hidden_layers: int = 1
    minibatch_size: int = 8
    epoch_size: int = 2
    max_epochs: int = 12
    gaussian_noise_std: float = 3e-4
    init_std: float = 4e-4
    l2_weight: float = 2e-4
    seed: int = 0

    def __post_init__(self):
        if min(self.cell_dimension, self.hidden_layers, self.minibatch_size,
               self.epoch_size, self.max_epochs) < 1:
            raise ValueError("network size and schedule fields must all be >= 1")
        if self.gaussian_noise_std < 0 or self.l2_weight < 0:
            raise ValueError("noise and regularization weights must be >= 0")
        if not self.init_std > 0:
            raise ValueError("init_std must be > 0")


@dataclass
class NetworkParameters:
    """All trainable arrays, keyed by block name.

    Blocks: per layer l, "layer{l}.wx" (channels_in x 4*cell), "layer{l}.wh"
    (cell x 4*cell), "layer{l}.b" (4*cell,); plus "head" (cell x horizon).
    The head carries no bias term.
    """

    blocks: dict[str, np.ndarray]
    cell_dimension: int
    hidden_layers: int
    input_channels: int
    horizon: int

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            blocks={k: v.copy() for k, v in self.blocks.items()},
            cell_dimension=self.cell_dimension,
            hidden_layers=self.hidden_layers,
            input_channels=self.input_channels,
            horizon=self.horizon,
        )

    def weight_block_names(self) -> list[str]:
        """Names of non-bias blocks, the ones the L2 term covers."""
        return [k for k in self.blocks if not k.endswith(".b")]

    def equal(self, other: "NetworkParameters") -> bool:
        return self.blocks.keys() == other.blocks.keys() and all(
            np.array_equal(self.blocks[k], other.blocks[k]) for k in self.blocks
        )


def init(config: NetworkConfig, input_channels: int, horizon: int) -> NetworkParameters:
    """Draw every parameter i.i.d. normal(0, init_std^2), seeded by the config."""
    rng = np.random.default_rng(config.seed)
    d = config.cell_dimension
    blocks: dict[str, np.ndarray] = {}
    c_in = input_channels
    for layer in range(config.hidden_layers):
        blocks[f"layer{layer}.wx"] = rng.normal(0.0, config.init_std, (c_in, 4 * d))
        blocks[f"layer{layer}.wh"] = rng.normal(0.0, config.init_std, (d, 4 * d))
        blocks[f"layer{layer}.b"] = rng.normal(0.0, config.init_std, 4 * d)
        c_in = d
    blocks["head"] = rng.normal(0.0, config.init_std, (d, horizon))
    return NetworkParameters(
        blocks=blocks,
        cell_dimension=d,
        hidden_layers=config.hidden_layers,
        input_channels=input_channels,
        horizon=horizon,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ForwardCache:
    """Everything backward() needs: the (noisy) inputs actually fed to each
    layer and the per-step gate activations and cell states."""

    params: NetworkParameters
    layer_inputs: list[np.ndarray]          # per layer: B x T x C_l
    gates: list[dict[str, np.ndarray]]      # per layer: i, f, g, o, c, tanh_c (B x T x d)
    hidden: list[np.ndarray]                # per layer: B x T x d
    prediction: np.ndarray                  # B x M


def _forward_batch(
    params: NetworkParameters,
    inputs: np.ndarray,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ForwardCache:
    if inputs.ndim != 3:
        raise ShapeError(f"batched input must be B x T x C, got {inputs.shape}")
    if inputs.shape[2] != params.input_channels:
        raise ShapeError(
            f"input has {inputs.shape[2]} channels, parameters expect {params.input_channels}"
        )
    x = np.asarray(inputs, dtype=np.float64)
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("noise injection needs a random generator")
        x = x + rng.normal(0.0, noise_std, x.shape)
    B, T, _ = x.shape
    d = params.cell_dimension

    layer_inputs: list[np.ndarray] = []
    gates: list[dict[str, np.ndarray]] = []
    hidden: list[np.ndarray] = []
    current = x
    for layer in range(params.hidden_layers):
        wx = params.blocks[f"layer{layer}.wx"]
        wh = params.blocks[f"layer{layer}.wh"]
        b = params.blocks[f"layer{layer}.b"]
        i_all = np.empty((B, T, d)); f_all = np.empty((B, T, d))
        g_all = np.empty((B, T, d)); o_all = np.empty((B, T, d))
        c_all = np.empty((B, T, d)); tc_all = np.empty((B, T, d))
        h_all = np.empty((B, T, d))
        h = np.zeros((B, d)); c = np.zeros((B, d))
        # precompute the input contribution for the whole frame at once
        zx = current.reshape(B * T, -1) @ wx
        zx = zx.reshape(B, T, 4 * d) + b
        for t in range(T):
            z = zx[:, t, :] + h @ wh
            i = _sigmoid(z[:, :d])
            f = _sigmoid(z[:, d : 2 * d])
            g = np.tanh(z[:, 2 * d : 3 * d])
            o = _sigmoid(z[:, 3 * d :])
            c = f * c + i * g
            tc = np.tanh(c)
            h = o * tc
            if not np.all(np.isfinite(h)):
                raise NumericalError(f"non-finite activation at step {t}, layer {layer}")
            i_all[:, t] = i; f_all[:, t] = f; g_all[:, t] = g; o_all[:, t] = o
            c_all[:, t] = c; tc_all[:, t] = tc; h_all[:, t] = h
        layer_inputs.append(current)
        gates.append({"i": i_all, "f": f_all, "g": g_all, "o": o_all,
                      "c": c_all, "tanh_c": tc_all})
        hidden.append(h_all)
        current = h_all

    prediction = hidden[-1][:, -1, :] @ params.blocks["head"]
    if not np.all(np.isfinite(prediction)):
        raise NumericalError("non-finite prediction at the output head")
    return ForwardCache(
        params=params, layer_inputs=layer_inputs, gates=gates, hidden=hidden,
        prediction=prediction,
    )


def forward(
    params: NetworkParameters,
    window_input: np.ndarray,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run one input frame (input_size x channels) through the network.

    Returns the horizon-length prediction and the cache backward() consumes.
    With noise_std > 0, i.i.d. Gaussian noise is added to the input frame
    before the recurrence (training only; pass 0 at inference).
    """
    frame = np.asarray(window_input, dtype=np.float64)
    if frame.ndim != 2:
        raise ShapeError(f"window input must be steps x channels, got {frame.shape}")
    cache = _forward_batch(params, frame[None, :, :], noise_std=noise_std, rng=rng)
    return cache.prediction[0], cache


def l2_penalty(params: NetworkParameters, l2_weight: float) -> float:
    if l2_weight == 0.0:
        return 0.0
    return l2_weight * float(
        sum(np.sum(params.blocks[k] ** 2) for k in params.weight_block_names())
    )


def loss(
    prediction: np.ndarray,
    target: np.ndarray,
    params: NetworkParameters,
    l2_weight: float,
) -> float:
    """Mean absolute error over the horizon plus the L2 weight penalty."""
    prediction = np.asarray(prediction, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {prediction.shape} vs target {target.shape}")
    return float(np.mean(np.abs(prediction - target))) + l2_penalty(params, l2_weight)


def _batch_data_loss(prediction: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean(np.abs(prediction - targets)))


def _backward_batch(
    cache: ForwardCache, targets: np.ndarray, l2_weight: float
) -> dict[str, np.ndarray]:
    """Exact gradients of the batch-mean L1 loss plus L2 term.

    The |x| subgradient at 0 is taken as 0, so a perfect prediction yields
    all-zero data gradients.
    """
    params = cache.params
    pred = cache.prediction
    if targets.shape != pred.shape:
        raise ShapeError(f"targets {targets.shape} vs predictions {pred.shape}")
    B, M = pred.shape
    d = params.cell_dimension

    grads = {k: np.zeros_like(v) for k, v in params.blocks.items()}
    dpred = np.sign(pred - targets) / (B * M)

    h_top_last = cache.hidden[-1][:, -1, :]
    grads["head"] += h_top_last.T @ dpred
    # gradient flowing into the top layer's final hidden state
    T = cache.hidden[-1].shape[1]
    dh_from_above = np.zeros((B, T, d))
    dh_from_above[:, -1, :] = dpred @ params.blocks["head"].T

    for layer in range(params.hidden_layers - 1, -1, -1):
        wx = params.blocks[f"layer{layer}.wx"]
        wh = params.blocks[f"layer{layer}.wh"]
        g_ = cache.gates[layer]
        x_in = cache.layer_inputs[layer]
        i, f, g, o = g_["i"], g_["f"], g_["g"], g_["o"]
        c, tanh_c = g_["c"], g_["tanh_c"]

        dwx = grads[f"layer{layer}.wx"]
        dwh = grads[f"layer{layer}.wh"]
        db = grads[f"layer{layer}.b"]
        dx_below = np.zeros_like(x_in) if layer > 0 else None

        dh_next = np.zeros((B, d))
        dc_next = np.zeros((B, d))
        for t in range(T - 1, -1, -1):
            dh = dh_from_above[:, t, :] + dh_next
            dc = dc_next + dh * o[:, t] * (1.0 - tanh_c[:, t] ** 2)
            do_pre = dh * tanh_c[:, t] * o[:, t] * (1.0 - o[:, t])
            di_pre = dc * g[:, t] * i[:, t] * (1.0 - i[:, t])
            dg_pre = dc * i[:, t] * (1.0 - g[:, t] ** 2)
            c_prev = c[:, t - 1] if t > 0 else np.zeros((B, d))
            df_pre = dc * c_prev * f[:, t] * (1.0 - f[:, t])
            dz = np.concatenate([di_pre, df_pre, dg_pre, do_pre], axis=1)

            dwx += x_in[:, t].T @ dz
            dwh += (cache.hidden[layer][:, t - 1].T @ dz) if t > 0 else 0.0
            db += dz.sum(axis=0)

            if dx_below is not None:
                dx_below[:, t, :] = dz @ wx.T
            dh_next = dz @ wh.T
            dc_next = dc * f[:, t]
        if dx_below is not None:
            dh_from_above = dx_below

    if l2_weight > 0.0:
        for name in params.weight_block_names():
            grads[name] += 2.0 * l2_weight * params.blocks[name]
    for name, garr in grads.items():
        if not np.all(np.isfinite(garr)):
            raise NumericalError(f"non-finite gradient in block {name!r}")
    return grads


def backward(
    cache: ForwardCache, target: np.ndarray, l2_weight: float = 0.0
) -> dict[str, np.ndarray]:
    """Gradients of loss() w.r.t. every parameter for one cached window."""
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 1:
        target = target[None, :]
    return _backward_batch(cache, target, l2_weight)


def train(
    windows: Sequence[TrainingWindow],
    config: NetworkConfig,
    history: list[float] | None = None,
) -> NetworkParameters:
    """Fit the network on a pool of normalized training windows.

    Deterministic given (windows, config): the pool is order-normalized by
    (series_id, offset) before the seeded shuffle, input noise is redrawn per
    window per pass, and gradients are averaged over each minibatch before
    every optimizer step. If `history` is given it receives the mean training
    loss of each epoch.
    """
    if not windows:
        raise EmptyTrainingError("no training windows")
    layouts = {w.channel_layout for w in windows}
    if len(layouts) != 1:
        raise ShapeError(f"windows disagree on channel layout: {sorted(layouts)}")

    pool = sorted(windows, key=lambda w: (w.series_id, w.offset))
    inputs = np.stack([w.input for w in pool]).astype(np.float64)
    targets = np.stack([w.target for w in pool]).astype(np.float64)
    n, _, channels = inputs.shape
    horizon = targets.shape[1]

    params = init(config, channels, horizon)
    state = init_state(params.blocks)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))

    batch = min(config.minibatch_size, n)
    for _ in range(config.max_epochs):
        epoch_losses: list[tuple[float, int]] = []
        for _ in range(config.epoch_size):
            order = rng.permutation(n)
            for lo in range(0, n, batch):
                idx = order[lo : lo + batch]
                cache = _forward_batch(
                    params, inputs[idx], noise_std=config.gaussian_noise_std, rng=rng
                )
                grads = _backward_batch(cache, targets[idx], config.l2_weight)
                batch_loss = _batch_data_loss(cache.prediction, targets[idx]) + l2_penalty(
                    params, config.l2_weight
                )
                epoch_losses.append((batch_loss, len(idx)))
                state, params.blocks = optimizer_step(state, params.blocks, grads)
        if history is not None:
            weight = sum(k for _, k in epoch_losses)
            history.append(sum(v * k for v, k in epoch_losses) / weight)
    return params


@dataclass
class GradientCheckReport:
    """Finite-difference comparison summary, one entry per parameter block."""

    tolerance: float
    max_relative_error: dict[str, float] = field(default_factory=dict)

    @property
    def worst(self) -> float:
        return max(self.max_relative_error.values())

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def gradient_check(
    config: NetworkConfig,
    tolerance: float = 1e-4,
    trials: int = 1,
    input_size: int = 5,
    horizon: int = 2,
    step: float = 1e-5,
    input_channels: int = 1,
) -> GradientCheckReport:
    """Compare analytic BPTT gradients against central finite differences.

    Uses healthy-sized random weights (so the differences are well above
    floating-point noise) and targets placed at least 0.5 away from every
    prediction so no perturbation crosses an L1 kink. Failures are reported
    in the result, never raised.
    """
    report = GradientCheckReport(tolerance=tolerance)
    rng = np.random.default_rng(config.seed)
    for _ in range(trials):
        params = init(
            replace(config, init_std=0.4, seed=int(rng.integers(0, 2**31))),
            input_channels,
            horizon,
        )
        frame = rng.normal(0.0, 1.0, (input_size, input_channels))
        pred, cache = forward(params, frame)
        margin = 0.5 + rng.uniform(0.0, 0.5, horizon)
        target = pred - np.where(rng.uniform(size=horizon) < 0.5, margin, -margin)

        analytic = backward(cache, target, l2_weight=config.l2_weight)
        for name, block in params.blocks.items():
            worst = 0.0
            flat = block.reshape(-1)
            fd_grad = np.zeros_like(flat)
            for j in range(flat.size):
                keep = flat[j]
                flat[j] = keep + step
                up = loss(forward(params, frame)[0], target, params, config.l2_weight)
                flat[j] = keep - step
                down = loss(forward(params, frame)[0], target, params, config.l2_weight)
                flat[j] = keep
                fd_grad[j] = (up - down) / (2.0 * step)
            a = analytic[name].reshape(-1)
            denom = np.maximum(np.maximum(np.abs(a), np.abs(fd_grad)), 1e-6)
            worst = float(np.max(np.abs(a - fd_grad) / denom))
            report.max_relative_error[name] = max(
                report.max_relative_error.get(name, 0.0), worst
            )
    return report
