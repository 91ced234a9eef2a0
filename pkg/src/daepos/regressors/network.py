"""Feedforward network: dense layers with batch normalization and ReLU.

Hidden layers are linear (no bias; the batch-norm shift takes its place),
each followed by batch normalization and a rectifier, ending in a scalar
linear output.  Training minimizes mean squared error with adaptive-moment
gradient descent on shuffled mini-batches.  Inputs are standardized with
training-set statistics; targets stay in meters.  After training, the
normalization statistics used at inference are recomputed in one pass over
the full training set.

The forward/backward passes are pure functions of the parameter dict so
gradients can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from .base import ErrorRegressor, ModelSpec

BN_EPS = 1e-5
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def init_params(input_dim: int, layers: tuple[int, ...], rng: np.random.Generator) -> dict:
    """He-scaled weights for the rectifier layers, small linear output."""
    params = {}
    fan_in = input_dim
    for i, width in enumerate(layers):
        params[f"W{i}"] = rng.standard_normal((fan_in, width)) * np.sqrt(2.0 / fan_in)
        params[f"gamma{i}"] = np.ones(width)
        params[f"beta{i}"] = np.zeros(width)
        fan_in = width
    params["W_out"] = rng.standard_normal((fan_in, 1)) * np.sqrt(1.0 / fan_in)
    params["b_out"] = np.zeros(1)
    return params


def _n_layers(params: dict) -> int:
    return sum(1 for key in params if key.startswith("W") and key != "W_out")


def training_forward(params: dict, X: np.ndarray):
    """Batch-statistics forward pass; returns output, caches, batch stats."""
    h = X
    caches = []
    stats = []
    for i in range(_n_layers(params)):
        z = h @ params[f"W{i}"]
        mu = z.mean(axis=0)
        var = z.var(axis=0)  # biased, matching the normalization below
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        z_hat = (z - mu) * inv_std
        a = params[f"gamma{i}"] * z_hat + params[f"beta{i}"]
        caches.append((h, z_hat, inv_std, a))
        stats.append((mu, var))
        h = np.maximum(a, 0.0)
    out = (h @ params["W_out"] + params["b_out"]).ravel()
    return out, h, caches, stats


def training_loss(params: dict, X: np.ndarray, y: np.ndarray) -> float:
    out, _, _, _ = training_forward(params, X)
    return float(np.mean((out - y) ** 2))


def training_loss_and_grads(params: dict, X: np.ndarray, y: np.ndarray):
    """Mean-squared-error loss and its analytic gradients for one batch."""
    out, h_last, caches, stats = training_forward(params, X)
    m = len(y)
    diff = out - y
    loss = float(np.mean(diff**2))

    grads = {}
    d_out = (2.0 / m) * diff
    grads["W_out"] = h_last.T @ d_out[:, None]
    grads["b_out"] = np.array([d_out.sum()])
    d_h = d_out[:, None] @ params["W_out"].T

    for i in reversed(range(_n_layers(params))):
        h_prev, z_hat, inv_std, a = caches[i]
        d_a = d_h * (a > 0.0)
        grads[f"gamma{i}"] = (d_a * z_hat).sum(axis=0)
        grads[f"beta{i}"] = d_a.sum(axis=0)
        d_zhat = d_a * params[f"gamma{i}"]
        d_z = (inv_std / m) * (
            m * d_zhat - d_zhat.sum(axis=0) - z_hat * (d_zhat * z_hat).sum(axis=0)
        )
        grads[f"W{i}"] = h_prev.T @ d_z
        d_h = d_z @ params[f"W{i}"].T

    return loss, grads, stats


def eval_forward(params: dict, running: dict, X: np.ndarray) -> np.ndarray:
    """Inference pass normalizing with the accumulated running statistics."""
    h = X
    for i in range(_n_layers(params)):
        z = h @ params[f"W{i}"]
        z_hat = (z - running[f"mean{i}"]) / np.sqrt(running[f"var{i}"] + BN_EPS)
        h = np.maximum(params[f"gamma{i}"] * z_hat + params[f"beta{i}"], 0.0)
    return (h @ params["W_out"] + params["b_out"]).ravel()


def adam_init(params: dict) -> dict:
    return {
        "m": {k: np.zeros_like(v) for k, v in params.items()},
        "v": {k: np.zeros_like(v) for k, v in params.items()},
        "t": 0,
    }


def adam_step(params: dict, grads: dict, state: dict, lr: float) -> None:
    state["t"] += 1
    t = state["t"]
    for key, g in grads.items():
        state["m"][key] = ADAM_BETA1 * state["m"][key] + (1 - ADAM_BETA1) * g
        state["v"][key] = ADAM_BETA2 * state["v"][key] + (1 - ADAM_BETA2) * g * g
        m_hat = state["m"][key] / (1 - ADAM_BETA1**t)
        v_hat = state["v"][key] / (1 - ADAM_BETA2**t)
        params[key] = params[key] - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


class NetworkModel(ErrorRegressor):
    family = "network"

    def __init__(self, spec, params, running, scaler_mean, scaler_std, input_width, metadata=None):
        super().__init__(spec, input_width=input_width, metadata=metadata)
        self.params = params
        self.running = running
        self.scaler_mean = scaler_mean
        self.scaler_std = scaler_std

    def _raw(self, X: np.ndarray) -> np.ndarray:
        return eval_forward(self.params, self.running, (X - self.scaler_mean) / self.scaler_std)


def fit_network(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> NetworkModel:
    rng = np.random.default_rng(spec.seed)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)  # constant columns pass through
    Xs = (X - mean) / std

    params = init_params(X.shape[1], spec.layers, rng)
    params["b_out"] = np.array([y.mean()])  # start at the label mean
    state = adam_init(params)

    n = len(Xs)
    for _ in range(spec.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            batch = perm[start : start + spec.batch_size]
            _, grads, _ = training_loss_and_grads(params, Xs[batch], y[batch])
            adam_step(params, grads, state, spec.learning_rate)

    # Inference statistics from one pass over the full training set.
    _, _, _, stats = training_forward(params, Xs)
    running = {}
    for i, (mu, var) in enumerate(stats):
        running[f"mean{i}"] = mu
        running[f"var{i}"] = var

    return NetworkModel(
        spec,
        params=params,
        running=running,
        scaler_mean=mean,
        scaler_std=std,
        input_width=X.shape[1],
    )
