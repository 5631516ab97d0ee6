"""MLP embedding network with explicit forward/backward passes and Adam.

The network is a stack of ReLU hidden layers followed by a linear output
layer, optionally projected onto the unit sphere. All math is float64 and
single-threaded, so runs are bit-reproducible given a seed.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class MlpConfig:
    input_dim: int
    hidden_dims: list
    embedding_dim: int = 32
    normalize_output: bool = False
    seed: int = 0

    def __post_init__(self):
        dims = [self.input_dim, *self.hidden_dims, self.embedding_dim]
        if any(int(d) < 1 for d in dims):
            raise ConfigError(f"all layer dimensions must be >= 1, got {dims}")

    @property
    def layer_dims(self):
        return [self.input_dim, *self.hidden_dims, self.embedding_dim]


@dataclass
class MlpParams:
    weights: list  # weights[l]: (fan_in, fan_out)
    biases: list   # biases[l]: (fan_out,)

    @property
    def n_layers(self):
        return len(self.weights)

    def copy(self):
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases])

    def zeros_like(self):
        return MlpParams([np.zeros_like(w) for w in self.weights],
                         [np.zeros_like(b) for b in self.biases])

    def arrays(self):
        """All parameter arrays, weights then biases per layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def all_finite(self):
        return all(np.isfinite(a).all() for a in self.arrays())


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    pre_activations: list   # per hidden layer, before ReLU
    activations: list       # per hidden layer, after ReLU
    pre_norm: np.ndarray    # output of the last linear layer
    embeddings: np.ndarray  # normalized rows when normalize is set
    normalize: bool


@dataclass
class AdamState:
    m: MlpParams
    v: MlpParams
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def _truncated_normal(rng, std, shape):
    # redraw entries beyond 3 std so the support is bounded by 3*std
    w = rng.normal(0.0, std, shape)
    mask = np.abs(w) > 3.0 * std
    while mask.any():
        w[mask] = rng.normal(0.0, std, int(mask.sum()))
        mask = np.abs(w) > 3.0 * std
    return w


def init_params(config: MlpConfig) -> MlpParams:
    """He-scaled truncated-normal weights, zero biases, deterministic in seed."""
    rng = np.random.default_rng(config.seed)
    dims = config.layer_dims
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(_truncated_normal(rng, std, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


def forward(params: MlpParams, inputs: np.ndarray, normalize=None):
    """Run the network on a batch; returns (embeddings, trace).

    `normalize` overrides nothing here: pass the MlpConfig.normalize_output
    value (kept explicit so params stay config-free).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.weights[0].shape[0]:
        raise ValueError(
            f"input shape {inputs.shape} does not match input_dim "
            f"{params.weights[0].shape[0]}")
    if not np.isfinite(inputs).all():
        raise ValueError("non-finite values in network input")
    normalize = bool(normalize)

    h = inputs
    pre_acts, acts = [], []
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = h @ w + b
        pre_acts.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    pre_norm = h @ params.weights[-1] + params.biases[-1]
    if normalize:
        norms = np.linalg.norm(pre_norm, axis=1, keepdims=True)
        embeddings = pre_norm / norms
    else:
        embeddings = pre_norm
    trace = ForwardTrace(inputs, pre_acts, acts, pre_norm, embeddings, normalize)
    return embeddings, trace


def _normalize_backward(pre_norm, embeddings, grad_emb):
    norms = np.linalg.norm(pre_norm, axis=1, keepdims=True)
    radial = np.sum(grad_emb * embeddings, axis=1, keepdims=True)
    return (grad_emb - radial * embeddings) / norms


def backward(trace: ForwardTrace, grad_embeddings: np.ndarray,
             params: MlpParams, last_layer_only=False):
    """Reverse-mode gradients from d(loss)/d(embeddings).

    With last_layer_only the signal is stopped before the last linear layer:
    only its weight/bias gradients are produced and everything upstream
    (earlier layers, inputs) gets zeros.
    """
    grad_embeddings = np.asarray(grad_embeddings, dtype=np.float64)
    if grad_embeddings.shape != trace.embeddings.shape:
        raise ValueError(
            f"gradient shape {grad_embeddings.shape} does not match "
            f"embeddings {trace.embeddings.shape}")

    g = grad_embeddings
    if trace.normalize:
        g = _normalize_backward(trace.pre_norm, trace.embeddings, g)

    grads = params.zeros_like()
    h_last = trace.activations[-1] if trace.activations else trace.inputs
    grads.weights[-1] = h_last.T @ g
    grads.biases[-1] = g.sum(axis=0)
    if last_layer_only:
        return grads, np.zeros_like(trace.inputs)

    g = g @ params.weights[-1].T
    for l in range(len(trace.pre_activations) - 1, -1, -1):
        g = g * (trace.pre_activations[l] > 0)
        h_prev = trace.activations[l - 1] if l > 0 else trace.inputs
        grads.weights[l] = h_prev.T @ g
        grads.biases[l] = g.sum(axis=0)
        g = g @ params.weights[l].T
    return grads, g


def init_adam(params: MlpParams, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    return AdamState(params.zeros_like(), params.zeros_like(), 0, beta1, beta2, eps)


def adam_step(params: MlpParams, grads: MlpParams, state: AdamState,
              lr: float, weight_decay: float = 0.0, lr_mults=None) -> MlpParams:
    """One Adam update; L2 weight decay is added to the gradient (classic
    Adam-with-L2, not AdamW). `lr_mults` gives a per-layer learning-rate
    multiplier (length = number of layers). Updates state in place and
    returns new parameters.
    """
    if lr <= 0:
        raise ConfigError(f"learning rate must be positive, got {lr}")
    for g in grads.arrays():
        if not np.isfinite(g).all():
            raise ValueError("non-finite gradient passed to adam_step")
    if lr_mults is None:
        lr_mults = [1.0] * params.n_layers

    state.step += 1
    t = state.step
    b1, b2, eps = state.beta1, state.beta2, state.eps
    bc1 = 1.0 - b1 ** t
    bc2 = 1.0 - b2 ** t

    new_weights, new_biases = [], []
    for l in range(params.n_layers):
        pairs = [
            (params.weights[l], grads.weights[l], state.m.weights[l], state.v.weights[l]),
            (params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l]),
        ]
        updated = []
        for p, g, m, v in pairs:
            g = g + weight_decay * p
            m[...] = b1 * m + (1.0 - b1) * g
            v[...] = b2 * v + (1.0 - b2) * g * g
            m_hat = m / bc1
            v_hat = v / bc2
            updated.append(p - lr * lr_mults[l] * m_hat / (np.sqrt(v_hat) + eps))
        new_weights.append(updated[0])
        new_biases.append(updated[1])
    out = MlpParams(new_weights, new_biases)
    if not out.all_finite():
        raise ValueError("non-finite parameters after adam_step")
    return out


def finite_diff_check(objective, params: MlpParams, eps: float = 1e-5) -> float:
    """Worst-case relative error between analytic and central-difference
    gradients over every parameter coordinate.

    `objective(params)` must return (value, MlpParams-shaped gradients).
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    _, analytic = objective(params)
    worst = 0.0
    for arr_idx, arr in enumerate(params.arrays()):
        a_grad = analytic.arrays()[arr_idx]
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus, _ = objective(params)
            flat[i] = orig - eps
            f_minus, _ = objective(params)
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = a_grad.ravel()[i]
            denom = max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, abs(a - numeric) / denom)
    return worst
