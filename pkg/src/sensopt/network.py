"""From-scratch feed-forward regression network.

forward()            batched forward pass recording z's and activations
quadratic_cost()     half squared error, averaged over a batch
output_delta()       error vector at the output layer
backprop()           parameter gradients by backward error propagation
sgd_step()           plain gradient-descent update, in place
adam_step()          adaptive-moment update, in place
numeric_gradients()  central finite-difference gradient check
save_model()/load_model()  versioned binary model container
predict()            raw inputs -> physical outputs via a Model bundle

All arithmetic is float64. Weight matrices are (fan_out, fan_in), so a
layer computes z = a_prev @ W.T + b; hidden layers use a leaky
rectifier, the output layer is identity by default.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .data import NormalizationSpec, decode_outputs, encode_inputs
from .errors import ConfigurationError, DomainError, ModelFormatError, ShapeError

MODEL_MAGIC = b"SNSOPT01"
_ACTIVATIONS = ("identity", "leaky_relu")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and activation constants.

    Production surrogates use at least two hidden layers (the deep
    regime); the math core itself accepts any stack of one or more
    layers, which the diagnostics rely on.
    """

    n_inputs: int = 10
    hidden: tuple[int, ...] = (64, 64, 64)
    n_outputs: int = 3
    alpha: float = 0.3
    output_activation: str = "identity"

    def __post_init__(self):
        sizes = self.layer_sizes
        if any(int(s) != s or s < 1 for s in sizes):
            raise ConfigurationError(f"layer sizes must be positive integers, got {sizes}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if self.output_activation not in _ACTIVATIONS:
            raise ConfigurationError(
                f"output_activation must be one of {_ACTIVATIONS}, got {self.output_activation!r}"
            )

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.n_inputs, *self.hidden, self.n_outputs)

    @property
    def n_layers(self) -> int:
        return len(self.hidden) + 1


@dataclass
class NetworkParameters:
    """Weights and biases, one entry per layer."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParameters":
        return NetworkParameters(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def norm(self) -> float:
        total = sum(float(np.sum(w * w)) for w in self.weights)
        total += sum(float(np.sum(b * b)) for b in self.biases)
        return float(np.sqrt(total))


def init_parameters(config: NetworkConfig, seed: int) -> NetworkParameters:
    """Seeded uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    sizes = config.layer_sizes
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetworkParameters(weights=weights, biases=biases)


def leaky_relu(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z >= 0, z, alpha * np.asarray(z, dtype=np.float64))


def leaky_relu_derivative(z: np.ndarray, alpha: float) -> np.ndarray:
    # The derivative at exactly 0 is defined as alpha.
    return np.where(np.asarray(z, dtype=np.float64) > 0, 1.0, alpha)


@dataclass
class ForwardTrace:
    """Everything backprop needs: activations[0] is the input itself."""

    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.activations[-1]


def _check_parameter_shapes(params: NetworkParameters, config: NetworkConfig) -> None:
    sizes = config.layer_sizes
    if len(params.weights) != config.n_layers or len(params.biases) != config.n_layers:
        raise ShapeError(
            f"expected {config.n_layers} parameter layers, got "
            f"{len(params.weights)} weight / {len(params.biases)} bias entries"
        )
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        expect = (sizes[layer + 1], sizes[layer])
        if w.shape != expect:
            raise ShapeError(f"layer {layer} weights have shape {w.shape}, expected {expect}")
        if b.shape != (sizes[layer + 1],):
            raise ShapeError(
                f"layer {layer} bias has shape {b.shape}, expected {(sizes[layer + 1],)}"
            )


def forward(params: NetworkParameters, config: NetworkConfig, inputs) -> ForwardTrace:
    """Propagate `inputs` (shape (n_inputs,) or (n, n_inputs)) through the net.

    Raises:
        ShapeError: input width or parameter shapes disagree with the config.
        DomainError: non-finite input entries.
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != config.n_inputs:
        raise ShapeError(f"inputs must have {config.n_inputs} columns, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("inputs must be finite")
    _check_parameter_shapes(params, config)

    pre_activations: list[np.ndarray] = []
    activations: list[np.ndarray] = [x]
    a = x
    last = config.n_layers - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        if layer == last and config.output_activation == "identity":
            a = z
        else:
            a = leaky_relu(z, config.alpha)
        pre_activations.append(z)
        activations.append(a)
    return ForwardTrace(pre_activations=pre_activations, activations=activations)


def quadratic_cost(targets, outputs) -> float:
    """Half squared Euclidean distance per sample, averaged over the batch."""
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    a = np.atleast_2d(np.asarray(outputs, dtype=np.float64))
    if y.shape != a.shape:
        raise ShapeError(f"targets {y.shape} and outputs {a.shape} must match")
    return float(0.5 * np.mean(np.sum((y - a) ** 2, axis=1)))


def output_delta(targets, trace: ForwardTrace, config: NetworkConfig) -> np.ndarray:
    """Error at the output layer: -(y - a) times the activation derivative."""
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    a = trace.activations[-1]
    if y.shape != a.shape:
        raise ShapeError(f"targets {y.shape} and outputs {a.shape} must match")
    if config.output_activation == "identity":
        return a - y
    return (a - y) * leaky_relu_derivative(trace.pre_activations[-1], config.alpha)


@dataclass
class Gradients:
    """Cost gradients per layer; deltas are the backpropagated errors."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]
    deltas: list[np.ndarray] = field(default_factory=list)


def backprop(
    params: NetworkParameters, config: NetworkConfig, trace: ForwardTrace, targets
) -> Gradients:
    """Gradients of the batch-mean quadratic cost.

    The batch gradient is the mean of the per-sample gradients, so a
    single weight matrix gradient is delta.T @ a_prev / batch_size.
    """
    n_layers = config.n_layers
    batch = trace.activations[0].shape[0]
    deltas: list[np.ndarray | None] = [None] * n_layers
    deltas[-1] = output_delta(targets, trace, config)
    for layer in range(n_layers - 2, -1, -1):
        deltas[layer] = (deltas[layer + 1] @ params.weights[layer + 1]) * (
            leaky_relu_derivative(trace.pre_activations[layer], config.alpha)
        )
    d_weights = [
        deltas[layer].T @ trace.activations[layer] / batch for layer in range(n_layers)
    ]
    d_biases = [deltas[layer].mean(axis=0) for layer in range(n_layers)]
    return Gradients(d_weights=d_weights, d_biases=d_biases, deltas=list(deltas))


def numeric_gradients(
    params: NetworkParameters, config: NetworkConfig, inputs, targets, step: float = 1e-6
) -> Gradients:
    """Central finite-difference gradients of the batch quadratic cost.

    Perturbs every parameter entry individually and re-runs the forward
    pass, so the result is independent of the backprop path. Intended for
    gradient checking on small networks; cost grows with parameter count.
    """

    def cost() -> float:
        return quadratic_cost(targets, forward(params, config, inputs).output)

    def differentiate(array: np.ndarray) -> np.ndarray:
        grad = np.empty_like(array)
        flat = array.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            above = cost()
            flat[i] = original - step
            below = cost()
            flat[i] = original
            gflat[i] = (above - below) / (2.0 * step)
        return grad

    return Gradients(
        d_weights=[differentiate(w) for w in params.weights],
        d_biases=[differentiate(b) for b in params.biases],
    )


@dataclass
class OptimizerState:
    """Update-rule constants plus the adaptive-moment accumulators."""

    mode: str
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    step_count: int = 0
    first_moment: list[np.ndarray] | None = None
    second_moment: list[np.ndarray] | None = None


def init_optimizer(mode: str, learning_rate: float, params: NetworkParameters) -> OptimizerState:
    if mode not in ("sgd", "adam"):
        raise ConfigurationError(f"optimizer mode must be 'sgd' or 'adam', got {mode!r}")
    if learning_rate <= 0:
        raise ConfigurationError(f"learning rate must be positive, got {learning_rate!r}")
    state = OptimizerState(mode=mode, learning_rate=learning_rate)
    if mode == "adam":
        arrays = params.weights + params.biases
        state.first_moment = [np.zeros_like(a) for a in arrays]
        state.second_moment = [np.zeros_like(a) for a in arrays]
    return state


def sgd_step(
    params: NetworkParameters, grads: Gradients, state: OptimizerState
) -> NetworkParameters:
    """w <- w - eta * dC/dw and b <- b - eta * dC/db, in place."""
    if state.mode != "sgd":
        raise ConfigurationError(f"sgd_step called with optimizer mode {state.mode!r}")
    state.step_count += 1
    for w, dw in zip(params.weights, grads.d_weights):
        w -= state.learning_rate * dw
    for b, db in zip(params.biases, grads.d_biases):
        b -= state.learning_rate * db
    return params


def adam_step(
    params: NetworkParameters, grads: Gradients, state: OptimizerState
) -> NetworkParameters:
    """Bias-corrected adaptive-moment update, in place.

    Per entry: p -= lr * m_hat / (sqrt(v_hat) + epsilon), where m_hat and
    v_hat are the bias-corrected first and second moment estimates. The
    first step with gradient g therefore moves by -lr * g / (|g| + epsilon).
    """
    if state.mode != "adam":
        raise ConfigurationError(f"adam_step called with optimizer mode {state.mode!r}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**t
    correction2 = 1.0 - b2**t
    arrays = params.weights + params.biases
    gradients = grads.d_weights + grads.d_biases
    for p, g, m, v in zip(arrays, gradients, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
    return params


@dataclass
class Model:
    """A trained surrogate: architecture, parameters and scaling constants."""

    config: NetworkConfig
    params: NetworkParameters
    normalization: NormalizationSpec


def predict(model: Model, numeric, category, chunk_size: int = 65536) -> np.ndarray:
    """Physical (signal, snr, output3) predictions for raw input rows."""
    x = encode_inputs(numeric, category, model.normalization)
    single = x.ndim == 1
    rows = np.atleast_2d(x)
    outputs = np.empty((rows.shape[0], len(model.normalization.output_max)))
    for start in range(0, rows.shape[0], chunk_size):
        stop = start + chunk_size
        outputs[start:stop] = forward(model.params, model.config, rows[start:stop]).output
    decoded = decode_outputs(outputs, model.normalization)
    return decoded[0] if single else decoded


# -- serialization ----------------------------------------------------------
#
# Byte layout (little endian throughout):
#   bytes 0..7    magic b"SNSOPT01" (version is part of the magic)
#   bytes 8..11   uint32 header length H
#   bytes 12..    UTF-8 JSON header of H bytes with keys
#                 config, layers, normalization, param_sha256
#   then per layer, in order: weights as row-major float64
#                 (fan_out * fan_in values), then the bias (fan_out values)
# param_sha256 is the SHA-256 hex digest of the concatenated parameter
# bytes; load_model() recomputes and compares it.


def save_model(model: Model, path) -> None:
    """Write the model container described in the module byte-layout note."""
    _check_parameter_shapes(model.params, model.config)
    blocks = []
    layers = []
    for w, b in zip(model.params.weights, model.params.biases):
        layers.append({"fan_in": int(w.shape[1]), "fan_out": int(w.shape[0])})
        blocks.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        blocks.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    payload = b"".join(blocks)
    header = {
        "config": {
            "n_inputs": model.config.n_inputs,
            "hidden": list(model.config.hidden),
            "n_outputs": model.config.n_outputs,
            "alpha": model.config.alpha,
            "output_activation": model.config.output_activation,
        },
        "layers": layers,
        "normalization": {
            "input_max": list(model.normalization.input_max),
            "output_max": list(model.normalization.output_max),
            "signal_log_base": model.normalization.signal_log_base,
        },
        "param_sha256": hashlib.sha256(payload).hexdigest(),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(payload)


def load_model(path) -> Model:
    """Read a model container back; inverse of save_model, bit for bit.

    Raises:
        ModelFormatError: wrong magic/version, truncation, malformed
            header, or a parameter checksum mismatch.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MODEL_MAGIC) + 4:
        raise ModelFormatError("model file truncated before header")
    if raw[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelFormatError(
            f"unrecognized model magic {raw[: len(MODEL_MAGIC)]!r}; expected {MODEL_MAGIC!r}"
        )
    header_len = int.from_bytes(raw[len(MODEL_MAGIC) : len(MODEL_MAGIC) + 4], "little")
    header_start = len(MODEL_MAGIC) + 4
    if len(raw) < header_start + header_len:
        raise ModelFormatError("model file truncated inside header")
    try:
        header = json.loads(raw[header_start : header_start + header_len].decode("utf-8"))
        config = NetworkConfig(
            n_inputs=header["config"]["n_inputs"],
            hidden=tuple(header["config"]["hidden"]),
            n_outputs=header["config"]["n_outputs"],
            alpha=header["config"]["alpha"],
            output_activation=header["config"]["output_activation"],
        )
        normalization = NormalizationSpec(
            input_max=tuple(header["normalization"]["input_max"]),
            output_max=tuple(header["normalization"]["output_max"]),
            signal_log_base=header["normalization"]["signal_log_base"],
        )
        layers = header["layers"]
        expected_digest = header["param_sha256"]
    except (KeyError, TypeError, ValueError, ConfigurationError) as exc:
        raise ModelFormatError(f"malformed model header: {exc}") from exc

    payload = raw[header_start + header_len :]
    expected_size = 8 * sum(
        layer["fan_out"] * layer["fan_in"] + layer["fan_out"] for layer in layers
    )
    if len(payload) != expected_size:
        raise ModelFormatError(
            f"parameter block has {len(payload)} bytes, expected {expected_size}"
        )
    if hashlib.sha256(payload).hexdigest() != expected_digest:
        raise ModelFormatError("parameter checksum mismatch; file is corrupt")

    weights, biases = [], []
    offset = 0
    for layer in layers:
        n_w = layer["fan_out"] * layer["fan_in"]
        w = np.frombuffer(payload, dtype="<f8", count=n_w, offset=offset)
        offset += 8 * n_w
        b = np.frombuffer(payload, dtype="<f8", count=layer["fan_out"], offset=offset)
        offset += 8 * layer["fan_out"]
        weights.append(w.reshape(layer["fan_out"], layer["fan_in"]).astype(np.float64))
        biases.append(b.astype(np.float64))
    params = NetworkParameters(weights=weights, biases=biases)
    _check_parameter_shapes(params, config)
    return Model(config=config, params=params, normalization=normalization)
