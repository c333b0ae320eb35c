"""Fully connected regressor with analytic backprop and Adam, in float64.

Inputs are the embedded progress variables plus mixture fraction; outputs
are the key-species source terms followed by the source energy.  Inputs
and targets are z-scored with statistics fitted on the training portion,
so the loss treats every output equally even though the source energy is
many orders of magnitude larger than the species terms.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .dataset import EncodedSet
from .errors import (
    ConfigError,
    Corrupted,
    DimensionMismatch,
    NonFiniteError,
    TrainingError,
    UnsupportedVersion,
)
from .rng import round_half_up

FORMAT_VERSION = 1
STD_FLOOR = 1e-12
ACTIVATIONS = ("relu", "paper-literal")


@dataclass
class NormStats:
    input_mean: np.ndarray
    input_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray

    @classmethod
    def fit(cls, inputs: np.ndarray, targets: np.ndarray) -> "NormStats":
        return cls(inputs.mean(axis=0), np.maximum(inputs.std(axis=0), STD_FLOOR),
                   targets.mean(axis=0), np.maximum(targets.std(axis=0), STD_FLOOR))

    @classmethod
    def identity(cls, n_in: int, n_out: int) -> "NormStats":
        return cls(np.zeros(n_in), np.ones(n_in), np.zeros(n_out), np.ones(n_out))

    def normalize_inputs(self, x):
        return (x - self.input_mean) / self.input_std

    def denormalize_inputs(self, xn):
        return xn * self.input_std + self.input_mean

    def normalize_targets(self, y):
        return (y - self.target_mean) / self.target_std

    def denormalize_targets(self, yn):
        return yn * self.target_std + self.target_mean

    def to_dict(self) -> dict:
        return {k: v.tolist() for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(**{k: np.asarray(d[k], dtype=float) for k in
                      ("input_mean", "input_std", "target_mean", "target_std")})


@dataclass(frozen=True)
class TrainConfig:
    hidden_dims: tuple[int, ...] = (64, 128, 64)
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 256
    max_epochs: int = 400
    patience: int = 25
    val_fraction: float = 0.1
    seed: int = 0
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if any(h <= 0 for h in self.hidden_dims):
            raise ConfigError("hidden dims must be positive")
        if not (self.learning_rate > 0 and self.epsilon > 0):
            raise ConfigError("learning_rate and epsilon must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.batch_size <= 0 or self.max_epochs <= 0 or self.patience <= 0:
            raise ConfigError("batch_size, max_epochs and patience must be positive")
        if not 0 < self.val_fraction < 1:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {ACTIVATIONS}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_dims"] = list(self.hidden_dims)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for pair in zip(self.weights, self.biases) for a in pair])


@dataclass
class Mlp:
    """Layer ``l`` maps ``f -> weights[l] @ f + biases[l]``.

    With ``activation="relu"`` every hidden layer is followed by a ReLU and
    the output is linear.  ``"paper-literal"`` keeps hidden layers affine and
    applies ReLU to the output only; it exists for comparison.
    """

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    norm: NormStats
    activation: str = "relu"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise DimensionMismatch("layer count does not match layer_dims")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[l + 1], self.layer_dims[l]) or b.shape != (self.layer_dims[l + 1],):
                raise DimensionMismatch(f"layer {l} parameters do not chain with layer_dims")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")

    @classmethod
    def initialize(cls, layer_dims, rng: np.random.Generator, norm: NormStats | None = None,
                   activation: str = "relu") -> "Mlp":
        """He-uniform weights in +-sqrt(6 / fan_in), zero biases."""
        layer_dims = [int(d) for d in layer_dims]
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            bound = math.sqrt(6.0 / fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(np.zeros(fan_out))
        norm = norm or NormStats.identity(layer_dims[0], layer_dims[-1])
        return cls(layer_dims, weights, biases, norm, activation)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "Mlp":
        return copy.deepcopy(self)

    def _activates(self, l: int) -> bool:
        last = l == self.n_layers - 1
        return last if self.activation == "paper-literal" else not last

    def forward_normalized(self, xn: np.ndarray, keep: bool = False):
        """Run the layers on normalized inputs (batch, in).

        Returns the normalized output, plus the per-layer inputs and
        pre-activations when ``keep`` is set.
        """
        f = xn
        cache = []
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = f @ w.T + b
            if keep:
                cache.append((f, z))
            f = np.maximum(z, 0.0) if self._activates(l) else z
        return (f, cache) if keep else f

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        return forward(self, inputs)


def _check_inputs(model: Mlp, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=float)
    if x.shape[-1] != model.input_dim or x.ndim not in (1, 2):
        raise DimensionMismatch(f"expected input width {model.input_dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteError("non-finite model input")
    return x


def forward(model: Mlp, inputs) -> np.ndarray:
    """Prediction in physical units for one input vector or a batch of rows."""
    x = _check_inputs(model, inputs)
    single = x.ndim == 1
    xn = model.norm.normalize_inputs(np.atleast_2d(x))
    out = model.norm.denormalize_targets(model.forward_normalized(xn))
    return out[0] if single else out


def loss_mse(pred, target) -> float:
    """Mean squared error over all components (and rows, for batches)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise DimensionMismatch(f"pred shape {pred.shape} != target shape {target.shape}")
    return float(np.mean((pred - target) ** 2))


def backward_normalized(model: Mlp, xn: np.ndarray, yn: np.ndarray) -> tuple[float, Gradients]:
    out, cache = model.forward_normalized(xn, keep=True)
    diff = out - yn
    loss = float(np.mean(diff * diff))
    if not math.isfinite(loss):
        raise NonFiniteError("non-finite loss", layer=model.n_layers - 1)
    delta = diff * (2.0 / diff.size)
    gw: list = [None] * model.n_layers
    gb: list = [None] * model.n_layers
    for l in range(model.n_layers - 1, -1, -1):
        f_in, z = cache[l]
        if model._activates(l):
            delta = delta * (z > 0)
        gw[l] = delta.T @ f_in
        gb[l] = delta.sum(axis=0)
        if not (np.all(np.isfinite(gw[l])) and np.all(np.isfinite(gb[l]))):
            raise NonFiniteError(f"non-finite gradient at layer {l}", layer=l)
        if l:
            delta = delta @ model.weights[l]
    return loss, Gradients(gw, gb)


def backward(model: Mlp, batch) -> tuple[float, Gradients]:
    """Mean normalized-MSE loss of a batch and its exact parameter gradients.

    ``batch`` is an :class:`EncodedSet` or an ``(inputs, targets)`` pair in
    physical units.
    """
    inputs, targets = _unpack(batch)
    if len(inputs) == 0:
        raise ValueError("empty batch")
    x = _check_inputs(model, np.atleast_2d(inputs))
    xn = model.norm.normalize_inputs(x)
    yn = model.norm.normalize_targets(np.atleast_2d(np.asarray(targets, dtype=float)))
    return backward_normalized(model, xn, yn)


def _unpack(batch):
    if isinstance(batch, EncodedSet):
        return batch.inputs, batch.targets
    inputs, targets = batch
    return np.asarray(inputs, dtype=float), np.asarray(targets, dtype=float)


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def zeros_like(cls, model: Mlp, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8) -> "AdamState":
        z = lambda arrs: [np.zeros_like(a) for a in arrs]  # noqa: E731
        return cls(z(model.weights), z(model.weights), z(model.biases), z(model.biases),
                   lr, beta1, beta2, epsilon)


def adam_step(model: Mlp, grads: Gradients, state: AdamState, t: int) -> tuple[Mlp, AdamState]:
    """Bias-corrected Adam update, applied in place; returns its arguments."""
    if t < 1:
        raise ValueError("Adam step counter starts at 1")
    b1, b2 = state.beta1, state.beta2
    step = state.lr / (1.0 - b1 ** t)
    c2 = 1.0 / (1.0 - b2 ** t)
    for params, g_list, m_list, v_list in ((model.weights, grads.weights, state.m_w, state.v_w),
                                           (model.biases, grads.biases, state.m_b, state.v_b)):
        for p, g, m, v in zip(params, g_list, m_list, v_list):
            if g.shape != p.shape:
                raise DimensionMismatch("gradient shape differs from parameter shape")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= step * m / (np.sqrt(v * c2) + state.epsilon)
    return model, state


def validation_split(n: int, val_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_val = max(1, round_half_up(val_fraction * n))
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train_single(data: EncodedSet, cfg: TrainConfig | None = None, fingerprint: str | None = None) -> Mlp:
    """Fit one regressor with Adam and early stopping on a held-out slice.

    ``cfg.val_fraction`` of ``data`` is set aside for validation; the model
    returned carries the weights of the best validation epoch.  Everything
    random (split, initialization, batch order) is drawn from ``cfg.seed``.
    """
    cfg = cfg or TrainConfig()
    if len(data) == 0:
        raise TrainingError("no training data")
    rng = np.random.default_rng(cfg.seed)
    train_rows, val_rows = validation_split(len(data), cfg.val_fraction, rng)
    if len(train_rows) < cfg.batch_size:
        raise TrainingError(f"{len(train_rows)} training points after validation split, "
                            f"fewer than one batch of {cfg.batch_size}")

    x_tr, y_tr = data.inputs[train_rows], data.targets[train_rows]
    norm = NormStats.fit(x_tr, y_tr)
    xn_tr, yn_tr = norm.normalize_inputs(x_tr), norm.normalize_targets(y_tr)
    xn_val = norm.normalize_inputs(data.inputs[val_rows])
    yn_val = norm.normalize_targets(data.targets[val_rows])

    dims = [data.input_dim, *cfg.hidden_dims, data.target_dim]
    model = Mlp.initialize(dims, rng, norm, cfg.activation)
    state = AdamState.zeros_like(model, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)

    best = (math.inf, -1, None)
    history = []
    t = 0
    n = len(train_rows)
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            _, grads = backward_normalized(model, xn_tr[idx], yn_tr[idx])
            t += 1
            adam_step(model, grads, state, t)
        val_loss = loss_mse(model.forward_normalized(xn_val), yn_val)
        if not math.isfinite(val_loss):
            raise TrainingError(f"validation loss diverged at epoch {epoch}")
        history.append(val_loss)
        if val_loss < best[0]:
            best = (val_loss, epoch, ([w.copy() for w in model.weights], [b.copy() for b in model.biases]))
        elif epoch - best[1] >= cfg.patience:
            break

    model.weights, model.biases = best[2]
    model.metadata = {
        "epochs_run": len(history),
        "best_epoch": best[1],
        "best_val_loss": best[0],
        "val_history": history,
        "n_train": int(n),
        "n_val": int(len(val_rows)),
        "fingerprint": fingerprint if fingerprint is not None else data.fingerprint(),
        "train_config": cfg.to_dict(),
    }
    return model


@dataclass
class GradCheckReport:
    max_rel_error: float
    max_abs_error: float
    n_params: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def numerical_gradients(model: Mlp, batch, h: float = 1e-5) -> Gradients:
    """Central-difference gradients of the batch loss, one parameter at a time."""
    inputs, targets = _unpack(batch)
    xn = model.norm.normalize_inputs(np.atleast_2d(inputs))
    yn = model.norm.normalize_targets(np.atleast_2d(targets))

    def loss():
        return loss_mse(model.forward_normalized(xn), yn)

    out = Gradients([np.zeros_like(w) for w in model.weights], [np.zeros_like(b) for b in model.biases])
    for params, grads in ((model.weights, out.weights), (model.biases, out.biases)):
        for p, g in zip(params, grads):
            flat, gflat = p.reshape(-1), g.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss()
                flat[i] = orig - h
                down = loss()
                flat[i] = orig
                gflat[i] = (up - down) / (2.0 * h)
    return out


def gradient_check(model: Mlp, batch, h: float = 1e-5, tol: float = 1e-4,
                   floor: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    Relative error per entry is ``|a - n| / max(|a|, |n|, floor)``; the floor
    keeps entries that are zero analytically (dead ReLUs) from dividing by
    round-off.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    _, analytic = backward(model, batch)
    numeric = numerical_gradients(model, batch, h)
    a, n = analytic.flat(), numeric.flat()
    abs_err = np.abs(a - n)
    rel = abs_err / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return GradCheckReport(float(rel.max()), float(abs_err.max()), int(a.size), tol)


# --------------------------------------------------------------------------
# Serialization
# --------------------------------------------------------------------------

def model_to_dict(model: Mlp) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "mlp",
        "layer_dims": list(model.layer_dims),
        "activation": model.activation,
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "norm": model.norm.to_dict(),
        "metadata": model.metadata,
    }


def model_from_dict(doc: dict) -> Mlp:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"model format_version {version!r} (supported: {FORMAT_VERSION})")
    try:
        model = Mlp(
            layer_dims=[int(d) for d in doc["layer_dims"]],
            weights=[np.asarray(w, dtype=float).reshape(len(w), -1) for w in doc["weights"]],
            biases=[np.asarray(b, dtype=float) for b in doc["biases"]],
            norm=NormStats.from_dict(doc["norm"]),
            activation=doc["activation"],
            metadata=doc.get("metadata", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise Corrupted(f"malformed model document: {exc}") from None
    if not all(np.all(np.isfinite(w)) for w in model.weights + model.biases):
        raise Corrupted("non-finite model parameters")
    return model


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise Corrupted(f"unreadable model file: {exc.msg} at byte {exc.pos}", offset=exc.pos) from None


def save_model(model: Mlp, path) -> None:
    atomic_write_text(path, dumps(model_to_dict(model)))


def load_model(path) -> Mlp:
    return model_from_dict(loads(Path(path).read_text(encoding="utf-8")))
