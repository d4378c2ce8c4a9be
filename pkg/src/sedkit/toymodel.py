"""Desk-scale self-explainable classifier on synthetic feature vectors.

A small feedforward net (tanh hidden layers) whose raw output head has
``N + M*`` units: the first N are class scores read by argmax, the last M*
are explanation logits read through a sigmoid threshold. Setting ``M* = 0``
gives the plain N-output classifier used as the "regular" system in the
ensemble schemes.

Training minimizes the per-output sigmoid cross entropy averaged over the
``N + M*`` outputs, by plain mini-batch SGD. Gradients are hand-coded
numpy backprop (verified against finite differences in the test suite);
single-threaded per run so results are bit-reproducible from the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .concepts import ConceptMatrix, explanation_of
from .errors import TrainingDivergedError, ValidationError


def sigmoid(f):
    # tanh form is stable for large |f|
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(f, dtype=float)))


def _softplus(f):
    return np.logaddexp(0.0, f)


@dataclass(frozen=True)
class SEModelParams:
    """Weights/biases of the feedforward net plus the output-head split.

    ``weights[l]`` has shape (fan_out, fan_in); output dimension is always
    ``n_classes + n_concepts``.
    """

    weights: tuple
    biases: tuple
    n_classes: int
    n_concepts: int

    def __post_init__(self):
        # copy before freezing so callers' arrays stay writable
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float) for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise ValidationError("weights and biases must pair up, one per layer")
        for l in range(len(ws) - 1):
            if ws[l + 1].shape[1] != ws[l].shape[0]:
                raise ValidationError(
                    f"layer {l + 1} expects fan_in {ws[l].shape[0]}, "
                    f"got {ws[l + 1].shape[1]}"
                )
        for l, (w, b) in enumerate(zip(ws, bs)):
            if b.shape != (w.shape[0],):
                raise ValidationError(f"bias {l} shape {b.shape} != ({w.shape[0]},)")
        if ws[-1].shape[0] != self.n_classes + self.n_concepts:
            raise ValidationError(
                f"output dim {ws[-1].shape[0]} != n_classes + n_concepts = "
                f"{self.n_classes + self.n_concepts}"
            )
        for arr in ws + bs:
            arr.flags.writeable = False
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.n_classes + self.n_concepts

    @property
    def layer_dims(self) -> tuple:
        return (self.input_dim,) + tuple(w.shape[0] for w in self.weights)


def init_params(
    input_dim: int,
    hidden: Sequence[int],
    n_classes: int,
    n_concepts: int,
    rng: np.random.Generator,
) -> SEModelParams:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer."""
    dims = [input_dim, *hidden, n_classes + n_concepts]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return SEModelParams(tuple(weights), tuple(biases), n_classes, n_concepts)


def _forward(params: SEModelParams, X: np.ndarray) -> list:
    """All layer activations; last entry is the raw output head."""
    acts = [X]
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = acts[-1] @ w.T + b
        acts.append(z if l == last else np.tanh(z))
    return acts


def raw_outputs(params: SEModelParams, x) -> np.ndarray:
    X, squeeze = _as_batch(params, x)
    out = _forward(params, X)[-1]
    return out[0] if squeeze else out


def _as_batch(params: SEModelParams, x) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
        squeeze = True
    elif arr.ndim == 2:
        squeeze = False
    else:
        raise ValidationError(f"input must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[1] != params.input_dim:
        raise ValidationError(
            f"input dim {arr.shape[1]} != model input dim {params.input_dim}"
        )
    return arr, squeeze


def _check_targets(params: SEModelParams, Y: np.ndarray, batch: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape != (batch, params.output_dim):
        raise ValidationError(
            f"target shape {Y.shape} != ({batch}, {params.output_dim})"
        )
    return Y


def loss(params: SEModelParams, x, y) -> float:
    """Per-output sigmoid cross entropy averaged over the N+M* outputs.

    For a batch, the mean of the per-sample losses. Computed in the
    softplus form ``softplus(f) - y * f``, which never overflows.
    """
    X, _ = _as_batch(params, x)
    Y = _check_targets(params, y, X.shape[0])
    F = _forward(params, X)[-1]
    per_sample = (_softplus(F) - Y * F).mean(axis=1)
    value = float(per_sample.mean())
    if not np.isfinite(value):
        raise TrainingDivergedError("loss is not finite")
    return value


def loss_and_param_grads(params: SEModelParams, X, Y):
    """Batch loss plus gradients for every weight and bias."""
    X, _ = _as_batch(params, X)
    Y = _check_targets(params, Y, X.shape[0])
    acts = _forward(params, X)
    F = acts[-1]
    batch, k = F.shape
    value = float((_softplus(F) - Y * F).mean(axis=1).mean())
    delta = (sigmoid(F) - Y) / (k * batch)
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for l in range(len(params.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params.weights[l]) * (1.0 - acts[l] ** 2)
    return value, grads_w, grads_b


def input_gradient(params: SEModelParams, x, y, loss_terms: str = "full") -> np.ndarray:
    """Gradient of the per-sample loss with respect to the input.

    ``loss_terms="class"`` differentiates only the N class terms (averaged
    over N); ``"full"`` uses all N+M* terms. Batch rows are independent.
    """
    if loss_terms not in ("full", "class"):
        raise ValidationError(f"loss_terms must be 'full' or 'class', got {loss_terms!r}")
    X, squeeze = _as_batch(params, x)
    Y = _check_targets(params, y, X.shape[0])
    acts = _forward(params, X)
    delta = sigmoid(acts[-1]) - Y
    if loss_terms == "class":
        delta[:, params.n_classes:] = 0.0
        delta /= params.n_classes
    else:
        delta /= params.output_dim
    for l in range(len(params.weights) - 1, 0, -1):
        delta = (delta @ params.weights[l]) * (1.0 - acts[l] ** 2)
    grad = delta @ params.weights[0]
    return grad[0] if squeeze else grad


def predict(params: SEModelParams, x, threshold: float = 0.5):
    """Read (predicted class, explanation bits) off the output head.

    Class is the argmax of the first N raw outputs (ties go to the lowest
    index); explanation bit i is 1 iff sigmoid of output N+i is >= the
    threshold (inclusive at equality).
    """
    classes, bits = predict_batch(params, np.asarray(x, dtype=float)[None, :], threshold)
    return int(classes[0]), tuple(int(b) for b in bits[0])


def predict_batch(params: SEModelParams, X, threshold: float = 0.5):
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must be in (0, 1), got {threshold}")
    X, _ = _as_batch(params, X)
    F = _forward(params, X)[-1]
    classes = np.argmax(F[:, : params.n_classes], axis=1)
    bits = (sigmoid(F[:, params.n_classes:]) >= threshold).astype(np.int8)
    return classes, bits


def fgsm_perturb(params: SEModelParams, x, y, epsilon: float, loss_terms: str = "full"):
    """One-step gradient-sign perturbation, clamped back into [0, 1]^d.

    Moves each input component by ``epsilon`` in the direction that
    increases the loss (components with exactly zero gradient stay put).
    """
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    arr = np.asarray(x, dtype=float)
    grad = input_gradient(params, arr, y, loss_terms=loss_terms)
    return np.clip(arr + epsilon * np.sign(grad), 0.0, 1.0)


@dataclass(frozen=True)
class SyntheticTask:
    """Stand-in classification task: one prototype per class plus noise."""

    seed: int
    prototypes: np.ndarray  # (n_classes, input_dim), values in [0, 1]
    noise_scale: float
    matrix: ConceptMatrix

    def __post_init__(self):
        protos = np.asarray(self.prototypes, dtype=float)
        if protos.ndim != 2 or protos.shape[0] != self.matrix.n_classes:
            raise ValidationError(
                f"prototypes shape {protos.shape} does not give one row per "
                f"class ({self.matrix.n_classes})"
            )
        if protos.min() < 0.0 or protos.max() > 1.0:
            raise ValidationError("prototype components must lie in [0, 1]")
        for j in range(protos.shape[0]):
            for k in range(j + 1, protos.shape[0]):
                if np.array_equal(protos[j], protos[k]):
                    raise ValidationError(f"prototypes {j} and {k} are identical")
        if self.noise_scale < 0:
            raise ValidationError("noise_scale must be >= 0")
        protos = protos.copy()
        protos.flags.writeable = False
        object.__setattr__(self, "prototypes", protos)

    @property
    def input_dim(self) -> int:
        return self.prototypes.shape[1]


def make_task(
    matrix: ConceptMatrix, input_dim: int, noise_scale: float, seed: int
) -> SyntheticTask:
    rng = np.random.default_rng(seed)
    protos = rng.uniform(0.0, 1.0, size=(matrix.n_classes, input_dim))
    return SyntheticTask(seed=seed, prototypes=protos, noise_scale=noise_scale, matrix=matrix)


def sample_dataset(task: SyntheticTask, selected: Sequence[int], n: int, seed):
    """Draw n labeled samples: (X, Y, classes).

    Classes are uniform; inputs are the class prototype plus Gaussian noise,
    clamped to [0, 1]; targets are one-hot class bits followed by the
    class's explanation restricted to ``selected``.
    """
    if n < 1:
        raise ValidationError("dataset size must be >= 1")
    m = task.matrix
    rng = np.random.default_rng((task.seed, 23) + _seed_tuple(seed))
    classes = rng.integers(0, m.n_classes, size=n)
    X = task.prototypes[classes] + task.noise_scale * rng.standard_normal(
        (n, task.input_dim)
    )
    np.clip(X, 0.0, 1.0, out=X)
    expl = np.array(
        [explanation_of(m, c, tuple(selected)) for c in range(m.n_classes)],
        dtype=float,
    ).reshape(m.n_classes, len(tuple(selected)))
    Y = np.zeros((n, m.n_classes + expl.shape[1]))
    Y[np.arange(n), classes] = 1.0
    Y[:, m.n_classes:] = expl[classes]
    return X, Y, classes


def _seed_tuple(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters plus the dataset-split contract.

    With ``split="all"`` the model trains on all ``n_train`` samples. With
    "first"/"second", ``n_train`` is the size of a shared pool and the
    model trains on the leading ``split_fraction`` of it (respectively the
    rest), so two configs sharing a ``data_seed`` but taking opposite
    sides train on disjoint splits of the same dataset. ``data_seed=None``
    derives the data stream from ``seed``.
    """

    selected: tuple = ()  # concept indices for the explanation head; () = regular
    hidden: tuple = (64,)
    learning_rate: float = 0.5
    epochs: int = 60
    batch_size: int = 32
    n_train: int = 512
    seed: object = 0  # int or tuple of ints
    data_seed: object = None
    split: str = "all"  # "all" | "first" | "second"
    split_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.batch_size < 1 or self.n_train < 1:
            raise ValidationError("batch_size and n_train must be >= 1")
        if not all(h >= 1 for h in self.hidden):
            raise ValidationError("hidden layer sizes must be >= 1")
        if self.split not in ("all", "first", "second"):
            raise ValidationError(f"unknown split {self.split!r}")
        if not 0.0 < self.split_fraction < 1.0:
            raise ValidationError(
                f"split_fraction must be in (0, 1), got {self.split_fraction}"
            )
        if self.split != "all":
            cut = int(self.n_train * self.split_fraction)
            if cut < 1 or cut >= self.n_train:
                raise ValidationError(
                    f"split_fraction {self.split_fraction} leaves an empty side "
                    f"of the {self.n_train}-sample pool"
                )


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass(frozen=True)
class TrainResult:
    params: SEModelParams
    history: tuple

    def curve_text(self) -> str:
        lines = ["epoch\tloss\taccuracy"]
        for st in self.history:
            lines.append(f"{st.epoch}\t{st.loss:.12g}\t{st.accuracy:.12g}")
        return "\n".join(lines) + "\n"


def train_sgd(task: SyntheticTask, config: TrainConfig) -> TrainResult:
    """Plain mini-batch SGD on the synthetic task; bit-reproducible per seed.

    Raises TrainingDivergedError as soon as the epoch loss stops being
    finite. ``epochs = 0`` returns the untouched initialization.
    """
    m = task.matrix
    for a in config.selected:
        m.check_concept(a)
    base = _seed_tuple(config.seed)
    data_seed = base + (1,) if config.data_seed is None else _seed_tuple(config.data_seed)
    X, Y, classes = sample_dataset(task, config.selected, config.n_train, data_seed)
    if config.split != "all":
        cut = int(config.n_train * config.split_fraction)
        part = slice(0, cut) if config.split == "first" else slice(cut, config.n_train)
        X, Y, classes = X[part], Y[part], classes[part]
    rng_init = np.random.default_rng(base + (0,))
    rng_shuffle = np.random.default_rng(base + (2,))
    params = init_params(
        task.input_dim, config.hidden, m.n_classes, len(config.selected), rng_init
    )
    weights = [w.copy() for w in params.weights]
    biases = [b.copy() for b in params.biases]
    history = []
    n_samples = X.shape[0]
    for epoch in range(1, config.epochs + 1):
        order = rng_shuffle.permutation(n_samples)
        for start in range(0, n_samples, config.batch_size):
            idx = order[start : start + config.batch_size]
            current = SEModelParams(
                tuple(weights), tuple(biases), m.n_classes, len(config.selected)
            )
            _, gw, gb = loss_and_param_grads(current, X[idx], Y[idx])
            for l in range(len(weights)):
                weights[l] = weights[l] - config.learning_rate * gw[l]
                biases[l] = biases[l] - config.learning_rate * gb[l]
        current = SEModelParams(
            tuple(weights), tuple(biases), m.n_classes, len(config.selected)
        )
        F = _forward(current, X)[-1]
        epoch_loss = float((_softplus(F) - Y * F).mean())
        if not np.isfinite(epoch_loss) or not all(
            np.isfinite(w).all() for w in weights
        ):
            raise TrainingDivergedError(
                f"training diverged at epoch {epoch} "
                f"(lr={config.learning_rate}, batch_size={config.batch_size})"
            )
        pred_classes, _ = predict_batch(current, X)
        acc = float(np.mean(pred_classes == classes))
        history.append(EpochStats(epoch=epoch, loss=epoch_loss, accuracy=acc))
    final = SEModelParams(
        tuple(weights), tuple(biases), m.n_classes, len(config.selected)
    )
    return TrainResult(params=final, history=tuple(history))


MODEL_FORMAT_VERSION = 1


def save_model(params: SEModelParams, path, extra: Optional[dict] = None) -> None:
    """Serialize to .npz with a JSON meta entry (dims, head split, provenance)."""
    meta = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_dims": list(params.layer_dims),
        "n_classes": params.n_classes,
        "n_concepts": params.n_concepts,
    }
    if extra:
        meta.update(extra)
    arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"w{l}"] = w
        arrays[f"b{l}"] = b
    np.savez(path, **arrays)


def load_model(path):
    """Inverse of save_model; returns (params, meta dict)."""
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
        except KeyError:
            raise ValidationError(f"{path}: not a toolkit model file (no meta)") from None
        if meta.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValidationError(
                f"{path}: unsupported model format_version {meta.get('format_version')!r}"
            )
        n_layers = len(meta["layer_dims"]) - 1
        weights = tuple(data[f"w{l}"] for l in range(n_layers))
        biases = tuple(data[f"b{l}"] for l in range(n_layers))
    params = SEModelParams(weights, biases, meta["n_classes"], meta["n_concepts"])
    return params, meta
