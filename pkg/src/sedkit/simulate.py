"""Seeded misclassification simulator producing prediction-record streams.

True classes are uniform; with probability ``p_err`` the predicted class is
replaced by a wrong one (uniformly, or per a custom confusion row). The
predicted explanation is the true class's explanation (oracle model) or
that with independent per-bit flips (noisy model). An optional second
classifier with its own error parameters supports the ensemble schemes.

The RNG is split into two substreams: class-level draws (truth, both
predictions) come from substream 0 and explanation noise from substream 1.
Class outcomes therefore do not depend on which concepts are selected:
sweeps over growing concept sets see the identical misclassification
skeleton, which keeps R1 exactly constant across the sweep and makes
oracle-explanation detection exactly monotone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .concepts import ConceptMatrix
from .detection import PredictionRecord
from .errors import ValidationError


@dataclass(frozen=True)
class SimulatorSpec:
    """Parameters of one simulated stream.

    ``confusion`` (and ``confusion_b``), when given, are N x N row-stochastic
    matrices over the *wrong* classes only: zero diagonal, rows summing to 1;
    the overall error probability is still ``p_err``. ``copy_prob`` is the
    probability that the second classifier emits exactly the first one's
    prediction instead of drawing independently (so when the first errs,
    both make the identical wrong prediction).
    """

    samples: int
    p_err: float
    confusion: Optional[np.ndarray] = None
    explanation: str = "oracle"  # "oracle" | "noisy"
    flip_q: float = 0.0
    p_err_b: Optional[float] = None
    confusion_b: Optional[np.ndarray] = None
    copy_prob: float = 0.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")
        for name in ("p_err", "flip_q", "copy_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")
        if self.p_err_b is not None and not 0.0 <= self.p_err_b <= 1.0:
            raise ValidationError(f"p_err_b must be in [0, 1], got {self.p_err_b}")
        if self.explanation not in ("oracle", "noisy"):
            raise ValidationError(
                f"explanation must be 'oracle' or 'noisy', got {self.explanation!r}"
            )
        for name in ("confusion", "confusion_b"):
            mat = getattr(self, name)
            if mat is not None:
                object.__setattr__(self, name, _check_confusion(np.asarray(mat, float), name))


def _check_confusion(mat: np.ndarray, name: str) -> np.ndarray:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {mat.shape}")
    if (mat < 0).any():
        raise ValidationError(f"{name} has negative entries")
    if np.abs(np.diag(mat)).max() > 0:
        raise ValidationError(f"{name} must have a zero diagonal")
    sums = mat.sum(axis=1)
    if not np.allclose(sums, 1.0, atol=1e-9):
        j = int(np.argmax(np.abs(sums - 1.0)))
        raise ValidationError(f"{name} row {j} sums to {sums[j]}, not 1")
    mat = mat.copy()
    mat.flags.writeable = False
    return mat


def _draw_predictions(rng, truth, n_classes, p_err, confusion):
    n = truth.shape[0]
    err = rng.random(n) < p_err
    # uniform offsets are drawn for every sample so the draw sequence does
    # not depend on the error pattern
    if confusion is None:
        offsets = rng.integers(1, n_classes, size=n)
        wrong = (truth + offsets) % n_classes
    else:
        wrong = truth.copy()
        for j in range(n_classes):
            idx = np.flatnonzero((truth == j) & err)
            if idx.size:
                wrong[idx] = rng.choice(n_classes, size=idx.size, p=confusion[j])
    return np.where(err, wrong, truth)


def simulate_records(
    m: ConceptMatrix,
    selected: Sequence[int],
    spec: SimulatorSpec,
    seed,
) -> List[PredictionRecord]:
    """Generate one reproducible stream of prediction records."""
    selected = tuple(selected)
    for a in selected:
        m.check_concept(a)
    n_cls = m.n_classes
    for name in ("confusion", "confusion_b"):
        mat = getattr(spec, name)
        if mat is not None and mat.shape[0] != n_cls:
            raise ValidationError(
                f"{name} is {mat.shape[0]}x{mat.shape[0]} but the matrix has "
                f"{n_cls} classes"
            )
    seed = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    rng_cls = np.random.default_rng(seed + (0,))
    rng_expl = np.random.default_rng(seed + (1,))
    n = spec.samples

    truth = rng_cls.integers(0, n_cls, size=n)
    pred_a = _draw_predictions(rng_cls, truth, n_cls, spec.p_err, spec.confusion)
    pred_b = None
    if spec.p_err_b is not None:
        copy_mask = rng_cls.random(n) < spec.copy_prob
        indep = _draw_predictions(rng_cls, truth, n_cls, spec.p_err_b, spec.confusion_b)
        pred_b = np.where(copy_mask, pred_a, indep)

    bits = m.incidence[:, list(selected)][truth].astype(np.int8)
    bits = bits.reshape(n, len(selected))
    if spec.explanation == "noisy" and selected:
        flips = rng_expl.random((n, len(selected))) < spec.flip_q
        bits = bits ^ flips.astype(np.int8)

    records = []
    for i in range(n):
        records.append(
            PredictionRecord(
                sample_id=f"s{i:06d}",
                true_class=int(truth[i]),
                predicted_class_a=int(pred_a[i]),
                predicted_explanation=tuple(int(b) for b in bits[i]),
                predicted_class_b=None if pred_b is None else int(pred_b[i]),
            )
        )
    return records
