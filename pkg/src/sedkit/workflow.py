"""Design-workflow orchestration: ranked concept selection, scheme sweeps,
and deterministic report emission.

The selection loop grows the concept set in overall-score order, measures
detection performance through a pluggable backend after each addition, and
stops once the target is met or every concept is in. Backends:

* ``SimulatorBackend``: seeded misclassification simulator.
* ``ToyModelBackend``: trains the toy self-explainable classifier per
  step and attacks it with FGSM at one or more perturbation sizes.
* ``LogBackend``: replays an ingested prediction log, projecting its
  explanation bits down to the concepts under evaluation.

Sweep cells for a given k share one record stream, so schemes are compared
on identical data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .concepts import ConceptMatrix, load_concept_matrix
from .detection import SCHEME_SE, EvalReport, check_scheme, evaluate_scheme
from .errors import ValidationError
from .logio import project_records, read_log, validate_against_matrix
from .scoring import overall_scores
from .simulate import SimulatorSpec, simulate_records
from .toymodel import (
    TrainConfig,
    fgsm_perturb,
    make_task,
    predict_batch,
    sample_dataset,
    train_sgd,
)

EPS_MEAN = "mean"  # epsilon tag for the equal-weight average row


@dataclass(frozen=True)
class SweepRow:
    k: int
    scheme: str
    epsilon: object  # None (no attack axis), a float, or EPS_MEAN
    p_ed: Optional[float]
    err_total: int
    err_detected: int
    selected: tuple  # concept names, bit order


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    config: dict
    seed: object

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple  # concept indices, rank order
    selected_names: tuple
    reached: bool  # False = threshold not reached, selection exhausted
    trace: SweepResult


@dataclass(frozen=True)
class SimulatorBackend:
    spec: SimulatorSpec

    def describe(self) -> dict:
        return {
            "backend": "simulator",
            "samples": self.spec.samples,
            "p_err": self.spec.p_err,
            "explanation": self.spec.explanation,
            "flip_q": self.spec.flip_q,
            "p_err_b": self.spec.p_err_b,
            "copy_prob": self.spec.copy_prob,
            "custom_confusion": self.spec.confusion is not None,
        }

    def sweep_rows(self, m, selected, schemes, seed):
        records = simulate_records(m, selected, self.spec, seed)
        return [
            (None, s, evaluate_scheme(s, m, selected, records)) for s in schemes
        ]


@dataclass
class ToyModelBackend:
    """Backend that trains/attacks toy models for each selection step.

    One regular model (classifier B) is trained per seed with its own data
    seed (the desk-scale analogue of training on a different split) and
    reused across steps; the self-explainable model is retrained for every
    selected-concept set.
    """

    input_dim: int = 16
    noise_scale: float = 0.08
    task_seed: int = 0
    hidden: tuple = (32,)
    learning_rate: float = 0.5
    epochs: int = 80
    batch_size: int = 32
    n_train: int = 512
    n_eval: int = 400
    epsilons: tuple = (0.05, 0.1, 0.15)
    attack_loss: str = "full"
    threshold: float = 0.5
    _cache: dict = field(default_factory=dict, repr=False)

    def describe(self) -> dict:
        return {
            "backend": "toy-model",
            "input_dim": self.input_dim,
            "noise_scale": self.noise_scale,
            "task_seed": self.task_seed,
            "hidden": list(self.hidden),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "epsilons": list(self.epsilons),
            "attack_loss": self.attack_loss,
            "threshold": self.threshold,
        }

    def _task(self, m):
        key = ("task", id(m))
        if key not in self._cache:
            self._cache[key] = make_task(m, self.input_dim, self.noise_scale, self.task_seed)
        return self._cache[key]

    def _train(self, task, selected, seed):
        cfg = TrainConfig(
            selected=tuple(selected),
            hidden=self.hidden,
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            n_train=self.n_train,
            seed=seed,
        )
        return train_sgd(task, cfg).params

    def _regular_model(self, m, seed):
        key = ("regular", id(m), seed)
        if key not in self._cache:
            self._cache[key] = self._train(self._task(m), (), (seed, 202))
        return self._cache[key]

    def sweep_rows(self, m, selected, schemes, seed):
        from .detection import PredictionRecord  # local to avoid cycle noise

        selected = tuple(selected)
        task = self._task(m)
        model_a = self._train(task, selected, (seed, 101, len(selected)))
        needs_b = any(s in ("R1", "SE+R1") for s in schemes)
        model_b = self._regular_model(m, seed) if needs_b else None
        X, Y, truth = sample_dataset(task, selected, self.n_eval, (seed, 303))
        eps_list = list(self.epsilons) if self.epsilons else [0.0]
        per_scheme = {s: [] for s in schemes}
        rows = []
        for eps in eps_list:
            X_adv = (
                fgsm_perturb(model_a, X, Y, eps, loss_terms=self.attack_loss)
                if eps > 0
                else X
            )
            cls_a, bits = predict_batch(model_a, X_adv, self.threshold)
            cls_b = (
                predict_batch(model_b, X_adv, self.threshold)[0]
                if model_b is not None
                else None
            )
            records = [
                PredictionRecord(
                    sample_id=f"e{i:05d}",
                    true_class=int(truth[i]),
                    predicted_class_a=int(cls_a[i]),
                    predicted_explanation=tuple(int(b) for b in bits[i]),
                    predicted_class_b=None if cls_b is None else int(cls_b[i]),
                )
                for i in range(self.n_eval)
            ]
            for s in schemes:
                report = evaluate_scheme(s, m, selected, records)
                per_scheme[s].append(report)
                rows.append((eps if self.epsilons else None, s, report))
        if self.epsilons and len(eps_list) > 1:
            for s in schemes:
                rows.append((EPS_MEAN, s, _mean_report(s, per_scheme[s])))
        return rows


def _mean_report(scheme, reports):
    """Equal-weight mean of per-epsilon p_ed values; counts are pooled sums."""
    defined = [r.p_ed for r in reports if r.p_ed is not None]
    return EvalReport(
        scheme=scheme,
        total_samples=sum(r.total_samples for r in reports),
        err_total=sum(r.err_total for r in reports),
        err_detected=sum(r.err_detected for r in reports),
        false_alarms=sum(r.false_alarms for r in reports),
        p_ed=sum(defined) / len(defined) if defined else None,
    )


@dataclass
class LogBackend:
    header: object
    records: list

    @classmethod
    def from_file(cls, source):
        header, records = read_log(source)
        return cls(header=header, records=records)

    def describe(self) -> dict:
        return {
            "backend": "log-file",
            "records": len(self.records),
            "log_concepts": list(self.header.selected_concepts),
        }

    def sweep_rows(self, m, selected, schemes, seed):
        validate_against_matrix(self.header, m)
        wanted = [m.concept_names[a] for a in selected]
        projected = project_records(self.records, self.header.selected_concepts, wanted)
        return [
            (None, s, evaluate_scheme(s, m, tuple(selected), projected))
            for s in schemes
        ]


def _scalar_ped(rows, scheme):
    """The one p_ed the selection loop compares against its threshold."""
    mean_rows = [r for r in rows if r[0] == EPS_MEAN and r[1] == scheme]
    if mean_rows:
        return mean_rows[0][2].p_ed
    plain = [r for r in rows if r[1] == scheme]
    return plain[-1][2].p_ed


def run_selection_workflow(
    m: ConceptMatrix,
    threshold: float,
    backend,
    seed,
    scheme: str = SCHEME_SE,
) -> SelectionResult:
    """Grow the selected-concept set in score order until detection
    performance reaches the threshold (or all concepts are in).

    An unreachable threshold is not an error: the result carries the full
    selection with ``reached=False``.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    check_scheme(scheme)
    ranking = overall_scores(m).ranking()
    rows = []
    reached = False
    k_stop = m.n_concepts
    for k in range(1, m.n_concepts + 1):
        selected = ranking[:k]
        names = tuple(m.concept_names[a] for a in selected)
        cell_rows = backend.sweep_rows(m, selected, [scheme], seed)
        for eps, s, report in cell_rows:
            rows.append(
                SweepRow(
                    k=k,
                    scheme=s,
                    epsilon=eps,
                    p_ed=report.p_ed,
                    err_total=report.err_total,
                    err_detected=report.err_detected,
                    selected=names,
                )
            )
        p_ed = _scalar_ped(cell_rows, scheme)
        if p_ed is not None and p_ed >= threshold:
            reached = True
            k_stop = k
            break
    selected = ranking[:k_stop]
    trace = SweepResult(
        rows=tuple(rows),
        config={
            **backend.describe(),
            "threshold": threshold,
            "scheme": scheme,
            "mode": "selection-workflow",
        },
        seed=seed,
    )
    return SelectionResult(
        selected=tuple(selected),
        selected_names=tuple(m.concept_names[a] for a in selected),
        reached=reached,
        trace=trace,
    )


def run_scheme_sweep(
    m: ConceptMatrix,
    schemes: Sequence[str],
    backend,
    seed,
    k_range: Optional[Sequence[int]] = None,
) -> SweepResult:
    """Evaluate every requested scheme at each selection size k.

    All schemes at a given k see the same record stream. The same base seed
    is used at every k, so with the simulator backend the class-level
    skeleton is shared across the whole sweep.
    """
    schemes = [check_scheme(s) for s in schemes]
    if not schemes:
        raise ValidationError("at least one scheme is required")
    ranking = overall_scores(m).ranking()
    ks = list(k_range) if k_range is not None else list(range(1, m.n_concepts + 1))
    for k in ks:
        if not 1 <= k <= m.n_concepts:
            raise ValidationError(f"k={k} out of range [1, {m.n_concepts}]")
    rows = []
    for k in ks:
        selected = ranking[:k]
        names = tuple(m.concept_names[a] for a in selected)
        for eps, s, report in backend.sweep_rows(m, selected, schemes, seed):
            rows.append(
                SweepRow(
                    k=k,
                    scheme=s,
                    epsilon=eps,
                    p_ed=report.p_ed,
                    err_total=report.err_total,
                    err_detected=report.err_detected,
                    selected=names,
                )
            )
    return SweepResult(
        rows=tuple(rows),
        config={**backend.describe(), "schemes": list(schemes), "k_range": ks},
        seed=seed,
    )


def _fmt_eps(eps) -> str:
    if eps is None:
        return "-"
    if eps == EPS_MEAN:
        return EPS_MEAN
    return f"{eps:.12g}"


def _fmt_ped(p_ed) -> str:
    return "NA" if p_ed is None else f"{p_ed:.12g}"


def emit_report(result: SweepResult, format: str = "tabular") -> str:
    """Render a sweep/trace as a byte-deterministic document.

    Tabular form: '#' comment lines echoing toolkit version, seed, and
    config, then a TSV table. Structured form: a sorted-key JSON object.
    """
    if not result.rows:
        raise ValidationError("cannot emit a report for an empty result")
    if format == "tabular":
        lines = [
            f"# sedkit {__version__}",
            f"# seed: {result.seed}",
            f"# config: {json.dumps(result.config, sort_keys=True)}",
            "k\tscheme\tepsilon\tp_ed\terr_total\terr_detected\tselected",
        ]
        for r in result.rows:
            lines.append(
                f"{r.k}\t{r.scheme}\t{_fmt_eps(r.epsilon)}\t{_fmt_ped(r.p_ed)}"
                f"\t{r.err_total}\t{r.err_detected}\t{'|'.join(r.selected)}"
            )
        return "\n".join(lines) + "\n"
    if format == "structured":
        obj = {
            "toolkit_version": __version__,
            "seed": result.seed,
            "config": result.config,
            "rows": [
                {
                    "k": r.k,
                    "scheme": r.scheme,
                    "epsilon": r.epsilon,
                    "p_ed": None if r.p_ed is None else float(f"{r.p_ed:.12g}"),
                    "err_total": r.err_total,
                    "err_detected": r.err_detected,
                    "selected": list(r.selected),
                }
                for r in result.rows
            ],
        }
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    raise ValidationError(f"unknown report format {format!r}")


@dataclass(frozen=True)
class WorkflowConfig:
    """File-facing configuration for the selection workflow."""

    matrix: str
    threshold: float
    backend: str  # "simulator" | "toy-model" | "log-file"
    backend_params: dict
    seed: object

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValidationError(
                f"threshold must be in (0, 1], got {self.threshold}"
            )
        if self.backend not in ("simulator", "toy-model", "log-file"):
            raise ValidationError(f"unknown backend {self.backend!r}")

    @classmethod
    def from_file(cls, path):
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            matrix=obj["matrix"],
            threshold=obj["threshold"],
            backend=obj["backend"],
            backend_params=obj.get("backend_params", {}),
            seed=obj.get("seed"),
        )

    def build(self):
        """Returns (matrix, backend object) ready for run_selection_workflow."""
        m = load_concept_matrix(self.matrix)
        p = dict(self.backend_params)
        if self.backend == "simulator":
            backend = SimulatorBackend(SimulatorSpec(**p))
        elif self.backend == "toy-model":
            if "hidden" in p:
                p["hidden"] = tuple(p["hidden"])
            if "epsilons" in p:
                p["epsilons"] = tuple(p["epsilons"])
            backend = ToyModelBackend(**p)
        else:
            backend = LogBackend.from_file(p["log"])
        return m, backend
