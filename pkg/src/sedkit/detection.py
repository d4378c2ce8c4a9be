"""Self-error detection: the explanation-mismatch rule and the three schemes.

A prediction is flagged when the predicted explanation differs bitwise from
the ground-truth explanation of the *predicted* class. The three schemes
evaluated over a record stream:

* ``R1``: two plain classifiers disagree on the class.
* ``SE``: a single self-explainable classifier, explanation-mismatch rule.
* ``SE+R1``: a self-explainable classifier plus a plain one; flag on
  explanation mismatch *or* class disagreement.

``evaluate_scheme`` makes one pass with O(1) state, so record streams may be
generators; per-record outcomes are independent and counters merge
associatively, so sharding a stream across workers is safe.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .concepts import ClassId, ConceptMatrix, explanation_of
from .errors import ValidationError

SCHEME_R1 = "R1"
SCHEME_SE = "SE"
SCHEME_SE_R1 = "SE+R1"
SCHEMES = (SCHEME_R1, SCHEME_SE, SCHEME_SE_R1)


@dataclass(frozen=True)
class PredictionRecord:
    """One sample: ground truth plus what the classifier(s) said about it.

    ``predicted_explanation`` is present iff the record came from a
    self-explainable system; ``predicted_class_b`` iff a second classifier
    ran on the same input.
    """

    sample_id: str
    true_class: ClassId
    predicted_class_a: ClassId
    predicted_explanation: Optional[tuple] = None
    predicted_class_b: Optional[ClassId] = None


@dataclass(frozen=True)
class DetectionOutcome:
    is_error: bool  # true_class != predicted_class_a
    flagged: bool  # the scheme raised "error"


@dataclass(frozen=True)
class EvalReport:
    """Detection counts over one record stream under one scheme.

    ``p_ed`` is err_detected / err_total, or None when the stream contains
    no class-prediction errors (the ratio is 0/0 there, not 0 or 1).
    ``false_alarms`` counts flagged records whose class prediction was
    actually correct; it is reported for operations but is not part of
    p_ed.
    """

    scheme: str
    total_samples: int
    err_total: int
    err_detected: int
    false_alarms: int
    p_ed: Optional[float]

    def summary_line(self) -> str:
        ped = "NA" if self.p_ed is None else f"{self.p_ed:.12g}"
        return (
            f"scheme={self.scheme} samples={self.total_samples} "
            f"err_total={self.err_total} err_detected={self.err_detected} "
            f"p_ed={ped} false_alarms={self.false_alarms}"
        )

    def to_json_obj(self) -> dict:
        return {
            "scheme": self.scheme,
            "total_samples": self.total_samples,
            "err_total": self.err_total,
            "err_detected": self.err_detected,
            "p_ed": self.p_ed,
            "false_alarms": self.false_alarms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"


def sed_flag(
    m: ConceptMatrix,
    selected: Sequence[int],
    predicted_class: ClassId,
    predicted_explanation: tuple,
) -> bool:
    """Explanation-mismatch rule: flag iff the predicted explanation differs
    bitwise from the predicted class's ground-truth explanation.

    Exact comparison: a concept required by the predicted class must be
    present, and any concept outside it must be absent.
    """
    expected = explanation_of(m, predicted_class, selected)
    got = tuple(int(b) for b in predicted_explanation)
    if len(got) != len(expected):
        raise ValidationError(
            f"explanation length {len(got)} does not match "
            f"{len(expected)} selected concepts"
        )
    return got != expected


def check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValidationError(
            f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}"
        )
    return scheme


def record_outcome(
    scheme: str,
    m: ConceptMatrix,
    selected: Sequence[int],
    rec: PredictionRecord,
) -> DetectionOutcome:
    """Apply one scheme to one record."""
    check_scheme(scheme)
    m.check_class(rec.true_class)
    m.check_class(rec.predicted_class_a)
    needs_b = scheme in (SCHEME_R1, SCHEME_SE_R1)
    needs_expl = scheme in (SCHEME_SE, SCHEME_SE_R1)
    if needs_b and rec.predicted_class_b is None:
        raise ValidationError(
            f"record {rec.sample_id!r} has no predicted_class_b, "
            f"required by scheme {scheme}"
        )
    if needs_expl and rec.predicted_explanation is None:
        raise ValidationError(
            f"record {rec.sample_id!r} has no predicted_explanation, "
            f"required by scheme {scheme}"
        )
    flagged = False
    if needs_b:
        m.check_class(rec.predicted_class_b)
        flagged = rec.predicted_class_a != rec.predicted_class_b
    if needs_expl:
        flagged |= sed_flag(
            m, selected, rec.predicted_class_a, rec.predicted_explanation
        )
    return DetectionOutcome(
        is_error=rec.true_class != rec.predicted_class_a, flagged=flagged
    )


def evaluate_scheme(
    scheme: str,
    m: ConceptMatrix,
    selected: Sequence[int],
    records: Iterable[PredictionRecord],
) -> EvalReport:
    """Run one detection scheme over a record stream and tally its report."""
    check_scheme(scheme)
    total = err_total = err_detected = false_alarms = 0
    for rec in records:
        outcome = record_outcome(scheme, m, selected, rec)
        total += 1
        if outcome.is_error:
            err_total += 1
            if outcome.flagged:
                err_detected += 1
        elif outcome.flagged:
            false_alarms += 1
    if total == 0:
        raise ValidationError("empty record stream")
    p_ed = err_detected / err_total if err_total > 0 else None
    return EvalReport(
        scheme=scheme,
        total_samples=total,
        err_total=err_total,
        err_detected=err_detected,
        false_alarms=false_alarms,
        p_ed=p_ed,
    )


def max_ped_oracle(m: ConceptMatrix, selected: Sequence[int]) -> float:
    """Detection ceiling for SE under uniform classes and uniform confusion.

    The fraction of the N(N-1) ordered (truth, predicted) pairs whose
    restricted explanations differ; an ideal self-explainable system whose
    predicted explanation always equals the truth's explanation detects
    exactly these. Monotone non-decreasing as ``selected`` grows.
    """
    n = m.n_classes
    expl = [explanation_of(m, c, selected) for c in range(n)]
    distinguishable = sum(
        1 for j in range(n) for k in range(n) if j != k and expl[j] != expl[k]
    )
    return distinguishable / (n * (n - 1))
