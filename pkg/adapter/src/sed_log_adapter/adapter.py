"""Run a trained classifier over a dataset and write a sedkit prediction log.

The adapter computes nothing beyond argmax and a sigmoid threshold: all
scoring and detection semantics stay in the evaluating toolkit. It only
speaks the toolkit's two file formats, the concept-matrix document (for
name validation) and the line-delimited prediction log (for output).

Log format (must match the toolkit byte for byte): line 1 is
``{"schema_version": 1, "class_names": [...], "selected_concepts": [...]}``;
every further line is a record with keys sample_id, true_class,
predicted_class_a and, for explanation-emitting models, a
predicted_explanation bit list. Classes are integer indices into
class_names; bits follow selected_concepts order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

SCHEMA_VERSION = 1


class AdapterError(Exception):
    """Invalid configuration, dataset, or model output."""


def sigmoid(f: float) -> float:
    if f >= 0:
        return 1.0 / (1.0 + math.exp(-f))
    e = math.exp(f)
    return e / (1.0 + e)


@dataclass
class AdapterConfig:
    """What to run and how to write it.

    ``model`` maps one input to N raw class scores, or to N + M* scores
    when it also emits explanation logits (M* = len(concept_names), bit i
    is 1 iff sigmoid(score) >= threshold). ``dataset`` yields (input,
    true_class_index) pairs. ``matrix`` optionally points at the
    concept-matrix file the log will be evaluated against; names are
    checked before anything is written.
    """

    model: Callable
    dataset: Iterable
    class_names: Sequence[str]
    concept_names: Sequence[str] = field(default_factory=list)
    threshold: float = 0.5
    output: Optional[str] = None
    matrix: Optional[str] = None


def parse_matrix_names(text: str):
    """Extract (class_names, concept_names) from a concept-matrix document.

    Understands both the tabular form (header row = concepts, first column
    = classes, '#' comments) and the JSON object form.
    """
    stripped = text.lstrip()
    if not stripped:
        raise AdapterError("empty concept-matrix document")
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"invalid JSON concept matrix: {exc}") from None
        try:
            return list(obj["classes"]), list(obj["concepts"])
        except (KeyError, TypeError):
            raise AdapterError(
                "JSON concept matrix needs 'classes' and 'concepts' lists"
            ) from None
    lines = [
        raw for raw in text.splitlines()
        if raw.strip() and not raw.strip().startswith("#")
    ]
    if len(lines) < 2:
        raise AdapterError("tabular concept matrix needs a header and class rows")
    delim = "\t" if "\t" in lines[0] else "," if "," in lines[0] else None
    split = (lambda s: s.split(delim)) if delim else str.split
    concepts = [c.strip() for c in split(lines[0])[1:]]
    classes = [split(line)[0].strip() for line in lines[1:]]
    return classes, concepts


def _validate(cfg: AdapterConfig) -> None:
    classes = list(cfg.class_names)
    concepts = list(cfg.concept_names)
    if len(classes) < 2:
        raise AdapterError("need at least 2 class names")
    if len(set(classes)) != len(classes):
        raise AdapterError("duplicate class names")
    if len(set(concepts)) != len(concepts):
        raise AdapterError("duplicate concept names")
    if not 0.0 < cfg.threshold < 1.0:
        raise AdapterError(f"threshold must be in (0, 1), got {cfg.threshold}")
    if cfg.matrix is not None:
        try:
            text = Path(cfg.matrix).read_text(encoding="utf-8")
        except OSError as exc:
            raise AdapterError(f"cannot read matrix {cfg.matrix!r}: {exc}") from None
        matrix_classes, matrix_concepts = parse_matrix_names(text)
        if classes != matrix_classes:
            raise AdapterError(
                "class names do not match the matrix file "
                f"(log: {len(classes)} names, matrix: {len(matrix_classes)}; "
                "names and order must be identical)"
            )
        unknown = [c for c in concepts if c not in matrix_concepts]
        if unknown:
            raise AdapterError(
                f"concepts not present in the matrix file: {', '.join(unknown)}"
            )


def format_header(class_names, concept_names) -> str:
    return json.dumps(
        {
            "schema_version": SCHEMA_VERSION,
            "class_names": list(class_names),
            "selected_concepts": list(concept_names),
        }
    )


def _record_line(i, true_class, pred, bits) -> str:
    obj = {
        "sample_id": f"d{i:06d}",
        "true_class": true_class,
        "predicted_class_a": pred,
    }
    if bits is not None:
        obj["predicted_explanation"] = bits
    return json.dumps(obj)


def export_log(cfg: AdapterConfig, out=None) -> int:
    """Write header plus one record per dataset sample; returns the count.

    Validation (config, and names against the matrix file when given)
    happens before any output is produced. The model's output arity is
    pinned by the first sample: exactly N (no explanation fields) or
    N + M* (explanation bits appended).
    """
    _validate(cfg)
    n = len(cfg.class_names)
    m_star = len(cfg.concept_names)
    lines = [format_header(cfg.class_names, cfg.concept_names)]
    arity = None
    count = 0
    for i, item in enumerate(cfg.dataset):
        try:
            x, true_class = item
        except (TypeError, ValueError):
            raise AdapterError(
                f"dataset item {i} is not an (input, true_class) pair"
            ) from None
        if not isinstance(true_class, int) or not 0 <= true_class < n:
            raise AdapterError(
                f"sample {i}: true_class {true_class!r} is not an index in [0, {n})"
            )
        outputs = [float(v) for v in cfg.model(x)]
        if arity is None:
            if len(outputs) == n:
                arity = n
            elif m_star and len(outputs) == n + m_star:
                arity = n + m_star
            else:
                allowed = f"{n}" if not m_star else f"{n} or {n + m_star}"
                raise AdapterError(
                    f"sample {i}: model produced {len(outputs)} outputs, "
                    f"expected {allowed}"
                )
        elif len(outputs) != arity:
            raise AdapterError(
                f"sample {i}: model produced {len(outputs)} outputs, "
                f"previous samples produced {arity}"
            )
        pred = max(range(n), key=outputs.__getitem__)
        bits = None
        if arity > n:
            bits = [1 if sigmoid(f) >= cfg.threshold else 0 for f in outputs[n:]]
        lines.append(_record_line(i, true_class, pred, bits))
        count += 1
    text = "\n".join(lines) + "\n"
    if out is not None:
        out.write(text)
    elif cfg.output is not None:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        raise AdapterError("no output destination configured")
    return count
