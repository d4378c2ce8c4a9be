"""Line-delimited prediction-log format.

Line 1 is a JSON header object with fixed key order::

    {"schema_version": 1, "class_names": [...], "selected_concepts": [...]}

Every following line is one JSON record with keys (absent ones omitted)::

    sample_id, true_class, predicted_class_a, predicted_explanation,
    predicted_class_b

Classes are integer indices into the header's ``class_names``; explanation
bits are 0/1 in the order of ``selected_concepts``. Serialization is
byte-deterministic: fixed key order, ``json.dumps`` defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple

from .concepts import ConceptMatrix
from .detection import PredictionRecord
from .errors import ParseError, ValidationError

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class LogHeader:
    class_names: tuple
    selected_concepts: tuple
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "selected_concepts", tuple(self.selected_concepts))


def format_header(header: LogHeader) -> str:
    return json.dumps(
        {
            "schema_version": header.schema_version,
            "class_names": list(header.class_names),
            "selected_concepts": list(header.selected_concepts),
        }
    )


def format_record(rec: PredictionRecord) -> str:
    obj = {
        "sample_id": rec.sample_id,
        "true_class": rec.true_class,
        "predicted_class_a": rec.predicted_class_a,
    }
    if rec.predicted_explanation is not None:
        obj["predicted_explanation"] = list(rec.predicted_explanation)
    if rec.predicted_class_b is not None:
        obj["predicted_class_b"] = rec.predicted_class_b
    return json.dumps(obj)


def write_log(target, header: LogHeader, records: Iterable[PredictionRecord]) -> int:
    """Write header + records to a path or text file object; returns record count."""
    if hasattr(target, "write"):
        return _write_to(target, header, records)
    with open(target, "w", encoding="utf-8") as fp:
        return _write_to(fp, header, records)


def _write_to(fp, header, records) -> int:
    fp.write(format_header(header) + "\n")
    count = 0
    for rec in records:
        fp.write(format_record(rec) + "\n")
        count += 1
    return count


def parse_header(line: str) -> LogHeader:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"log header is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("log header must be a JSON object")
    missing = [
        k for k in ("schema_version", "class_names", "selected_concepts") if k not in obj
    ]
    if missing:
        raise ParseError(f"log header missing fields: {', '.join(missing)}")
    if obj["schema_version"] != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported log schema_version {obj['schema_version']!r} "
            f"(this toolkit reads version {SCHEMA_VERSION})"
        )
    return LogHeader(
        class_names=tuple(obj["class_names"]),
        selected_concepts=tuple(obj["selected_concepts"]),
        schema_version=obj["schema_version"],
    )


def parse_record(line: str, header: LogHeader, lineno: int) -> PredictionRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {lineno}: invalid JSON record: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: record must be a JSON object")
    n = len(header.class_names)
    try:
        sample_id = obj["sample_id"]
        true_class = obj["true_class"]
        pred_a = obj["predicted_class_a"]
    except KeyError as exc:
        raise ParseError(f"line {lineno}: record missing field {exc.args[0]!r}") from None
    for name, value in (("true_class", true_class), ("predicted_class_a", pred_a)):
        if not isinstance(value, int) or not 0 <= value < n:
            raise ParseError(
                f"line {lineno}: {name}={value!r} is not a class index in [0, {n})"
            )
    expl = obj.get("predicted_explanation")
    if expl is not None:
        if not isinstance(expl, list) or any(b not in (0, 1) for b in expl):
            raise ParseError(f"line {lineno}: predicted_explanation must be 0/1 bits")
        if len(expl) != len(header.selected_concepts):
            raise ParseError(
                f"line {lineno}: explanation has {len(expl)} bits for "
                f"{len(header.selected_concepts)} selected concepts"
            )
        expl = tuple(expl)
    pred_b = obj.get("predicted_class_b")
    if pred_b is not None and (not isinstance(pred_b, int) or not 0 <= pred_b < n):
        raise ParseError(
            f"line {lineno}: predicted_class_b={pred_b!r} is not a class index"
        )
    return PredictionRecord(
        sample_id=str(sample_id),
        true_class=true_class,
        predicted_class_a=pred_a,
        predicted_explanation=expl,
        predicted_class_b=pred_b,
    )


def read_log(source) -> Tuple[LogHeader, List[PredictionRecord]]:
    """Read a whole log from a path, file object, or document text."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, (Path, os.PathLike)):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, str) and "\n" in source:
        text = source
    elif isinstance(source, str):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read log {source!r}: {exc}") from None
    else:
        raise TypeError(f"cannot read log from {type(source).__name__}")
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("empty prediction log (the header must be line 1)")
    header = parse_header(lines[0])
    records = [
        parse_record(line, header, lineno)
        for lineno, line in enumerate(lines[1:], start=2)
        if line.strip()
    ]
    return header, records


def validate_against_matrix(header: LogHeader, m: ConceptMatrix) -> tuple:
    """Check the header names against a matrix; returns the selected indices.

    Class names must match the matrix exactly (same names, same order) so
    integer class indices mean the same thing on both sides; selected
    concepts must each exist in the matrix. The returned tuple maps
    explanation bit positions to matrix concept indices.
    """
    if header.class_names != m.class_names:
        raise ValidationError(
            "log class names do not match the concept matrix "
            f"(log has {len(header.class_names)}, matrix has {m.n_classes}; "
            "names and order must be identical)"
        )
    return m.concept_indices(header.selected_concepts)


def project_records(
    records: Iterable[PredictionRecord],
    header_concepts: Iterable[str],
    wanted_concepts: Iterable[str],
) -> List[PredictionRecord]:
    """Restrict explanation bits to a subset of the log's concepts.

    ``wanted_concepts`` must all appear in ``header_concepts``; bits are
    re-ordered to the wanted order. Records without explanations pass
    through unchanged.
    """
    header_concepts = list(header_concepts)
    positions = []
    for name in wanted_concepts:
        try:
            positions.append(header_concepts.index(name))
        except ValueError:
            raise ValidationError(
                f"log does not carry explanation bits for concept {name!r}"
            ) from None
    out = []
    for rec in records:
        if rec.predicted_explanation is None:
            out.append(rec)
            continue
        bits = tuple(rec.predicted_explanation[p] for p in positions)
        out.append(
            PredictionRecord(
                sample_id=rec.sample_id,
                true_class=rec.true_class,
                predicted_class_a=rec.predicted_class_a,
                predicted_explanation=bits,
                predicted_class_b=rec.predicted_class_b,
            )
        )
    return out
