"""Class/concept algebra: the explanation mapping and detectable-error sets.

A :class:`ConceptMatrix` is the binary incidence structure between N classes
and M concepts: ``incidence[j, i] == 1`` iff concept ``i`` belongs to the
explanation of class ``j``. Classes and concepts are identified by integer
index everywhere; names are carried as metadata for files and reports.

Everything here is immutable and pure, so it is safe to share across
threads without locking.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, ValidationError

ClassId = int
ConceptId = int
ExplanationVector = tuple  # length-M* tuple of 0/1 ints
ErrorPair = tuple  # (truth ClassId, predicted ClassId), truth != predicted


@dataclass(frozen=True, eq=False)
class ConceptMatrix:
    """Validated class-by-concept incidence structure.

    Invariants enforced at construction: at least two classes, at least one
    concept, distinct non-empty names, binary cells, and no constant concept
    column (every concept explains at least one class and not all of them;
    the scoring math depends on this).
    """

    class_names: tuple
    concept_names: tuple
    incidence: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "class_names", tuple(self.class_names))
        object.__setattr__(self, "concept_names", tuple(self.concept_names))
        inc = np.asarray(self.incidence, dtype=np.int8)
        n, m = len(self.class_names), len(self.concept_names)
        if n < 2:
            raise ValidationError(f"need at least 2 classes, got {n}")
        if m < 1:
            raise ValidationError("need at least 1 concept")
        _check_names(self.class_names, "class")
        _check_names(self.concept_names, "concept")
        if inc.shape != (n, m):
            raise ValidationError(
                f"incidence shape {inc.shape} does not match "
                f"{n} classes x {m} concepts"
            )
        bad = (inc != 0) & (inc != 1)
        if bad.any():
            j, i = np.argwhere(bad)[0]
            raise ValidationError(
                f"incidence cell for class {self.class_names[j]!r} / "
                f"concept {self.concept_names[i]!r} is not 0 or 1"
            )
        col_sums = inc.sum(axis=0)
        for i in range(m):
            if col_sums[i] == 0 or col_sums[i] == n:
                which = "no class" if col_sums[i] == 0 else "every class"
                raise ValidationError(
                    f"concept column {self.concept_names[i]!r} explains "
                    f"{which}; constant columns carry no error-detection "
                    f"signal and are rejected"
                )
        inc = inc.copy()
        inc.flags.writeable = False
        object.__setattr__(self, "incidence", inc)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def n_concepts(self) -> int:
        return len(self.concept_names)

    def class_index(self, name: str) -> ClassId:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown class name {name!r}") from None

    def concept_index(self, name: str) -> ConceptId:
        try:
            return self.concept_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown concept name {name!r}") from None

    def concept_indices(self, names: Iterable[str]) -> tuple:
        return tuple(self.concept_index(n) for n in names)

    def check_class(self, c: ClassId) -> ClassId:
        if not 0 <= c < self.n_classes:
            raise ValidationError(
                f"class index {c} out of range [0, {self.n_classes})"
            )
        return c

    def check_concept(self, a: ConceptId) -> ConceptId:
        if not 0 <= a < self.n_concepts:
            raise ValidationError(
                f"concept index {a} out of range [0, {self.n_concepts})"
            )
        return a

    def __eq__(self, other):
        if not isinstance(other, ConceptMatrix):
            return NotImplemented
        return (
            self.class_names == other.class_names
            and self.concept_names == other.concept_names
            and np.array_equal(self.incidence, other.incidence)
        )

    def __hash__(self):
        return hash((self.class_names, self.concept_names, self.incidence.tobytes()))


def _check_names(names: Sequence[str], kind: str) -> None:
    seen = {}
    for pos, name in enumerate(names):
        if not isinstance(name, str) or not name.strip():
            raise ValidationError(f"{kind} name at position {pos} is empty")
        if name in seen:
            raise ValidationError(
                f"duplicate {kind} name {name!r} (positions {seen[name]} and {pos})"
            )
        seen[name] = pos


def explanation_of(
    m: ConceptMatrix, c: ClassId, selected: Sequence[ConceptId]
) -> ExplanationVector:
    """Ground-truth explanation of class ``c`` restricted to ``selected``.

    ``selected`` is an *ordered* sequence of concept indices; bit ``i`` of
    the result is ``incidence[c, selected[i]]``. An empty selection gives
    the empty vector.
    """
    m.check_class(c)
    for a in selected:
        m.check_concept(a)
    if not selected:
        return ()
    return tuple(int(b) for b in m.incidence[c, list(selected)])


def associated_classes(m: ConceptMatrix, a: ConceptId) -> frozenset:
    """Set of classes whose explanation contains concept ``a``.

    Non-empty and a proper subset of the classes, by the no-constant-column
    invariant.
    """
    m.check_concept(a)
    return frozenset(int(j) for j in np.flatnonzero(m.incidence[:, a]))


def detectable_errors(m: ConceptMatrix, a: ConceptId) -> frozenset:
    """Ordered misclassification pairs that concept ``a`` can expose.

    A pair ``(truth, predicted)`` is detectable by ``a`` exactly when the
    concept belongs to one class's explanation and not the other's, so the
    bit flips between the two explanations. The set is symmetric under
    swapping the pair and has cardinality ``2*g*(N-g)`` with ``g`` the
    number of classes the concept explains.
    """
    inside = associated_classes(m, a)
    outside = frozenset(range(m.n_classes)) - inside
    return frozenset(
        [(j, k) for j in inside for k in outside]
        + [(j, k) for j in outside for k in inside]
    )


def parse_concept_matrix(text: str) -> ConceptMatrix:
    """Parse a concept-matrix document (tabular or JSON object form)."""
    stripped = text.lstrip()
    if not stripped:
        raise ParseError("empty concept-matrix document")
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON concept matrix: {exc}") from None
        return concept_matrix_from_object(obj)
    return _parse_tabular(text)


def concept_matrix_from_object(obj) -> ConceptMatrix:
    """Build a matrix from ``{"classes": [...], "concepts": [...], "incidence": [[...]]}``."""
    if not isinstance(obj, dict):
        raise ParseError("concept-matrix object must be a JSON object")
    missing = [k for k in ("classes", "concepts", "incidence") if k not in obj]
    if missing:
        raise ParseError(f"concept-matrix object missing fields: {', '.join(missing)}")
    classes, concepts, incidence = obj["classes"], obj["concepts"], obj["incidence"]
    if not isinstance(classes, list) or not isinstance(concepts, list):
        raise ParseError("'classes' and 'concepts' must be lists of names")
    if not isinstance(incidence, list) or not all(
        isinstance(row, list) for row in incidence
    ):
        raise ParseError("'incidence' must be a list of rows")
    if len(incidence) != len(classes):
        raise ParseError(
            f"incidence has {len(incidence)} rows for {len(classes)} classes"
        )
    for j, row in enumerate(incidence):
        if len(row) != len(concepts):
            raise ParseError(
                f"incidence row {j} has {len(row)} cells for "
                f"{len(concepts)} concepts"
            )
        for i, cell in enumerate(row):
            if cell not in (0, 1):
                raise ParseError(f"incidence cell [{j}][{i}] is {cell!r}, not 0/1")
    return ConceptMatrix(tuple(classes), tuple(concepts), np.array(incidence))


def _split_line(line: str, delim) -> list:
    cells = line.split(delim) if delim else line.split()
    return [c.strip() for c in cells]


def _parse_tabular(text: str) -> ConceptMatrix:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        # keep the raw line: a leading delimiter marks the empty corner cell
        rows.append((lineno, raw))
    if len(rows) < 2:
        raise ParseError("tabular concept matrix needs a header row and class rows")
    header_line = rows[0][1]
    delim = "\t" if "\t" in header_line else "," if "," in header_line else None
    header = _split_line(header_line, delim)
    if len(header) < 2:
        raise ParseError(f"line {rows[0][0]}: header row has no concept columns")
    concept_names = header[1:]  # first header cell labels the class column
    class_names, matrix_rows = [], []
    for lineno, line in rows[1:]:
        cells = _split_line(line, delim)
        if len(cells) != len(header):
            raise ParseError(
                f"line {lineno}: expected {len(header)} cells, got {len(cells)}"
            )
        class_names.append(cells[0])
        bits = []
        for i, cell in enumerate(cells[1:]):
            if cell not in ("0", "1"):
                raise ParseError(
                    f"line {lineno}: cell for concept "
                    f"{concept_names[i]!r} is {cell!r}, not 0/1"
                )
            bits.append(int(cell))
        matrix_rows.append(bits)
    return ConceptMatrix(tuple(class_names), tuple(concept_names), np.array(matrix_rows))


def load_concept_matrix(source) -> ConceptMatrix:
    """Load a concept matrix from a path, open file, or document text.

    A ``str`` is treated as document *content* when it contains a newline or
    starts with ``{`` or ``#``, otherwise as a filesystem path (a one-line
    tabular document can never be a valid matrix, so this is unambiguous).
    """
    if hasattr(source, "read"):
        return parse_concept_matrix(source.read())
    if isinstance(source, (Path, os.PathLike)):
        return parse_concept_matrix(_read_file(source))
    if isinstance(source, str):
        if "\n" in source or source.lstrip().startswith(("{", "#")):
            return parse_concept_matrix(source)
        return parse_concept_matrix(_read_file(source))
    raise TypeError(f"cannot load concept matrix from {type(source).__name__}")


def _read_file(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read concept matrix {path!r}: {exc}") from None
