"""Concept scoring: importance, similarity, and the combined ranking.

A concept is worth selecting when it exposes many misclassification pairs
(importance) that other concepts do not already expose (low similarity).
The overall score is the normalized ratio of the two; ranking it descending
gives the selection order used by the design workflow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .concepts import ConceptId, ConceptMatrix, associated_classes, detectable_errors
from .errors import ValidationError


@dataclass(frozen=True)
class ScoreRow:
    concept: int
    name: str
    s_imp: float
    s_sim: float
    s_ov: float
    rank: int  # 1 = highest overall score


@dataclass(frozen=True)
class ScoreTable:
    """Per-concept scores in concept-index order plus the derived ranking."""

    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def ranking(self) -> tuple:
        """Concept indices ordered best-first (rank 1, 2, ...)."""
        return tuple(r.concept for r in sorted(self.rows, key=lambda r: r.rank))

    def top(self, k: int) -> tuple:
        return self.ranking()[:k]

    def to_text(self) -> str:
        lines = ["concept_name\ts_imp\ts_sim\ts_ov\trank"]
        for r in self.rows:
            lines.append(
                f"{r.name}\t{r.s_imp:.12g}\t{r.s_sim:.12g}\t{r.s_ov:.12g}\t{r.rank}"
            )
        return "\n".join(lines) + "\n"

    def to_json_obj(self) -> dict:
        return {
            "scores": [
                {
                    "concept_name": r.name,
                    "s_imp": float(f"{r.s_imp:.12g}"),
                    "s_sim": float(f"{r.s_sim:.12g}"),
                    "s_ov": float(f"{r.s_ov:.12g}"),
                    "rank": r.rank,
                }
                for r in self.rows
            ]
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2, sort_keys=True) + "\n"


def importance_score(m: ConceptMatrix, a: ConceptId) -> float:
    """Fraction of the N(N-1) ordered misclassification pairs concept ``a`` exposes.

    Closed form 2*g*(N-g) / (N*(N-1)) with g the number of classes the
    concept explains; equals |detectable_errors(m, a)| / (N*(N-1)).
    """
    n = m.n_classes
    g = len(associated_classes(m, a))
    return 2.0 * g * (n - g) / (n * (n - 1))


def jaccard(set_a: frozenset, set_b: frozenset) -> float:
    """Jaccard index |A∩B| / |A∪B| of two pair sets."""
    if not set_a and not set_b:
        raise ValidationError("Jaccard of two empty sets is undefined")
    return len(set_a & set_b) / len(set_a | set_b)


def similarity_score(m: ConceptMatrix, a: ConceptId) -> float:
    """Mean Jaccard overlap of ``a``'s detectable-error set with every other concept's.

    Strictly positive for any valid matrix: two non-constant columns always
    share at least one detectable pair.
    """
    if m.n_concepts < 2:
        raise ValidationError("similarity score needs at least 2 concepts")
    m.check_concept(a)
    dets = [detectable_errors(m, i) for i in range(m.n_concepts)]
    return _similarity_from_sets(dets, a)


def _similarity_from_sets(dets: list, a: int) -> float:
    total = 0.0
    for j, other in enumerate(dets):
        if j != a:
            total += jaccard(dets[a], other)
    return total / (len(dets) - 1)


def overall_scores(m: ConceptMatrix) -> ScoreTable:
    """Score every concept and rank them (rank 1 = best).

    Overall score is (alpha * s_imp) / (beta * s_sim) where alpha and beta
    normalize by the respective score sums over all M concepts, computed
    once up front. Ties rank by ascending concept index so identical
    matrices always produce identical tables.
    """
    if m.n_concepts < 2:
        raise ValidationError("overall scores need at least 2 concepts")
    n, mm = m.n_classes, m.n_concepts
    dets = [detectable_errors(m, i) for i in range(mm)]
    s_imp = [len(dets[i]) / (n * (n - 1)) for i in range(mm)]
    s_sim = [_similarity_from_sets(dets, i) for i in range(mm)]
    alpha = 1.0 / sum(s_imp)
    beta = 1.0 / sum(s_sim)
    s_ov = [(alpha * s_imp[i]) / (beta * s_sim[i]) for i in range(mm)]
    order = sorted(range(mm), key=lambda i: (-s_ov[i], i))
    rank_of = {concept: pos + 1 for pos, concept in enumerate(order)}
    rows = [
        ScoreRow(
            concept=i,
            name=m.concept_names[i],
            s_imp=s_imp[i],
            s_sim=s_sim[i],
            s_ov=s_ov[i],
            rank=rank_of[i],
        )
        for i in range(mm)
    ]
    return ScoreTable(tuple(rows))
