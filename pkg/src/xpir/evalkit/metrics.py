"""Precision, recall, and F1 over ranked results and qrels entries."""

from __future__ import annotations

from typing import Iterable, Sequence

from ..retrieval import RankedResult


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both inputs vanish."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def precision_recall_f1(
    results: Sequence[RankedResult],
    relevant: Iterable[tuple[str, int]],
    *,
    cutoff: int | None = None,
    granularity: str = "document",
) -> tuple[float, float, float]:
    """Metrics for one query.

    ``relevant`` holds (doc_id, node_start) pairs; document granularity
    matches on doc_id with node results collapsed to their documents
    (best rank first), node granularity matches on the exact pair.
    ``cutoff`` limits the retrieved list after collapsing; None keeps
    every returned result.
    """
    relevant = set(relevant)
    if not relevant:
        raise ValueError("qrels entry is empty; metrics are undefined")
    if cutoff is not None and cutoff < 1:
        raise ValueError("cutoff must be at least 1")

    retrieved: list
    if granularity == "document":
        seen: dict[str, None] = {}
        for result in results:
            seen.setdefault(result.doc_id, None)
        retrieved = list(seen)
        relevant_keys = {doc for doc, _ in relevant}
    elif granularity == "node":
        retrieved = [(r.doc_id, r.start) for r in results]
        relevant_keys = relevant
    else:
        raise ValueError(f"unknown granularity {granularity!r}")

    if cutoff is not None:
        retrieved = retrieved[:cutoff]
    hits = len(set(retrieved) & relevant_keys)
    precision = hits / len(retrieved) if retrieved else 0.0
    recall = hits / len(relevant_keys)
    return precision, recall, f1_score(precision, recall)
