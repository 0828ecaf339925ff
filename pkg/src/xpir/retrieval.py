"""Query vectors, similarity scoring, and ranked search over an index.

Text nodes are scored by cosine similarity against the query vector.
Element nodes are scored by pertinence: the cosine of their personalized
vector times a support factor that rewards elements whose descendant
text nodes answer the query and penalizes those whose descendants do
not.  Results merge both node kinds into one deterministic ranking.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Mapping

from .conceptindex import ConceptVector, NodeIndexEntry, extract_concepts
from .errors import EmptyQueryError, StaleIndexError, StaleProfileError
from .ontology import Ontology, most_specific, related_concepts
from .profile import UserProfile, interest_weight
from .storage import IndexStore

# Scores below this floor count as zero when partitioning descendant
# text nodes into supporting and non-supporting sets.
SCORE_FLOOR = 1e-12


@dataclass(frozen=True)
class Query:
    """Free-text or concept-seeded query with expansion settings."""

    text: str | None = None
    concept: str | None = None
    relation_names: tuple[str, ...] = ()
    max_hops: int = 1


@dataclass(frozen=True)
class RankedResult:
    doc_id: str
    start: int
    end: int
    node_type: str
    score: float
    matched_concepts: tuple[str, ...]


def build_query_vector(query: Query, ontology: Ontology) -> ConceptVector:
    """Concept vector for a query.

    Free text is matched against concept keywords and reduced to the most
    specific concepts, each at weight 1.  A concept seed is expanded over
    is-a-child edges plus the named relations; expanded concepts decay
    with hop distance as 1/(1+hops).
    """
    if query.text:
        counts = extract_concepts(query.text, ontology)
        ids = most_specific(ontology, counts)
        if not ids:
            raise EmptyQueryError(f"no ontology concept recognized in {query.text!r}")
        return {cid: 1.0 for cid in sorted(ids)}
    if query.concept:
        pairs = related_concepts(
            ontology, query.concept, query.relation_names, query.max_hops
        )
        return {cid: 1.0 if hop == 0 else 1.0 / (1 + hop) for cid, hop in pairs}
    raise EmptyQueryError("query carries neither text nor a concept seed")


def cosine_score(q: Mapping[str, float], v: Mapping[str, float]) -> float:
    """Cosine similarity of two sparse vectors; 0 when either is empty."""
    if not q or not v:
        return 0.0
    shorter, longer = (q, v) if len(q) <= len(v) else (v, q)
    dot = sum(w * longer[cid] for cid, w in shorter.items() if cid in longer)
    if dot == 0.0:
        return 0.0
    norm_q = math.sqrt(sum(w * w for w in q.values()))
    norm_v = math.sqrt(sum(w * w for w in v.values()))
    return dot / (norm_q * norm_v)


def personalize_element_vector(
    base: ConceptVector,
    profile: UserProfile,
    *,
    normalize: bool = False,
) -> ConceptVector:
    """Multiply each entry by the user's interest weight for its concept.

    With ``normalize`` the interest factors are rescaled to mean 1 over
    all concepts, so personalization shifts ranking without inflating
    score magnitudes.
    """
    scale = 1.0
    if normalize:
        scale = len(profile.interests) / sum(profile.interests.values())
    return {
        cid: w * interest_weight(profile, cid) * scale for cid, w in base.items()
    }


def support_factor(n_supporting: int, n_non_supporting: int) -> float:
    """Descendant-support factor for element pertinence.

    Zero without any supporting descendant; the exponent is pinned to 2
    at a single supporting descendant (the continuation of n/(n-1) from
    n=2) and decays exponentially with each non-supporting descendant.
    """
    if n_supporting < 0 or n_non_supporting < 0:
        raise ValueError("descendant counts cannot be negative")
    if n_supporting == 0:
        return 0.0
    exponent = 2.0 if n_supporting == 1 else n_supporting / (n_supporting - 1)
    return math.exp(exponent - n_non_supporting)


def element_pertinence(
    query_vector: ConceptVector,
    entry: NodeIndexEntry,
    profile: UserProfile | None,
    n_supporting: int,
    n_non_supporting: int,
    *,
    normalize_profile: bool = False,
) -> float:
    """Pertinence of one element node given its descendant score partition."""
    factor = support_factor(n_supporting, n_non_supporting)
    if factor == 0.0:
        return 0.0
    vector = entry.base_vector
    if profile is not None:
        vector = personalize_element_vector(vector, profile, normalize=normalize_profile)
    return factor * cosine_score(query_vector, vector)


def rank(
    index: IndexStore,
    ontology: Ontology,
    query_vector: ConceptVector,
    profile: UserProfile | None = None,
    *,
    k: int = 10,
    overlap_filter: bool = False,
    personalize: bool = True,
    normalize_profile: bool = False,
) -> list[RankedResult]:
    """Score every indexed node against a prebuilt query vector.

    Returns at most ``k`` results with positive scores, sorted by score
    descending with (doc_id, start) breaking ties.  With
    ``overlap_filter`` the lower-scored node of every ancestor-descendant
    pair is dropped before truncation.
    """
    if index.header.ontology_fingerprint != ontology.fingerprint:
        raise StaleIndexError("index and ontology fingerprints disagree")
    if profile is not None and profile.ontology_fingerprint != ontology.fingerprint:
        raise StaleProfileError(
            f"profile {profile.user_id!r} belongs to a different ontology version"
        )
    if not personalize:
        profile = None

    text_scores: dict[tuple[str, int], float] = {}
    leaf_starts: dict[str, list[int]] = {}
    results: list[RankedResult] = []

    for entry in index.text_entries:
        score = cosine_score(query_vector, entry.base_vector)
        text_scores[(entry.doc_id, entry.start)] = score
        leaf_starts.setdefault(entry.doc_id, []).append(entry.start)
        if score > SCORE_FLOOR:
            node = index.descriptor(entry.doc_id, entry.start)
            results.append(
                RankedResult(
                    entry.doc_id, entry.start, node.end, entry.node_type, score,
                    _matched(query_vector, entry.base_vector),
                )
            )
    for starts in leaf_starts.values():
        starts.sort()

    for entry in index.element_entries:
        total = entry.text_count or 0
        if total == 0 or not entry.base_vector:
            continue
        node = index.descriptor(entry.doc_id, entry.start)
        starts = leaf_starts.get(entry.doc_id, [])
        inside = starts[bisect_right(starts, node.start) : bisect_left(starts, node.end)]
        supporting = sum(
            1 for s in inside if text_scores[(entry.doc_id, s)] > SCORE_FLOOR
        )
        score = element_pertinence(
            query_vector, entry, profile, supporting, total - supporting,
            normalize_profile=normalize_profile,
        )
        if score > SCORE_FLOOR:
            results.append(
                RankedResult(
                    entry.doc_id, entry.start, node.end, entry.node_type, score,
                    _matched(query_vector, entry.base_vector),
                )
            )

    results.sort(key=lambda r: (-r.score, r.doc_id, r.start))
    if overlap_filter:
        results = _drop_overlaps(results)
    return results[:k]


def search(
    index: IndexStore,
    ontology: Ontology,
    query: Query,
    profile: UserProfile | None = None,
    *,
    k: int = 10,
    overlap_filter: bool = False,
    personalize: bool = True,
    normalize_profile: bool = False,
) -> list[RankedResult]:
    """Build the query vector and rank all indexed nodes against it."""
    vector = build_query_vector(query, ontology)
    return rank(
        index, ontology, vector, profile,
        k=k, overlap_filter=overlap_filter, personalize=personalize,
        normalize_profile=normalize_profile,
    )


def _matched(query_vector: ConceptVector, node_vector: ConceptVector) -> tuple[str, ...]:
    return tuple(sorted(set(query_vector) & set(node_vector)))


def _drop_overlaps(results: list[RankedResult]) -> list[RankedResult]:
    kept: list[RankedResult] = []
    intervals: dict[str, list[tuple[int, int]]] = {}
    for result in results:
        nested = any(
            (a < result.start and result.end < b) or (result.start < a and b < result.end)
            for a, b in intervals.get(result.doc_id, ())
        )
        if nested:
            continue
        kept.append(result)
        intervals.setdefault(result.doc_id, []).append((result.start, result.end))
    return kept
