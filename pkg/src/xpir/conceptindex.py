"""Concept extraction, text-node weighting, and upward propagation.

Text nodes get sparse concept vectors weighted by occurrence count,
inverse text-node frequency (natural log), and the ontology concept
weight.  Element nodes aggregate their descendant text-node vectors with
distance damping and a per-concept coverage ratio.  The stored element
vectors are profile independent: the user interest factor is multiplied
in at query time, so one index serves every user.
"""

from __future__ import annotations

import logging
import math
import re
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from .errors import (
    EmptyCollectionError,
    InternalConsistencyError,
    XmlParseError,
)
from .ontology import Ontology, most_specific
from .xmldoc import (
    ATTRIBUTE,
    ELEMENT,
    TEXT,
    DocumentTree,
    NodeDescriptor,
    arc_distance,
    descendant_text_nodes,
    parse_document,
)

log = logging.getLogger("xpir.index")

# Sparse concept id -> weight map shared by text nodes, element nodes,
# queries, and profiles.  Zero weights are never stored.
ConceptVector = dict[str, float]

_TOKEN = re.compile(r"\w+")


@dataclass
class CollectionStats:
    """Corpus-wide counts feeding the inverse text-node frequency."""

    total_text_nodes: int
    text_nodes_containing: dict[str, int]


@dataclass
class NodeIndexEntry:
    """Profile-independent index row for one text or element node.

    Element entries carry the per-concept descendant coverage counts and
    the total number of descendant text nodes; text entries do not.
    """

    doc_id: str
    start: int
    node_type: str
    base_vector: ConceptVector
    coverage: dict[str, int] | None = None
    text_count: int | None = None


def _tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class ConceptMatcher:
    """Greedy longest-match keyword scanner for one ontology."""

    _cache: "weakref.WeakKeyDictionary[Ontology, ConceptMatcher]" = weakref.WeakKeyDictionary()

    def __init__(self, ontology: Ontology):
        self.ontology = ontology
        index: dict[tuple[str, ...], set[str]] = {}
        for cid in sorted(ontology.concepts):
            for kw in ontology.concepts[cid].keywords:
                tokens = tuple(_tokenize(kw))
                if tokens:
                    index.setdefault(tokens, set()).add(cid)
        self._index = index
        self._by_first: dict[str, list[tuple[str, ...]]] = {}
        for tokens in index:
            self._by_first.setdefault(tokens[0], []).append(tokens)
        for sequences in self._by_first.values():
            sequences.sort(key=len, reverse=True)

    @classmethod
    def for_ontology(cls, ontology: Ontology) -> "ConceptMatcher":
        matcher = cls._cache.get(ontology)
        if matcher is None:
            matcher = cls(ontology)
            cls._cache[ontology] = matcher
        return matcher

    def count(self, text: str) -> dict[str, int]:
        tokens = _tokenize(text)
        counts: Counter[str] = Counter()
        i = 0
        n = len(tokens)
        while i < n:
            consumed = 0
            for seq in self._by_first.get(tokens[i], ()):  # longest first
                width = len(seq)
                if i + width <= n and tuple(tokens[i : i + width]) == seq:
                    for cid in most_specific(self.ontology, self._index[seq]):
                        counts[cid] += 1
                    consumed = width
                    break
            i += consumed or 1
        return dict(counts)


def extract_concepts(text: str, ontology: Ontology) -> dict[str, int]:
    """Occurrence counts of ontology concepts in ``text``.

    Matching is case-insensitive on word boundaries; multi-word keywords
    win over shorter ones at the same position and consume their words.
    When one span carries both a concept and its is-a ancestor, only the
    more specific concept is counted.
    """
    if not text:
        return {}
    return ConceptMatcher.for_ontology(ontology).count(text)


def compute_stats(cf_maps: Iterable[Mapping[str, int]]) -> CollectionStats:
    """Collection statistics over all extracted text-node occurrence maps."""
    total = 0
    containing: Counter[str] = Counter()
    for cf in cf_maps:
        total += 1
        for cid, count in cf.items():
            if count > 0:
                containing[cid] += 1
    if total == 0:
        raise EmptyCollectionError("cannot compute statistics for an empty collection")
    return CollectionStats(total, dict(containing))


def weight_text_node(
    cf: Mapping[str, int],
    stats: CollectionStats,
    ontology: Ontology,
    *,
    uniform_weights: bool = False,
) -> ConceptVector:
    """Weight one text node: count x ln(total/containing) x concept weight.

    A concept occurring in every text node gets weight 0 and is dropped.
    ``uniform_weights`` replaces the ontology weight by 1/|N| (the
    unweighted baseline configuration).
    """
    vector: ConceptVector = {}
    uniform = 1.0 / len(ontology)
    for cid in sorted(cf):
        count = cf[cid]
        if count <= 0:
            continue
        containing = stats.text_nodes_containing.get(cid, 0)
        if containing == 0:
            raise InternalConsistencyError(
                f"concept {cid!r} occurs in a node but stats say it occurs nowhere"
            )
        iecf = math.log(stats.total_text_nodes / containing)
        weight = count * iecf * (uniform if uniform_weights else ontology.weight(cid))
        if weight > 0.0:
            vector[cid] = weight
    return vector


def _propagate(
    element: NodeDescriptor,
    leaves: Sequence[NodeDescriptor],
    tree: DocumentTree,
    vectors: Mapping[int, ConceptVector],
    coverage: Mapping[str, int],
) -> ConceptVector:
    total = len(leaves)
    if total == 0:
        return {}
    acc: ConceptVector = {}
    for leaf in leaves:
        vector = vectors.get(leaf.start)
        if not vector:
            continue
        damping = 1.0 / arc_distance(element, leaf, tree)
        for cid, weight in vector.items():
            share = coverage.get(cid, 0) / total
            acc[cid] = acc.get(cid, 0.0) + share * damping * weight
    return {cid: w for cid, w in acc.items() if w != 0.0}


def propagate_to_element(
    element: NodeDescriptor,
    tree: DocumentTree,
    text_vectors: Mapping[int, ConceptVector],
    coverage: Mapping[str, int],
) -> ConceptVector:
    """Profile-independent element vector from its descendant text nodes.

    Each descendant contribution is damped by 1/arc-distance and scaled
    by the fraction of descendant text nodes containing the concept.
    An element without text descendants yields an empty vector.
    """
    return _propagate(
        element, descendant_text_nodes(element, tree), tree, text_vectors, coverage
    )


def build_index(
    documents: Iterable[tuple[str, bytes | IO[bytes]]],
    ontology: Ontology,
    *,
    on_error: str = "abort",
    timestamp: int = 0,
    uniform_weights: bool = False,
    include_attribute_text: bool = False,
):
    """Parse, extract, weight, and propagate a whole document collection.

    Returns a storage.IndexStore.  Deterministic given input order; the
    build timestamp defaults to 0 so that identical input yields
    byte-identical serialized indexes.  ``on_error`` is "abort" (default)
    or "skip" for per-document parse failures.
    """
    from .storage import DescriptorTables, IndexHeader, IndexStore

    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")

    trees: list[DocumentTree] = []
    seen: set[str] = set()
    for doc_id, source in documents:
        if doc_id in seen:
            raise ValueError(f"duplicate document id {doc_id!r}")
        seen.add(doc_id)
        try:
            trees.append(parse_document(doc_id, source))
        except XmlParseError as exc:
            if on_error == "abort":
                raise
            log.warning("skipping unparseable document: %s", exc)
    if not trees:
        raise EmptyCollectionError("no documents could be indexed")

    # Phase 1: extract occurrence maps for every indexed leaf node.
    leaf_types = (TEXT, ATTRIBUTE) if include_attribute_text else (TEXT,)
    leaves_by_doc: dict[str, list[NodeDescriptor]] = {}
    cf_by_doc: dict[str, dict[int, dict[str, int]]] = {}
    for tree in trees:
        leaves = [d for d in tree.descriptors if d.node_type in leaf_types]
        leaves_by_doc[tree.doc_id] = leaves
        cf_by_doc[tree.doc_id] = {
            leaf.start: extract_concepts(leaf.value or "", ontology) for leaf in leaves
        }
        log.debug("extracted %d leaves from %s", len(leaves), tree.doc_id)

    # Phase 2: collection statistics, then per-leaf weighting.
    stats = compute_stats(
        cf_by_doc[tree.doc_id][leaf.start]
        for tree in trees
        for leaf in leaves_by_doc[tree.doc_id]
    )
    text_entries: list[NodeIndexEntry] = []
    vectors_by_doc: dict[str, dict[int, ConceptVector]] = {}
    for tree in trees:
        vectors: dict[int, ConceptVector] = {}
        for leaf in leaves_by_doc[tree.doc_id]:
            vector = weight_text_node(
                cf_by_doc[tree.doc_id][leaf.start], stats, ontology,
                uniform_weights=uniform_weights,
            )
            vectors[leaf.start] = vector
            text_entries.append(
                NodeIndexEntry(tree.doc_id, leaf.start, leaf.node_type, vector)
            )
        vectors_by_doc[tree.doc_id] = vectors

    # Phase 3: propagate to every element node.
    element_entries: list[NodeIndexEntry] = []
    for tree in trees:
        cf_map = cf_by_doc[tree.doc_id]
        leaves = leaves_by_doc[tree.doc_id]
        for element in tree.descriptors:
            if element.node_type != ELEMENT:
                continue
            inside = [
                leaf for leaf in leaves
                if element.start < leaf.start and leaf.end < element.end
            ]
            coverage: Counter[str] = Counter()
            for leaf in inside:
                for cid, count in cf_map[leaf.start].items():
                    if count > 0:
                        coverage[cid] += 1
            vector = _propagate(
                element, inside, tree, vectors_by_doc[tree.doc_id], coverage
            )
            element_entries.append(
                NodeIndexEntry(
                    tree.doc_id, element.start, ELEMENT, vector,
                    coverage=dict(coverage), text_count=len(inside),
                )
            )
        log.info("indexed %s", tree.doc_id)

    header = IndexHeader(
        ontology_fingerprint=ontology.fingerprint,
        log_base="e",
        weighting="uniform" if uniform_weights else "ontology",
        build_timestamp=timestamp,
    )
    return IndexStore(
        header=header,
        stats=stats,
        text_entries=text_entries,
        element_entries=element_entries,
        tables=DescriptorTables.from_trees(trees),
    )
